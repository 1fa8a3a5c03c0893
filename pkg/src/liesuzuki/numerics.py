"""Dense truncated representations and exact/product-formula evolutions.

Oscillator operators are built on the lowest ``D`` Fock states from the
ladder action of x and p; powers are products of the truncated matrices, so
identities hold exactly away from the top ``boundary_band`` levels.
"""

from __future__ import annotations

import csv
import io
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .algebra.structure import StructureConstants, sp2m_forms
from .algebra.weyl import WeylPolynomial
from .suzuki import Schedule

D_MAX = 1024
SKEW_TOL = 1e-12


class MissingGeneratorError(KeyError):
    pass


class _ExpCache:
    """Insert-or-get cache bounded in bytes; identical keys give identical values."""

    def __init__(self, max_bytes: int = 512 * 2**20):
        self.max_bytes = max_bytes
        self._data: OrderedDict = OrderedDict()
        self._bytes = 0
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            val = self._data.get(key)
            if val is not None:
                self._data.move_to_end(key)
            return val

    def put(self, key, val):
        with self._lock:
            if key in self._data:
                return
            self._data[key] = val
            self._bytes += val.nbytes
            while self._bytes > self.max_bytes and len(self._data) > 1:
                _, old = self._data.popitem(last=False)
                self._bytes -= old.nbytes


@dataclass(frozen=True)
class TruncatedRep:
    """Matrices for named operators on a ``D``-dimensional truncation.

    Labels in ``hermitian`` are auxiliary Hermitian building blocks (x, p,
    J_alpha); every other matrix is a skew-Hermitian generator.
    """

    D: int
    matrices: Mapping[str, np.ndarray]
    boundary_band: int = 0
    hermitian: frozenset = frozenset()
    _eig: dict = field(default_factory=dict, repr=False, compare=False)
    _exp: _ExpCache = field(default_factory=_ExpCache, repr=False, compare=False)

    def __post_init__(self):
        if self.D > D_MAX:
            raise ValueError(f"D={self.D} exceeds the dense cap {D_MAX}")
        for label, A in self.matrices.items():
            if A.shape != (self.D, self.D):
                raise ValueError(f"{label}: shape {A.shape} != ({self.D}, {self.D})")
            sign = 1 if label in self.hermitian else -1
            resid = np.abs(A.conj().T - sign * A).max(initial=0.0)
            if resid > SKEW_TOL * max(1.0, np.abs(A).max(initial=0.0)):
                kind = "Hermitian" if sign == 1 else "skew-Hermitian"
                raise ValueError(f"{label} is not {kind} (residual {resid:.3g})")

    def __getitem__(self, label: str) -> np.ndarray:
        try:
            return self.matrices[label]
        except KeyError:
            raise MissingGeneratorError(label) from None

    def __contains__(self, label) -> bool:
        return label in self.matrices

    def with_matrices(self, extra: Mapping[str, np.ndarray], hermitian: Sequence[str] = (),
                      boundary_band: int | None = None) -> "TruncatedRep":
        mats = dict(self.matrices)
        mats.update(extra)
        band = self.boundary_band if boundary_band is None else boundary_band
        return TruncatedRep(self.D, mats, band, self.hermitian | frozenset(hermitian))

    def scaled(self, terms: Mapping[str, tuple[str, float]]) -> "TruncatedRep":
        """Add ``new_label -> c * matrix[old_label]`` for each ``new_label: (old_label, c)``."""
        return self.with_matrices({new: c * self[old] for new, (old, c) in terms.items()})

    def spectral(self, label: str) -> tuple[np.ndarray, np.ndarray]:
        """``(E, V)`` with ``i A = V diag(E) V^dagger`` for skew-Hermitian ``A``."""
        hit = self._eig.get(label)
        if hit is None:
            A = self[label]
            if label in self.hermitian:
                raise ValueError(f"{label} is an auxiliary Hermitian operator, not a generator")
            hit = np.linalg.eigh(1j * A)
            self._eig[label] = hit
        return hit

    def interior_projector_size(self, band: int | None = None) -> int:
        return self.D - (self.boundary_band if band is None else band)


# ---------------------------------------------------------------------------
# representations

def ladder(D: int) -> np.ndarray:
    """Truncated annihilation operator ``a|m> = sqrt(m)|m-1>``."""
    return np.diag(np.sqrt(np.arange(1, D, dtype=float)), 1).astype(complex)


def position_momentum(D: int) -> tuple[np.ndarray, np.ndarray]:
    a = ladder(D)
    ad = a.conj().T
    return (a + ad) / np.sqrt(2), -1j * (a - ad) / np.sqrt(2)


def fock_rep(D: int, q: int | None = None) -> TruncatedRep:
    """Oscillator operators on ``|phi_0> .. |phi_{D-1}>``.

    Contains Hermitian ``x``, ``p`` and the generators ``ix2``, ``ip2``,
    ``ixp`` (``= i(xp + px)``) and, if ``q`` is given, ``ix{q}``.
    """
    if D < 2:
        raise ValueError("D must be >= 2")
    if D > D_MAX:
        raise ValueError(f"D={D} exceeds the dense cap {D_MAX}")
    x, p = position_momentum(D)
    mats = {
        "x": x,
        "p": p,
        "ix2": 1j * (x @ x),
        "ip2": 1j * (p @ p),
        "ixp": 1j * (x @ p + p @ x),
    }
    band = 2
    if q is not None:
        if q < 1:
            raise ValueError("q must be positive")
        mats[f"ix{q}"] = 1j * np.linalg.matrix_power(x, q)
        band = max(band, q)
    return TruncatedRep(D, mats, band, frozenset({"x", "p"}))


def multimode_fock_rep(M: int, D: int) -> TruncatedRep:
    """``M`` oscillators, ``D`` levels each, with the sp(2M) basis generators.

    Generator labels follow :func:`liesuzuki.algebra.sp2m_forms`; mode
    operators are stored as Hermitian ``x1, p1, x2, ...``.  ``boundary_band``
    is per mode.
    """
    if D**M > D_MAX:
        raise ValueError(f"total dimension {D**M} exceeds {D_MAX}")
    x, p = position_momentum(D)
    eye = np.eye(D)

    def embed(op, mode):
        out = np.array([[1.0]])
        for m in range(M):
            out = np.kron(out, op if m == mode else eye)
        return out

    xi = [embed(x, l) for l in range(M)] + [embed(p, l) for l in range(M)]
    labels, forms = sp2m_forms(M)
    mats = {}
    for l in range(M):
        mats[f"x{l + 1}"] = xi[l]
        mats[f"p{l + 1}"] = xi[M + l]
    for label, S in zip(labels, forms):
        Q = sum(S[a, b] * (xi[a] @ xi[b]) for a, b in zip(*np.nonzero(S)))
        mats[label] = 1j * Q
    aux = frozenset(f"{c}{l + 1}" for c in "xp" for l in range(M))
    return TruncatedRep(D**M, mats, 2, aux)


def spin_rep(J: float) -> TruncatedRep:
    """Spin-``J`` angular momentum: Hermitian ``Jx, Jy, Jz`` and generators ``iJ*``."""
    twoJ = round(2 * J)
    if twoJ < 0 or abs(twoJ - 2 * J) > 1e-12:
        raise ValueError(f"2J must be a nonnegative integer, got J={J}")
    J = twoJ / 2
    m = J - np.arange(twoJ + 1)  # J, J-1, ..., -J
    # J+ |m> = sqrt(J(J+1) - m(m+1)) |m+1>; |m+1> sits one row above |m>
    jp = np.diag(np.sqrt(J * (J + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    jm = jp.conj().T
    Jx = (jp + jm) / 2
    Jy = (jp - jm) / 2j
    Jz = np.diag(m).astype(complex)
    mats = {"Jx": Jx, "Jy": Jy, "Jz": Jz, "iJx": 1j * Jx, "iJy": 1j * Jy, "iJz": 1j * Jz}
    return TruncatedRep(twoJ + 1, mats, 0, frozenset({"Jx", "Jy", "Jz"}))


def weyl_matrix(poly: WeylPolynomial, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Matrix of a normal-ordered polynomial from (truncated) ``x`` and ``p``."""
    D = x.shape[0]
    out = np.zeros((D, D), dtype=complex)
    for (a, b), c in poly.terms.items():
        out += c * np.linalg.matrix_power(x, a) @ np.linalg.matrix_power(p, b)
    return out


def interior_residual(rep: TruncatedRep, sc: StructureConstants, labels: Sequence[str] | None = None,
                      band: int | None = None) -> float:
    """Largest ``|P([A, B] - sum gamma C)P|`` entry over all generator pairs."""
    labels = list(sc.labels if labels is None else labels)
    n = rep.interior_projector_size(band)
    mats = [rep[l] for l in labels]
    worst = 0.0
    for a in range(sc.K):
        for b in range(a + 1, sc.K):
            lhs = mats[a] @ mats[b] - mats[b] @ mats[a]
            rhs = sum((g * mats[c] for c, g in sc.bracket(a, b).items()), np.zeros_like(lhs))
            worst = max(worst, float(np.abs((lhs - rhs)[:n, :n]).max(initial=0.0)))
    return worst


# ---------------------------------------------------------------------------
# exponentials and evolutions

def expm_skew(A: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(t A)`` for skew-Hermitian ``A`` through the eigendecomposition of ``iA``."""
    H = 1j * np.asarray(A)
    resid = np.abs(H - H.conj().T).max(initial=0.0)
    if resid > 1e-10 * max(1.0, np.abs(H).max(initial=0.0)):
        raise np.linalg.LinAlgError(f"generator is not skew-Hermitian (residual {resid:.3g})")
    E, V = np.linalg.eigh(H)
    return (V * np.exp(-1j * t * E)) @ V.conj().T


def per_generator_exponential(rep: TruncatedRep, label: str, duration: float) -> np.ndarray:
    """``exp(duration * rep[label])``, memoised on ``(label, duration)``."""
    key = (label, float(duration))
    hit = rep._exp.get(key)
    if hit is not None:
        return hit
    if duration == 0.0:
        U = np.eye(rep.D, dtype=complex)
    else:
        E, V = rep.spectral(label)
        U = (V * np.exp(-1j * duration * E)) @ V.conj().T
    rep._exp.put(key, U)
    return U


def _assemble(rep: TruncatedRep, X) -> np.ndarray:
    if isinstance(X, np.ndarray):
        return X
    if isinstance(X, Mapping):
        items = X.items()
    else:
        items = ((label, 1.0) for label in X)
    out = np.zeros((rep.D, rep.D), dtype=complex)
    for label, c in items:
        out += c * rep[label]
    return out


def exact_evolution(rep: TruncatedRep, X, t: float, psi: np.ndarray) -> np.ndarray:
    """``exp(t X) psi``; ``X`` is a matrix, a ``label -> coeff`` map or a list of labels."""
    psi = np.asarray(psi, dtype=complex)
    if t == 0:
        return psi.copy()
    Xm = _assemble(rep, X)
    H = 1j * Xm
    if np.abs(H - H.conj().T).max(initial=0.0) > 1e-10 * max(1.0, np.abs(H).max(initial=0.0)):
        raise np.linalg.LinAlgError("X is not skew-Hermitian; spectral evolution undefined")
    E, V = np.linalg.eigh(H)
    return V @ (np.exp(-1j * t * E) * (V.conj().T @ psi))


def leakage(psi: np.ndarray, band: int) -> float:
    """Norm of the component of ``psi`` on the top ``band`` levels."""
    if band <= 0:
        return 0.0
    return float(np.linalg.norm(psi[-band:]))


def multimode_leakage(psi: np.ndarray, M: int, D: int, band: int) -> float:
    """Norm on states where any mode sits in its top ``band`` levels."""
    if band <= 0:
        return 0.0
    amp = np.abs(psi.reshape((D,) * M)) ** 2
    mask = np.zeros(amp.shape, dtype=bool)
    for mode in range(M):
        idx = [slice(None)] * M
        idx[mode] = slice(D - band, D)
        mask[tuple(idx)] = True
    return float(np.sqrt(amp[mask].sum()))


@dataclass(frozen=True)
class EvolutionResult:
    final_state: np.ndarray
    exact_state: np.ndarray
    observed_error: float
    leakage: float

    def adjusted_error(self) -> float:
        """Observed error plus twice the leakage, for comparison with untruncated bounds."""
        return self.observed_error + 2.0 * self.leakage


def schedule_unitary(rep: TruncatedRep, schedule: Schedule, whole: bool = False) -> np.ndarray:
    """Product matrix of one segment (or of the whole schedule), step 1 rightmost."""
    labels = _labels(rep, schedule)
    W = np.eye(rep.D, dtype=complex)
    for k, d in schedule.segment:
        W = per_generator_exponential(rep, labels[k - 1], d) @ W
    if whole:
        W = np.linalg.matrix_power(W, schedule.segments)
    return W


def _labels(rep: TruncatedRep, schedule: Schedule) -> tuple[str, ...]:
    if schedule.labels is None:
        raise ValueError("schedule has no generator labels to look up in the representation")
    for label in schedule.labels:
        if label not in rep:
            raise MissingGeneratorError(label)
    return schedule.labels


def evaluate_schedule(rep: TruncatedRep, schedule: Schedule, psi: np.ndarray,
                      leak=None) -> EvolutionResult:
    """Apply the schedule to ``psi`` and compare with the exact evolution.

    Leakage is sampled at every segment boundary.  ``leak`` overrides the
    default top-band measure (e.g. :func:`multimode_leakage`).
    """
    labels = _labels(rep, schedule)
    measure = leak or (lambda v: leakage(v, rep.boundary_band))
    state = np.asarray(psi, dtype=complex).copy()
    worst = measure(state)
    D, r = rep.D, schedule.segments
    if r >= D or D <= 128:
        W = schedule_unitary(rep, schedule)
        for _ in range(r):
            state = W @ state
            worst = max(worst, measure(state))
    else:
        # D^2 per step beats building D x D segment products when r is small
        for _ in range(r):
            for k, d in schedule.segment:
                E, V = rep.spectral(labels[k - 1])
                state = V @ (np.exp(-1j * d * E) * (V.conj().T @ state))
            worst = max(worst, measure(state))
    t = schedule.lam * r
    exact = exact_evolution(rep, list(dict.fromkeys(labels)), t, psi)
    err = float(np.linalg.norm(state - exact))
    return EvolutionResult(state, exact, err, min(1.0, worst))


# ---------------------------------------------------------------------------
# extended precision

def _mp_sparse(A: np.ndarray):
    """Row-wise nonzeros of ``A`` as mpmath complex numbers (exact copies of the doubles)."""
    rows = []
    for i in range(A.shape[0]):
        nz = np.nonzero(A[i])[0]
        rows.append([(int(j), mpmath.mpc(complex(A[i, j]))) for j in nz])
    return rows


def _mp_norm(v) -> "mpmath.mpf":
    return mpmath.sqrt(mpmath.fsum(abs(z) ** 2 for z in v))


def _mp_expv(rows, norm_bound: float, t: float, v):
    """``exp(t A) v`` by Taylor series, sub-stepped so each chunk has ``|t A| <= 1``."""
    chunks = max(1, int(np.ceil(abs(t) * norm_bound)))
    dt = mpmath.mpf(t) / chunks
    tol = mpmath.mpf(10) ** (-mpmath.mp.dps)
    for _ in range(chunks):
        term = list(v)
        acc = list(v)
        k = 0
        while True:
            k += 1
            term = [dt / k * mpmath.fsum(a * term[j] for j, a in row) for row in rows]
            acc = [x + y for x, y in zip(acc, term)]
            if _mp_norm(term) < tol:
                break
        v = acc
    return v


def evaluate_schedule_mp(rep: TruncatedRep, schedule: Schedule, psi: np.ndarray,
                         dps: int = 40) -> EvolutionResult:
    """:func:`evaluate_schedule` carried out in ``dps``-digit arithmetic.

    Resolves product-formula errors far below the ~1e-14 floor of the
    double-precision spectral path.  Exponentials act on the state through
    sparse Taylor series, so this is only practical for banded generators
    of modest dimension.
    """
    labels = _labels(rep, schedule)
    uniq = list(dict.fromkeys(labels))
    X = _assemble(rep, uniq)
    with mpmath.workdps(dps):
        sparse = {label: _mp_sparse(rep[label]) for label in uniq}
        norms = {label: float(np.abs(rep[label]).sum(axis=1).max()) for label in uniq}
        v0 = [mpmath.mpc(complex(z)) for z in np.asarray(psi, dtype=complex)]
        v = v0
        worst = leakage(np.array([complex(z) for z in v]), rep.boundary_band)
        for _ in range(schedule.segments):
            for k, d in schedule.segment:
                label = labels[k - 1]
                v = _mp_expv(sparse[label], norms[label], d, v)
            worst = max(worst, leakage(np.array([complex(z) for z in v]), rep.boundary_band))
        t = schedule.lam * schedule.segments
        exact = _mp_expv(_mp_sparse(X), float(np.abs(X).sum(axis=1).max()), t, v0)
        err = float(_mp_norm([a - b for a, b in zip(v, exact)]))
        final = np.array([complex(z) for z in v])
        exact_np = np.array([complex(z) for z in exact])
    return EvolutionResult(final, exact_np, err, min(1.0, worst))


# ---------------------------------------------------------------------------
# state IO

def state_to_csv(psi: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "real", "imag"])
    for i, z in enumerate(np.asarray(psi, dtype=complex)):
        w.writerow([i, repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()


def state_from_csv(text: str | Path) -> np.ndarray:
    if isinstance(text, Path):
        text = text.read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    psi = np.zeros(len(rows), dtype=complex)
    for row in rows:
        psi[int(row["index"])] = complex(float(row["real"]), float(row["imag"]))
    return psi


def fock_state(D: int, m: int) -> np.ndarray:
    psi = np.zeros(D, dtype=complex)
    psi[m] = 1.0
    return psi


def band_limited_state(D: int, m_max: int, seed: int | None = None) -> np.ndarray:
    """Normalised superposition of ``|phi_0> .. |phi_{m_max-1}>``.

    Equal weights with quadratic phases when ``seed`` is None, otherwise
    seeded Gaussian amplitudes.
    """
    if not 1 <= m_max <= D:
        raise ValueError(f"need 1 <= m_max <= D, got {m_max}")
    psi = np.zeros(D, dtype=complex)
    if seed is None:
        m = np.arange(m_max)
        psi[:m_max] = np.exp(0.37j * m**2)
    else:
        rng = np.random.default_rng(seed)
        psi[:m_max] = rng.normal(size=m_max) + 1j * rng.normal(size=m_max)
    return psi / np.linalg.norm(psi)
