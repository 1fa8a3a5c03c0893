"""Real Lie algebras described by their structure constants.

A basis of skew-Hermitian generators ``h_0 .. h_{K-1}`` closes under the
commutator, ``[h_a, h_b] = sum_c gamma[a, b, c] h_c``.  The tensor is stored
sparsely with ``a < b``; the ``a > b`` half follows from antisymmetry.
Generator indices are 0-based throughout this module.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

Entry = tuple[int, int, int, float]

JACOBI_TOL = 1e-12


@dataclass(frozen=True)
class GeneratorBasis:
    """Generator names plus the number ``L`` of them that appear in ``X``."""

    labels: tuple[str, ...]
    L: int | None = None

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(set(labels)) != len(labels):
            raise ValueError(f"generator labels must be unique: {labels}")
        if not labels:
            raise ValueError("basis needs at least one generator")
        L = len(labels) if self.L is None else int(self.L)
        if not 1 <= L <= len(labels):
            raise ValueError(f"need 1 <= L <= K, got L={L}, K={len(labels)}")
        object.__setattr__(self, "L", L)

    @property
    def K(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class Violation:
    kind: str  # "antisymmetry" or "jacobi"
    indices: tuple[int, ...]
    residual: float


@dataclass(frozen=True)
class StructureConstants:
    """Sparse structure-constant tensor over a :class:`GeneratorBasis`.

    ``entries`` maps a canonical pair ``(a, b)`` with ``a < b`` to a mapping
    ``c -> gamma``.  ``raw`` keeps the entries exactly as supplied so that
    inconsistent input (both orderings given with mismatched signs, or a
    nonzero ``[h_a, h_a]``) can still be reported by :func:`validate`.
    """

    basis: GeneratorBasis
    entries: Mapping[tuple[int, int], Mapping[int, float]]
    raw: tuple[Entry, ...] = field(default=(), repr=False)

    @classmethod
    def from_entries(cls, basis: GeneratorBasis, entries: Iterable[Sequence]) -> "StructureConstants":
        raw = tuple((int(a), int(b), int(c), float(g)) for a, b, c, g in entries)
        K = basis.K
        canonical: dict[tuple[int, int], dict[int, float]] = {}
        for a, b, c, g in raw:
            if not all(0 <= i < K for i in (a, b, c)):
                raise ValueError(f"entry index out of range for K={K}: {(a, b, c)}")
        # canonical-order entries win; reversed ones only fill gaps
        for a, b, c, g in raw:
            if a < b and g != 0.0:
                canonical.setdefault((a, b), {})[c] = g
        for a, b, c, g in raw:
            if a > b and g != 0.0 and c not in canonical.get((b, a), {}):
                canonical.setdefault((b, a), {})[c] = -g
        frozen = {pair: dict(sorted(row.items())) for pair, row in sorted(canonical.items())}
        return cls(basis=basis, entries=frozen, raw=raw)

    @property
    def K(self) -> int:
        return self.basis.K

    @property
    def L(self) -> int:
        return self.basis.L

    @property
    def labels(self) -> tuple[str, ...]:
        return self.basis.labels

    def gamma(self, a: int, b: int, c: int) -> float:
        if a == b:
            return 0.0
        if a < b:
            return self.entries.get((a, b), {}).get(c, 0.0)
        return -self.entries.get((b, a), {}).get(c, 0.0)

    def bracket(self, a: int, b: int) -> dict[int, float]:
        """Coefficients of ``[h_a, h_b]`` in the basis."""
        if a == b:
            return {}
        if a < b:
            return dict(self.entries.get((a, b), {}))
        return {c: -g for c, g in self.entries.get((b, a), {}).items()}

    def dense(self) -> np.ndarray:
        """Full ``K x K x K`` tensor ``G[a, b, c] = gamma^{a,b}_c``."""
        G = np.zeros((self.K, self.K, self.K))
        for (a, b), row in self.entries.items():
            for c, g in row.items():
                G[a, b, c] = g
                G[b, a, c] = -g
        return G

    def canonical_entries(self) -> list[Entry]:
        return [(a, b, c, g) for (a, b), row in self.entries.items() for c, g in row.items()]

    def rescaled(self, coefficients: Mapping[int, float]) -> "StructureConstants":
        """Constants for the basis ``h_k -> c_k h_k`` (missing ``k`` keep ``c_k = 1``)."""
        c = np.ones(self.K)
        for k, v in coefficients.items():
            if v == 0:
                raise ValueError(f"cannot rescale generator {k} by zero")
            c[k] = v
        out = [(a, b, k, g * c[a] * c[b] / c[k]) for a, b, k, g in self.canonical_entries()]
        return StructureConstants.from_entries(self.basis, out)

    def permuted(self, order: Sequence[int], L: int | None = None, labels: Sequence[str] | None = None) -> "StructureConstants":
        """Reorder the basis so that new index ``i`` is old index ``order[i]``."""
        order = list(order)
        if sorted(order) != list(range(self.K)):
            raise ValueError("order must be a permutation of the basis indices")
        new_of_old = {old: new for new, old in enumerate(order)}
        names = tuple(labels) if labels is not None else tuple(self.labels[o] for o in order)
        basis = GeneratorBasis(names, L)
        out = [(new_of_old[a], new_of_old[b], new_of_old[k], g) for a, b, k, g in self.canonical_entries()]
        return StructureConstants.from_entries(basis, out)

    def to_json(self) -> str:
        doc = {
            "labels": list(self.labels),
            "entries": [[a, b, c, g] for a, b, c, g in self.canonical_entries()],
        }
        if self.L != self.K:
            doc["L"] = self.L
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "StructureConstants":
        doc = json.loads(text)
        if "labels" not in doc or "entries" not in doc:
            raise ValueError('algebra document needs "labels" and "entries"')
        basis = GeneratorBasis(tuple(doc["labels"]), doc.get("L"))
        for e in doc["entries"]:
            if len(e) != 4:
                raise ValueError(f"entry must be [k, k', k'', gamma], got {e!r}")
        return cls.from_entries(basis, doc["entries"])

    @classmethod
    def load(cls, path: str | Path) -> "StructureConstants":
        return cls.from_json(Path(path).read_text())


def hamiltonian_algebra(sc: StructureConstants, terms: Sequence[tuple[int, float]],
                        labels: Sequence[str] | None = None) -> StructureConstants:
    """Algebra in which ``X = sum_k c_k h_k`` has unit coefficients.

    ``terms`` lists ``(index, c_k)``; those generators are rescaled by ``c_k``
    and moved to the front, so the result has ``L = len(terms)``.
    """
    idx = [k for k, _ in terms]
    if len(set(idx)) != len(idx):
        raise ValueError("each generator may appear in X only once")
    scaled = sc.rescaled({k: c for k, c in terms})
    order = idx + [k for k in range(sc.K) if k not in idx]
    return scaled.permuted(order, L=len(terms), labels=labels)


def validate(sc: StructureConstants, tol: float = JACOBI_TOL) -> list[Violation]:
    """Antisymmetry and Jacobi violations; an empty list means the tensor is a Lie algebra."""
    violations = []
    raw = {}
    for a, b, c, g in sc.raw:
        raw[(a, b, c)] = raw.get((a, b, c), 0.0) + g
    for (a, b, c), g in sorted(raw.items()):
        if a == b:
            if abs(g) > tol:
                violations.append(Violation("antisymmetry", (a, b, c), abs(g)))
        elif a < b and (b, a, c) in raw:
            resid = abs(g + raw[(b, a, c)])
            if resid > tol * max(1.0, abs(g)):
                violations.append(Violation("antisymmetry", (a, b, c), resid))

    G = sc.dense()
    scale = max(1.0, float(np.abs(G).max(initial=0.0)) ** 2)
    # J[a,b,c,e]: coefficient of h_e in [h_a,[h_b,h_c]] + cyclic
    J = (np.einsum("bcd,ade->abce", G, G)
         + np.einsum("cad,bde->abce", G, G)
         + np.einsum("abd,cde->abce", G, G))
    for a, b, c in itertools.combinations(range(sc.K), 3):
        resid = float(np.abs(J[a, b, c]).max(initial=0.0))
        if resid > tol * scale:
            violations.append(Violation("jacobi", (a, b, c), resid))
    return violations


def beta(sc: StructureConstants) -> float:
    """Largest absolute row sum ``max_{a,b} sum_c |gamma^{a,b}_c|``."""
    return max((sum(abs(g) for g in row.values()) for row in sc.entries.values()), default=0.0)


# ---------------------------------------------------------------------------
# built-in algebras

def abelian(n: int) -> StructureConstants:
    return StructureConstants.from_entries(GeneratorBasis(tuple(f"h{k}" for k in range(n))), [])


def su2() -> StructureConstants:
    """Basis ``{iJx, iJy, iJz}``; ``[iJx, iJy] = -iJz`` and cyclic."""
    basis = GeneratorBasis(("iJx", "iJy", "iJz"))
    return StructureConstants.from_entries(basis, [(0, 1, 2, -1.0), (1, 2, 0, -1.0), (2, 0, 1, -1.0)])


def sp2() -> StructureConstants:
    """Basis ``{ix^2, ip^2, i{x,p}}`` with the three oscillator relations tabulated."""
    basis = GeneratorBasis(("ix2", "ip2", "ixp"))
    return StructureConstants.from_entries(basis, [
        (0, 1, 2, -2.0),  # [ix^2, ip^2] = -2 i{x,p}
        (0, 2, 0, -4.0),  # [ix^2, i{x,p}] = -4 ix^2
        (1, 2, 1, 4.0),   # [ip^2, i{x,p}] = 4 ip^2
    ])


def heisenberg() -> StructureConstants:
    """Basis ``{ix, ip, i1}``; only ``[ix, ip] = -i1`` is nonzero."""
    return StructureConstants.from_entries(GeneratorBasis(("ix", "ip", "i1")), [(0, 1, 2, -1.0)])


def symplectic_form(M: int) -> np.ndarray:
    """``Omega`` with ``[xi_a, xi_b] = i Omega[a, b]`` for ``xi = (x_1..x_M, p_1..p_M)``."""
    I = np.eye(M)
    Z = np.zeros((M, M))
    return np.block([[Z, I], [-I, Z]])


def sp2m_forms(M: int) -> tuple[tuple[str, ...], list[np.ndarray]]:
    """Labels and symmetric matrices ``S`` such that generator ``k`` is ``i xi^T S_k xi``.

    Order: ``x_l x_m`` (l <= m), then ``p_l p_m`` (l <= m), then the
    symmetrised ``x_l p_m + p_m x_l`` for all ``l, m``.  For ``M = 1`` this is
    ``{ix^2, ip^2, i{x,p}}``.
    """
    n = 2 * M
    labels, forms = [], []

    def sym(a, b, w):
        S = np.zeros((n, n))
        S[a, b] += w
        S[b, a] += w
        return S

    for l in range(M):
        for m in range(l, M):
            labels.append("ix2" if M == 1 else f"ix{l + 1}x{m + 1}")
            forms.append(sym(l, m, 0.5))
    for l in range(M):
        for m in range(l, M):
            labels.append("ip2" if M == 1 else f"ip{l + 1}p{m + 1}")
            forms.append(sym(M + l, M + m, 0.5))
    for l in range(M):
        for m in range(M):
            labels.append("ixp" if M == 1 else f"ix{l + 1}p{m + 1}")
            forms.append(sym(l, M + m, 1.0))
    return tuple(labels), forms


def sp2m(M: int) -> StructureConstants:
    """sp(2M) structure constants generated from ``[x_l, p_m] = i delta_lm``.

    For symmetric ``A, B`` one has ``[iQ_A, iQ_B] = -2 i Q_C`` with
    ``C = A Omega B - B Omega A``, where ``Q_S = xi^T S xi``; ``C`` is then
    expanded in the basis forms.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    labels, forms = sp2m_forms(M)
    Omega = symplectic_form(M)
    iu = np.triu_indices(2 * M)
    design = np.stack([S[iu] for S in forms], axis=1)
    entries = []
    for a, b in itertools.combinations(range(len(forms)), 2):
        A, B = forms[a], forms[b]
        C = -2.0 * (A @ Omega @ B - B @ Omega @ A)
        coef, *_ = np.linalg.lstsq(design, C[iu], rcond=None)
        if not np.allclose(design @ coef, C[iu], atol=1e-12):
            raise RuntimeError("sp(2M) basis failed to close")  # pragma: no cover
        for c, g in enumerate(coef):
            g = float(np.round(g, 12))
            if g != 0.0:
                entries.append((a, b, c, g))
    return StructureConstants.from_entries(GeneratorBasis(labels), entries)


BUILTINS = {
    "su2": su2,
    "sp2": sp2,
    "heisenberg": heisenberg,
}
