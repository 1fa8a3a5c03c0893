"""Segment-count budgets for Suzuki product formulas.

The per-segment error of ``W_2p(lam)`` is bounded by

    eps_2p(lam) <= 2 N_p^2 sum_{j >= 2p} lam^(j+1) (f_j N_p)^j beta_{j+1}

with ``f_j = 2`` for ``j < N_p`` and ``f_j = 6 N_p / j`` otherwise, where
``beta_n`` bounds the norm of any length-``n`` nested commutator of the
generators applied to the evolved state.  ``r`` segments cost
``r * eps_2p(t / r)``.  Everything is evaluated in log space since the
``beta_n`` of oscillator problems overflow doubles long before the series
starts to converge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .suzuki import merged_count, steps_per_segment

PROBE_FACTOR = 50
TAIL_RATIO = 0.5
R_MAX = 2**53
REL_TOL = 1e-12


class DivergentSeriesError(ArithmeticError):
    """The term ratio never settled below 1/2 inside the probe window."""


class UnsatisfiableBudgetError(ArithmeticError):
    """No segment count brings the bound under epsilon."""


class PreconditionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# nested-commutator norm profiles

FINITE_DIM = "finite_dim"
WEYL = "weyl"
USER = "user_supplied"


def weyl_degree(q: int, j: np.ndarray) -> np.ndarray:
    """``d_j = (q - 2)(j + 2)/2 + 2``, rounded up where it is not an integer."""
    return np.ceil((q - 2) * (np.asarray(j) + 2) / 2 + 2)


@dataclass(frozen=True)
class CommutatorNormProfile:
    """Upper bounds ``beta_n`` indexed by commutator length ``n >= 1``."""

    source: str
    beta: float | None = None
    y: float | None = None
    q: int | None = None
    m_prime: int | None = None
    values: Mapping[int, float] | None = field(default=None, repr=False)

    def log_beta(self, n) -> np.ndarray:
        n = np.asarray(n)
        if np.any(n < 1):
            raise ValueError("commutator length must be >= 1")
        with np.errstate(divide="ignore"):
            if self.source == FINITE_DIM:
                if self.beta == 0:
                    return np.where(n == 1, np.log(self.y), -np.inf)
                return (n - 1) * np.log(self.beta) + np.log(self.y)
            if self.source == WEYL:
                j = n - 1
                d = weyl_degree(self.q, j)
                return 1.5 * j * np.log(2.0) + 0.5 * d * np.log(self.m_prime + d)
            if self.source == USER:
                out = []
                for k in np.ravel(n):
                    if int(k) not in self.values:
                        raise KeyError(f"user profile has no beta for commutator length {int(k)}")
                    out.append(np.log(self.values[int(k)]))
                return np.reshape(np.array(out, dtype=float), n.shape)
        raise ValueError(f"unknown profile source {self.source!r}")

    def beta_n(self, n: int) -> float:
        return float(np.exp(self.log_beta(n)))

    def is_zero(self) -> bool:
        return self.source == FINITE_DIM and (self.beta == 0 or self.y == 0)


def finite_dim(beta: float, y: float) -> CommutatorNormProfile:
    """``beta_{j+1} = beta^j y`` for a finite-dimensional algebra."""
    if beta < 0 or y < 0:
        raise ValueError("beta and y must be >= 0")
    return CommutatorNormProfile(FINITE_DIM, beta=float(beta), y=float(y))


def weyl_profile(q: int, m_prime: int) -> CommutatorNormProfile:
    """``beta_{j+1} <= 2^(3j/2) (m' + d_j)^(d_j/2)`` for ``X ~ i p^2 + i x^q``."""
    if not 2 <= q <= 6:
        raise PreconditionError(f"the x^q bound is only available for 2 <= q <= 6, got q={q}")
    if m_prime < 0:
        raise ValueError("m_prime must be >= 0")
    return CommutatorNormProfile(WEYL, q=int(q), m_prime=int(m_prime))


def user_supplied(values: Mapping[int, float]) -> CommutatorNormProfile:
    vals = {int(k): float(v) for k, v in values.items()}
    if any(v < 0 for v in vals.values()):
        raise ValueError("beta values must be >= 0")
    return CommutatorNormProfile(USER, values=vals)


# ---------------------------------------------------------------------------
# ladder-operator norm bounds on states with every mode at level <= m

def quadratic_ladder_bound(S: np.ndarray, m: float) -> float:
    """Bound on ``||xi^T S xi P_m||`` with ``xi = (x_1..x_M, p_1..p_M)``.

    The quadratic form is rewritten in normal-ordered ladder monomials and
    the triangle inequality applied with the exact monomial norms on
    ``P_m`` (projector onto states with all modes at level ``<= m``).
    """
    S = np.asarray(S, dtype=float)
    M = S.shape[0] // 2
    T = np.zeros((2 * M, 2 * M), dtype=complex)
    s = 1 / np.sqrt(2)
    for l in range(M):
        T[l, l], T[l, M + l] = s, s
        T[M + l, l], T[M + l, M + l] = -1j * s, 1j * s
    C = T.T @ S @ T
    total = 0.0
    for i in range(M):
        for j in range(i, M):
            aa = C[i, j] + C[j, i] if i != j else C[i, i]
            cc = C[M + i, M + j] + C[M + j, M + i] if i != j else C[M + i, M + i]
            if i == j:
                total += abs(aa) * math.sqrt(m * max(m - 1, 0)) + abs(cc) * math.sqrt((m + 1) * (m + 2))
            else:
                total += abs(aa) * m + abs(cc) * (m + 1)
    for i in range(M):
        for j in range(M):
            # a_j^dagger a_i: written order plus the reordered a_i a_j^dagger
            ca = C[M + j, i] + C[i, M + j]
            total += abs(ca) * (m if i == j else math.sqrt(m * (m + 1)))
    const = sum(C[i, M + i] for i in range(M))
    return float(total + abs(const))


def ladder_y(forms: Sequence[np.ndarray], coefficients: Sequence[float], m: float) -> float:
    """``y = max_k |c_k| ||Q_k P_m||`` over every basis generator ``c_k i Q_k``."""
    return max(abs(c) * quadratic_ladder_bound(S, m) for S, c in zip(forms, coefficients))


def position_power_bound(q: int, m: float) -> float:
    """``||x^q P_m|| <= prod_i (sqrt(m + i) + sqrt(m + i + 1)) / sqrt(2)``."""
    return float(np.prod([(math.sqrt(m + i) + math.sqrt(m + i + 1)) / math.sqrt(2) for i in range(q)]))


def naive_profile(q: int, m_prime: int) -> CommutatorNormProfile:
    """Product-of-norms profile for ``ip^2, ix^q``: ``beta_{j+1} <= 2^j Lam^(j+1)``.

    ``Lam`` bounds the effective norm of either generator on levels
    ``<= m'``; no commutator structure is used.
    """
    S_p2 = np.array([[0.0, 0.0], [0.0, 1.0]])
    lam = max(position_power_bound(q, m_prime), quadratic_ladder_bound(S_p2, m_prime))
    return finite_dim(2 * lam, lam)


# ---------------------------------------------------------------------------
# series bound

def _log_terms(p: int, L: int, lam: float, profile: CommutatorNormProfile):
    Np = steps_per_segment(p, L)
    j = np.arange(2 * p, PROBE_FACTOR * Np + 1)
    f = np.where(j < Np, 2.0, 6.0 * Np / np.maximum(j, 1))
    with np.errstate(divide="ignore"):
        logt = (math.log(2 * Np**2) + (j + 1) * math.log(lam) + j * np.log(f * Np)
                + profile.log_beta(j + 1))
    return Np, j, logt


def series_error(p: int, L: int, lam: float, profile: CommutatorNormProfile) -> float:
    """Certified bound on the single-segment error ``eps_2p(lam)``.

    Terms are summed until ``j >= N_p`` and the consecutive-term ratio has
    dropped below 1/2 for the rest of the probe window ``j <= 50 N_p``; the
    remainder is bounded by a geometric tail using the largest ratio seen in
    that window.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if lam == 0 or profile.is_zero():
        return 0.0
    Np, j, logt = _log_terms(p, L, lam, profile)
    if np.all(np.isneginf(logt)):
        return 0.0
    with np.errstate(invalid="ignore"):
        logratio = np.diff(logt)
    logratio = np.where(np.isnan(logratio), -np.inf, logratio)  # 0/0: both terms vanish
    # logratio[i] compares term i+1 with term i
    bad = (logratio >= math.log(TAIL_RATIO)) | (j[1:] < Np)
    if bad[-1]:
        raise DivergentSeriesError(
            f"term ratio not below {TAIL_RATIO} by j = {j[-1]} (p={p}, L={L}, lam={lam:.3g})")
    last_bad = np.nonzero(bad)[0]
    stop = (last_bad[-1] + 1) if last_bad.size else 0  # index into logt of the last summed term
    head = logsumexp(logt[: stop + 1])
    rho = math.exp(min(0.0, float(np.max(logratio[stop:], initial=-np.inf))))
    tail = logt[stop] + math.log(rho / (1 - rho)) if rho > 0 else -np.inf
    total = np.logaddexp(head, tail)
    return math.exp(total) if total < 709.0 else math.inf


def segments_error(r: int, t: float, p: int, L: int, profile: CommutatorNormProfile) -> float:
    """``r * eps_2p(t / r)``; ``inf`` when the series is not certified convergent."""
    try:
        return r * series_error(p, L, t / r, profile)
    except DivergentSeriesError:
        return math.inf


# ---------------------------------------------------------------------------
# budgets

@dataclass(frozen=True)
class ErrorBudget:
    t: float
    epsilon: float
    p: int
    L: int
    r: int
    N: int
    N_p: int
    N_merged: int
    predicted_error: float
    profile_source: str
    beta: float | None = None
    y: float | None = None

    def row(self) -> dict:
        return {
            "p": self.p,
            "L": self.L,
            "t": self.t,
            "epsilon": self.epsilon,
            "r": self.r,
            "N_unmerged": self.N,
            "N_merged": self.N_merged,
            "predicted_error": self.predicted_error,
            "profile_source": self.profile_source,
        }


def _budget(t, epsilon, p, L, r, pred, profile, source=None) -> ErrorBudget:
    Np = steps_per_segment(p, L)
    return ErrorBudget(
        t=t, epsilon=epsilon, p=p, L=L, r=r, N=r * Np, N_p=Np,
        N_merged=merged_count(p, L, r), predicted_error=pred,
        profile_source=source or profile.source,
        beta=getattr(profile, "beta", None), y=getattr(profile, "y", None),
    )


def solve_segments(t: float, epsilon: float, p: int, L: int,
                   profile: CommutatorNormProfile) -> ErrorBudget:
    """Smallest ``r`` with ``r * eps_2p(t / r) <= epsilon``.

    Doubling locates a feasible ``r``, bisection then shrinks it; both rely on
    the cost decreasing monotonically in ``r`` once the series converges.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if t == 0 or profile.is_zero():
        return _budget(t, epsilon, p, L, 1, 0.0, profile)

    def cost(r):
        return segments_error(r, t, p, L, profile)

    hi = 1
    c_hi = cost(hi)
    while not c_hi <= epsilon:
        if hi >= R_MAX:
            raise UnsatisfiableBudgetError(
                f"no r <= 2^53 meets epsilon={epsilon:g} (p={p}, L={L}, t={t:g})")
        hi *= 2
        c_hi = cost(hi)
    lo = hi // 2  # infeasible, or 0 when r = 1 already works
    while hi - lo > 1:
        mid = (lo + hi) // 2
        c_mid = cost(mid)
        if c_mid <= epsilon:
            hi, c_hi = mid, c_mid
        else:
            lo = mid
    return _budget(t, epsilon, p, L, hi, c_hi, profile)


def ceil_tol(x: float) -> int:
    """Ceiling that treats values within relative 1e-12 of an integer as that integer."""
    n = round(x)
    if abs(x - n) <= REL_TOL * max(1.0, abs(x)):
        return int(n)
    return math.ceil(x)


def closed_form_segments(t: float, epsilon: float, p: int, L: int, beta: float, y: float) -> ErrorBudget:
    """``r = ceil(5^(p+2) L^(1+1/p) beta y^(1/2p) t^(1+1/2p) / epsilon^(1/2p))``.

    ``predicted_error`` is the relaxed geometric bound this choice certifies,
    ``r (N_p y / beta) x^(2p+1) / (1 - x)`` with ``x = 6 N_p beta t / r``.
    """
    if epsilon <= 0:
        raise PreconditionError("epsilon must be > 0")
    if beta <= 0:
        raise PreconditionError("the closed form needs beta > 0")
    if y * t < epsilon:
        raise PreconditionError(f"the closed form needs y t >= epsilon (y t = {y * t:g})")
    e = 1.0 / (2 * p)
    raw = 5 ** (p + 2) * L ** (1 + 1 / p) * beta * y**e * t ** (1 + e) / epsilon**e
    r = max(1, ceil_tol(raw))
    Np = steps_per_segment(p, L)
    x = 6 * Np * beta * t / r
    pred = r * (Np * y / beta) * x ** (2 * p + 1) / (1 - x) if x < 1 else math.inf
    return _budget(t, epsilon, p, L, r, pred, finite_dim(beta, y), source="closed_form")


def heuristic_p(m_prime: float, t: float, epsilon: float) -> float:
    """Asymptotic optimum ``sqrt(log(m' t / epsilon) / log 5)``."""
    return math.sqrt(math.log(m_prime * t / epsilon) / math.log(5))


def optimal_p(t: float, epsilon: float, L: int, profile: CommutatorNormProfile,
              p_max: int) -> tuple[int, ErrorBudget]:
    """Exhaustive search over ``p = 1..p_max`` for the smallest unmerged ``N``."""
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    best = None
    for p in range(1, p_max + 1):
        try:
            b = solve_segments(t, epsilon, p, L, profile)
        except UnsatisfiableBudgetError:
            continue
        if best is None or b.N < best.N:
            best = b
    if best is None:
        raise UnsatisfiableBudgetError(f"every p in 1..{p_max} is unsatisfiable")
    return best.p, best


def qho_support_heuristic(q: int, m: int, C: float = 10.0) -> int:
    """Heuristic cutoff ``m' = C m^(q/2)`` for an evolved eigenstate ``|phi_m>``.

    Comes from a Markov-inequality argument on the oscillator energy; it is
    a rule of thumb, not a certified bound.
    """
    if q % 2 or q < 2:
        raise ValueError(f"q must be an even integer >= 2, got {q}")
    if m < 0:
        raise ValueError("m must be >= 0")
    return ceil_tol(C * m ** (q / 2))

