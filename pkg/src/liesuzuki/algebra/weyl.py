"""Normal-ordered polynomials in x and p with ``[x, p] = i``.

Every polynomial is kept as ``sum c_ab x^a p^b`` with all x to the left.
Products are reordered with

    p^b x^c = sum_k k! C(b, k) C(c, k) (-i)^k x^(c-k) p^(b-k)

which is exact, so commutators need no truncation beyond the degree cap.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass, field
from math import comb, factorial
from typing import Iterable, Mapping

DEFAULT_DEGREE_CAP = 64


class DegreeCapError(OverflowError):
    """A product exceeded the degree cap or produced a non-finite coefficient."""


def _clean(terms: Mapping[tuple[int, int], complex]) -> dict[tuple[int, int], complex]:
    return {k: complex(v) for k, v in sorted(terms.items()) if v != 0}


@dataclass(frozen=True)
class WeylPolynomial:
    terms: Mapping[tuple[int, int], complex] = field(default_factory=dict)
    degree_cap: int = DEFAULT_DEGREE_CAP

    def __post_init__(self):
        object.__setattr__(self, "terms", _clean(self.terms))
        for (a, b), c in self.terms.items():
            if a < 0 or b < 0:
                raise ValueError(f"negative exponent in term x^{a} p^{b}")
            if a + b > self.degree_cap:
                raise DegreeCapError(f"term x^{a} p^{b} exceeds degree cap {self.degree_cap}")
            if not cmath.isfinite(c):
                raise DegreeCapError(f"non-finite coefficient on x^{a} p^{b}")

    # -- constructors -------------------------------------------------------
    @classmethod
    def monomial(cls, a: int, b: int, coeff: complex = 1.0, degree_cap: int = DEFAULT_DEGREE_CAP):
        return cls({(a, b): coeff}, degree_cap)

    @classmethod
    def x(cls, power: int = 1, coeff: complex = 1.0):
        return cls.monomial(power, 0, coeff)

    @classmethod
    def p(cls, power: int = 1, coeff: complex = 1.0):
        return cls.monomial(0, power, coeff)

    @classmethod
    def constant(cls, value: complex):
        return cls.monomial(0, 0, value)

    # -- queries ------------------------------------------------------------
    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    @property
    def degree(self) -> int:
        """Largest ``a + b``; -1 for the zero polynomial."""
        return max((a + b for a, b in self.terms), default=-1)

    @property
    def x_degree(self) -> int:
        return max((a for a, _ in self.terms), default=-1)

    @property
    def p_degree(self) -> int:
        return max((b for _, b in self.terms), default=-1)

    def coeff(self, a: int, b: int) -> complex:
        return self.terms.get((a, b), 0j)

    def chop(self, tol: float) -> "WeylPolynomial":
        return WeylPolynomial({k: v for k, v in self.terms.items() if abs(v) > tol}, self.degree_cap)

    # -- arithmetic -----------------------------------------------------------
    def _new(self, terms):
        return WeylPolynomial(terms, self.degree_cap)

    def __add__(self, other: "WeylPolynomial") -> "WeylPolynomial":
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return self._new(out)

    def __neg__(self):
        return self._new({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, WeylPolynomial):
            return self @ other
        return self._new({k: v * other for k, v in self.terms.items()})

    def __rmul__(self, scalar):
        return self._new({k: v * scalar for k, v in self.terms.items()})

    def __matmul__(self, other: "WeylPolynomial") -> "WeylPolynomial":
        out: dict[tuple[int, int], complex] = {}
        for ((a, b), u), ((c, d), v) in itertools.product(self.terms.items(), other.terms.items()):
            for k in range(min(b, c) + 1):
                deg = a + c - k + b - k + d
                if deg > self.degree_cap:
                    raise DegreeCapError(f"product degree {deg} exceeds cap {self.degree_cap}")
                w = u * v * factorial(k) * comb(b, k) * comb(c, k) * (-1j) ** k
                key = (a + c - k, b - k + d)
                out[key] = out.get(key, 0) + w
        return self._new(out)

    def __eq__(self, other):
        if not isinstance(other, WeylPolynomial):
            return NotImplemented
        return dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def allclose(self, other: "WeylPolynomial", tol: float = 1e-10) -> bool:
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.coeff(*k) - other.coeff(*k)) <= tol for k in keys)

    def __repr__(self):
        if not self.terms:
            return "WeylPolynomial(0)"
        parts = [f"({c:.6g})x^{a}p^{b}" for (a, b), c in self.terms.items()]
        return "WeylPolynomial(" + " + ".join(parts) + ")"


def weyl_commutator(A: WeylPolynomial, B: WeylPolynomial) -> WeylPolynomial:
    """Exact normal-ordered ``[A, B] = AB - BA``."""
    return A @ B - B @ A


def nested_commutator(ops: Iterable[WeylPolynomial]) -> WeylPolynomial:
    """``[o_1, [o_2, [..., o_n]...]]`` for ``n >= 1``."""
    ops = list(ops)
    if not ops:
        raise ValueError("need at least one operator")
    acc = ops[-1]
    for op in reversed(ops[:-1]):
        acc = weyl_commutator(op, acc)
    return acc


def nested_commutator_degree(q: int, j: int) -> int:
    """Degree bound ``d_j = (q - 2)(j + 2)/2 + 2`` for a length ``j + 1`` nested
    commutator of ``ix^q`` and ``ip^2``, rounded up when odd ``q`` and odd ``j``
    make it fractional.

    At most ``floor((j + 2) / 2)`` factors can be ``ix^q`` and each adds
    ``q - 2`` to the degree, so the rounded value is never below the true degree.
    """
    if q < 2 or j < 1:
        raise ValueError(f"need q >= 2 and j >= 1, got q={q}, j={j}")
    return -(-(q - 2) * (j + 2) // 2) + 2
