"""Ready-made Hamiltonians: algebra, truncated representation and norm profile.

Each case writes ``X = -iH`` as a sum of ``L`` rescaled basis generators so
that schedules, bounds and numerics all refer to the same ``h_k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from . import bounds
from .algebra import StructureConstants, beta, hamiltonian_algebra, sp2m, sp2m_forms, su2
from .numerics import TruncatedRep, fock_rep, leakage, multimode_fock_rep, multimode_leakage, spin_rep


@dataclass(frozen=True)
class Case:
    name: str
    labels: tuple[str, ...]
    rep: TruncatedRep
    algebra: StructureConstants | None
    profile: Callable[[int], bounds.CommutatorNormProfile]
    leak: Callable[[np.ndarray], float]

    @property
    def L(self) -> int:
        return len(self.labels)


def _sp_case(name, M, terms, D, rep, leak) -> Case:
    """Quadratic case over sp(2M); ``terms`` maps basis label -> coefficient in X."""
    base = sp2m(M)
    idx = [(base.labels.index(label), c) for label, c in terms]
    new_labels = tuple(f"h_{label}" for label, _ in terms)
    rest = tuple(label for label in base.labels if label not in dict(terms))
    alg = hamiltonian_algebra(base, idx, labels=new_labels + rest)
    _, forms = sp2m_forms(M)
    coeffs = np.ones(base.K)
    for k, c in idx:
        coeffs[k] = c
    b = beta(alg)

    def profile(m_prime):
        return bounds.finite_dim(b, bounds.ladder_y(forms, coeffs, m_prime))

    rep = rep.scaled({new: (old, c) for new, (old, c) in zip(new_labels, terms)})
    return Case(name, new_labels, rep, alg, profile, leak)


def qho(D: int) -> Case:
    """``H = (p^2 + x^2)/2`` split as ``-ip^2/2`` then ``-ix^2/2``."""
    rep = fock_rep(D)
    return _sp_case("qho", 1, [("ip2", -0.5), ("ix2", -0.5)], D, rep,
                    partial(leakage, band=rep.boundary_band))


def coupled_qho(M: int, D: int, coupling: float = 0.25) -> Case:
    """``H = sum_l (p_l^2 + x_l^2)/2 - g sum_{l != l'} x_l x_l'`` with ``D`` levels per mode."""
    terms = []
    for l in range(1, M + 1):
        terms.append((f"ip{l}p{l}", -0.5))
    for l in range(1, M + 1):
        terms.append((f"ix{l}x{l}", -0.5))
    for l in range(1, M + 1):
        for m in range(l + 1, M + 1):
            terms.append((f"ix{l}x{m}", 2.0 * coupling))
    rep = multimode_fock_rep(M, D)
    return _sp_case(f"coupled_qho_M{M}", M, terms, D, rep,
                    partial(multimode_leakage, M=M, D=D, band=rep.boundary_band))


def spin(J: float) -> Case:
    """``H = Jx + Jy``, i.e. ``X = (-iJx) + (-iJy)``."""
    rep = spin_rep(J).scaled({"hx": ("iJx", -1.0), "hy": ("iJy", -1.0)})
    alg = hamiltonian_algebra(su2(), [(0, -1.0), (1, -1.0)], labels=("hx", "hy", "iJz"))
    b = beta(alg)
    y = rep.D / 2 - 0.5  # ||iJ_alpha|| = J for every basis generator

    def profile(_m_prime=None):
        return bounds.finite_dim(b, y)

    return Case(f"spin_J{y:g}", ("hx", "hy"), rep, alg, profile, lambda v: 0.0)


def anharmonic(q: int, D: int) -> Case:
    """``H = (p^2 + x^q)/2``; the generated algebra is infinite, so only the x^q profile applies."""
    rep = fock_rep(D, q)
    rep = rep.scaled({"hp": ("ip2", -0.5), "hq": (f"ix{q}", -0.5)})
    return Case(f"anharmonic_q{q}", ("hp", "hq"), rep, None,
                partial(bounds.weyl_profile, q),
                partial(leakage, band=rep.boundary_band))
