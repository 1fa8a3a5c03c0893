"""Order-2p Suzuki product formulas as flat exponential schedules.

A step ``(k, d)`` stands for ``exp(d * h_k)`` with ``k`` a 1-based generator
index in ``1..L``.  Step ``n = 1`` acts first on the state, so a segment
evaluates to ``V_{N_p} ... V_1``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

Step = tuple[int, float]


def suzuki_constant(p: int) -> float:
    """``s_p = 1 / (4 - 4^(1/(2p+1)))``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * p + 1)))


def steps_per_segment(p: int, L: int) -> int:
    """Unmerged exponential count ``N_p = 2 L 5^(p-1)``."""
    if p < 1 or L < 1:
        raise ValueError(f"need p >= 1 and L >= 1, got p={p}, L={L}")
    return 2 * L * 5 ** (p - 1)


def base_schedule(L: int, lam: float) -> tuple[Step, ...]:
    """Second-order palindrome: ``h_1 .. h_L`` then ``h_L .. h_1``, each for ``lam / 2``."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    half = lam / 2
    forward = [(k, half) for k in range(1, L + 1)]
    return tuple(forward + forward[::-1])


def recurse(fragment: Sequence[Step], p: int) -> tuple[Step, ...]:
    """Lift an order-2p fragment to order 2p+2.

    ``W(s lam)^2 W((1 - 4s) lam) W(s lam)^2`` with ``s = s_p``; durations in
    ``fragment`` are scaled, so the fragment's own ``lam`` carries through.
    """
    s = suzuki_constant(p)
    outer = tuple((k, s * d) for k, d in fragment)
    middle = tuple((k, (1.0 - 4.0 * s) * d) for k, d in fragment)
    return outer + outer + middle + outer + outer


def segment_steps(p: int, L: int, lam: float) -> tuple[Step, ...]:
    frag = base_schedule(L, lam)
    for level in range(1, p):
        frag = recurse(frag, level)
    return frag


@dataclass(frozen=True)
class Schedule:
    """``(W_2p(lam))^r`` stored as one segment repeated ``segments`` times.

    Steps of a single segment are kept explicitly; the flat list is expanded
    on demand because ``r * N_p`` reaches millions for tight budgets.
    """

    segment: tuple[Step, ...]
    order: int
    segments: int
    lam: float
    L: int
    labels: tuple[str, ...] | None = None
    merged: bool = False

    @property
    def p(self) -> int:
        return self.order // 2

    @property
    def steps(self) -> tuple[Step, ...]:
        return self.segment * self.segments

    def __len__(self) -> int:
        return len(self.segment) * self.segments

    def rows(self) -> Iterator[tuple[int, int, int, float]]:
        """``(segment, step, k, duration)`` in application order, 0-based counters."""
        for seg in range(self.segments):
            for n, (k, d) in enumerate(self.segment):
                yield seg, n, k, d

    def label(self, k: int) -> str:
        if self.labels is None:
            return f"h{k}"
        return self.labels[k - 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["segment", "step", "generator_label", "duration"])
        for seg, n, k, d in self.rows():
            w.writerow([seg, n, self.label(k), repr(d)])
        return buf.getvalue()


def build(p: int, L: int, t: float, r: int, labels: Sequence[str] | None = None) -> Schedule:
    """Full schedule ``(W_2p(t/r))^r`` with ``r * N_p`` unmerged steps."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if labels is not None and len(labels) != L:
        raise ValueError(f"expected {L} labels, got {len(labels)}")
    lam = t / r
    return Schedule(
        segment=segment_steps(p, L, lam),
        order=2 * p,
        segments=r,
        lam=lam,
        L=L,
        labels=tuple(labels) if labels is not None else None,
    )


def merge_steps(steps: Sequence[Step]) -> tuple[Step, ...]:
    out: list[list] = []
    for k, d in steps:
        if out and out[-1][0] == k:
            out[-1][1] += d
        else:
            out.append([k, d])
    return tuple((k, d) for k, d in out)


def merge_adjacent(s: Schedule) -> Schedule:
    """Fuse consecutive exponentials of the same generator within each segment.

    Segment boundaries are left alone so that per-segment bookkeeping (and
    leakage checkpoints) survive the merge.
    """
    return Schedule(
        segment=merge_steps(s.segment),
        order=s.order,
        segments=s.segments,
        lam=s.lam,
        L=s.L,
        labels=s.labels,
        merged=True,
    )


@lru_cache(maxsize=None)
def _merged_segment_length(p: int, L: int) -> int:
    return len(merge_steps(segment_steps(p, L, 1.0)))


def merged_count(p: int, L: int, r: int = 1) -> int:
    """Exponentials in the merged schedule (per-segment merges only)."""
    return r * _merged_segment_length(p, L)
