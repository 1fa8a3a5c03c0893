import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liesuzuki import suzuki
from liesuzuki.numerics import TruncatedRep, schedule_unitary


def test_base_schedule_examples():
    assert suzuki.base_schedule(2, 1.0) == ((1, .5), (2, .5), (2, .5), (1, .5))
    assert suzuki.base_schedule(1, 1.0) == ((1, .5), (1, .5))
    steps = suzuki.base_schedule(3, 0.2)
    assert len(steps) == 6 and steps == steps[::-1]
    assert all(d == pytest.approx(0.1) for _, d in steps)


def test_suzuki_constant():
    assert suzuki.suzuki_constant(1) == pytest.approx(0.4144907717943757, rel=1e-15)
    for p in range(1, 6):
        s = suzuki.suzuki_constant(p)
        assert 4 * s + (1 - 4 * s) == pytest.approx(1.0, abs=1e-15)
        assert 1 - 4 * s < 0
    with pytest.raises(ValueError):
        suzuki.suzuki_constant(0)


def test_recurse_length_and_middle_block():
    frag = suzuki.base_schedule(2, 1.0)
    out = suzuki.recurse(frag, 1)
    assert len(out) == 20 == suzuki.steps_per_segment(2, 2)
    s = suzuki.suzuki_constant(1)
    assert out[8][1] == pytest.approx((1 - 4 * s) * 0.5)


def test_build_examples():
    s = suzuki.build(1, 2, 1.0, 3)
    assert len(s) == 12 and len(s.steps) == 12
    assert s.lam == pytest.approx(1 / 3)
    assert len(suzuki.build(2, 2, 1.0, 1)) == 20
    zero = suzuki.build(1, 2, 0.0, 5)
    assert all(d == 0.0 for _, d in zero.steps)
    with pytest.raises(ValueError):
        suzuki.build(1, 2, 1.0, 0)
    with pytest.raises(ValueError):
        suzuki.build(1, 2, -1.0, 1)
    with pytest.raises(ValueError):
        suzuki.build(1, 2, 1.0, 1, labels=("a",))


@pytest.mark.parametrize("p", range(1, 5))
@pytest.mark.parametrize("L", range(1, 9))
def test_step_count(p, L):
    assert len(suzuki.segment_steps(p, L, 0.3)) == 2 * L * 5 ** (p - 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 5), st.floats(1e-3, 10.0), st.integers(1, 4))
def test_schedule_invariants(p, L, t, r):
    s = suzuki.build(p, L, t, r)
    seg = s.segment
    assert seg == seg[::-1]
    assert all(1 <= k <= L for k, _ in seg)
    assert all(abs(d) <= s.lam for _, d in seg)
    for k in range(1, L + 1):
        total = sum(d for kk, d in seg if kk == k)
        assert abs(total - s.lam) <= 1e-12 * max(1.0, s.lam)


def test_merge_examples():
    assert suzuki.merge_steps([(1, .5), (1, .5)]) == ((1, 1.0),)
    assert suzuki.merge_steps(suzuki.base_schedule(2, 1.0)) == ((1, .5), (2, 1.0), (1, .5))
    once = suzuki.merge_steps(suzuki.segment_steps(3, 3, 1.0))
    assert suzuki.merge_steps(once) == once


def test_merge_adjacent_keeps_segments():
    s = suzuki.build(2, 2, 1.0, 3)
    m = suzuki.merge_adjacent(s)
    assert m.merged and m.segments == 3
    assert len(m) == suzuki.merged_count(2, 2, 3) < len(s)
    # segment boundaries are never merged: first and last steps of the segment stay halves
    assert m.segment[0][0] == m.segment[-1][0] == 1
    for k in (1, 2):
        assert sum(d for kk, d in m.segment if kk == k) == pytest.approx(s.lam, abs=1e-14)


def test_merged_counts():
    assert suzuki.merged_count(1, 2) == 3
    assert suzuki.merged_count(1, 2, 10) == 30
    assert suzuki.merged_count(2, 1) == 1  # a single generator collapses entirely


@pytest.mark.parametrize("p", [1, 2, 3])
def test_merge_preserves_unitary_on_random_generators(p, rng):
    from conftest import random_skew

    mats = {f"g{k}": random_skew(8, rng) for k in range(3)}
    rep = TruncatedRep(8, mats)
    s = suzuki.build(p, 3, 0.7, 1, labels=tuple(mats))
    W = schedule_unitary(rep, s)
    Wm = schedule_unitary(rep, suzuki.merge_adjacent(s))
    assert np.abs(W - Wm).max() < 1e-12


def test_csv_export():
    s = suzuki.build(1, 2, 1.0, 2, labels=("a", "b"))
    lines = s.to_csv().splitlines()
    assert lines[0] == "segment,step,generator_label,duration"
    assert lines[1] == "0,0,a,0.25"
    assert lines[-1] == "1,3,a,0.25"
    assert len(lines) == 9
    assert s.to_csv() == suzuki.build(1, 2, 1.0, 2, labels=("a", "b")).to_csv()
    assert suzuki.build(1, 1, 1.0, 1).to_csv().splitlines()[1] == "0,0,h1,0.5"
