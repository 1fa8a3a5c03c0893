import numpy as np
import pytest
from conftest import random_skew, taylor_expm
from hypothesis import given, settings, strategies as st

from liesuzuki import bounds, cases, suzuki
from liesuzuki.algebra import sp2, su2
from liesuzuki.numerics import (
    MissingGeneratorError,
    TruncatedRep,
    band_limited_state,
    evaluate_schedule,
    evaluate_schedule_mp,
    exact_evolution,
    expm_skew,
    fock_rep,
    fock_state,
    interior_residual,
    leakage,
    multimode_fock_rep,
    multimode_leakage,
    per_generator_exponential,
    schedule_unitary,
    spin_rep,
    state_from_csv,
    state_to_csv,
)


# -- representations ----------------------------------------------------------

def test_two_level_position_element():
    rep = fock_rep(2)
    assert rep["x"][0, 1] == pytest.approx(1 / np.sqrt(2))


@pytest.mark.parametrize("D", [4, 17, 64])
def test_canonical_commutator_on_interior(D):
    rep = fock_rep(D)
    x, p = rep["x"], rep["p"]
    C = (x @ p - p @ x)[: D - 1, : D - 1]
    assert np.abs(C - 1j * np.eye(D - 1)).max() < 1e-12


def test_sp2_relation_on_interior():
    rep = fock_rep(64)
    lhs = rep["ix2"] @ rep["ip2"] - rep["ip2"] @ rep["ix2"]
    n = 64 - rep.boundary_band
    assert np.abs((lhs + 2 * rep["ixp"])[:n, :n]).max() < 1e-10


def test_sp2_interior_residual_band4():
    assert interior_residual(fock_rep(64), sp2(), band=4) < 1e-8


def test_powers_are_products_of_truncated_x():
    rep = fock_rep(20, q=4)
    assert np.allclose(rep["ix4"], 1j * np.linalg.matrix_power(rep["x"], 4))
    assert rep.boundary_band == 4


def test_spin_half_is_pauli():
    rep = spin_rep(0.5)
    assert np.allclose(2 * rep["Jx"], [[0, 1], [1, 0]])
    assert np.allclose(2 * rep["Jy"], [[0, -1j], [1j, 0]])
    assert np.allclose(2 * rep["Jz"], [[1, 0], [0, -1]])


@pytest.mark.parametrize("J", [0.5, 1, 3.5, 10])
def test_spin_relations_exact(J):
    rep = spin_rep(J)
    assert rep.boundary_band == 0
    assert interior_residual(rep, su2()) < 1e-12


def test_spin_norm():
    J = 10
    assert np.linalg.svd(spin_rep(J)["Jx"], compute_uv=False)[0] <= J + 1
    with pytest.raises(ValueError):
        spin_rep(0.3)


def test_rep_validation():
    with pytest.raises(ValueError):
        TruncatedRep(2, {"bad": np.eye(2, dtype=complex)})
    rep = fock_rep(4)
    with pytest.raises(MissingGeneratorError):
        rep["nope"]
    with pytest.raises(ValueError):
        rep.spectral("x")
    with pytest.raises(ValueError):
        fock_rep(2000)


def test_multimode_rep_shapes_and_leakage():
    rep = multimode_fock_rep(2, 6)
    assert rep.D == 36 and "ix1p2" in rep and "x2" in rep
    psi = np.zeros(36, dtype=complex)
    psi[0] = 1.0
    assert multimode_leakage(psi, 2, 6, 2) == 0.0
    psi[5] = 1.0  # mode 2 at its top level
    assert multimode_leakage(psi / np.linalg.norm(psi), 2, 6, 2) == pytest.approx(1 / np.sqrt(2))


# -- exponentials -------------------------------------------------------------

def test_taylor_oracle_on_random_skew(rng):
    for _ in range(10):
        A = random_skew(8, rng)
        t = rng.uniform(-2, 2)
        assert np.abs(expm_skew(A, t) - taylor_expm(A, t)).max() < 1e-9


def test_per_generator_exponential_properties(rng):
    rep = TruncatedRep(8, {"g": random_skew(8, rng)})
    assert np.array_equal(per_generator_exponential(rep, "g", 0.0), np.eye(8))
    a, b = 0.3, -0.71
    prod = per_generator_exponential(rep, "g", a) @ per_generator_exponential(rep, "g", b)
    assert np.abs(prod - per_generator_exponential(rep, "g", a + b)).max() < 1e-11
    U = per_generator_exponential(rep, "g", 1.3)
    assert np.abs(U.conj().T @ U - np.eye(8)).max() < 1e-11
    assert per_generator_exponential(rep, "g", 1.3) is U


def test_non_skew_generator_rejected():
    with pytest.raises(np.linalg.LinAlgError):
        expm_skew(np.eye(3))


def test_exact_evolution_identity_and_norm():
    rep = fock_rep(32)
    psi = band_limited_state(32, 8, seed=4)
    assert np.array_equal(exact_evolution(rep, ["ix2", "ip2"], 0.0, psi), psi)
    out = exact_evolution(rep, {"ix2": -0.5, "ip2": -0.5}, 2.3, psi)
    assert abs(np.linalg.norm(out) - 1) < 1e-11


@pytest.mark.parametrize("m", [0, 3, 8])
def test_qho_eigenstate_phase(m):
    case = cases.qho(64)
    for t in (0.3, 1.0, 2.5):
        out = exact_evolution(case.rep, list(case.labels), t, fock_state(64, m))
        assert np.abs(out - np.exp(-1j * t * (m + 0.5)) * fock_state(64, m)).max() < 1e-10


# -- schedules ----------------------------------------------------------------

def test_commuting_generators_are_exact(rng):
    mats = {f"d{k}": 1j * np.diag(rng.normal(size=6)) for k in range(3)}
    rep = TruncatedRep(6, mats)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    for p in (1, 2):
        res = evaluate_schedule(rep, suzuki.build(p, 3, 1.7, 2, labels=tuple(mats)), psi)
        assert res.observed_error < 1e-12


def test_product_is_unitary():
    case = cases.qho(128)
    s = suzuki.build(3, 2, 0.5, 1, labels=case.labels)
    W = schedule_unitary(case.rep, s)
    assert np.abs(W.conj().T @ W - np.eye(128)).max() < 1e-10
    res = evaluate_schedule(case.rep, s, fock_state(128, 3))
    assert abs(np.linalg.norm(res.final_state) - 1) < 1e-10


def test_zero_time_schedule_is_identity():
    case = cases.qho(16)
    psi = band_limited_state(16, 4)
    res = evaluate_schedule(case.rep, suzuki.build(1, 2, 0.0, 3, labels=case.labels), psi)
    assert res.observed_error == 0.0
    assert np.array_equal(res.final_state, psi)


def test_missing_label():
    rep = fock_rep(8)
    with pytest.raises(MissingGeneratorError):
        evaluate_schedule(rep, suzuki.build(1, 2, 0.1, 1, labels=("ix2", "zz")), fock_state(8, 0))
    with pytest.raises(ValueError):
        evaluate_schedule(rep, suzuki.build(1, 2, 0.1, 1), fock_state(8, 0))


def test_qho_first_order_slope():
    case = cases.qho(64)
    lams = 2.0 ** -np.arange(4, 10)
    errs = [evaluate_schedule(case.rep, suzuki.build(1, 2, lam, 1, labels=case.labels),
                              fock_state(64, 4)).observed_error for lam in lams]
    slope = np.polyfit(np.log(lams), np.log(errs), 1)[0]
    assert 2.75 <= slope <= 3.6


def test_large_rep_per_step_path_matches_unitary_path():
    case = cases.qho(160)
    s = suzuki.build(2, 2, 0.4, 3, labels=case.labels)
    psi = band_limited_state(160, 10, seed=1)
    res = evaluate_schedule(case.rep, s, psi)
    W = np.linalg.matrix_power(schedule_unitary(case.rep, s), 3)
    assert np.abs(res.final_state - W @ psi).max() < 1e-11


def test_mp_path_agrees_with_double_path():
    case = cases.qho(24)
    s = suzuki.build(1, 2, 0.2, 2, labels=case.labels)
    psi = fock_state(24, 2)
    a = evaluate_schedule(case.rep, s, psi)
    b = evaluate_schedule_mp(case.rep, s, psi, dps=30)
    assert b.observed_error == pytest.approx(a.observed_error, rel=1e-8)
    assert np.abs(a.final_state - b.final_state).max() < 1e-12


def test_leakage_measure():
    psi = fock_state(10, 9)
    assert leakage(psi, 2) == 1.0
    assert leakage(fock_state(10, 0), 2) == 0.0
    assert leakage(psi, 0) == 0.0


def test_doubling_r_never_hurts_beyond_leakage():
    case = cases.qho(64)
    psi = band_limited_state(64, 12, seed=2)
    prev = None
    for r in (2, 4, 8, 16, 32):
        res = evaluate_schedule(case.rep, suzuki.build(1, 2, 1.0, r, labels=case.labels), psi)
        if prev is not None:
            assert res.observed_error <= prev.observed_error + 2 * (res.leakage + prev.leakage)
        prev = res


@pytest.mark.parametrize("p,t,eps", [
    (1, 0.5, 1e-3), (1, 1.0, 1e-4), (2, 1.0, 1e-6), (3, 0.5, 1e-6), (3, 1.0, 1e-4),
])
def test_bound_domination_m32(p, t, eps):
    case = cases.qho(64)
    b = bounds.solve_segments(t, eps, p, 2, case.profile(32))
    psi = band_limited_state(64, 32, seed=p)
    res = evaluate_schedule(case.rep, suzuki.build(p, 2, t, b.r, labels=case.labels), psi, leak=case.leak)
    assert res.adjusted_error() <= b.predicted_error


def test_spin_certification():
    case = cases.spin(10)
    b = bounds.solve_segments(1.0, 1e-3, 2, 2, case.profile())
    rng = np.random.default_rng(0)
    psi = rng.normal(size=21) + 1j * rng.normal(size=21)
    res = evaluate_schedule(case.rep, suzuki.build(2, 2, 1.0, b.r, labels=case.labels), psi / np.linalg.norm(psi))
    assert res.leakage == 0.0
    assert res.observed_error <= b.predicted_error


# -- IO -------------------------------------------------------------------------

@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=12))
def test_state_csv_roundtrip(vals):
    psi = np.array(vals, dtype=complex)
    assert np.array_equal(state_from_csv(state_to_csv(psi)), psi)


def test_band_limited_state():
    psi = band_limited_state(16, 5, seed=3)
    assert abs(np.linalg.norm(psi) - 1) < 1e-14 and np.all(psi[5:] == 0)
    assert np.array_equal(psi, band_limited_state(16, 5, seed=3))
    with pytest.raises(ValueError):
        band_limited_state(4, 5)
