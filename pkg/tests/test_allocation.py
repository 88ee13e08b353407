import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from bitalloc.allocation import (
    AllocationError,
    BitAllocation,
    PowerModel,
    RelaxedAllocation,
    adc_power,
    allocate_bits,
    brute_force_allocation,
    kkt_verify,
    power_budget,
    relaxed_msqe,
    solve_relaxed,
    solve_relaxed_numerical,
    total_msqe,
    tradeoff_rel,
    uniform_allocation,
)
from bitalloc.beamspace import RfSnrProfile
from oracles import enumerate_allocations, literal_algorithm

MODEL = PowerModel()


def profile_from_one_plus_snr(values, n0=1.0):
    return RfSnrProfile.from_snr(np.asarray(values, dtype=float) - 1.0, noise_power=n0)


def random_profile(rng, n):
    snr_db = rng.uniform(-10, 30, n)
    return RfSnrProfile.from_snr(10 ** (snr_db / 10), noise_power=rng.uniform(0.01, 10))


profiles = st.integers(1, 40).flatmap(
    lambda n: st.lists(st.floats(-10, 30), min_size=n, max_size=n).map(
        lambda db: RfSnrProfile.from_snr(10 ** (np.array(db) / 10))
    )
)


# -- power model ------------------------------------------------------------


def test_adc_power_values():
    assert adc_power(MODEL, 0) == 0.0
    assert adc_power(MODEL, -3) == 0.0
    assert adc_power(MODEL, 1) == pytest.approx(9.88e-4, rel=1e-12)


@pytest.mark.parametrize("b", range(1, 10))
def test_adc_power_doubles(b):
    assert adc_power(MODEL, b + 1) == pytest.approx(2 * adc_power(MODEL, b), rel=1e-14)


def test_power_budget():
    assert power_budget(MODEL, 256, 1) == pytest.approx(0.252928, rel=1e-12)
    assert power_budget(MODEL, 256, 2) == pytest.approx(2 * power_budget(MODEL, 256, 1))
    assert power_budget(MODEL, 512, 3) == pytest.approx(2 * power_budget(MODEL, 256, 3))
    with pytest.raises(ValueError):
        power_budget(MODEL, 4, 0)
    with pytest.raises(ValueError):
        power_budget(MODEL, 4, 1.5)


def test_power_model_validation():
    with pytest.raises(ValueError):
        PowerModel(c=0)


# -- relaxed solution -------------------------------------------------------


def test_relaxed_worked_example():
    prof = profile_from_one_plus_snr([1, 27])
    r = solve_relaxed(prof, 2)
    np.testing.assert_allclose(r.b_hat, [1.0, 2 + np.log2(1.5)], atol=1e-12)
    assert r.b_hat[1] == pytest.approx(2.58496, abs=1e-5)
    assert np.sum(np.exp2(r.b_hat)) == pytest.approx(8.0, rel=1e-12)
    assert r.budget_used == pytest.approx(power_budget(MODEL, 2, 2), rel=1e-12)


@pytest.mark.parametrize("b_bar", [1, 2, 3])
def test_relaxed_uniform_profile(b_bar):
    r = solve_relaxed(RfSnrProfile.from_snr(np.full(7, 3.0)), b_bar)
    np.testing.assert_allclose(r.b_hat, b_bar, atol=1e-12)


@pytest.mark.parametrize("snr", [0.0, 1e-3, 50.0, 1e4])
def test_relaxed_single_branch(snr):
    assert solve_relaxed(RfSnrProfile.from_snr([snr]), 2).b_hat[0] == pytest.approx(2.0, abs=1e-12)


def test_relaxed_rejects_nonfinite():
    bad = RfSnrProfile(sigma_sq=np.array([1.0, np.inf]), snr_rf=np.array([0.0, np.inf]), noise_power=1.0)
    with pytest.raises(ValueError):
        solve_relaxed(bad, 1)
    with pytest.raises(ValueError):
        solve_relaxed_numerical(bad, 1)


@given(profiles, st.integers(1, 3))
def test_budget_equality(prof, b_bar):
    r = solve_relaxed(prof, b_bar)
    n = prof.n
    assert np.sum(np.exp2(r.b_hat)) == pytest.approx(n * 2.0**b_bar, rel=1e-9)


@given(profiles, st.floats(1e-6, 1e6))
def test_scale_invariance(prof, scale):
    scaled = RfSnrProfile(sigma_sq=prof.sigma_sq * scale, snr_rf=prof.snr_rf, noise_power=prof.noise_power * scale)
    np.testing.assert_allclose(solve_relaxed(scaled, 2).b_hat, solve_relaxed(prof, 2).b_hat, atol=1e-12)


@given(profiles)
def test_argsort_matches_snr(prof):
    b_hat = solve_relaxed(prof, 1).b_hat
    snr = prof.snr_rf
    # equal SNR -> equal bits; larger SNR -> strictly more bits
    order = np.argsort(snr, kind="stable")
    assert np.all(np.diff(b_hat[order]) >= -1e-12)
    strictly = np.diff(snr[order]) > 1e-9 * np.maximum(1.0, snr[order][1:])
    assert np.all(np.diff(b_hat[order])[strictly] > 0)


@given(profiles, st.integers(0, 39), st.floats(0.01, 100))
def test_monotone_in_own_snr(prof, idx, bump):
    assume(prof.n >= 2 and idx < prof.n)
    snr = prof.snr_rf.copy()
    before = solve_relaxed(prof, 2).b_hat[idx]
    snr[idx] += bump
    after = solve_relaxed(RfSnrProfile.from_snr(snr), 2).b_hat[idx]
    assert after > before


# -- KKT ---------------------------------------------------------------------


def test_kkt_residual_of_closed_form(rng):
    for n in (1, 2, 16, 256):
        prof = random_profile(rng, n)
        for b_bar in (1, 2, 3):
            r = solve_relaxed(prof, b_bar)
            assert kkt_verify(r, prof, b_bar) <= 1e-9


def test_kkt_detects_perturbation(rng):
    prof = random_profile(rng, 16)
    r = solve_relaxed(prof, 2)
    b_hat = r.b_hat.copy()
    b_hat[3] += 0.1
    bumped = RelaxedAllocation(b_hat=b_hat, mu1=r.mu1, budget_used=r.budget_used)
    assert kkt_verify(bumped, prof, 2) > 1e-3


@pytest.mark.parametrize("b_bar", [1, 2, 3])
def test_kkt_uniform_multiplier(b_bar):
    v = 2.5
    prof = RfSnrProfile.from_snr(np.full(5, v - 1.0))
    r = solve_relaxed(prof, b_bar)
    x = 2.0 ** (-2 * b_bar)
    assert r.mu1 == pytest.approx(2 * v * x**1.5, rel=1e-12)


# -- numerical oracle --------------------------------------------------------


def test_numerical_oracle_agrees(rng):
    for _ in range(100):
        n = int(rng.integers(2, 257))
        b_bar = int(rng.integers(1, 4))
        prof = random_profile(rng, n)
        closed = solve_relaxed(prof, b_bar)
        numeric = solve_relaxed_numerical(prof, b_bar)
        assert np.max(np.abs(closed.b_hat - numeric.b_hat)) <= 1e-6
        assert numeric.mu1 == pytest.approx(closed.mu1, rel=1e-9)


def test_numerical_oracle_trivial_cases():
    np.testing.assert_allclose(solve_relaxed_numerical(RfSnrProfile.from_snr(np.full(9, 4.0)), 3).b_hat, 3, atol=1e-9)
    np.testing.assert_allclose(solve_relaxed_numerical(RfSnrProfile.from_snr([12.0]), 2).b_hat, 2, atol=1e-9)
    with pytest.raises(ValueError):
        solve_relaxed_numerical(RfSnrProfile.from_snr([1.0]), 2, tol=0)


# -- trade-off ---------------------------------------------------------------


def test_tradeoff_values():
    assert tradeoff_rel(1.5, 1.0) == pytest.approx((0.25 - 0.125) / (2 * np.sqrt(2) - 2), rel=1e-12)
    assert tradeoff_rel(1.5, 1.0) == pytest.approx(0.1508883, abs=1e-7)
    # 27 (4^-2 - 4^-2.585) / (2^2.585 - 4), evaluated with mpmath at 30 digits
    assert tradeoff_rel(2.585, 27.0) == pytest.approx(0.468732942757498, rel=1e-12)


@given(st.floats(0.01, 20).filter(lambda b: abs(b - round(b)) > 1e-6), st.floats(1e-3, 1e3))
def test_tradeoff_linear_in_sigma(b, s2):
    assert tradeoff_rel(b, 2 * s2) == pytest.approx(2 * tradeoff_rel(b, s2), rel=1e-12)


@pytest.mark.parametrize("b", [0.0, -0.5, 2.0, 3.0 + 1e-12])
def test_tradeoff_rejects_bad_input(b):
    with pytest.raises(ValueError):
        tradeoff_rel(b, 1.0)


# -- integer mapping ---------------------------------------------------------


def test_allocate_worked_example():
    prof = profile_from_one_plus_snr([1, 27])
    a = allocate_bits(prof, MODEL, 2)
    np.testing.assert_array_equal(a.bits, [1, 2])
    assert a.total_power == pytest.approx(6 * MODEL.unit)
    assert a.n_inactive == 0


def test_allocate_integer_relaxed_is_untouched():
    # uniform profile: b_hat == b_bar everywhere, ceil power == budget exactly
    a = allocate_bits(RfSnrProfile.from_snr(np.full(256, 7.0)), MODEL, 3)
    np.testing.assert_array_equal(a.bits, np.full(256, 3))
    assert a.total_power <= power_budget(MODEL, 256, 3)


def test_allocate_near_integer_not_rounded_up():
    r = RelaxedAllocation(b_hat=np.array([1.0 + 1e-12, 2.0 - 1e-12, 1.0]), mu1=1.0, budget_used=0.0)
    prof = RfSnrProfile.from_snr([1.0, 1.0, 1.0])
    np.testing.assert_array_equal(allocate_bits(prof, MODEL, 2, relaxed=r).bits, [1, 2, 1])


def test_allocate_tie_breaks_to_lowest_index():
    # identical branches: same T_rel, only one decrement needed
    r = RelaxedAllocation(b_hat=np.array([1.5, 1.5, 1.5]), mu1=1.0, budget_used=0.0)
    prof = RfSnrProfile.from_snr([3.0, 3.0, 3.0])
    a = allocate_bits(prof, MODEL, 1, budget=10 * MODEL.unit, relaxed=r)
    np.testing.assert_array_equal(a.bits, [1, 2, 2])


def test_allocate_matches_literal_algorithm(rng):
    for _ in range(300):
        n = int(rng.integers(1, 65))
        b_bar = int(rng.integers(1, 4))
        prof = random_profile(rng, n)
        r = solve_relaxed(prof, b_bar)
        expected = literal_algorithm(list(r.b_hat), list(prof.sigma_sq), n * 2**b_bar * (1 + 1e-12))
        np.testing.assert_array_equal(allocate_bits(prof, MODEL, b_bar, relaxed=r).bits, expected)


def test_allocate_decrements_each_branch_at_most_once(rng):
    for _ in range(200):
        prof = random_profile(rng, 32)
        r = solve_relaxed(prof, 2)
        a = allocate_bits(prof, MODEL, 2, relaxed=r)
        ceil = np.maximum(np.ceil(r.b_hat - 1e-9), 0)
        assert np.all((ceil - a.bits >= 0) & (ceil - a.bits <= 1))


def test_allocate_guard_when_unreachable():
    r = RelaxedAllocation(b_hat=np.array([3.0, 3.0]), mu1=1.0, budget_used=0.0)
    with pytest.raises(AllocationError):
        allocate_bits(RfSnrProfile.from_snr([1.0, 1.0]), MODEL, 1, relaxed=r)


@settings(max_examples=500)
@given(profiles, st.integers(1, 3))
def test_allocate_never_exceeds_budget(prof, b_bar):
    a = allocate_bits(prof, MODEL, b_bar)
    assert a.total_power <= power_budget(MODEL, prof.n, b_bar) * (1 + 1e-12)
    assert np.all(a.bits >= 0)
    assert a.n_inactive == np.count_nonzero(a.bits == 0)


def test_uniform_allocation_power():
    u = uniform_allocation(256, MODEL, 2)
    assert u.total_power == pytest.approx(power_budget(MODEL, 256, 2), rel=1e-12)
    assert u.n_inactive == 0


# -- brute force -------------------------------------------------------------


def test_brute_force_worked_example():
    # v = [1, 27], budget 8 c W: switching branch 0 off and spending 3 bits on
    # branch 1 gives 1 + 27 K / 64 = 2.148, below [2, 2] (28 K / 16 = 4.761)
    prof = profile_from_one_plus_snr([1, 27])
    bf = brute_force_allocation(prof, MODEL, 2, 3)
    np.testing.assert_array_equal(bf.bits, [0, 3])
    assert total_msqe(bf, prof) < total_msqe([2, 2], prof) < total_msqe([1, 2], prof)
    assert total_msqe(bf, prof) < total_msqe(allocate_bits(prof, MODEL, 2), prof)


@pytest.mark.parametrize("b_bar,b_max", [(1, 3), (2, 1), (3, 6)])
def test_brute_force_single_branch(b_bar, b_max):
    bf = brute_force_allocation(RfSnrProfile.from_snr([5.0]), MODEL, b_bar, b_max)
    assert bf.bits[0] == min(b_max, b_bar)


def test_brute_force_matches_enumeration(rng):
    for _ in range(30):
        n = int(rng.integers(1, 5))
        b_bar = int(rng.integers(1, 4))
        prof = random_profile(rng, n)
        bits, cost = enumerate_allocations(list(prof.sigma_sq), b_bar, 4)
        bf = brute_force_allocation(prof, MODEL, b_bar, 4)
        np.testing.assert_array_equal(bf.bits, bits)
        assert total_msqe(bf, prof) == pytest.approx(cost, rel=1e-12)
        assert bf.total_power <= power_budget(MODEL, n, b_bar)


def test_brute_force_cap():
    with pytest.raises(AllocationError):
        brute_force_allocation(RfSnrProfile.from_snr(np.ones(12)), MODEL, 1, 6, max_points=1000)


def test_brute_force_upper_bounds_algorithm(rng):
    for _ in range(100):
        n = int(rng.integers(2, 6))
        b_bar = int(rng.integers(1, 3))
        prof = random_profile(rng, n)
        alg = allocate_bits(prof, MODEL, b_bar)
        if alg.bits.max() > 5:
            continue
        bf = brute_force_allocation(prof, MODEL, b_bar, 5)
        assert total_msqe(bf, prof) <= total_msqe(alg, prof) * (1 + 1e-12)


# -- objective ---------------------------------------------------------------


def test_total_msqe_values():
    prof = RfSnrProfile.from_snr([0.0, 26.0])
    assert total_msqe(np.zeros(2, dtype=int), prof) == pytest.approx(28.0)
    assert total_msqe([1, 2], prof) == pytest.approx(5.271354402305696, rel=1e-12)


def test_total_msqe_additive(rng):
    prof = random_profile(rng, 10)
    bits = rng.integers(0, 6, 10)
    left = RfSnrProfile.from_snr(prof.snr_rf[:4], prof.noise_power)
    right = RfSnrProfile.from_snr(prof.snr_rf[4:], prof.noise_power)
    assert total_msqe(bits, prof) == pytest.approx(total_msqe(bits[:4], left) + total_msqe(bits[4:], right), rel=1e-12)


def test_total_msqe_length_mismatch():
    with pytest.raises(ValueError):
        total_msqe([1, 2, 3], RfSnrProfile.from_snr([1.0, 2.0]))


def test_relaxed_msqe_uniform():
    prof = RfSnrProfile.from_snr(np.full(4, 1.0))
    r = solve_relaxed(prof, 2)
    assert relaxed_msqe(r, prof) == pytest.approx(total_msqe(np.full(4, 2), prof), rel=1e-12)


def test_bit_allocation_rejects_negative():
    with pytest.raises(ValueError):
        BitAllocation.from_bits([1, -1], MODEL)
