import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from seqrar.allocation import (
    AssignmentRng, assignment_probability, dbcd_g, next_assignment, permuted_block_burn_in, target_rho,
)
from seqrar.core import AllocationKind, Design, LookSchedule, ModelKind, ResponseModel, Scenario, TargetAllocation, TrialState
from seqrar.engine import simulate_replications
from seqrar.core import BoundarySet


def exact_g(s, r, gamma):
    """Rational evaluation of the allocation function for integer gamma."""
    s, r = Fraction(s), Fraction(r)
    a = r * (r / s) ** gamma
    b = (1 - r) * ((1 - r) / (1 - s)) ** gamma
    return a / (a + b)


def test_neyman_normal():
    assert target_rho(TargetAllocation(AllocationKind.NEYMAN_NORMAL), ResponseModel.normal(1, 1, 1, 2)) == pytest.approx(1 / 3)


def test_neyman_binary_symmetric():
    assert target_rho(TargetAllocation(AllocationKind.NEYMAN_BINARY), ResponseModel.binary(0.3, 0.3)) == 0.5


def test_rsihr_optimal():
    mpmath.mp.dps = 30
    oracle = mpmath.sqrt(0.5) / (mpmath.sqrt(0.5) + mpmath.sqrt(0.625))
    got = target_rho(TargetAllocation(AllocationKind.RSIHR_OPTIMAL), ResponseModel.binary(0.5, 0.625))
    assert got == pytest.approx(float(oracle), abs=1e-15)
    assert got == pytest.approx(0.4721, abs=5e-5)


def test_urn():
    got = target_rho(TargetAllocation(AllocationKind.URN), ResponseModel.binary(0.917, 0.745))
    assert got == pytest.approx(float(Fraction(255, 338)), abs=1e-12)
    assert got == pytest.approx(0.7544, abs=5e-5)


def test_fixed_equal():
    assert target_rho(TargetAllocation(AllocationKind.FIXED_EQUAL), ResponseModel.binary(0.1, 0.9)) == 0.5


def test_degenerate_allocation():
    with pytest.raises(ValueError, match="allocation undefined"):
        target_rho(TargetAllocation(AllocationKind.NEYMAN_NORMAL), ResponseModel.normal(0, 0.0, 0, 0.0))


@given(st.floats(0.001, 0.999), st.floats(0.001, 0.999),
       st.sampled_from([AllocationKind.NEYMAN_BINARY, AllocationKind.RSIHR_OPTIMAL, AllocationKind.URN]))
def test_target_in_unit_interval(p1, p2, kind):
    rho = target_rho(TargetAllocation(kind), ResponseModel.binary(p1, p2))
    swapped = target_rho(TargetAllocation(kind), ResponseModel.binary(p2, p1))
    assert 0.0 < rho < 1.0
    assert rho + swapped == pytest.approx(1.0, abs=1e-12)


def test_g_endpoints():
    assert dbcd_g(0.0, 0.3, 2) == 1.0
    assert dbcd_g(1.0, 0.3, 2) == 0.0


def test_g_fixed_point_example():
    assert dbcd_g(0.4, 0.4, 2) == pytest.approx(0.4, abs=1e-15)


def test_g_rational_example():
    assert exact_g(Fraction(2, 5), Fraction(1, 2), 2) == Fraction(9, 13)
    assert dbcd_g(0.4, 0.5, 2) == pytest.approx(9 / 13, abs=1e-15)
    assert dbcd_g(0.4, 0.5, 2) == pytest.approx(0.69231, abs=5e-6)


@pytest.mark.parametrize("gamma", [0, 1, 2, 5])
def test_g_fixed_point_grid(gamma):
    for r in np.arange(1, 100) / 100:
        assert abs(dbcd_g(r, r, gamma) - r) < 1e-12


def test_g_monotone_grid():
    grid = np.linspace(0.01, 0.99, 50)
    G = np.array([[dbcd_g(s, r, 2.0) for r in grid] for s in grid])
    assert np.all(np.diff(G, axis=0) < 0)  # decreasing in s
    assert np.all(np.diff(G, axis=1) > 0)  # increasing in r


def test_gamma_zero_is_constant_in_s():
    for r in (0.1, 0.33, 0.8):
        for s in np.linspace(0.01, 0.99, 25):
            assert dbcd_g(s, r, 0.0) == pytest.approx(r, abs=1e-15)


@pytest.mark.parametrize("s,r,gamma", [(0.2, 0.5, 2), (0.9, 0.1, 5), (0.45, 0.55, 3), (0.05, 0.6, 4)])
def test_g_matches_rational_oracle(s, r, gamma):
    assert dbcd_g(s, r, gamma) == pytest.approx(float(exact_g(s, r, gamma)), rel=1e-13)


def test_g_log_branch_continuity():
    # gamma * |log ratio| crosses the log-space switch within this sweep
    for s in (1e-6, 1e-9, 1 - 1e-9):
        for r in (0.2, 0.5, 0.8):
            for gamma in (2.0, 5.0, 50.0):
                v = dbcd_g(s, r, gamma)
                assert 0.0 <= v <= 1.0 and math.isfinite(v)
                oracle = mpmath.mpf(r) * (mpmath.mpf(r) / s) ** gamma
                oracle = oracle / (oracle + (1 - mpmath.mpf(r)) * ((1 - mpmath.mpf(r)) / (1 - mpmath.mpf(s))) ** gamma)
                assert v == pytest.approx(float(oracle), rel=1e-9, abs=1e-300)


def test_burn_in_balanced():
    seq = permuted_block_burn_in(25, AssignmentRng(3))
    assert len(seq) == 50 and seq.count(1) == 25 and seq.count(2) == 25


def test_burn_in_single_block_is_fair():
    firsts = [permuted_block_burn_in(1, AssignmentRng(seed))[0] for seed in range(4000)]
    assert sorted(set(map(tuple, [permuted_block_burn_in(1, AssignmentRng(s)) for s in range(20)]))) == [(1, 2), (2, 1)]
    assert abs(np.mean(np.array(firsts) == 1) - 0.5) < 3 * math.sqrt(0.25 / 4000)


def test_burn_in_reproducible():
    assert permuted_block_burn_in(25, AssignmentRng(99)) == permuted_block_burn_in(25, AssignmentRng(99))


def _state(assign, resp):
    s = TrialState()
    for a, x in zip(assign, resp):
        s.record(a, x)
    return s


def test_cr_probability_is_half_everywhere():
    d = Design.cr()
    empty = TrialState()
    assert assignment_probability(empty, d, TargetAllocation(AllocationKind.FIXED_EQUAL), ModelKind.BINARY) == 0.5
    lopsided = _state([1] * 10 + [2], [1.0] * 11)
    assert assignment_probability(lopsided, d, TargetAllocation(AllocationKind.FIXED_EQUAL), ModelKind.BINARY) == 0.5


def test_dbcd_probability_composition():
    # four arm-1 patients of ten; responses chosen so the smoothed target is exactly 1/2
    state = _state([1, 1, 1, 1, 2, 2, 2, 2, 2, 2], [1, 1, 0, 0, 1, 1, 1, 0, 0, 0])
    # smoothed p: (2+.5)/5 = .5 and (3+.5)/7 = .5 so any symmetric target is 1/2
    d = Design.dbcd(2.0, 1)
    p = assignment_probability(state, d, TargetAllocation(AllocationKind.RSIHR_OPTIMAL), ModelKind.BINARY)
    assert p == pytest.approx(9 / 13, abs=1e-12)


def test_dbcd_probability_at_target_equals_target():
    state = _state([1, 2, 1, 2], [1, 1, 0, 0])
    p = assignment_probability(state, Design.dbcd(2.0, 1), TargetAllocation(AllocationKind.URN), ModelKind.BINARY)
    assert p == pytest.approx(0.5, abs=1e-15)


def test_dbcd_before_burn_in_is_an_error():
    with pytest.raises(RuntimeError):
        next_assignment(_state([1, 2], [1, 0]), Design.dbcd(2.0, 25), TargetAllocation(AllocationKind.URN),
                        AssignmentRng(0), ModelKind.BINARY)


def test_long_run_convergence():
    sc = Scenario(ResponseModel.binary(0.5, 0.625), Design.dbcd(2.0, 25), TargetAllocation(AllocationKind.RSIHR_OPTIMAL),
                  LookSchedule((5000,)))
    rho = target_rho(sc.allocation, sc.model)
    res = simulate_replications(sc, BoundarySet((math.inf,)), 200, 41)
    dev = np.abs(res.arm1 / res.enrolled - rho)
    assert np.mean(dev < 0.03) >= 0.99
