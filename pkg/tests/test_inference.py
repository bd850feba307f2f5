import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from seqrar.core import AllocationKind, BoundarySet, Design, LookSchedule, ModelKind, ResponseModel, Scenario, TargetAllocation, TrialState
from seqrar.engine import simulate_replications
from seqrar.inference import DegenerateLookError, drift_mu, modified_mean, z_from_summaries, z_statistic


def _state(assign, resp):
    s = TrialState()
    for a, x in zip(assign, resp):
        s.record(a, float(x))
    return s


def test_modified_mean_no_data():
    assert modified_mean(0.0, 0, 0.5) == 0.5


def test_modified_mean_seven_of_ten():
    assert modified_mean(7, 10, 0.5) == pytest.approx(7.5 / 11)
    assert modified_mean(7, 10, 0.5) == pytest.approx(0.6818, abs=5e-5)


def test_modified_mean_consistency():
    assert modified_mean(0.3 * 1e9, 10**9, 0.5) == pytest.approx(0.3, abs=1e-8)


def test_identical_means_give_zero():
    s = _state([1, 1, 1, 2, 2, 2], [1.0, 2.0, 3.0, 0.0, 2.0, 4.0])
    assert z_statistic(s, ModelKind.NORMAL).z_value == 0.0


def test_binary_thirty_of_fifty_vs_twenty_of_fifty():
    s = _state([1] * 50 + [2] * 50, [1] * 30 + [0] * 20 + [1] * 20 + [0] * 30)
    z = z_statistic(s, ModelKind.BINARY).z_value
    # independent two-proportion z (unpooled) via explicit formula
    p1, p2 = 0.6, 0.4
    oracle = (p1 - p2) / math.sqrt(p1 * (1 - p1) / 50 + p2 * (1 - p2) / 50)
    assert z == pytest.approx(oracle, rel=1e-12)
    assert z == pytest.approx(2.041, abs=5e-4)


def test_normal_z_matches_welch_numerator_and_denominator():
    rng = np.random.default_rng(5)
    a, b = rng.normal(1, 1, 40), rng.normal(1.5, 2, 60)
    s = _state([1] * 40 + [2] * 60, np.concatenate([a, b]))
    oracle = (a.mean() - b.mean()) / math.sqrt(a.var(ddof=1) / 40 + b.var(ddof=1) / 60)
    assert z_statistic(s, ModelKind.NORMAL).z_value == pytest.approx(oracle, rel=1e-10)
    # scipy's Welch statistic is the same quantity
    assert oracle == pytest.approx(stats.ttest_ind(a, b, equal_var=False).statistic, rel=1e-10)


def test_b_value():
    s = _state([1] * 50 + [2] * 50, [1] * 30 + [0] * 20 + [1] * 20 + [0] * 30)
    stat = z_statistic(s, ModelKind.BINARY, n_max=500)
    assert stat.t == 0.2
    assert stat.b_value == math.sqrt(0.2) * stat.z_value


def test_zero_variance_is_floored():
    s = _state([1, 1, 2, 2], [1, 1, 1, 1])
    stat = z_statistic(s, ModelKind.BINARY)
    assert stat.floored and stat.z_value == 0.0


def test_empty_arm_is_degenerate():
    with pytest.raises(DegenerateLookError, match="degenerate variance"):
        z_from_summaries(ModelKind.BINARY, 0, 0, 0, 3, 1, 1)


@given(st.lists(st.tuples(st.sampled_from([1, 2]), st.floats(-10, 10)), min_size=6, max_size=40))
def test_sign_symmetry(rows):
    arms = [a for a, _ in rows]
    if arms.count(1) < 2 or arms.count(2) < 2:
        return
    xs = [x for _, x in rows]
    z = z_statistic(_state(arms, xs), ModelKind.NORMAL).z_value
    zs = z_statistic(_state([3 - a for a in arms], xs), ModelKind.NORMAL).z_value
    assert zs == -z


def test_drift_null():
    assert drift_mu(ResponseModel.normal(1, 1, 1, 2), 1 / 3) == 0.0


def test_drift_normal_example():
    assert drift_mu(ResponseModel.normal(1, 1, 1.4, 2), 1 / 3) == pytest.approx(-0.4 / 3, rel=1e-12)


def test_drift_binary_example():
    rho = math.sqrt(0.5) / (math.sqrt(0.5) + math.sqrt(0.625))
    mu = drift_mu(ResponseModel.binary(0.5, 0.625), rho)
    assert mu == pytest.approx(-0.1267, abs=5e-5)
    power = stats.norm.cdf(abs(mu) * math.sqrt(500) - 1.959964)
    assert power == pytest.approx(0.809, abs=1e-3)


@pytest.mark.slow
def test_final_z_is_standard_normal_under_null():
    sc = Scenario(ResponseModel.normal(1, 1, 1, 2), Design.dbcd(2.0, 25), TargetAllocation(AllocationKind.NEYMAN_NORMAL),
                  LookSchedule((100, 250, 500)))
    res = simulate_replications(sc, BoundarySet((math.inf,) * 3), 5000, 2024, stop_early=False)
    ks = stats.kstest(res.z[:, -1], "norm").statistic
    assert ks < 0.03
