import json

from hypothesis import given, strategies as st

from seqrar.core import (
    AllocationKind, Design, LookSchedule, ResponseModel, Scenario, SpendingKind, SpendingSpec,
    TargetAllocation, TrialState, validate_scenario,
)
from seqrar.scenarios import expand

LOOKS = LookSchedule((100, 250, 500))


def test_reference_binary_scenario_is_valid():
    model = ResponseModel.binary(0.5, 0.625)
    assert validate_scenario(model, Design.dbcd(burn_in_per_arm=25), LOOKS,
                             TargetAllocation(AllocationKind.RSIHR_OPTIMAL)) == []


def test_p_on_boundary_rejected():
    errs = validate_scenario(ResponseModel.binary(0.0, 0.5), Design.cr(), LOOKS,
                             TargetAllocation(AllocationKind.URN))
    assert any("p1 out of (0,1)" in e for e in errs)


def test_burn_in_must_precede_first_look():
    errs = validate_scenario(ResponseModel.binary(0.5, 0.6), Design.dbcd(burn_in_per_arm=60), LOOKS,
                             TargetAllocation(AllocationKind.URN))
    assert "burn-in 120 >= first look 100" in errs


def test_all_violations_reported_together():
    errs = validate_scenario(ResponseModel.normal(0, -1, 0, 0), Design.dbcd(gamma=-1, burn_in_per_arm=60),
                             LookSchedule((100, 50)), TargetAllocation(AllocationKind.URN),
                             remaining_patient_policy=True)
    assert len(errs) >= 5
    assert "looks not increasing" in errs


def test_failures_on_normal_model_is_an_error():
    errs = validate_scenario(ResponseModel.normal(1, 1, 1, 2), Design.dbcd(), LOOKS,
                             TargetAllocation(AllocationKind.NEYMAN_NORMAL), remaining_patient_policy=True)
    assert any("remaining_patient_policy" in e for e in errs)


def test_validate_is_pure():
    args = (ResponseModel.binary(0.0, 2.0), Design.dbcd(burn_in_per_arm=60), LOOKS,
            TargetAllocation(AllocationKind.URN))
    assert validate_scenario(*args) == validate_scenario(*args)


def test_schedule_times():
    assert LOOKS.times == (0.2, 0.5, 1.0)


def test_trial_state_bookkeeping():
    st_ = TrialState()
    for arm, x in [(1, 1.0), (2, 0.0), (1, 0.0), (2, 1.0), (2, 1.0)]:
        st_.record(arm, x)
    assert st_.counts[0] + st_.counts[1] == st_.m == len(st_.responses)
    for j in (1, 2):
        xs = [x for a, x in zip(st_.assignments, st_.responses) if a == j]
        assert st_.sums[j - 1] == sum(xs)
        assert st_.sumsq[j - 1] == sum(x * x for x in xs)


probs = st.floats(0.01, 0.99)
binary_scenarios = st.builds(
    lambda p1, p2, gamma, n0, alloc, seed, policy, alpha: Scenario(
        ResponseModel.binary(p1, p2), Design.dbcd(gamma, n0, (0.5, 0.5)), TargetAllocation(alloc),
        LookSchedule((100, 250, 500)), SpendingSpec(SpendingKind.LINEAR, alpha), 100, seed, policy,
    ),
    probs, probs, st.floats(0, 5), st.integers(1, 49),
    st.sampled_from([AllocationKind.URN, AllocationKind.RSIHR_OPTIMAL, AllocationKind.NEYMAN_BINARY]),
    st.integers(0, 2**63 - 1), st.booleans(), st.floats(0.001, 0.2),
)


@given(binary_scenarios)
def test_round_trip_through_json(sc):
    back = Scenario.from_dict(json.loads(json.dumps(sc.to_dict())))
    assert back == sc


@given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(-5, 5), st.floats(0.1, 5))
def test_round_trip_normal_cr(m1, s1, m2, s2):
    sc = Scenario(ResponseModel.normal(m1, s1, m2, s2), Design.cr(), TargetAllocation(AllocationKind.FIXED_EQUAL),
                  LookSchedule((10, 20)), SpendingSpec(SpendingKind.FIXED, values=(2.5, 2.0), label="x"))
    assert Scenario.from_dict(json.loads(json.dumps(sc.to_dict()))) == sc


def test_table_files_expand(tables_dir):
    for path in sorted(tables_dir.glob("table*.json")):
        rows = expand(json.loads(path.read_text()))
        assert rows and all(r.scenario_id == path.stem for r in rows)
