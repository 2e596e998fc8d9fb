import pytest

from core.bootstrap import CostParams, ExperimentConfig, StrategyKind
from core.costmodel import (
    PlanQuery,
    comm_reduction,
    plan,
    predict,
    predict_all,
    sweep,
)
from core.errors import ConfigurationError

PARAMS = CostParams(bandwidth=1e8, compute_speed=1e8)
LARGE = ExperimentConfig(dataset_size=10_000, num_resamples=1000, num_processes=4, seed=205)


def test_dbsr_prediction_large_case():
    b = predict(StrategyKind.DBSR, LARGE, PARAMS)
    assert b.bytes_data_out == 120_000
    assert b.bytes_results_back == 30_000_000
    assert b.comm_bytes == 30_120_000
    assert b.peak_floats_root == 2_510_000
    assert b.peak_floats_worker == 2_510_000


def test_dbsa_prediction_large_case():
    b = predict(StrategyKind.DBSA, LARGE, PARAMS)
    assert b.comm_bytes == 120_024
    assert b.bytes_results_back == 24


def test_ddrs_prediction_large_case():
    b = predict(StrategyKind.DDRS, LARGE, PARAMS)
    assert b.bytes_data_out == 0
    assert b.bytes_results_back == 12_000
    assert b.bytes_verification == 12_000
    assert b.peak_floats_root == 2504
    assert b.peak_floats_worker == 2502
    assert b.points_root == 10_000_000


def test_fsd_prediction_large_case():
    b = predict(StrategyKind.FSD, LARGE, PARAMS)
    assert b.bytes_data_out == 30_000_000
    assert b.bytes_results_back == 3000
    assert b.peak_floats_root == 10_010_000
    assert b.peak_floats_worker == 2_500_000


@pytest.mark.parametrize("kind", list(StrategyKind))
def test_single_process_has_no_comm_time(kind):
    config = ExperimentConfig(100, 40, 1, 205)
    b = predict(kind, config, PARAMS)
    assert b.comm_bytes == 0
    assert b.t_comm == 0.0
    assert b.peak_floats_worker == 0


def test_times_follow_bytes_and_points():
    b = predict(StrategyKind.DBSA, LARGE, PARAMS)
    assert b.t_comm == pytest.approx(120_024 / 1e8)
    assert b.t_comp == pytest.approx(250 * 10_000 / 1e8)
    assert b.total_time == pytest.approx(b.t_comm + b.t_comp)


def test_ddrs_parallel_compute_time():
    b = predict(StrategyKind.DDRS, LARGE, PARAMS)
    assert b.t_comp == pytest.approx(1000 * 10_000 / 1e8)
    assert b.t_comp_parallel == pytest.approx(1000 * 10_000 / (4 * 1e8))


def test_dbsa_comm_independent_of_n():
    small = ExperimentConfig(10_000, 4, 4, 205)
    assert (
        predict(StrategyKind.DBSA, small, PARAMS).comm_bytes
        == predict(StrategyKind.DBSA, LARGE, PARAMS).comm_bytes
    )


def test_dbsr_dominates_dbsa_in_bytes():
    for D in (16, 100, 10_000):
        for N in (4, 100, 1000):
            for P in (2, 4):
                config = ExperimentConfig(D, N, P, 1)
                dbsr = predict(StrategyKind.DBSR, config, PARAMS).comm_bytes
                dbsa = predict(StrategyKind.DBSA, config, PARAMS).comm_bytes
                assert dbsr >= dbsa


def test_dbsa_always_cheaper_than_dbsr_in_time():
    # share * D > 2 whenever D >= 3, so returned stats undercut returned samples
    for D in (3, 10, 1000):
        for P in (2, 4):
            for N in (P, 10 * P, 100 * P):
                config = ExperimentConfig(D, N, P, 1)
                dbsr = predict(StrategyKind.DBSR, config, PARAMS)
                dbsa = predict(StrategyKind.DBSA, config, PARAMS)
                assert dbsa.t_comm < dbsr.t_comm


def test_ddrs_bytes_independent_of_d_while_dbsa_grows():
    small = ExperimentConfig(100, 40, 4, 1)
    large = ExperimentConfig(10_000, 40, 4, 1)
    assert (
        predict(StrategyKind.DDRS, small, PARAMS).comm_bytes
        == predict(StrategyKind.DDRS, large, PARAMS).comm_bytes
    )
    dbsa_small = predict(StrategyKind.DBSA, small, PARAMS).comm_bytes
    dbsa_large = predict(StrategyKind.DBSA, large, PARAMS).comm_bytes
    assert dbsa_large - 24 == 100 * (dbsa_small - 24)


def test_ddrs_not_applicable_when_p_does_not_divide_d():
    config = ExperimentConfig(10, 4, 4, 1)
    with pytest.raises(ConfigurationError):
        predict(StrategyKind.DDRS, config, PARAMS)
    assert StrategyKind.DDRS not in predict_all(config, PARAMS)
    assert StrategyKind.DBSA in predict_all(config, PARAMS)


def test_comm_reduction_relative_to_dbsr():
    assert comm_reduction(StrategyKind.DBSR, LARGE, PARAMS) == 1.0
    assert comm_reduction(StrategyKind.DBSA, LARGE, PARAMS) == pytest.approx(30_120_000 / 120_024)
    assert comm_reduction(StrategyKind.DBSA, ExperimentConfig(100, 4, 1, 1), PARAMS) is None


def test_plan_with_generous_cap_picks_dbsa():
    result = plan(PlanQuery(LARGE, PARAMS, memory_cap_floats=10_000_000))
    assert result.chosen is StrategyKind.DBSA
    assert not result.feasible[StrategyKind.FSD]
    assert result.feasible[StrategyKind.DBSR]
    assert "DBSA" in result.rationale


def test_plan_with_tight_cap_picks_ddrs():
    result = plan(PlanQuery(LARGE, PARAMS, memory_cap_floats=3000))
    assert result.chosen is StrategyKind.DDRS
    assert result.breakdown.peak_floats_root == 2504
    assert [k for k, ok in result.feasible.items() if ok] == [StrategyKind.DDRS]


def test_plan_with_tiny_cap_is_infeasible():
    result = plan(PlanQuery(LARGE, PARAMS, memory_cap_floats=100))
    assert result.chosen is None
    assert not result.is_feasible
    for kind in StrategyKind:
        assert kind.name in result.rationale


def test_plan_ties_prefer_dbsa():
    # P = 1: every strategy moves nothing; DBSA and DBSR tie on time
    config = ExperimentConfig(100, 4, 1, 1)
    result = plan(PlanQuery(config, PARAMS, memory_cap_floats=10_000))
    assert result.chosen is StrategyKind.DBSA


def test_plan_never_chooses_over_cap():
    for cap in (50, 500, 5000, 50_000, 5_000_000, 50_000_000):
        result = plan(PlanQuery(LARGE, PARAMS, memory_cap_floats=cap))
        if result.chosen is not None:
            assert result.breakdown.peak_floats <= cap


def test_plan_result_serializes():
    doc = plan(PlanQuery(LARGE, PARAMS, memory_cap_floats=3000)).to_dict()
    assert doc["chosen"] == "ddrs"
    assert doc["feasible"]["dbsa"] is False
    assert set(doc["breakdowns"]) == {"fsd", "dbsr", "dbsa", "ddrs"}


def test_plan_query_rejects_nonpositive_cap():
    with pytest.raises(ConfigurationError):
        PlanQuery(LARGE, PARAMS, memory_cap_floats=0)


def test_breakdown_carries_complexity_labels():
    doc = predict(StrategyKind.DDRS, LARGE, PARAMS).to_dict()
    assert doc["kind"] == "ddrs"
    assert doc["communication_complexity"] == "O(NP)"
    assert doc["memory_complexity"] == "O(D/P)"


def test_sweep_over_n_skips_invalid_points():
    base = ExperimentConfig(100, 40, 4, 1)
    rows = sweep(base, PARAMS, "N", [4, 6, 8], kinds=[StrategyKind.DBSR])
    assert [row["N"] for row in rows] == [4, 8]
    assert rows[0]["comm_bytes"] == 4 * 100 * 3 + 4 * 100 * 1 * 3


def test_sweep_rejects_unknown_axis():
    with pytest.raises(ConfigurationError):
        sweep(LARGE, PARAMS, "B", [1])
