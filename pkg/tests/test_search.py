import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asnn import tables
from asnn.dataset import AugmentConfig, records_from_table
from asnn.model import AsnnConfig
from asnn.search import (
    IterationLog,
    LoopConfig,
    RealTrainer,
    SearchError,
    Strategy,
    TabularOracle,
    asnn_suggest,
    compare_strategies,
    evaluate_on_oracle,
    iteration_seeds,
    run_asnn_search,
    run_random_search,
)
from asnn.dataset import AsnnDataset
from asnn.target import Architecture, EvalBudget, make_synthetic

FAST = LoopConfig(max_iterations=3, augment=AugmentConfig(2000), asnn=AsnnConfig(epochs=3))


@pytest.fixture(scope="module")
def oracle2():
    return TabularOracle(tables.TABLE_2LAYER)


@pytest.fixture(scope="module")
def still2():
    return TabularOracle(tables.TABLE_2LAYER, noise_scale=0.0)


@pytest.fixture(scope="module")
def table1():
    return records_from_table(tables.TABLE_2LAYER)


def test_oracle_on_grid_noise_free(still2):
    res = evaluate_on_oracle(still2, Architecture((256, 16)), 10, seed=1)
    assert all(a == pytest.approx(0.98310, abs=5e-6) for a in res.accuracies)
    still3 = TabularOracle(tables.TABLE_3LAYER, noise_scale=0.0)
    res3 = still3.evaluate(Architecture((16, 16, 16)), 10, seed=0)
    assert all(a == pytest.approx(0.93763, abs=5e-6) for a in res3.accuracies)


def test_oracle_log2_midpoint(still2):
    # exactly halfway between 64 and 128 in log2 space
    assert still2.mean_at((64 * math.sqrt(2), 64)) == pytest.approx((0.97663 + 0.98025) / 2, abs=5e-6)
    assert still2.mean_at((91, 64)) == pytest.approx(0.97844, abs=5e-5)


def test_oracle_clamps_to_hull(still2):
    assert still2.mean_at((4096, 16)) == still2.mean_at((256, 16))
    assert still2.mean_at((1, 1)) == still2.mean_at((16, 16))


def test_oracle_std_is_sample_std(still2):
    row = tables.TABLE_2LAYER[0]
    assert still2.std_at(row.widths) == pytest.approx(np.std(row.accuracies, ddof=1), rel=1e-12)


def test_oracle_depth_mismatch(oracle2):
    with pytest.raises(ValueError):
        oracle2.evaluate(Architecture((16, 16, 16)), 10, 0)


def test_oracle_noise_is_seeded(oracle2):
    a = oracle2.evaluate(Architecture((100, 30)), 10, 4)
    assert a == oracle2.evaluate(Architecture((100, 30)), 10, 4)
    assert a != oracle2.evaluate(Architecture((100, 30)), 10, 5)
    assert len(set(a.accuracies)) > 1


@settings(deadline=None, max_examples=50)
@given(st.integers(1, 4096), st.integers(1, 4096))
def test_interpolated_mean_within_grid_range(w1, w2):
    still = TabularOracle(tables.TABLE_2LAYER, noise_scale=0.0)
    means = [r.mean for r in tables.TABLE_2LAYER]
    assert min(means) - 1e-5 <= still.mean_at((w1, w2)) <= max(means) + 1e-5


def test_loop_guard_stops_before_first_round(oracle2, table1):
    cfg = replace(FAST, target_mean_accuracy=0.98)
    assert run_asnn_search(cfg, table1, oracle2) == []


def test_asnn_search_shape_and_invariants(oracle2, table1):
    cfg = replace(FAST, max_iterations=5, seed=11)
    logs = run_asnn_search(cfg, table1, oracle2)
    assert len(logs) == 5
    assert [l.record_count for l in logs] == [26, 27, 28, 29, 30]
    bests = [l.best_so_far for l in logs]
    assert bests == sorted(bests)
    assert bests[-1] == max(l.trial.mean for l in logs)
    for l in logs:
        assert all(1 <= w <= 4096 for w in l.architecture)
        assert all(0 <= a <= 1 for a in l.trial.accuracies)
        assert len(l.prediction) == 2


def test_asnn_search_replays_identically(oracle2, table1):
    cfg = replace(FAST, seed=5)
    first = run_asnn_search(cfg, table1, oracle2)
    second = run_asnn_search(cfg, table1, oracle2)
    assert [l.to_dict() for l in first] == [l.to_dict() for l in second]
    # replay a single round from its logged seeds and the records that preceded it
    ds = AsnnDataset(list(table1))
    ds.append_trial(first[0].trial)
    pred, arch, _ = asnn_suggest(ds, cfg, first[1].seeds)
    assert pred == first[1].prediction and arch == first[1].architecture
    assert first[1].seeds == iteration_seeds(cfg.seed, 1)


def test_log_dict_round_trip(oracle2, table1):
    log = run_asnn_search(replace(FAST, max_iterations=1), table1, oracle2)[0]
    assert IterationLog.from_dict(log.to_dict()) == log


def test_backend_failure_carries_iteration(table1):
    class Broken:
        def evaluate(self, arch, trials, seed):
            raise RuntimeError("boom")

    with pytest.raises(SearchError, match="iteration 0"):
        run_asnn_search(FAST, table1, Broken())


def test_real_backend_with_short_trials(table1):
    data = make_synthetic(0, classes=3, dim=10, n_train=300, n_test=100)
    backend = RealTrainer(data, EvalBudget(trials=2, epochs=1))
    cfg = replace(FAST, max_iterations=1, trials=2, backend="real", strict_records=False,
                  width_bounds=(1, 64))
    logs = run_asnn_search(cfg, table1, backend)
    assert len(logs[0].trial.accuracies) == 2


def test_random_search_seeded_and_in_range(oracle2):
    cfg = LoopConfig(max_iterations=20, seed=3)
    a = run_random_search(cfg, oracle2, (16, 256))
    b = run_random_search(cfg, oracle2, (16, 256))
    assert [l.architecture for l in a] == [l.architecture for l in b]
    assert all(16 <= w <= 256 for l in a for w in l.architecture)
    logu = run_random_search(cfg, oracle2, (16, 256), log_uniform=True)
    assert all(16 <= w <= 256 for l in logu for w in l.architecture)
    with pytest.raises(ValueError):
        run_random_search(cfg, oracle2, (300, 16))


def test_random_best_so_far_matches_brute_force(still2):
    logs = run_random_search(LoopConfig(max_iterations=15, seed=9), still2, (16, 256))
    drawn = [l.architecture for l in logs]
    for k in range(len(logs)):
        brute = max(still2.mean_at(a) for a in drawn[: k + 1])
        assert logs[k].best_so_far == pytest.approx(brute, abs=1e-12)


def test_compare_self_and_row_count(oracle2, table1):
    loop = replace(FAST, max_iterations=2)
    same = [Strategy("a", "random", loop), Strategy("b", "random", loop)]
    rep = compare_strategies(same, 3, table1, oracle2)
    assert len(rep.rows) == 3 * 2 * 2
    curves = rep.curves()
    assert curves["a"] == curves["b"]
    both = [Strategy("asnn", "asnn", loop), Strategy("random", "random", loop)]
    rep = compare_strategies(both, 2, table1, oracle2)
    assert len(rep.rows) == 2 * 2 * 2
    assert set(rep.median_final_best()) == {"asnn", "random"}
    hits = rep.evaluations_to_threshold(0.0)
    assert hits["random"] == [1, 1]


def test_compare_budget_mismatch(oracle2, table1):
    s = [Strategy("a", "random", FAST), Strategy("b", "random", replace(FAST, max_iterations=4))]
    with pytest.raises(ValueError, match="budget"):
        compare_strategies(s, 1, table1, oracle2)


def test_loop_config_validation():
    with pytest.raises(ValueError):
        LoopConfig(max_iterations=0)
    with pytest.raises(ValueError):
        LoopConfig(target_mean_accuracy=1.5)
    with pytest.raises(ValueError):
        Strategy("x", "bayes", FAST)
