"""Exit criteria for the package, one test per criterion, each at its stated tolerance and time limit."""

import json
import os
import statistics
import time

import numpy as np
import pytest

from asnn import io, nn, tables
from asnn.cli import main
from asnn.dataset import AugmentConfig, AsnnSamples, augment, ingest_records, records_from_table, shuffle_samples
from asnn.model import AsnnConfig, predict, train_asnn
from asnn.search import TabularOracle
from asnn.target import BUDGETS, Architecture, make_synthetic, run_trials
from oracles import adam_first_step, central_difference_grads, max_relative_error, random_small_net

# frozen after the brute-force sweep in scripts/calibrate_oracle_threshold.py:
# noise-free max 0.98310 at (256, 16); 7.3% of the 16..256 hull reaches 0.9825
SEARCH_THRESHOLD = 0.9825
SEARCH_SEEDS = 20
SEARCH_ITERATIONS = 10
# retraining budget for each of the 200 regressor fits in criterion 6
SEARCH_ASNN_EPOCHS = 10


def test_c1_table_integrity(tmp_path, acceptance_report):
    t0 = time.perf_counter()
    code = main(["verify-tables", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    bad = tables.verify_rows(tables.TABLE_2LAYER) + tables.verify_rows(tables.TABLE_3LAYER)
    row = {r.widths: r for r in tables.TABLE_2LAYER + tables.TABLE_3LAYER}
    m1 = float(np.mean(row[(256, 16)].accuracies))
    m2 = float(np.mean(row[(128, 128, 16)].accuracies))
    ok = (code == 0 and not bad and len(tables.TABLE_2LAYER) == 25 and len(tables.TABLE_3LAYER) == 64
          and abs(m1 - 0.98310) <= 5e-6 and abs(m2 - 0.98171) <= 5e-6 and elapsed < 1.0)
    acceptance_report("C1 table integrity", ok,
                      f"89 rows, {len(bad)} mismatches, (256,16)->{m1:.5f}, (128,128,16)->{m2:.5f}, {elapsed:.2f}s")
    assert ok


def test_c2_gradient_check(acceptance_report):
    t0 = time.perf_counter()
    worst = {}
    for head in nn.HEADS:
        rng = np.random.default_rng(2024 if head == nn.MSE else 2025)
        errs = []
        for trial in range(50):
            spec, x, y = random_small_net(rng, head)
            assert spec.n_params <= 200
            params = nn.init_params(spec, trial)
            for b in params.biases:
                b[:] = rng.standard_normal(b.shape) * 0.1
            _, grads = nn.loss_and_grads(params, spec, x, y, nn.make_rng(trial))
            errs.append(max_relative_error(grads.flat(), central_difference_grads(params, spec, x, y, trial)))
        worst[head] = max(errs)
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) < 1e-4 and elapsed < 30
    acceptance_report("C2 gradient check", ok,
                      ", ".join(f"{h} max rel err {e:.2e}" for h, e in worst.items()) + f", {elapsed:.1f}s")
    assert ok


def test_c3_adam_first_step(acceptance_report):
    p = nn.NetworkParams([np.zeros((1, 1))], [np.zeros(1)])
    g = nn.NetworkParams([np.ones((1, 1))], [np.zeros(1)])
    new, state = nn.adam_step(p, g, nn.AdamState.zeros(p))
    expected = adam_first_step(0.0, 1.0, 0.001, 0.9, 0.999, 1e-7)
    err = abs(new.weights[0][0, 0] - expected)
    ok = err < 1e-12 and state.t == 1 and abs(expected + 0.0009999999) < 1e-12
    acceptance_report("C3 Adam first step", ok, f"w={new.weights[0][0, 0]!r}, |err|={err:.1e}")
    assert ok


def test_c4_augmentation(acceptance_report):
    t0 = time.perf_counter()
    recs = records_from_table(tables.TABLE_2LAYER)
    samples = augment(ingest_records(recs), AugmentConfig(10_000, seed=7))
    acc = np.array([r.accuracies for r in recs])
    src_sorted = np.sort(acc[samples.source], axis=1)
    exact = np.array_equal(np.sort(samples.inputs, axis=1), src_sorted * 100)
    back = np.allclose(np.sort(samples.inputs / 100, axis=1), src_sorted, rtol=1e-15, atol=0)
    counts = np.bincount(samples.source, minlength=25)
    shuffled = shuffle_samples(samples, 8)

    def multiset(s):
        rows = np.c_[s.inputs, s.targets]
        return rows[np.lexsort(rows.T[::-1])]

    same = np.array_equal(multiset(samples), multiset(shuffled))
    elapsed = time.perf_counter() - t0
    ok = len(samples) == 10_000 and exact and back and np.all(counts == 400) and same and elapsed < 5
    acceptance_report("C4 augmentation", ok,
                      f"permutations exact={exact}, counts={sorted(set(counts.tolist()))}, "
                      f"shuffle multiset preserved={same}, {elapsed:.2f}s")
    assert ok


def test_c5_constant_target(acceptance_report):
    t0 = time.perf_counter()
    n = 10_000
    results = {}
    for target in ((16, 16), (256, 256)):
        samples = AsnnSamples(np.full((n, 10), 100.0), np.tile(np.array(target, float), (n, 1)),
                              np.zeros(n, dtype=int))
        results[target] = predict(train_asnn(samples, AsnnConfig(seed=1)))
    elapsed = time.perf_counter() - t0
    ok = all(np.all(np.abs(np.array(p) - t) <= 0.5) for t, p in results.items()) and elapsed < 60
    detail = ", ".join(f"{t}->({p[0]:.3f}, {p[1]:.3f})" for t, p in results.items())
    acceptance_report("C5 constant target", ok, f"{detail}, {elapsed:.1f}s")
    assert ok


@pytest.mark.slow
def test_c6_oracle_search(tmp_path, acceptance_report):
    t0 = time.perf_counter()
    still = TabularOracle(tables.TABLE_2LAYER, noise_scale=0.0)
    bests = []
    for seed in range(SEARCH_SEEDS):
        out = tmp_path / f"s{seed}"
        code = main(["search-asnn", "--backend", "oracle", "--seed", str(seed), "--out", str(out),
                     "--set", f"max_iterations={SEARCH_ITERATIONS}",
                     "--set", f"asnn_epochs={SEARCH_ASNN_EPOCHS}"])
        assert code == 0
        logs = io.read_log_jsonl(out / "log.jsonl")
        assert len(logs) == SEARCH_ITERATIONS
        bests.append(max(still.mean_at(log.architecture) for log in logs))
    search_time = time.perf_counter() - t0
    median = statistics.median(bests)

    cmp_out = tmp_path / "compare"
    code = main(["compare", "--backend", "oracle", "--seed", "0", "--out", str(cmp_out),
                 "--set", "n_seeds=3", "--set", "max_iterations=5", "--set", "asnn_epochs=5"])
    lines = (cmp_out / "compare.csv").read_text().splitlines()
    summary = json.loads((cmp_out / "summary.json").read_text())
    emitted = (code == 0 and lines[0] == "strategy,seed,iteration,arch,mean,best_so_far"
               and len(lines) == 1 + 2 * 3 * 5 and set(summary["median_final_best"]) == {"asnn", "random"})
    elapsed = time.perf_counter() - t0
    ok = median >= SEARCH_THRESHOLD and emitted and elapsed < 300
    acceptance_report("C6 oracle search", ok,
                      f"median best noise-free mean {median:.5f} over {SEARCH_SEEDS} seeds "
                      f"(threshold {SEARCH_THRESHOLD}), min {min(bests):.5f}, search {search_time:.0f}s, "
                      f"compare report emitted={emitted}, total {elapsed:.0f}s")
    assert ok


def test_c7_desk_real_trainer(acceptance_report):
    t0 = time.perf_counter()
    data = make_synthetic(0, classes=10, dim=20, n_train=12_000, n_test=2_000)
    budget = BUDGETS["desk"]
    res = run_trials(Architecture((64, 32)), data, budget, base_seed=0)
    elapsed = time.perf_counter() - t0
    ok = budget.trials == 3 and res.mean >= 0.95 and elapsed < 120
    acceptance_report("C7 desk real trainer", ok,
                      f"(64,32) accuracies {[round(a, 4) for a in res.accuracies]}, mean {res.mean:.4f}, "
                      f"{elapsed:.1f}s")
    assert ok


FULL_SCALE = bool(os.environ.get("ASNN_MNIST_DIR")) and os.environ.get("ASNN_FULL_SCALE") == "1"


@pytest.mark.skipif(not FULL_SCALE, reason="full-scale MNIST run: set ASNN_MNIST_DIR and ASNN_FULL_SCALE=1")
def test_c8_full_scale_mnist(acceptance_report):
    from asnn.target import load_mnist_dir

    data = load_mnist_dir(os.environ["ASNN_MNIST_DIR"])
    res = run_trials(Architecture((448, 65)), data, BUDGETS["full"], base_seed=0)
    ok = abs(res.mean - 0.98363) <= 0.005
    acceptance_report("C8 full-scale MNIST", ok, f"(448,65) mean {res.mean:.5f} vs 0.98363 +/- 0.005")
    assert ok


def test_c8_documented_as_out_of_ci(acceptance_report):
    if not FULL_SCALE:
        acceptance_report("C8 full-scale MNIST", True,
                          "not run: needs MNIST files and hours of CPU; see scripts/full_scale_mnist.py",
                          status="SKIP")


@pytest.mark.parametrize("mode", ["verify-tables", "collect-grid", "search-random", "search-asnn", "compare"])
def test_c9_determinism(tmp_path, mode, acceptance_report):
    args = [mode, "--seed", "11", "--out", str(tmp_path),
            "--set", "asnn_epochs=3", "--set", "max_iterations=3", "--set", "n_seeds=2"]
    assert main(args) == 0
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    assert main(args) == 0
    second = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    ok = first == second
    acceptance_report(f"C9 determinism [{mode}]", ok, f"{len(first)} files byte-identical={ok}")
    assert ok
