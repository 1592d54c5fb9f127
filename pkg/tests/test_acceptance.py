"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Criteria 9 and 10 train real models and take several minutes each; deselect
them with ``-m "not slow"`` for a quick run.
"""
import io
import json
import time
from contextlib import redirect_stdout
from decimal import Decimal

import numpy as np
import pytest

from cortex_bench.assembly import BehavioralMatrix, NeuroidAssembly, synth_neuroids, synth_stimuli
from cortex_bench.benchmarks import (
    ABLATION_AXES,
    REFERENCE_ROWS,
    OSTRecord,
    SweepBudget,
    ablation_sweep,
    behavioral_predictivity,
    c_grid,
    composite,
    neural_predictivity,
    ost_benchmark,
    ost_from_trajectory,
    permutation_null,
    transfer_probe,
)
from cortex_bench.cli import main as cli_main
from cortex_bench.errors import UndefinedCorrelationError
from cortex_bench.model import (build, calibrate_norm_stats, compute_depth, cornet_s, desk_cornet_s, extract_features,
                                plain_cnn)
from cortex_bench.stats import dprime, pls_fit, pls_predict, z_inverse
from cortex_bench.tensor import check_gradients

from oracles import LABELS, MODEL_ACC, TARGET_ACC, spreadsheet_normalized_dprime, worksheet_r
from test_benchmarks import ost_source
from test_gradients import CASES
from test_stats import ORACLE


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line and fail the test on FAIL."""
    start = time.perf_counter()

    def record(number, title, ok, detail, limit_s=None):
        elapsed = time.perf_counter() - start
        in_time = limit_s is None or elapsed < limit_s
        passed = bool(ok) and in_time
        budget = f", limit {limit_s:g} s" if limit_s is not None else ""
        line = f"{'PASS' if passed else 'FAIL'} [{number:2d}] {title}: {detail} ({elapsed:.1f} s{budget})"
        with capsys.disabled():
            print("\n" + line)
        assert passed, line

    return record


def run_cli(*argv) -> str:
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli_main([str(a) for a in argv])
    assert code == 0, f"{argv[0]} exited with {code}"
    return buf.getvalue()


# 1 --------------------------------------------------------------------------------

def test_criterion_01_composite_arithmetic(verdict):
    worst = max(abs(composite(Decimal(r.v4), Decimal(r.it), Decimal(r.behavior), Decimal(r.ost)) -
                    Decimal(r.brain_score)) for r in REFERENCE_ROWS)
    verdict(1, "composite arithmetic", len(REFERENCE_ROWS) == 25 and worst <= Decimal("0.0005"),
            f"{len(REFERENCE_ROWS)} rows, max |error| {worst}", limit_s=1)


# 2 --------------------------------------------------------------------------------

PLAIN_FIXTURES = [([8], False, 2), ([8, 16], False, 3), ([4, 4, 4, 4, 4], False, 6), ([8, 8], True, 4),
                  ([8, 16, 32], True, 5)]


def test_criterion_02_depth_accounting(verdict):
    default = compute_depth(cornet_s())
    plain = [compute_depth(plain_cnn(ch, v1=v1)) == want for ch, v1, want in PLAIN_FIXTURES]
    verdict(2, "depth accounting", default == 15 and all(plain),
            f"default depth {default}, plain fixtures {sum(plain)}/{len(plain)}", limit_s=1)


# 3 --------------------------------------------------------------------------------

def test_criterion_03_gradient_suite(verdict):
    seeds = range(1000, 1024)
    errors = {}
    for case in CASES:
        for seed in seeds:
            fn, params = case(np.random.default_rng(seed))
            errors[(case.__name__, seed)] = check_gradients(fn, params)
    worst_key = max(errors, key=errors.get)
    verdict(3, "gradient suite", max(errors.values()) < 1e-4,
            f"{len(CASES)} ops x {len(seeds)} seeds, max rel err {errors[worst_key]:.2e} ({worst_key[0]})",
            limit_s=120)


# 4 --------------------------------------------------------------------------------

def test_criterion_04_pls_oracle(verdict):
    ols_err, cov_err = [], []
    for seed, (n, p) in enumerate([(8, 3), (30, 5), (60, 10), (200, 4)]):
        rng = np.random.default_rng(seed)
        X, y = rng.normal(size=(n, p)), rng.normal(size=n)
        Xc, yc = X - X.mean(0), y - y.mean()
        ols = Xc @ np.linalg.lstsq(Xc, yc, rcond=None)[0] + y.mean()
        ols_err.append(np.max(np.abs(pls_predict(pls_fit(X, y, p), X)[:, 0] - ols)))
    for seed in range(4):
        rng = np.random.default_rng(10 + seed)
        X = rng.normal(size=(80, 7))
        Y = X[:, :3] @ rng.normal(size=(3, 4)) + 0.3 * rng.normal(size=(80, 4))
        u = np.linalg.svd((X - X.mean(0)).T @ (Y - Y.mean(0)))[0][:, 0]
        w = pls_fit(X, Y, 2, mode="pls2").x_weights[0][:, 0]
        cov_err.append(min(np.linalg.norm(w - u), np.linalg.norm(w + u)))
    verdict(4, "PLS oracle", max(ols_err) <= 1e-6 and max(cov_err) <= 1e-6,
            f"OLS max err {max(ols_err):.1e}, component-1 max err {max(cov_err):.1e}", limit_s=30)


# 5 --------------------------------------------------------------------------------

def test_criterion_05_probit_and_dprime(verdict):
    p = np.array([row["p"] for row in ORACLE["grid"]])
    z = np.array([row["z"] for row in ORACLE["grid"]])
    err = float(np.max(np.abs(z_inverse(p) - z)))
    fixtures = [dprime(0.3, 0.3) == 0.0, dprime(1.0, 0.0) == 5.0, dprime(0.0, 1.0) == -5.0,
                abs(dprime(0.84, 0.5) - 0.994458) <= 5e-7]
    verdict(5, "probit and d'", len(p) == 1000 and err <= 1e-9 and all(fixtures),
            f"grid max err {err:.1e} on {len(p)} points, d' fixtures {sum(fixtures)}/{len(fixtures)}", limit_s=5)


# 6 --------------------------------------------------------------------------------

def test_criterion_06_neural_predictivity_recovery(verdict):
    n = 2560
    rng = np.random.default_rng(0)
    feats = rng.normal(size=(n, 20))
    labels = np.arange(n) % 8
    src = NeuroidAssembly(feats, [f"s{i:05d}" for i in range(n)], labels, [f"f{j}" for j in range(20)], "model")

    def target(snr):
        return synth_neuroids(feats, 40, snr=snr, seed=1, stimulus_id=src.stimulus_id, object_label=labels)

    half = neural_predictivity(src, target(1.0)).score
    clean = neural_predictivity(src, target(np.inf)).score
    noise_target = target(0.0)
    noise = neural_predictivity(src, noise_target).score
    null95 = float(np.percentile(permutation_null(src, noise_target, n_permutations=20, seed=2), 95))
    ok = abs(half - 1 / np.sqrt(2)) <= 0.03 and clean >= 0.99 and noise <= null95
    verdict(6, "neural predictivity recovery", ok,
            f"snr 1 -> {half:.4f} (target 0.7071 +- 0.03), noiseless {clean:.4f}, "
            f"noise {noise:.4f} <= null95 {null95:.4f}", limit_s=600)


# 7 --------------------------------------------------------------------------------

def _matrix(acc):
    return BehavioralMatrix(np.array([[np.nan if v is None else v for v in r] for r in acc]), LABELS, ["a", "b", "c"])


def test_criterion_07_behavioral_i2n(verdict):
    expected = worksheet_r(spreadsheet_normalized_dprime(MODEL_ACC, LABELS),
                           spreadsheet_normalized_dprime(TARGET_ACC, LABELS))
    got = behavioral_predictivity(_matrix(MODEL_ACC), _matrix(TARGET_ACC)).score
    self_r = behavioral_predictivity(_matrix(TARGET_ACC), _matrix(TARGET_ACC)).score
    rng = np.random.default_rng(0)
    labels = np.arange(240) % 24
    target = BehavioralMatrix(rng.uniform(0.5, 1, (240, 24)), labels, [f"o{i}" for i in range(24)])
    try:
        behavioral_predictivity(np.full((240, 24), 1 / 24), target)
        raised = False
    except UndefinedCorrelationError:
        raised = True
    verdict(7, "behavioral I2n", abs(got - expected) <= 1e-6 and abs(self_r - 1) <= 1e-12 and raised,
            f"worksheet |err| {abs(got - expected):.1e}, self r {self_r:.12f}, uniform model raises {raised}",
            limit_s=5)


# 8 --------------------------------------------------------------------------------

def test_criterion_08_object_solution_times(verdict):
    interp = ost_from_trajectory([110, 120, 130, 140], [0.1, 0.3, 0.7, 0.9], 0.5)

    src, ease = ost_source()
    targets = [OSTRecord(s, l, 0.8, None, float(230 - 130 * e)) for s, l, e in
               zip(src.stimulus_id, src.object_label, ease)]
    first = ost_benchmark(src, targets)
    mirrored = [OSTRecord(r.stimulus_id, r.object_label, r.threshold, None, r.model_ost) for r in first.records]
    rho = ost_benchmark(src, mirrored).score

    stimuli = synth_stimuli(60, 4, 32, seed=0)
    outcomes = []
    for area_count in (3, 4):
        cfg = cornet_s(num_classes=4, input_size=32, width_divisor=32).with_all_areas(times=1)
        if area_count == 3:
            cfg.areas = [cfg.areas[0], cfg.areas[1], cfg.areas[-1]]
        model = build(cfg, seed=area_count)
        calibrate_norm_stats(model, stimuli)
        it = extract_features(model, stimuli, "IT")
        res = ost_benchmark(it, [OSTRecord(s, "x", 0.5, None, 100.0) for s in it.stimulus_id])
        outcomes.append((res.score, res.reason))
    ok = interp == 125.0 and rho == pytest.approx(1.0, abs=1e-12) and all(o == (0.0, "feedforward") for o in outcomes)
    verdict(8, "object solution times", ok,
            f"interpolation {interp} ms, identical OSTs rho {rho:.6f}, times=1 models {outcomes}", limit_s=60)


# 9 --------------------------------------------------------------------------------

def desk_pipeline(root, epochs=None):
    """gen, train, extract IT and score through the CLI; returns (summaries, output checksums)."""
    root.mkdir(parents=True, exist_ok=True)
    out = {"gen": json.loads(run_cli("gen", "--n", 500, "--bench-n", 400, "--size", 64, "--categories", 10,
                                     "--seed", 0, "--out", root))}
    train_args = ["--epochs", epochs] if epochs is not None else []
    out["train"] = json.loads(run_cli("train", "--seed", 0, "--out", root, *train_args))
    out["train"].pop("checkpoint")  # absolute path; its checksum is compared instead
    out["extract"] = json.loads(run_cli("extract", "--area", "IT", "--out", root))
    out["score"] = json.loads(run_cli("score", "--seed", 0, "--out", root))
    sums = {cmd: json.loads((root / f"{cmd}.manifest.json").read_text())["outputs"] for cmd in out}
    return out, sums


@pytest.mark.slow
def test_criterion_09_end_to_end_desk_run(verdict, tmp_path):
    first, sums_a = desk_pipeline(tmp_path / "a")
    second, sums_b = desk_pipeline(tmp_path / "b")
    control, _ = desk_pipeline(tmp_path / "control", epochs=0)
    acc = first["train"]["train_accuracy"]
    bins = first["extract"]["features"]["IT"]
    trained_it, control_it = first["score"]["benchmarks"]["it"], control["score"]["benchmarks"]["it"]
    identical = sums_a == sums_b and first == second
    ok = identical and acc >= 0.9 and len(bins) == 3 and bins[2] == 2 and trained_it > control_it
    verdict(9, "end-to-end desk run", ok,
            f"checksums identical {identical} over {sum(len(v) for v in sums_a.values())} artifacts, "
            f"train accuracy {acc:.3f}, IT features {bins}, IT score trained {trained_it:.4f} "
            f"> random {control_it:.4f}", limit_s=1800)


# 10 -------------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_10_ablation_sweep(verdict):
    base = desk_cornet_s()
    budget = SweepBudget(image_size=64)
    a = ablation_sweep(base, ABLATION_AXES, budget)
    b = ablation_sweep(base, ABLATION_AXES, budget)
    axes = {r["axis"] for r in a.rows if r["axis"]}
    ok_rows = [r for r in a.rows if r["status"] == "ok"]
    complete = len(ok_rows) == len(a.rows) and all(r["delta_top1"] is not None and r["delta_brain_score"] is not None
                                                   for r in a.rows)
    baseline_zero = a.baseline["delta_top1"] == 0.0 and a.baseline["delta_brain_score"] == 0.0
    reproducible = a.deltas() == b.deltas() and a.rows == b.rows
    ok = complete and baseline_zero and reproducible and axes == set(ABLATION_AXES)
    verdict(10, "ablation sweep plumbing", ok,
            f"{len(a.rows)} rows over axes {sorted(axes)}, all scored {complete}, baseline delta zero {baseline_zero}, "
            f"bit-reproducible {reproducible}")


# 11 -------------------------------------------------------------------------------

def test_criterion_11_transfer_probe(verdict):
    grid = c_grid()
    ratios = grid[1:] / grid[:-1]
    grid_ok = grid[0] == 0.0005 and grid[-1] == 0.05 and np.allclose(ratios, ratios[0], rtol=1e-12, atol=0)

    rng = np.random.default_rng(0)
    X = rng.normal(size=(400, 5))
    y = np.arange(400) % 3
    X[:, 2] = y
    separable = transfer_probe(X[:300], y[:300], X[300:], y[300:]).accuracy

    rng = np.random.default_rng(11)
    X = rng.normal(size=(25000, 16))
    y = rng.integers(0, 100, 25000)
    shuffled = transfer_probe(X[:5000], y[:5000], X[5000:], y[5000:]).accuracy
    ok = grid_ok and separable == 1.0 and abs(shuffled - 0.01) <= 0.005
    verdict(11, "transfer probe", ok,
            f"grid endpoints {grid[0]:g}/{grid[-1]:g} ratio {ratios[0]:.6f}, separable {separable}, "
            f"shuffled 100-class {shuffled:.4f}", limit_s=120)
