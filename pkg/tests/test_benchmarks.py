from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cortex_bench.assembly import BehavioralMatrix, NeuroidAssembly, synth_neuroids, synth_stimuli
from cortex_bench.benchmarks import (
    ABLATION_AXES,
    REFERENCE_ROWS,
    BenchmarkConfig,
    NeuralConfig,
    OSTConfig,
    OSTRecord,
    ScoreCard,
    SweepBudget,
    ablation_sweep,
    behavioral_predictivity,
    c_grid,
    composite,
    expand_axes,
    neural_predictivity,
    normalized_dprime,
    ost_benchmark,
    ost_from_trajectory,
    permutation_null,
    recording_points,
    score_features,
    select_point,
    synth_targets,
    timebinned_predictivity,
    timestep_trajectory,
    transfer_probe,
)
from cortex_bench.errors import ConfigError, DimensionError, InsufficientDataError, UndefinedCorrelationError
from cortex_bench.model import TrainRecipe, build, calibrate_norm_stats, cornet_s
from cortex_bench.stats import spearman_rho

from oracles import LABELS, MODEL_ACC, TARGET_ACC, spreadsheet_normalized_dprime, worksheet_r


def features(n, f=12, seed=0, classes=4):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, f))
    ids = np.array([f"s{i:05d}" for i in range(n)])
    labels = np.array([f"c{i % classes}" for i in range(n)])
    return NeuroidAssembly(X, ids, labels, [f"f{j}" for j in range(f)], "model")


def target_from(source, snr=np.inf, n=20, seed=1, region="IT", **kw):
    return synth_neuroids(source.as_matrix(), n, snr=snr, seed=seed, stimulus_id=source.stimulus_id,
                          object_label=source.object_label, region=region, **kw)


FAST = NeuralConfig(folds=5)


# composite ----------------------------------------------------------------------

@pytest.mark.parametrize("row", REFERENCE_ROWS, ids=lambda r: r.model)
def test_reference_rows_recompute(row):
    value = composite(Decimal(row.v4), Decimal(row.it), Decimal(row.behavior), Decimal(row.ost))
    assert abs(value - Decimal(row.brain_score)) <= Decimal("0.0005")


@pytest.mark.parametrize("parts, expected", [
    ((0.65, 0.6, 0.382, 0.25), 0.4705),
    ((0.663, 0.606, 0.378, 0.0), 0.41175),
    ((0, 0, 0, 0), 0.0),
])
def test_composite_examples(parts, expected):
    assert composite(*parts) == pytest.approx(expected, abs=1e-12)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.permutations(range(4)))
def test_composite_is_permutation_invariant_mean(parts, perm):
    assert composite(*[parts[i] for i in perm]) == pytest.approx(sum(parts) / 4, abs=1e-9)


def test_composite_without_ost_and_floor():
    assert composite(0.3, 0.6, 0.9, 0.8, include_ost=False) == pytest.approx(0.6)
    assert composite(0.4, 0.4, 0.4, -0.2) == pytest.approx(0.3)


# neural -------------------------------------------------------------------------

@pytest.fixture(scope="module")
def source200():
    return features(200)


def test_noiseless_linear_target_scores_high(source200):
    target = target_from(source200, n=40)
    assert neural_predictivity(source200, target, FAST).score >= 0.99


def test_noise_target_below_null(source200):
    rng = np.random.default_rng(5)
    noise = target_from(source200, snr=0.0)
    noise.data[:] = rng.normal(size=noise.data.shape)
    score = neural_predictivity(source200, noise, FAST).score
    null = permutation_null(source200, noise, FAST, n_permutations=20, seed=1)
    assert score <= np.percentile(null, 95)


def test_source_affine_rescaling_invariance(source200):
    target = target_from(source200, snr=1.0)
    rng = np.random.default_rng(2)
    scaled = source200._replace(data=source200.data * rng.uniform(0.5, 3, 12) + rng.normal(size=12))
    a = neural_predictivity(source200, target, FAST).score
    b = neural_predictivity(scaled, target, FAST).score
    assert abs(a - b) <= 1e-3


def test_stimulus_order_is_aligned(source200):
    target = target_from(source200, snr=1.0)
    shuffled = source200.isel_stimuli(np.random.default_rng(3).permutation(200))
    assert neural_predictivity(shuffled, target, FAST).score == pytest.approx(
        neural_predictivity(source200, target, FAST).score, abs=1e-9)


def test_stimulus_mismatch_reports_difference(source200):
    target = target_from(source200)
    with pytest.raises(DimensionError, match="s00000"):
        neural_predictivity(source200.isel_stimuli(range(1, 200)), target, FAST)


def test_dropping_a_stimulus_changes_score_continuously(source200):
    target = target_from(source200, snr=1.0)
    full = neural_predictivity(source200, target, FAST).score
    keep = np.arange(1, 200)
    fewer = neural_predictivity(source200.isel_stimuli(keep), target.isel_stimuli(keep), FAST).score
    assert abs(full - fewer) < 0.05


def test_constant_neuroid_is_counted_and_excluded(source200):
    target = target_from(source200, snr=1.0)
    target.data[:, 3] = 1.0
    res = neural_predictivity(source200, target, FAST)
    assert res.n_undefined == 1 and res.undefined_ids == [target.neuroid_id[3]]
    assert res.score == pytest.approx(np.median(np.delete(res.per_neuroid_r, 3)))


def test_pooled_aggregation_close_to_fold_mean(source200):
    target = target_from(source200, snr=1.0)
    mean = neural_predictivity(source200, target, FAST).score
    pooled = neural_predictivity(source200, target, NeuralConfig(folds=5, aggregate="pooled")).score
    assert abs(mean - pooled) < 0.05


def test_pca_stage_engages_when_features_exceed_limit():
    rng = np.random.default_rng(4)
    latent = rng.normal(size=(200, 5))
    src = features(200, 30)
    src = src._replace(data=latent @ rng.normal(size=(5, 30)))
    target = synth_neuroids(latent, 10, stimulus_id=src.stimulus_id, object_label=src.object_label)
    assert neural_predictivity(src, target, NeuralConfig(folds=5, n_pca=10)).score >= 0.99


def test_threads_do_not_change_result(source200, monkeypatch):
    target = target_from(source200, snr=1.0)
    one = neural_predictivity(source200, target, NeuralConfig(folds=5, threads=1))
    monkeypatch.setenv("CORTEX_BENCH_THREADS", "3")
    many = neural_predictivity(source200, target, FAST)
    np.testing.assert_array_equal(one.fold_r, many.fold_r)


# behavioral ---------------------------------------------------------------------

def matrix(acc):
    return BehavioralMatrix(np.array([[np.nan if v is None else v for v in r] for r in acc]), LABELS, ["a", "b", "c"])


def test_hand_worked_fixture_matches_worksheet():
    expected = worksheet_r(spreadsheet_normalized_dprime(MODEL_ACC, LABELS),
                           spreadsheet_normalized_dprime(TARGET_ACC, LABELS))
    res = behavioral_predictivity(matrix(MODEL_ACC), matrix(TARGET_ACC))
    assert abs(res.score - expected) <= 1e-6
    table = spreadsheet_normalized_dprime(TARGET_ACC, LABELS)
    np.testing.assert_allclose(res.target_table, np.array([[np.nan if v is None else v for v in r] for r in table]),
                               atol=1e-9)


def test_behavior_self_consistency():
    assert behavioral_predictivity(matrix(TARGET_ACC), matrix(TARGET_ACC)).score == pytest.approx(1.0)


def test_uniform_model_raises_undefined():
    rng = np.random.default_rng(0)
    labels = np.arange(240) % 24
    target = BehavioralMatrix(rng.uniform(0.5, 1, (240, 24)), labels, [f"o{i}" for i in range(24)])
    with pytest.raises(UndefinedCorrelationError):
        behavioral_predictivity(np.full((240, 24), 1 / 24), target)


def test_absent_class_raises():
    target = BehavioralMatrix(np.full((3, 3), 0.8), [0, 1, 1], ["a", "b", "c"])
    with pytest.raises(DimensionError, match="c"):
        behavioral_predictivity(np.full((3, 3), 1 / 3), target)


def test_probability_rows_must_sum_to_one():
    with pytest.raises(ValueError):
        behavioral_predictivity(np.full((4, 3), 0.5), matrix(TARGET_ACC))


@settings(max_examples=10, deadline=None)
@given(st.permutations(range(5)), st.integers(0, 100))
def test_behavior_invariant_to_class_permutation(perm, seed):
    rng = np.random.default_rng(seed)
    labels = np.arange(40) % 5
    proba = rng.dirichlet(np.ones(5), 40)
    target = BehavioralMatrix(rng.uniform(0.4, 1, (40, 5)), labels, list("abcde"))
    base = behavioral_predictivity(proba, target).score
    perm = np.array(perm)
    inv = np.argsort(perm)
    relabeled = BehavioralMatrix(target.accuracies[:, perm], inv[labels], [target.categories[p] for p in perm])
    assert behavioral_predictivity(proba[:, perm], relabeled).score == pytest.approx(base, abs=1e-12)


def test_normalized_dprime_is_zero_mean_per_pair():
    table = normalized_dprime(matrix(TARGET_ACC).accuracies, np.array(LABELS))
    assert np.nansum(table[[0, 3]], axis=0) == pytest.approx([0, 0, 0], abs=1e-12)


# solution times -------------------------------------------------------------------

def test_interpolation_fixture_is_exact():
    assert ost_from_trajectory([110, 120, 130, 140], [0.1, 0.3, 0.7, 0.9], 0.5) == 125.0


@pytest.mark.parametrize("values, expected", [
    ([0.6, 0.8, 0.9], 70.0),
    ([0.1, 0.2, 0.3], None),
    ([0.1, 0.5, 0.9], 80.0),
])
def test_interpolation_edges(values, expected):
    assert ost_from_trajectory([70, 80, 90], values, 0.5) == expected


def test_two_step_time_mapping():
    cfg = OSTConfig()
    times, traj = timestep_trajectory(np.array([[1.0, 2.0]]), np.array([[70, 150], [150, 250]]), cfg)
    assert times[0] == 70 and times[-1] == 240
    assert np.all(traj[0, times < 150] == 1.0) and np.all(traj[0, times >= 150] == 2.0)


@given(st.lists(st.floats(70, 250), min_size=10, max_size=40, unique=True))
def test_rho_invariant_under_increasing_transforms(ost):
    a = np.array(ost)
    b = a + np.sin(a)
    if np.ptp(b) == 0:
        return
    assert spearman_rho(np.exp(a / 50), b ** 3) == pytest.approx(spearman_rho(a, b), abs=1e-12)


def ost_source(n=200, seed=0, steps=2):
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 4
    signal = np.eye(4)[labels] * 2
    ease = rng.uniform(0, 1, n)
    data = np.empty((n, 8, steps))
    for s in range(steps):
        gain = ease * (s + 1) / steps
        data[:, :, s] = np.hstack([gain[:, None] * signal, np.zeros((n, 4))]) + rng.normal(size=(n, 8))
    ids = np.array([f"s{i:04d}" for i in range(n)])
    bins = [[70, 150], [150, 250]] if steps == 2 else [[70, 170]]
    asm = NeuroidAssembly(data, ids, [f"c{c}" for c in labels], [f"f{j}" for j in range(8)], "IT",
                          dims=("stimulus", "neuroid", "time_bin"), time_bins=bins)
    return asm, ease


def test_feedforward_source_scores_zero():
    src, _ = ost_source(steps=1)
    res = ost_benchmark(src, [OSTRecord(s, "c0", 0.5, None, 100.0) for s in src.stimulus_id])
    assert (res.score, res.reason) == (0.0, "feedforward")


@pytest.fixture(scope="module")
def ost_run():
    src, ease = ost_source()
    targets = [OSTRecord(s, l, 0.8, None, float(230 - 130 * e)) for s, l, e in
               zip(src.stimulus_id, src.object_label, ease)]
    return src, targets, ost_benchmark(src, targets, OSTConfig(folds=5))


def test_ost_records_lie_in_window(ost_run):
    _, _, res = ost_run
    defined = [r.model_ost for r in res.records if r.model_ost is not None]
    assert res.reason == "ok" and res.n_mutual >= 10
    assert all(70 <= t <= 240 for t in defined)


def test_identical_osts_give_rho_one(ost_run):
    src, targets, res = ost_run
    mirrored = [OSTRecord(r.stimulus_id, r.object_label, r.threshold, None, r.model_ost) for r in res.records]
    assert ost_benchmark(src, mirrored, OSTConfig(folds=5)).score == pytest.approx(1.0)


def test_unreachable_thresholds_are_insufficient(ost_run):
    src, targets, _ = ost_run
    high = [OSTRecord(t.stimulus_id, t.object_label, 6.0, None, t.target_ost) for t in targets]
    with pytest.raises(InsufficientDataError):
        ost_benchmark(src, high, OSTConfig(folds=5))


# mapping and time bins ----------------------------------------------------------

@pytest.fixture(scope="module")
def small_model_points():
    stimuli = synth_stimuli(120, 4, 32, seed=0)
    model = build(cornet_s(num_classes=4, input_size=32, width_divisor=16), seed=0)
    calibrate_norm_stats(model, stimuli)
    return stimuli, recording_points(model, stimuli)


def test_search_selects_generating_area(small_model_points):
    _, points = small_model_points
    target = target_from(points[("V4", 3)], n=15, region="V4")
    res = select_point(points, target, "search", cfg=FAST)
    assert res.area == "V4"
    assert res.score == max(res.candidates.values())


def test_committed_mode_stays_in_area(small_model_points):
    _, points = small_model_points
    target = target_from(points[("V2", 1)], n=15, region="IT")
    res = select_point(points, target, "committed", cfg=FAST)
    assert res.area == "IT" and set(k[0] for k in res.candidates) == {"IT"}


def test_single_point_and_empty_set(small_model_points):
    _, points = small_model_points
    one = {("V1", 0): points[("V1", 0)]}
    target = target_from(points[("V1", 0)], n=5)
    assert (select_point(one, target, cfg=FAST).area, select_point(one, target, cfg=FAST).timestep) == ("V1", 0)
    with pytest.raises(ValueError):
        select_point({}, target)


BINS = [[90, 110], [190, 210]]


def test_late_bin_beats_noisy_early_bin(source200):
    target = target_from(source200, snr=[0.0, np.inf], time_bins=BINS)
    res = timebinned_predictivity(source200, target, cfg=FAST)
    early, late = res.scores[(90.0, 110.0)], res.scores[(190.0, 210.0)]
    assert late > 0.95 and late - early > 0.5
    early_target = target.isel_time_bin(0)
    assert early <= np.percentile(permutation_null(source200, early_target, FAST, 20, seed=2), 95)


def test_constant_bins_score_identically(source200):
    flat = target_from(source200, snr=1.0)
    both = flat._replace(data=np.repeat(flat.data[..., None], 2, axis=-1), dims=("stimulus", "neuroid", "time_bin"),
                         time_bins=np.array(BINS, dtype=float))
    scores = timebinned_predictivity(source200, both, cfg=FAST).scores
    assert scores[(90.0, 110.0)] == scores[(190.0, 210.0)]


def test_single_bin_equals_plain_predictivity(source200):
    target = target_from(source200, snr=1.0, time_bins=[[70, 170]])
    res = timebinned_predictivity(source200, target, bins=[(70, 170)], cfg=FAST)
    assert res.scores[(70.0, 170.0)] == neural_predictivity(source200, target, FAST).score


def test_missing_bin_raises(source200):
    target = target_from(source200, time_bins=BINS)
    with pytest.raises(KeyError):
        timebinned_predictivity(source200, target, bins=[(300, 320)], cfg=FAST)


# transfer probe -------------------------------------------------------------------

def test_c_grid_is_exact_geometric():
    grid = c_grid()
    assert len(grid) == 10 and grid[0] == 0.0005 and grid[-1] == 0.05
    np.testing.assert_allclose(grid, [0.0005 * 100 ** (k / 9) for k in range(10)], rtol=1e-14)
    assert np.allclose(grid[1:] / grid[:-1], 100 ** (1 / 9))


def test_probe_reads_out_deterministic_label():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 3, 400)
    X = rng.normal(size=(400, 5))
    X[:, 2] = y
    res = transfer_probe(X[:300], y[:300], X[300:], y[300:])
    assert res.accuracy == 1.0 and res.best_c in res.accuracies


def test_probe_shuffled_labels_near_chance():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(4000, 10))
    y = rng.integers(0, 10, 4000)
    res = transfer_probe(X[:2000], y[:2000], X[2000:], y[2000:], C_grid=[0.0005, 0.05])
    assert abs(res.accuracy - 0.1) < 0.03


def test_probe_empty_grid():
    with pytest.raises(ValueError):
        transfer_probe(np.ones((4, 2)), [0, 1, 0, 1], np.ones((2, 2)), [0, 1], C_grid=[])


# suite and scorecard --------------------------------------------------------------

@pytest.fixture(scope="module")
def suite_data():
    stimuli = synth_stimuli(200, 4, 32, seed=3)
    targets = synth_targets(stimuli, seed=0)
    v4 = targets.v4
    rng = np.random.default_rng(0)
    early = targets.it.data + 2.0 * rng.normal(size=targets.it.data.shape)
    it_feats = NeuroidAssembly(np.stack([early, targets.it.data], -1), targets.it.stimulus_id,
                               targets.it.object_label, targets.it.neuroid_id, "IT",
                               dims=("stimulus", "neuroid", "time_bin"), time_bins=[[70, 150], [150, 250]])
    v4_feats = v4._replace(data=v4.data[..., None], dims=("stimulus", "neuroid", "time_bin"), time_bins=[[70, 170]])
    return stimuli, targets, {"V4": v4_feats, "IT": it_feats}


def test_score_features_fills_card(suite_data, tmp_path):
    _, targets, feats = suite_data
    cfg = BenchmarkConfig(neural=FAST, ost=OSTConfig(folds=5))
    card = score_features(feats, targets, cfg, "abc", 7)
    assert card.v4 > 0.9 and card.it > 0.9 and card.behavior is not None
    assert card.choices["it"]["area"] == "IT"
    assert card.ost is not None or card.reasons["ost"].startswith(("insufficient-data", "undefined"))
    assert np.median([r["r"] for r in card.details["neural_it"]]) == pytest.approx(card.it)
    card.ost = card.ost or 0.0
    assert card.composite == pytest.approx(np.mean([max(0, s) for s in (card.v4, card.it, card.behavior, card.ost)]),
                                           abs=1e-9)
    path = card.save(tmp_path / "card.json")
    again = ScoreCard.load(path)
    assert again.scores() == card.scores() and again.details.keys() == card.details.keys()
    assert again.config_hash == "abc" and again.seed == 7


def test_missing_area_is_reported(suite_data):
    _, targets, feats = suite_data
    card = score_features({"V4": feats["V4"]}, targets, BenchmarkConfig(neural=FAST))
    assert card.it is None and card.reasons["it"] == "no IT features" and card.composite is None


def test_feedforward_it_scores_zero_ost(suite_data):
    _, targets, feats = suite_data
    flat = feats["IT"].isel_time_bin(0)
    flat = flat._replace(data=flat.data[..., None], dims=("stimulus", "neuroid", "time_bin"), time_bins=[[70, 170]])
    card = score_features({"IT": flat}, targets, BenchmarkConfig(neural=FAST))
    assert card.ost == 0.0 and card.reasons["ost"] == "feedforward"


@pytest.mark.parametrize("kwargs", [
    {"neural": NeuralConfig(time_window=(170, 70))},
    {"ost": OSTConfig(timestep_times=((150, 250), (70, 150)))},
    {"mapping": "best"},
])
def test_benchmark_config_validation(kwargs):
    with pytest.raises(ConfigError):
        BenchmarkConfig(**kwargs).validate()


# ablation sweep -------------------------------------------------------------------

TINY = SweepBudget(train_images=40, test_images=20, bench_images=60, image_size=32, epochs=1, neural_folds=3,
                   recipe=TrainRecipe(batch=20, lr=0.05))


def tiny_base():
    return cornet_s(num_classes=3, input_size=32, width_divisor=32)


def test_expand_axes_counts_full_grid():
    variants = expand_axes(cornet_s(), ABLATION_AXES)
    assert len(variants) == 7 + 3 + 2 + 3 + 2 + 2 + 2
    with pytest.raises(ConfigError):
        expand_axes(cornet_s(), {"depth": [1]})


def test_empty_axes_gives_baseline_only():
    table = ablation_sweep(tiny_base(), {}, TINY)
    assert len(table.rows) == 1
    assert table.baseline["delta_top1"] == 0.0 and table.baseline["delta_brain_score"] in (0.0, None)


@pytest.fixture(scope="module")
def v4_sweep():
    return ablation_sweep(tiny_base(), {"times": {"V4": [1, 2, 4]}}, TINY)


def test_times_axis_rows_and_self_delta(v4_sweep):
    names = [r["variant"] for r in v4_sweep.rows]
    assert names == ["baseline", "times:V4=1", "times:V4=2"]
    assert v4_sweep.baseline["aliases"] == "times:V4=4"
    assert v4_sweep.baseline["delta_top1"] == 0.0


def test_sweep_is_reproducible(v4_sweep, tmp_path):
    again = ablation_sweep(tiny_base(), {"times": {"V4": [1, 2, 4]}}, TINY)
    for a, b in zip(v4_sweep.rows, again.rows):
        for key in ("delta_top1", "delta_brain_score"):
            assert (a[key] is None and b[key] is None) or abs(a[key] - b[key]) <= 1e-6
    assert v4_sweep.to_csv(tmp_path / "t.csv").read_text().count("\n") == 4


def test_invalid_variant_is_skipped():
    table = ablation_sweep(tiny_base(), {"expansion": [3]}, TINY)
    assert table.rows[1]["status"].startswith("skipped") and table.rows[1]["delta_top1"] is None
