"""Train a small CORnet-S for a few epochs and score it against synthetic targets.

Runs in about ten seconds on one CPU:

    python demos/quickstart.py
"""
from cortex_bench.assembly import synth_stimuli
from cortex_bench.benchmarks import BenchmarkConfig, NeuralConfig, score_features, synth_targets
from cortex_bench.model import TrainRecipe, build, compute_depth, cornet_s, evaluate_accuracy, extract_features, train


def main():
    config = cornet_s(num_classes=6, input_size=32, width_divisor=8)
    print(f"depth {compute_depth(config)}, areas {config.area_names}")

    train_set = synth_stimuli(300, 6, 32, seed=0)
    bench_set = synth_stimuli(240, 6, 32, seed=1)
    targets = synth_targets(bench_set, seed=0)

    model = build(config, seed=0)
    result = train(model, train_set, TrainRecipe(batch=32, epochs=8, lr=0.05, lr_step=6, seed=0))
    for row in result.log:
        print(f"epoch {row['epoch']:2d}  loss {row['train_loss']:.3f}  acc {row['train_accuracy']:.3f}")
    print(f"train-set accuracy (eval mode): {evaluate_accuracy(model, train_set):.3f}")

    features = {area: extract_features(model, bench_set, area) for area in ("V4", "IT")}
    print("IT features:", features["IT"].data.shape, "time bins", features["IT"].time_bins.tolist())
    card = score_features(features, targets, BenchmarkConfig(neural=NeuralConfig(folds=5)))
    for name, value in card.scores().items():
        shown = "-" if value is None else f"{value:.4f}"
        print(f"{name:>9}: {shown}  {card.reasons.get(name, '')}")
    print("composite:", None if card.composite is None else round(float(card.composite), 4))


if __name__ == "__main__":
    main()
