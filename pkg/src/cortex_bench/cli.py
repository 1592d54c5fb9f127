"""cortex-bench command line: gen | train | extract | score | sweep | report.

Every command accepts ``--config <json> --seed <int> --out <dir>
[--threads N]``.  Command flags override keys of the JSON config, which
override built-in defaults.  stdout carries only the result summary;
diagnostics go to stderr.  Each run writes ``<out>/<command>.manifest.json``
listing inputs and outputs with SHA-256 checksums.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__
from .errors import ChecksumError, ConfigError, DimensionError, InsufficientDataError, UndefinedCorrelationError

log = logging.getLogger("cortex_bench")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_SCHEMA = 4
EXIT_SHAPE = 5
EXIT_CHECKSUM = 6
EXIT_DATA = 7

EXIT_CODES_HELP = f"""exit codes:
  {EXIT_OK}  success
  {EXIT_INTERNAL}  unexpected internal error
  {EXIT_USAGE}  bad command-line usage
  {EXIT_MISSING_INPUT}  missing input file or directory
  {EXIT_SCHEMA}  config or schema violation
  {EXIT_SHAPE}  incompatible shapes or stimulus sets
  {EXIT_CHECKSUM}  checksum mismatch in an input artifact
  {EXIT_DATA}  insufficient data or undefined statistic
errors are reported on stderr as one JSON object: {{"error", "message", "exit_code"}}"""

SCHEMA_VERSION = 1
CONFIG_KEYS = {
    "gen": {"n", "bench_n", "categories", "size", "snr", "n_v4", "n_it"},
    "train": {"model", "data", "epochs", "batch", "lr", "lr_step", "lr_gamma", "momentum", "weight_decay", "augment",
              "eval_data"},
    "extract": {"checkpoint", "stimuli", "areas", "timestep"},
    "score": {"features", "targets", "folds", "n_pca", "n_pls", "include_ost", "mapping", "probe", "composite"},
    "sweep": {"base", "axes", "budget"},
    "report": {"scorecards", "names", "x", "y"},
}


@dataclass
class RunManifest:
    command: str
    argv: List[str]
    version: str
    config_hash: str
    seeds: Dict[str, int]
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    wall_clock_s: float = 0.0

    def write(self, out: Path) -> Path:
        path = out / f"{self.command}.manifest.json"
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n")
        return path


def checksum(path) -> str:
    """SHA-256 of a file, or of a directory's sorted (relative path, bytes) pairs."""
    path = Path(path)
    h = hashlib.sha256()
    if path.is_dir():
        for f in sorted(p for p in path.rglob("*") if p.is_file()):
            h.update(str(f.relative_to(path)).encode())
            h.update(f.read_bytes())
    else:
        h.update(path.read_bytes())
    return h.hexdigest()


def _require(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"input not found: {p}")
    return p


# config plumbing ---------------------------------------------------------------

def load_command_config(command: str, path: Optional[str]) -> dict:
    if path is None:
        return {}
    raw = json.loads(_require(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: config must be a JSON object"])
    version = raw.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError([f"{path}: unsupported schema_version {version}"])
    unknown = sorted(set(raw) - CONFIG_KEYS[command])
    if unknown:
        raise ConfigError([f"{path}: unknown keys for '{command}': {unknown}; allowed: {sorted(CONFIG_KEYS[command])}"])
    return raw


def _opt(args, cfg: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    return cfg.get(key, default)


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _model_config(spec, num_classes: int, input_size: int):
    from .model import CircuitConfig, cornet_s, desk_cornet_s

    if spec is None or spec == "desk":
        return desk_cornet_s(num_classes=num_classes, input_size=input_size)
    if spec == "cornet_s":
        return cornet_s(num_classes=num_classes, input_size=input_size)
    if isinstance(spec, dict):
        return CircuitConfig.from_dict(spec).validate()
    if isinstance(spec, str) and spec.endswith(".json"):
        return CircuitConfig.from_json(_require(spec).read_text()).validate()
    raise ConfigError([f"model must be 'desk', 'cornet_s', a config object or a .json path; got {spec!r}"])


# commands ----------------------------------------------------------------------

def cmd_gen(args, cfg, out: Path, man: RunManifest) -> str:
    from .assembly import save_stimuli, synth_stimuli
    from .benchmarks import save_targets, synth_targets

    n = int(_opt(args, cfg, "n", 500))
    bench_n = int(_opt(args, cfg, "bench_n", 0))
    cats = int(_opt(args, cfg, "categories", 10))
    size = int(_opt(args, cfg, "size", 64))
    if n < 0 or bench_n < 0:
        raise ConfigError(["image counts must be >= 0"])
    train_set = synth_stimuli(n, cats, size, seed=args.seed)
    man.outputs["train.stimuli"] = checksum(save_stimuli(train_set, out / "train"))
    summary = {"train_images": n}
    if bench_n:
        bench = synth_stimuli(bench_n, cats, size, seed=args.seed + 1)
        man.outputs["bench.stimuli"] = checksum(save_stimuli(bench, out / "bench"))
        targets = synth_targets(bench, seed=args.seed, n_v4=int(_opt(args, cfg, "n_v4", 40)),
                                n_it=int(_opt(args, cfg, "n_it", 40)), snr=float(_opt(args, cfg, "snr", 2.0)))
        man.outputs["targets"] = checksum(save_targets(targets, out / "targets"))
        summary["bench_images"] = bench_n
    return json.dumps(summary)


def cmd_train(args, cfg, out: Path, man: RunManifest) -> str:
    from .assembly import load_stimuli
    from .model import TrainRecipe, build, evaluate_accuracy, train

    data_path = _require(_opt(args, cfg, "data") or out / "train.stimuli")
    man.inputs[str(data_path)] = checksum(data_path)
    data = load_stimuli(data_path)
    if len(data) == 0:
        raise InsufficientDataError("training set is empty")
    model_cfg = _model_config(cfg.get("model"), len(data.categories), data.images.shape[-1])
    defaults = TrainRecipe(batch=32, epochs=30, lr=0.05, lr_step=20)
    recipe = TrainRecipe(**{k: _opt(args, cfg, k, getattr(defaults, k)) for k in
                            ("batch", "epochs", "lr", "lr_step", "lr_gamma", "momentum", "weight_decay", "augment")},
                         seed=args.seed)
    model = build(model_cfg, seed=args.seed)
    result = train(model, data, recipe, out_dir=out / "checkpoints")
    final = out / "model.ckpt"
    final.write_bytes(Path(result.checkpoints[-1]).read_bytes())
    (out / "train_log.json").write_text(json.dumps(result.log, indent=1) + "\n")
    accuracy = evaluate_accuracy(model, data) if recipe.epochs else None
    man.config_hash = model_cfg.config_hash()
    for p in result.checkpoints:
        man.outputs[str(Path(p).relative_to(out))] = checksum(p)
    man.outputs["model.ckpt"] = checksum(final)
    return json.dumps({"epochs": recipe.epochs, "train_accuracy": accuracy, "checkpoint": str(final),
                       "sha256": man.outputs["model.ckpt"]})


def cmd_extract(args, cfg, out: Path, man: RunManifest) -> str:
    from .assembly import load_stimuli, save_assembly
    from .model import Model, extract_features

    ckpt = _require(_opt(args, cfg, "checkpoint") or out / "model.ckpt")
    stim_path = _require(_opt(args, cfg, "stimuli") or out / "bench.stimuli")
    man.inputs[str(ckpt)] = checksum(ckpt)
    man.inputs[str(stim_path)] = checksum(stim_path)
    model = Model.from_checkpoint(str(ckpt))
    if not model.stats_initialized():
        from .model import calibrate_norm_stats

        log.info("checkpoint has no norm statistics; calibrating on the stimuli")
        calibrate_norm_stats(model, load_stimuli(stim_path))
    stimuli = load_stimuli(stim_path)
    areas = _opt(args, cfg, "areas") or ["IT"]
    timestep = _opt(args, cfg, "timestep", "all")
    timestep = timestep if timestep == "all" else int(timestep)
    shapes = {}
    for area in areas:
        asm = extract_features(model, stimuli, area, timestep)
        p = save_assembly(asm, out / f"features_{area}")
        man.outputs[p.name] = checksum(p)
        shapes[area] = list(asm.data.shape)
    man.config_hash = model.config.config_hash()
    return json.dumps({"features": shapes})


def _parse_composite(values: List[str]):
    from decimal import Decimal, InvalidOperation

    try:
        nums = [Decimal(v) for v in values]
    except InvalidOperation:
        raise ConfigError([f"--composite needs numbers, got {values}"]) from None
    if len(nums) not in (3, 4):
        raise ConfigError(["--composite takes V4 IT behavior [OST]"])
    return nums


def cmd_score(args, cfg, out: Path, man: RunManifest) -> str:
    from .assembly import load_assembly
    from .benchmarks import BenchmarkConfig, NeuralConfig, composite, load_targets, score_features, transfer_probe

    if args.composite is not None:
        nums = _parse_composite(args.composite)
        value = composite(*nums[:3], nums[3] if len(nums) == 4 else 0, include_ost=len(nums) == 4)
        return format(value.normalize(), "f")

    feature_paths = _opt(args, cfg, "features") or sorted(str(p) for p in out.glob("features_*.assembly"))
    if not feature_paths:
        raise FileNotFoundError("no feature assemblies given (use --features or run extract first)")
    features = {}
    for p in feature_paths:
        p = _require(p)
        man.inputs[str(p)] = checksum(p)
        asm = load_assembly(p)
        features[asm.provenance.get("area", str(asm.region[0]))] = asm
    targets_dir = _require(_opt(args, cfg, "targets") or out / "targets")
    man.inputs[str(targets_dir)] = checksum(targets_dir)
    targets = load_targets(targets_dir)
    neural = NeuralConfig(n_pca=int(_opt(args, cfg, "n_pca", 1000)), n_pls=int(_opt(args, cfg, "n_pls", 25)),
                          folds=int(_opt(args, cfg, "folds", 10)), seed=args.seed)
    bench_cfg = BenchmarkConfig(neural=neural, include_ost=bool(_opt(args, cfg, "include_ost", True)),
                                mapping=_opt(args, cfg, "mapping", "committed"))
    hashes = {a.provenance.get("config_hash", "") for a in features.values()}
    card = score_features(features, targets, bench_cfg, ",".join(sorted(h for h in hashes if h)), args.seed)
    if _opt(args, cfg, "probe", False):
        card.extras["probe_accuracy"] = _probe(features, targets, args.seed, transfer_probe)
    path = card.save(out / "scorecard.json")
    man.outputs["scorecard.json"] = checksum(path)
    man.config_hash = card.config_hash
    return json.dumps({"benchmarks": card.scores(), "composite": card.composite, "reasons": card.reasons,
                       **({"extras": card.extras} if card.extras else {})})


def _probe(features, targets, seed, transfer_probe) -> float:
    """Linear probe on the last IT pass: stratified 80/20 split of the benchmark images."""
    from .stats import CrossValPlan

    asm = features.get("IT") or next(iter(features.values()))
    X = (asm.isel_time_bin(asm.n_time_bins - 1) if "time_bin" in asm.dims else asm).as_matrix()
    y = asm.label_codes(targets.behavior.categories)
    train, test = CrossValPlan(5, seed).folds(y)[0]
    return transfer_probe(X[train], y[train], X[test], y[test]).accuracy


def cmd_sweep(args, cfg, out: Path, man: RunManifest) -> str:
    from .benchmarks import ABLATION_AXES, SweepBudget, ablation_sweep
    from .model import TrainRecipe

    budget_cfg = dict(cfg.get("budget", {}))
    recipe = TrainRecipe(**budget_cfg.pop("recipe", {"batch": 32, "lr": 0.05, "lr_step": 20}))
    try:
        budget = SweepBudget(**budget_cfg, recipe=recipe, seed=args.seed)
    except TypeError as exc:
        raise ConfigError([f"bad sweep budget: {exc}"]) from None
    spec = cfg.get("base", "small")
    base = _small_base(budget.image_size) if spec == "small" else _model_config(spec, 10, budget.image_size)
    table = ablation_sweep(base, cfg.get("axes", ABLATION_AXES), budget)
    man.outputs["sweep.csv"] = checksum(table.to_csv(out / "sweep.csv"))
    man.outputs["sweep.json"] = checksum(table.to_json(out / "sweep.json"))
    man.config_hash = base.config_hash()
    lines = [f"{r['variant']:<32} {r['status'][:8]:<8} d_top1={_fmt(r['delta_top1'])} "
             f"d_brain={_fmt(r['delta_brain_score'])}" for r in table.rows]
    return "\n".join(lines)


def _small_base(size: int):
    from .model import cornet_s

    return cornet_s(num_classes=10, input_size=size, width_divisor=8)


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:+.4f}"


def cmd_report(args, cfg, out: Path, man: RunManifest) -> str:
    from .benchmarks import ScoreCard
    from .plot import scatter_svg

    paths = _opt(args, cfg, "scorecards") or []
    if not paths:
        raise FileNotFoundError("no scorecards given")
    names = _opt(args, cfg, "names") or [Path(p).parent.name or Path(p).stem for p in paths]
    if len(names) != len(paths):
        raise ConfigError(["--names must match --scorecards in length"])
    xkey, ykey = _opt(args, cfg, "x", "probe_accuracy"), _opt(args, cfg, "y", "composite")
    rows = []
    for name, p in zip(names, paths):
        p = _require(p)
        man.inputs[str(p)] = checksum(p)
        card = ScoreCard.load(p)
        row = {"model": name, **card.scores(), "composite": card.composite, **card.extras}
        rows.append(row)
    cols = ["model", "v4", "it", "behavior", "ost", "composite"] + sorted({k for r in rows for k in r} -
                                                                        {"model", "v4", "it", "behavior", "ost", "composite"})
    with open(out / "report.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({c: ("" if r.get(c) is None else r.get(c)) for c in cols})
    svg = scatter_svg([r.get(xkey) for r in rows], [r.get(ykey) for r in rows], [r["model"] for r in rows],
                      xlabel=xkey, ylabel=ykey, title=f"{ykey} vs {xkey}")
    (out / "report.svg").write_text(svg)
    man.outputs["report.csv"] = checksum(out / "report.csv")
    man.outputs["report.svg"] = checksum(out / "report.svg")
    width = max(len(c) for c in cols) + 2
    lines = ["".join(f"{c:<{width}}" for c in cols)]
    for r in rows:
        lines.append("".join(f"{(_cell(r.get(c))):<{width}}" for c in cols))
    return "\n".join(lines)


def _cell(v) -> str:
    if v is None:
        return "-"
    return f"{v:.4f}" if isinstance(v, float) else str(v)


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "extract": cmd_extract, "score": cmd_score, "sweep": cmd_sweep,
            "report": cmd_report}


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config for this command")
    common.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("--threads", type=int, help="worker threads (default: $CORTEX_BENCH_THREADS or 1)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="cortex-bench", description="Desk-scale brain-likeness benchmarking.",
                                     epilog=EXIT_CODES_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_, epilog=EXIT_CODES_HELP,
                              formatter_class=argparse.RawDescriptionHelpFormatter)

    p = add("gen", "generate synthetic stimuli and target data")
    p.add_argument("--n", type=int, help="training images (default 500)")
    p.add_argument("--bench-n", dest="bench_n", type=int, help="benchmark images with targets (default 0)")
    p.add_argument("--categories", type=int, help="shape classes (default 10)")
    p.add_argument("--size", type=int, help="image side in pixels (default 64)")

    p = add("train", "train a circuit model")
    p.add_argument("--data", help="training .stimuli directory (default <out>/train.stimuli)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", type=int)
    p.add_argument("--lr", type=float)

    p = add("extract", "extract pooled area features")
    p.add_argument("--checkpoint", help="model checkpoint (default <out>/model.ckpt)")
    p.add_argument("--stimuli", help=".stimuli directory (default <out>/bench.stimuli)")
    p.add_argument("--area", dest="areas", action="append", help="area name; repeatable (default IT)")
    p.add_argument("--timestep", help="'all' (default) or an integer pass index")

    p = add("score", "score features against targets, or compute a composite")
    p.add_argument("--features", nargs="+", help="feature .assembly directories (default <out>/features_*)")
    p.add_argument("--targets", help="targets directory (default <out>/targets)")
    p.add_argument("--folds", type=int)
    p.add_argument("--mapping", choices=["committed", "search"])
    p.add_argument("--probe", action="store_true", default=None, help="also run a linear probe on IT features")
    p.add_argument("--composite", nargs="+", metavar="SCORE",
                   help="print the composite of V4 IT behavior [OST] and exit")

    add("sweep", "run the architecture ablation sweep")

    p = add("report", "tabulate scorecards and draw a scatter plot")
    p.add_argument("--scorecards", nargs="+")
    p.add_argument("--names", nargs="+")
    p.add_argument("--x", help="x-axis key (default probe_accuracy)")
    p.add_argument("--y", help="y-axis key (default composite)")
    return parser


def _classify(exc: BaseException) -> int:
    if isinstance(exc, FileNotFoundError):
        return EXIT_MISSING_INPUT
    if isinstance(exc, ChecksumError):
        return EXIT_CHECKSUM
    if isinstance(exc, DimensionError):
        return EXIT_SHAPE
    if isinstance(exc, (InsufficientDataError, UndefinedCorrelationError)):
        return EXIT_DATA
    if isinstance(exc, (ConfigError, json.JSONDecodeError, KeyError, ValueError)):
        return EXIT_SCHEMA
    return EXIT_INTERNAL


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None:
        os.environ["CORTEX_BENCH_THREADS"] = str(max(1, args.threads))
    out = Path(args.out)
    start = time.perf_counter()
    try:
        cfg = load_command_config(args.command, args.config)
        out.mkdir(parents=True, exist_ok=True)
        man = RunManifest(args.command, argv, __version__, _config_hash(cfg), {"seed": args.seed})
        if args.config:
            man.inputs[args.config] = checksum(args.config)
        summary = COMMANDS[args.command](args, cfg, out, man)
        if not (args.command == "score" and args.composite is not None):
            man.wall_clock_s = round(time.perf_counter() - start, 3)
            man.write(out)
    except Exception as exc:  # every failure becomes one JSON line on stderr
        code = _classify(exc)
        message = "; ".join(exc.violations) if isinstance(exc, ConfigError) else str(exc)
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": message, "exit_code": code}) + "\n")
        if code == EXIT_INTERNAL:
            log.debug("traceback", exc_info=True)
        return code
    sys.stdout.write(summary + "\n")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
