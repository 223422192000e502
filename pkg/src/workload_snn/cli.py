"""Command-line entry point: ``workload-snn <synth|extract|train|evaluate|compare>``.

Settings come from defaults, then an optional JSON ``--config`` file, then
flags. Every command validates its settings and inputs before it creates or
writes anything under ``--out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields, replace
from importlib import resources
from pathlib import Path

from . import __version__
from .compare import compare_models, read_model_table, write_report
from .errors import ConfigError, DataError, InvalidSpecError, WorkloadError
from .features import FEATURE_SETS, WindowSpec
from .snn import TrainConfig

log = logging.getLogger("workload_snn")

CONFIG_KEYS = {
    "seed", "out", "input", "feature_set", "model", "window", "synth", "train", "compare", "jobs",
}
TRAIN_KEYS = {"test_frac", "split", "k", "lambdas", "snn_grid", "snn"}
COMPARE_KEYS = {"alpha", "n_bootstrap", "table4"}


def _parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    sup = argparse.SUPPRESS
    p.add_argument("--config", default=sup, help="JSON experiment configuration")
    p.add_argument("--seed", type=int, default=sup, help="master seed (required here or in the config)")
    p.add_argument("--out", default=sup, help="output directory")
    p.add_argument("--feature-set", dest="feature_set", choices=FEATURE_SETS, default=sup)
    p.add_argument("--model", choices=("lr", "hybrid_snn", "bio_snn"), default=sup)
    p.add_argument("--jobs", type=int, default=sup, help="participants processed in parallel")
    return p


def build_parser() -> argparse.ArgumentParser:
    parent = _parent()
    parser = argparse.ArgumentParser(
        prog="workload-snn",
        description="Workload classification from physiological signals with spiking networks.",
        parents=[parent],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[parent], help="generate synthetic recordings")
    s.add_argument("--participants", type=int, default=argparse.SUPPRESS)
    s.add_argument("--tasks", type=int, default=argparse.SUPPRESS)
    s.add_argument("--task-s", dest="task_s", type=float, default=argparse.SUPPRESS)
    s.add_argument("--baseline-s", dest="baseline_s", type=float, default=argparse.SUPPRESS)
    s.add_argument("--theta-effect", dest="theta", type=float, default=argparse.SUPPRESS)
    s.add_argument("--hrv-effect", dest="hrv", type=float, default=argparse.SUPPRESS)
    s.add_argument("--scr-effect", dest="scr", type=float, default=argparse.SUPPRESS)
    s.add_argument("--noise", type=float, default=argparse.SUPPRESS)
    s.add_argument("--constant-eda", dest="constant_eda", action="store_true", default=argparse.SUPPRESS)

    e = sub.add_parser("extract", parents=[parent], help="raw recordings -> feature CSV")
    e.add_argument("--input", default=argparse.SUPPRESS, help="directory of participant folders")

    t = sub.add_parser("train", parents=[parent], help="per-participant model selection and training")
    t.add_argument("--input", default=argparse.SUPPRESS, help="feature CSV")

    v = sub.add_parser("evaluate", parents=[parent], help="summarise training reports")
    v.add_argument("--input", default=argparse.SUPPRESS, help="directory written by train")

    c = sub.add_parser("compare", parents=[parent], help="statistical comparison of models")
    c.add_argument("--input", nargs="+", default=argparse.SUPPRESS,
                   help="CSV files with model,mean_accuracy,std or model,fold,accuracy")
    c.add_argument("--table4", action="store_true", default=argparse.SUPPRESS,
                   help="include the bundled published summary table")
    c.add_argument("--alpha", type=float, default=argparse.SUPPRESS)
    c.add_argument("--n-bootstrap", dest="n_bootstrap", type=int, default=argparse.SUPPRESS)
    return parser


# --------------------------------------------------------------------------- configuration


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    return doc


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags into one settings dict."""
    flags = vars(args)
    conf = load_config(flags["config"]) if "config" in flags else {}
    merged = {
        "seed": None, "out": None, "input": None, "feature_set": "multimodal", "model": "bio_snn", "jobs": 1,
        "window": {}, "synth": {}, "train": {}, "compare": {},
    }
    for key, value in conf.items():
        merged[key] = value
    for key in ("seed", "out", "input", "feature_set", "model", "jobs"):
        if key in flags:
            merged[key] = flags[key]
    synth_flags = {k: flags[k] for k in ("participants", "tasks", "task_s", "baseline_s", "noise", "constant_eda")
                   if k in flags}
    effect_flags = {k: flags[k] for k in ("theta", "hrv", "scr") if k in flags}
    merged["synth"] = dict(merged["synth"]) | synth_flags
    if effect_flags:
        merged["synth"]["effects"] = dict(merged["synth"].get("effects", {})) | effect_flags
    merged["compare"] = dict(merged["compare"]) | {k: flags[k] for k in COMPARE_KEYS if k in flags}

    if merged["seed"] is None:
        raise ConfigError("a seed is required (--seed or \"seed\" in the config)")
    if not isinstance(merged["seed"], int) or merged["seed"] < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {merged['seed']!r}")
    if merged["out"] is None:
        raise ConfigError("an output directory is required (--out or \"out\" in the config)")
    if merged["feature_set"] not in FEATURE_SETS:
        raise ConfigError(f"unknown feature set {merged['feature_set']!r}")
    if not isinstance(merged["jobs"], int) or merged["jobs"] < 1:
        raise ConfigError("jobs must be a positive integer")
    return merged


def _window(settings) -> WindowSpec:
    try:
        return WindowSpec(**settings["window"])
    except TypeError as exc:
        raise ConfigError(f"window: {exc}") from None


def _train_settings(settings):
    from .pipeline import TrainSettings

    doc = dict(settings["train"])
    unknown = set(doc) - TRAIN_KEYS
    if unknown:
        raise ConfigError(f"train: unknown keys {sorted(unknown)}")
    snn_doc = doc.pop("snn", {})
    valid = {f.name for f in fields(TrainConfig)}
    bad = set(snn_doc) - valid
    if bad:
        raise ConfigError(f"train.snn: unknown keys {sorted(bad)}")
    if "lambdas" in doc:
        doc["lambdas"] = tuple(doc["lambdas"])
    base = TrainSettings()
    return replace(
        base,
        model=settings["model"],
        feature_set=settings["feature_set"],
        seed=settings["seed"],
        snn=replace(base.snn, **snn_doc),
        **doc,
    )


def _require_input(settings, what: str) -> Path:
    if settings["input"] is None:
        raise ConfigError(f"--input ({what}) is required")
    path = Path(settings["input"])
    if not path.exists():
        raise DataError(f"input {path} does not exist")
    return path


# --------------------------------------------------------------------------- commands


def cmd_synth(settings) -> int:
    from .synth import SynthSpec, write_synth

    spec = SynthSpec.from_dict(dict(settings["synth"]) | {"seed": settings["seed"]})
    written = write_synth(spec, settings["out"])
    log.info("wrote %d files for %d participant(s) to %s", len(written), spec.participants, settings["out"])
    return 0


def cmd_extract(settings) -> int:
    from .pipeline import extract_features, write_extraction

    window = _window(settings)
    src = _require_input(settings, "directory of participant folders")
    matrix, provenance = extract_features(src, settings["feature_set"], window, jobs=settings["jobs"])
    csv_path, _ = write_extraction(settings["out"], matrix, provenance)
    log.info("%d windows x %d features -> %s", *matrix.shape, csv_path)
    return 0


def cmd_train(settings) -> int:
    from .pipeline import load_features, train_all, write_training

    train = _train_settings(settings)
    matrix = load_features(_require_input(settings, "feature CSV"), train.feature_set)
    results = train_all(matrix, train, jobs=settings["jobs"])
    write_training(settings["out"], results, train)
    for _, report in results:
        log.info("%s %s: held-out accuracy %.3f", train.model, report["participant"],
                 report["test_metrics"]["accuracy"])
    return 0


def cmd_evaluate(settings) -> int:
    from .pipeline import collect_reports, summarize_reports, write_evaluation

    reports = collect_reports(_require_input(settings, "training output directory"))
    summary = summarize_reports(reports)
    write_evaluation(settings["out"], summary)
    for row in summary["macro"]:
        log.info("%s: %.3f +/- %.3f over %d participant(s)", row["model"], row["mean_accuracy"], row["std"],
                 row["participants"])
    return 0


def cmd_compare(settings) -> int:
    conf = settings["compare"]
    unknown = set(conf) - COMPARE_KEYS
    if unknown:
        raise ConfigError(f"compare: unknown keys {sorted(unknown)}")
    alpha = float(conf.get("alpha", 0.05))
    n = int(conf.get("n_bootstrap", 1000))
    if not 0 < alpha < 1 or n < 3:
        raise ConfigError("alpha must lie in (0, 1) and n_bootstrap be at least 3")
    sources = []
    if conf.get("table4"):
        sources.append(resources.files("workload_snn").joinpath("data/table4.csv"))
    inputs = settings["input"] or []
    if isinstance(inputs, str):
        inputs = [inputs]
    for p in inputs:
        if not Path(p).is_file():
            raise DataError(f"input {p} does not exist")
        sources.append(Path(p))
    if not sources:
        raise ConfigError("compare needs --input files or --table4")
    models = {}
    for src in sources:
        for name, value in read_model_table(src).items():
            if name in models:
                raise DataError(f"model {name!r} appears in more than one input")
            models[name] = value
    if len(models) < 2:
        raise ConfigError(f"compare needs at least two models, got {len(models)}")
    report = compare_models(models, alpha=alpha, seed=settings["seed"], n=n)
    json_path, csv_path = write_report(settings["out"], report)
    log.info("%s branch (%s); %s p = %.3g -> %s", report.branch, report.reason, report.omnibus["test"],
             report.omnibus["p"], csv_path)
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    command = args.command
    try:
        settings = resolve(args)
        return COMMANDS[command](settings)
    except InvalidSpecError as exc:
        print(f"workload-snn {command}: configuration error: {exc}", file=sys.stderr)
        return exc.exit_code
    except WorkloadError as exc:
        print(f"workload-snn {command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"workload-snn {command}: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
