"""Command-line interface: validate, label, train, evaluate, predict.

Settings come from an optional TOML file (``--config``); command-line flags
override it.  Example config::

    rule = "rules/pingpong.foe"
    log = "logs/incidents.xes.gz"
    model = "tree"
    unit = "days"

    [encoder]
    type = "onehot"
    attributes = ["concept:name", "org:resource"]

    [model_params]
    max_depth = 10
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .ast import validate
from .encoding import LastNOneHot, config_from_dict, fit
from .evaluator import check_well_defined
from .event_log import CsvMapping, EventLog, load_csv, load_xes
from .labeling import Task, build_dataset, export_csv, k_range, require_rows, training_prefixes
from .ml.holdout import DEFAULT_SPLIT, prepare_holdout, score
from .ml.models import ZeroRSpec, load_model, save_model, spec_from_name, train
from .parser import ParseError, parse_rule

MS_PER_DAY = 86_400_000

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_FINDINGS = 2
EXIT_ILL_DEFINED = 3


class CliError(Exception):
    pass


@dataclass
class RunConfig:
    rule: str | None = None
    log: str | None = None
    format: str | None = None
    encoder: dict = field(default_factory=lambda: {"type": "onehot", "attributes": ["concept:name"]})
    model: str = "tree"
    model_params: dict = field(default_factory=dict)
    split: float = float(DEFAULT_SPLIT)
    seed: int = 0
    unit: str = "ms"
    out: str | None = None
    include_k1: bool = False
    include_klast: bool = False
    csv: dict = field(default_factory=dict)

    def split_fraction(self):
        if self.split == float(DEFAULT_SPLIT):
            return DEFAULT_SPLIT
        return Fraction(self.split).limit_denominator(10**6)


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            data = tomllib.load(fh)
        for key, value in data.items():
            key = key.replace("-", "_")
            if not hasattr(cfg, key):
                raise CliError(f"unknown config key {key!r}")
            setattr(cfg, key, value)
    for key in ("rule", "log", "format", "model", "split", "seed", "unit", "out"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "attributes", None):
        cfg.encoder = {"type": "onehot", "attributes": [a.strip() for a in args.attributes.split(",")]}
    if getattr(args, "max_depth", None) is not None:
        cfg.model_params = {**cfg.model_params, "max_depth": args.max_depth}
    if getattr(args, "include_k1", False):
        cfg.include_k1 = True
    if getattr(args, "include_klast", False):
        cfg.include_klast = True
    if not 0 < cfg.split < 1:
        raise CliError(f"split must lie strictly between 0 and 1, got {cfg.split}")
    if cfg.unit not in ("ms", "days"):
        raise CliError(f"unit must be ms or days, got {cfg.unit!r}")
    return cfg


def read_rule(path):
    if path is None:
        raise CliError("no rule given (--rule)")
    return parse_rule(Path(path).read_text(encoding="utf-8"))


def read_log(cfg: RunConfig) -> EventLog:
    if cfg.log is None:
        raise CliError("no log given (--log)")
    fmt = cfg.format or ("csv" if cfg.log.endswith(".csv") else "xes")
    if fmt == "xes":
        return load_xes(cfg.log)
    if fmt == "csv":
        if not cfg.csv:
            raise CliError("CSV input needs a [csv] section with case_column and timestamp_column")
        return load_csv(cfg.log, CsvMapping(**cfg.csv))
    raise CliError(f"unknown log format {fmt!r}")


def _scale(value, unit):
    return value / MS_PER_DAY if unit == "days" and value is not None else value


# ---------------------------------------------------------------------------
# commands

def cmd_validate(args) -> int:
    try:
        rule = read_rule(args.rule)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = validate(rule)
    if not report.ok:
        print(report)
        return EXIT_FINDINGS
    if args.log:
        log = read_log(build_config(args))
        wd = check_well_defined(rule, log)
        if not wd.ok:
            print(f"{len(wd.violations)} well-definedness violation(s):")
            for v in wd.violations:
                print(f"  {v}")
            return EXIT_ILL_DEFINED
    print(f"ok ({rule.kind.value} rule, {len(rule.cases)} case(s))")
    return EXIT_OK


def _fit_on(cfg, log):
    prefixes = training_prefixes(log, cfg.include_k1, cfg.include_klast)
    if not prefixes:
        raise CliError("log has no prefixes in the labelling range")
    return fit(config_from_dict(cfg.encoder), prefixes, default_n=max(len(t) for t in log))


def cmd_label(args) -> int:
    cfg = build_config(args)
    rule = read_rule(cfg.rule)
    log = read_log(cfg)
    prefixes = training_prefixes(log, cfg.include_k1, cfg.include_klast)
    if prefixes:
        encoder = _fit_on(cfg, log)
    else:
        encoder = fit(LastNOneHot(("concept:name",), 1), [t.events for t in log.traces])
    ds = build_dataset(rule, log, encoder, cfg.include_k1, cfg.include_klast)
    print(f"{len(ds)} rows, {len(ds.feature_names)} columns")
    print(ds.skip_report())
    if cfg.out:
        if len(ds) == 0:
            print("nothing written: dataset is empty", file=sys.stderr)
        else:
            export_csv(ds, cfg.out)
            print(f"wrote {cfg.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = build_config(args)
    if not cfg.out:
        raise CliError("train needs --out for the model file")
    rule = read_rule(cfg.rule)
    log = read_log(cfg)
    encoder = _fit_on(cfg, log)
    ds = require_rows(build_dataset(rule, log, encoder, cfg.include_k1, cfg.include_klast))
    spec = spec_from_name(cfg.model, seed=cfg.seed, **cfg.model_params)
    model = train(ds, spec)
    save_model(model, cfg.out, encoder=encoder,
               metadata={"rule": Path(cfg.rule).read_text(encoding="utf-8"), "rows": len(ds)})
    print(f"trained {cfg.model} on {len(ds)} rows; wrote {cfg.out}")
    return EXIT_OK


_CLASS_COLUMNS = (("AUC", "auc"), ("Accuracy", "accuracy"), ("W.Prec", "weighted_precision"),
                  ("W.Rec", "weighted_recall"), ("F-Measure", "f_measure"))


def cmd_evaluate(args) -> int:
    cfg = build_config(args)
    rule = read_rule(cfg.rule)
    log = read_log(cfg)
    prepared = prepare_holdout(rule, log, [config_from_dict(cfg.encoder)], cfg.split_fraction(),
                               cfg.include_k1, cfg.include_klast)
    runs = [("ZeroR", ZeroRSpec()), (cfg.model, spec_from_name(cfg.model, seed=cfg.seed, **cfg.model_params))]
    results = [(name, score(prepared, spec).metrics) for name, spec in runs]
    task = prepared.train.task
    doc = {"rule": cfg.rule, "log": cfg.log, "task": task.value, "split": cfg.split,
           "n_train": len(prepared.train), "n_test": len(prepared.test), "models": []}
    if task is Task.CLASSIFICATION:
        header = ["Model"] + [c for c, _ in _CLASS_COLUMNS]
        rows = []
        for name, m in results:
            values = {key: getattr(m, key) for _, key in _CLASS_COLUMNS}
            rows.append([name] + [f"{values[key]:.4f}" for _, key in _CLASS_COLUMNS])
            doc["models"].append({"model": name, **values, "flags": m.flags})
    else:
        header = ["Model", f"MAE ({cfg.unit})", f"RMSE ({cfg.unit})"]
        doc["unit"] = cfg.unit
        rows = []
        for name, m in results:
            mae, rmse = _scale(m.mae, cfg.unit), _scale(m.rmse, cfg.unit)
            rows.append([name, f"{mae:.4f}", f"{rmse:.4f}"])
            doc["models"].append({"model": name, "mae": mae, "rmse": rmse,
                                  "mae_ms": m.mae, "rmse_ms": m.rmse})
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    for r in [header] + rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip())
    print(f"train rows {len(prepared.train)}, test rows {len(prepared.test)}")
    if cfg.out:
        Path(cfg.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model_file)
    if model.encoder is None:
        raise CliError("model file carries no encoder")
    cfg = build_config(args)
    log = read_log(cfg)
    try:
        trace = log.trace(args.trace)
    except KeyError:
        raise CliError(f"unknown trace {args.trace!r}") from None
    if not 1 <= args.k <= len(trace):
        raise CliError(f"k={args.k} outside 1..{len(trace)} for trace {args.trace!r}")
    if model.encoder.width != model.n_features:
        raise CliError("encoder width does not match the model schema")
    vec = model.encoder.encode(trace.events[:args.k])
    value, score_ = model.predict_one(vec)
    if model.task is Task.REGRESSION:
        print(f"prediction: {_scale(value, cfg.unit)!r} {cfg.unit}")
    else:
        print(f"prediction: {value}")
        print(f"score: {score_!r}")
    if args.k not in k_range(len(trace)):
        print("note: k is outside the range used for training", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

def _common(p, needs_rule=True):
    p.add_argument("--config", help="TOML run configuration")
    if needs_rule:
        p.add_argument("--rule", help="rule file (.foe)")
    p.add_argument("--log", help="event log (.xes, .xes.gz or .csv)")
    p.add_argument("--format", choices=("xes", "csv"))


def _modelling(p):
    p.add_argument("--model", choices=("zeror", "tree", "linear", "logistic"))
    p.add_argument("--seed", type=int)
    p.add_argument("--max-depth", type=int, dest="max_depth")
    p.add_argument("--attributes", help="comma-separated attributes for one-hot encoding")
    p.add_argument("--include-k1", action="store_true", dest="include_k1")
    p.add_argument("--include-klast", action="store_true", dest="include_klast")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foe-predict", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and check a rule, optionally against a log")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("label", help="write the labelled prefix dataset as CSV")
    _common(p)
    _modelling(p)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("train", help="train on the whole log and save the model")
    _common(p)
    _modelling(p)
    p.add_argument("--out", help="model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="holdout evaluation against ZeroR")
    _common(p)
    _modelling(p)
    p.add_argument("--split", type=float)
    p.add_argument("--unit", choices=("ms", "days"))
    p.add_argument("--out", help="JSON output path")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", help="predict for the prefix of one trace")
    _common(p, needs_rule=False)
    p.add_argument("--model-file", required=True, dest="model_file")
    p.add_argument("--trace", required=True, help="trace id")
    p.add_argument("--k", type=int, required=True, help="prefix length")
    p.add_argument("--unit", choices=("ms", "days"))
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 1
    except (CliError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
