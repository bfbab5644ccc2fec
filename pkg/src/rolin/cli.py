"""Command line entry point: train, predict, benchmark, report."""
import argparse
import csv
import json
import logging
import sys

from .baselines import METHODS
from .bench import ExperimentSpec, fit_method, read_report, run_experiment, summarize, write_report, write_summary
from .data import load_csv, load_features
from .losses import FITTABLE_LOSSES, LossKind
from .model_io import load_model, save_model
from .robust_cv import CVConfig

log = logging.getLogger("rolin")

LOSS_CHOICES = [k.value for k in FITTABLE_LOSSES]


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _method_list(text):
    methods = [v.strip() for v in text.split(",") if v.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown method(s) {', '.join(bad)}; choose from {', '.join(METHODS)}")
    return methods


class _Parser(argparse.ArgumentParser):
    # one-line diagnostics instead of the full usage dump
    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser():
    p = _Parser(prog="rolin", description="Robust linear classifiers for small training sets.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="fit one method and write a model file")
    t.add_argument("--data", required=True)
    t.add_argument("--label", required=True, help="name of the label column")
    t.add_argument("--positive-label")
    t.add_argument("--loss", choices=LOSS_CHOICES, default="logistic")
    t.add_argument("--method", choices=METHODS, default="rolin")
    t.add_argument("--cv-objective", choices=[k.value for k in LossKind])
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)

    pr = sub.add_parser("predict", help="score a CSV with a saved model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--out", required=True)

    b = sub.add_parser("benchmark", help="run the repeated-split comparison")
    b.add_argument("--config", help="JSON file with experiment fields; flags override it")
    b.add_argument("--data")
    b.add_argument("--label")
    b.add_argument("--positive-label")
    b.add_argument("--loss", choices=LOSS_CHOICES)
    b.add_argument("--methods", type=_method_list)
    b.add_argument("--sizes", type=_int_list)
    b.add_argument("--reps", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--cv-objective", choices=[k.value for k in LossKind])
    b.add_argument("--trim", type=int)
    b.add_argument("--out")

    r = sub.add_parser("report", help="turn a benchmark report into a CSV table")
    r.add_argument("report")
    r.add_argument("--out", help="CSV path (default: stdout)")
    return p


def _train(args):
    data = load_csv(args.data, args.label, args.positive_label)
    cv = CVConfig(seed=args.seed, cv_objective=args.cv_objective)
    model, choice = fit_method(args.method, data, args.loss, cv)
    model.extra.update(label_column=args.label, positive_label=data.source_meta["positive_label"], seed=args.seed)
    save_model(model, args.out)
    log.info("trained %s with %s, wrote %s", args.method, json.dumps(choice), args.out)


def _predict(args):
    model = load_model(args.model)
    X = load_features(args.data, model.feature_names, model.extra.get("label_column"))
    scores = model.score(X)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "score", "label"])
        for i, s in enumerate(scores):
            w.writerow([i, repr(float(s)), 1 if s > 0 else -1])


_FLAG_FIELDS = {
    "data": "data_path",
    "label": "label_column",
    "positive_label": "positive_label",
    "loss": "loss",
    "methods": "methods",
    "sizes": "train_sizes",
    "reps": "repetitions",
    "seed": "base_seed",
    "cv_objective": "cv_objective",
    "trim": "trim_count",
    "out": "output",
}


def experiment_from_args(args) -> ExperimentSpec:
    fields = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            fields = json.load(fh)
        if not isinstance(fields, dict):
            raise ValueError(f"{args.config}: expected a JSON object")
    for flag, name in _FLAG_FIELDS.items():
        value = getattr(args, flag)
        if value is not None:
            fields[name] = value
    spec = ExperimentSpec.from_dict(fields)
    if not spec.output:
        raise ValueError("benchmark needs an output path (--out or 'output' in the config)")
    return spec


def _benchmark(args):
    spec = experiment_from_args(args)
    report = run_experiment(spec)
    write_report(report, spec.output)
    failed = sum(len(c["failures"]) for c in report["cells"])
    if failed:
        log.warning("%d repetition(s) failed; see the report's failures lists", failed)
    log.info("wrote %s", spec.output)


def _report(args):
    rows = summarize(read_report(args.report))
    if args.out:
        write_summary(rows, args.out)
    else:
        from .bench import SUMMARY_FIELDS

        w = csv.DictWriter(sys.stdout, fieldnames=SUMMARY_FIELDS)
        w.writeheader()
        w.writerows(rows)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"rolin: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    handlers = {"train": _train, "predict": _predict, "benchmark": _benchmark, "report": _report}
    try:
        handlers[args.command](args)
    except (ValueError, OSError, KeyError, TypeError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"rolin: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
