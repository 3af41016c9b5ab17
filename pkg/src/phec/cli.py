"""Command-line entry point.

Commands mirror the experimental stages: prepare (CSV -> encoded,
normalized dataset), synth (synthetic data), noise (label flipping),
train (any pipeline variant), eval (metrics on held-out data), report
(summarize a report file).

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import data as dat
from .config import parse_config
from .errors import ConfigError, DataError, PhecError
from .evaluation import time_per_instance
from .pipelines import load_bundle, save_bundle, train_pipeline
from .report import build_eval_report, build_train_report, emit_report, load_report, summarize_report


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; route them through ConfigError
    # so usage problems exit 1 like every other config problem.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="phec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="encode and normalize a CSV into a dataset file")
    p.add_argument("--input", required=True, help="CSV file")
    p.add_argument("--schema", required=True, help="sidecar schema (one column kind per line)")
    p.add_argument("--out", required=True, help="output dataset file")
    p.add_argument("--header", action="store_true", help="skip the first CSV line")
    p.add_argument("--grouping", help="attack grouping table (JSON)")
    p.add_argument("--encoder", help="reuse a fitted label encoder (test-time)")
    p.add_argument("--encoder-out", help="write the fitted label encoder here")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--preset", required=True, choices=dat.SYNTH_PRESETS)
    p.add_argument("--out", required=True)
    p.add_argument("--sizes", help='JSON counts per category, e.g. \'{"DoS":100,"Normal":400}\'')
    p.add_argument("--dim", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("noise", help="flip labels with symmetric noise")
    p.add_argument("--data", required=True, help="input dataset file")
    p.add_argument("--rho", type=float, required=True, help="flip rate in percent, [0, 50)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output dataset file")

    p = sub.add_parser("train", help="train a pipeline from a config file")
    p.add_argument("--config", required=True)

    p = sub.add_parser("eval", help="evaluate a trained model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--time", action="store_true",
                   help="measure per-instance latency (makes the report non-deterministic)")

    p = sub.add_parser("report", help="summarize a report file")
    p.add_argument("--report", required=True)
    return parser


def _cmd_prepare(args) -> int:
    spec = dat.load_schema(args.schema)
    raw = dat.load_csv(args.input, spec, header=args.header)
    encoder = dat.load_encoder(args.encoder) if args.encoder else None
    dataset, encoder = dat.encode_and_normalize(raw, encoder)
    if args.grouping:
        table = dat.GroupingTable.from_file(args.grouping)
        dataset = dat.group_attacks(dataset, table)
    dat.save_dataset(dataset, args.out)
    if args.encoder_out:
        dat.save_encoder(encoder, args.encoder_out)
    print(f"prepared {dataset.n} samples x {dataset.dim} features -> {args.out}")
    return 0


def _cmd_synth(args) -> int:
    sizes = None
    if args.sizes:
        try:
            sizes = json.loads(args.sizes)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"--sizes is not valid JSON: {exc}")
    dataset = dat.synth_generate(args.preset, sizes, seed=args.seed, dim=args.dim)
    dat.save_dataset(dataset, args.out)
    print(f"generated {dataset.n} samples ({args.preset}) -> {args.out}")
    return 0


def _cmd_noise(args) -> int:
    dataset = dat.load_dataset(args.data)
    noisy, flipped = dat.inject_sln_noise(dataset, dat.NoiseSpec(args.rho, args.seed))
    dat.save_dataset(noisy, args.out)
    print(f"flipped {flipped.size} of {dataset.n} labels (rho={args.rho}) -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    try:
        text = open(args.config, "r", encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}")
    cfg = parse_config(text)
    dataset = dat.load_dataset(cfg.data)
    grouping = dat.GroupingTable.from_file(cfg.grouping) if cfg.grouping else None
    outcome = train_pipeline(cfg, dataset, grouping)
    save_bundle(outcome.bundle, cfg.model_out)
    emit_report(build_train_report(cfg, outcome), cfg.report_out)
    t = outcome.threshold
    print(
        f"trained {cfg.pipeline}: gamma*={t.gamma_star:.6g} "
        f"tpr={t.tpr:.4f} fpr={t.fpr:.4f} feasible={t.feasible} "
        f"-> {cfg.model_out}, {cfg.report_out}"
    )
    return 0


def _cmd_eval(args) -> int:
    bundle = load_bundle(args.model)
    test = dat.load_dataset(args.test)
    if test.dim != bundle.input_dim:
        raise DataError(
            f"test data has {test.dim} features, model expects {bundle.input_dim}"
        )
    timing = None
    if args.time:
        predictor = bundle.single_predictor()
        probe = test.features[: min(test.n, 200)]
        timing = time_per_instance(predictor, probe, repetitions=5)
    report = build_eval_report(bundle, test, args.model, args.test, timing)
    emit_report(report, args.report)
    m = report["metrics"]
    print(
        f"evaluated {bundle.pipeline}: acc={m['accuracy']:.4f} tpr={m['tpr']:.4f} "
        f"fpr={m['fpr']:.4f} -> {args.report}"
    )
    return 0


def _cmd_report(args) -> int:
    print(summarize_report(load_report(args.report)))
    return 0


_COMMANDS = {
    "prepare": _cmd_prepare,
    "synth": _cmd_synth,
    "noise": _cmd_noise,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except PhecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
