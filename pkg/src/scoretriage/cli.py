"""Command-line front end.

Exit codes: 0 on success, 1 on invalid input, 2 on I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import persist
from .aggregation import AggregationPolicy
from .core import ValidationError, build_agreement_matrix
from .experiments import (DEFAULT_BUDGETS, DEFAULT_TRIALS, coverage_rates, read_sweep_report, run_coverage,
                          run_estimate, run_sweep, summarize_sweep, write_coverage, write_sweep_report)
from .guarantee import DEFAULT_LEVEL, DEFAULT_N_EST, DEFAULT_REPLICATES
from .samplers import Method, compute_weights
from .synthetic import PseudoModelConfig, SynthConfig, apply_pseudo_model, generate_labels, split_by_candidate

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _methods(text: str) -> list[Method]:
    try:
        return [Method.parse(x.strip()) for x in text.split(",") if x.strip()]
    except ValidationError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be a nonnegative integer")
    return value


def _load_test(args):
    matrix = persist.load_matrix(args.matrix, args.scale)
    return persist.load_dataset(args.test, matrix.scale), matrix


def cmd_synth(args) -> None:
    config = SynthConfig(args.candidates, args.items, args.classes, args.distribution, args.seed)
    data = generate_labels(config)
    if args.accuracy is not None:
        data = apply_pseudo_model(data, PseudoModelConfig(args.accuracy, seed=args.seed + 1))
    persist.save_dataset(data, args.out)
    if args.scale_out:
        persist.save_scale(data.scale, args.scale_out)
    print(f"wrote {len(data)} responses for {data.n_candidates} candidates to {args.out}")


def cmd_split(args) -> None:
    data = persist.load_dataset(args.responses, args.scale)
    train, test = split_by_candidate(data, args.train_fraction, args.seed)
    persist.save_dataset(train, args.train_out)
    persist.save_dataset(test, args.test_out)
    print(f"train: {train.n_candidates} candidates, test: {test.n_candidates} candidates")


def cmd_matrix(args) -> None:
    data = persist.load_dataset(args.train, args.scale)
    if not (data.has_machine_labels and data.has_human_labels):
        raise ValidationError("training data needs both machine and human labels on every response")
    matrix = build_agreement_matrix(np.column_stack([data.machine, data.human]), data.scale, alpha=args.alpha)
    persist.save_matrix(matrix, args.out)
    unseen = [data.scale.label_of(i) for i, c in enumerate(matrix.row_counts) if c == 0]
    print(f"wrote agreement matrix from {len(data)} pairs to {args.out}"
          + (f" (never predicted: {', '.join(unseen)})" if unseen else ""))


def cmd_simulate(args) -> None:
    data, matrix = _load_test(args)
    rows = run_sweep(data, matrix, args.methods, args.budgets, args.trials, args.seed, args.policy, args.model_tag)
    write_sweep_report(rows, args.out)
    if args.plot:
        from .plotting import save_sweep_plot
        save_sweep_plot(rows, args.plot)
    if args.audit_dir:
        audit = Path(args.audit_dir)
        audit.mkdir(parents=True, exist_ok=True)
        for method in args.methods:
            persist.save_weights(compute_weights(method, data, matrix, args.policy), audit / f"weights_{method.value}.csv")
    for (tag, method, budget), s in summarize_sweep(rows).items():
        print(f"{tag}\t{method}\t{budget:g}\tacc {s['accuracy_before']:.4f} -> {s['accuracy_mean']:.4f}"
              f"\tqwk {s['qwk_before']:.4f} -> {s['qwk_mean']:.4f}")


def cmd_estimate(args) -> None:
    data, matrix = _load_test(args)
    result = run_estimate(data, matrix, args.method, args.budget, args.n_est, args.level, args.replicates,
                          args.seed, args.policy, args.weighted)
    persist.save_json(result, args.out)
    g, t = result["guarantee"], result["truth"]
    print(f"accuracy {g['accuracy_point']:.4f} (lower bound {g['accuracy_lower_bound']:.4f}, true {t['accuracy']:.4f})")
    print(f"qwk      {g['qwk_point']:.4f} (lower bound {g['qwk_lower_bound']:.4f}, true {t['qwk']:.4f})")


def cmd_coverage(args) -> None:
    data, matrix = _load_test(args)
    rows = run_coverage(data, matrix, args.method, args.budget, args.replications, args.n_est, args.level,
                        args.replicates, args.seed, args.policy, args.weighted)
    write_coverage(rows, args.out)
    for metric, rate in coverage_rates(rows).items():
        print(f"{metric}: bound <= truth in {rate:.3f} of {args.replications} replications")


def cmd_plot(args) -> None:
    from .plotting import save_sweep_plot
    save_sweep_plot(read_sweep_report(args.report), args.out)
    print(f"wrote {args.out}")


def _add_triage_inputs(p):
    p.add_argument("--test", required=True, help="fully labelled response CSV")
    p.add_argument("--matrix", required=True, help="agreement matrix JSON")
    p.add_argument("--scale", help="optional scale JSON; must match the matrix scale")
    p.add_argument("--policy", type=AggregationPolicy.parse, default=AggregationPolicy.ROUNDED_MEAN,
                   help="global score aggregation: rounded_mean (half-up, default) or median (lower)")


def _add_estimation_options(p):
    p.add_argument("--method", type=Method.parse, default=Method.REWARD)
    p.add_argument("--budget", type=float, default=0.8)
    p.add_argument("--n-est", type=int, default=DEFAULT_N_EST, help="candidates in the estimation sample")
    p.add_argument("--level", type=float, default=DEFAULT_LEVEL, help="one-sided confidence level")
    p.add_argument("--replicates", "-B", type=int, default=DEFAULT_REPLICATES, help="bootstrap replicates")
    p.add_argument("--weighted", action="store_true", help="Hajek-weight estimates by inverse inclusion probability")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scoretriage", description="Human-budget triage for machine-scored responses.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic labelled dataset")
    p.add_argument("--candidates", type=int, required=True)
    p.add_argument("--items", type=int, default=6)
    p.add_argument("--classes", type=int, default=6)
    p.add_argument("--distribution", type=_floats, help="comma-separated class probabilities")
    p.add_argument("--accuracy", type=float, help="add pseudo-model predictions with this local accuracy")
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale-out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("split", help="split responses into train/test by candidate")
    p.add_argument("--responses", required=True)
    p.add_argument("--scale", required=True)
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--train-out", required=True)
    p.add_argument("--test-out", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("matrix", help="build the human-machine agreement matrix")
    p.add_argument("--train", required=True)
    p.add_argument("--scale", required=True)
    p.add_argument("--alpha", type=float, default=0.0, help="add-alpha smoothing for rows with data")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("simulate", help="budget sweep over sampling methods")
    _add_triage_inputs(p)
    p.add_argument("--methods", type=_methods, default=list(Method))
    p.add_argument("--budgets", type=_floats, default=list(DEFAULT_BUDGETS))
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--model-tag", default="model")
    p.add_argument("--out", required=True, help="sweep report CSV")
    p.add_argument("--plot", help="also render the report as an SVG figure")
    p.add_argument("--audit-dir", help="write per-method sampling weights here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="triage then estimate metrics with lower bounds")
    _add_triage_inputs(p)
    _add_estimation_options(p)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("coverage", help="Monte-Carlo coverage of the lower bounds")
    _add_triage_inputs(p)
    _add_estimation_options(p)
    p.add_argument("--replications", type=int, default=200)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("plot", help="render a sweep report as SVG")
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
