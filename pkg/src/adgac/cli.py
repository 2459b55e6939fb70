"""Command-line front end for trial batteries and numerical checks.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 an acceptance
threshold was missed (CI gate).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import bench, minimax

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_THRESHOLD = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="flat key = value config file")
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--constants", default=None, help="tunable constants file")
    p.add_argument("--dist", default=None, choices=["uniform-interval", "isotropic-gaussian"])
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--w-star", default=None, choices=["random", "e1"])
    p.add_argument("--label-noise", default=None,
                   choices=["massart", "tsybakov", "adversarial"])
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--comp-noise", default=None, choices=["perfect", "band-adversarial"])
    p.add_argument("--nu-prime", type=float, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--n", type=int, default=None, help="sample size for adgac-run / erm")
    p.add_argument("--k", type=int, default=None, help="label batch size for adgac-run")
    p.add_argument("--min-success", type=float, default=None,
                   help="fail (exit 3) when the success rate falls below this")


_FLAG_TO_FIELD = {
    "eps": "eps", "delta": "delta", "trials": "trials", "seed": "seed",
    "dist": "dist", "dim": "d", "threshold": "threshold", "w_star": "w_star",
    "label_noise": "label_noise", "beta": "beta", "kappa": "kappa", "mu": "mu",
    "nu": "nu", "comp_noise": "comp_noise", "nu_prime": "nu_prime",
    "grid": "grid", "n": "n_samples", "k": "k", "out": "out",
}


def _build_config(args, method: str | None) -> bench.ExperimentConfig:
    constants = bench.DEFAULT_CONSTANTS
    if args.constants:
        with open(args.constants) as fh:
            constants = bench.TunableConstants.from_text(fh.read())
    overrides = {}
    for flag, fieldname in _FLAG_TO_FIELD.items():
        val = getattr(args, flag, None)
        if val is not None:
            overrides[fieldname] = val
    if method is not None:
        overrides["method"] = method
    if args.config:
        with open(args.config) as fh:
            config = bench.ExperimentConfig.from_text(fh.read(), constants=constants)
        if overrides:
            config = dataclasses.replace(config, **overrides)
        return config
    if method is None:
        raise _UsageError("bench requires --config")
    return bench.ExperimentConfig(constants=constants, **overrides)


def _run_battery(args, method: str | None) -> int:
    config = _build_config(args, method)
    reports, summary = bench.run_trials(config)
    if config.out:
        files = bench.emit_report(reports, config.out, config=config, summary=summary)
        print(f"wrote {', '.join(files)}")
    print(f"method {config.method}  eps {config.eps}  delta {config.delta}  "
          f"trials {config.trials}  seed {config.seed}")
    print(bench.summary_table(summary), end="")
    if args.min_success is not None and summary["success_rate"] < args.min_success:
        print(f"success rate {summary['success_rate']:.3f} below gate {args.min_success}")
        return EXIT_THRESHOLD
    return EXIT_OK


def _cmd_lemma_check(args) -> int:
    rng = np.random.default_rng(args.seed)
    worst_gap = -float("inf")
    for _ in range(args.instances):
        n = int(rng.integers(1, args.max_n + 1))
        inst = minimax.make_lemma_instance(rng.random(n), rng.random(n))
        fmin, _ = minimax.lemma_min_f(inst)  # raises on violation
        bound = (2 * inst.n * inst.t / (inst.n + 1)) ** 0.5
        worst_gap = max(worst_gap, fmin - bound)
    print(f"{args.instances} random instances: bound holds, worst slack {-worst_gap:.3e}")
    for n in range(1, args.max_n + 1):
        inst = minimax.equality_instance(n)
        fmin, _ = minimax.lemma_min_f(inst)
        bound = (2 * inst.n * inst.t / (inst.n + 1)) ** 0.5
        gap = abs(fmin - bound)
        print(f"equality n={n}: |min - bound| = {gap:.3e}")
        if gap > 1e-9:
            print("equality configuration missed the bound")
            return EXIT_THRESHOLD
    return EXIT_OK


def _cmd_minimax_check(args) -> int:
    base = minimax.ScoreDistribution(args.base)
    ghat = minimax.construct_ghat(base, args.nu_prime)
    tol = 4.0 / args.grid
    comp = minimax.comparison_error_of(ghat, base, args.grid)
    best, thr = minimax.best_threshold_error(ghat, base, args.grid)
    target = args.nu_prime ** 0.5
    print(f"interval [{ghat.a:.6g}, {ghat.b:.6g}]  grid {args.grid}")
    print(f"comparison error  {comp:.6f}  (target {args.nu_prime:.6f} +- {tol:.1e})")
    print(f"best threshold    {best:.6f} at t = {thr:.6g}  (target {target:.6f} +- {tol:.1e})")
    ok = abs(comp - args.nu_prime) <= tol and abs(best - target) <= tol
    if not ok:
        print("estimates fell outside the grid tolerance")
        return EXIT_THRESHOLD
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="adgac",
                     description="interactive-learning trial batteries and numerical checks")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, method in [("adgac-run", "adgac-only"), ("a2", "a2-adgac"),
                         ("margin", "margin-adgac"), ("baseline-a2", "baseline-a2"),
                         ("erm", "passive-erm")]:
        p = sub.add_parser(name, help=f"run the {method} battery")
        _add_scenario_flags(p)
        p.set_defaults(func=lambda a, m=method: _run_battery(a, m))

    p = sub.add_parser("bench", help="run a battery described by a config file")
    _add_scenario_flags(p)
    p.set_defaults(func=lambda a: _run_battery(a, None))

    p = sub.add_parser("lemma-check", help="verify the prefix-suffix inequality numerically")
    p.add_argument("--instances", type=int, default=10_000)
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_lemma_check)

    p = sub.add_parser("minimax-check", help="verify the sqrt comparison-noise identity")
    p.add_argument("--nu-prime", type=float, default=0.01)
    p.add_argument("--grid", type=int, default=10_000)
    p.add_argument("--base", default="uniform", choices=["uniform", "gaussian"])
    p.set_defaults(func=_cmd_minimax_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (_UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
