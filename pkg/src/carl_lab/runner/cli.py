"""``carl-lab`` command line.

Exit codes: 0 success, 1 configuration or input error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..context import write_context_csv
from ..envs import SPACES, get_space
from ..errors import CarlLabError, ConfigError, ParseError
from ..nets import gradcheck_suite
from ..protocols import (
    LANDING_MU,
    LANDING_SIGMA,
    PLANET_GRAVITY,
    Mode,
    ProtocolSpec,
    generate_protocol,
    in_distribution_95,
)
from ..sampling import GaussianContextSampler, IntervalContextSampler, compounding_sets
from ..tabular import BUNDLED, load_bundled, load_cmdp, optimality_gap
from .config import load_config, seed_override
from .experiment import run_experiments
from .plots import emit_plotdata
from .summary import format_summary, summarize

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
GRADCHECK_TOL = 1e-5


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="experiment config file")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="run only this seed")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads (1 = reproducible)")
    return p


def _range(text: str) -> tuple[float, float]:
    lo, hi = (float(v) for v in text.split(":"))
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="carl-lab", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("train", parents=[common], help="run the experiment grid of --config")

    p = sub.add_parser("gap", parents=[common], help="optimality gap of a finite cMDP")
    p.add_argument("instance", help=f"a .cmdp file or a bundled name ({', '.join(BUNDLED)})")
    p.add_argument("--cap", type=int, default=10**6, help="context-free policy enumeration cap")

    p = sub.add_parser("sample-contexts", parents=[common], help="draw a context set as CSV")
    p.add_argument("--env", required=True, choices=sorted(SPACES))
    p.add_argument("--list-features", action="store_true")
    p.add_argument("--vary", default="", help="comma list of Gaussian-varied features")
    p.add_argument("--sigma-rel", type=float, default=0.1)
    p.add_argument("--compounding", default="", help="feature order; writes one file per prefix")
    p.add_argument("--interval-feature", default="")
    p.add_argument("--intervals", default="", help="comma list of lo:hi")
    p.add_argument("-n", "--n", type=int, default=100)

    p = sub.add_parser("eval-protocol", parents=[common], help="train/test context sets of a protocol")
    p.add_argument("--env", choices=sorted(SPACES))
    p.add_argument("--x")
    p.add_argument("--y")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="A")
    p.add_argument("--rel-width", type=float, default=0.5)
    p.add_argument("--train-x", type=_range, help="lo:hi")
    p.add_argument("--train-y", type=_range, help="lo:hi")
    p.add_argument("--n-train", type=int, default=100)
    p.add_argument("--n-test", type=int, default=100, help="test contexts per region")
    p.add_argument("--landing", action="store_true", help="print the 95%% in-distribution table")

    p = sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient check")
    p.add_argument("-n", "--n", type=int, default=20)

    p = sub.add_parser("plot", parents=[common], help="learning-curve files from results")
    p.add_argument("results")

    p = sub.add_parser("summarize", parents=[common], help="final-window summary table")
    p.add_argument("results")
    return parser


def _cmd_train(args) -> int:
    if not getattr(args, "config", None):
        raise ConfigError("train needs --config")
    configs = load_config(args.config)
    seeds = seed_override(getattr(args, "seed", None))
    out = getattr(args, "out", None)
    paths = run_experiments(configs, out, getattr(args, "threads", 1), seeds)
    for p in paths:
        print(p)
    target = Path(out) if out else configs[0].output
    print(format_summary(summarize(target)))
    return EXIT_OK


def _cmd_gap(args) -> int:
    cmdp = load_bundled(args.instance) if args.instance in BUNDLED else load_cmdp(args.instance)
    print(optimality_gap(cmdp, args.cap).format())
    return EXIT_OK


def _seed(args) -> int:
    seeds = seed_override(getattr(args, "seed", None))
    return seeds[0] if seeds else 0


def _cmd_sample(args) -> int:
    space = get_space(args.env)
    if args.list_features:
        print(space.describe())
        return EXIT_OK
    seed = _seed(args)
    out = getattr(args, "out", None)
    try:
        if args.compounding:
            order = [s.strip() for s in args.compounding.split(",")]
            sets = compounding_sets(space, order, args.sigma_rel, args.n, seed)
            if not out:
                raise ConfigError("--compounding writes several files; give --out DIR")
            Path(out).mkdir(parents=True, exist_ok=True)
            for k, cs in enumerate(sets):
                write_context_csv(Path(out) / f"compounding_{k}.csv", cs, space)
            return EXIT_OK
        if args.interval_feature:
            intervals = tuple(_range(t) for t in args.intervals.split(",") if t.strip())
            sampler = IntervalContextSampler(space, space.index(args.interval_feature), intervals, None, args.n, seed)
        else:
            vary = [s.strip() for s in args.vary.split(",") if s.strip()]
            sampler = GaussianContextSampler.by_name(space, vary, args.sigma_rel, args.n, seed)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    cs = sampler.sample()
    write_context_csv(out if out else sys.stdout, cs, space)
    return EXIT_OK


def _cmd_protocol(args) -> int:
    if args.landing:
        lo, hi = LANDING_MU - 1.959964 * LANDING_SIGMA, LANDING_MU + 1.959964 * LANDING_SIGMA
        print(f"training gravity ~ N({LANDING_MU}, {LANDING_SIGMA}); 95% interval [{lo:.3f}, {hi:.3f}]")
        for name, g in PLANET_GRAVITY.items():
            verdict = "in" if in_distribution_95(g, LANDING_MU, LANDING_SIGMA) else "out"
            print(f"{name:<8} {g:>6.2f}  {verdict}")
        return EXIT_OK
    if not (args.env and args.x and args.y):
        raise ConfigError("eval-protocol needs --env, --x and --y (or --landing)")
    space = get_space(args.env)
    try:
        extra = dict(n_train=args.n_train, n_test_per_region=args.n_test, seed=_seed(args))
        spec = ProtocolSpec.around_defaults(space, args.x, args.y, args.mode, args.rel_width, **extra)
        if args.train_x or args.train_y:
            spec = ProtocolSpec(
                space, spec.feature_x, spec.feature_y, spec.mode,
                args.train_x or spec.train_range_x, args.train_y or spec.train_range_y, **extra,
            )
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    train, tests = generate_protocol(spec)
    out = Path(getattr(args, "out", None) or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_context_csv(out / "train.csv", train, space)
    rows, regions = [], []
    for label, cs in tests.items():
        rows.extend(cs)
        regions.extend([label.value] * len(cs))
    write_context_csv(out / "test.csv", rows, space, {"region": regions})
    print(f"train: {len(train)} contexts, x in {spec.train_range_x}, y in {spec.train_range_y}")
    for label, cs in tests.items():
        print(f"{label.value}: {len(cs)} contexts")
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    results = gradcheck_suite(args.n, _seed(args))
    for name, err in results:
        print(f"{err:.3e}  {name}")
    worst = max(err for _, err in results)
    ok = worst < GRADCHECK_TOL
    print(f"max relative error {worst:.3e} ({'ok' if ok else 'FAIL'}, tolerance {GRADCHECK_TOL:g})")
    return EXIT_OK if ok else EXIT_RUNTIME


def _cmd_plot(args) -> int:
    for p in emit_plotdata(args.results, getattr(args, "out", None)):
        print(p)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    print(format_summary(summarize(args.results, getattr(args, "out", None))))
    return EXIT_OK


COMMANDS = {
    "train": _cmd_train,
    "gap": _cmd_gap,
    "sample-contexts": _cmd_sample,
    "eval-protocol": _cmd_protocol,
    "gradcheck": _cmd_gradcheck,
    "plot": _cmd_plot,
    "summarize": _cmd_summarize,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CarlLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
