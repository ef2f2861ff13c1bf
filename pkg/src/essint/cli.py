"""Command-line front end: ``essint <order-test|hopper|plate|simulate> [options]``.

Exit status is 0 on success, 1 on a usage or runtime error and 2 when
``--check`` is given and the run misses its acceptance threshold.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .core import IntegratorConfig
from .errors import ESSError
from .harness import (
    ExperimentResult,
    _config_echo,
    _meta,
    run_hopper,
    run_order_test,
    run_plate_scaling,
)
from .loop import integrate
from .modelfile import load_model

EXIT_OK, EXIT_ERROR, EXIT_CHECK = 0, 1, 2

ORDER_SLOPE_BAND = (1.9, 3.5)
PLATE_MIN_R2 = 0.9
PLATE_MAX_RATIO = 3.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _pair(text: str) -> tuple[float, float]:
    parts = text.split(":")
    try:
        lo, hi = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}")
    if not 0 < lo < hi:
        raise argparse.ArgumentTypeError(f"need 0 < lo < hi, got {text!r}")
    return lo, hi


def _grid(text: str) -> np.ndarray:
    parts = text.split(":")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}")
    if not (0 < lo < hi and n >= 2):
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")
    return np.logspace(np.log10(lo), np.log10(hi), n)


def _counts(text: str) -> list[int]:
    parts = text.split(":")
    try:
        if len(parts) == 3:
            lo, hi, step = (int(p) for p in parts)
            return list(range(lo, hi + 1, step))
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step or a comma list, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--eps", type=_floats, help="precision parameter(s), comma-separated")
    g.add_argument("--t0", type=float, default=0.0)
    g.add_argument("--tf", type=float)
    g.add_argument("--out", type=Path, help="output file (default: standard output)")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-step", type=float)
    g.add_argument("--rtol", type=float, default=1e-8)
    g.add_argument("--atol", type=float, default=1e-10)
    g.add_argument("--window", type=_pair, help="fit window lo:hi in epsilon")
    g.add_argument("--fixed-step", type=float, metavar="DT")
    g.add_argument("--check", action="store_true", help="exit 2 if the acceptance threshold is missed")

    parser = _Parser(prog="essint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("order-test", parents=[common], help="RMS error vs epsilon on the 3D affine system")
    p.add_argument("--grid", type=_grid, default="1e-5:1e-1:40", help="log grid lo:hi:count")

    sub.add_parser("hopper", parents=[common], help="hopper drop against the exact flow")

    p = sub.add_parser("plate", parents=[common], help="plate runtime vs number of springs")
    p.add_argument("--counts", type=_counts, default="2:100:2", help="lo:hi:step or comma list")
    p.add_argument("--seeds", type=int, default=120, help="number of random initial conditions")

    p = sub.add_parser("simulate", parents=[common], help="integrate a piecewise-affine model file")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--x0", type=_floats, help="initial state (default: the model's x0)")
    return parser


def _single_eps(args, default: float) -> float:
    if args.eps is None:
        return default
    if len(args.eps) != 1:
        raise ValueError(f"{args.command} takes a single --eps value")
    return args.eps[0]


def _emit(result: ExperimentResult, args, path: Path | None = None):
    text = result.to_csv() if args.format == "csv" else result.to_json()
    path = path or args.out
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _say(args, line: str):
    print(line, file=sys.stdout if args.out is not None else sys.stderr)


def _cmd_order_test(args) -> int:
    grid = args.eps if args.eps is not None else args.grid
    res = run_order_test(grid, args.window, rtol=args.rtol, atol=args.atol, max_step=args.max_step,
                         fixed_step=args.fixed_step)
    _emit(res, args)
    slope = res.summary["slope"]
    lo, hi = res.summary["window"]
    _say(args, f"order-test: slope {slope:.4f} over eps in [{lo:.3g}, {hi:.3g}], "
               f"{res.summary['failures']} failed runs")
    if args.check and not (ORDER_SLOPE_BAND[0] <= slope <= ORDER_SLOPE_BAND[1]):
        return EXIT_CHECK
    return EXIT_OK


def _cmd_hopper(args) -> int:
    eps = _single_eps(args, 0.13)
    res = run_hopper(eps, args.fixed_step if args.fixed_step is not None else 0.002,
                     args.tf if args.tf is not None else 2.0,
                     max_step=args.max_step, rtol=args.rtol, atol=args.atol)
    _emit(res, args)
    s = res.summary
    _say(args, f"hopper: rms {s['rms']:.6g} (eps/10: {s['rms_eps_div_10']:.6g}), "
               f"crossings {s['crossings']}")
    ok = len(s["crossings"]) >= 3 and s["alternating"] and s["rms_eps_div_10"] < s["rms"]
    return EXIT_OK if ok or not args.check else EXIT_CHECK


def _cmd_plate(args) -> int:
    res = run_plate_scaling(
        args.counts, args.seeds, _single_eps(args, 0.13), args.seed,
        tf=args.tf if args.tf is not None else 2.0,
        fixed_step=args.fixed_step if args.fixed_step is not None else 0.002,
        max_step=args.max_step, rtol=args.rtol, atol=args.atol,
    )
    _emit(res.runs, args)
    if args.out is not None:
        stem, suffix = args.out.stem, args.out.suffix
        _emit(res.medians, args, args.out.with_name(f"{stem}.medians{suffix}"))
        _emit(res.marginal, args, args.out.with_name(f"{stem}.marginal{suffix}"))
    s = res.summary
    _say(args, f"plate: R^2 {s['r2']:.4f}, slope {s['ls_slope']:.4g} s/contact, "
               f"marginal ratio (80-100)/(10-30) {s['marginal_ratio']:.3g}")
    ratio = s["marginal_ratio"]
    ok = s["r2"] >= PLATE_MIN_R2 and math.isfinite(ratio) and 1 / PLATE_MAX_RATIO <= ratio <= PLATE_MAX_RATIO
    return EXIT_OK if ok or not args.check else EXIT_CHECK


def _cmd_simulate(args) -> int:
    model = load_model(args.model)
    x0 = args.x0 if args.x0 is not None else model.x0
    if x0 is None:
        raise ValueError("the model has no x0; pass --x0")
    config = IntegratorConfig(_single_eps(args, 1e-3), args.t0, args.tf if args.tf is not None else 1.0,
                              max_step=args.max_step, rtol=args.rtol, atol=args.atol,
                              fixed_step=args.fixed_step)
    traj = integrate(model.as_hybrid(), np.asarray(x0, dtype=float), config)
    n = model.dim_state
    res = ExperimentResult("simulate", ["t", *(f"x{i}" for i in range(n)), "kind", "guard"])
    for rec in traj:
        res.rows.append([rec.t, *rec.x, rec.kind.name.lower(), -1 if rec.guard is None else rec.guard])
    res.meta = _meta("simulate", model=str(args.model), epsilon=config.epsilon, x0=list(x0),
                     **_config_echo(config))
    res.summary = {"records": len(traj), "crossed_guards": traj.crossed_guards(), **traj.stats}
    _emit(res, args)
    _say(args, f"simulate: {len(traj)} records, projections onto guards {traj.crossed_guards()}, "
               f"final state {np.array2string(traj.final_state, precision=6)}")
    return EXIT_OK


COMMANDS = {
    "order-test": _cmd_order_test,
    "hopper": _cmd_hopper,
    "plate": _cmd_plate,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ESSError, ValueError, OSError) as exc:
        print(f"essint {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
