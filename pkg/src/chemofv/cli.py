"""Command-line interface.

Subcommands:

    run CONFIG          run one experiment from a TOML config
    sweep SPEC          run a Cartesian parameter sweep from a TOML spec
    oracle-check        run the built-in solver validation battery
    mms                 manufactured-solution convergence study
    plot CSV            render figures from a series or sweep CSV

Exit codes: 0 on success (a recorded dt_underflow or Growing verdict is
still a successful run of the tool), 1 for invalid input, 2 for filesystem
errors, 3 when the solver aborts internally or a validation check fails.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .diagnostics import gronwall_bound, gronwall_verify
from .grid import Field, GridSpec
from .harness import (
    ConfigError,
    InitialSpec,
    load_config,
    load_sweep_spec,
    make_initial,
    run_experiment,
    run_sweep,
)
from .model import ModelParams, State
from .oracle import (
    MMS_CASES,
    homogeneous_solution,
    mms_convergence,
    reference_run,
)
from .stepper import SolverConfig, run

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors with exit code 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="chemofv",
        description="Finite-volume chemotaxis-consumption simulator and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("config", help="TOML run config")
    p_run.add_argument("--out", default=None, help="output directory (overrides config)")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep from a spec file")
    p_sweep.add_argument("spec", help="TOML sweep spec")
    p_sweep.add_argument("--out", default="sweep", help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle-check", help="run the solver validation battery")
    p_oracle.set_defaults(func=_cmd_oracle_check)

    p_mms = sub.add_parser("mms", help="manufactured-solution convergence study")
    p_mms.add_argument("--case", default="trig-1d-positive", choices=sorted(MMS_CASES))
    p_mms.add_argument("--chi", type=float, default=1.0)
    p_mms.add_argument("--mu", type=float, default=1.0)
    p_mms.add_argument("--m", type=float, default=2.0)
    p_mms.add_argument("--c-d", type=float, default=1.0, dest="c_d")
    p_mms.add_argument(
        "--resolutions", default="16,32,64", help="comma-separated cell counts"
    )
    p_mms.add_argument("--t-end", type=float, default=0.25, dest="t_end")
    p_mms.add_argument(
        "--dt-factor",
        type=float,
        default=0.05,
        dest="dt_factor",
        help="dt = dt_factor * h^dt_power; keep small enough that spatial error dominates",
    )
    p_mms.add_argument("--dt-power", type=float, default=1.0, dest="dt_power")
    p_mms.add_argument(
        "--min-order",
        type=float,
        default=None,
        dest="min_order",
        help="fail (exit 3) if the fitted order of u falls below this",
    )
    p_mms.set_defaults(func=_cmd_mms)

    p_plot = sub.add_parser("plot", help="render figures from a CSV artifact")
    p_plot.add_argument("csv", help="series.csv or sweep.csv")
    p_plot.add_argument("--out", default=None, help="output image path")
    p_plot.add_argument(
        "--kind", default="auto", choices=("auto", "series", "sweep"), help="CSV flavor"
    )
    p_plot.set_defaults(func=_cmd_plot)

    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    payload = run_experiment(cfg, out_dir=args.out)
    outcome = payload["outcome"]
    print(f"status: {payload['status']}")
    print(f"verdict: {outcome['verdict']}")
    print(f"peak sup u: {outcome['peak_sup_u']:.6g}")
    print(f"threshold m: {payload['threshold_m']:.6g}  margin: {payload['margin']:+.6g}")
    print(f"steps: {payload['steps']}  final t: {payload['final_t']:.6g}")
    return 0


def _cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec)
    result = run_sweep(spec, out_dir=args.out, jobs=args.jobs)
    counts = result["manifest"]["verdicts"]
    print(
        "verdicts: "
        + ", ".join(f"{name}={counts[name]}" for name in sorted(counts))
    )
    print(f"wrote: {result['out_dir']}/sweep.csv")
    return 0


def _cmd_plot(args) -> int:
    from . import plots

    kind = args.kind
    if kind == "auto":
        with open(args.csv, "r", newline="") as fh:
            first = fh.readline().split(",")[0].strip()
        if first == "t":
            kind = "series"
        elif first == "m":
            kind = "sweep"
        else:
            raise ValueError(
                f"{args.csv}: cannot infer CSV flavor from first column {first!r}"
            )
    fn = plots.plot_series if kind == "series" else plots.plot_sweep
    out = fn(args.csv, out_path=args.out)
    print(f"wrote: {out}")
    return 0


def _cmd_mms(args) -> int:
    try:
        resolutions = tuple(int(tok) for tok in args.resolutions.split(","))
    except ValueError:
        raise ConfigError(f"--resolutions must be comma-separated integers, got {args.resolutions!r}")
    params = ModelParams(chi=args.chi, mu=args.mu, m=args.m, c_d=args.c_d)
    case = MMS_CASES[args.case]
    result = mms_convergence(
        case,
        params,
        resolutions=resolutions,
        t_end=args.t_end,
        dt_factor=args.dt_factor,
        dt_power=args.dt_power,
    )
    print(f"{'n':>6} {'dt':>12} {'err_u':>12} {'err_v':>12}")
    for row in result.rows:
        print(f"{row['n']:>6d} {row['dt']:>12.4e} {row['err_u']:>12.4e} {row['err_v']:>12.4e}")
    print(f"fitted order: u {result.order_u:.3f}, v {result.order_v:.3f}")
    if args.min_order is not None and result.order_u < args.min_order:
        print(f"FAIL: order {result.order_u:.3f} below required {args.min_order}")
        return 3
    return 0


# ---------------------------------------------------------------------------
# validation battery

def _check_homogeneous() -> str:
    params = ModelParams(chi=1.0, mu=1.0, m=2.0)
    spec = GridSpec(cells=(8,), lengths=(1.0,))
    u0, v0, t_end = 0.25, 1.0, 1.0
    errs = []
    for dt in (2e-3, 1e-3):
        cfg = SolverConfig(t_end=t_end, dt_init=dt, dt_max=dt)
        state = State(Field(spec, np.full(spec.cells, u0)), Field(spec, np.full(spec.cells, v0)))
        traj = run(state, params, cfg)
        final = traj.snapshots[-1]
        ue, ve = homogeneous_solution(final.t, u0, v0, params)
        errs.append(
            max(
                float(np.abs(final.u.values - ue).max()),
                float(np.abs(final.v.values - ve).max()),
            )
        )
    order = float(np.log2(errs[0] / errs[1]))
    if errs[1] > 1e-3 or order < 0.8:
        raise AssertionError(f"errors {errs}, fitted order {order:.2f}")
    return f"errors {errs[0]:.2e} -> {errs[1]:.2e}, order {order:.2f}"


def _check_structure() -> str:
    params = ModelParams(chi=1.0, mu=0.0, m=1.5)
    spec = GridSpec(cells=(32, 32), lengths=(1.0, 1.0))
    initial = make_initial(
        spec, InitialSpec(kind="random-perturbation", u0=1.0, amplitude=0.5, v0=1.0, seed=7)
    )
    mass0 = float(initial.u.values.sum()) * spec.cell_volume
    sup_v0 = float(initial.v.max())
    worst = {"drift": 0.0, "min_u": 0.0, "min_v": 0.0, "sup_v": sup_v0}

    def watch(old, new, dt):
        mass = float(new.u.values.sum()) * spec.cell_volume
        worst["drift"] = max(worst["drift"], abs(mass - mass0))
        worst["min_u"] = min(worst["min_u"], float(new.u.min()))
        worst["min_v"] = min(worst["min_v"], float(new.v.min()))
        worst["sup_v"] = max(worst["sup_v"], float(new.v.max()))

    traj = run(initial, params, SolverConfig(t_end=1.0), on_step=watch)
    if traj.status != "completed":
        raise AssertionError(f"run ended {traj.status}")
    if worst["drift"] > 1e-12 * mass0:
        raise AssertionError(f"mass drift {worst['drift']:.3e}")
    if worst["min_u"] < 0.0 or worst["min_v"] < 0.0:
        raise AssertionError(f"negative field: {worst}")
    if worst["sup_v"] > sup_v0 * (1.0 + 1e-12):
        raise AssertionError(f"sup v grew: {worst['sup_v']} vs {sup_v0}")
    return (
        f"mass drift {worst['drift']:.1e}, min u {worst['min_u']:.1f}, "
        f"sup v excess {worst['sup_v'] - sup_v0:.1e}"
    )


def _check_rerun_identical() -> str:
    params = ModelParams(chi=1.0, mu=1.0, m=1.5)
    spec = GridSpec(cells=(24,), lengths=(1.0,))
    initial = make_initial(
        spec, InitialSpec(kind="gaussian-bump", amplitude=2.0, width=0.1, v0=1.0)
    )
    res = reference_run(initial, params, SolverConfig(t_end=0.5), r=1)
    if res.err_u != 0.0 or res.err_v != 0.0:
        raise AssertionError(f"rerun differs: u {res.err_u:.3e}, v {res.err_v:.3e}")
    return "bit-identical rerun"


def _check_mms_order() -> str:
    params = ModelParams(chi=1.0, mu=1.0, m=2.0)
    result = mms_convergence(
        MMS_CASES["trig-1d-positive"],
        params,
        resolutions=(32, 64, 128),
        t_end=0.25,
        dt_factor=0.05,
        dt_power=1.0,
    )
    if result.order_u < 0.9:
        raise AssertionError(f"order u {result.order_u:.2f} below 0.9")
    return f"order u {result.order_u:.2f}, v {result.order_v:.2f}"


def _check_gronwall() -> str:
    t = np.linspace(0.0, 10.0, 2001)
    y = np.full_like(t, 2.0)
    h = np.full_like(t, 2.0)  # y' + y = 2 exactly
    tau = 1.0
    rep = gronwall_verify(t, y, h, a=1.0, tau=tau)
    if not rep.ok:
        raise AssertionError(f"false positive at times {rep.violation_times[:3]}")
    # a series that climbs past the envelope while claiming the same forcing
    bad = gronwall_verify(t, y + 3.0 * t, h, a=1.0, tau=tau)
    if bad.ok:
        raise AssertionError("missed a fabricated violation")
    envelope = gronwall_bound(2.0, 1.0, 2.0 * tau, tau)
    if envelope < 2.0:
        raise AssertionError(f"envelope {envelope} below the exact solution")
    return f"envelope {envelope:g}, violation detection works"


_CHECKS = (
    ("homogeneous relaxation", _check_homogeneous),
    ("conservation and bounds", _check_structure),
    ("deterministic rerun", _check_rerun_identical),
    ("manufactured convergence", _check_mms_order),
    ("envelope arithmetic", _check_gronwall),
)


def _cmd_oracle_check(args) -> int:
    failures = 0
    for name, fn in _CHECKS:
        try:
            detail = fn()
        except Exception as exc:
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"ok   {name}: {detail}")
    if failures:
        print(f"{failures} of {len(_CHECKS)} checks failed")
        return 3
    print(f"all {len(_CHECKS)} checks passed")
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 1
    try:
        return int(args.func(args))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
