"""End-to-end acceptance battery.

Each test is one numbered acceptance check with its tolerance and runtime
budget spelled out inline; pytest -v therefore emits exactly one pass/fail
line per check.  Checks 1, 2, and 8 share a fixed suite of sixteen runs
(1D and 2D, bump and seeded-random data, diffusion exponents 0.9/1/1.5/2)
executed once per session by a module-scoped fixture.
"""

import math
import time

import numpy as np
import pytest

from chemofv.diagnostics import DiagConfig, Recorder, audit_entropy, gronwall_verify
from chemofv.grid import Field, GridSpec, integrate
from chemofv.harness import InitialSpec, RunConfig, SweepSpec, make_initial, run_experiment, run_sweep
from chemofv.model import ModelParams, State, threshold_m
from chemofv.oracle import MMS_CASES, homogeneous_solution, mms_convergence
from chemofv.stepper import SolverConfig, run

# ---------------------------------------------------------------------------
# shared suite: {1D, 2D} x {gaussian-bump, random-perturbation} x m in
# {0.9, 1, 1.5, 2}, chi = 1 throughout; bump runs use mu = 1 (growth active),
# random runs use mu = 0 (pure conservation) so both halves of the mass
# check are exercised.

SUITE_T_END = 2.0


def _suite_configs():
    configs = []
    for dim in (1, 2):
        grid = GridSpec(cells=(128,) if dim == 1 else (64, 64), lengths=(1.0,) * dim)
        for kind in ("gaussian-bump", "random-perturbation"):
            for m in (0.9, 1.0, 1.5, 2.0):
                if kind == "gaussian-bump":
                    mu = 1.0
                    init = InitialSpec(kind=kind, amplitude=2.0, width=0.1, v0=1.0)
                else:
                    mu = 0.0
                    init = InitialSpec(kind=kind, u0=1.0, amplitude=0.5, v0=1.0, seed=len(configs))
                configs.append(
                    {
                        "label": f"{dim}d {kind} m={m} mu={mu}",
                        "grid": grid,
                        "params": ModelParams(chi=1.0, mu=mu, m=m),
                        "initial": init,
                    }
                )
    return configs


class _Watch:
    """Step hook recording the per-step structural invariants."""

    def __init__(self, params):
        self.mu = params.mu
        self.sup_v0 = None
        self.max_sup_v = -math.inf
        self.min_u = math.inf
        self.min_v = math.inf
        self.worst_identity = 0.0
        self.mass0 = None
        self.mass = None
        self.steps = 0

    def __call__(self, old, new, dt):
        self.max_sup_v = max(self.max_sup_v, new.v.max())
        self.min_u = min(self.min_u, new.u.min())
        self.min_v = min(self.min_v, new.v.min())
        mass_new = integrate(new.u)
        if old is None:
            self.sup_v0 = new.v.max()
            self.mass0 = mass_new
        else:
            self.steps += 1
            vol = new.spec.cell_volume
            growth = integrate(old.u)
            decay = float((old.u.values * new.u.values).sum()) * vol
            lhs = mass_new - growth
            rhs = dt * self.mu * (growth - decay)
            self.worst_identity = max(
                self.worst_identity, abs(lhs - rhs) / (1.0 + mass_new)
            )
        self.mass = mass_new


@pytest.fixture(scope="module")
def suite_results():
    results = []
    start = time.perf_counter()
    for cfg in _suite_configs():
        initial = make_initial(cfg["grid"], cfg["initial"])
        watch = _Watch(cfg["params"])
        traj = run(initial, cfg["params"], SolverConfig(t_end=SUITE_T_END), on_step=watch)
        assert traj.status == "completed", f"{cfg['label']}: ended {traj.status}"
        results.append({"label": cfg["label"], "mu": cfg["params"].mu, "watch": watch})
    return {"runs": results, "elapsed": time.perf_counter() - start}


def test_acceptance_1_v_maximum_principle(suite_results):
    # sup v may never exceed its initial supremum (absolute slack 1e-12),
    # across all 16 suite runs; suite wall time must stay under 5 minutes.
    worst = -math.inf
    for res in suite_results["runs"]:
        w = res["watch"]
        excess = w.max_sup_v - (w.sup_v0 + 1e-12)
        worst = max(worst, w.max_sup_v - w.sup_v0)
        assert excess <= 0.0, f"{res['label']}: sup v rose by {w.max_sup_v - w.sup_v0:.3e}"
    assert suite_results["elapsed"] < 300.0, f"suite took {suite_results['elapsed']:.1f}s"
    print(
        f"acceptance 1 PASS: sup-v excess <= {worst:.3e} over 16 runs, "
        f"suite {suite_results['elapsed']:.1f}s"
    )


def test_acceptance_2_positivity_and_mass_balance(suite_results):
    # exact nonnegativity each accepted step; per-step mass identity within
    # 1e-10 (1 + mass); mu = 0 runs conserve mass to 1e-12 relative.
    worst_identity = 0.0
    worst_drift = 0.0
    for res in suite_results["runs"]:
        w = res["watch"]
        assert w.min_u >= 0.0, f"{res['label']}: min u = {w.min_u:.3e}"
        assert w.min_v >= 0.0, f"{res['label']}: min v = {w.min_v:.3e}"
        assert w.worst_identity <= 1e-10, (
            f"{res['label']}: mass identity residual {w.worst_identity:.3e}"
        )
        worst_identity = max(worst_identity, w.worst_identity)
        if res["mu"] == 0.0:
            drift = abs(w.mass - w.mass0) / w.mass0
            assert drift <= 1e-12, f"{res['label']}: mass drift {drift:.3e}"
            worst_drift = max(worst_drift, drift)
    print(
        f"acceptance 2 PASS: identity residual <= {worst_identity:.3e}, "
        f"mu=0 drift <= {worst_drift:.3e}"
    )


def _homogeneous_max_error(u0: float, dt: float) -> float:
    params = ModelParams(chi=1.0, mu=1.0, m=2.0)
    spec = GridSpec(cells=(8,), lengths=(1.0,))
    initial = State(
        Field(spec, np.full(spec.cells, float(u0))),
        Field(spec, np.ones(spec.cells)),
    )
    worst = 0.0

    def watch(old, new, dt_):
        nonlocal worst
        ue, ve = homogeneous_solution(new.t, u0, 1.0, params)
        worst = max(
            worst,
            float(np.abs(new.u.values - ue).max()),
            float(np.abs(new.v.values - ve).max()),
        )

    traj = run(initial, params, SolverConfig(t_end=5.0, dt_init=dt, dt_max=dt), on_step=watch)
    assert traj.status == "completed"
    return worst


def test_acceptance_3_homogeneous_oracle_equivalence():
    # spatially uniform runs with u0 in {0, 0.5, 1, 2}, mu = 1 must track the
    # closed-form solution to max error <= 5 dt over horizon 5, and halving
    # dt must halve the error (temporal order >= 0.9).
    lines = []
    for u0 in (0.0, 0.5, 1.0, 2.0):
        err_coarse = _homogeneous_max_error(u0, 2e-3)
        err_fine = _homogeneous_max_error(u0, 1e-3)
        assert err_coarse <= 5 * 2e-3, f"u0={u0}: error {err_coarse:.3e} > 5 dt"
        assert err_fine <= 5 * 1e-3, f"u0={u0}: error {err_fine:.3e} > 5 dt"
        if err_fine > 0.0:
            order = math.log2(err_coarse / err_fine)
            assert order >= 0.9, f"u0={u0}: temporal order {order:.2f}"
            lines.append(f"u0={u0} err {err_fine:.2e} order {order:.2f}")
        else:
            # the u0 = 0 equilibrium is reproduced exactly at any dt
            assert err_coarse == 0.0
            lines.append(f"u0={u0} exact")
    print("acceptance 3 PASS: " + "; ".join(lines))


def test_acceptance_4_manufactured_spatial_convergence():
    # chi = 0 (pure quasilinear diffusion + reactions): observed order >= 1.8
    # on 32 -> 64 -> 128 for m in {1, 2}; chi > 0 (upwind drift active):
    # observed order >= 0.9.  Whole study under 2 minutes.
    start = time.perf_counter()
    case = MMS_CASES["trig-1d-positive"]
    lines = []
    for m in (1.0, 2.0):
        params = ModelParams(chi=0.0, mu=1.0, m=m)
        res = mms_convergence(
            case, params, resolutions=(32, 64, 128), t_end=0.25, dt_factor=0.25, dt_power=2.0
        )
        assert res.order_u >= 1.8, f"chi=0 m={m}: order u {res.order_u:.2f}"
        assert res.order_v >= 1.8, f"chi=0 m={m}: order v {res.order_v:.2f}"
        lines.append(f"chi=0 m={m} orders ({res.order_u:.2f}, {res.order_v:.2f})")
    params = ModelParams(chi=1.0, mu=1.0, m=2.0)
    res = mms_convergence(
        case, params, resolutions=(32, 64, 128), t_end=0.25, dt_factor=0.05, dt_power=1.0
    )
    assert res.order_u >= 0.9, f"chi=1: order u {res.order_u:.2f}"
    assert res.order_v >= 0.9, f"chi=1: order v {res.order_v:.2f}"
    lines.append(f"chi=1 m=2 orders ({res.order_u:.2f}, {res.order_v:.2f})")
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"convergence study took {elapsed:.1f}s"
    print(f"acceptance 4 PASS: {'; '.join(lines)}; {elapsed:.1f}s")


def test_acceptance_5_entropy_boundedness():
    # 2D runs at m = 2 (above the predicted threshold) with concentrated
    # data: the entropy series stays finite, its trailing 20% varies by less
    # than 1% of the series-wide ceiling, and the fitted Gronwall envelope
    # is never violated.
    params = ModelParams(chi=1.0, mu=1.0, m=2.0)
    assert params.m >= threshold_m(params, 1.0, 2)
    t_end = 30.0
    lines = []
    for amp, width in ((3.0, 0.1), (5.0, 0.07)):
        spec = GridSpec(cells=(64, 64), lengths=(1.0, 1.0))
        initial = make_initial(
            spec, InitialSpec(kind="gaussian-bump", amplitude=amp, width=width, v0=1.0)
        )
        recorder = Recorder(params, DiagConfig(), horizon=t_end)
        traj = run(initial, params, SolverConfig(t_end=t_end), on_step=recorder)
        assert traj.status == "completed"
        series = recorder.series
        t = series.array("t")
        e = series.array("entropy")
        assert np.all(np.isfinite(e)), "entropy series not finite"
        ceiling = float(np.abs(e).max())
        tail = e[t >= t[-1] - 0.2 * t_end]
        variation = float(tail.max() - tail.min()) / max(ceiling, 1e-300)
        assert variation < 0.01, f"bump {amp}/{width}: trailing variation {variation:.3e}"
        report = audit_entropy(series)
        assert report.ok and len(report.violation_times) == 0, (
            f"bump {amp}/{width}: envelope violated at {list(report.violation_times[:3])}"
        )
        lines.append(
            f"amp={amp} ceiling {ceiling:.3f} tail var {variation:.1e} bound {report.bound:.3f}"
        )
    print(f"acceptance 5 PASS: {'; '.join(lines)}")


def test_acceptance_6_threshold_sweep_all_bounded(tmp_path):
    # m in {1.1, 1.25, 1.5, 2} x (mu, chi) in {(1, 1), (0.5, 2)}, 2D 128^2,
    # horizon 50: every point must classify Bounded with positive margin
    # (threshold 8/9 at (1, 1)); any Growing or Inconclusive verdict fails.
    # Budget: 30 minutes.
    start = time.perf_counter()
    verdicts = []
    for mu, chi in ((1.0, 1.0), (0.5, 2.0)):
        spec = SweepSpec(
            m_values=(1.1, 1.25, 1.5, 2.0),
            mu_values=(mu,),
            chi_values=(chi,),
            resolutions=(128,),
            dim=2,
            solver=SolverConfig(t_end=50.0),
            initial=InitialSpec(kind="random-perturbation", u0=1.0, amplitude=0.5),
        )
        result = run_sweep(spec, out_dir=tmp_path / f"sweep_mu{mu}_chi{chi}", jobs=2)
        for row in result["rows"]:
            label = f"m={row['m']} mu={mu} chi={chi}"
            assert row["status"] == "completed", f"{label}: {row['status']}"
            assert row["margin"] > 0.0, f"{label}: margin {row['margin']}"
            if (mu, chi) == (1.0, 1.0):
                assert abs(row["threshold_m"] - 8.0 / 9.0) < 1e-12
            assert row["verdict"] == "Bounded", f"{label}: verdict {row['verdict']}"
            verdicts.append(row["verdict"])
    elapsed = time.perf_counter() - start
    assert elapsed < 1800.0, f"sweep took {elapsed:.1f}s"
    print(f"acceptance 6 PASS: {len(verdicts)} points all Bounded in {elapsed:.1f}s")


def test_acceptance_7_gronwall_battery():
    # 20 synthetic cases: 10 exact solutions of y' + a y = h must pass, and
    # 10 copies polluted with an additive ramp that pierces the envelope
    # must be flagged.  Required score: 20/20.
    cases = (
        (0.5, 1.0, 2.0, 1.0),
        (1.0, 2.0, 1.0, 1.0),
        (2.0, 0.5, 3.0, 0.5),
        (0.3, 4.0, 0.2, 2.0),
        (1.5, 0.0, 1.0, 1.0),
        (0.8, 3.0, 3.0, 1.5),
        (1.2, 0.1, 5.0, 0.7),
        (2.5, 2.0, 0.4, 0.4),
        (0.6, 5.0, 1.0, 2.5),
        (1.0, 1.0, 1.0, 1.0),
    )
    t = np.linspace(0.0, 10.0, 2001)
    correct = 0
    for a, y0, c, tau in cases:
        y = c + (y0 - c) * np.exp(-a * t)  # exact solution of y' + a y = a c
        h = np.full_like(t, a * c)
        positive = gronwall_verify(t, y, h, a=a, tau=tau)
        if positive.ok:
            correct += 1
        ramp = (positive.bound + 1.0) * (t / t[-1])  # leaves y0 alone, ends above bound
        negative = gronwall_verify(t, y + ramp, h, a=a, tau=tau)
        if not negative.ok:
            correct += 1
    assert correct == 20, f"battery score {correct}/20"
    print("acceptance 7 PASS: battery score 20/20")


def test_acceptance_8_byte_identical_rerun(tmp_path):
    # repeating a seeded suite configuration must reproduce series.csv
    # byte for byte.
    reruns = (
        RunConfig(
            grid=GridSpec(cells=(64, 64), lengths=(1.0, 1.0)),
            params=ModelParams(chi=1.0, mu=0.0, m=1.5),
            solver=SolverConfig(t_end=SUITE_T_END),
            diag=DiagConfig(),
            initial=InitialSpec(kind="random-perturbation", u0=1.0, amplitude=0.5, v0=1.0, seed=14),
        ),
        RunConfig(
            grid=GridSpec(cells=(128,), lengths=(1.0,)),
            params=ModelParams(chi=1.0, mu=1.0, m=2.0),
            solver=SolverConfig(t_end=SUITE_T_END),
            diag=DiagConfig(),
            initial=InitialSpec(kind="gaussian-bump", amplitude=2.0, width=0.1, v0=1.0),
        ),
    )
    for i, cfg in enumerate(reruns):
        first = tmp_path / f"case{i}_a"
        second = tmp_path / f"case{i}_b"
        run_experiment(cfg, out_dir=first)
        run_experiment(cfg, out_dir=second)
        a = (first / "series.csv").read_bytes()
        b = (second / "series.csv").read_bytes()
        assert a == b, f"case {i}: series.csv differs between reruns"
    print("acceptance 8 PASS: byte-identical series.csv on rerun (2 configs)")
