"""Functional tracking, envelope verification, and run classification."""

import math

import numpy as np
import pytest

from chemofv.diagnostics import (
    DiagConfig,
    DiagSeries,
    Recorder,
    audit_entropy,
    classify_run,
    dissipation,
    entropy,
    functional_snapshot,
    gronwall_bound,
    gronwall_verify,
)
from chemofv.grid import Field, GridSpec, integrate
from chemofv.model import ModelParams, State, diffusivity
from chemofv.stepper import SolverConfig, run


def test_diag_config_validation():
    with pytest.raises(ValueError, match="p_list"):
        DiagConfig(p_list=(1.0,))
    with pytest.raises(ValueError, match="beta_list"):
        DiagConfig(beta_list=())
    with pytest.raises(ValueError, match="tau"):
        DiagConfig(tau=0.0)
    with pytest.raises(ValueError, match="plateau_window"):
        DiagConfig(plateau_window=1.0)
    assert DiagConfig().resolved_tau(60.0) == 1.0
    assert DiagConfig().resolved_tau(3.0) == 0.5
    assert DiagConfig(tau=2.5).resolved_tau(3.0) == 2.5


def test_series_column_names():
    s = DiagSeries(p_list=(2.0, 3.0), beta_list=(2.0,), tau=1.0)
    assert s.csv_columns == [
        "t",
        "mass",
        "sup_u",
        "sup_v",
        "min_u",
        "min_v",
        "entropy",
        "dirichlet",
        "sup_grad_v",
        "dissipation",
        "u_p2",
        "u_p3",
        "gradv_b2",
    ]
    s25 = DiagSeries(p_list=(2.5,), beta_list=(1.5,), tau=1.0)
    assert "u_p2.5" in s25.csv_columns
    assert "gradv_b1.5" in s25.csv_columns


def test_entropy_reference_values():
    spec = GridSpec(cells=(5,), lengths=(1.0,))
    assert abs(entropy(Field.full(spec, math.e)) - math.e) < 1e-12
    assert abs(entropy(Field.full(spec, 1.0))) < 1e-15
    # vacuum contributes essentially nothing thanks to the floor
    assert abs(entropy(Field.zeros(spec))) < 1e-10


def test_dissipation_hand_case():
    # cells [1, 2, 4] on unit spacing with D(u) = u + 1:
    # faces: ubar 1.5, D 2.5, g 1 -> 5/3; ubar 3, D 4, g 2 -> 16/3; total 7
    spec = GridSpec(cells=(3,), lengths=(3.0,))
    params = ModelParams(chi=1.0, mu=0.0, m=2.0)
    val = dissipation(Field(spec, [1.0, 2.0, 4.0]), params)
    assert abs(val - 7.0) < 1e-12


def test_dissipation_linear_diffusion_scaling():
    # with m = 1 the functional is sum D |grad u|^2 / u, homogeneous of
    # degree one: doubling u (kept >= 1 so the floor is idle) doubles it
    rng = np.random.default_rng(31)
    spec = GridSpec(cells=(9, 7), lengths=(1.0, 1.0))
    params = ModelParams(chi=1.0, mu=0.0, m=1.0, c_d=1.7)
    u = Field(spec, rng.uniform(1.0, 3.0, spec.cells))
    u2 = Field(spec, 2.0 * u.values)
    a, b = dissipation(u, params), dissipation(u2, params)
    assert a > 0
    assert abs(b - 2.0 * a) < 1e-12 * a


def test_functional_snapshot_matches_bruteforce():
    rng = np.random.default_rng(32)
    spec = GridSpec(cells=(4, 5), lengths=(1.0, 2.0))
    params = ModelParams(chi=1.0, mu=0.5, m=1.5, c_d=1.2)
    cfg = DiagConfig(p_list=(2.0, 3.0), beta_list=(2.0,), entropy_floor=1e-12)
    u = rng.uniform(0.0, 2.0, spec.cells)
    v = rng.uniform(0.0, 1.0, spec.cells)
    state = State(Field(spec, u), Field(spec, v))
    rec = functional_snapshot(state, params, cfg)

    n0, n1 = spec.cells
    h0, h1 = spec.spacing
    vol = h0 * h1
    floor = cfg.entropy_floor

    g0 = np.zeros((n0 + 1, n1))
    g1 = np.zeros((n0, n1 + 1))
    for i in range(1, n0):
        for j in range(n1):
            g0[i, j] = (v[i, j] - v[i - 1, j]) / h0
    for i in range(n0):
        for j in range(1, n1):
            g1[i, j] = (v[i, j] - v[i, j - 1]) / h1

    mag2 = np.zeros((n0, n1))
    lap = np.zeros((n0, n1))
    for i in range(n0):
        for j in range(n1):
            a0 = 0.5 * (g0[i, j] + g0[i + 1, j])
            a1 = 0.5 * (g1[i, j] + g1[i, j + 1])
            mag2[i, j] = a0 * a0 + a1 * a1
            lap[i, j] = (g0[i + 1, j] - g0[i, j]) / h0 + (g1[i, j + 1] - g1[i, j]) / h1

    diss = 0.0
    for i in range(1, n0):
        for j in range(n1):
            ubar = 0.5 * (u[i - 1, j] + u[i, j])
            g = (u[i, j] - u[i - 1, j]) / h0
            diss += float(diffusivity(np.array(ubar), params)) * g * g / max(ubar, floor)
    for i in range(n0):
        for j in range(1, n1):
            ubar = 0.5 * (u[i, j - 1] + u[i, j])
            g = (u[i, j] - u[i, j - 1]) / h1
            diss += float(diffusivity(np.array(ubar), params)) * g * g / max(ubar, floor)
    diss *= vol

    want = {
        "mass": u.sum() * vol,
        "sup_u": u.max(),
        "sup_v": v.max(),
        "min_u": u.min(),
        "min_v": v.min(),
        "entropy": np.sum(np.maximum(u, floor) * np.log(np.maximum(u, floor))) * vol,
        "dirichlet": (np.sum(g0**2) + np.sum(g1**2)) * vol,
        "sup_grad_v": math.sqrt(mag2.max()),
        "dissipation": diss,
        "int_u2": np.sum(u * u) * vol,
        "int_lap_v2": np.sum(lap * lap) * vol,
        "u_p2": np.sum(u**2.0) * vol,
        "u_p3": np.sum(u**3.0) * vol,
        "gradv_b2": np.sum(mag2**2.0) * vol,
    }
    assert set(rec) == set(want)
    for name, value in want.items():
        assert abs(rec[name] - value) < 1e-12 * (1.0 + abs(value)), name


def test_recorder_growth_decay_columns():
    spec = GridSpec(cells=(10,), lengths=(1.0,))
    params = ModelParams(chi=1.0, mu=1.0, m=2.0)
    cfg = SolverConfig(t_end=0.1, dt_init=0.02, dt_max=0.02)
    rng = np.random.default_rng(33)
    initial = State(
        Field(spec, rng.uniform(0.5, 1.5, spec.cells)), Field.full(spec, 1.0)
    )
    rec = Recorder(params, DiagConfig(), horizon=0.1)
    states = []
    run(initial, params, cfg, on_step=lambda o, n, dt: states.append(n) or rec(o, n, dt))
    series = rec.series
    assert series.array("growth")[0] == 0.0 and series.array("decay")[0] == 0.0
    vol = spec.cell_volume
    for k in range(1, len(series)):
        old, new = states[k - 1], states[k]
        assert series.array("growth")[k] == pytest.approx(integrate(old.u), rel=1e-14)
        want = float(np.sum(old.u.values * new.u.values)) * vol
        assert series.array("decay")[k] == pytest.approx(want, rel=1e-14)


def test_window_integral_constant_series():
    s = DiagSeries(p_list=(2.0,), beta_list=(2.0,), tau=1.0, horizon=10.0)
    t = np.linspace(0.0, 10.0, 101)
    for ti in t:
        rec = {name: 0.0 for name in s.csv_columns[1:]}
        rec.update(int_u2=0.0, int_lap_v2=0.0, growth=0.0, decay=0.0, dt=0.1)
        rec["mass"] = 3.0
        s.append(ti, rec)
    w = s.window_integral("mass")
    # before one tau has elapsed the window is clipped at t = 0
    assert w[5] == pytest.approx(3.0 * t[5], rel=1e-12)
    assert w[50] == pytest.approx(3.0, rel=1e-12)
    assert w[-1] == pytest.approx(3.0, rel=1e-12)


# ---------------------------------------------------------------------------
# envelope

def test_gronwall_bound_reference():
    assert gronwall_bound(1.0, 1.0, 1.0, 1.0) == 3.0
    assert gronwall_bound(5.0, 1.0, 1.0, 1.0) == 6.0
    with pytest.raises(ValueError, match="decay rate"):
        gronwall_bound(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="tau"):
        gronwall_bound(1.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError, match="b >= 0"):
        gronwall_bound(1.0, 1.0, -1.0, 1.0)


def test_gronwall_verify_exact_ode_control():
    # y' + y = c has solution c + (y0 - c) e^(-t); the envelope must cover it
    t = np.linspace(0.0, 12.0, 600)
    for y0, c in ((0.0, 2.0), (5.0, 1.0), (2.0, 0.0)):
        y = c + (y0 - c) * np.exp(-t)
        h = np.full_like(t, c)
        rep = gronwall_verify(t, y, h, a=1.0, tau=1.5)
        assert rep.ok, (y0, c, rep.violation_times[:3])
        assert rep.bound >= y.max()


def test_gronwall_verify_flags_violations():
    t = np.linspace(0.0, 12.0, 600)
    y = 2.0 + 0.0 * t
    h = np.full_like(t, 2.0)
    base = gronwall_verify(t, y, h, a=1.0, tau=1.0)
    assert base.ok
    bad = gronwall_verify(t, y + 2.0 * t, h, a=1.0, tau=1.0)
    assert not bad.ok
    assert bad.violation_times.size > 0
    assert bad.violation_times[0] > 0.0


def test_gronwall_verify_input_validation():
    t = np.array([0.0, 1.0, 1.0])
    y = np.zeros(3)
    with pytest.raises(ValueError, match="strictly increasing"):
        gronwall_verify(t, y, y, a=1.0, tau=1.0)
    with pytest.raises(ValueError, match="equal-length"):
        gronwall_verify(np.array([0.0, 1.0]), y, y, a=1.0, tau=1.0)


# ---------------------------------------------------------------------------
# classification

def _series(t, sup_u, status="completed", horizon=None, sup_v=None, entropy_vals=None):
    t = np.asarray(t, dtype=float)
    s = DiagSeries(
        p_list=(2.0,),
        beta_list=(2.0,),
        tau=1.0,
        horizon=float(t[-1]) if horizon is None else horizon,
    )
    s.status = status
    sup_v = np.ones_like(t) if sup_v is None else np.asarray(sup_v, dtype=float)
    ent = np.zeros_like(t) if entropy_vals is None else np.asarray(entropy_vals, dtype=float)
    for k, tk in enumerate(t):
        rec = {name: 0.0 for name in s.csv_columns[1:]}
        rec.update(int_u2=0.0, int_lap_v2=0.0, growth=0.0, decay=0.0, dt=0.1)
        rec["sup_u"] = float(sup_u[k])
        rec["sup_v"] = float(sup_v[k])
        rec["entropy"] = float(ent[k])
        s.append(float(tk), rec)
    return s


def test_classify_plateau_is_bounded():
    t = np.linspace(0.0, 10.0, 201)
    sup = 1.0 + 0.5 * np.exp(-t)
    out = classify_run(_series(t, sup))
    assert out.verdict == "Bounded"
    assert out.plateau_ratio < 0.01
    assert out.v_max_principle_ok


def test_classify_growth_cap_crossed():
    t = np.linspace(0.0, 10.0, 201)
    sup = np.exp(t)  # e^10 > 2e4 times the start
    out = classify_run(_series(t, sup))
    assert out.verdict == "Growing"
    # scale invariance: the same shape at a different magnitude
    out2 = classify_run(_series(t, 1e-6 * sup))
    assert out2.verdict == "Growing"


def test_classify_cap_beats_truncation():
    # a blowup that dies early is still Growing, not Inconclusive
    t = np.linspace(0.0, 4.0, 81)
    sup = np.exp(3.0 * t)
    out = classify_run(_series(t, sup, status="positivity_failure", horizon=10.0))
    assert out.verdict == "Growing"


def test_classify_slow_growth_by_slope():
    t = np.linspace(0.0, 10.0, 201)
    sup = np.exp(0.2 * t)  # only e^2 total, under the cap, slope 0.2
    out = classify_run(_series(t, sup))
    assert out.verdict == "Growing"
    assert out.log_slope > 0.05


def test_classify_truncated_run_inconclusive():
    t = np.linspace(0.0, 5.0, 101)
    sup = 1.0 + 0.5 * np.exp(-t)
    out = classify_run(_series(t, sup, horizon=10.0))
    assert out.verdict == "Inconclusive"


def test_classify_dt_underflow_is_growing():
    t = np.linspace(0.0, 10.0, 201)
    sup = np.ones_like(t)
    out = classify_run(_series(t, sup, status="dt_underflow"))
    assert out.verdict == "Growing"


def test_classify_extinct_density_is_bounded():
    t = np.linspace(0.0, 10.0, 201)
    out = classify_run(_series(t, np.zeros_like(t)))
    assert out.verdict == "Bounded"
    assert out.peak_sup_u == 0.0


def test_classify_drifting_tail_inconclusive():
    t = np.linspace(0.0, 10.0, 201)
    sup = 1.0 + 0.04 * t  # 4% per unit: slope ~0.03, tail varies ~3%
    out = classify_run(_series(t, sup))
    assert out.verdict == "Inconclusive"


def test_classify_reports_v_violation():
    t = np.linspace(0.0, 10.0, 201)
    sup_v = 1.0 + 0.001 * t
    out = classify_run(_series(t, np.ones_like(t), sup_v=sup_v))
    assert not out.v_max_principle_ok


def test_audit_entropy_on_decaying_series():
    t = np.linspace(0.0, 8.0, 400)
    ent = 0.3 * np.exp(-t) + 0.05
    s = _series(t, np.ones_like(t), entropy_vals=ent)
    rep = audit_entropy(s)
    assert rep.ok
    assert rep.bound >= ent.max()
