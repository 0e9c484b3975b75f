"""Runtime functionals, their time series, and run classification.

Tracked per accepted step:

* mass (integral of u) and the per-step growth/decay integrals that make the
  discrete logistic mass law checkable to solver tolerance;
* extrema of u and v;
* entropy integral of u log u, with values floored at entropy_floor so that
  0 log 0 contributes 0;
* Dirichlet energy of v as the face sum of squared gradients (this is exactly
  the quadratic form of the discrete Laplacian, so <-Lap v, v> matches it to
  round-off);
* sup |grad v| and integrals of |grad v|^(2 beta) from a cell-centered
  gradient reconstruction (faces averaged back to centers per axis);
* the diffusive dissipation integral of D(u)|grad u|^2 / u evaluated on
  faces with arithmetic-mean u, floored like the entropy;
* integrals of u^p for each p, of u^2, and of (Lap v)^2.

Sliding-window integrals over trailing windows of length tau feed the
Gronwall-type audit: for y' + A y <= h with window integrals of h bounded by
B, the envelope max(y0 + B, B/(A tau) + 2 B) must dominate y.  The verifier
estimates B from the recorded h series and reports violations instead of
aborting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid import Field, grad_faces, integrate, laplacian_neumann
from .model import ModelParams, State, diffusivity

__all__ = [
    "DiagConfig",
    "DiagSeries",
    "RunOutcome",
    "Recorder",
    "entropy",
    "dissipation",
    "functional_snapshot",
    "gronwall_bound",
    "gronwall_verify",
    "GronwallReport",
    "audit_entropy",
    "classify_run",
]

_SCALE_FLOOR = 1e-300


def _fmt_exp(x: float) -> str:
    return format(float(x), "g")


@dataclass(frozen=True)
class DiagConfig:
    """What to record and how to classify."""

    p_list: tuple[float, ...] = (2.0, 3.0)
    beta_list: tuple[float, ...] = (2.0,)
    tau: Optional[float] = None
    entropy_floor: float = 1e-12
    plateau_window: float = 0.2
    plateau_tol: float = 0.01
    growth_factor: float = 1e3
    slope_limit: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_list", tuple(float(p) for p in self.p_list))
        object.__setattr__(self, "beta_list", tuple(float(b) for b in self.beta_list))
        if not self.p_list or any(p <= 1.0 for p in self.p_list):
            raise ValueError(f"p_list must be nonempty with every p > 1, got {self.p_list}")
        if not self.beta_list or any(b <= 1.0 for b in self.beta_list):
            raise ValueError(
                f"beta_list must be nonempty with every beta > 1, got {self.beta_list}"
            )
        if self.tau is not None and not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.entropy_floor > 0:
            raise ValueError(f"entropy_floor must be positive, got {self.entropy_floor}")
        if not 0.0 < self.plateau_window < 1.0:
            raise ValueError(f"plateau_window must lie in (0, 1), got {self.plateau_window}")
        if not self.plateau_tol > 0:
            raise ValueError(f"plateau_tol must be positive, got {self.plateau_tol}")
        if not self.growth_factor > 1.0:
            raise ValueError(f"growth_factor must exceed 1, got {self.growth_factor}")
        if not self.slope_limit > 0:
            raise ValueError(f"slope_limit must be positive, got {self.slope_limit}")

    def resolved_tau(self, horizon: float) -> float:
        return self.tau if self.tau is not None else min(1.0, horizon / 6.0)


_BASE_COLUMNS = (
    "mass",
    "sup_u",
    "sup_v",
    "min_u",
    "min_v",
    "entropy",
    "dirichlet",
    "sup_grad_v",
    "dissipation",
)
_INTERNAL_COLUMNS = ("int_u2", "int_lap_v2", "growth", "decay", "dt")


class DiagSeries:
    """Per-step records of the tracked functionals."""

    def __init__(
        self,
        p_list: tuple[float, ...],
        beta_list: tuple[float, ...],
        tau: float,
        horizon: Optional[float] = None,
    ):
        self.p_list = tuple(float(p) for p in p_list)
        self.beta_list = tuple(float(b) for b in beta_list)
        self.tau = float(tau)
        self.horizon = horizon
        self.status = "completed"
        self.times: list[float] = []
        self._cols: dict[str, list[float]] = {
            name: [] for name in self.csv_columns[1:] + list(_INTERNAL_COLUMNS)
        }

    @property
    def csv_columns(self) -> list[str]:
        """Column names of the series CSV, in file order."""
        return (
            ["t", *_BASE_COLUMNS]
            + [f"u_p{_fmt_exp(p)}" for p in self.p_list]
            + [f"gradv_b{_fmt_exp(b)}" for b in self.beta_list]
        )

    def append(self, t: float, record: dict) -> None:
        self.times.append(float(t))
        for name, values in self._cols.items():
            values.append(float(record[name]))

    def __len__(self) -> int:
        return len(self.times)

    def array(self, name: str) -> np.ndarray:
        if name == "t":
            return np.asarray(self.times, dtype=np.float64)
        return np.asarray(self._cols[name], dtype=np.float64)

    def row(self, i: int) -> list[float]:
        return [self.times[i]] + [self._cols[name][i] for name in self.csv_columns[1:]]

    def window_integral(self, name: str, tau: Optional[float] = None) -> np.ndarray:
        """Trailing-window trapezoid integrals of a column over length tau.

        Entry i integrates over [t_i - tau, t_i] clipped to the recorded
        range, interpolating linearly at the left edge.
        """
        tau = self.tau if tau is None else float(tau)
        t = self.array("t")
        y = self.array(name)
        if len(t) < 2:
            return np.zeros_like(t)
        cum = _cumtrapz(t, y)
        left = np.maximum(t - tau, t[0])
        return cum - np.interp(left, t, cum)


def _cumtrapz(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t), out=out[1:])
    return out


def entropy(u: Field, floor: float = 1e-12) -> float:
    """Integral of u log u with the integrand floored at floor log floor."""
    vals = np.maximum(u.values, floor)
    return float(np.sum(vals * np.log(vals)) * u.spec.cell_volume)


def dissipation(u: Field, params: ModelParams, floor: float = 1e-12) -> float:
    """Face-based integral of D(u) |grad u|^2 / u.

    u is averaged arithmetically onto faces both inside D and in the
    denominator, which is floored to keep vacuum regions harmless.
    """
    spec = u.spec
    vals = u.values
    total = 0.0
    for ax, h in enumerate(spec.spacing):
        lo = [slice(None)] * spec.dim
        hi = [slice(None)] * spec.dim
        lo[ax] = slice(0, spec.cells[ax] - 1)
        hi[ax] = slice(1, spec.cells[ax])
        ubar = 0.5 * (vals[tuple(lo)] + vals[tuple(hi)])
        g = np.diff(vals, axis=ax) / h
        total += float(
            np.sum(diffusivity(ubar, params) * g * g / np.maximum(ubar, floor))
        )
    return total * spec.cell_volume


def _cell_grad_mag2(v: Field) -> np.ndarray:
    """Squared gradient magnitude reconstructed at cell centers."""
    spec = v.spec
    comps = grad_faces(v).components
    mag2 = np.zeros(spec.cells)
    for ax in range(spec.dim):
        lo = [slice(None)] * spec.dim
        hi = [slice(None)] * spec.dim
        lo[ax] = slice(0, spec.cells[ax])
        hi[ax] = slice(1, spec.cells[ax] + 1)
        avg = 0.5 * (comps[ax][tuple(lo)] + comps[ax][tuple(hi)])
        mag2 += avg * avg
    return mag2


def functional_snapshot(state: State, params: ModelParams, cfg: DiagConfig) -> dict:
    """All tracked functionals of one state, keyed by series column name."""
    spec = state.spec
    vol = spec.cell_volume
    u = state.u.values
    v = state.v.values
    gv = grad_faces(state.v)
    lap_v = laplacian_neumann(state.v).values
    mag2 = _cell_grad_mag2(state.v)

    rec: dict[str, float] = {
        "mass": float(u.sum() * vol),
        "sup_u": float(u.max()),
        "sup_v": float(v.max()),
        "min_u": float(u.min()),
        "min_v": float(v.min()),
        "entropy": entropy(state.u, cfg.entropy_floor),
        "dirichlet": float(sum(np.sum(c * c) for c in gv.components) * vol),
        "sup_grad_v": float(math.sqrt(mag2.max())),
        "dissipation": dissipation(state.u, params, cfg.entropy_floor),
        "int_u2": float(np.sum(u * u) * vol),
        "int_lap_v2": float(np.sum(lap_v * lap_v) * vol),
    }
    for p in cfg.p_list:
        rec[f"u_p{_fmt_exp(p)}"] = float(np.sum(np.power(u, p)) * vol)
    for b in cfg.beta_list:
        rec[f"gradv_b{_fmt_exp(b)}"] = float(np.sum(np.power(mag2, b)) * vol)
    return rec


class Recorder:
    """Step hook that accumulates a DiagSeries along a run."""

    def __init__(self, params: ModelParams, cfg: DiagConfig, horizon: float):
        self.params = params
        self.cfg = cfg
        self.series = DiagSeries(
            cfg.p_list, cfg.beta_list, cfg.resolved_tau(horizon), horizon=horizon
        )

    def __call__(self, old: Optional[State], new: State, dt: float) -> None:
        rec = functional_snapshot(new, self.params, self.cfg)
        if old is None:
            rec["growth"] = 0.0
            rec["decay"] = 0.0
        else:
            rec["growth"] = integrate(old.u)
            rec["decay"] = integrate(Field(new.spec, old.u.values * new.u.values))
        rec["dt"] = dt
        self.series.append(new.t, rec)


# ---------------------------------------------------------------------------
# Gronwall-type envelope

def gronwall_bound(y0: float, a: float, b: float, tau: float) -> float:
    """Envelope for y' + a y <= h when window integrals of h are below b.

    Every absolutely continuous y satisfying the differential inequality with
    integral of h over [t, t + tau] bounded by b obeys
    y(t) <= max(y0 + b, b / (a tau) + 2 b).
    """
    if not a > 0:
        raise ValueError(f"decay rate a must be positive, got {a}")
    if not tau > 0:
        raise ValueError(f"window length tau must be positive, got {tau}")
    if not (math.isfinite(y0) and math.isfinite(b) and b >= 0):
        raise ValueError(f"need finite y0 and b >= 0, got y0={y0}, b={b}")
    return max(y0 + b, b / (a * tau) + 2.0 * b)


@dataclass
class GronwallReport:
    ok: bool
    bound: float
    b_estimate: float
    margin: float
    violation_times: np.ndarray


def gronwall_verify(
    times,
    y,
    h,
    a: float,
    tau: float,
    rel_tol: float = 1e-9,
) -> GronwallReport:
    """Check a sampled series against the Gronwall envelope.

    b is estimated as the largest trapezoid integral of h over windows of
    length tau (full windows when the series is long enough, the whole range
    otherwise).  Violations are reported with their times; nothing aborts.
    """
    t = np.asarray(times, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if t.ndim != 1 or t.shape != y.shape or t.shape != h.shape or len(t) < 2:
        raise ValueError("times, y, h must be equal-length 1D series with >= 2 samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")

    cum = _cumtrapz(t, h)
    span = t[-1] - t[0]
    if span <= tau:
        b_est = float(cum[-1])
    else:
        starts = t[t + tau <= t[-1] + 1e-12 * max(1.0, t[-1])]
        ends = starts + tau
        b_est = float(np.max(np.interp(ends, t, cum) - np.interp(starts, t, cum)))
    b_est = max(b_est, 0.0)

    bound = gronwall_bound(float(y[0]), a, b_est, tau)
    slack = rel_tol * max(1.0, abs(bound))
    mask = y > bound + slack
    return GronwallReport(
        ok=not bool(mask.any()),
        bound=bound,
        b_estimate=b_est,
        margin=float((bound - y).min()),
        violation_times=t[mask],
    )


def audit_entropy(series: DiagSeries, a: float = 1.0, rel_tol: float = 1e-6) -> GronwallReport:
    """Audit the entropy series against its own fitted Gronwall envelope.

    The forcing is the measured positive part h = max(0, y' + a y), so the
    audit checks that the envelope arithmetic and the recorded series are
    mutually consistent; synthetic positive and negative controls live in the
    test battery.
    """
    t = series.array("t")
    y = series.array("entropy")
    if len(t) < 3:
        raise ValueError("entropy audit needs at least 3 samples")
    h = np.maximum(np.gradient(y, t) + a * y, 0.0)
    return gronwall_verify(t, y, h, a, series.tau, rel_tol=rel_tol)


# ---------------------------------------------------------------------------
# classification

@dataclass
class RunOutcome:
    verdict: str
    peak_sup_u: float
    plateau_ratio: float
    log_slope: float
    v_max_principle_ok: bool
    entropy_peak: float


def _trailing_mask(t: np.ndarray, horizon: float, w: float) -> np.ndarray:
    cutoff = horizon * (1.0 - w)
    mask = t >= cutoff - 1e-12 * max(1.0, horizon)
    if mask.sum() < 2:
        mask = np.zeros_like(mask)
        mask[-2:] = True
    return mask


def classify_run(diag: DiagSeries, cfg: Optional[DiagConfig] = None, w: float = 0.2) -> RunOutcome:
    """Label a recorded run Bounded, Growing, or Inconclusive.

    Growing: the sup of u crossed growth_factor times its initial value, its
    trailing log-slope exceeds slope_limit per unit time, or the stepper
    underflowed dt.  Bounded: the trailing window (fraction w of the horizon)
    varies by less than plateau_tol relative to its peak and the sup stayed
    under the growth cap.  Everything else, including runs that never reached
    the configured horizon, is Inconclusive.
    """
    if cfg is None:
        cfg = DiagConfig()
    if diag.horizon is None:
        raise ValueError("classify_run needs diag.horizon")
    if len(diag) < 2:
        raise ValueError("classify_run needs at least 2 samples")
    t = diag.array("t")
    sup_u = diag.array("sup_u")
    sup_v = diag.array("sup_v")
    ent = diag.array("entropy")

    peak = float(sup_u.max())
    sup0 = float(sup_u[0])
    v_ok = bool(sup_v.max() <= sup_v[0] * (1.0 + 1e-12))
    entropy_peak = float(ent.max())

    mask = _trailing_mask(t, diag.horizon, w)
    window = sup_u[mask]
    scale = max(float(np.abs(window).max()), _SCALE_FLOOR)
    plateau_ratio = float((window.max() - window.min()) / scale)
    tw = t[mask]
    if len(tw) >= 2 and tw[-1] > tw[0]:
        log_slope = float(
            np.polyfit(tw, np.log(np.maximum(window, _SCALE_FLOOR)), 1)[0]
        )
    else:
        log_slope = 0.0

    spans = t[-1] >= diag.horizon * (1.0 - 1e-9)
    crossed_cap = (sup0 > 0.0 and peak >= cfg.growth_factor * sup0) or (
        sup0 == 0.0 and peak > 0.0
    )

    if diag.status == "dt_underflow" or crossed_cap:
        verdict = "Growing"
    elif not spans:
        verdict = "Inconclusive"
    elif log_slope > cfg.slope_limit:
        verdict = "Growing"
    elif plateau_ratio < cfg.plateau_tol:
        verdict = "Bounded"
    else:
        verdict = "Inconclusive"

    return RunOutcome(
        verdict=verdict,
        peak_sup_u=peak,
        plateau_ratio=plateau_ratio,
        log_slope=log_slope,
        v_max_principle_ok=v_ok,
        entropy_peak=entropy_peak,
    )
