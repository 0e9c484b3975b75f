"""Positivity-preserving IMEX time integration.

One step from t to t + dt advances the pair (u, v) in two stages:

1. Attractant: backward Euler with consumption frozen at u^n,
   (I - dt Lap + dt u^n) v^{n+1} = v^n.  The matrix is a symmetric M-matrix,
   so the exact update is nonnegative and obeys sup v^{n+1} <= sup v^n.  To
   keep that bound structural in floating point the solve is performed on the
   defect w = sup(v^n) - v^{n+1}, which satisfies the same system with a
   nonnegative right-hand side; round-off negatives in w (and in the
   reconstructed v) below positivity_tol are snapped to zero, anything worse
   rejects the step.  Runs with manufactured forcing have no maximum
   principle and solve for v directly.

2. Density: implicit diffusion with face diffusivities frozen at u^n,
   explicit first-order upwind drift along chi grad v^{n+1}, and a logistic
   split with explicit growth dt mu u^n and implicit decay entering the
   matrix diagonal as dt mu u^n.  Under the choose_dt CFL bound the
   right-hand side is a nonnegative combination of cell values, and the
   matrix is again a symmetric M-matrix, so nonnegativity is structural.

Both systems are solved matrix-free with preconditioned conjugate gradients
(`solve_spd`).  The preconditioner is an exact constant-coefficient solve in
the cosine basis (the Neumann Laplacian diagonalizes there), which keeps
iteration counts flat as dt/h^2 grows.  Initial guesses are the previous
fields: Krylov corrections of the mass-conserving density operator then
carry no mean, so with mu = 0 the total density is conserved to round-off
over arbitrarily many steps.

Face fluxes always telescope: each interior face value enters exactly two
cells with opposite signs and boundary faces carry nothing, so the discrete
mass law holds to solver tolerance and zero-flux boundaries are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.fft

from .grid import Field, GridSpec
from .model import ModelParams, State, diffusivity

__all__ = [
    "SolverConfig",
    "Trajectory",
    "StepRejection",
    "LinearSolverError",
    "PositivityError",
    "solve_spd",
    "step",
    "choose_dt",
    "run",
]

MAX_HALVINGS = 20


class StepRejection(Exception):
    """A step attempt produced an unusable state; the caller may retry."""

    reason = "nonfinite"


class LinearSolverError(StepRejection):
    """Inner linear solve failed to converge or lost definiteness."""

    reason = "linear_solver"

    def __init__(self, message: str, residual: float = math.nan, iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class PositivityError(StepRejection):
    """A field dropped below -positivity_tol; the scheme was pushed too hard."""

    reason = "positivity"


@dataclass(frozen=True)
class SolverConfig:
    """Time-integration controls."""

    t_end: float
    dt_init: float = 1e-3
    dt_max: float = 0.1
    cfl_safety: float = 0.8
    snapshot_every: Optional[float] = None
    max_linear_iters: int = 500
    linear_tol: float = 1e-12
    positivity_tol: float = 1e-12

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive and finite, got {self.t_end}")
        if not (0 < self.dt_init <= self.dt_max):
            raise ValueError(
                f"need 0 < dt_init <= dt_max, got dt_init={self.dt_init}, dt_max={self.dt_max}"
            )
        if not (0 < self.cfl_safety <= 1.0):
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.snapshot_every is not None and not self.snapshot_every > 0:
            raise ValueError(f"snapshot_every must be positive, got {self.snapshot_every}")
        if not (isinstance(self.max_linear_iters, int) and self.max_linear_iters >= 1):
            raise ValueError(f"max_linear_iters must be a positive integer")
        if not self.linear_tol > 0:
            raise ValueError(f"linear_tol must be positive, got {self.linear_tol}")
        if self.positivity_tol < 0:
            raise ValueError(f"positivity_tol must be >= 0, got {self.positivity_tol}")


@dataclass
class Trajectory:
    """Snapshots at scheduled times plus how the run ended."""

    snapshots: list
    status: str
    diag: object = None


# ---------------------------------------------------------------------------
# linear algebra

_eigen_cache: dict[GridSpec, np.ndarray] = {}


def _neumann_eigenvalues(spec: GridSpec) -> np.ndarray:
    """Modal symbol of -laplacian_neumann in the DCT-II basis."""
    lam = _eigen_cache.get(spec)
    if lam is None:
        lam = np.zeros(spec.cells)
        for ax, (n, h) in enumerate(zip(spec.cells, spec.spacing)):
            k = np.arange(n)
            lam_ax = (4.0 / (h * h)) * np.sin(np.pi * k / (2 * n)) ** 2
            shape = [1] * spec.dim
            shape[ax] = n
            lam = lam + lam_ax.reshape(shape)
        _eigen_cache[spec] = lam
    return lam


def _cosine_preconditioner(
    spec: GridSpec, react_mean: float, diff_mean: float, dt: float
) -> Callable[[np.ndarray], np.ndarray]:
    """Exact inverse of react_mean*I + dt*diff_mean*(-Lap) via DCT-II."""
    denom = react_mean + dt * diff_mean * _neumann_eigenvalues(spec)

    def apply_m_inv(r: np.ndarray) -> np.ndarray:
        coeffs = scipy.fft.dctn(r, type=2, norm="ortho")
        coeffs /= denom
        return scipy.fft.idctn(coeffs, type=2, norm="ortho")

    return apply_m_inv


def solve_spd(
    apply_a: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    x0: Optional[np.ndarray] = None,
    tol: float = 1e-12,
    max_iters: int = 500,
    precond: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> tuple[np.ndarray, dict]:
    """Conjugate gradients for a symmetric positive definite operator.

    Stops when the true residual satisfies ||rhs - A x||_2 <= tol * ||rhs||_2;
    raises LinearSolverError with the final residual otherwise.
    """
    b = np.asarray(rhs, dtype=np.float64)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    target = tol * math.sqrt(float(np.vdot(b, b)))

    r = b - apply_a(x)
    res = math.sqrt(abs(float(np.vdot(r, r))))
    if not math.isfinite(res):
        raise LinearSolverError("non-finite initial residual", residual=res)
    if res <= target:
        return x, {"iterations": 0, "residual": res}

    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = float(np.vdot(r, z))
    iterations = 0
    for k in range(1, max_iters + 1):
        iterations = k
        ap = apply_a(p)
        pap = float(np.vdot(p, ap))
        if not math.isfinite(pap) or pap <= 0.0:
            raise LinearSolverError(
                f"operator is not positive definite along a search direction (p.Ap = {pap:.3e})",
                residual=res,
                iterations=k,
            )
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = math.sqrt(abs(float(np.vdot(r, r))))
        if not math.isfinite(res):
            raise LinearSolverError("residual lost finiteness", residual=res, iterations=k)
        if res <= target:
            # recurrence residuals drift; confirm against the operator
            r = b - apply_a(x)
            res = math.sqrt(abs(float(np.vdot(r, r))))
            if res <= target:
                return x, {"iterations": k, "residual": res}
            z = precond(r) if precond is not None else r
            p = z.copy()
            rz = float(np.vdot(r, z))
            continue
        z = precond(r) if precond is not None else r
        rz_new = float(np.vdot(r, z))
        if not math.isfinite(rz_new) or rz_new <= 0.0:
            raise LinearSolverError(
                f"preconditioned residual lost definiteness (r.z = {rz_new:.3e})",
                residual=res,
                iterations=k,
            )
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise LinearSolverError(
        f"no convergence in {max_iters} iterations (residual {res:.3e}, target {target:.3e})",
        residual=res,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# one step

def _repair_negative(vals: np.ndarray, tol: float, label: str) -> np.ndarray:
    """Zero out round-off negatives; reject anything below -tol."""
    lo = float(vals.min())
    if not np.all(np.isfinite(vals)):
        raise StepRejection(f"{label} contains non-finite values")
    if lo < -tol:
        raise PositivityError(f"{label} reached {lo:.6e}, below -positivity_tol={tol:.1e}")
    if lo < 0.0:
        vals[vals < 0.0] = 0.0
    return vals


def _lo_hi(spec: GridSpec, ax: int) -> tuple[tuple, tuple]:
    lo = [slice(None)] * spec.dim
    hi = [slice(None)] * spec.dim
    lo[ax] = slice(0, spec.cells[ax] - 1)
    hi[ax] = slice(1, spec.cells[ax])
    return tuple(lo), tuple(hi)


def step(
    state: State,
    dt: float,
    params: ModelParams,
    cfg: SolverConfig,
    forcing: Optional[Callable] = None,
) -> State:
    """Advance one IMEX step; raises StepRejection subtypes on failure.

    forcing, when given, is called as forcing(t, spec) and must return a pair
    of cell arrays (f_u, f_v) added explicitly to the two equations.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    spec = state.spec
    un = state.u.values
    vn = state.v.values
    f_u = f_v = None
    if forcing is not None:
        f_u, f_v = forcing(state.t, spec)

    inv_h2 = [dt / (h * h) for h in spec.spacing]

    # attractant solve: react = 1 + dt u^n, unit diffusivity
    react_v = 1.0 + dt * un

    def apply_av(x: np.ndarray) -> np.ndarray:
        out = react_v * x
        for ax in range(spec.dim):
            g = np.diff(x, axis=ax)
            out -= inv_h2[ax] * np.diff(g, axis=ax, prepend=0.0, append=0.0)
        return out

    precond_v = _cosine_preconditioner(spec, 1.0 + dt * float(un.mean()), 1.0, dt)
    if f_v is None:
        # solve for the defect below the running maximum so that the discrete
        # maximum principle survives floating point exactly
        v_sup = float(vn.max())
        b_w = (v_sup - vn) + (dt * v_sup) * un
        w, _ = solve_spd(
            apply_av,
            b_w,
            x0=v_sup - vn,
            tol=cfg.linear_tol,
            max_iters=cfg.max_linear_iters,
            precond=precond_v,
        )
        w = _repair_negative(w, cfg.positivity_tol, "attractant maximum defect")
        v_new = v_sup - w
    else:
        b_v = vn + dt * np.asarray(f_v, dtype=np.float64)
        v_new, _ = solve_spd(
            apply_av,
            b_v,
            x0=vn,
            tol=cfg.linear_tol,
            max_iters=cfg.max_linear_iters,
            precond=precond_v,
        )
    v_new = _repair_negative(v_new, cfg.positivity_tol, "attractant")

    # density solve: drift is explicit upwind along the fresh attractant
    b_u = (1.0 + dt * params.mu) * un
    for ax, h in enumerate(spec.spacing):
        w_face = (params.chi / h) * np.diff(v_new, axis=ax)
        lo, hi = _lo_hi(spec, ax)
        flux = np.maximum(w_face, 0.0) * un[lo] + np.minimum(w_face, 0.0) * un[hi]
        b_u -= (dt / h) * np.diff(flux, axis=ax, prepend=0.0, append=0.0)
    if f_u is not None:
        b_u = b_u + dt * np.asarray(f_u, dtype=np.float64)

    d_cell = diffusivity(un, params)
    d_face = []
    for ax in range(spec.dim):
        lo, hi = _lo_hi(spec, ax)
        d_face.append(0.5 * (d_cell[lo] + d_cell[hi]))
    react_u = 1.0 + (dt * params.mu) * un if params.mu > 0 else None

    def apply_au(x: np.ndarray) -> np.ndarray:
        out = react_u * x if react_u is not None else x.copy()
        for ax in range(spec.dim):
            g = d_face[ax] * np.diff(x, axis=ax)
            out -= inv_h2[ax] * np.diff(g, axis=ax, prepend=0.0, append=0.0)
        return out

    react_mean = 1.0 + dt * params.mu * float(un.mean())
    precond_u = _cosine_preconditioner(spec, react_mean, float(d_cell.mean()), dt)
    u_new, _ = solve_spd(
        apply_au,
        b_u,
        x0=un,
        tol=cfg.linear_tol,
        max_iters=cfg.max_linear_iters,
        precond=precond_u,
    )
    u_new = _repair_negative(u_new, cfg.positivity_tol, "density")

    return State(Field(spec, u_new), Field(spec, v_new), state.t + dt)


def choose_dt(state: State, params: ModelParams, cfg: SolverConfig) -> float:
    """Stable step size for the explicit pieces of the scheme.

    cfl_safety times the harshest of the per-axis upwind bounds
    h_i / (2 N max|chi dv/dx_i| + eps) and the logistic-growth bound
    1 / (mu max u), the whole capped at dt_max.
    """
    spec = state.spec
    n_dim = spec.dim
    vn = state.v.values
    cand = math.inf
    for ax, h in enumerate(spec.spacing):
        w_max = params.chi * float(np.abs(np.diff(vn, axis=ax)).max()) / h
        cand = min(cand, h / (2.0 * n_dim * w_max + 1e-300))
    growth = params.mu * float(state.u.values.max())
    if growth > 0.0:
        cand = min(cand, 1.0 / growth)
    return min(cfg.cfl_safety * cand, cfg.dt_max)


def run(
    initial: State,
    params: ModelParams,
    cfg: SolverConfig,
    on_step: Optional[Callable] = None,
    forcing: Optional[Callable] = None,
) -> Trajectory:
    """Integrate from the initial state to t_end with adaptive steps.

    Rejected steps (solver failure, positivity breach, non-finite values)
    halve dt and retry up to 20 times; exhaustion ends the run with status
    dt_underflow (or positivity_failure when the last rejection was a
    positivity breach).  `on_step` is called once as on_step(None, initial,
    0.0) and then once per accepted step as on_step(old, new, dt).
    """
    state = initial
    t_end = cfg.t_end
    snap_every = cfg.snapshot_every if cfg.snapshot_every is not None else t_end / 10.0
    eps_t = 1e-12 * max(1.0, abs(t_end))
    snapshots = [initial]
    next_snap = min(snap_every, t_end)
    if on_step is not None:
        on_step(None, initial, 0.0)

    status = "completed"
    first = True
    while t_end - state.t > eps_t:
        dt = choose_dt(state, params, cfg)
        if first:
            dt = min(dt, cfg.dt_init)
            first = False
        dt = min(dt, t_end - state.t)
        if dt <= 1e-14 * max(1.0, abs(t_end)):
            # stability bound collapsed; counts as a dt underflow even if
            # microscopic steps would still be accepted
            status = "dt_underflow"
            break
        new_state = None
        reason = ""
        for _ in range(MAX_HALVINGS + 1):
            try:
                new_state = step(state, dt, params, cfg, forcing=forcing)
                break
            except StepRejection as exc:
                reason = exc.reason
                dt *= 0.5
        if new_state is None:
            status = "positivity_failure" if reason == "positivity" else "dt_underflow"
            break
        if t_end - new_state.t <= eps_t:
            new_state = State(new_state.u, new_state.v, t_end)
        if on_step is not None:
            on_step(state, new_state, dt)
        state = new_state
        if next_snap <= state.t + eps_t:
            snapshots.append(state)
            while next_snap <= state.t + eps_t:
                next_snap += snap_every
    if snapshots[-1].t < state.t:
        snapshots.append(state)
    return Trajectory(snapshots=snapshots, status=status)
