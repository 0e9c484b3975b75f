"""Chemotaxis-consumption model with logistic growth.

Two nonnegative fields on a zero-flux box:

* cell density u, evolving by density-dependent diffusion with diffusivity
  D(u) = c_d (u + 1)^(m-1), drift up the attractant gradient with strength
  chi, and logistic growth mu (u - u^2);
* attractant v, diffusing with unit diffusivity and consumed at rate u v.

`threshold_m` evaluates the critical diffusion exponent above which the
density stays bounded for the given drift/growth balance: in one and two
dimensions it is 1 - mu / (chi (1 + 8 lambda0 sup v0)), in three and higher
it is 1.  The scale c_d does not enter the threshold.

Spatial discretization choices live here so the time integrator and the
semi-discrete right-hand sides share one set of kernels: diffusivities are
averaged arithmetically onto faces, and the drift flux takes the upwind cell
value against the face velocity chi * grad(v).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import (
    FaceField,
    Field,
    GridSpec,
    _interior,
    div_faces,
    grad_faces,
    integrate,
    laplacian_neumann,
)

__all__ = [
    "ModelParams",
    "State",
    "diffusivity",
    "rhs_u",
    "rhs_v",
    "threshold_m",
]


@dataclass(frozen=True)
class ModelParams:
    """Model coefficients; chi >= 0, mu >= 0, c_d > 0, lambda0 > 0."""

    chi: float
    mu: float
    m: float
    c_d: float = 1.0
    lambda0: float = 1.0

    def __post_init__(self) -> None:
        for name in ("chi", "mu", "m", "c_d", "lambda0"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val)):
                raise ValueError(f"{name} must be a finite real, got {val!r}")
            object.__setattr__(self, name, float(val))
        if self.chi < 0:
            raise ValueError(f"chi must be >= 0, got {self.chi}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.c_d <= 0:
            raise ValueError(f"c_d must be > 0, got {self.c_d}")
        if self.lambda0 <= 0:
            raise ValueError(f"lambda0 must be > 0, got {self.lambda0}")


@dataclass
class State:
    """Density u and attractant v on a shared grid at time t."""

    u: Field
    v: Field
    t: float = 0.0

    def __post_init__(self) -> None:
        if self.u.spec != self.v.spec:
            raise ValueError("u and v must share one grid")
        if self.u.values.min() < 0.0:
            raise ValueError(f"u must be nonnegative, min {self.u.values.min():.3e}")
        if self.v.values.min() < 0.0:
            raise ValueError(f"v must be nonnegative, min {self.v.values.min():.3e}")
        self.t = float(self.t)
        if not (math.isfinite(self.t) and self.t >= 0.0):
            raise ValueError(f"t must be finite and >= 0, got {self.t}")

    @property
    def spec(self) -> GridSpec:
        return self.u.spec


def diffusivity(u, params: ModelParams) -> np.ndarray:
    """Pointwise diffusivity c_d (u + 1)^(m - 1); rejects negative input."""
    vals = u.values if isinstance(u, Field) else np.asarray(u, dtype=np.float64)
    if vals.min() < 0.0:
        raise ValueError("diffusivity requires nonnegative density")
    if params.m == 1.0:
        return np.full_like(vals, params.c_d)
    if params.m == 2.0:
        return params.c_d * (vals + 1.0)
    return params.c_d * np.power(vals + 1.0, params.m - 1.0)


def face_average(cell_vals: np.ndarray, spec: GridSpec) -> list[np.ndarray]:
    """Arithmetic means on interior faces, one array per axis; boundary 0."""
    comps = []
    for ax in range(spec.dim):
        f = np.zeros(spec.face_shape(ax))
        lo = [slice(None)] * spec.dim
        hi = [slice(None)] * spec.dim
        lo[ax] = slice(0, spec.cells[ax] - 1)
        hi[ax] = slice(1, spec.cells[ax])
        f[_interior(spec, ax)] = 0.5 * (cell_vals[tuple(lo)] + cell_vals[tuple(hi)])
        comps.append(f)
    return comps


def upwind_flux(
    cell_vals: np.ndarray, velocity: list[np.ndarray], spec: GridSpec
) -> list[np.ndarray]:
    """First-order upwind advective flux on faces.

    The transported value at an interior face is the cell value on the side
    the face velocity comes from; boundary faces carry no flux.
    """
    comps = []
    for ax in range(spec.dim):
        w = velocity[ax]
        f = np.zeros(spec.face_shape(ax))
        interior = _interior(spec, ax)
        w_int = w[interior]
        lo = [slice(None)] * spec.dim
        hi = [slice(None)] * spec.dim
        lo[ax] = slice(0, spec.cells[ax] - 1)
        hi[ax] = slice(1, spec.cells[ax])
        f[interior] = np.maximum(w_int, 0.0) * cell_vals[tuple(lo)] + np.minimum(
            w_int, 0.0
        ) * cell_vals[tuple(hi)]
        comps.append(f)
    return comps


def rhs_u(state: State, params: ModelParams) -> Field:
    """Semi-discrete density tendency.

    div(D(u) grad u) - chi div(u grad v) + mu (u - u^2), with both transport
    terms assembled as face fluxes so their integral telescopes to zero.
    """
    spec = state.spec
    un = state.u.values
    d_face = face_average(diffusivity(un, params), spec)
    gu = grad_faces(state.u)
    gv = grad_faces(state.v)
    chem = upwind_flux(un, [params.chi * g for g in gv.components], spec)
    total = FaceField(
        spec,
        tuple(d * g - c for d, g, c in zip(d_face, gu.components, chem)),
    )
    out = div_faces(total).values + params.mu * (un - un * un)
    return Field(spec, out)


def rhs_v(state: State, params: ModelParams) -> Field:
    """Semi-discrete attractant tendency: laplacian(v) - u v."""
    lap = laplacian_neumann(state.v)
    return Field(state.spec, lap.values - state.u.values * state.v.values)


def logistic_balance(state: State, params: ModelParams) -> float:
    """mu (integral u - integral u^2), the exact rate of mass change."""
    u2 = Field(state.spec, state.u.values * state.u.values)
    return params.mu * (integrate(state.u) - integrate(u2))


def threshold_m(params: ModelParams, sup_v0: float, dim: int) -> float:
    """Critical diffusion exponent for boundedness.

    Below the returned value the a-priori boundedness argument fails; at or
    above it the density stays bounded.  In one and two dimensions the
    threshold is 1 - mu / (chi (1 + 8 lambda0 sup_v0)); from dimension three
    on it is 1.  Independent of c_d.
    """
    if not (isinstance(dim, int) and dim >= 1):
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    if not (math.isfinite(sup_v0) and sup_v0 >= 0.0):
        raise ValueError(f"sup_v0 must be finite and >= 0, got {sup_v0}")
    if params.chi == 0.0:
        raise ValueError("threshold is undefined without drift (chi = 0)")
    if dim >= 3:
        return 1.0
    return 1.0 - params.mu / (params.chi * (1.0 + params.lambda0 * sup_v0 * 8.0))
