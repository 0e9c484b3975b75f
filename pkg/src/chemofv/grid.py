"""Cell-centered finite-volume grids on axis-aligned boxes.

Layout conventions used throughout the package:

* A box [0, L_1] x ... x [0, L_N] (N in {1, 2, 3}) is split into n_i uniform
  cells per axis, spacing h_i = L_i / n_i.  Cell values live at cell centers
  x_i = (k + 1/2) h_i and are stored as an ndarray of shape ``cells``.
* Face values are staggered: along axis i there are n_i + 1 faces, so the
  face array for axis i has shape ``cells`` with n_i replaced by n_i + 1.
  The first and last face along each axis lie on the boundary.
* Zero-flux (homogeneous Neumann) boundaries are built into the operators:
  gradients mirror the boundary cell into a ghost cell, which makes every
  boundary face value exactly 0.0, and divergences therefore move nothing
  through the boundary.

The discrete operators form a summation-by-parts pair: ``div_faces`` is the
negative adjoint of ``grad_faces`` under the cell inner product
sum(f * g) * cell_volume, so ``laplacian_neumann`` is symmetric negative
semidefinite and annihilates constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "FaceField",
    "grad_faces",
    "div_faces",
    "laplacian_neumann",
    "integrate",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform cell-centered grid on an axis-aligned box."""

    cells: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))
        if not 1 <= len(self.cells) <= 3:
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(self.cells)}")
        if len(self.lengths) != len(self.cells):
            raise ValueError(
                f"lengths {self.lengths} and cells {self.cells} must have equal length"
            )
        if any(n < 3 for n in self.cells):
            raise ValueError(f"cells must be >= 3 along every axis, got {self.cells}")
        if not all(np.isfinite(L) and L > 0 for L in self.lengths):
            raise ValueError(f"lengths must be positive and finite, got {self.lengths}")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def cell_centers(self, axis: int) -> np.ndarray:
        """1D array of cell-center coordinates along ``axis``."""
        n = self.cells[axis]
        h = self.spacing[axis]
        return (np.arange(n) + 0.5) * h

    def face_coords(self, axis: int) -> np.ndarray:
        """1D array of face coordinates along ``axis`` (n + 1 entries)."""
        n = self.cells[axis]
        h = self.spacing[axis]
        return np.arange(n + 1) * h

    def centers_mesh(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, each of shape ``cells`` (ij indexing)."""
        axes = [self.cell_centers(ax) for ax in range(self.dim)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def face_shape(self, axis: int) -> tuple[int, ...]:
        shape = list(self.cells)
        shape[axis] += 1
        return tuple(shape)


@dataclass
class Field:
    """One float64 value per cell, shaped like ``spec.cells``."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.spec.cells:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.spec.cells}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @classmethod
    def full(cls, spec: GridSpec, value: float) -> "Field":
        return cls(spec, np.full(spec.cells, float(value)))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "Field":
        return cls(spec, np.zeros(spec.cells))

    def copy(self) -> "Field":
        return Field(self.spec, self.values.copy())

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


@dataclass
class FaceField:
    """One array of face values per axis; boundary faces are exactly zero."""

    spec: GridSpec
    components: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        if len(self.components) != self.spec.dim:
            raise ValueError("need one face array per axis")
        comps = []
        for ax, comp in enumerate(self.components):
            comp = np.asarray(comp, dtype=np.float64)
            if comp.shape != self.spec.face_shape(ax):
                raise ValueError(
                    f"axis {ax} face shape {comp.shape}, expected {self.spec.face_shape(ax)}"
                )
            comps.append(comp)
        self.components = tuple(comps)

    @classmethod
    def zeros(cls, spec: GridSpec) -> "FaceField":
        return cls(spec, tuple(np.zeros(spec.face_shape(ax)) for ax in range(spec.dim)))

    def boundary_faces_zero(self, tol: float = 0.0) -> bool:
        """True when every boundary face value has magnitude <= tol."""
        for ax, comp in enumerate(self.components):
            first = comp.take(0, axis=ax)
            last = comp.take(-1, axis=ax)
            if np.abs(first).max(initial=0.0) > tol or np.abs(last).max(initial=0.0) > tol:
                return False
        return True


def _interior(spec: GridSpec, axis: int) -> tuple[slice, ...]:
    sl: list[slice] = [slice(None)] * spec.dim
    sl[axis] = slice(1, spec.cells[axis])
    return tuple(sl)


def grad_faces(f: Field) -> FaceField:
    """Face-normal differences (f_right - f_left)/h_i; boundary faces 0."""
    spec = f.spec
    comps = []
    for ax in range(spec.dim):
        g = np.zeros(spec.face_shape(ax))
        g[_interior(spec, ax)] = np.diff(f.values, axis=ax) / spec.spacing[ax]
        comps.append(g)
    return FaceField(spec, tuple(comps))


def div_faces(g: FaceField) -> Field:
    """Per-cell net outflow of a face field: sum_i (g_right - g_left)/h_i."""
    spec = g.spec
    out = np.zeros(spec.cells)
    for ax in range(spec.dim):
        out += np.diff(g.components[ax], axis=ax) / spec.spacing[ax]
    return Field(spec, out)


def laplacian_neumann(f: Field) -> Field:
    """Zero-flux Laplacian, the composition div_faces(grad_faces(f))."""
    return div_faces(grad_faces(f))


def integrate(f: Field) -> float:
    """Midpoint-rule integral over the box: sum of values times cell volume."""
    return float(f.values.sum() * f.spec.cell_volume)
