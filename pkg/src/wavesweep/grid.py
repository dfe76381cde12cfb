"""Structured-grid data model: cell-centered fields with ghost cells,
interface-indexed fluctuation storage, and boundary-condition fills."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class BoundaryCondition(enum.Enum):
    """Per-axis ghost-cell fill rule."""

    PERIODIC = "periodic"
    EXTRAPOLATE = "extrapolate"


@dataclass(frozen=True)
class GridSpec:
    """Geometry and component counts for one structured grid.

    nx, ny    interior cell counts
    dx, dy    cell widths
    num_ghost ghost layers per side (2 by default, enough for future
              higher-order stencils even though the donor-cell update
              only needs 1)
    num_eqn   conserved components per cell
    num_aux   auxiliary (material) components per cell, 0 allowed
    """

    nx: int
    ny: int
    dx: float
    dy: float
    num_ghost: int = 2
    num_eqn: int = 1
    num_aux: int = 0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError(f"cell counts must be >= 1, got nx={self.nx}, ny={self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ValueError(f"cell widths must be > 0, got dx={self.dx}, dy={self.dy}")
        if self.num_ghost < 1:
            raise ValueError(f"num_ghost must be >= 1, got {self.num_ghost}")
        if self.num_eqn < 1:
            raise ValueError(f"num_eqn must be >= 1, got {self.num_eqn}")
        if self.num_aux < 0:
            raise ValueError(f"num_aux must be >= 0, got {self.num_aux}")

    @property
    def nx_total(self) -> int:
        return self.nx + 2 * self.num_ghost

    @property
    def ny_total(self) -> int:
        return self.ny + 2 * self.num_ghost

    @property
    def width(self) -> float:
        return self.nx * self.dx

    @property
    def height(self) -> float:
        return self.ny * self.dy

    def x_centers(self) -> np.ndarray:
        """Interior cell-center x coordinates, origin at the lower-left corner."""
        return (np.arange(self.nx) + 0.5) * self.dx

    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy


class _Field:
    """Dense (ncomp, nx_total, ny_total) array addressed (component, i, j).

    Stored Fortran-ordered so the component column of one cell is contiguous
    in memory: pointwise kernels read all components of two adjacent cells,
    and per-cell contiguity is what keeps that access local.
    Interior cell (i, j) lives at data[:, num_ghost + i, num_ghost + j];
    ghost indices extend num_ghost cells past each edge.
    """

    def __init__(self, spec: GridSpec, ncomp: int):
        self.spec = spec
        self.num_comp = ncomp
        self.data = np.zeros((ncomp, spec.nx_total, spec.ny_total), order="F")

    @property
    def interior(self) -> np.ndarray:
        """(ncomp, nx, ny) view of the interior cells (writable)."""
        g = self.spec.num_ghost
        return self.data[:, g : g + self.spec.nx, g : g + self.spec.ny]

    def value(self, comp: int, i: int, j: int) -> float:
        """Checked accessor: i, j in [-num_ghost, n + num_ghost)."""
        g = self.spec.num_ghost
        if not 0 <= comp < self.num_comp:
            raise IndexError(f"component {comp} outside [0, {self.num_comp})")
        if not -g <= i < self.spec.nx + g:
            raise IndexError(f"i={i} outside [{-g}, {self.spec.nx + g})")
        if not -g <= j < self.spec.ny + g:
            raise IndexError(f"j={j} outside [{-g}, {self.spec.ny + g})")
        return float(self.data[comp, g + i, g + j])

    def copy(self):
        out = object.__new__(type(self))
        out.spec = self.spec
        out.num_comp = self.num_comp
        out.data = self.data.copy(order="F")
        return out


class StateField(_Field):
    """Cell-centered conserved quantities (num_eqn components)."""

    def __init__(self, spec: GridSpec):
        super().__init__(spec, spec.num_eqn)


class AuxField(_Field):
    """Cell-centered material coefficients (num_aux components, possibly 0)."""

    def __init__(self, spec: GridSpec):
        super().__init__(spec, spec.num_aux)


class FluctuationField:
    """Per-interface left/right-going fluctuations for one sweep.

    x-interface (i, j), i in [0, nx], j in [0, ny): face between cells
    (i-1, j) and (i, j).  y-interface (i, j), i in [0, nx), j in [0, ny]:
    face between cells (i, j-1) and (i, j).  max_speed_* are the maxima of
    |s| over all wave speeds produced by the corresponding sweep direction.
    """

    def __init__(self, spec: GridSpec, *, zeroed: bool = True):
        alloc = np.zeros if zeroed else np.empty
        m = spec.num_eqn
        self.spec = spec
        self.x_minus = alloc((m, spec.nx + 1, spec.ny), order="F")
        self.x_plus = alloc((m, spec.nx + 1, spec.ny), order="F")
        self.y_minus = alloc((m, spec.nx, spec.ny + 1), order="F")
        self.y_plus = alloc((m, spec.nx, spec.ny + 1), order="F")
        self.max_speed_x = 0.0
        self.max_speed_y = 0.0


def allocate_fields(spec: GridSpec) -> tuple[StateField, AuxField, FluctuationField]:
    """Zero-initialized state, aux, and fluctuation storage for one grid."""
    return StateField(spec), AuxField(spec), FluctuationField(spec)


def _fill_axis(data: np.ndarray, n: int, g: int, bc: BoundaryCondition, axis: int):
    # data has ghost offset g along `axis`; low ghosts [0, g), high [g+n, g+n+g)
    sl = [slice(None)] * data.ndim

    def span(a, b):
        s = list(sl)
        s[axis] = slice(a, b)
        return tuple(s)

    if bc is BoundaryCondition.PERIODIC:
        if n < g:
            raise ValueError(
                f"periodic boundary needs at least num_ghost={g} interior cells, got {n}"
            )
        data[span(0, g)] = data[span(n, n + g)]
        data[span(g + n, g + n + g)] = data[span(g, g + g)]
    elif bc is BoundaryCondition.EXTRAPOLATE:
        data[span(0, g)] = data[span(g, g + 1)]
        data[span(g + n, g + n + g)] = data[span(g + n - 1, g + n)]
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")


def fill_ghost(field, bc_x: BoundaryCondition, bc_y: BoundaryCondition):
    """Fill the ghost frame of a state or aux field from its interior.

    Periodic wraps (ghost column -k copies interior column nx-k), extrapolate
    copies the nearest interior cell.  The x pass runs first over the full
    y extent, then the y pass over the full x extent, so corners end up
    consistent for dimension-split stencils.  Interior cells are never
    modified.  Returns the field.
    """
    spec = field.spec
    if field.num_comp == 0:
        return field
    _fill_axis(field.data, spec.nx, spec.num_ghost, bc_x, axis=1)
    _fill_axis(field.data, spec.ny, spec.num_ghost, bc_y, axis=2)
    return field
