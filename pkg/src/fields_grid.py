"""
Fields Grid - Uniform cell-centered rectangle, scalar fields and discrete operators

All operators use the zero-Neumann convention: ghost cells mirror the adjacent
interior cell, so the discrete normal derivative across every boundary face is 0.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Tuple

import numpy as np

logger = logging.getLogger(__name__)

MIN_CELLS_PER_AXIS = 4


class BoundaryCondition(Enum):
    """Supported boundary conventions (only zero-flux Neumann)."""
    NEUMANN_ZERO = "neumann_zero"


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered discretization of [x_min, x_min+lx] x [y_min, y_min+ly]."""
    lx: float
    ly: float
    nx: int
    ny: int
    x_min: float = 0.0
    y_min: float = 0.0
    boundary: BoundaryCondition = BoundaryCondition.NEUMANN_ZERO

    def __post_init__(self):
        """Validate extents and cell counts."""
        if not (self.lx > 0 and self.ly > 0):
            raise ValueError(f"Grid extents must be positive, got lx={self.lx}, ly={self.ly}")
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError(f"Cell counts must be integers, got nx={self.nx}, ny={self.ny}")
        if self.nx < MIN_CELLS_PER_AXIS or self.ny < MIN_CELLS_PER_AXIS:
            raise ValueError(
                f"Grid needs at least {MIN_CELLS_PER_AXIS} cells per axis, got nx={self.nx}, ny={self.ny}"
            )
        if self.boundary is not BoundaryCondition.NEUMANN_ZERO:
            raise ValueError(f"Unsupported boundary condition: {self.boundary}")

    @property
    def hx(self) -> float:
        return self.lx / self.nx

    @property
    def hy(self) -> float:
        return self.ly / self.ny

    @property
    def h(self) -> float:
        """Smallest spacing, used by stability limits."""
        return min(self.hx, self.hy)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def shape(self) -> Tuple[int, int]:
        """Array shape of a field on this grid: (ny, nx)."""
        return (self.ny, self.nx)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def area(self) -> float:
        return self.lx * self.ly

    def x_centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.hx

    def y_centers(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.hy

    def cell_centers(self) -> Tuple[np.ndarray, np.ndarray]:
        """Return (X, Y) coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.x_centers(), self.y_centers(), indexing='xy')

    def contains(self, x: float, y: float) -> bool:
        return (self.x_min <= x <= self.x_min + self.lx) and (self.y_min <= y <= self.y_min + self.ly)

    def cell_index(self, x: float, y: float) -> Tuple[int, int]:
        """
        Locate the cell containing a point.

        Args:
            x, y: Physical coordinates (must lie in the closed rectangle)

        Returns:
            (i, j) column and row index
        """
        if not self.contains(x, y):
            raise ValueError(f"Point ({x}, {y}) lies outside the grid rectangle")
        i = min(int((x - self.x_min) / self.hx), self.nx - 1)
        j = min(int((y - self.y_min) / self.hy), self.ny - 1)
        return i, j

    def cell_center(self, i: int, j: int) -> Tuple[float, float]:
        return (self.x_min + (i + 0.5) * self.hx, self.y_min + (j + 0.5) * self.hy)

    def refined(self, factor: int) -> "Grid":
        """Same rectangle with `factor` times as many cells per axis."""
        return Grid(self.lx, self.ly, self.nx * factor, self.ny * factor, self.x_min, self.y_min)

    def to_dict(self):
        """Convert to dictionary format."""
        return {'lx': self.lx, 'ly': self.ly, 'nx': self.nx, 'ny': self.ny,
                'x_min': self.x_min, 'y_min': self.y_min}


class ScalarField:
    """One real value per cell, stored as a (ny, nx) float64 array."""

    def __init__(self, grid: Grid, values, diverged: bool = False):
        """
        Initialize a field.

        Args:
            grid: Grid the field lives on
            values: Array-like of shape (ny, nx), or flat of length nx*ny (row-major by j then i)
            diverged: Marks a snapshot taken after a non-finite update; skips the finiteness check
        """
        array = np.array(values, dtype=np.float64)
        if array.ndim == 1 and array.size == grid.n_cells:
            array = array.reshape(grid.shape)
        if array.shape != grid.shape:
            raise ValueError(f"Field shape {array.shape} does not match grid shape {grid.shape}")
        if not diverged and not np.all(np.isfinite(array)):
            raise ValueError("Field contains non-finite values")
        self.grid = grid
        self.values = array
        self.diverged = diverged

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        """Sample a vectorized function f(X, Y) at cell centers."""
        X, Y = grid.cell_centers()
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), diverged=self.diverged)

    def flat(self) -> np.ndarray:
        """Row-major values (j outer, i inner)."""
        return self.values.ravel()

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())

    def argmax(self) -> Tuple[int, int]:
        """(i, j) of the first maximal cell."""
        j, i = np.unravel_index(int(np.argmax(self.values)), self.grid.shape)
        return int(i), int(j)

    def __repr__(self) -> str:
        return (f"ScalarField(nx={self.grid.nx}, ny={self.grid.ny}, "
                f"min={self.values.min():.6g}, max={self.values.max():.6g})")


def build_grid(lx: float, ly: float, nx: int, ny: int) -> Grid:
    """
    Build a uniform grid on [0, lx] x [0, ly].

    Args:
        lx, ly: Physical extents (positive)
        nx, ny: Cell counts per axis (at least 4)

    Returns:
        Grid with spacings hx = lx/nx, hy = ly/ny
    """
    return Grid(float(lx), float(ly), int(nx), int(ny))


def require_same_grid(*fields: ScalarField):
    """Raise ValueError unless all fields share one grid."""
    first = fields[0].grid
    for other in fields[1:]:
        if other.grid != first:
            raise ValueError("Fields live on different grids")


def _mirror_pad(values: np.ndarray) -> np.ndarray:
    # 'edge' padding of cell-centered data is the mirror across the boundary face
    return np.pad(values, 1, mode='edge')


def laplacian_array(values: np.ndarray, hx: float, hy: float) -> np.ndarray:
    """5-point Laplacian of a raw (ny, nx) array with mirrored ghosts."""
    p = _mirror_pad(values)
    center = p[1:-1, 1:-1]
    return ((p[1:-1, 2:] - 2.0 * center + p[1:-1, :-2]) / hx ** 2
            + (p[2:, 1:-1] - 2.0 * center + p[:-2, 1:-1]) / hy ** 2)


def gradient_array(values: np.ndarray, hx: float, hy: float) -> Tuple[np.ndarray, np.ndarray]:
    """Centered differences of a raw (ny, nx) array with mirrored ghosts."""
    p = _mirror_pad(values)
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / (2.0 * hx)
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / (2.0 * hy)
    return gx, gy


def laplacian(f: ScalarField) -> ScalarField:
    """Discrete Laplacian with zero-Neumann ghosts."""
    g = f.grid
    return ScalarField(g, laplacian_array(f.values, g.hx, g.hy))


def gradient(f: ScalarField) -> Tuple[ScalarField, ScalarField]:
    """Cell-centered gradient (x-component, y-component)."""
    g = f.grid
    gx, gy = gradient_array(f.values, g.hx, g.hy)
    return ScalarField(g, gx), ScalarField(g, gy)


def face_velocities(gvx: np.ndarray, gvy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Interpolate cell-centered velocities to interior faces.

    Returns:
        (wx, wy) with shapes (ny, nx-1) and (ny-1, nx); boundary faces carry no flux
        and are omitted.
    """
    wx = 0.5 * (gvx[:, 1:] + gvx[:, :-1])
    wy = 0.5 * (gvy[1:, :] + gvy[:-1, :])
    return wx, wy


def max_face_speed(gvx: ScalarField, gvy: ScalarField) -> float:
    """Largest face-normal velocity magnitude over interior faces."""
    wx, wy = face_velocities(gvx.values, gvy.values)
    return float(max(np.abs(wx).max(initial=0.0), np.abs(wy).max(initial=0.0)))


def advect_flux_divergence(u: ScalarField, gvx: ScalarField, gvy: ScalarField) -> ScalarField:
    """
    Conservative divergence of the chemotactic flux u * grad(v).

    Face values of u are taken upwind of the face-interpolated velocity; the
    flux through every boundary face is zero, so the area-weighted sum of the
    result telescopes to zero.

    Args:
        u: Transported density
        gvx, gvy: Cell-centered velocity components (usually grad v)

    Returns:
        Cell-centered divergence of the face fluxes
    """
    require_same_grid(u, gvx, gvy)
    g = u.grid
    uv = u.values
    wx, wy = face_velocities(gvx.values, gvy.values)

    # Upwind face values: the cell the velocity comes from
    ux = np.where(wx > 0.0, uv[:, :-1], uv[:, 1:])
    uy = np.where(wy > 0.0, uv[:-1, :], uv[1:, :])

    fx = np.zeros((g.ny, g.nx + 1))
    fy = np.zeros((g.ny + 1, g.nx))
    fx[:, 1:-1] = wx * ux
    fy[1:-1, :] = wy * uy

    div = (fx[:, 1:] - fx[:, :-1]) / g.hx + (fy[1:, :] - fy[:-1, :]) / g.hy
    return ScalarField(g, div)


def integrate(f: ScalarField) -> float:
    """Midpoint rule: hx * hy * sum of values."""
    return float(f.grid.cell_area * np.sum(f.values))
