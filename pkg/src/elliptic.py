"""
Elliptic Solver - Screened Poisson problem (I - Lap_h) v = u with zero-Neumann ghosts

Matrix-free conjugate gradients (scipy.sparse.linalg.cg) with a Jacobi
preconditioner; the previous signal is used as the initial guess when the
caller supplies one.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from fields_grid import Grid, ScalarField, laplacian_array, require_same_grid

logger = logging.getLogger(__name__)

MAX_TOLERANCE = 1e-4


class SolverMethod(Enum):
    CONJUGATE_GRADIENT = "conjugate_gradient"


class NonConvergenceError(RuntimeError):
    """Raised when the residual target is not met within the iteration cap."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class EllipticSolveConfig:
    """Settings for the screened Poisson solve."""
    tol: float = 1e-10
    max_iter: Optional[int] = None  # None: 10 * number of cells
    method: SolverMethod = SolverMethod.CONJUGATE_GRADIENT

    def __post_init__(self):
        """Validate tolerance and method."""
        if isinstance(self.method, str):
            self.method = SolverMethod(self.method)
        if not (0.0 < self.tol <= MAX_TOLERANCE):
            raise ValueError(f"Elliptic tolerance must lie in (0, {MAX_TOLERANCE}], got {self.tol}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ValueError(f"max_iter must be positive, got {self.max_iter}")

    def iteration_cap(self, grid: Grid) -> int:
        """Resolve the cap for a grid; an explicit cap below nx*ny is rejected."""
        if self.max_iter is None:
            return 10 * grid.n_cells
        if self.max_iter < grid.n_cells:
            raise ValueError(f"max_iter={self.max_iter} is below the cell count {grid.n_cells}")
        return self.max_iter

    def to_dict(self):
        return {'tol': self.tol, 'max_iter': self.max_iter, 'method': self.method.value}


def apply_operator(v: np.ndarray, grid: Grid) -> np.ndarray:
    """(I - Lap_h) applied to a raw (ny, nx) array."""
    return v - laplacian_array(v, grid.hx, grid.hy)


def operator_diagonal(grid: Grid) -> np.ndarray:
    """Diagonal of (I - Lap_h); boundary cells lose the mirrored neighbour coupling."""
    nbx = np.full(grid.nx, 2.0)
    nbx[0] = nbx[-1] = 1.0
    nby = np.full(grid.ny, 2.0)
    nby[0] = nby[-1] = 1.0
    return 1.0 + nby[:, None] / grid.hy ** 2 + nbx[None, :] / grid.hx ** 2


def residual(u: ScalarField, v: ScalarField) -> float:
    """
    Relative residual of the screened Poisson equation.

    Returns:
        ||(I - Lap_h) v - u||_2 / ||u||_2, or the absolute norm when ||u||_2 = 0
    """
    require_same_grid(u, v)
    r = apply_operator(v.values, v.grid) - u.values
    r_norm = float(np.linalg.norm(r))
    u_norm = float(np.linalg.norm(u.values))
    return r_norm / u_norm if u_norm > 0.0 else r_norm


class ScreenedPoissonSolver:
    """Reusable solver bound to one grid; keeps the last iteration count and residual."""

    def __init__(self, grid: Grid, cfg: EllipticSolveConfig = None):
        """
        Initialize solver.

        Args:
            grid: Grid of every right-hand side passed to solve()
            cfg: Solver configuration (defaults to EllipticSolveConfig())
        """
        self.grid = grid
        self.cfg = cfg or EllipticSolveConfig()
        self.max_iter = self.cfg.iteration_cap(grid)
        self.last_iterations = 0
        self.last_residual = 0.0

        n = grid.n_cells
        shape = grid.shape
        inv_diag = 1.0 / operator_diagonal(grid).ravel()

        self._operator = LinearOperator(
            (n, n), matvec=lambda x: apply_operator(x.reshape(shape), grid).ravel(), dtype=np.float64
        )
        self._preconditioner = LinearOperator((n, n), matvec=lambda x: inv_diag * x.ravel(), dtype=np.float64)

    def solve(self, u: ScalarField, initial_guess: Optional[ScalarField] = None) -> ScalarField:
        """
        Solve (I - Lap_h) v = u.

        Args:
            u: Right-hand side
            initial_guess: Warm start (previous v); defaults to u itself

        Returns:
            v with relative residual <= cfg.tol

        Raises:
            NonConvergenceError: if the tolerance is not reached within the cap
        """
        if u.grid != self.grid:
            raise ValueError("Right-hand side lives on a different grid than the solver")

        b = u.values.ravel()
        b_norm = float(np.linalg.norm(b))
        if b_norm == 0.0:
            self.last_iterations = 0
            self.last_residual = 0.0
            return ScalarField.zeros(self.grid)

        x = (initial_guess.values if initial_guess is not None else u.values).ravel().copy()
        remaining = self.max_iter
        iterations = 0
        rel = residual(u, ScalarField(self.grid, x))

        # CG stops on its recursive residual; re-check the true one and restart once if it drifted
        for _ in range(2):
            if rel <= self.cfg.tol or remaining <= 0:
                break
            counter = {'n': 0}

            def _count(_xk):
                counter['n'] += 1

            x, info = cg(self._operator, b, x0=x, rtol=0.5 * self.cfg.tol, atol=0.0,
                         maxiter=remaining, M=self._preconditioner, callback=_count)
            iterations += counter['n']
            remaining -= counter['n']
            rel = residual(u, ScalarField(self.grid, x))
            if info < 0:
                raise NonConvergenceError("CG breakdown", rel, iterations)

        self.last_iterations = iterations
        self.last_residual = rel
        if rel > self.cfg.tol:
            raise NonConvergenceError("Screened Poisson solve did not converge", rel, iterations)

        logger.debug("Screened Poisson solve: %d iterations, residual %.3e", iterations, rel)
        return ScalarField(self.grid, x.reshape(self.grid.shape))


def solve_screened_poisson(u: ScalarField, cfg: EllipticSolveConfig = None,
                           initial_guess: Optional[ScalarField] = None) -> ScalarField:
    """Solve (I - Lap_h) v = u on u's grid; see ScreenedPoissonSolver.solve."""
    return ScreenedPoissonSolver(u.grid, cfg).solve(u, initial_guess)
