"""
Unit tests for the screened Poisson solver.
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src directory to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / "src"))

from elliptic import (EllipticSolveConfig, NonConvergenceError, ScreenedPoissonSolver, residual,
                      solve_screened_poisson)
from fields_grid import ScalarField, build_grid, integrate


class TestEllipticSolveConfig:
    """Validation of solver settings."""

    @pytest.mark.parametrize("tol", [0.0, -1e-8, 1e-3])
    def test_tolerance_range(self, tol):
        with pytest.raises(ValueError):
            EllipticSolveConfig(tol=tol)

    def test_iteration_cap_default(self, unit_grid):
        assert EllipticSolveConfig().iteration_cap(unit_grid) == 10 * unit_grid.n_cells

    def test_iteration_cap_below_cells_rejected(self, unit_grid):
        with pytest.raises(ValueError):
            EllipticSolveConfig(max_iter=10).iteration_cap(unit_grid)


class TestResidual:
    """Relative residual of (I - Lap_h) v = u."""

    def test_exact_constant(self, unit_grid):
        one = ScalarField.constant(unit_grid, 1.0)
        assert residual(one, one) == 0.0

    def test_constant_mismatch(self, unit_grid):
        assert residual(ScalarField.constant(unit_grid, 1.0), ScalarField.constant(unit_grid, 2.0)) == pytest.approx(1.0)

    def test_zero_rhs_uses_absolute_norm(self, unit_grid):
        v = ScalarField.constant(unit_grid, 0.5)
        assert residual(ScalarField.zeros(unit_grid), v) == pytest.approx(0.5 * math.sqrt(unit_grid.n_cells))


class TestSolve:
    """Solver contract."""

    def test_constant_is_exact(self, unit_grid):
        v = solve_screened_poisson(ScalarField.constant(unit_grid, 3.0))
        np.testing.assert_allclose(v.values, 3.0, rtol=1e-9)

    def test_zero_rhs(self, unit_grid):
        v = solve_screened_poisson(ScalarField.zeros(unit_grid))
        assert np.all(v.values == 0.0)

    def test_residual_within_tolerance(self, unit_grid, gaussian_field):
        u = gaussian_field(unit_grid, (0.3, 0.6), width=0.08, mass=5.0)
        cfg = EllipticSolveConfig(tol=1e-10)
        v = solve_screened_poisson(u, cfg)
        assert residual(u, v) <= cfg.tol

    def test_second_order_against_eigenfunction(self, cosine_field):
        """1 + cos(pi x/lx) solves to 1 + cos/(1 + (pi/lx)^2) with error ratio ~4 per halving."""
        errors = []
        for n in (64, 128, 256):
            grid = build_grid(2.0, 1.0, n, n)
            u = cosine_field(grid)
            X, _ = grid.cell_centers()
            exact = 1.0 + np.cos(math.pi * X / grid.lx) / (1.0 + (math.pi / grid.lx) ** 2)
            errors.append(np.abs(solve_screened_poisson(u).values - exact).max())
        for coarse, fine in zip(errors, errors[1:]):
            assert 3.5 <= coarse / fine <= 4.5

    def test_random_mass_conservation_and_sign(self, unit_grid):
        rng = np.random.default_rng(7)
        u = ScalarField(unit_grid, rng.uniform(0.0, 4.0, unit_grid.shape))
        v = solve_screened_poisson(u)
        assert integrate(v) == pytest.approx(integrate(u), rel=1e-8)
        assert v.min() >= -1e-10 * u.max()

    def test_warm_start_saves_iterations(self, unit_grid, gaussian_field):
        u = gaussian_field(unit_grid, (0.5, 0.5), width=0.1)
        solver = ScreenedPoissonSolver(unit_grid)
        v = solver.solve(u)
        cold = solver.last_iterations
        solver.solve(u, initial_guess=v)
        assert solver.last_iterations < cold

    def test_nonconvergence_reports_residual(self, unit_grid, gaussian_field, mocker):
        """A stalled CG surfaces as NonConvergenceError with the final residual."""
        u = gaussian_field(unit_grid, (0.5, 0.5), width=0.1)
        mocker.patch('elliptic.cg', side_effect=lambda A, b, x0, **kw: (x0, 1))
        with pytest.raises(NonConvergenceError) as excinfo:
            solve_screened_poisson(u, EllipticSolveConfig(tol=1e-10))
        assert excinfo.value.residual > 1e-10

    def test_grid_mismatch(self, unit_grid, make_grid):
        solver = ScreenedPoissonSolver(unit_grid)
        with pytest.raises(ValueError):
            solver.solve(ScalarField.constant(make_grid(16), 1.0))
