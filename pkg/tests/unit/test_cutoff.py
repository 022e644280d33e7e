"""
Unit tests for smooth profiles, plateaus, sharpened cutoffs and their certificate.
"""
import math
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src directory to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / "src"))

from cutoff import (CellMask, Cutoff, Disc, Extension, NoPositivityNeighborhoodError, PlateauSpec, Rectangle,
                    admissible_p_upper, chart_plane_plateau, cutoff_for_point, eta_zero_ratio, gradient_exponent,
                    linfty_eta, lp_eta, mollified_plateau, mollifier_profile, nonanalytic_smooth_transition, psi,
                    sharpen, verify_cutoff, write_certificate)
from fields_grid import Grid, ScalarField


def _disc_spec(n=64, k_radius=0.15, v_radius=0.35):
    grid = Grid(1.0, 1.0, n, n)
    return PlateauSpec(grid, Disc((0.5, 0.5), k_radius), Disc((0.5, 0.5), v_radius, closed=False))


def _smoothstep(t):
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)


class TestSmoothProfiles:
    """psi, the transition and the radial profile."""

    def test_psi_vanishes_off_positive_axis(self):
        np.testing.assert_array_equal(psi([-1.0, 0.0]), [0.0, 0.0])
        assert psi(1.0) == pytest.approx(math.exp(-1.0))
        assert psi(2.0, m=2) == pytest.approx(math.exp(-0.25))

    def test_transition_endpoints_and_midpoint(self):
        values = nonanalytic_smooth_transition(np.array([-0.5, 0.0, 0.5, 1.0, 1.5]))
        np.testing.assert_allclose(values, [0.0, 0.0, 0.5, 1.0, 1.0])

    def test_transition_is_monotone(self):
        xs = np.linspace(0.0, 1.0, 501)
        assert np.all(np.diff(nonanalytic_smooth_transition(xs)) >= 0.0)

    def test_profile_plateaus(self):
        s = np.array([0.0, 0.1, 0.2, 0.3, 0.5])
        values = mollifier_profile(s, inner=0.1, outer=0.3)
        assert values[0] == 1.0 and values[1] == 1.0
        assert 0.0 < values[2] < 1.0
        assert values[3] == 0.0 and values[4] == 0.0


class TestExponents:
    """Exponent bookkeeping for localized functionals."""

    def test_lp_eta(self):
        assert lp_eta(1.5) == pytest.approx(0.2)
        with pytest.raises(ValueError):
            lp_eta(1.0)

    def test_admissible_p_upper(self):
        assert admissible_p_upper(0.5) == pytest.approx(2.0)
        assert admissible_p_upper(1.0) == math.inf

    def test_gradient_exponent(self):
        assert gradient_exponent(1.5) == pytest.approx(6.0)
        for p in (1.0, 2.0):
            with pytest.raises(ValueError):
                gradient_exponent(p)

    def test_linfty_eta(self):
        """q = 6 with the midpoint lam = 4 gives min(1/4, 1/4, 1/12)."""
        assert linfty_eta(6.0) == pytest.approx(1.0 / 12.0)
        with pytest.raises(ValueError):
            linfty_eta(2.0)
        with pytest.raises(ValueError):
            linfty_eta(6.0, lam=7.0)


class TestPlateauSpec:
    """Set validation."""

    def test_k_outside_v_rejected(self):
        grid = Grid(1.0, 1.0, 32, 32)
        with pytest.raises(ValueError, match="not contained"):
            PlateauSpec(grid, Disc((0.5, 0.5), 0.3), Disc((0.5, 0.5), 0.1))

    def test_delta_too_large_rejected(self):
        grid = Grid(1.0, 1.0, 32, 32)
        with pytest.raises(ValueError, match="delta"):
            PlateauSpec(grid, Disc((0.5, 0.5), 0.1), Disc((0.5, 0.5), 0.3, closed=False), delta=0.5)

    def test_rectangles(self):
        grid = Grid(1.0, 1.0, 32, 32)
        spec = PlateauSpec(grid, Rectangle(0.4, 0.6, 0.4, 0.6), Rectangle(0.2, 0.8, 0.2, 0.8, closed=False))
        k_mask, v_mask = spec.masks()
        assert k_mask.sum() > 0
        assert np.all(v_mask[k_mask])

    def test_cell_mask_shape_checked(self):
        grid = Grid(1.0, 1.0, 32, 32)
        with pytest.raises(ValueError):
            PlateauSpec(grid, CellMask(np.zeros((4, 4), dtype=bool)), CellMask(np.ones((4, 4), dtype=bool)))


class TestMollifiedPlateau:
    """Plateau phi_tilde."""

    def test_empty_k_gives_zero(self):
        grid = Grid(1.0, 1.0, 32, 32)
        spec = PlateauSpec(grid, Disc((0.5, 0.5), 0.0), Disc((0.5, 0.5), 0.3, closed=False))
        assert np.all(mollified_plateau(spec).values == 0.0)

    def test_one_on_k_zero_off_v(self):
        spec = _disc_spec()
        phi_tilde = mollified_plateau(spec)
        k_mask, v_mask = spec.masks()
        assert np.all(phi_tilde.values[k_mask] == 1.0)
        assert np.all(phi_tilde.values[~v_mask] == 0.0)
        assert phi_tilde.values.min() >= 0.0 and phi_tilde.values.max() <= 1.0

    def test_resolution_override(self):
        phi_tilde = mollified_plateau(_disc_spec(n=32), resolution=64)
        assert phi_tilde.grid.nx == 64

    def test_chart_plateau_reflection_symmetric(self):
        phi_tilde = chart_plane_plateau(0.1, 0.3, resolution=96)
        np.testing.assert_allclose(phi_tilde.values, phi_tilde.values[::-1, :], atol=1e-8)

    def test_chart_plateau_radii_validated(self):
        with pytest.raises(ValueError):
            chart_plane_plateau(0.3, 0.1)


class TestSharpen:
    """phi = phi_tilde^(1/eta) with a grid-certified constant."""

    def test_half_eta_squares(self):
        phi_tilde = mollified_plateau(_disc_spec())
        cut = sharpen(phi_tilde, 0.5)
        expected = phi_tilde.values ** 2
        expected[expected < np.finfo(np.float64).tiny] = 0.0
        np.testing.assert_allclose(cut.phi.values, expected, rtol=1e-14)

    def test_constant_one_has_zero_constant(self, unit_grid):
        cut = sharpen(ScalarField.constant(unit_grid, 1.0), 0.25)
        assert cut.c_phi == 0.0

    @pytest.mark.parametrize("eta", [0.0, -0.1, 0.6])
    def test_eta_out_of_range(self, unit_grid, eta):
        with pytest.raises(ValueError):
            sharpen(ScalarField.constant(unit_grid, 1.0), eta)

    def test_values_outside_unit_interval_rejected(self, unit_grid):
        with pytest.raises(ValueError):
            sharpen(ScalarField.constant(unit_grid, 1.5), 0.25)

    def test_smoothstep_ratio_matches_dense_scan(self):
        """A smoothstep ramp in x: the grid ratio agrees with a 4x denser analytic scan within 5%."""
        n = 64
        grid = Grid(1.0, 1.0, n, n)
        t_cells = np.clip((np.arange(n) - 16) / 32.0, 0.0, 1.0)
        phi_tilde = ScalarField(grid, np.tile(_smoothstep(t_cells), (n, 1)))
        cut = sharpen(phi_tilde, 0.5)

        # |d(S^2)/dx| / S = 2 S'(t) dt/dx with dt/dx = 2 on the ramp
        t = np.linspace(0.0, 1.0, 4 * n + 1)
        slope = 30.0 * t * t * (1.0 - t) ** 2
        dense = float(np.max(2.0 * slope * 2.0))
        assert math.isfinite(cut.c_phi)
        assert cut.gradient_ratio == pytest.approx(dense, rel=0.05)


class TestVerifyCutoff:
    """Certificate checks."""

    @pytest.mark.parametrize("eta", [1.0 / 8.0, 1.0 / 6.0, 0.25])
    def test_disc_cutoffs_pass(self, eta):
        spec = _disc_spec()
        cut = sharpen(mollified_plateau(spec), eta, spec=spec)
        report = verify_cutoff(cut)
        assert report.passed, report.failures()
        names = [check.name for check in report.checks]
        assert names == ['range', 'plateau', 'support', 'neumann', 'gradient_bound', 'laplacian_bound']

    def test_tent_fails_gradient_bound(self):
        """A Lipschitz tent cannot satisfy |grad phi| <= 4 phi^(3/4) near its foot."""
        grid = Grid(1.0, 1.0, 64, 64)
        tent = ScalarField.from_function(grid, lambda X, Y: np.maximum(0.0, 1.0 - 4.0 * np.abs(X - 0.5)))
        report = verify_cutoff(Cutoff.from_values(tent, eta=0.25, c_phi=4.0))
        assert not report.passed
        assert 'gradient_bound' in report.failures()

    def test_ramp_leaving_the_wall_fails_neumann(self):
        """phi = x^2 is flat at x = 0 but leaves x = 1 with slope 2."""
        ramp = ScalarField.from_function(Grid(1.0, 1.0, 16, 16), lambda X, Y: X)
        report = verify_cutoff(sharpen(ramp, 0.5))
        neumann = next(check for check in report.checks if check.name == 'neumann')
        assert not neumann.passed
        assert neumann.measured > 1.0
        assert "x_max" in neumann.detail

    def test_mirror_symmetric_profile_passes_neumann(self):
        grid = Grid(1.0, 1.0, 32, 32)
        bump = ScalarField.from_function(grid, lambda X, Y: 0.5 + 0.25 * np.cos(np.pi * X) * np.cos(np.pi * Y))
        report = verify_cutoff(Cutoff.from_values(bump, eta=0.5, c_phi=100.0))
        assert 'neumann' not in report.failures()

    def test_zero_cutoff_passes(self, unit_grid):
        report = verify_cutoff(Cutoff.from_values(ScalarField.zeros(unit_grid), eta=0.25, c_phi=0.0))
        assert report.passed

    def test_certificate_text(self, temp_workspace):
        spec = _disc_spec(n=32)
        cut = sharpen(mollified_plateau(spec), 0.25, spec=spec)
        path = write_certificate(temp_workspace / "certs" / "disc.txt", verify_cutoff(cut), cut)
        text = path.read_text()
        assert "OVERALL: PASS" in text
        assert "c_phi = " in text

    def test_eta_zero_ratio_grows_with_resolution(self):
        """sup |grad phi|/phi on a plateau has no grid-independent bound."""
        coarse = eta_zero_ratio(mollified_plateau(_disc_spec(n=32)))
        fine = eta_zero_ratio(mollified_plateau(_disc_spec(n=32), resolution=128))
        assert fine >= 2.0 * coarse


class TestCutoffForPoint:
    """Cutoffs inside {mu > mu0}."""

    def test_uniform_mu(self, unit_grid):
        mu = ScalarField.constant(unit_grid, 1.0)
        cut = cutoff_for_point((0.5, 0.5), mu)
        i, j = unit_grid.cell_index(0.5, 0.5)
        assert cut.phi.values[j, i] == 1.0
        assert cut.mu0 == pytest.approx(0.5)
        assert verify_cutoff(cut).passed

    def test_half_plane_support(self, unit_grid):
        mu = ScalarField.from_function(unit_grid, lambda X, Y: np.where(X > 0.5, 1.0, 0.0))
        cut = cutoff_for_point((0.75, 0.5), mu)
        assert verify_cutoff(cut).passed
        assert np.all(mu.values[cut.support_mask()] > 0.5)

    def test_point_below_threshold_raises(self, unit_grid):
        mu = ScalarField.from_function(unit_grid, lambda X, Y: np.where(X > 0.5, 1.0, 0.0))
        with pytest.raises(NoPositivityNeighborhoodError):
            cutoff_for_point((0.25, 0.5), mu)

    def test_thin_component_raises(self, unit_grid):
        values = np.zeros(unit_grid.shape)
        values[:, 10] = 1.0
        mu = ScalarField(unit_grid, values)
        x = unit_grid.cell_center(10, 16)
        with pytest.raises(NoPositivityNeighborhoodError):
            cutoff_for_point(x, mu)

    def test_max_radius_caps_support(self, unit_grid):
        mu = ScalarField.constant(unit_grid, 1.0)
        cut = cutoff_for_point((0.5, 0.5), mu, max_radius=0.2)
        X, Y = unit_grid.cell_centers()
        cx, cy = cut.center
        assert np.all(np.hypot(X - cx, Y - cy)[cut.support_mask()] < 0.2)
