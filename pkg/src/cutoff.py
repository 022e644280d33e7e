"""
Cutoff Construction - Boundary charts, mollified plateaus and sharpened cut-off functions

A cut-off phi is 1 on a compact cell set K, vanishes outside an open cell set V,
has zero normal derivative on the boundary, and after sharpening phi = phi_tilde^(1/eta)
obeys |grad phi| <= c phi^(1-eta) and |Lap phi| <= c phi^(1-2 eta) on the grid.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import ndimage
from scipy.integrate import solve_ivp
from scipy.interpolate import RegularGridInterpolator

from fields_grid import Grid, ScalarField, gradient_array, laplacian_array

logger = logging.getLogger(__name__)

# Ratios are certified with this relative slack so that c_phi itself always passes
_CERTIFICATE_SLACK = 1e-12
_PLATEAU_SNAP = 1e-12
# Wall-adjacent slope allowed per unit of h * |second difference| under d_nu phi = 0
_WALL_SLOPE_FACTOR = 3.0
_WALL_SLOPE_FLOOR = 1e-9


class NoPositivityNeighborhoodError(ValueError):
    """Raised when no cell neighbourhood of a point lies inside {mu > mu0}."""
    pass


# --------------------------------------------------------------------------------
# Smooth profiles

def psi(x, m: float = 1.0):
    """exp(-1/x^m) for x > 0, and 0 otherwise (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(divide='ignore', over='ignore', under='ignore'):
        safe = np.where(x > 0.0, x, 1.0)
        return np.where(x > 0.0, np.exp(-1.0 / safe ** m), 0.0)


def nonanalytic_smooth_transition(x, m: float = 1.0):
    """C-infinity transition from 0 (x <= 0) to 1 (x >= 1), symmetric through (1/2, 1/2)."""
    p = psi(x, m)
    return p / (p + psi(1.0 - np.asarray(x, dtype=np.float64), m))


def mollifier_profile(s, inner: float, outer: float):
    """Radial profile: exactly 1 for s <= inner, exactly 0 for s >= outer, smooth decreasing between."""
    return 1.0 - nonanalytic_smooth_transition((np.asarray(s, dtype=np.float64) - inner) / (outer - inner))


# --------------------------------------------------------------------------------
# Exponent bookkeeping for localized estimates

def lp_eta(p: float) -> float:
    """Sharpening exponent paired with the localized L^p functional: 1/(2(p+1))."""
    if p <= 1.0:
        raise ValueError(f"p must exceed 1, got {p}")
    return 1.0 / (2.0 * (p + 1.0))


def admissible_p_upper(mu0: float) -> float:
    """Upper end of the admissible p range, 1/(1-mu0)_+ (infinite when mu0 >= 1)."""
    if mu0 >= 1.0:
        return math.inf
    return 1.0 / (1.0 - mu0)


def gradient_exponent(p: float) -> float:
    """q = 2p/(2-p) for p in (1, 2); always exceeds 2."""
    if not (1.0 < p < 2.0):
        raise ValueError(f"gradient exponent needs p in (1, 2), got {p}")
    q = 2.0 * p / (2.0 - p)
    assert q > 2.0
    return q


def linfty_eta(q: float, lam: Optional[float] = None) -> float:
    """
    Sharpening exponent for the sup-norm functional ||phi u||_inf.

    Args:
        q: Integrability of grad v near the point (q > 2)
        lam: Intermediate exponent in (2, q); defaults to the midpoint (2 + q)/2

    Returns:
        min(1/4, 1/lam, (q - lam)/(q lam))
    """
    if q <= 2.0:
        raise ValueError(f"q must exceed 2, got {q}")
    if lam is None:
        lam = 0.5 * (2.0 + q)
    if not (2.0 < lam < q):
        raise ValueError(f"lam must lie in (2, q={q}), got {lam}")
    return min(0.25, 1.0 / lam, (q - lam) / (q * lam))


# --------------------------------------------------------------------------------
# Boundary chart

@dataclass(frozen=True, eq=False)
class BoundaryChart:
    """
    Flattening chart near a graph boundary {y = f(x)} with the domain above it.

    Phi(x, y) = (w(x) e^y - e^{y0}, y - f(x)) where w' = w/f', w(x0) = 1.
    """
    f: Callable[[np.ndarray], np.ndarray]
    f_prime: Callable[[np.ndarray], np.ndarray]
    x0: float
    y0: float
    delta: float
    _forward: Any = field(repr=False)
    _backward: Any = field(repr=False)

    def _check_interval(self, x: np.ndarray):
        lo, hi = self.x0 - self.delta, self.x0 + self.delta
        if np.any(x < lo - 1e-12) or np.any(x > hi + 1e-12):
            raise ValueError(f"x outside the chart interval [{lo}, {hi}]")

    def w(self, x):
        """ODE solution w(x) on the chart interval."""
        x = np.asarray(x, dtype=np.float64)
        self._check_interval(x)
        flat = x.ravel()
        out = np.empty_like(flat)
        ahead = flat >= self.x0
        if np.any(ahead):
            out[ahead] = self._forward(flat[ahead])[0]
        if np.any(~ahead):
            out[~ahead] = self._backward(flat[~ahead])[0]
        return out.reshape(x.shape)

    def phi(self, x, y) -> Tuple[np.ndarray, np.ndarray]:
        """Chart map (Phi1, Phi2)."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.w(x) * np.exp(y) - math.exp(self.y0), y - self.f(x)

    def jacobian(self, x: float, y: float) -> np.ndarray:
        """DPhi = [[w/f' e^y, w e^y], [-f', 1]] at one point."""
        w = float(self.w(x))
        fp = float(self.f_prime(x))
        ey = math.exp(y)
        return np.array([[w / fp * ey, w * ey], [-fp, 1.0]])

    def normal(self, x: float) -> np.ndarray:
        """Outward unit normal of {y > f(x)} at the boundary point (x, f(x))."""
        fp = float(self.f_prime(x))
        return np.array([fp, -1.0]) / math.sqrt(1.0 + fp * fp)

    def normal_derivative(self, x: float, method: str = "jacobian", step: float = 1e-5) -> np.ndarray:
        """
        Derivative of (Phi1, Phi2) along the outward normal at (x, f(x)).

        Args:
            x: Boundary abscissa inside the chart interval
            method: "jacobian" (closed-form DPhi) or "finite_difference" (centered, independent of DPhi)
            step: Finite-difference step along the normal
        """
        y = float(self.f(x))
        nu = self.normal(x)
        if method == "jacobian":
            return self.jacobian(x, y) @ nu
        if method == "finite_difference":
            plus = self.phi(x + step * nu[0], y + step * nu[1])
            minus = self.phi(x - step * nu[0], y - step * nu[1])
            return np.array([(plus[0] - minus[0]) / (2 * step), (plus[1] - minus[1]) / (2 * step)], dtype=np.float64)
        raise ValueError(f"Unknown normal derivative method '{method}'")

    def side(self, x, y) -> np.ndarray:
        """Sign of Phi2: +1 inside the domain, -1 outside, 0 on the boundary."""
        return np.sign(self.phi(x, y)[1])


def boundary_chart(f: Callable, f_prime: Callable, x0: float, y0: float,
                   delta_max: float = 1.0, samples: int = 401,
                   rtol: float = 1e-12, atol: float = 1e-14) -> BoundaryChart:
    """
    Build the flattening chart around (x0, y0) on the graph boundary y = f(x).

    The caller supplies an already rotated graph with f'(x0) > 0. The half-width is
    halved from delta_max until f' > 0 at every sample of the interval.

    Args:
        f, f_prime: Boundary graph and its derivative (vectorized)
        x0, y0: Base point, y0 = f(x0)
        delta_max: Largest half-width tried
        samples: Sample count for the positivity scan of f'
        rtol, atol: Tolerances of the adaptive integrator

    Returns:
        BoundaryChart
    """
    if abs(float(f(x0)) - y0) > 1e-10 * max(1.0, abs(y0)):
        raise ValueError(f"Base point is not on the boundary: f({x0}) = {float(f(x0))} != {y0}")
    if not float(f_prime(x0)) > 0.0:
        raise ValueError(f"f'(x0) must be positive after rotation, got {float(f_prime(x0))}")

    delta = float(delta_max)
    for _ in range(60):
        xs = np.linspace(x0 - delta, x0 + delta, samples)
        fp = np.asarray(f_prime(xs), dtype=np.float64)
        if np.all(np.isfinite(fp)) and np.all(fp > 0.0):
            break
        delta *= 0.5
    else:
        raise ValueError("No positive chart half-width keeps f' > 0 numerically")

    def rhs(x, w):
        return w / f_prime(x)

    forward = solve_ivp(rhs, (x0, x0 + delta), [1.0], method='DOP853', rtol=rtol, atol=atol, dense_output=True)
    backward = solve_ivp(rhs, (x0, x0 - delta), [1.0], method='DOP853', rtol=rtol, atol=atol, dense_output=True)
    if not (forward.success and backward.success):
        raise ValueError(f"Chart ODE integration failed: {forward.message} / {backward.message}")

    logger.debug("Boundary chart at (%g, %g) with half-width %g", x0, y0, delta)
    return BoundaryChart(f, f_prime, float(x0), float(y0), delta, forward.sol, backward.sol)


# --------------------------------------------------------------------------------
# Sets and plateau specifications

@dataclass(frozen=True)
class Disc:
    """Disc around center; closed includes the rim."""
    center: Tuple[float, float]
    radius: float
    closed: bool = True

    def rasterize(self, grid: Grid) -> np.ndarray:
        X, Y = grid.cell_centers()
        d = np.hypot(X - self.center[0], Y - self.center[1])
        return d <= self.radius if self.closed else d < self.radius


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi] (closed) or its interior."""
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    closed: bool = True

    def rasterize(self, grid: Grid) -> np.ndarray:
        X, Y = grid.cell_centers()
        if self.closed:
            return (X >= self.x_lo) & (X <= self.x_hi) & (Y >= self.y_lo) & (Y <= self.y_hi)
        return (X > self.x_lo) & (X < self.x_hi) & (Y > self.y_lo) & (Y < self.y_hi)


@dataclass(frozen=True, eq=False)
class CellMask:
    """Fixed boolean cell set on one grid."""
    mask: np.ndarray

    def rasterize(self, grid: Grid) -> np.ndarray:
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != grid.shape:
            raise ValueError(f"Cell mask shape {mask.shape} does not match grid shape {grid.shape}")
        return mask.copy()


SetSpec = Union[Disc, Rectangle, CellMask, np.ndarray]


def rasterize(shape: SetSpec, grid: Grid) -> np.ndarray:
    """Boolean cell mask of a set descriptor on a grid."""
    if isinstance(shape, np.ndarray):
        return CellMask(shape).rasterize(grid)
    return shape.rasterize(grid)


class Extension(Enum):
    """How the plateau sees the outside of its grid."""
    MIRROR = "mirror"  # simulation rectangle: sets reflected across every face
    ZERO = "zero"      # chart plane: nothing outside the working window


@dataclass
class PlateauGeometry:
    """Rasterized plateau data on one working grid."""
    grid: Grid
    k_mask: np.ndarray
    v_mask: np.ndarray
    d: float        # discrete distance from K-cells to non-V cells
    delta: float    # dist(K', complement of V'), K' the d/4-neighbourhood of K


@dataclass
class PlateauSpec:
    """
    Target set K (phi = 1) inside an open set V (phi may be positive).

    delta may be supplied; otherwise it is derived from the rasterized sets.
    reflect_x2 symmetrizes K and V about the horizontal mid-line of the grid,
    which is the flattened boundary x2 = 0 of a chart-plane working grid.
    """
    grid: Grid
    k: SetSpec
    v: SetSpec
    delta: Optional[float] = None
    extension: Extension = Extension.MIRROR
    reflect_x2: bool = False

    def __post_init__(self):
        """Validate containment and delta on the spec's own grid."""
        if isinstance(self.extension, str):
            self.extension = Extension(self.extension)
        if self.delta is not None and self.delta <= 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.reflect_x2 and not math.isclose(self.grid.y_min, -0.5 * self.grid.ly, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("reflect_x2 needs a working grid centered on y = 0")
        self.geometry()

    def masks(self, grid: Optional[Grid] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Rasterized (K, V) masks, symmetrized when reflect_x2 is set."""
        grid = grid or self.grid
        k_mask = rasterize(self.k, grid)
        v_mask = rasterize(self.v, grid)
        if self.reflect_x2:
            k_mask = k_mask | k_mask[::-1, :]
            v_mask = v_mask | v_mask[::-1, :]
        return k_mask, v_mask

    def geometry(self, grid: Optional[Grid] = None) -> PlateauGeometry:
        """Masks plus the kernel scale for a working grid."""
        grid = grid or self.grid
        k_mask, v_mask = self.masks(grid)
        if np.any(k_mask & ~v_mask):
            raise ValueError("K is not contained in V")

        if not k_mask.any():
            return PlateauGeometry(grid, k_mask, v_mask, math.inf, math.inf)

        if v_mask.all():
            measured = 0.5 * min(grid.lx, grid.ly)
        else:
            to_outside = ndimage.distance_transform_edt(v_mask, sampling=(grid.hy, grid.hx))
            measured = float(to_outside[k_mask].min())
        if measured <= 0.0:
            raise ValueError("delta <= 0: K touches the complement of V")

        if self.delta is None:
            d = measured
        else:
            if self.delta > 0.75 * measured * (1 + 1e-12):
                raise ValueError(
                    f"Supplied delta={self.delta} exceeds the admissible {0.75 * measured:.6g} for these sets"
                )
            d = self.delta / 0.75
        return PlateauGeometry(grid, k_mask, v_mask, d, 0.75 * d)


def _working_grid(spec: PlateauSpec, resolution: Optional[int]) -> Grid:
    base = spec.grid
    if resolution is None or resolution == base.nx:
        return base
    if isinstance(spec.k, (CellMask, np.ndarray)) or isinstance(spec.v, (CellMask, np.ndarray)):
        raise ValueError("Cell-mask sets cannot be re-rasterized at another resolution")
    ny = max(4, int(round(resolution * base.ly / base.lx)))
    return Grid(base.lx, base.ly, int(resolution), ny, base.x_min, base.y_min)


def plateau_kernel(grid: Grid, inner: float, outer: float) -> np.ndarray:
    """Normalized radial kernel xi(|z|) sampled on cell offsets (sums to 1)."""
    mx = int(math.ceil(outer / grid.hx))
    my = int(math.ceil(outer / grid.hy))
    ox = np.arange(-mx, mx + 1) * grid.hx
    oy = np.arange(-my, my + 1) * grid.hy
    OX, OY = np.meshgrid(ox, oy, indexing='xy')
    xi = mollifier_profile(np.hypot(OX, OY), inner, outer)
    return xi / xi.sum()


def mollified_plateau(spec: PlateauSpec, resolution: Optional[int] = None) -> ScalarField:
    """
    Smooth plateau phi_tilde: 1 on K, 0 off V, values in [0, 1].

    The characteristic function of the delta/3-neighbourhood of K' is convolved
    with the normalized profile xi (1 below delta/3, 0 beyond 2 delta/3) by direct
    summation. Mirror extension reflects the sets across the rectangle faces.

    Args:
        spec: Plateau specification
        resolution: Cells along x of the working grid (defaults to the spec's grid)

    Returns:
        phi_tilde on the working grid
    """
    grid = _working_grid(spec, resolution)
    geo = spec.geometry(grid)
    if not geo.k_mask.any():
        return ScalarField.zeros(grid)

    inner = geo.delta / 3.0
    outer = 2.0 * geo.delta / 3.0
    if outer < 2.0 * max(grid.hx, grid.hy):
        logger.warning("Plateau kernel radius %.3g spans fewer than two cells; cutoff is under-resolved", outer)

    # chi: cells within delta/3 of K' (= within d/2 of K)
    to_k = ndimage.distance_transform_edt(~geo.k_mask, sampling=(grid.hy, grid.hx))
    chi = (to_k <= inner + 0.25 * geo.d).astype(np.float64)

    kernel = plateau_kernel(grid, inner, outer)
    if spec.extension is Extension.MIRROR:
        smooth = ndimage.convolve(chi, kernel, mode='reflect')
    else:
        smooth = ndimage.convolve(chi, kernel, mode='constant', cval=0.0)

    smooth = np.clip(smooth, 0.0, 1.0)
    smooth[smooth >= 1.0 - _PLATEAU_SNAP] = 1.0
    return ScalarField(grid, smooth)


# --------------------------------------------------------------------------------
# Sharpened cutoffs and their certificate

@dataclass(frozen=True, eq=False)
class Cutoff:
    """Certified cut-off function with its sets and constants."""
    phi: ScalarField
    eta: float
    c_phi: float
    k_mask: np.ndarray
    v_mask: np.ndarray
    spec: Optional[PlateauSpec] = None
    gradient_ratio: float = 0.0
    laplacian_ratio: float = 0.0
    c_phi_continuous: float = 0.0
    zero_cells: int = 0
    center: Optional[Tuple[float, float]] = None
    mu0: Optional[float] = None

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def support_mask(self) -> np.ndarray:
        return self.phi.values > 0.0

    def describe(self) -> Dict[str, Any]:
        """Summary used in certificates and reports."""
        return {
            'eta': self.eta,
            'c_phi': self.c_phi,
            'gradient_ratio': self.gradient_ratio,
            'laplacian_ratio': self.laplacian_ratio,
            'c_phi_continuous': self.c_phi_continuous,
            'k_cells': int(self.k_mask.sum()),
            'v_cells': int(self.v_mask.sum()),
            'support_cells': int(self.support_mask().sum()),
            'zero_cells': self.zero_cells,
            'center': list(self.center) if self.center is not None else None,
            'mu0': self.mu0,
        }

    @classmethod
    def from_values(cls, phi: ScalarField, eta: float, c_phi: float,
                    k_mask: Optional[np.ndarray] = None, v_mask: Optional[np.ndarray] = None) -> "Cutoff":
        """Wrap an arbitrary field with a claimed constant (for certificate checks)."""
        values = phi.values
        k_mask = values >= 1.0 if k_mask is None else k_mask
        v_mask = values > 0.0 if v_mask is None else v_mask
        grad_ratio, lap_ratio, zeros = discrete_ratios(values, eta, phi.grid)
        return cls(phi, eta, float(c_phi), k_mask, v_mask, None, grad_ratio, lap_ratio, 0.0, zeros)


def discrete_ratios(values: np.ndarray, eta: float, grid: Grid) -> Tuple[float, float, int]:
    """
    Worst discrete ratios over cells with phi > 0.

    Returns:
        (max |grad_h phi| / phi^(1-eta), max |Lap_h phi| / phi^(1-2 eta), number of phi = 0 cells)
    """
    gx, gy = gradient_array(values, grid.hx, grid.hy)
    grad = np.hypot(gx, gy)
    lap = np.abs(laplacian_array(values, grid.hx, grid.hy))
    positive = values > 0.0
    zeros = int(values.size - positive.sum())
    if not positive.any():
        return 0.0, 0.0, zeros
    phi_pos = values[positive]
    grad_ratio = float(np.max(grad[positive] / phi_pos ** (1.0 - eta)))
    lap_ratio = float(np.max(lap[positive] / phi_pos ** (1.0 - 2.0 * eta)))
    return grad_ratio, lap_ratio, zeros


def _continuous_constant(phi_tilde: np.ndarray, eta: float, grid: Grid) -> float:
    """max(||phi_tilde||_C1 / eta, ||phi_tilde||_C2^2 / eta^2) from discrete derivatives."""
    gx, gy = gradient_array(phi_tilde, grid.hx, grid.hy)
    gxx, gxy = gradient_array(gx, grid.hx, grid.hy)
    _, gyy = gradient_array(gy, grid.hx, grid.hy)
    sup = float(np.abs(phi_tilde).max())
    c1 = sup + float(np.hypot(gx, gy).max())
    c2 = c1 + float(max(np.abs(gxx).max(), np.abs(gxy).max(), np.abs(gyy).max()))
    return max(c1 / eta, (c2 / eta) ** 2)


def sharpen(phi_tilde: ScalarField, eta: float, spec: Optional[PlateauSpec] = None,
            center: Optional[Tuple[float, float]] = None, mu0: Optional[float] = None) -> Cutoff:
    """
    Sharpen a plateau: phi = phi_tilde^(1/eta), with c_phi certified on the grid.

    Args:
        phi_tilde: Plateau values in [0, 1]
        eta: Exponent in (0, 1/2]
        spec: Plateau spec supplying K and V (derived from phi_tilde when omitted)
        center, mu0: Provenance recorded on the cutoff

    Returns:
        Cutoff with c_phi the smallest constant satisfying both discrete inequalities
    """
    if not (0.0 < eta <= 0.5):
        raise ValueError(f"eta must lie in (0, 1/2], got {eta}")
    values = phi_tilde.values
    if values.min() < 0.0 or values.max() > 1.0:
        raise ValueError("phi_tilde must take values in [0, 1]")

    phi = values ** (1.0 / eta)
    # Subnormal values would only produce meaningless ratios
    phi[phi < np.finfo(np.float64).tiny] = 0.0

    grid = phi_tilde.grid
    if spec is not None:
        k_mask, v_mask = spec.masks(grid)
    else:
        k_mask, v_mask = values >= 1.0, values > 0.0

    grad_ratio, lap_ratio, zeros = discrete_ratios(phi, eta, grid)
    return Cutoff(
        phi=ScalarField(grid, phi),
        eta=float(eta),
        c_phi=max(grad_ratio, lap_ratio),
        k_mask=k_mask,
        v_mask=v_mask,
        spec=spec,
        gradient_ratio=grad_ratio,
        laplacian_ratio=lap_ratio,
        c_phi_continuous=_continuous_constant(values, eta, grid),
        zero_cells=zeros,
        center=center,
        mu0=mu0,
    )


@dataclass
class CertificateCheck:
    """Outcome of one certificate check."""
    name: str
    passed: bool
    measured: float = 0.0
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'passed': self.passed, 'measured': self.measured, 'detail': self.detail}


@dataclass
class CertificateReport:
    """All checks for one cutoff."""
    eta: float
    c_phi: float
    c_phi_continuous: float
    checks: List[CertificateCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failures(self) -> List[str]:
        return [check.name for check in self.checks if not check.passed]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'eta': self.eta,
            'c_phi': self.c_phi,
            'c_phi_continuous': self.c_phi_continuous,
            'passed': self.passed,
            'checks': [check.to_dict() for check in self.checks],
        }

    def to_text(self) -> str:
        """Plain-text certificate."""
        lines = [
            "CUTOFF CERTIFICATE",
            f"eta              = {self.eta!r}",
            f"c_phi (discrete) = {self.c_phi!r}",
            f"c_phi (C1/C2)    = {self.c_phi_continuous!r}",
            "",
        ]
        for check in self.checks:
            status = "PASS" if check.passed else "FAIL"
            lines.append(f"[{status}] {check.name:<20} measured={check.measured!r} {check.detail}".rstrip())
        lines.append("")
        lines.append(f"OVERALL: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _wall_slope_excess(values: np.ndarray, grid: Grid) -> Tuple[float, str]:
    """
    Worst ratio, over the four walls, of the wall-adjacent slope to what a flat wall allows.

    With d_nu phi = 0 the slope between the first two cells is at most about
    h * |phi''|, so it is compared with the normal second differences one to
    three cells in. A ratio above 1 means phi leaves the wall with a nonzero slope.
    """
    profiles = {
        'x_min': (values.T, grid.hx),
        'x_max': (values.T[::-1], grid.hx),
        'y_min': (values, grid.hy),
        'y_max': (values[::-1], grid.hy),
    }
    worst, worst_wall = 0.0, 'none'
    for wall, (rows, h) in profiles.items():
        if rows.shape[0] < 2:
            continue
        slope = float(np.abs(rows[1] - rows[0]).max()) / h
        band = min(3, rows.shape[0] - 2)
        curvature = 0.0
        if band > 0:
            second = rows[2:band + 2] - 2.0 * rows[1:band + 1] + rows[:band]
            curvature = float(np.abs(second).max()) / h ** 2
        excess = slope / (_WALL_SLOPE_FACTOR * h * curvature + _WALL_SLOPE_FLOOR)
        if excess > worst:
            worst, worst_wall = excess, wall
    return worst, worst_wall


def verify_cutoff(c: Cutoff) -> CertificateReport:
    """
    Re-check a cutoff: range, plateau, support, discrete Neumann, and both inequalities.

    Never raises for a failed property; failures are carried by the report.
    """
    values = c.phi.values
    grid = c.grid
    report = CertificateReport(eta=c.eta, c_phi=c.c_phi, c_phi_continuous=c.c_phi_continuous)

    finite = bool(np.all(np.isfinite(values)))
    lo, hi = float(np.nanmin(values)), float(np.nanmax(values))
    report.checks.append(CertificateCheck(
        'range', finite and lo >= 0.0 and hi <= 1.0, hi, f"min={lo!r} max={hi!r}"))

    if c.k_mask.any():
        plateau_gap = float(np.max(np.abs(values[c.k_mask] - 1.0)))
    else:
        plateau_gap = 0.0
    report.checks.append(CertificateCheck(
        'plateau', plateau_gap <= _PLATEAU_SNAP, plateau_gap, f"{int(c.k_mask.sum())} K-cells"))

    outside = ~c.v_mask
    leak = float(np.max(np.abs(values[outside]))) if outside.any() else 0.0
    report.checks.append(CertificateCheck(
        'support', leak == 0.0, leak, f"{int(outside.sum())} cells outside V"))

    slope_excess, worst_wall = _wall_slope_excess(values, grid)
    report.checks.append(CertificateCheck(
        'neumann', slope_excess <= 1.0, slope_excess, f"worst wall: {worst_wall}"))

    gx, gy = gradient_array(values, grid.hx, grid.hy)
    grad = np.hypot(gx, gy)
    lap = np.abs(laplacian_array(values, grid.hx, grid.hy))
    positive = values > 0.0
    zero_cells = int(values.size - positive.sum())
    if positive.any():
        phi_pos = values[positive]
        bound_grad = c.c_phi * phi_pos ** (1.0 - c.eta) * (1.0 + _CERTIFICATE_SLACK)
        bound_lap = c.c_phi * phi_pos ** (1.0 - 2.0 * c.eta) * (1.0 + _CERTIFICATE_SLACK)
        grad_ok = bool(np.all(grad[positive] <= bound_grad))
        lap_ok = bool(np.all(lap[positive] <= bound_lap))
        worst_grad = float(np.max(grad[positive] / phi_pos ** (1.0 - c.eta)))
        worst_lap = float(np.max(lap[positive] / phi_pos ** (1.0 - 2.0 * c.eta)))
    else:
        grad_ok = lap_ok = True
        worst_grad = worst_lap = 0.0
    note = f"{zero_cells} zero cells satisfied by convention"
    report.checks.append(CertificateCheck('gradient_bound', grad_ok, worst_grad, note))
    report.checks.append(CertificateCheck('laplacian_bound', lap_ok, worst_lap, note))

    if not report.passed:
        logger.info("Cutoff certificate failed: %s", ", ".join(report.failures()))
    return report


def write_certificate(path: Union[str, Path], report: CertificateReport, cutoff: Optional[Cutoff] = None) -> Path:
    """Write the text certificate (with the cutoff summary when given)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = report.to_text()
    if cutoff is not None:
        text += "\n" + "\n".join(f"{key} = {value!r}" for key, value in cutoff.describe().items()) + "\n"
    path.write_text(text, encoding='utf-8')
    return path


def eta_zero_ratio(phi: ScalarField) -> float:
    """sup |grad_h phi| / phi over cells with phi > 0 (the uncertifiable eta = 0 ratio)."""
    values = phi.values
    positive = values > 0.0
    if not positive.any():
        return 0.0
    gx, gy = gradient_array(values, phi.grid.hx, phi.grid.hy)
    with np.errstate(over='ignore'):
        return float(np.max(np.hypot(gx, gy)[positive] / values[positive]))


# --------------------------------------------------------------------------------
# Cutoffs around points of the simulation domain

def cutoff_for_point(x0: Tuple[float, float], mu: ScalarField, mu0: Optional[float] = None,
                     eta: float = 0.25, max_radius: Optional[float] = None) -> Cutoff:
    """
    Certified cutoff around x0 supported inside {mu > mu0}.

    V is the open disc around the cell of x0 reaching up to the nearest cell of the
    complement of the {mu > mu0} component (capped by max_radius); K is the closed
    disc of half that radius. Mirror extension lets V meet the domain boundary.

    Args:
        x0: Point in the simulation rectangle
        mu: Damping coefficient field
        mu0: Positivity level (defaults to mu(x0)/2)
        eta: Sharpening exponent
        max_radius: Optional cap on the radius of V

    Returns:
        Sharpened, certified Cutoff

    Raises:
        NoPositivityNeighborhoodError: if the component around x0 is thinner than 3x3 cells
    """
    grid = mu.grid
    i, j = grid.cell_index(*x0)
    mu_x0 = float(mu.values[j, i])
    if mu0 is None:
        mu0 = 0.5 * mu_x0
    if not mu_x0 > mu0:
        raise NoPositivityNeighborhoodError(f"mu(x0) = {mu_x0} does not exceed mu0 = {mu0}")

    labels, _ = ndimage.label(mu.values > mu0)
    component = labels == labels[j, i]
    block = component[max(j - 1, 0):j + 2, max(i - 1, 0):i + 2]
    if component.sum() < 9 or not block.all():
        raise NoPositivityNeighborhoodError(
            f"The {{mu > {mu0:g}}} component around {tuple(x0)} is smaller than 3x3 cells"
        )

    cx, cy = grid.cell_center(i, j)
    X, Y = grid.cell_centers()
    dist = np.hypot(X - cx, Y - cy)
    outside = ~component
    reach = float(dist[outside].min()) if outside.any() else math.inf
    r_v = min(reach, max_radius if max_radius is not None else 0.5 * math.hypot(grid.lx, grid.ly))
    if r_v <= 0.0:
        raise NoPositivityNeighborhoodError(f"No room for a neighbourhood of {tuple(x0)}")

    v_mask = component & (dist < r_v)
    k_mask = component & (dist <= 0.5 * r_v)
    spec = PlateauSpec(grid, CellMask(k_mask), CellMask(v_mask), extension=Extension.MIRROR)
    cut = sharpen(mollified_plateau(spec), eta, spec=spec, center=(cx, cy), mu0=float(mu0))
    logger.debug("Cutoff at (%g, %g): r_V=%g, K=%d cells, c_phi=%.3g", cx, cy, r_v, int(k_mask.sum()), cut.c_phi)
    return cut


# --------------------------------------------------------------------------------
# Chart-plane plateaus and pull-back to the physical boundary

def chart_plane_plateau(k_radius: float, v_radius: float, resolution: int = 128) -> ScalarField:
    """
    Reflection-symmetric plateau on a square window centered at the chart origin.

    K is the closed disc of k_radius, V the open disc of v_radius, both around (0, 0).
    """
    if not (0.0 < k_radius < v_radius):
        raise ValueError(f"Need 0 < k_radius < v_radius, got {k_radius}, {v_radius}")
    half = 1.25 * v_radius
    grid = Grid(2 * half, 2 * half, resolution, resolution, -half, -half)
    spec = PlateauSpec(grid, Disc((0.0, 0.0), k_radius), Disc((0.0, 0.0), v_radius, closed=False),
                       extension=Extension.ZERO, reflect_x2=True)
    return mollified_plateau(spec)


def pull_back(phi_tilde: ScalarField, chart: BoundaryChart, x, y) -> np.ndarray:
    """
    Evaluate phi_tilde(Phi(x, y)) by linear interpolation on the chart-plane grid.

    Points mapped outside the working window evaluate to 0.
    """
    g = phi_tilde.grid
    interpolator = RegularGridInterpolator((g.y_centers(), g.x_centers()), phi_tilde.values,
                                           method='linear', bounds_error=False, fill_value=0.0)
    p1, p2 = chart.phi(x, y)
    points = np.stack([np.ravel(p2), np.ravel(p1)], axis=-1)
    return interpolator(points).reshape(np.shape(p1))


def pulled_back_normal_derivative(phi_tilde: ScalarField, chart: BoundaryChart, xs, step: float = 1e-6) -> np.ndarray:
    """Centered normal derivative of phi_tilde o Phi at boundary points (x, f(x))."""
    out = []
    for x in np.atleast_1d(xs):
        y = float(chart.f(x))
        nu = chart.normal(float(x))
        plus = pull_back(phi_tilde, chart, x + step * nu[0], y + step * nu[1])
        minus = pull_back(phi_tilde, chart, x - step * nu[0], y - step * nu[1])
        out.append(float((plus - minus) / (2 * step)))
    return np.array(out)
