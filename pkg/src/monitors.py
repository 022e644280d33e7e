"""
Monitors - Runtime functionals, blow-up detection and localization checks

Every functional is a pure reader of a SimState. Monitors are built from
MonitorSpec entries through the MONITOR_TYPES registry; localized monitors
construct their cutoffs once, at build time, from the damping field mu.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cutoff import (Cutoff, Disc, admissible_p_upper, cutoff_for_point, gradient_exponent,
                    linfty_eta, lp_eta)
from fields_grid import Grid, ScalarField, gradient, gradient_array, integrate
from stepper import SimState, Status, TimeSeries

logger = logging.getLogger(__name__)


class HypothesisViolationError(ValueError):
    """Raised when a localized functional is requested outside its admissible setting."""
    pass


class MonitorKind(Enum):
    MASS_L1 = "mass_l1"
    V_W1P = "v_w1p"
    V_LQ = "v_lq"
    LOCAL_LP = "local_lp"
    GRAD_V_LOCAL = "grad_v_local"
    GRAD_PHI_V = "grad_phi_v"
    PHI_U_INF = "phi_u_inf"
    U_INF_LOCAL = "u_inf_local"


_POINT_KINDS = {MonitorKind.LOCAL_LP, MonitorKind.GRAD_V_LOCAL, MonitorKind.GRAD_PHI_V,
                MonitorKind.PHI_U_INF, MonitorKind.U_INF_LOCAL}


@dataclass
class MonitorSpec:
    """
    Declarative monitor request.

    Localized kinds need `point`; regions are the disc of `radius` around it when
    given, otherwise the plateau set K of a cutoff built at the point.
    """
    kind: MonitorKind
    cadence: int = 1
    p: Optional[float] = None
    q: Optional[float] = None
    point: Optional[Tuple[float, float]] = None
    radius: Optional[float] = None
    mu0: Optional[float] = None
    eta: Optional[float] = None
    label: Optional[str] = None
    derive: bool = False

    def __post_init__(self):
        """Validate parameters against the kind."""
        if isinstance(self.kind, str):
            self.kind = MonitorKind(self.kind)
        if self.cadence < 1:
            raise ValueError(f"Monitor cadence must be at least 1, got {self.cadence}")
        if self.kind in _POINT_KINDS and self.point is None:
            raise ValueError(f"Monitor '{self.kind.value}' requires 'point'")
        if self.radius is not None and self.radius <= 0.0:
            raise ValueError(f"Monitor radius must be positive, got {self.radius}")

        if self.kind is MonitorKind.V_W1P:
            if self.p is None or not (1.0 <= self.p < 2.0):
                raise ValueError(f"v_w1p needs p in [1, 2), got {self.p}")
        elif self.kind is MonitorKind.V_LQ:
            if self.q is None or self.q < 1.0:
                raise ValueError(f"v_lq needs q >= 1, got {self.q}")
        elif self.kind is MonitorKind.LOCAL_LP:
            if self.p is None or self.p <= 1.0:
                raise ValueError(f"local_lp needs p > 1, got {self.p}")
            if self.eta is not None and abs(self.eta - lp_eta(self.p)) > 1e-12:
                raise ValueError(f"local_lp with p={self.p} requires eta = 1/(2(p+1)) = {lp_eta(self.p)}, got {self.eta}")
            if self.derive and not self.p < 2.0:
                raise ValueError(f"Derived gradient monitors need p < 2, got {self.p}")
        elif self.kind in (MonitorKind.GRAD_V_LOCAL, MonitorKind.GRAD_PHI_V):
            if self.q is None or self.q < 1.0:
                raise ValueError(f"{self.kind.value} needs q >= 1, got {self.q}")
        elif self.kind is MonitorKind.PHI_U_INF:
            if self.eta is None and self.p is None:
                raise ValueError("phi_u_inf needs 'eta' or the paired 'p'")

    def to_dict(self) -> Dict[str, Any]:
        result = {'kind': self.kind.value, 'cadence': self.cadence}
        for key in ('p', 'q', 'point', 'radius', 'mu0', 'eta', 'label'):
            value = getattr(self, key)
            if value is not None:
                result[key] = list(value) if key == 'point' else value
        if self.derive:
            result['derive'] = True
        return result


# --------------------------------------------------------------------------------
# Functionals

def _lp_norm(values: np.ndarray, p: float, area: float) -> float:
    return float((np.sum(np.abs(values) ** p) * area) ** (1.0 / p))


def check_localized_hypotheses(c: Cutoff, p: float, mu: ScalarField, mu0: Optional[float] = None):
    """
    Raise HypothesisViolationError unless eta = 1/(2(p+1)), p < 1/(1-mu0)_+ and supp phi lies in {mu > mu0}.
    """
    if abs(c.eta - lp_eta(p)) > 1e-12:
        raise HypothesisViolationError(f"Cutoff eta={c.eta} does not match 1/(2(p+1)) = {lp_eta(p)} for p={p}")
    mu0 = c.mu0 if mu0 is None else mu0
    if mu0 is None:
        raise HypothesisViolationError("mu0 is unknown; pass it or build the cutoff with cutoff_for_point")
    if not p < admissible_p_upper(mu0):
        raise HypothesisViolationError(f"p={p} is not below 1/(1-mu0)_+ = {admissible_p_upper(mu0)}")
    support = c.support_mask()
    if np.any(mu.values[support] <= mu0):
        raise HypothesisViolationError(f"supp phi leaves {{mu > {mu0:g}}}")


def localized_lp(u: ScalarField, c: Cutoff, p: float,
                 mu: Optional[ScalarField] = None, mu0: Optional[float] = None) -> float:
    """
    integral of phi * u^p.

    Args:
        u: Density
        c: Cutoff with eta = 1/(2(p+1))
        p: Exponent, p > 1
        mu, mu0: When mu is given, the support hypothesis is checked too
    """
    if p <= 1.0:
        raise ValueError(f"p must exceed 1, got {p}")
    if mu is not None:
        check_localized_hypotheses(c, p, mu, mu0)
    elif abs(c.eta - lp_eta(p)) > 1e-12:
        raise HypothesisViolationError(f"Cutoff eta={c.eta} does not match 1/(2(p+1)) = {lp_eta(p)} for p={p}")
    return integrate(ScalarField(u.grid, c.phi.values * np.maximum(u.values, 0.0) ** p))


def grad_norm_local(v: ScalarField, region: np.ndarray, q: float) -> float:
    """(sum over region of |grad_h v|^q * hx * hy)^(1/q)."""
    if q < 1.0:
        raise ValueError(f"q must be at least 1, got {q}")
    region = np.asarray(region, dtype=bool)
    if not region.any():
        logger.warning("grad_norm_local called with an empty region; returning 0")
        return 0.0
    gx, gy = gradient(v)
    magnitude = np.hypot(gx.values, gy.values)[region]
    return _lp_norm(magnitude, q, v.grid.cell_area)


def sobolev_norm_v(v: ScalarField, p: float, strict: bool = True) -> float:
    """
    W^{1,p} norm (||v||_p^p + ||grad_h v||_p^p)^(1/p).

    Args:
        strict: Reject p outside [1, 2); otherwise compute and log a warning
    """
    if not (1.0 <= p < 2.0):
        if strict or p < 1.0:
            raise ValueError(f"p must lie in [1, 2), got {p}")
        logger.warning("W^{1,%g} norm requested outside the range where it stays bounded", p)
    gx, gy = gradient(v)
    area = v.grid.cell_area
    total = np.sum(np.abs(v.values) ** p) * area + np.sum(np.hypot(gx.values, gy.values) ** p) * area
    return float(total ** (1.0 / p))


def lq_norm(v: ScalarField, q: float) -> float:
    """||v||_{L^q} over the whole grid."""
    if q < 1.0:
        raise ValueError(f"q must be at least 1, got {q}")
    return _lp_norm(v.values, q, v.grid.cell_area)


def grad_phi_v(v: ScalarField, c: Cutoff, q: float) -> float:
    """integral of |grad_h (phi v)|^q."""
    g = v.grid
    gx, gy = gradient_array(c.phi.values * v.values, g.hx, g.hy)
    return float(np.sum(np.hypot(gx, gy) ** q) * g.cell_area)


def phi_u_inf(u: ScalarField, c: Cutoff) -> float:
    """max of phi * u."""
    return float(np.max(c.phi.values * u.values))


def u_inf_local(u: ScalarField, region: np.ndarray) -> float:
    """max of u over a cell region (0 for an empty region)."""
    region = np.asarray(region, dtype=bool)
    if not region.any():
        logger.warning("u_inf_local called with an empty region; returning 0")
        return 0.0
    return float(u.values[region].max())


# --------------------------------------------------------------------------------
# Monitor objects

class BaseMonitor(ABC):
    """Named functional evaluated every `cadence` steps."""

    def __init__(self, name: str, cadence: int = 1):
        self.name = name
        self.cadence = cadence

    @abstractmethod
    def evaluate(self, state: SimState) -> float:
        """Value of the functional on a state."""
        pass


class MassMonitor(BaseMonitor):
    def evaluate(self, state):
        return integrate(state.u)


class SobolevVMonitor(BaseMonitor):
    def __init__(self, name, cadence, p):
        super().__init__(name, cadence)
        self.p = p

    def evaluate(self, state):
        return sobolev_norm_v(state.v, self.p)


class LqVMonitor(BaseMonitor):
    def __init__(self, name, cadence, q):
        super().__init__(name, cadence)
        self.q = q

    def evaluate(self, state):
        return lq_norm(state.v, self.q)


class LocalLpMonitor(BaseMonitor):
    """integral of phi u^p; hypotheses are checked once when the monitor is built."""

    def __init__(self, name, cadence, cutoff: Cutoff, p: float, mu: ScalarField):
        super().__init__(name, cadence)
        check_localized_hypotheses(cutoff, p, mu)
        self.cutoff = cutoff
        self.p = p

    def evaluate(self, state):
        return localized_lp(state.u, self.cutoff, self.p)


class GradVLocalMonitor(BaseMonitor):
    def __init__(self, name, cadence, region: np.ndarray, q: float):
        super().__init__(name, cadence)
        self.region = region
        self.q = q

    def evaluate(self, state):
        return grad_norm_local(state.v, self.region, self.q)


class GradPhiVMonitor(BaseMonitor):
    def __init__(self, name, cadence, cutoff: Cutoff, q: float):
        super().__init__(name, cadence)
        self.cutoff = cutoff
        self.q = q

    def evaluate(self, state):
        return grad_phi_v(state.v, self.cutoff, self.q)


class PhiUInfMonitor(BaseMonitor):
    def __init__(self, name, cadence, cutoff: Cutoff):
        super().__init__(name, cadence)
        self.cutoff = cutoff

    def evaluate(self, state):
        return phi_u_inf(state.u, self.cutoff)


class UInfLocalMonitor(BaseMonitor):
    def __init__(self, name, cadence, region: np.ndarray):
        super().__init__(name, cadence)
        self.region = region

    def evaluate(self, state):
        return u_inf_local(state.u, self.region)


@dataclass
class MonitorSet:
    """Built monitors plus the cutoffs they own (for certificates)."""
    monitors: List[BaseMonitor] = field(default_factory=list)
    cutoffs: Dict[str, Cutoff] = field(default_factory=dict)

    @property
    def names(self) -> List[str]:
        return [m.name for m in self.monitors]

    def get(self, name: str) -> BaseMonitor:
        for monitor in self.monitors:
            if monitor.name == name:
                return monitor
        raise KeyError(f"No monitor named '{name}'")


def _num(x: float) -> str:
    return f"{x:.4g}"


def _suffix(spec: MonitorSpec) -> str:
    return f"_{spec.label}" if spec.label else ""


def _region(spec: MonitorSpec, mu: ScalarField) -> np.ndarray:
    if spec.radius is not None:
        return Disc(tuple(spec.point), spec.radius).rasterize(mu.grid)
    return cutoff_for_point(tuple(spec.point), mu, spec.mu0).k_mask


def _build_mass(spec, mu, out):
    out.monitors.append(MassMonitor("mass_L1" + _suffix(spec), spec.cadence))


def _build_w1p(spec, mu, out):
    out.monitors.append(SobolevVMonitor(f"v_W1p_p{_num(spec.p)}" + _suffix(spec), spec.cadence, spec.p))


def _build_lq(spec, mu, out):
    out.monitors.append(LqVMonitor(f"v_Lq_q{_num(spec.q)}" + _suffix(spec), spec.cadence, spec.q))


def _build_local_lp(spec, mu, out):
    eta = lp_eta(spec.p)
    cut = cutoff_for_point(tuple(spec.point), mu, spec.mu0, eta=eta, max_radius=spec.radius)
    name = f"localLp_p{_num(spec.p)}_eta{_num(eta)}" + _suffix(spec)
    out.cutoffs[name] = cut
    out.monitors.append(LocalLpMonitor(name, spec.cadence, cut, spec.p, mu))
    if not spec.derive:
        return

    q = gradient_exponent(spec.p)
    assert abs(q - 2.0 * spec.p / (2.0 - spec.p)) < 1e-12 and q > 2.0
    out.monitors.append(GradVLocalMonitor(f"gradVLocal_q{_num(q)}" + _suffix(spec), spec.cadence, cut.k_mask, q))
    out.monitors.append(GradPhiVMonitor(f"gradPhiV_q{_num(q)}" + _suffix(spec), spec.cadence, cut, q))

    eta_inf = linfty_eta(q)
    cut_inf = cutoff_for_point(tuple(spec.point), mu, spec.mu0, eta=eta_inf, max_radius=spec.radius)
    inf_name = f"phiUInf_eta{_num(eta_inf)}" + _suffix(spec)
    out.cutoffs[inf_name] = cut_inf
    out.monitors.append(PhiUInfMonitor(inf_name, spec.cadence, cut_inf))


def _build_grad_v_local(spec, mu, out):
    out.monitors.append(GradVLocalMonitor(f"gradVLocal_q{_num(spec.q)}" + _suffix(spec), spec.cadence,
                                          _region(spec, mu), spec.q))


def _build_grad_phi_v(spec, mu, out):
    cut = cutoff_for_point(tuple(spec.point), mu, spec.mu0, eta=spec.eta or 0.25, max_radius=spec.radius)
    name = f"gradPhiV_q{_num(spec.q)}" + _suffix(spec)
    out.cutoffs[name] = cut
    out.monitors.append(GradPhiVMonitor(name, spec.cadence, cut, spec.q))


def _build_phi_u_inf(spec, mu, out):
    eta = spec.eta if spec.eta is not None else linfty_eta(gradient_exponent(spec.p))
    cut = cutoff_for_point(tuple(spec.point), mu, spec.mu0, eta=eta, max_radius=spec.radius)
    name = f"phiUInf_eta{_num(eta)}" + _suffix(spec)
    out.cutoffs[name] = cut
    out.monitors.append(PhiUInfMonitor(name, spec.cadence, cut))


def _build_u_inf_local(spec, mu, out):
    label = spec.label or f"{_num(spec.point[0])}_{_num(spec.point[1])}"
    out.monitors.append(UInfLocalMonitor(f"uInfLocal_{label}", spec.cadence, _region(spec, mu)))


MONITOR_TYPES = {
    MonitorKind.MASS_L1: _build_mass,
    MonitorKind.V_W1P: _build_w1p,
    MonitorKind.V_LQ: _build_lq,
    MonitorKind.LOCAL_LP: _build_local_lp,
    MonitorKind.GRAD_V_LOCAL: _build_grad_v_local,
    MonitorKind.GRAD_PHI_V: _build_grad_phi_v,
    MonitorKind.PHI_U_INF: _build_phi_u_inf,
    MonitorKind.U_INF_LOCAL: _build_u_inf_local,
}


def build_monitors(specs: Sequence[MonitorSpec], mu: ScalarField) -> MonitorSet:
    """
    Instantiate monitors (and any derived ones) for a damping field.

    Raises:
        ValueError: on duplicate column names
    """
    out = MonitorSet()
    for spec in specs:
        MONITOR_TYPES[spec.kind](spec, mu, out)
    names = out.names
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ValueError(f"Duplicate monitor columns {duplicates}; add a 'label' to disambiguate")
    return out


def uniform_reference(monitor: BaseMonitor, grid: Grid, mean_u: float) -> float:
    """Monitor value on the uniform state u = v = mean_u (equal mass, no gradients)."""
    const = ScalarField.constant(grid, mean_u)
    return monitor.evaluate(SimState(u=const, v=const.copy()))


# --------------------------------------------------------------------------------
# Blow-up detection and localization

class Verdict(Enum):
    BOUNDED = "bounded"
    BLOWUP_SUSPECTED = "blowup_suspected"
    INCONCLUSIVE = "inconclusive"


@dataclass
class DetectionConfig:
    """Thresholds for blow-up detection and the blow-up set."""
    k: int = 20
    growth_factor: float = 100.0
    blowup_fraction: float = 0.5
    history_fraction: float = 0.1
    eps_mu_fraction: float = 0.05
    eps_mu: Optional[float] = None

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"Extrapolation needs k >= 2 samples, got {self.k}")
        if not (0.0 < self.blowup_fraction <= 1.0):
            raise ValueError(f"blowup_fraction must lie in (0, 1], got {self.blowup_fraction}")
        if not (0.0 <= self.history_fraction <= 1.0):
            raise ValueError(f"history_fraction must lie in [0, 1], got {self.history_fraction}")
        if self.growth_factor <= 1.0:
            raise ValueError(f"growth_factor must exceed 1, got {self.growth_factor}")

    def to_dict(self) -> Dict[str, Any]:
        return {'k': self.k, 'growth_factor': self.growth_factor, 'blowup_fraction': self.blowup_fraction,
                'history_fraction': self.history_fraction, 'eps_mu_fraction': self.eps_mu_fraction,
                'eps_mu': self.eps_mu}


@dataclass
class BlowupReport:
    """Verdict, heuristic T_max, blow-up cells and their overlap with {mu <= eps_mu}."""
    verdict: Verdict
    t_max_estimate: Optional[float] = None
    blowup_cells: Optional[np.ndarray] = None
    blowup_area: float = 0.0
    mu_overlap: Optional[float] = None
    localized: Optional[bool] = None
    eps_mu: Optional[float] = None
    witness: Dict[str, Any] = field(default_factory=dict)
    final_time: Optional[float] = None
    final_status: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        cells = []
        if self.blowup_cells is not None:
            cells = [[int(i), int(j)] for j, i in zip(*np.nonzero(self.blowup_cells))]
        return {
            'verdict': self.verdict.value,
            't_max_estimate': self.t_max_estimate,
            't_max_method': 'heuristic: linear extrapolation of 1/max u to zero',
            'blowup_cells': cells,
            'blowup_cell_count': len(cells),
            'blowup_area': self.blowup_area,
            'mu_overlap': self.mu_overlap,
            'localized': self.localized,
            'eps_mu': self.eps_mu,
            'final_time': self.final_time,
            'final_status': self.final_status,
            'witness': self.witness,
        }


def extrapolate_blowup_time(t: np.ndarray, max_u: np.ndarray, k: int = 20) -> Optional[float]:
    """Zero of the least-squares line through the last k samples of 1/max u (None if not decreasing)."""
    usable = np.isfinite(max_u) & (max_u > 0.0)
    t, max_u = t[usable][-k:], max_u[usable][-k:]
    if t.size < 2 or np.ptp(t) == 0.0:
        return None
    slope, intercept = np.polyfit(t, 1.0 / max_u, 1)
    if not slope < 0.0:
        return None
    return float(-intercept / slope)


def detect_blowup(series: TimeSeries, cfg: Optional[DetectionConfig] = None) -> BlowupReport:
    """
    Classify a run from its series.

    BlowupSuspected iff the run stopped on the blow-up flag or on step-size underflow;
    Inconclusive if the elliptic solve failed, or if max u grew by growth_factor without
    reaching the cap; else Bounded.
    """
    cfg = cfg or DetectionConfig()
    if len(series) < 10:
        logger.warning("detect_blowup on a series with only %d samples", len(series))
    t = series.column('t')
    max_u = series.column('max_u')

    if series.status in (Status.BLOWUP_SUSPECTED, Status.DT_UNDERFLOW):
        verdict = Verdict.BLOWUP_SUSPECTED
    elif series.status is Status.SOLVER_FAILED:
        verdict = Verdict.INCONCLUSIVE
    elif max_u.size and max_u[0] > 0.0 and max_u[-1] >= cfg.growth_factor * max_u[0]:
        verdict = Verdict.INCONCLUSIVE
    else:
        verdict = Verdict.BOUNDED

    estimate = None
    if verdict is not Verdict.BOUNDED:
        estimate = extrapolate_blowup_time(t, max_u, cfg.k)
    return BlowupReport(verdict=verdict, t_max_estimate=estimate,
                        final_time=float(t[-1]) if t.size else None, final_status=series.status.value)


def estimate_blowup_set(final_u: ScalarField, cfg: Optional[DetectionConfig] = None,
                        series: Optional[TimeSeries] = None) -> np.ndarray:
    """
    Cells with u >= fraction * max u, united with the cells that hosted the running
    argmax during the last history_fraction of steps (when a series is given).
    """
    cfg = cfg or DetectionConfig()
    peak = final_u.max()
    if not peak > 0.0:
        mask = np.zeros(final_u.grid.shape, dtype=bool)
    else:
        mask = final_u.values >= cfg.blowup_fraction * peak

    if series is not None and series.peak_steps:
        last = series.peak_steps[-1]
        start = last - cfg.history_fraction * last
        for s, (i, j) in zip(series.peak_steps, series.peak_cells):
            if s >= start:
                mask[j, i] = True
    return mask


def check_blowup_localization(bset: np.ndarray, mu: ScalarField,
                              eps_mu: Optional[float] = None) -> Tuple[bool, float]:
    """
    Is every blow-up cell inside {mu <= eps_mu}?

    Returns:
        (all inside, fraction inside); eps_mu defaults to 0.05 * max mu
    """
    if eps_mu is None:
        eps_mu = 0.05 * mu.max()
    bset = np.asarray(bset, dtype=bool)
    count = int(bset.sum())
    if count == 0:
        return True, 1.0
    inside = mu.values[bset] <= eps_mu
    overlap = float(inside.sum()) / count
    return bool(inside.all()), overlap


def check_local_boundedness(values: Sequence[float], times: Optional[Sequence[float]] = None,
                            threshold: Optional[float] = None, reference_fraction: float = 0.1,
                            floor: float = 0.0) -> bool:
    """
    Plateau test for a local sup-norm series.

    Without an explicit threshold, the reference is the value at the first sample
    at or after reference_fraction of the recorded horizon, and the threshold is
    10 * max(reference, floor).
    """
    values = np.asarray(values, dtype=np.float64)
    finite = np.isfinite(values)
    if not finite.any():
        return True
    if threshold is None:
        if times is None:
            times = np.arange(values.size, dtype=np.float64)
        times = np.asarray(times, dtype=np.float64)[finite]
        vals = values[finite]
        target = times[0] + reference_fraction * (times[-1] - times[0])
        index = int(np.searchsorted(times, target, side='left'))
        reference = float(vals[min(index, vals.size - 1)])
        threshold = 10.0 * max(reference, floor)
    return bool(np.nanmax(values) < threshold)


def check_running_median(values: Sequence[float], factor: float = 10.0, floor: float = 0.0) -> bool:
    """True iff every sample stays below factor * max(running median, floor)."""
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    for k in range(values.size):
        if values[k] > factor * max(float(np.median(values[:k + 1])), floor):
            return False
    return True


def build_blowup_report(series: TimeSeries, final_u: ScalarField, mu: ScalarField,
                        cfg: Optional[DetectionConfig] = None, witness_samples: int = 50) -> BlowupReport:
    """Full report: verdict and T_max estimate, plus blow-up set and localization when blow-up is suspected."""
    cfg = cfg or DetectionConfig()
    report = detect_blowup(series, cfg)
    report.eps_mu = cfg.eps_mu if cfg.eps_mu is not None else cfg.eps_mu_fraction * mu.max()

    tail = slice(-witness_samples, None)
    report.witness = {
        'peak_times': [float(x) for x in series.peak_times[tail]],
        'peak_values': [float(x) for x in series.peak_values[tail]],
        'peak_cells': [[int(i), int(j)] for i, j in series.peak_cells[tail]],
        'final_max_u': final_u.max(),
        'final_argmax': list(final_u.argmax()),
        'u_cap': series.u_cap,
    }

    if report.verdict is Verdict.BLOWUP_SUSPECTED:
        cells = estimate_blowup_set(final_u, cfg, series)
        report.blowup_cells = cells
        report.blowup_area = float(cells.sum()) * final_u.grid.cell_area
        report.localized, report.mu_overlap = check_blowup_localization(cells, mu, report.eps_mu)
    return report
