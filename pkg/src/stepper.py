"""
Stepper - Adaptive explicit time stepping of the chemotaxis-growth equation

    u_t = Lap u - div(u grad v) + kappa u - mu u^2,    (I - Lap) v = u

Diffusion and upwind transport are explicit; the logistic reaction uses a
Patankar-type update by default so that the quadratic sink never produces
negative densities. The signal v is re-solved after every update.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from elliptic import EllipticSolveConfig, NonConvergenceError, ScreenedPoissonSolver
from fields_grid import (ScalarField, advect_flux_divergence, gradient, integrate, laplacian,
                         max_face_speed, require_same_grid)

logger = logging.getLogger(__name__)

_DIVISION_GUARD = 1e-30
_CLIP_WARNING_FRACTION = 1e-8


class Status(Enum):
    RUNNING = "running"
    BLOWUP_SUSPECTED = "blowup_suspected"
    COMPLETED = "completed"
    DT_UNDERFLOW = "dt_underflow"
    SOLVER_FAILED = "solver_failed"


class TimeScheme(Enum):
    PATANKAR = "patankar"
    EXPLICIT = "explicit"


class StateDivergedError(RuntimeError):
    """Raised when an update produces non-finite densities."""
    pass


@dataclass
class Coefficients:
    """Growth rate kappa (any sign) and damping mu (nonnegative), sampled at cell centers."""
    kappa: ScalarField
    mu: ScalarField

    def __post_init__(self):
        """Validate grids and the sign of mu."""
        require_same_grid(self.kappa, self.mu)
        if self.mu.values.min() < 0.0:
            raise ValueError(f"mu must be nonnegative everywhere, found min {self.mu.min()}")

    @property
    def kappa_plus_max(self) -> float:
        return max(0.0, float(self.kappa.values.max()))

    @classmethod
    def constant(cls, grid, kappa: float, mu: float) -> "Coefficients":
        return cls(ScalarField.constant(grid, kappa), ScalarField.constant(grid, mu))


@dataclass
class SimState:
    """Current density, signal, clock and cumulative diagnostics."""
    u: ScalarField
    v: ScalarField
    t: float = 0.0
    dt: float = 0.0
    step_index: int = 0
    status: Status = Status.RUNNING
    clipped_mass: float = 0.0        # added by the last step
    clipped_mass_total: float = 0.0
    cg_iterations: int = 0


@dataclass
class StepperConfig:
    """Time stepping controls."""
    t_end: float
    cfl_safety: float = 0.2
    dt_min: float = 1e-10
    dt_max: float = 1e-2
    u_cap: Optional[float] = None  # None: 1e4 * max(1, max u0)
    scheme: TimeScheme = TimeScheme.PATANKAR
    record_every: int = 1
    elliptic: EllipticSolveConfig = field(default_factory=EllipticSolveConfig)

    def __post_init__(self):
        """Validate ranges."""
        if isinstance(self.scheme, str):
            self.scheme = TimeScheme(self.scheme)
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if not (0.0 < self.cfl_safety < 1.0):
            raise ValueError(f"cfl_safety must lie in (0, 1), got {self.cfl_safety}")
        if not (0.0 < self.dt_min < self.dt_max):
            raise ValueError(f"Need 0 < dt_min < dt_max, got dt_min={self.dt_min}, dt_max={self.dt_max}")
        if self.u_cap is not None and not self.u_cap > 0.0:
            raise ValueError(f"u_cap must be positive, got {self.u_cap}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be at least 1, got {self.record_every}")

    def resolve_u_cap(self, u0: ScalarField) -> float:
        """Blow-up threshold for a given initial density."""
        peak = u0.max()
        cap = self.u_cap if self.u_cap is not None else 1e4 * max(1.0, peak)
        if not cap > peak:
            raise ValueError(f"u_cap={cap} must exceed max(u0)={peak}")
        return cap

    def to_dict(self) -> Dict[str, Any]:
        return {
            't_end': self.t_end, 'cfl_safety': self.cfl_safety, 'dt_min': self.dt_min,
            'dt_max': self.dt_max, 'u_cap': self.u_cap, 'scheme': self.scheme.value,
            'record_every': self.record_every, 'elliptic': self.elliptic.to_dict(),
        }


BASE_COLUMNS = ['step', 't', 'dt', 'mass', 'max_u', 'min_u', 'clipped_mass', 'cg_iterations']


class TimeSeries:
    """Recorded rows (base columns plus one column per monitor) and the peak history."""

    def __init__(self, monitor_names: Sequence[str] = ()):
        self.columns = BASE_COLUMNS + list(monitor_names)
        self.rows: List[Dict[str, Any]] = []
        self.peak_steps: List[int] = []
        self.peak_times: List[float] = []
        self.peak_cells: List[Tuple[int, int]] = []
        self.peak_values: List[float] = []
        self.status: Status = Status.RUNNING
        self.u_cap: Optional[float] = None
        self.t_end: Optional[float] = None
        self.initial_mass: float = 0.0
        self.kappa_plus_max: float = 0.0

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, row: Dict[str, Any]):
        self.rows.append(row)

    def record_peak(self, state: SimState):
        i, j = state.u.argmax()
        self.peak_steps.append(state.step_index)
        self.peak_times.append(state.t)
        self.peak_cells.append((i, j))
        self.peak_values.append(state.u.max())

    def column(self, name: str) -> np.ndarray:
        """Column as a float array; monitors skipped by cadence appear as NaN."""
        if name not in self.columns:
            raise KeyError(f"Unknown time series column '{name}'")
        return np.array([np.nan if row.get(name) is None else row[name] for row in self.rows], dtype=np.float64)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow(['' if row.get(c) is None else repr(row[c]) for c in self.columns])
        return path

    @classmethod
    def from_arrays(cls, t: Sequence[float], max_u: Sequence[float], status: Status = Status.COMPLETED,
                    u_cap: Optional[float] = None, t_end: Optional[float] = None) -> "TimeSeries":
        """Synthetic series from (t, max u) samples; other base columns are filled trivially."""
        series = cls()
        for k, (tk, mk) in enumerate(zip(t, max_u)):
            series.append({'step': k, 't': float(tk), 'dt': 0.0, 'mass': 0.0, 'max_u': float(mk),
                           'min_u': 0.0, 'clipped_mass': 0.0, 'cg_iterations': 0})
        series.status = status
        series.u_cap = u_cap
        series.t_end = t_end if t_end is not None else (float(t[-1]) if len(t) else None)
        return series


def stability_limit(state: SimState, coeffs: Coefficients, cfg: StepperConfig) -> float:
    """Unclamped stable step: cfl_safety * min(diffusion, advection, reaction limits)."""
    grid = state.u.grid
    h = grid.h
    gvx, gvy = gradient(state.v)
    speed = max_face_speed(gvx, gvy)
    diffusion = h * h / 4.0
    advection = h / speed if speed > 0.0 else math.inf
    reaction = 1.0 / (float(np.abs(coeffs.kappa.values).max())
                      + 2.0 * float(coeffs.mu.values.max()) * max(state.u.max(), 0.0) + _DIVISION_GUARD)
    return cfg.cfl_safety * min(diffusion, advection, reaction)


def stable_dt(state: SimState, coeffs: Coefficients, cfg: StepperConfig) -> float:
    """stability_limit clamped to [dt_min, dt_max]."""
    return min(max(stability_limit(state, coeffs, cfg), cfg.dt_min), cfg.dt_max)


def step(state: SimState, coeffs: Coefficients, dt: float,
         scheme: TimeScheme = TimeScheme.PATANKAR,
         solver: Optional[ScreenedPoissonSolver] = None) -> SimState:
    """
    Advance one step of length dt.

    Args:
        state: Current state (v must solve the elliptic problem for u)
        coeffs: kappa and mu
        dt: Step length
        scheme: PATANKAR (positivity-preserving reaction) or EXPLICIT (mass-identity variant)
        solver: Reusable elliptic solver for the state's grid

    Returns:
        New state with t advanced by dt

    Raises:
        StateDivergedError: if the update is not finite
    """
    grid = state.u.grid
    solver = solver or ScreenedPoissonSolver(grid)
    u = state.u.values
    kappa = coeffs.kappa.values
    mu = coeffs.mu.values

    gvx, gvy = gradient(state.v)
    transport = laplacian(state.u).values - advect_flux_divergence(state.u, gvx, gvy).values

    with np.errstate(over='ignore', invalid='ignore'):
        if scheme is TimeScheme.PATANKAR:
            kappa_plus = np.maximum(kappa, 0.0)
            kappa_minus = np.maximum(-kappa, 0.0)
            new = (u + dt * (transport + kappa_plus * u)) / (1.0 + dt * (mu * u + kappa_minus))
        else:
            new = u + dt * (transport + kappa * u - mu * u * u)

    if not np.all(np.isfinite(new)):
        raise StateDivergedError(f"Non-finite density after step {state.step_index + 1} at t={state.t + dt:g}")

    negative = new < 0.0
    clipped = 0.0
    if negative.any():
        clipped = -float(new[negative].sum()) * grid.cell_area
        new[negative] = 0.0
        mass = integrate(ScalarField(grid, new))
        if mass > 0.0 and clipped > _CLIP_WARNING_FRACTION * mass:
            logger.warning("Clipped mass %.3e (%.2e of total) at step %d", clipped, clipped / mass, state.step_index + 1)
        else:
            logger.debug("Clipped mass %.3e at step %d", clipped, state.step_index + 1)

    u_new = ScalarField(grid, new)
    v_new = solver.solve(u_new, initial_guess=state.v)
    return SimState(
        u=u_new,
        v=v_new,
        t=state.t + dt,
        dt=dt,
        step_index=state.step_index + 1,
        status=Status.RUNNING,
        clipped_mass=clipped,
        clipped_mass_total=state.clipped_mass_total + clipped,
        cg_iterations=solver.last_iterations,
    )


def _record(series: TimeSeries, state: SimState, monitors, final: bool = False):
    row = {
        'step': state.step_index,
        't': state.t,
        'dt': state.dt,
        'mass': integrate(state.u),
        'max_u': state.u.max(),
        'min_u': state.u.min(),
        'clipped_mass': state.clipped_mass_total,
        'cg_iterations': state.cg_iterations,
    }
    for monitor in monitors:
        if final or state.step_index % monitor.cadence == 0:
            row[monitor.name] = monitor.evaluate(state)
        else:
            row[monitor.name] = None
    series.append(row)


def run(u0: ScalarField, coeffs: Coefficients, cfg: StepperConfig, monitors: Iterable = (),
        snapshot_times: Sequence[float] = (),
        on_snapshot: Optional[Callable[[SimState], None]] = None) -> Tuple[SimState, TimeSeries]:
    """
    Integrate from u0 until t_end, a blow-up flag, step-size underflow or a failed elliptic solve.

    Args:
        u0: Nonnegative initial density
        coeffs: kappa and mu on u0's grid
        cfg: Stepper configuration
        monitors: Objects with `name`, `cadence` and `evaluate(state)`
        snapshot_times: Times at which on_snapshot is called (steps land on them exactly)
        on_snapshot: Callback receiving the state at each snapshot time

    Returns:
        (final state, recorded time series); a failed solve after the first step ends
        the run with status SOLVER_FAILED and the last good state
    """
    require_same_grid(u0, coeffs.kappa)
    if u0.values.min() < 0.0:
        raise ValueError(f"Initial density must be nonnegative, found min {u0.min()}")

    monitors = list(monitors)
    u_cap = cfg.resolve_u_cap(u0)
    solver = ScreenedPoissonSolver(u0.grid, cfg.elliptic)

    series = TimeSeries([m.name for m in monitors])
    series.u_cap = u_cap
    series.t_end = cfg.t_end
    series.initial_mass = integrate(u0)
    series.kappa_plus_max = coeffs.kappa_plus_max

    state = SimState(u=u0.copy(), v=solver.solve(u0), cg_iterations=solver.last_iterations)
    pending = sorted(float(t) for t in snapshot_times if 0.0 <= float(t) <= cfg.t_end)
    while pending and pending[0] <= 0.0:
        pending.pop(0)
        if on_snapshot:
            on_snapshot(state)

    series.record_peak(state)
    _record(series, state, monitors)
    end_tol = 1e-12 * cfg.t_end

    while state.t < cfg.t_end - end_tol:
        limit = stability_limit(state, coeffs, cfg)
        if limit < cfg.dt_min:
            logger.info("Step size underflow at t=%g (stable dt %.3e < dt_min)", state.t, limit)
            state.status = Status.DT_UNDERFLOW
            break

        dt = min(limit, cfg.dt_max)
        next_stop = min([cfg.t_end] + pending)
        landing = next_stop - state.t <= dt + end_tol
        if landing:
            dt = next_stop - state.t

        try:
            state = step(state, coeffs, dt, cfg.scheme, solver)
        except StateDivergedError as e:
            logger.info("Run diverged: %s", e)
            state.status = Status.BLOWUP_SUSPECTED
            break
        except NonConvergenceError as e:
            logger.warning("Elliptic solve failed at t=%g: %s", state.t, e)
            state.status = Status.SOLVER_FAILED
            break
        if landing:
            state.t = next_stop

        series.record_peak(state)
        if state.step_index % cfg.record_every == 0:
            _record(series, state, monitors)

        while pending and pending[0] <= state.t + end_tol:
            pending.pop(0)
            if on_snapshot:
                on_snapshot(state)

        if state.u.max() >= u_cap:
            logger.info("max u = %.4g reached the cap %.4g at t=%g", state.u.max(), u_cap, state.t)
            state.status = Status.BLOWUP_SUSPECTED
            break

    if state.status is Status.RUNNING:
        state.status = Status.COMPLETED
    # final row always carries every monitor
    if series.rows and series.rows[-1]['step'] == state.step_index:
        series.rows.pop()
    _record(series, state, monitors, final=True)

    series.status = state.status
    logger.info("Run finished: %s at t=%g after %d steps", state.status.value, state.t, state.step_index)
    return state, series
