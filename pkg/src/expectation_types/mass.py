"""
Mass Expectations - Mass comparison bound and the max u plateau of bounded runs
"""
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).parent.parent))

from expectations import BaseExpectation, ExpectationResult
from stepper import Status

MASS_SLACK = 1e-4
PLATEAU_NOISE = 0.01


def mass_bound_violation(series) -> float:
    """Largest relative excess of mass(t) over m0 * exp(t * max kappa+) * (1 + 1e-4); <= 0 when it holds."""
    t = series.column('t')
    mass = series.column('mass')
    bound = series.initial_mass * np.exp(t * series.kappa_plus_max) * (1.0 + MASS_SLACK)
    if series.initial_mass <= 0.0:
        return float(np.max(mass))
    return float(np.max((mass - bound) / bound))


def last_decile_trend(series) -> float:
    """Least-squares change of max u over the last tenth of the recorded time, relative to its mean there."""
    t = series.column('t')
    max_u = series.column('max_u')
    start = t[0] + 0.9 * (t[-1] - t[0])
    tail = t >= start
    if tail.sum() < 2:
        return 0.0
    slope, _ = np.polyfit(t[tail], max_u[tail], 1)
    span = float(t[tail][-1] - t[tail][0])
    return float(slope * span / np.mean(max_u[tail]))


class MassBoundExpectation(BaseExpectation):
    """mass_bound: true means integral u(t) <= integral u0 * e^(t max kappa+) throughout."""

    name = 'mass_bound'

    def check(self, expected, evidence):
        excess = mass_bound_violation(evidence.series)
        holds = excess <= 0.0
        return ExpectationResult(self.name, expected, holds == bool(expected),
                                 details={'max_relative_excess': excess})


class MaxUPlateauExpectation(BaseExpectation):
    """max_u_plateau: true means the run completed and max u is not rising over its last decile."""

    name = 'max_u_plateau'

    def check(self, expected, evidence):
        series = evidence.series
        trend = last_decile_trend(series)
        plateau = series.status is Status.COMPLETED and trend <= PLATEAU_NOISE
        return ExpectationResult(self.name, expected, plateau == bool(expected),
                                 details={'relative_trend': trend, 'status': series.status.value})
