"""
Local Bound Expectations - Plateau and running-median tests on monitor columns

Each column is compared with 10x a reference value floored by the monitor's
value on the uniform state of equal mass.
"""
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).parent.parent))

from expectations import BaseExpectation, ExpectationResult
from monitors import check_local_boundedness, check_running_median


class _PlateauExpectation(BaseExpectation):
    want_bounded = True

    def check(self, expected, evidence):
        times = evidence.series.column('t')
        per_column = {}
        passed = True
        for column in self._columns(expected):
            values = evidence.series.column(column)
            floor = evidence.floor_for(column)
            bounded = check_local_boundedness(values, times, floor=floor)
            per_column[column] = {'bounded': bounded, 'max': float(np.nanmax(values)), 'floor': floor}
            passed = passed and bounded == self.want_bounded
        return ExpectationResult(self.name, expected, passed, details={'columns': per_column})


class LocalBoundedExpectation(_PlateauExpectation):
    """local_bounded: [columns] whose values stay below 10x their early value."""

    name = 'local_bounded'
    want_bounded = True


class LocallyUnboundedExpectation(_PlateauExpectation):
    """locally_unbounded: [columns] that must break the plateau test."""

    name = 'locally_unbounded'
    want_bounded = False


class RunningMedianExpectation(BaseExpectation):
    """running_median: [columns] that stay below 10x their running median."""

    name = 'running_median'

    def check(self, expected, evidence):
        per_column = {}
        passed = True
        for column in self._columns(expected):
            floor = evidence.floor_for(column)
            ok = check_running_median(evidence.series.column(column), factor=10.0, floor=floor)
            per_column[column] = {'passed': ok, 'floor': floor}
            passed = passed and ok
        return ExpectationResult(self.name, expected, passed, details={'columns': per_column})
