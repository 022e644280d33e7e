"""
Expectations module - declared scenario outcomes checked against a finished run
"""
import logging
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List

# Add src to path for imports
sys.path.append(str(Path(__file__).parent))

from fields_grid import Grid, ScalarField
from monitors import BlowupReport, MonitorSet, uniform_reference
from stepper import TimeSeries

logger = logging.getLogger(__name__)


class ExpectationResult:
    """Outcome of checking one declared expectation."""

    def __init__(self, expectation: str, expected: Any, passed: bool,
                 error_message: str = None, details: Dict[str, Any] = None):
        self.expectation = expectation
        self.expected = expected
        self.passed = passed
        self.error_message = error_message
        self.details = details or {}
        self.timestamp = datetime.now().isoformat()

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'expectation': self.expectation,
            'expected': self.expected,
            'passed': self.passed,
            'error_message': self.error_message,
            'details': self.details,
            'timestamp': self.timestamp
        }


@dataclass
class RunEvidence:
    """Everything a finished run leaves behind for the expectation checks."""
    series: TimeSeries
    report: BlowupReport
    mu: ScalarField
    monitors: MonitorSet

    @property
    def grid(self) -> Grid:
        return self.mu.grid

    @property
    def mean_u(self) -> float:
        """Density of the uniform state with the initial mass."""
        return self.series.initial_mass / self.grid.area

    def floor_for(self, column: str) -> float:
        """Uniform-state value of a monitor column."""
        return uniform_reference(self.monitors.get(column), self.grid, self.mean_u)


class BaseExpectation(ABC):
    """Abstract base class for all expectation types."""

    name: str = ""

    @abstractmethod
    def check(self, expected: Any, evidence: RunEvidence) -> ExpectationResult:
        """Compare the declared value with the run."""
        pass

    def _columns(self, expected: Any) -> List[str]:
        if isinstance(expected, str):
            return [expected]
        if not isinstance(expected, list) or not expected:
            raise ValueError(f"'{self.name}' expects a monitor column or a list of them, got {expected!r}")
        return [str(c) for c in expected]


class ExpectationChecker:
    """Checks declared expectations with the registered expectation types."""

    def __init__(self):
        self.expectation_types: Dict[str, BaseExpectation] = {}
        self._register_expectation_types()

    def _register_expectation_types(self):
        """Register all available expectation type implementations."""
        from expectation_types.verdict import VerdictExpectation, LocalizedExpectation
        from expectation_types.local_bounds import (LocalBoundedExpectation, LocallyUnboundedExpectation,
                                                    RunningMedianExpectation)
        from expectation_types.mass import MassBoundExpectation, MaxUPlateauExpectation

        for expectation in (VerdictExpectation(), LocalizedExpectation(), LocalBoundedExpectation(),
                            LocallyUnboundedExpectation(), RunningMedianExpectation(),
                            MassBoundExpectation(), MaxUPlateauExpectation()):
            self.expectation_types[expectation.name] = expectation

    def check_one(self, name: str, expected: Any, evidence: RunEvidence) -> ExpectationResult:
        """Check a single expectation; errors become failed results."""
        if name not in self.expectation_types:
            return ExpectationResult(name, expected, False, error_message=f"Unknown expectation type: {name}")
        try:
            return self.expectation_types[name].check(expected, evidence)
        except (KeyError, ValueError) as e:
            return ExpectationResult(name, expected, False, error_message=f"Expectation error: {e}")

    def check_all(self, expect: Dict[str, Any], evidence: RunEvidence) -> List[ExpectationResult]:
        results = [self.check_one(name, expected, evidence) for name, expected in expect.items()]
        for result in results:
            if not result.passed:
                logger.info("Expectation '%s' failed: %s", result.expectation,
                            result.error_message or result.details)
        return results
