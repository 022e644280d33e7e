"""
Verdict Expectations - Check the blow-up verdict and the localization of the blow-up set
"""
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).parent.parent))

from expectations import BaseExpectation, ExpectationResult
from monitors import Verdict


class VerdictExpectation(BaseExpectation):
    """verdict: bounded | blowup_suspected | inconclusive"""

    name = 'verdict'

    def check(self, expected, evidence):
        try:
            wanted = Verdict(str(expected))
        except ValueError:
            raise ValueError(f"Unknown verdict '{expected}' (use {', '.join(v.value for v in Verdict)})")
        actual = evidence.report.verdict
        return ExpectationResult(
            self.name, expected, actual is wanted,
            details={'actual': actual.value, 't_max_estimate': evidence.report.t_max_estimate}
        )


class LocalizedExpectation(BaseExpectation):
    """localized: true means every blow-up cell lies in {mu <= eps_mu}."""

    name = 'localized'

    def check(self, expected, evidence):
        report = evidence.report
        details = {'mu_overlap': report.mu_overlap, 'eps_mu': report.eps_mu,
                   'blowup_area': report.blowup_area}
        if report.localized is None:
            return ExpectationResult(self.name, expected, False,
                                     error_message="No blow-up set: the run was not flagged as blowing up",
                                     details=details)
        return ExpectationResult(self.name, expected, report.localized == bool(expected), details=details)
