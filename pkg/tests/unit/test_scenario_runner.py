"""
Unit tests for ScenarioRunner and the command-line entry point.

Scenarios here run on 16x16 grids so each completes in well under a second of
simulated work; the bundled presets are exercised by the integration suite.
"""

import csv
import json
import math
import sys
from datetime import datetime
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest

# Add src directory to Python path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / "src"))

import stepper
from elliptic import NonConvergenceError
from expectations import ExpectationResult
from monitors import Verdict
from scenario_config import parse_config
from scenario_runner import (EXIT_BLOWUP, EXIT_ERROR, EXIT_INTERRUPTED, EXIT_MISMATCH, EXIT_OK, EXIT_USAGE,
                             ScenarioRunner, _times, chart_demo, exit_code_for, main, sweep, verify_cutoff_demo)
from snapshot_io import read_snapshot
from stepper import Status


GROWTH_TO_CAP = """
name: growth_to_cap
grid: {lx: 1.0, ly: 1.0, nx: 16, ny: 16}
initial: {type: constant, value: 2.0}
coefficients:
  kappa: {type: constant, value: 1.0}
  mu: {type: constant, value: 0.0}
stepper: {t_end: 2.0, u_cap: 2.5}
expect:
  verdict: blowup_suspected
  localized: true
"""


@pytest.fixture
def runner(tmp_path):
    return ScenarioRunner(base_dir=str(tmp_path), quiet=True)


@pytest.fixture
def bounded_config_text(minimal_config_text):
    return minimal_config_text + """
monitors:
  - kind: mass_l1
  - kind: u_inf_local
    point: [0.5, 0.5]
    radius: 0.2
    label: middle
output:
  snapshots: [0.05]
expect:
  verdict: bounded
  mass_bound: true
  max_u_plateau: true
  local_bounded: [uInfLocal_middle]
"""


class TestScenarioRunnerInitialization:
    """Runner setup."""

    def test_initialization_default_base_dir(self):
        runner = ScenarioRunner()
        assert runner.base_dir is not None
        assert runner.results_dir.name == "results"
        assert runner.run_id is None
        assert runner.run_dir is None

    def test_initialization_custom_base_dir(self, tmp_path):
        runner = ScenarioRunner(base_dir=str(tmp_path))
        assert runner.base_dir == tmp_path
        assert runner.results_dir == tmp_path / "results"


class TestLabelSanitization:
    """Folder-safe run labels."""

    @pytest.mark.parametrize("label, expected", [
        ("Blow-up in hole", "blow_up_in_hole"),
        ("damped.uniform v2", "damped_uniform_v2"),
        ("mu=0 / kappa=0!", "mu0_kappa0"),
        ("", "run"),
        ("   ", "run"),
        ("!!!", "run"),
    ])
    def test_sanitize(self, runner, label, expected):
        assert runner.sanitize_label(label) == expected

    def test_length_capped(self, runner):
        assert len(runner.sanitize_label("x" * 80)) == 50


class TestRunDirectories:
    """Run folder naming."""

    def test_format_duration(self, runner):
        assert runner._format_duration(5) == "5s"
        assert runner._format_duration(125) == "2m 5s"
        assert runner._format_duration(3725) == "1h 2m 5s"

    def test_collision_suffix(self, runner, tmp_path):
        with patch('scenario_runner.datetime') as mock_dt:
            mock_dt.now.return_value = datetime(2026, 3, 4, 5, 6, 7)
            first = runner.initialize_run("Case A", str(tmp_path / "out"))
            second = runner.initialize_run("Case A", str(tmp_path / "out"))
        assert first == "case_a_20260304_050607"
        assert second == "case_a_20260304_050607_2"
        assert (tmp_path / "out" / second).is_dir()


class TestExitCodes:
    """Outcome to exit-code mapping."""

    def test_bounded_ok(self):
        assert exit_code_for(Verdict.BOUNDED, []) == EXIT_OK

    def test_inconclusive_ok(self):
        assert exit_code_for(Verdict.INCONCLUSIVE, []) == EXIT_OK

    def test_blowup(self):
        assert exit_code_for(Verdict.BLOWUP_SUSPECTED, [ExpectationResult('verdict', 'x', True)]) == EXIT_BLOWUP

    def test_mismatch_beats_blowup(self):
        failed = ExpectationResult('verdict', 'bounded', False)
        assert exit_code_for(Verdict.BLOWUP_SUSPECTED, [failed]) == EXIT_MISMATCH

    def test_solver_failure_is_runtime_error(self):
        failed = ExpectationResult('verdict', 'bounded', False)
        assert exit_code_for(Verdict.INCONCLUSIVE, [failed], Status.SOLVER_FAILED) == EXIT_ERROR
        assert exit_code_for(Verdict.BOUNDED, [], Status.COMPLETED) == EXIT_OK


class TestRunScenario:
    """End-to-end runs on tiny grids."""

    def test_bounded_run_artifacts(self, runner, bounded_config_text, tmp_path):
        outcome = runner.run_scenario(parse_config(bounded_config_text), out_dir=str(tmp_path / "results"))
        assert outcome.exit_code == EXIT_OK, [e.to_dict() for e in outcome.expectations]
        assert outcome.status == 'completed'
        assert outcome.verdict == 'bounded'
        assert outcome.final_time == 0.1

        run_dir = outcome.run_dir
        for name in ('config.yaml', 'series.csv', 'blowup_report.json', 'run_summary.json',
                     'snapshots/u_final.snap', 'snapshots/v_final.snap',
                     'snapshots/u_t0.050000.snap', 'snapshots/v_t0.050000.snap'):
            assert (run_dir / name).exists(), name

        summary = json.loads((run_dir / 'run_summary.json').read_text())
        assert summary['scenario'] == 'scenario'
        assert summary['outcome']['expectations_passed'] is True
        report = json.loads((run_dir / 'blowup_report.json').read_text())
        assert report['verdict'] == 'bounded'
        assert report['blowup_cells'] == []

    def test_snapshot_override(self, runner, minimal_config_text, tmp_path):
        outcome = runner.run_scenario(parse_config(minimal_config_text), out_dir=str(tmp_path),
                                      snapshot_times=[0.02])
        assert (outcome.run_dir / 'snapshots' / 'u_t0.020000.snap').exists()

    def test_mismatch_exit_code(self, runner, minimal_config_text, tmp_path):
        config = parse_config(minimal_config_text + "expect:\n  verdict: blowup_suspected\n")
        outcome = runner.run_scenario(config, out_dir=str(tmp_path))
        assert outcome.exit_code == EXIT_MISMATCH
        assert not outcome.expectations_passed

    def test_cap_gives_blowup_exit_code(self, runner, tmp_path):
        outcome = runner.run_scenario(parse_config(GROWTH_TO_CAP), out_dir=str(tmp_path))
        assert outcome.status == 'blowup_suspected'
        assert outcome.exit_code == EXIT_BLOWUP
        assert outcome.final_time == pytest.approx(math.log(1.25), abs=0.01)
        report = json.loads((outcome.run_dir / 'blowup_report.json').read_text())
        assert report['localized'] is True
        assert report['blowup_cell_count'] == 256

    def test_certificates_written(self, runner, minimal_config_text, tmp_path):
        text = minimal_config_text + "monitors:\n  - kind: local_lp\n    p: 1.5\n    point: [0.5, 0.5]\n"
        outcome = runner.run_scenario(parse_config(text), out_dir=str(tmp_path))
        assert list(outcome.certificates) == ['localLp_p1.5_eta0.2']
        assert (outcome.run_dir / 'certificates' / 'localLp_p1.5_eta0.2.txt').exists()

        phi, time = read_snapshot(outcome.run_dir / 'certificates' / 'localLp_p1.5_eta0.2.snap')
        assert time == 0.0
        assert phi.grid.shape == (16, 16)
        assert phi.max() == 1.0
        assert phi.values.min() >= 0.0

    def test_final_fields_exported_as_csv(self, runner, minimal_config_text, tmp_path):
        outcome = runner.run_scenario(parse_config(minimal_config_text), out_dir=str(tmp_path))
        u_final, _ = read_snapshot(outcome.run_dir / 'snapshots' / 'u_final.snap')
        with open(outcome.run_dir / 'snapshots' / 'u_final.csv', newline='') as f:
            rows = list(csv.reader(f))
        assert rows[0] == ['i', 'j', 'x', 'y', 'value']
        assert len(rows) == 16 * 16 + 1
        values = np.array([float(r[4]) for r in rows[1:]]).reshape(16, 16)
        np.testing.assert_array_equal(values, u_final.values)
        assert (outcome.run_dir / 'snapshots' / 'v_final.csv').exists()

        summary = json.loads((outcome.run_dir / 'run_summary.json').read_text())
        assert summary['files_generated']['final_fields_csv'] == ['snapshots/u_final.csv', 'snapshots/v_final.csv']

    def test_failed_solve_keeps_partial_results(self, runner, minimal_config_text, tmp_path, mocker):
        real_step = stepper.step
        calls = []

        def flaky(state, *args, **kwargs):
            calls.append(state.t)
            if len(calls) > 2:
                raise NonConvergenceError("CG did not converge", 1e-4, 50)
            return real_step(state, *args, **kwargs)

        mocker.patch('stepper.step', side_effect=flaky)
        outcome = runner.run_scenario(parse_config(minimal_config_text), out_dir=str(tmp_path))
        assert outcome.status == 'solver_failed'
        assert outcome.verdict == 'inconclusive'
        assert outcome.exit_code == EXIT_ERROR
        assert outcome.steps == 2
        assert 0.0 < outcome.final_time < 0.1
        for name in ('series.csv', 'blowup_report.json', 'run_summary.json', 'snapshots/u_final.snap'):
            assert (outcome.run_dir / name).exists(), name


class TestDemos:
    """Verification demos."""

    def test_verify_cutoff_demo(self, tmp_path):
        code = verify_cutoff_demo(0.15, 0.35, [0.125, 0.25], resolution=64, out_dir=str(tmp_path), quiet=True)
        assert code == EXIT_OK
        assert (tmp_path / "cutoff_eta0.125.txt").exists()

        phi, _ = read_snapshot(tmp_path / "cutoff_eta0.25.snap")
        assert phi.grid.shape == (64, 64)
        assert phi.max() == 1.0
        i, j = phi.grid.cell_index(0.05, 0.05)
        assert phi.values[j, i] == 0.0

    @pytest.mark.parametrize("graph", ["linear", "sine", "parabola"])
    def test_chart_demo(self, graph):
        result = chart_demo(graph, quiet=True)
        assert result['passed'], result
        assert result['side_mismatches'] == 0

    def test_chart_demo_unknown_graph(self):
        with pytest.raises(ValueError):
            chart_demo("spiral", quiet=True)


class TestMain:
    """Command-line exit codes."""

    def test_unknown_preset_is_usage_error(self, capsys):
        assert main(['run', 'definitely_not_a_preset', '-q']) == EXIT_USAGE
        assert "Configuration error" in capsys.readouterr().out

    def test_bad_arguments(self):
        assert main(['frobnicate']) == EXIT_USAGE

    def test_help(self):
        assert main(['--help']) == EXIT_OK

    def test_run_config_file(self, minimal_config_text, write_config, tmp_path):
        path = write_config(minimal_config_text)
        assert main(['run', str(path), '--out', str(tmp_path / "runs"), '-q']) == EXIT_OK
        assert len(list((tmp_path / "runs").iterdir())) == 1

    def test_invalid_config_file(self, minimal_config_text, write_config):
        path = write_config(minimal_config_text.replace("  nx: 16", "  nx: 2"))
        assert main(['run', str(path), '-q']) == EXIT_USAGE

    def test_verify_cutoff_command(self):
        assert main(['verify-cutoff', '--resolution', '64', '-q']) == EXIT_OK

    def test_verify_cutoff_bad_radii(self):
        assert main(['verify-cutoff', '--k-radius', '0.4', '--v-radius', '0.2', '-q']) == EXIT_USAGE

    def test_chart_demo_command(self):
        assert main(['chart-demo', 'sine', '-q']) == EXIT_OK

    def test_runtime_error(self):
        with patch('scenario_runner.resolve_config', side_effect=OSError("disk full")):
            assert main(['run', 'damped_uniform', '-q']) == EXIT_ERROR

    def test_interrupted(self):
        with patch('scenario_runner.resolve_config', side_effect=KeyboardInterrupt):
            assert main(['run', 'damped_uniform', '-q']) == EXIT_INTERRUPTED

    def test_times_parsing(self):
        assert _times(None) is None
        assert _times("0, 0.5,pi") == pytest.approx([0.0, 0.5, math.pi])


class TestSweep:
    """Concurrent runs."""

    def test_worst_code_wins(self, minimal_config_text, write_config, tmp_path):
        path = write_config(minimal_config_text)
        code = sweep([str(path), 'definitely_not_a_preset'], out_dir=str(tmp_path), workers=2)
        assert code == EXIT_USAGE
        summaries = list(tmp_path.glob("sweep_*/sweep_summary.json"))
        assert len(summaries) == 1
        runs = json.loads(summaries[0].read_text())['runs']
        assert [r['exit_code'] for r in runs] == [EXIT_OK, EXIT_USAGE]
