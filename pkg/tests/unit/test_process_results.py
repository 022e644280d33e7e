"""
Unit tests for the results consolidation script.
"""
import csv
import json
import sys
from pathlib import Path
from unittest.mock import patch

import pytest

project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

import process_results


def _write_summary(folder, run_id, scenario, verdict, exit_code, expectations):
    folder.mkdir(parents=True)
    summary = {
        'run_id': run_id,
        'timestamp': '2026-01-01T00:00:00',
        'scenario': scenario,
        'outcome': {
            'status': 'completed', 'verdict': verdict, 'exit_code': exit_code, 'final_time': 1.0,
            'steps': 10, 'duration_seconds': 0.5,
            'expectations_passed': all(e['passed'] for e in expectations),
            'expectations': expectations,
            'certificates': {'localLp_p1.5_eta0.2': True},
        },
    }
    (folder / 'run_summary.json').write_text(json.dumps(summary))


@pytest.fixture
def results_tree(temp_workspace):
    _write_summary(temp_workspace / "b_run", "b_run", "damped_uniform", "bounded", 0,
                   [{'expectation': 'verdict', 'expected': 'bounded', 'passed': True, 'error_message': None}])
    _write_summary(temp_workspace / "sweep_x" / "a_run", "a_run", "blowup_in_hole", "blowup_suspected", 4,
                   [{'expectation': 'localized', 'expected': True, 'passed': False, 'error_message': None},
                    {'expectation': 'mass_bound', 'expected': True, 'passed': True, 'error_message': None}])
    (temp_workspace / "empty_dir").mkdir()
    return temp_workspace


class TestProcessResults:
    """Consolidation of run summaries."""

    def test_collects_nested_runs_sorted(self, results_tree):
        runs = process_results.process_all_run_folders(str(results_tree))
        assert [r['run_id'] for r in runs] == ['a_run', 'b_run']

    def test_outcomes_csv(self, results_tree):
        runs = process_results.process_all_run_folders(str(results_tree))
        out = process_results.create_consolidated_results_dir(str(results_tree))
        with open(process_results.generate_outcomes_csv(runs, out), newline='') as f:
            rows = list(csv.DictReader(f))
        assert [r['Verdict'] for r in rows] == ['blowup_suspected', 'bounded']
        assert rows[0]['Exit_Code'] == '4'
        assert rows[1]['Certificates_Passed'] == '1'

    def test_expectations_csv(self, results_tree):
        runs = process_results.process_all_run_folders(str(results_tree))
        out = process_results.create_consolidated_results_dir(str(results_tree))
        with open(process_results.generate_expectations_csv(runs, out), newline='') as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 3
        assert rows[0]['Expectation'] == 'localized'
        assert rows[0]['Passed'] == 'False'
        assert rows[2]['Expected'] == '"bounded"'

    def test_consolidated_folder_is_skipped(self, results_tree):
        runs = process_results.process_all_run_folders(str(results_tree))
        out = process_results.create_consolidated_results_dir(str(results_tree))
        process_results.generate_outcomes_csv(runs, out)
        assert len(process_results.process_all_run_folders(str(results_tree))) == 2

    def test_main_requires_folder(self, temp_workspace):
        with patch.object(sys, 'argv', ['process_results.py', str(temp_workspace / "missing")]):
            with pytest.raises(SystemExit) as excinfo:
                process_results.main()
        assert excinfo.value.code == 1

    def test_main_writes_tables(self, results_tree, capsys):
        with patch.object(sys, 'argv', ['process_results.py', str(results_tree)]):
            process_results.main()
        assert (results_tree / 'consolidated_results' / 'outcomes.csv').exists()
        assert (results_tree / 'consolidated_results' / 'expectations.csv').exists()
        assert "Processing complete" in capsys.readouterr().out
