#!/usr/bin/env python3
"""
Results Processing Script for Scenario Runs

Usage: python process_results.py <path_to_main_results_folder>

This script collects the run_summary.json files below a results folder (single
runs and sweep folders alike) and writes consolidated CSV tables of run
outcomes and of individual expectation checks.
"""

import os
import sys
import json
import csv


def load_run_summary(run_folder_path):
    """Load and parse the run_summary.json file from a run folder."""
    summary_file = os.path.join(run_folder_path, 'run_summary.json')

    if not os.path.exists(summary_file):
        return None

    try:
        with open(summary_file, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        print(f"Error parsing run_summary.json in {run_folder_path}: {e}")
        return None
    except OSError as e:
        print(f"Error reading run_summary.json in {run_folder_path}: {e}")
        return None


def create_consolidated_results_dir(main_results_folder):
    """Create the consolidated_results directory if it doesn't exist."""
    consolidated_dir = os.path.join(main_results_folder, 'consolidated_results')
    os.makedirs(consolidated_dir, exist_ok=True)
    return consolidated_dir


def process_all_run_folders(main_results_folder):
    """Walk the results tree and collect every run summary, sorted by run ID."""
    all_runs = []

    for root, dirs, files in os.walk(main_results_folder):
        # Skip our own output and snapshot payloads
        dirs[:] = [d for d in dirs if d not in ('consolidated_results', 'snapshots', 'certificates')]
        if 'run_summary.json' not in files:
            continue

        summary = load_run_summary(root)
        if summary is None:
            print(f"  ✗ Skipping {root} - could not load run_summary.json")
            continue

        all_runs.append({
            'run_id': summary.get('run_id', os.path.basename(root)),
            'run_folder_path': root,
            'summary': summary,
        })
        print(f"  ✓ Loaded {summary.get('run_id', root)}")

    all_runs.sort(key=lambda r: r['run_id'])
    return all_runs


def generate_outcomes_csv(all_runs, output_dir):
    """One row per run: scenario, status, verdict, exit code and timing."""
    csv_path = os.path.join(output_dir, 'outcomes.csv')

    with open(csv_path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(['Run_ID', 'Scenario', 'Timestamp', 'Status', 'Verdict', 'Exit_Code',
                         'Final_Time', 'Steps', 'Duration_Seconds', 'Expectations_Passed',
                         'Certificates_Passed', 'Certificates_Total'])

        for run in all_runs:
            summary = run['summary']
            outcome = summary.get('outcome', {})
            certificates = outcome.get('certificates', {})
            writer.writerow([
                run['run_id'],
                summary.get('scenario', 'N/A'),
                summary.get('timestamp', 'N/A'),
                outcome.get('status', 'N/A'),
                outcome.get('verdict', 'N/A'),
                outcome.get('exit_code', 'N/A'),
                outcome.get('final_time', 'N/A'),
                outcome.get('steps', 'N/A'),
                round(outcome.get('duration_seconds', 0.0), 2),
                outcome.get('expectations_passed', 'N/A'),
                sum(1 for passed in certificates.values() if passed),
                len(certificates),
            ])

    print(f"✓ Generated outcomes.csv")
    return csv_path


def generate_expectations_csv(all_runs, output_dir):
    """One row per expectation check across all runs."""
    csv_path = os.path.join(output_dir, 'expectations.csv')

    with open(csv_path, 'w', newline='', encoding='utf-8') as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(['Run_ID', 'Scenario', 'Expectation', 'Expected', 'Passed', 'Error_Message'])

        for run in all_runs:
            summary = run['summary']
            for result in summary.get('outcome', {}).get('expectations', []):
                writer.writerow([
                    run['run_id'],
                    summary.get('scenario', 'N/A'),
                    result.get('expectation'),
                    json.dumps(result.get('expected')),
                    result.get('passed'),
                    result.get('error_message') or '',
                ])

    print(f"✓ Generated expectations.csv")
    return csv_path


def main():
    """Main function to process all run folders and generate consolidated results."""
    if len(sys.argv) != 2:
        print("Usage: python process_results.py <path_to_main_results_folder>")
        sys.exit(1)

    main_results_folder = sys.argv[1]

    # Validate main results folder exists
    if not os.path.exists(main_results_folder):
        print(f"Error: Main results folder '{main_results_folder}' does not exist.")
        sys.exit(1)

    if not os.path.isdir(main_results_folder):
        print(f"Error: '{main_results_folder}' is not a directory.")
        sys.exit(1)

    print(f"Processing results from: {main_results_folder}")
    print("=" * 60)

    all_runs = process_all_run_folders(main_results_folder)

    if not all_runs:
        print("\nNo run summaries found. Exiting.")
        sys.exit(1)

    print(f"\nSuccessfully processed {len(all_runs)} run(s)")

    output_dir = create_consolidated_results_dir(main_results_folder)
    print(f"\nGenerating consolidated results in: {output_dir}")

    try:
        generate_outcomes_csv(all_runs, output_dir)
        generate_expectations_csv(all_runs, output_dir)

        print(f"\n✅ Processing complete! Check the consolidated_results folder for:")
        print(f"   - outcomes.csv")
        print(f"   - expectations.csv")

    except OSError as e:
        print(f"\n❌ Error generating consolidated CSV files: {e}")
        sys.exit(1)


if __name__ == "__main__":
    main()
