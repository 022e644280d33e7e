"""
Scenario Runner - Execute chemotaxis scenarios and verification demos

Main command-line tool: runs presets or configuration files, writes snapshots,
time series, blow-up reports and cutoff certificates into a labelled results
folder, and maps the outcome to an exit code.
"""
import sys
import json
import math
import logging
import argparse
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from datetime import datetime
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import yaml

# Add src to path for imports
current_dir = Path(__file__).parent
sys.path.append(str(current_dir))

from cutoff import (Disc, PlateauSpec, boundary_chart, chart_plane_plateau, eta_zero_ratio,
                    mollified_plateau, pulled_back_normal_derivative, sharpen, verify_cutoff,
                    write_certificate)
from elliptic import NonConvergenceError
from expectations import ExpectationChecker, ExpectationResult, RunEvidence
from fields_grid import Grid, integrate
from monitors import Verdict, build_blowup_report, build_monitors
from scenario_config import (ConfigError, RunConfig, build_coefficients, build_initial, parse_number,
                             resolve_config)
from snapshot_io import export_csv, write_snapshot
from stepper import SimState, Status, run

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_BLOWUP = 3
EXIT_MISMATCH = 4
EXIT_INTERRUPTED = 130


@dataclass
class RunOutcome:
    """What a finished scenario produced."""
    run_id: str
    run_dir: Path
    status: str
    verdict: str
    exit_code: int
    duration: float
    final_time: float
    steps: int
    expectations: List[ExpectationResult] = field(default_factory=list)
    certificates: Dict[str, bool] = field(default_factory=dict)

    @property
    def expectations_passed(self) -> bool:
        return all(e.passed for e in self.expectations)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'run_id': self.run_id,
            'run_dir': str(self.run_dir),
            'status': self.status,
            'verdict': self.verdict,
            'exit_code': self.exit_code,
            'duration_seconds': self.duration,
            'final_time': self.final_time,
            'steps': self.steps,
            'expectations_passed': self.expectations_passed,
            'expectations': [e.to_dict() for e in self.expectations],
            'certificates': dict(self.certificates),
        }


def exit_code_for(verdict: Verdict, expectations: Sequence[ExpectationResult],
                  status: Optional[Status] = None) -> int:
    """A failed elliptic solve is a runtime error; mismatch beats blow-up; Bounded and Inconclusive runs exit 0."""
    if status is Status.SOLVER_FAILED:
        return EXIT_ERROR
    if any(not e.passed for e in expectations):
        return EXIT_MISMATCH
    if verdict is Verdict.BLOWUP_SUSPECTED:
        return EXIT_BLOWUP
    return EXIT_OK


class ScenarioRunner:
    """Main runner for chemotaxis scenarios."""

    def __init__(self, base_dir: str = None, quiet: bool = False):
        """
        Initialize scenario runner.

        Args:
            base_dir: Project directory (results/ lives below it)
            quiet: Suppress progress lines
        """
        if base_dir is None:
            base_dir = Path(__file__).parent.parent

        self.base_dir = Path(base_dir)
        self.results_dir = self.base_dir / "results"
        self.quiet = quiet

        # Run info
        self.run_id = None
        self.run_dir = None
        self.start_time = None

    def sanitize_label(self, label: str) -> str:
        """
        Sanitize a run label for folder names.

        Lowercase, spaces/hyphens/periods become underscores, other special
        characters are dropped, length is capped at 50; empty input gives "run".
        """
        import re

        if not label or not label.strip():
            return "run"

        sanitized = label.lower().replace(' ', '_').replace('-', '_').replace('.', '_')
        sanitized = re.sub(r'[^a-z0-9_]', '', sanitized)
        sanitized = re.sub(r'_+', '_', sanitized)
        sanitized = sanitized.strip('_')
        if len(sanitized) > 50:
            sanitized = sanitized[:50].rstrip('_')

        return sanitized or "run"

    def _get_timestamp_str(self) -> str:
        """Get current timestamp as formatted string for logging."""
        return datetime.now().strftime('%H:%M:%S')

    def _format_duration(self, seconds: float) -> str:
        """Format duration in seconds to human-readable string."""
        hours = int(seconds // 3600)
        minutes = int((seconds % 3600) // 60)
        secs = int(seconds % 60)

        if hours > 0:
            return f"{hours}h {minutes}m {secs}s"
        elif minutes > 0:
            return f"{minutes}m {secs}s"
        else:
            return f"{secs}s"

    def _say(self, message: str):
        if not self.quiet:
            print(f"[{self._get_timestamp_str()}] {message}")

    def initialize_run(self, label: str, out_dir: Optional[str] = None) -> str:
        """
        Create the results folder {label}_{timestamp} (suffixed on collision).

        Returns:
            Run ID
        """
        root = Path(out_dir) if out_dir else self.results_dir
        root.mkdir(parents=True, exist_ok=True)
        base_id = f"{self.sanitize_label(label)}_{datetime.now().strftime('%Y%m%d_%H%M%S')}"

        run_id, suffix = base_id, 1
        while True:
            try:
                (root / run_id).mkdir()
                break
            except FileExistsError:
                suffix += 1
                run_id = f"{base_id}_{suffix}"

        self.run_id = run_id
        self.run_dir = root / run_id
        return run_id

    def run_scenario(self, config: RunConfig, out_dir: Optional[str] = None,
                     snapshot_times: Optional[Sequence[float]] = None) -> RunOutcome:
        """
        Execute one scenario and write its artifacts.

        Args:
            config: Validated configuration
            out_dir: Results root (defaults to the config's output.dir relative to the project)
            snapshot_times: Overrides the configured snapshot times

        Returns:
            RunOutcome with the exit code
        """
        self.start_time = datetime.now()
        if out_dir is None:
            configured = Path(config.output.dir)
            out_dir = str(configured if configured.is_absolute() else self.base_dir / configured)
        run_id = self.initialize_run(config.output.label or config.name, out_dir)

        self._say(f"🆔 Run ID: {run_id}")
        self._say(f"📁 Run directory: {self.run_dir}")

        with open(self.run_dir / 'config.yaml', 'w', encoding='utf-8') as f:
            yaml.safe_dump(config.to_dict(), f, sort_keys=False)

        grid = config.grid.build()
        u0 = build_initial(config.initial, grid, config.seed)
        coeffs = build_coefficients(config, grid)
        self._say(f"🧮 Grid {grid.nx}x{grid.ny} on {grid.lx:g}x{grid.ly:g}, initial mass {integrate(u0):.6g}")

        monitor_set = build_monitors(config.monitors, coeffs.mu)
        certificates = self._write_certificates(monitor_set.cutoffs)

        snapshots_dir = self.run_dir / 'snapshots'
        times = list(config.output.snapshots if snapshot_times is None else snapshot_times)

        def on_snapshot(state: SimState):
            write_snapshot(snapshots_dir / f"u_t{state.t:.6f}.snap", state.u, state.t)
            write_snapshot(snapshots_dir / f"v_t{state.t:.6f}.snap", state.v, state.t)

        self._say(f"🚀 Running '{config.name}' to t_end={config.stepper.t_end:g} "
                  f"({len(monitor_set.monitors)} monitors, {len(times)} snapshot times)")
        state, series = run(u0, coeffs, config.stepper, monitor_set.monitors, times, on_snapshot)

        write_snapshot(snapshots_dir / "u_final.snap", state.u, state.t)
        write_snapshot(snapshots_dir / "v_final.snap", state.v, state.t)
        export_csv(snapshots_dir / "u_final.csv", state.u)
        export_csv(snapshots_dir / "v_final.csv", state.v)
        series.to_csv(self.run_dir / 'series.csv')
        self._say(f"💾 Saved time series ({len(series)} rows) and final snapshots")
        if state.status is Status.SOLVER_FAILED:
            self._say(f"⚠️  Elliptic solve failed at t={state.t:.6g}; results cover the run up to there")

        report = build_blowup_report(series, state.u, coeffs.mu, config.detection)
        with open(self.run_dir / 'blowup_report.json', 'w', encoding='utf-8') as f:
            json.dump(report.to_dict(), f, indent=2)
        self._say(f"🔎 Status {state.status.value}, verdict {report.verdict.value} at t={state.t:.6g}")
        if report.t_max_estimate is not None:
            self._say(f"⏱️  Heuristic blow-up time estimate: {report.t_max_estimate:.6g}")
        if report.localized is not None:
            self._say(f"📍 Blow-up set localized in {{mu <= {report.eps_mu:.3g}}}: {report.localized} "
                      f"(overlap {report.mu_overlap:.3f})")

        evidence = RunEvidence(series=series, report=report, mu=coeffs.mu, monitors=monitor_set)
        expectations = ExpectationChecker().check_all(config.expect, evidence)
        for result in expectations:
            mark = "✅" if result.passed else "❌"
            self._say(f"{mark} Expectation {result.expectation} = {result.expected!r}")

        duration = (datetime.now() - self.start_time).total_seconds()
        outcome = RunOutcome(
            run_id=run_id,
            run_dir=self.run_dir,
            status=state.status.value,
            verdict=report.verdict.value,
            exit_code=exit_code_for(report.verdict, expectations, state.status),
            duration=duration,
            final_time=state.t,
            steps=state.step_index,
            expectations=expectations,
            certificates=certificates,
        )
        self._generate_run_summary(config, outcome)
        self._say(f"🎉 Run finished in {self._format_duration(duration)} (exit code {outcome.exit_code})")
        return outcome

    def _write_certificates(self, cutoffs) -> Dict[str, bool]:
        results = {}
        for name, cut in cutoffs.items():
            report = verify_cutoff(cut)
            write_certificate(self.run_dir / 'certificates' / f"{name}.txt", report, cut)
            write_snapshot(self.run_dir / 'certificates' / f"{name}.snap", cut.phi, 0.0)
            results[name] = report.passed
            if not report.passed:
                logger.warning("Cutoff certificate for %s failed: %s", name, ", ".join(report.failures()))
        if results:
            self._say(f"📜 Wrote {len(results)} cutoff certificates "
                      f"({sum(results.values())} passed)")
        return results

    def _generate_run_summary(self, config: RunConfig, outcome: RunOutcome):
        """Generate and save the run summary."""
        summary = {
            'run_id': outcome.run_id,
            'timestamp': datetime.now().isoformat(),
            'scenario': config.name,
            'description': config.description,
            'source': config.source,
            'outcome': outcome.to_dict(),
            'files_generated': {
                'config': 'config.yaml',
                'series': 'series.csv',
                'report': 'blowup_report.json',
                'snapshots': 'snapshots/',
                'final_fields_csv': ['snapshots/u_final.csv', 'snapshots/v_final.csv'],
                'certificates': 'certificates/' if outcome.certificates else None,
            }
        }

        summary_file = self.run_dir / 'run_summary.json'
        with open(summary_file, 'w', encoding='utf-8') as f:
            json.dump(summary, f, indent=2)

        self._say(f"📄 Generated run summary: {summary_file}")


# --------------------------------------------------------------------------------
# Verification demos

def verify_cutoff_demo(k_radius: float, v_radius: float, etas: Sequence[float], resolution: int = 128,
                       size: float = 1.0, out_dir: Optional[str] = None, quiet: bool = False) -> int:
    """Disc-in-disc cutoffs in a square, certified for each eta; exit 0 iff all pass."""
    grid = Grid(size, size, resolution, resolution)
    center = (0.5 * size, 0.5 * size)
    spec = PlateauSpec(grid, Disc(center, k_radius), Disc(center, v_radius, closed=False))
    phi_tilde = mollified_plateau(spec)

    all_passed = True
    for eta in etas:
        cut = sharpen(phi_tilde, eta, spec=spec, center=center)
        report = verify_cutoff(cut)
        all_passed = all_passed and report.passed
        if not quiet:
            print(report.to_text())
        if out_dir:
            write_certificate(Path(out_dir) / f"cutoff_eta{eta:.4g}.txt", report, cut)
            write_snapshot(Path(out_dir) / f"cutoff_eta{eta:.4g}.snap", cut.phi, 0.0)
    if not quiet:
        print(f"eta = 0 ratio sup |grad phi|/phi on the plateau: {eta_zero_ratio(phi_tilde):.6g}")
    return EXIT_OK if all_passed else EXIT_MISMATCH


CHART_GRAPHS = {
    'linear': (lambda a: (lambda x: np.asarray(x) * 1.0, lambda x: np.ones_like(np.asarray(x, dtype=float)))),
    'sine': (lambda a: (lambda x: np.asarray(x) + a * np.sin(x), lambda x: 1.0 + a * np.cos(x))),
    'parabola': (lambda a: (lambda x: np.asarray(x) + a * np.asarray(x) ** 2, lambda x: 1.0 + 2.0 * a * np.asarray(x))),
}


def chart_demo(graph: str, amplitude: float = 0.2, samples: int = 100, seed: int = 0,
               quiet: bool = False) -> Dict[str, Any]:
    """
    Flattening chart for y = f(x) through the origin: normal derivatives of the chart,
    side classification, and the normal derivative of a pulled-back plateau.
    """
    if graph not in CHART_GRAPHS:
        raise ValueError(f"Unknown graph '{graph}' (use {', '.join(CHART_GRAPHS)})")
    f, f_prime = CHART_GRAPHS[graph](amplitude)
    chart = boundary_chart(f, f_prime, 0.0, 0.0)
    xs = np.linspace(-0.5 * chart.delta, 0.5 * chart.delta, samples)

    d1, d2 = [], []
    for x in xs:
        dn = chart.normal_derivative(float(x))
        d1.append(abs(dn[0]))
        d2.append(abs(dn[1] + math.sqrt(1.0 + float(f_prime(x)) ** 2)))

    rng = np.random.default_rng(seed)
    px = rng.uniform(-0.5 * chart.delta, 0.5 * chart.delta, samples)
    offsets = rng.uniform(-0.2, 0.2, samples)
    offsets[offsets == 0.0] = 0.1
    py = np.asarray(f(px)) + offsets
    mismatches = int(np.sum(chart.side(px, py) != np.sign(offsets)))

    plateau = chart_plane_plateau(0.1 * chart.delta, 0.3 * chart.delta)
    pulled = pulled_back_normal_derivative(plateau, chart, xs[::10])

    result = {
        'graph': graph,
        'amplitude': amplitude,
        'delta': chart.delta,
        'max_abs_dnu_phi1': float(max(d1)),
        'max_dnu_phi2_error': float(max(d2)),
        'side_mismatches': mismatches,
        'max_abs_dnu_pulled_back_plateau': float(np.max(np.abs(pulled))),
    }
    result['passed'] = (result['max_abs_dnu_phi1'] <= 1e-6 and result['max_dnu_phi2_error'] <= 1e-5
                        and mismatches == 0 and result['max_abs_dnu_pulled_back_plateau'] <= 1e-4)
    if not quiet:
        for key, value in result.items():
            print(f"{key:<32} {value}")
    return result


# --------------------------------------------------------------------------------
# Command line

def _run_one(target: str, out_dir: Optional[str], snapshot_times: Optional[List[float]], quiet: bool) -> Dict[str, Any]:
    """Sweep worker: one scenario in its own process; errors are reported, not raised."""
    try:
        outcome = ScenarioRunner(quiet=quiet).run_scenario(resolve_config(target), out_dir, snapshot_times)
        return {'target': target, **outcome.to_dict()}
    except ConfigError as e:
        return {'target': target, 'exit_code': EXIT_USAGE, 'error': str(e)}
    except Exception as e:
        return {'target': target, 'exit_code': EXIT_ERROR, 'error': f"{type(e).__name__}: {e}"}


def sweep(targets: Sequence[str], out_dir: Optional[str] = None, workers: int = 2,
          snapshot_times: Optional[List[float]] = None, quiet: bool = True) -> int:
    """Run several scenarios concurrently into one sweep folder; returns the worst exit code."""
    root = Path(out_dir) if out_dir else Path(__file__).parent.parent / "results"
    sweep_dir = root / f"sweep_{datetime.now().strftime('%Y%m%d_%H%M%S')}"
    sweep_dir.mkdir(parents=True, exist_ok=True)

    results = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_run_one, t, str(sweep_dir), snapshot_times, quiet): t for t in targets}
        for future in as_completed(futures):
            result = future.result()
            results.append(result)
            print(f"[{datetime.now().strftime('%H:%M:%S')}] 📦 {result['target']}: exit {result['exit_code']}")

    results.sort(key=lambda r: list(targets).index(r['target']))
    with open(sweep_dir / 'sweep_summary.json', 'w', encoding='utf-8') as f:
        json.dump({'timestamp': datetime.now().isoformat(), 'runs': results}, f, indent=2)

    codes = [r['exit_code'] for r in results]
    for code in (EXIT_ERROR, EXIT_USAGE, EXIT_MISMATCH, EXIT_BLOWUP):
        if code in codes:
            return code
    return EXIT_OK


def _times(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    return [parse_number(t.strip(), key='snapshots') for t in text.split(',') if t.strip()]


def _run_demo(args) -> int:
    """verify-cutoff and chart-demo; invalid parameters are usage errors."""
    try:
        if args.command == 'verify-cutoff':
            return verify_cutoff_demo(args.k_radius, args.v_radius, args.eta, args.resolution,
                                      args.size, args.out, args.quiet)
        result = chart_demo(args.graph, args.amplitude, args.samples, quiet=args.quiet)
        return EXIT_OK if result['passed'] else EXIT_MISMATCH
    except ValueError as e:
        print(f"\n❌ Invalid parameters: {e}")
        return EXIT_USAGE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Chemotaxis-growth scenario runner',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
Examples:
  python scenario_runner.py run damped_uniform                 # Run a preset
  python scenario_runner.py run my_config.yaml --out /tmp/runs # Run a configuration file
  python scenario_runner.py run blowup_in_hole --snapshots 0,0.01,0.02
  python scenario_runner.py verify-cutoff --k-radius 0.15 --v-radius 0.35 --eta 0.125 0.25
  python scenario_runner.py chart-demo sine --amplitude 0.2
  python scenario_runner.py sweep damped_uniform free_keller_segel --workers 2

Exit codes: 0 ok, 1 runtime/I-O error, 2 usage/config error, 3 blow-up suspected,
            4 expectation mismatch, 130 interrupted
'''
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--quiet', '-q', action='store_true', help='Suppress progress output')
    common.add_argument('--log-level', default='WARNING',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Library log level (default: WARNING)')
    sub = parser.add_subparsers(dest='command', required=True)

    p_run = sub.add_parser('run', parents=[common], help='Run a preset or configuration file')
    p_run.add_argument('target', help='Preset name or path to a YAML configuration')
    p_run.add_argument('--out', '-o', help='Results root folder (default: output.dir of the config)')
    p_run.add_argument('--snapshots', help='Comma-separated snapshot times, overriding the config')

    p_cut = sub.add_parser('verify-cutoff', parents=[common], help='Build and certify disc-in-disc cutoffs')
    p_cut.add_argument('--k-radius', type=float, default=0.15, help='Radius of K (default: 0.15)')
    p_cut.add_argument('--v-radius', type=float, default=0.35, help='Radius of V (default: 0.35)')
    p_cut.add_argument('--eta', type=float, nargs='+', default=[0.125, 1.0 / 6.0, 0.25],
                       help='Sharpening exponents (default: 1/8 1/6 1/4)')
    p_cut.add_argument('--resolution', type=int, default=128, help='Cells per axis (default: 128)')
    p_cut.add_argument('--size', type=float, default=1.0, help='Side of the square domain (default: 1)')
    p_cut.add_argument('--out', '-o', help='Folder for certificates and cutoff snapshots')

    p_chart = sub.add_parser('chart-demo', parents=[common], help='Check a boundary flattening chart')
    p_chart.add_argument('graph', choices=sorted(CHART_GRAPHS), help='Boundary graph y = f(x)')
    p_chart.add_argument('--amplitude', type=float, default=0.2, help='Perturbation amplitude (default: 0.2)')
    p_chart.add_argument('--samples', type=int, default=100, help='Boundary samples (default: 100)')

    p_sweep = sub.add_parser('sweep', parents=[common], help='Run several scenarios concurrently')
    p_sweep.add_argument('targets', nargs='+', help='Preset names or configuration paths')
    p_sweep.add_argument('--out', '-o', help='Results root folder (default: results/)')
    p_sweep.add_argument('--workers', '-w', type=int, default=2, help='Worker processes (default: 2)')
    p_sweep.add_argument('--snapshots', help='Comma-separated snapshot times for every run')
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Command-line interface; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK

    logging.basicConfig(level=getattr(logging, args.log_level),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    try:
        if args.command == 'run':
            outcome = ScenarioRunner(quiet=args.quiet).run_scenario(
                resolve_config(args.target), args.out, _times(args.snapshots))
            if not args.quiet:
                print(f"\n🎊 Results available at: {outcome.run_dir}")
            return outcome.exit_code
        if args.command in ('verify-cutoff', 'chart-demo'):
            return _run_demo(args)
        return sweep(args.targets, args.out, args.workers, _times(args.snapshots))

    except KeyboardInterrupt:
        print("\n⚠️  Run interrupted by user")
        return EXIT_INTERRUPTED

    except ConfigError as e:
        print(f"\n❌ Configuration error: {e}")
        return EXIT_USAGE

    except (ValueError, NonConvergenceError, OSError) as e:
        print(f"\n❌ Run failed: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
