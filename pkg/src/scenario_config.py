"""
Scenario Config - YAML run configurations, presets, and the fields they describe

Handles loading and validation of run configurations into RunConfig objects and
builds the initial density and coefficient fields from them.
"""
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import yaml

from fields_grid import Grid, ScalarField, build_grid, integrate
from monitors import DetectionConfig, MonitorKind, MonitorSpec
from snapshot_io import read_snapshot
from elliptic import EllipticSolveConfig
from stepper import Coefficients, StepperConfig, TimeScheme

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent.parent / "config" / "presets"

EXPECTATION_KEYS = ('verdict', 'localized', 'local_bounded', 'locally_unbounded',
                    'running_median', 'mass_bound', 'max_u_plateau')

_PI_PATTERN = re.compile(r'^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi\s*$')


class ConfigError(ValueError):
    """Configuration error, prefixed with the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# --------------------------------------------------------------------------------
# YAML loading with line numbers

class _LineMap(dict):
    """Mapping that remembers the line of each key and of the mapping itself."""
    line: int = None
    key_lines: Dict[str, int] = None

    def line_of(self, key: str) -> Optional[int]:
        return self.key_lines.get(key, self.line) if self.key_lines else self.line


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    mapping = _LineMap(loader.construct_mapping(node, deep=True))
    mapping.line = node.start_mark.line + 1
    mapping.key_lines = {str(k.value): k.start_mark.line + 1 for k, v in node.value}
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _load_yaml(text: str) -> _LineMap:
    try:
        data = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ConfigError(f"Invalid YAML: {e}", mark.line + 1 if mark else None)
    if not isinstance(data, dict):
        raise ConfigError("Configuration must be a YAML mapping", 1)
    return data


# --------------------------------------------------------------------------------
# Value helpers

def _section(data: _LineMap, key: str, allowed: Tuple[str, ...], required: bool = False) -> _LineMap:
    """Fetch a sub-mapping and reject unknown keys in it."""
    if key not in data or data[key] is None:
        if required:
            raise ConfigError(f"Missing required section '{key}'", data.line)
        empty = _LineMap()
        empty.line, empty.key_lines = data.line_of(key), {}
        return empty
    section = data[key]
    if not isinstance(section, dict):
        raise ConfigError(f"Section '{key}' must be a mapping", data.line_of(key))
    _reject_unknown(section, allowed, key)
    return section


def _reject_unknown(mapping: _LineMap, allowed: Tuple[str, ...], where: str):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"Unknown key '{key}' in {where} (allowed: {', '.join(allowed)})",
                              mapping.line_of(key))


def parse_number(value: Any, line: Optional[int] = None, key: str = "value") -> float:
    """Float from a YAML scalar; accepts '1e-10' style strings and multiples of pi ('12pi')."""
    if isinstance(value, bool) or value is None:
        raise ConfigError(f"'{key}' must be a number, got {value!r}", line)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        match = _PI_PATTERN.match(value)
        if match:
            return float(match.group(1) or 1.0) * math.pi
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"'{key}' must be a number, got {value!r}", line)


def _number(mapping: _LineMap, key: str, default: Any = ..., minimum: Optional[float] = None,
            positive: bool = False) -> Optional[float]:
    if key not in mapping or mapping[key] is None:
        if default is ...:
            raise ConfigError(f"Missing required key '{key}'", mapping.line)
        return default
    line = mapping.line_of(key)
    value = parse_number(mapping[key], line, key)
    if not math.isfinite(value):
        raise ConfigError(f"'{key}' must be finite, got {value}", line)
    if positive and not value > 0.0:
        raise ConfigError(f"'{key}' must be positive, got {value}", line)
    if minimum is not None and value < minimum:
        raise ConfigError(f"'{key}' must be >= {minimum}, got {value}", line)
    return value


def _integer(mapping: _LineMap, key: str, default: Any = ...) -> Optional[int]:
    value = _number(mapping, key, default)
    if value is None:
        return None
    if value != int(value):
        raise ConfigError(f"'{key}' must be an integer, got {value}", mapping.line_of(key))
    return int(value)


def _point(mapping: _LineMap, key: str, default: Any = ...) -> Optional[Tuple[float, float]]:
    if key not in mapping or mapping[key] is None:
        if default is ...:
            raise ConfigError(f"Missing required key '{key}'", mapping.line)
        return default
    line = mapping.line_of(key)
    value = mapping[key]
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"'{key}' must be a pair [x, y], got {value!r}", line)
    return (parse_number(value[0], line, key), parse_number(value[1], line, key))


def _validated(line: Optional[int], factory, *args, **kwargs):
    """Construct a dataclass and attach the config line to its ValueError."""
    try:
        return factory(*args, **kwargs)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e), line)


# --------------------------------------------------------------------------------
# Specs

@dataclass
class GridSpec:
    lx: float
    ly: float
    nx: int
    ny: int

    def __post_init__(self):
        self.build()

    def build(self) -> Grid:
        return build_grid(self.lx, self.ly, self.nx, self.ny)

    def to_dict(self) -> Dict[str, Any]:
        return {'lx': self.lx, 'ly': self.ly, 'nx': self.nx, 'ny': self.ny}


@dataclass
class GaussianBump:
    """exp(-|x - center|^2 / (2 width^2)), scaled to the requested mass on the grid."""
    center: Tuple[float, float]
    width: float
    mass: float

    def __post_init__(self):
        if not self.width > 0.0:
            raise ValueError(f"Gaussian width must be positive, got {self.width}")
        if self.mass < 0.0:
            raise ValueError(f"Gaussian mass must be nonnegative, got {self.mass}")


@dataclass
class InitialSpec:
    """Initial density: Gaussian bumps, a constant, or a snapshot file."""
    kind: str
    bumps: List[GaussianBump] = field(default_factory=list)
    value: Optional[float] = None
    mass: Optional[float] = None
    path: Optional[str] = None
    perturbation: float = 0.0

    def __post_init__(self):
        if self.kind not in ('gaussian', 'constant', 'file'):
            raise ValueError(f"Unknown initial condition type '{self.kind}'")
        if self.kind == 'gaussian' and not self.bumps:
            raise ValueError("Gaussian initial condition needs at least one bump")
        if self.kind == 'constant':
            if (self.value is None) == (self.mass is None):
                raise ValueError("Constant initial condition needs exactly one of 'value' or 'mass'")
            if (self.value if self.value is not None else self.mass) < 0.0:
                raise ValueError("Constant initial condition must be nonnegative")
        if self.kind == 'file' and not self.path:
            raise ValueError("File initial condition needs 'path'")
        if not (0.0 <= self.perturbation <= 1.0):
            raise ValueError(f"Perturbation amplitude must lie in [0, 1], got {self.perturbation}")

    def to_dict(self) -> Dict[str, Any]:
        result = {'type': self.kind}
        if self.bumps:
            result['bumps'] = [{'center': list(b.center), 'width': b.width, 'mass': b.mass} for b in self.bumps]
        for key in ('value', 'mass', 'path'):
            if getattr(self, key) is not None:
                result[key] = getattr(self, key)
        if self.perturbation:
            result['perturbation'] = self.perturbation
        return result


@dataclass
class CoefficientSpec:
    """
    Coefficient field: constant, radial_ramp, half_plane, or file.

    radial_ramp goes from `inner` (r <= r_inner) to `outer` (r >= r_outer) around
    `center`; half_plane goes from `inner` (x <= x0 - width/2) to `outer`
    (x >= x0 + width/2). Both use the quintic C2 smoothstep.
    """
    kind: str
    value: Optional[float] = None
    inner: Optional[float] = None
    outer: Optional[float] = None
    center: Optional[Tuple[float, float]] = None
    r_inner: Optional[float] = None
    r_outer: Optional[float] = None
    x0: Optional[float] = None
    width: Optional[float] = None
    path: Optional[str] = None

    def __post_init__(self):
        if self.kind == 'constant':
            if self.value is None:
                raise ValueError("Constant coefficient needs 'value'")
        elif self.kind == 'radial_ramp':
            if None in (self.inner, self.outer, self.center, self.r_inner, self.r_outer):
                raise ValueError("radial_ramp needs inner, outer, center, r_inner and r_outer")
            if not (0.0 <= self.r_inner < self.r_outer):
                raise ValueError(f"radial_ramp needs 0 <= r_inner < r_outer, got {self.r_inner}, {self.r_outer}")
        elif self.kind == 'half_plane':
            if None in (self.inner, self.outer, self.x0, self.width):
                raise ValueError("half_plane needs inner, outer, x0 and width")
            if not self.width > 0.0:
                raise ValueError(f"half_plane width must be positive, got {self.width}")
        elif self.kind == 'file':
            if not self.path:
                raise ValueError("File coefficient needs 'path'")
        else:
            raise ValueError(f"Unknown coefficient type '{self.kind}'")

    def lower_bound(self) -> Optional[float]:
        """Analytic minimum over the domain (None for files)."""
        if self.kind == 'constant':
            return self.value
        if self.kind in ('radial_ramp', 'half_plane'):
            return min(self.inner, self.outer)
        return None

    def to_dict(self) -> Dict[str, Any]:
        result = {'type': self.kind}
        for key in ('value', 'inner', 'outer', 'center', 'r_inner', 'r_outer', 'x0', 'width', 'path'):
            value = getattr(self, key)
            if value is not None:
                result[key] = list(value) if key == 'center' else value
        return result


@dataclass
class OutputSpec:
    dir: str = "results"
    label: Optional[str] = None
    snapshots: List[float] = field(default_factory=list)
    cadence: int = 1

    def __post_init__(self):
        if self.cadence < 1:
            raise ValueError(f"Output cadence must be at least 1, got {self.cadence}")
        if any(t < 0.0 for t in self.snapshots):
            raise ValueError("Snapshot times must be nonnegative")

    def to_dict(self) -> Dict[str, Any]:
        return {'dir': self.dir, 'label': self.label, 'snapshots': list(self.snapshots), 'cadence': self.cadence}


@dataclass
class RunConfig:
    """A validated scenario."""
    name: str
    grid: GridSpec
    initial: InitialSpec
    kappa: CoefficientSpec
    mu: CoefficientSpec
    stepper: StepperConfig
    description: str = ""
    monitors: List[MonitorSpec] = field(default_factory=list)
    detection: DetectionConfig = field(default_factory=DetectionConfig)
    output: OutputSpec = field(default_factory=OutputSpec)
    expect: Dict[str, Any] = field(default_factory=dict)
    seed: Optional[int] = None
    source: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'description': self.description,
            'grid': self.grid.to_dict(),
            'initial': self.initial.to_dict(),
            'coefficients': {'kappa': self.kappa.to_dict(), 'mu': self.mu.to_dict()},
            'stepper': self.stepper.to_dict(),
            'monitors': [m.to_dict() for m in self.monitors],
            'detection': self.detection.to_dict(),
            'output': self.output.to_dict(),
            'expect': dict(self.expect),
            'seed': self.seed,
            'source': self.source,
        }


# --------------------------------------------------------------------------------
# Parsing

_TOP_KEYS = ('name', 'description', 'grid', 'initial', 'coefficients', 'stepper', 'elliptic',
             'monitors', 'detection', 'output', 'expect', 'seed')
_MONITOR_KEYS = ('kind', 'cadence', 'p', 'q', 'point', 'radius', 'mu0', 'eta', 'label', 'derive')
_COEFFICIENT_KEYS = ('type', 'value', 'inner', 'outer', 'center', 'r_inner', 'r_outer', 'x0', 'width', 'path')


def _parse_grid(data: _LineMap) -> GridSpec:
    s = _section(data, 'grid', ('lx', 'ly', 'nx', 'ny'), required=True)
    return _validated(s.line, GridSpec, _number(s, 'lx', positive=True), _number(s, 'ly', positive=True),
                      _integer(s, 'nx'), _integer(s, 'ny'))


def _field_path(s: _LineMap, base_dir: Optional[Path], what: str) -> Optional[str]:
    """'path' of a file-backed field, resolved against base_dir and required to exist."""
    path = s.get('path')
    if path is None or s.get('type') != 'file':
        return path
    resolved = Path(path)
    if base_dir is not None and not resolved.is_absolute():
        resolved = Path(base_dir) / resolved
    if not resolved.is_file():
        raise ConfigError(f"{what} file not found: {resolved}", s.line_of('path'))
    return str(resolved)


def _parse_initial(data: _LineMap, base_dir: Optional[Path] = None) -> InitialSpec:
    s = _section(data, 'initial', ('type', 'bumps', 'value', 'mass', 'path', 'perturbation'), required=True)
    kind = s.get('type', 'gaussian')
    bumps = []
    for item in s.get('bumps') or []:
        if not isinstance(item, dict):
            raise ConfigError("Each Gaussian bump must be a mapping", s.line_of('bumps'))
        _reject_unknown(item, ('center', 'width', 'mass'), 'initial.bumps')
        bumps.append(_validated(item.line, GaussianBump, _point(item, 'center'),
                                _number(item, 'width'), _number(item, 'mass')))
    return _validated(s.line, InitialSpec, kind, bumps, _number(s, 'value', None), _number(s, 'mass', None),
                      _field_path(s, base_dir, "Initial condition"), _number(s, 'perturbation', 0.0))


def _parse_coefficient(coeffs: _LineMap, key: str, base_dir: Optional[Path] = None) -> CoefficientSpec:
    s = _section(coeffs, key, _COEFFICIENT_KEYS, required=True)
    spec = _validated(s.line, CoefficientSpec, s.get('type', 'constant'),
                      value=_number(s, 'value', None), inner=_number(s, 'inner', None),
                      outer=_number(s, 'outer', None), center=_point(s, 'center', None),
                      r_inner=_number(s, 'r_inner', None), r_outer=_number(s, 'r_outer', None),
                      x0=_number(s, 'x0', None), width=_number(s, 'width', None),
                      path=_field_path(s, base_dir, f"Coefficient '{key}'"))
    if key == 'mu':
        low = spec.lower_bound()
        if low is not None and low < 0.0:
            raise ConfigError(f"mu must be >= 0 everywhere, got minimum {low}", s.line)
    return spec


def _parse_stepper(data: _LineMap, output: OutputSpec) -> StepperConfig:
    s = _section(data, 'stepper', ('t_end', 'cfl_safety', 'dt_min', 'dt_max', 'u_cap', 'scheme'), required=True)
    e = _section(data, 'elliptic', ('tol', 'max_iter'))
    elliptic = _validated(e.line, EllipticSolveConfig, tol=_number(e, 'tol', 1e-10),
                          max_iter=_integer(e, 'max_iter', None))
    scheme = s.get('scheme', TimeScheme.PATANKAR.value)
    try:
        scheme = TimeScheme(scheme)
    except ValueError:
        raise ConfigError(f"Unknown scheme '{scheme}' (use 'patankar' or 'explicit')", s.line_of('scheme'))
    return _validated(s.line, StepperConfig, t_end=_number(s, 't_end', positive=True),
                      cfl_safety=_number(s, 'cfl_safety', 0.2), dt_min=_number(s, 'dt_min', 1e-10),
                      dt_max=_number(s, 'dt_max', 1e-2), u_cap=_number(s, 'u_cap', None),
                      scheme=scheme, record_every=output.cadence, elliptic=elliptic)


def _parse_monitors(data: _LineMap) -> List[MonitorSpec]:
    items = data.get('monitors') or []
    if not isinstance(items, list):
        raise ConfigError("'monitors' must be a list", data.line_of('monitors'))
    specs = []
    for item in items:
        if not isinstance(item, dict):
            raise ConfigError("Each monitor must be a mapping", data.line_of('monitors'))
        _reject_unknown(item, _MONITOR_KEYS, 'monitors')
        kind = item.get('kind')
        try:
            kind = MonitorKind(kind)
        except ValueError:
            raise ConfigError(f"Unknown monitor kind '{kind}'", item.line_of('kind'))
        specs.append(_validated(
            item.line, MonitorSpec, kind, cadence=_integer(item, 'cadence', 1),
            p=_number(item, 'p', None), q=_number(item, 'q', None), point=_point(item, 'point', None),
            radius=_number(item, 'radius', None), mu0=_number(item, 'mu0', None),
            eta=_number(item, 'eta', None), label=item.get('label'), derive=bool(item.get('derive', False))))
    return specs


def _parse_detection(data: _LineMap) -> DetectionConfig:
    s = _section(data, 'detection', ('k', 'growth_factor', 'blowup_fraction', 'history_fraction',
                                     'eps_mu_fraction', 'eps_mu'))
    return _validated(s.line, DetectionConfig, k=_integer(s, 'k', 20),
                      growth_factor=_number(s, 'growth_factor', 100.0),
                      blowup_fraction=_number(s, 'blowup_fraction', 0.5),
                      history_fraction=_number(s, 'history_fraction', 0.1),
                      eps_mu_fraction=_number(s, 'eps_mu_fraction', 0.05),
                      eps_mu=_number(s, 'eps_mu', None))


def _parse_output(data: _LineMap) -> OutputSpec:
    s = _section(data, 'output', ('dir', 'label', 'snapshots', 'cadence'))
    snapshots = s.get('snapshots') or []
    if not isinstance(snapshots, list):
        raise ConfigError("'snapshots' must be a list of times", s.line_of('snapshots'))
    times = [parse_number(t, s.line_of('snapshots'), 'snapshots') for t in snapshots]
    return _validated(s.line, OutputSpec, dir=str(s.get('dir', 'results')), label=s.get('label'),
                      snapshots=times, cadence=_integer(s, 'cadence', 1))


def _parse_expect(data: _LineMap) -> Dict[str, Any]:
    s = _section(data, 'expect', EXPECTATION_KEYS)
    return {key: s[key] for key in s}


def parse_config(text: str, source: Optional[str] = None, base_dir: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Parse and validate a YAML run configuration.

    Args:
        text: YAML document
        source: Where the text came from (recorded in the config)
        base_dir: Folder that relative field file paths resolve against (default: working directory)

    Returns:
        RunConfig with defaults filled

    Raises:
        ConfigError: on invalid YAML, unknown keys, invalid values, or missing field files
    """
    data = _load_yaml(text)
    _reject_unknown(data, _TOP_KEYS, 'configuration')

    coeffs = _section(data, 'coefficients', ('kappa', 'mu'), required=True)
    output = _parse_output(data)
    seed = _integer(data, 'seed', None)
    name = str(data.get('name') or (Path(source).stem if source else 'scenario'))

    config = RunConfig(
        name=name,
        description=str(data.get('description') or ""),
        grid=_parse_grid(data),
        initial=_parse_initial(data, base_dir),
        kappa=_parse_coefficient(coeffs, 'kappa', base_dir),
        mu=_parse_coefficient(coeffs, 'mu', base_dir),
        stepper=_parse_stepper(data, output),
        monitors=_parse_monitors(data),
        detection=_parse_detection(data),
        output=output,
        expect=_parse_expect(data),
        seed=seed,
        source=source,
    )
    logger.debug("Parsed configuration '%s' (%d monitors)", config.name, len(config.monitors))
    return config


def parse_file(file_path: str) -> RunConfig:
    """Parse a configuration file; relative file paths inside it resolve against its folder."""
    path = Path(file_path)
    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {file_path}")
    return parse_config(path.read_text(encoding='utf-8'), source=str(path), base_dir=path.parent)


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def resolve_config(name_or_path: str) -> RunConfig:
    """
    Load a preset by name or a configuration by path.

    Raises:
        ConfigError: if it is neither an existing file nor a known preset
    """
    path = Path(name_or_path)
    if path.suffix in ('.yaml', '.yml') or path.exists():
        if not path.exists():
            raise ConfigError(f"Configuration file not found: {name_or_path}")
        return parse_file(str(path))
    preset = PRESET_DIR / f"{name_or_path}.yaml"
    if not preset.exists():
        raise ConfigError(f"Unknown preset '{name_or_path}' (available: {', '.join(list_presets())})")
    return parse_file(str(preset))


# --------------------------------------------------------------------------------
# Field construction

def smoothstep(s):
    """Quintic C2 smoothstep 6s^5 - 15s^4 + 10s^3 on [0, 1], clamped outside."""
    s = np.clip(np.asarray(s, dtype=np.float64), 0.0, 1.0)
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def _load_field(path: str, grid: Grid, what: str) -> ScalarField:
    loaded, _ = read_snapshot(path)
    g = loaded.grid
    if (g.nx, g.ny) != (grid.nx, grid.ny) or not (math.isclose(g.lx, grid.lx) and math.isclose(g.ly, grid.ly)):
        raise ValueError(f"{what} file {path} has grid {g.nx}x{g.ny} on {g.lx}x{g.ly}, "
                         f"expected {grid.nx}x{grid.ny} on {grid.lx}x{grid.ly}")
    return ScalarField(grid, loaded.values)


def build_initial(spec: InitialSpec, grid: Grid, seed: Optional[int] = None) -> ScalarField:
    """
    Initial density on a grid.

    Each Gaussian bump is scaled so its discrete integral equals its mass exactly;
    a perturbation multiplies by 1 + a*U(-1, 1) using default_rng(seed).
    """
    if spec.kind == 'gaussian':
        X, Y = grid.cell_centers()
        values = np.zeros(grid.shape)
        for bump in spec.bumps:
            if bump.mass < 0.0:
                raise ValueError(f"Gaussian mass must be nonnegative, got {bump.mass}")
            r2 = (X - bump.center[0]) ** 2 + (Y - bump.center[1]) ** 2
            profile = np.exp(-r2 / (2.0 * bump.width ** 2))
            total = float(profile.sum()) * grid.cell_area
            if bump.mass > 0.0 and not total > 0.0:
                raise ValueError(f"Gaussian bump at {bump.center} has no mass on the grid")
            if bump.mass > 0.0:
                values += profile * (bump.mass / total)
        u0 = ScalarField(grid, values)
    elif spec.kind == 'constant':
        value = spec.value if spec.value is not None else spec.mass / grid.area
        if value < 0.0:
            raise ValueError(f"Initial density must be nonnegative, got {value}")
        u0 = ScalarField.constant(grid, value)
    else:
        u0 = _load_field(spec.path, grid, "Initial condition")
        if u0.min() < 0.0:
            raise ValueError(f"Initial condition file {spec.path} has negative values")

    if spec.perturbation > 0.0:
        rng = np.random.default_rng(seed)
        noise = rng.uniform(-1.0, 1.0, size=grid.shape)
        u0 = ScalarField(grid, np.maximum(u0.values * (1.0 + spec.perturbation * noise), 0.0))
    logger.debug("Initial density: %s, mass %.6g", spec.kind, integrate(u0))
    return u0


def build_coefficient(spec: CoefficientSpec, grid: Grid) -> ScalarField:
    """Coefficient field on a grid."""
    if spec.kind == 'constant':
        return ScalarField.constant(grid, spec.value)
    if spec.kind == 'radial_ramp':
        def ramp(X, Y):
            r = np.hypot(X - spec.center[0], Y - spec.center[1])
            s = smoothstep((r - spec.r_inner) / (spec.r_outer - spec.r_inner))
            return spec.inner + (spec.outer - spec.inner) * s
        return ScalarField.from_function(grid, ramp)
    if spec.kind == 'half_plane':
        def half_plane(X, Y):
            s = smoothstep((X - (spec.x0 - 0.5 * spec.width)) / spec.width)
            return spec.inner + (spec.outer - spec.inner) * s
        return ScalarField.from_function(grid, half_plane)
    return _load_field(spec.path, grid, "Coefficient")


def build_coefficients(config: RunConfig, grid: Grid) -> Coefficients:
    """kappa and mu for a configuration (mu >= 0 is enforced by Coefficients)."""
    return Coefficients(build_coefficient(config.kappa, grid), build_coefficient(config.mu, grid))
