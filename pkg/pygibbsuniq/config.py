"""Run configuration read from a YAML file.

Every section except `potential` is optional::

    potential:            # required
      kind: hard-core-step
      hard_core_radius: 1.0
      interaction_range: 3.0
      step_height: 1.0
      dimension: 2
    methods: [dobrushin-limit, cluster-expansion, disagreement-percolation]
    beta: {min: 0.05, max: 2.0, count: 40, spacing: linear, fixed: 1.0}
    meshes: [0.35, 0.25, 0.15, 0.1]       # strictly decreasing
    tolerances: {integral: 1.0e-8, cube: 1.0e-3, zbar: 1.0e-5, psi_x_points: 5}
    search: {y_points: 4, refine: true, packings: 2, max_subcells: 12, gauss_order: 2}
    percolation: {2: 1.43629}             # user z_c(d) table
    sampler: {activity: 0.2, beta: 1.0, window: [2.0, 2.0], steps: 100000,
              burn_in: null, move_mix: [0.4, 0.4, 0.2], record_every: 1,
              boundary: empty}
    probe: {windows: [2.0, 4.0], boundaries: [empty, dense]}
    output: {directory: out}
    seed: 0
    threads: 0
"""

from collections.abc import Mapping
from dataclasses import dataclass, field, fields
import logging
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np
import yaml

from .criteria import Method, PercolationThreshold, Provenance
from .dobrushin_grid import SearchConfig
from .exceptions import ConfigurationError
from .factory import create_potential
from .potentials import PairPotential

_LOGGER = logging.getLogger(__name__)

DEFAULT_METHODS = (
    Method.DOBRUSHIN_LIMIT,
    Method.CLUSTER_EXPANSION,
    Method.DISAGREEMENT_PERCOLATION,
)

BOUNDARIES = ('empty', 'dense')

DEFAULT_MESHES = (0.35, 0.25, 0.15, 0.1)


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    params: dict[str, Any]

    def build(self) -> PairPotential:
        return create_potential(self.kind, **self.params)


@dataclass(frozen=True)
class BetaGrid:
    min: float = 0.05
    max: float = 2.0
    count: int = 40
    spacing: str = 'linear'
    fixed: float = 1.0

    def values(self) -> list[float]:
        if self.count == 1:
            return [self.min]
        if self.spacing == 'log':
            grid = np.geomspace(self.min, self.max, self.count)
        else:
            grid = np.linspace(self.min, self.max, self.count)
        return [float(beta) for beta in grid]


@dataclass(frozen=True)
class Tolerances:
    integral: float = 1e-8
    cube: float = 1e-3
    zbar: float = 1e-5
    psi_x_points: int = 5
    psi_sample_points: Optional[int] = None


@dataclass(frozen=True)
class SamplerConfig:
    activity: float = 0.2
    beta: float = 1.0
    window: tuple[float, ...] = (2.0, 2.0)
    steps: int = 100_000
    burn_in: Optional[int] = None
    move_mix: tuple[float, float, float] = (0.4, 0.4, 0.2)
    record_every: int = 1
    boundary: str = 'empty'


@dataclass(frozen=True)
class ProbeConfig:
    windows: tuple[float, ...] = (2.0, 4.0)
    boundaries: tuple[str, str] = BOUNDARIES


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run configuration."""

    potential: PotentialSpec
    methods: tuple[Method, ...] = DEFAULT_METHODS
    beta: BetaGrid = field(default_factory=BetaGrid)
    meshes: tuple[float, ...] = DEFAULT_MESHES
    tolerances: Tolerances = field(default_factory=Tolerances)
    search: SearchConfig = field(default_factory=SearchConfig)
    percolation: dict[int, float] = field(default_factory=dict)
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    output_directory: Path = Path('out')
    seed: int = 0
    threads: int = 0


def _section(data: Any, path: str) -> dict:
    if data is None:
        return {}
    if not isinstance(data, Mapping):
        raise ConfigurationError("expected a mapping", path)
    return dict(data)


def _build(cls, data: Any, path: str):
    """Instantiate a flat dataclass from a mapping, rejecting unknown keys."""
    data = _section(data, path)
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigurationError(f"unknown key {key!r}", f"{path}.{key}")
    try:
        return cls(**data)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc), path) from exc


def _number(value: Any, path: str, *, positive: bool = True, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"expected a number, got {value!r}", path)
    if integer and not float(value).is_integer():
        raise ConfigurationError(f"expected an integer, got {value!r}", path)
    if not math.isfinite(value) or (positive and value <= 0) or value < 0:
        raise ConfigurationError(
            f"expected a {'positive' if positive else 'non-negative'} number, "
            f"got {value}",
            path,
        )
    return int(value) if integer else float(value)


def _potential(data: Any) -> PotentialSpec:
    if data is None:
        raise ConfigurationError("a potential section is required", "potential")
    data = _section(data, 'potential')
    if 'kind' not in data:
        raise ConfigurationError("missing potential kind", "potential.kind")
    kind = data.pop('kind')
    spec = PotentialSpec(kind, data)
    potential = spec.build()
    potential.validate()
    return spec


def _beta(data: Any) -> BetaGrid:
    grid = _build(BetaGrid, data, 'beta')
    for name in ('min', 'max', 'fixed'):
        _number(getattr(grid, name), f"beta.{name}")
    _number(grid.count, 'beta.count', integer=True)
    if grid.min > grid.max:
        raise ConfigurationError(f"min {grid.min} exceeds max {grid.max}", "beta.min")
    if grid.spacing not in ('linear', 'log'):
        raise ConfigurationError(f"unknown spacing {grid.spacing!r}", "beta.spacing")
    return grid


def _meshes(data: Any) -> tuple[float, ...]:
    if data is None:
        return DEFAULT_MESHES
    if not isinstance(data, list) or not data:
        raise ConfigurationError("expected a non-empty list", "meshes")
    meshes = tuple(_number(a, f"meshes[{i}]") for i, a in enumerate(data))
    if any(b >= a for a, b in zip(meshes, meshes[1:])):
        raise ConfigurationError("meshes must be strictly decreasing", "meshes")
    return meshes


def _methods(data: Any) -> tuple[Method, ...]:
    if data is None:
        return DEFAULT_METHODS
    if not isinstance(data, list) or not data:
        raise ConfigurationError("expected a non-empty list", "methods")
    try:
        return tuple(Method(method) for method in data)
    except ValueError as exc:
        raise ConfigurationError(str(exc), "methods") from exc


def _tolerances(data: Any) -> Tolerances:
    tolerances = _build(Tolerances, data, 'tolerances')
    for name in ('integral', 'cube', 'zbar'):
        _number(getattr(tolerances, name), f"tolerances.{name}")
    _number(tolerances.psi_x_points, 'tolerances.psi_x_points', integer=True)
    if tolerances.psi_sample_points is not None:
        _number(
            tolerances.psi_sample_points, 'tolerances.psi_sample_points', integer=True
        )
    return tolerances


def _percolation(data: Any) -> dict[int, float]:
    table = {}
    for d, z_c in _section(data, 'percolation').items():
        path = f"percolation.{d}"
        d = _number(d, path, integer=True)
        z_c = _number(z_c, path)
        try:
            PercolationThreshold(d, z_c, Provenance.USER_SUPPLIED)
        except ValueError as exc:
            raise ConfigurationError(str(exc), path) from exc
        table[d] = z_c
    return table


def _sampler(data: Any) -> SamplerConfig:
    data = _section(data, 'sampler')
    for key in ('window', 'move_mix'):
        if key in data:
            if not isinstance(data[key], list):
                raise ConfigurationError("expected a list", f"sampler.{key}")
            data[key] = tuple(data[key])
    sampler = _build(SamplerConfig, data, 'sampler')
    _number(sampler.activity, 'sampler.activity', positive=False)
    _number(sampler.beta, 'sampler.beta')
    _number(sampler.steps, 'sampler.steps', integer=True)
    _number(sampler.record_every, 'sampler.record_every', integer=True)
    for i, side in enumerate(sampler.window):
        _number(side, f"sampler.window[{i}]")
    if sampler.burn_in is not None:
        burn_in = _number(
            sampler.burn_in, 'sampler.burn_in', positive=False, integer=True
        )
        if burn_in >= sampler.steps:
            raise ConfigurationError("must be smaller than steps", "sampler.burn_in")
    if len(sampler.move_mix) != 3 or not math.isclose(sum(sampler.move_mix), 1.0):
        raise ConfigurationError(
            "expected 3 probabilities summing to 1", "sampler.move_mix"
        )
    for i, p in enumerate(sampler.move_mix):
        _number(p, f"sampler.move_mix[{i}]", positive=False)
    if sampler.boundary not in BOUNDARIES:
        raise ConfigurationError(
            f"unknown boundary {sampler.boundary!r}", "sampler.boundary"
        )
    return sampler


def _probe(data: Any) -> ProbeConfig:
    data = _section(data, 'probe')
    for key in ('windows', 'boundaries'):
        if key in data:
            if not isinstance(data[key], list) or not data[key]:
                raise ConfigurationError("expected a non-empty list", f"probe.{key}")
            data[key] = tuple(data[key])
    probe = _build(ProbeConfig, data, 'probe')
    for i, side in enumerate(probe.windows):
        _number(side, f"probe.windows[{i}]")
    if len(probe.boundaries) != 2 or not set(probe.boundaries) <= set(BOUNDARIES):
        raise ConfigurationError(
            f"expected two of {BOUNDARIES}, got {probe.boundaries}", "probe.boundaries"
        )
    return probe


SECTIONS = (
    'potential',
    'methods',
    'beta',
    'meshes',
    'tolerances',
    'search',
    'percolation',
    'sampler',
    'probe',
    'output',
    'seed',
    'threads',
)


def parse_config(data: Any) -> RunConfig:
    """Validate a decoded YAML document into a RunConfig."""
    data = _section(data, 'config')
    for key in data:
        if key not in SECTIONS:
            raise ConfigurationError(f"unknown key {key!r}", key)

    output = _section(data.get('output'), 'output')
    for key in output:
        if key != 'directory':
            raise ConfigurationError(f"unknown key {key!r}", f"output.{key}")

    config = RunConfig(
        potential=_potential(data.get('potential')),
        methods=_methods(data.get('methods')),
        beta=_beta(data.get('beta')),
        meshes=_meshes(data.get('meshes')),
        tolerances=_tolerances(data.get('tolerances')),
        search=_build(SearchConfig, data.get('search'), 'search'),
        percolation=_percolation(data.get('percolation')),
        sampler=_sampler(data.get('sampler')),
        probe=_probe(data.get('probe')),
        output_directory=Path(output.get('directory', 'out')),
        seed=_number(data.get('seed', 0), 'seed', positive=False, integer=True),
        threads=_number(
            data.get('threads', 0), 'threads', positive=False, integer=True
        ),
    )
    _LOGGER.debug("Loaded configuration: %s", config)
    return config


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a YAML run configuration."""
    path = Path(path)
    try:
        with path.open(encoding='utf-8') as file:
            data = yaml.safe_load(file)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc}", "config") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"invalid YAML in {path}: {exc}", "config") from exc
    return parse_config(data)
