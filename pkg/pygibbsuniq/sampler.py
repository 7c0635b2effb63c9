"""Finite-volume Gibbs sampler and exact small-window oracle."""

from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum
import logging
import math
from typing import Optional

import numpy as np
from scipy import special, stats

from .dobrushin_grid import BoundaryConfiguration
from .exceptions import ErgodicityError, TruncationError, UnsupportedError
from .numerics import (
    Box,
    JumpSet,
    cube_integral,
    effective_range,
    unit_ball_volume,
)
from .potentials import PairPotential, check_beta, is_zero_potential

_LOGGER = logging.getLogger(__name__)

GENERATOR = 'PCG64'

OBSERVABLES = ('count', 'intensity_center', 'min_pair_distance')

DEFAULT_MOVE_MIX = (0.4, 0.4, 0.2)

BATCHES = 20

# relative spacing of dense boundary packings above the hard-core radius
PACKING_SLACK = 1e-6


class Move(StrEnum):
    BIRTH = 'birth'
    DEATH = 'death'
    TRANSLATE = 'translate'


class Provenance(StrEnum):
    EXACT = 'exact'
    EMPIRICAL = 'empirical'


@dataclass(frozen=True)
class Configuration:
    """Finite simple point configuration in a window."""

    points: np.ndarray

    @property
    def count(self) -> int:
        return len(self.points)

    def min_pair_distance(self, boundary: Optional[np.ndarray] = None) -> float:
        """Smallest distance between two points, or a point and a boundary point."""
        best = math.inf
        if len(self.points) >= 2:
            diff = self.points[:, None, :] - self.points[None, :, :]
            distance = np.sqrt(np.sum(diff * diff, axis=2))
            best = float(distance[np.triu_indices(len(self.points), k=1)].min())
        if boundary is not None and len(boundary) and len(self.points):
            diff = self.points[:, None, :] - boundary[None, :, :]
            best = min(best, float(np.sqrt(np.sum(diff * diff, axis=2)).min()))
        return best


@dataclass(frozen=True)
class ChainSettings:
    """Run parameters of one birth-death-translate chain."""

    activity: float
    beta: float
    window: Box
    boundary: BoundaryConfiguration = field(default_factory=BoundaryConfiguration)
    steps: int = 100_000
    burn_in: Optional[int] = None
    seed: int = 0
    move_mix: tuple[float, float, float] = DEFAULT_MOVE_MIX
    chain_index: int = 0
    record_every: int = 1
    center_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.burn_in is None:
            object.__setattr__(self, 'burn_in', self.steps // 10)
        if not self.steps > self.burn_in >= 0:
            raise ValueError(
                f"need steps > burn_in >= 0, got {self.steps}, {self.burn_in}"
            )
        if not 0 <= self.activity < math.inf:
            raise ValueError(f"activity must be finite and >= 0, got {self.activity}")
        check_beta(self.beta)
        mix = tuple(float(p) for p in self.move_mix)
        if len(mix) != 3 or min(mix) < 0 or not math.isclose(sum(mix), 1.0):
            raise ValueError(f"move mix must be 3 probabilities summing to 1: {mix}")
        object.__setattr__(self, 'move_mix', mix)
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if not 0 < self.center_fraction <= 1:
            raise ValueError("center_fraction must be in (0, 1]")

    @property
    def center_window(self) -> Box:
        sides = self.window.sides * self.center_fraction
        return Box.centered(self.window.center, sides)


@dataclass(frozen=True)
class CountDistribution:
    """Law of the number of points in a window."""

    probabilities: tuple[float, ...]
    provenance: Provenance

    def __post_init__(self) -> None:
        probabilities = np.asarray(self.probabilities, dtype=float)
        if np.any(probabilities < 0) or not math.isclose(
            probabilities.sum(), 1.0, abs_tol=1e-9
        ):
            raise ValueError(f"not a probability vector: {self.probabilities}")
        object.__setattr__(self, 'probabilities', tuple(map(float, probabilities)))

    @property
    def n_max(self) -> int:
        return len(self.probabilities) - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probabilities)), self.probabilities))


@dataclass(frozen=True)
class ChainReport:
    """Recorded observables of one chain after burn-in."""

    steps: np.ndarray
    series: dict[str, np.ndarray]
    means: dict[str, float]
    standard_errors: dict[str, float]
    acceptance: dict[Move, float]
    final: Configuration
    seed: int
    chain_index: int
    generator: str = GENERATOR


@dataclass(frozen=True)
class ProbeRow:
    window: float
    boundary: str
    intensity: float
    se: float
    metric: float


def chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    """Independent stream per (seed, chain index)."""
    sequence = np.random.SeedSequence(seed, spawn_key=(chain_index,))
    return np.random.Generator(np.random.PCG64(sequence))


def batch_means_se(series: np.ndarray, batches: int = BATCHES) -> float:
    """Standard error of the mean from non-overlapping batch means."""
    size = len(series) // batches
    if size < 1:
        return math.nan
    means = np.asarray(series[: size * batches], dtype=float).reshape(batches, size)
    return float(np.std(means.mean(axis=1), ddof=1) / math.sqrt(batches))


class BirthDeathChain:
    """Metropolis-Hastings chain targeting the finite-volume Gibbs specification.

    Births propose a uniform point in the window, deaths a uniform existing point and
    translations a uniform displacement in a ball. The Hamiltonian counts every pair
    with at least one point in the window, boundary points included.
    """

    def __init__(self, settings: ChainSettings, potential: PairPotential) -> None:
        self.settings = settings
        self.potential = potential
        p_birth, p_death, _p_translate = settings.move_mix
        if p_birth == 0:
            raise ErgodicityError(
                "no birth moves: the chain cannot leave the empty state"
            )
        if p_death == 0:
            raise ErgodicityError("no death moves: the point count can never decrease")
        d = potential.dimension
        if settings.window.dimension != d:
            raise ValueError(
                f"window is {settings.window.dimension}-d, potential is {d}-d"
            )

        self.rng = chain_rng(settings.seed, settings.chain_index)
        self.volume = settings.window.volume
        self.points = np.empty((0, d))
        boundary = settings.boundary.as_array(d)
        if potential.finite_range and len(boundary):
            gap = np.maximum(
                np.maximum(
                    np.asarray(settings.window.lo) - boundary,
                    boundary - np.asarray(settings.window.hi),
                ),
                0.0,
            )
            near = np.sqrt(np.sum(gap * gap, axis=1)) <= potential.interaction_range
            boundary = boundary[near]
        self.boundary = boundary

        alpha = potential.hard_core_radius
        if alpha > 0:
            self.step_radius = alpha / 2
        else:
            self.step_radius = self.volume ** (1 / d) / 10
        self.proposed = dict.fromkeys(Move, 0)
        self.accepted = dict.fromkeys(Move, 0)

    @property
    def configuration(self) -> Configuration:
        return Configuration(self.points.copy())

    def energy(self, x: np.ndarray, skip: Optional[int] = None) -> float:
        """Return the interaction of x with the other points and the boundary."""
        others = self.points if skip is None else np.delete(self.points, skip, axis=0)
        total = 0.0
        for points in (others, self.boundary):
            if len(points):
                r = np.sqrt(np.sum((points - x) ** 2, axis=1))
                total += float(self.potential.evaluate_array(r).sum())
        return total

    def _accept(self, ratio: float) -> bool:
        return ratio >= 1 or self.rng.random() < ratio

    def birth(self) -> bool:
        p_birth, p_death, _ = self.settings.move_mix
        x = self.settings.window.sample(self.rng)
        energy = self.energy(x)
        if math.isinf(energy):
            return False
        n = len(self.points)
        ratio = (
            p_death
            * self.settings.activity
            * self.volume
            / (p_birth * (n + 1))
            * math.exp(-self.settings.beta * energy)
        )
        if self._accept(ratio):
            self.points = np.vstack([self.points, x])
            return True
        return False

    def death(self) -> bool:
        p_birth, p_death, _ = self.settings.move_mix
        n = len(self.points)
        if n == 0:
            return False
        index = int(self.rng.integers(n))
        energy = self.energy(self.points[index], skip=index)
        denominator = p_death * self.settings.activity * self.volume
        if denominator == 0:
            ratio = math.inf
        else:
            ratio = p_birth * n / denominator * math.exp(self.settings.beta * energy)
        if self._accept(ratio):
            self.points = np.delete(self.points, index, axis=0)
            return True
        return False

    def translate(self) -> bool:
        n = len(self.points)
        if n == 0:
            return False
        index = int(self.rng.integers(n))
        d = self.points.shape[1]
        direction = self.rng.standard_normal(d)
        direction /= np.linalg.norm(direction)
        radius = self.step_radius * self.rng.random() ** (1 / d)
        target = self.points[index] + radius * direction
        if not self.settings.window.contains(target):
            return False
        new_energy = self.energy(target, skip=index)
        if math.isinf(new_energy):
            return False
        old_energy = self.energy(self.points[index], skip=index)
        ratio = math.exp(-self.settings.beta * (new_energy - old_energy))
        if self._accept(ratio):
            self.points[index] = target
            return True
        return False

    def step(self) -> tuple[Move, bool]:
        """Run one proposal; return its move type and whether it was accepted."""
        u = self.rng.random()
        p_birth, p_death, _ = self.settings.move_mix
        if u < p_birth:
            move, accepted = Move.BIRTH, self.birth()
        elif u < p_birth + p_death:
            move, accepted = Move.DEATH, self.death()
        else:
            move, accepted = Move.TRANSLATE, self.translate()
        self.proposed[move] += 1
        self.accepted[move] += accepted
        return move, accepted

    def acceptance_rates(self) -> dict[Move, float]:
        return {
            move: self.accepted[move] / max(self.proposed[move], 1) for move in Move
        }


def mcmc_sample(
    settings: ChainSettings,
    potential: PairPotential,
    observables: Sequence[str] = OBSERVABLES,
) -> ChainReport:
    """Run a chain from the empty configuration and record observables after burn-in."""
    unknown = set(observables) - set(OBSERVABLES)
    if unknown:
        raise ValueError(f"unknown observables {sorted(unknown)}")
    chain = BirthDeathChain(settings, potential)
    center = settings.center_window
    recorded_steps = []
    series: dict[str, list[float]] = {name: [] for name in observables}

    for step in range(1, settings.steps + 1):
        chain.step()
        if step <= settings.burn_in:
            continue
        if (step - settings.burn_in) % settings.record_every:
            continue
        recorded_steps.append(step)
        points = chain.points
        if 'count' in series:
            series['count'].append(len(points))
        if 'intensity_center' in series:
            inside = np.count_nonzero(center.contains(points)) if len(points) else 0
            series['intensity_center'].append(inside / center.volume)
        if 'min_pair_distance' in series:
            series['min_pair_distance'].append(
                Configuration(points).min_pair_distance(chain.boundary)
            )

    arrays = {name: np.asarray(values, dtype=float) for name, values in series.items()}
    acceptance = chain.acceptance_rates()
    _LOGGER.debug(
        "Chain %s (seed %s) done: acceptance %s",
        settings.chain_index,
        settings.seed,
        acceptance,
    )
    return ChainReport(
        steps=np.asarray(recorded_steps),
        series=arrays,
        means={name: float(values.mean()) for name, values in arrays.items()},
        standard_errors={
            name: batch_means_se(values) for name, values in arrays.items()
        },
        acceptance=acceptance,
        final=chain.configuration,
        seed=settings.seed,
        chain_index=settings.chain_index,
    )


def packing_cap(window: Box, alpha: float) -> float:
    """Bound the number of points with pairwise distances > alpha in a window."""
    if alpha <= 0:
        return math.inf
    diagonal = float(np.linalg.norm(window.sides))
    if diagonal <= alpha:
        return 1
    d = window.dimension
    # at most one point per sub-box of diameter <= alpha
    cells = math.prod(math.ceil(side * math.sqrt(d) / alpha) for side in window.sides)
    # disjoint balls of radius alpha/2 inside the window grown by alpha/2
    balls = math.floor(
        float(np.prod(window.sides + alpha)) / (unit_ball_volume(d) * (alpha / 2) ** d)
    )
    return min(cells, balls)


def _pair_weight(potential, beta, window, tol):
    """int over W^2 of exp(-beta phi(|x_1 - x_2|)), taken over u = x_1 - x_2.

    The density of u is the overlap |W n (W + u)|, so the integral is d-dimensional and
    its jumps lie on spheres around the origin.
    """
    sides = window.sides

    def overlap(us: np.ndarray) -> np.ndarray:
        return np.prod(np.maximum(sides - np.abs(us), 0.0), axis=1)

    def weight(us: np.ndarray) -> np.ndarray:
        r = np.sqrt(np.sum(us * us, axis=1))
        return overlap(us) * np.exp(-beta * potential.evaluate_array(r))

    def largest_overlap(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        straddles = (lo <= 0) & (hi >= 0)
        nearest = np.where(straddles, 0.0, np.minimum(np.abs(lo), np.abs(hi)))
        return overlap(nearest)

    jumps = JumpSet(
        np.zeros((1, window.dimension)), potential.breakpoints, largest_overlap
    )
    domain = Box(tuple(-sides), tuple(sides))
    return cube_integral(weight, domain, tol, jumps=jumps).value


def _configuration_weight(potential, beta, window, fixed, n, tol):
    """int over W^n of exp(-beta H(x_1..x_n u fixed) + beta H(fixed)) dx.

    Points are integrated one at a time: the outer integrand at x is the Boltzmann
    factor of x against `fixed` times the weight of n - 1 points given fixed u {x}.
    """
    volume = window.volume
    if n == 0:
        return 1.0
    if is_zero_potential(potential):
        return volume**n
    reach = effective_range(potential, beta, tol)
    relevant = fixed[window.distance(fixed) <= reach]
    if len(relevant) == 0 and n == 1:
        return volume
    if len(relevant) == 0 and n == 2:
        return _pair_weight(potential, beta, window, tol)

    def boltzmann(xs: np.ndarray) -> np.ndarray:
        diff = xs[:, None, :] - relevant[None, :, :]
        r = np.sqrt(np.sum(diff * diff, axis=2))
        return np.exp(-beta * potential.evaluate_array(r).sum(axis=1))

    # the inner weight is at most volume^(n-1)
    jumps = JumpSet(relevant, potential.breakpoints, volume ** (n - 1))
    if n == 1:
        return cube_integral(boltzmann, window, tol, jumps=jumps).value
    inner_tol = tol / (2 * volume)

    def integrand(xs: np.ndarray) -> np.ndarray:
        values = boltzmann(xs)
        for k in np.flatnonzero(values):
            values[k] *= _configuration_weight(
                potential, beta, window, np.vstack([fixed, xs[k]]), n - 1, inner_tol
            )
        return values

    return cube_integral(integrand, window, tol / 2, jumps=jumps).value


def exact_count_distribution(
    potential: PairPotential,
    z: float,
    beta: float,
    window: Box,
    boundary: BoundaryConfiguration = BoundaryConfiguration(),
    n_max: int = 2,
    tol: float = 1e-8,
) -> CountDistribution:
    """Return p_n = z^n/n! int_{W^n} exp(-beta H) dx / Z for n <= n_max.

    Truncation is exact when the hard core caps the count at n_max; otherwise the
    Poisson bound on the dropped mass must stay below `tol`. The strata share `tol`
    evenly, each integral scaled by its prefactor z^n/n!.
    """
    check_beta(beta)
    if not 0 <= z < math.inf:
        raise ValueError(f"activity must be finite and >= 0, got {z}")
    cap = packing_cap(window, potential.hard_core_radius)
    if cap > n_max:
        # H >= 0, so the dropped strata weigh at most the Poisson tail
        tail = float(stats.poisson.sf(n_max, z * window.volume)) * math.exp(
            z * window.volume
        )
        if tail >= tol:
            raise TruncationError(
                f"points beyond n_max={n_max} carry weight up to {tail} >= {tol}"
            )
    boundary_points = boundary.as_array(window.dimension)
    top = int(min(cap, n_max))
    weights = [1.0]
    for n in range(1, top + 1):
        scale = z**n / special.factorial(n)
        if scale == 0:
            weights.append(0.0)
            continue
        # Z >= 1, so p_n moves by at most the error of scale * integral
        integral = _configuration_weight(
            potential, beta, window, boundary_points, n, tol / (scale * top)
        )
        weights.append(scale * integral)
    weights = np.asarray(weights)
    probabilities = weights / weights.sum()
    _LOGGER.debug("Exact count law in %s: %s", window, probabilities)
    return CountDistribution(tuple(probabilities), Provenance.EXACT)


def empirical_count_distribution(
    report: ChainReport, n_max: Optional[int] = None
) -> CountDistribution:
    """Return the frequencies of the recorded point counts."""
    counts = report.series['count'].astype(int)
    size = max(int(counts.max()), n_max or 0) + 1
    frequencies = np.bincount(counts, minlength=size) / len(counts)
    return CountDistribution(tuple(frequencies), Provenance.EMPIRICAL)


def total_variation(p: CountDistribution, q: CountDistribution) -> float:
    """Return 1/2 sum |p_n - q_n|."""
    size = max(len(p.probabilities), len(q.probabilities))
    a = np.zeros(size)
    b = np.zeros(size)
    a[: len(p.probabilities)] = p.probabilities
    b[: len(q.probabilities)] = q.probabilities
    return float(np.abs(a - b).sum() / 2)


def dense_packing_frame(
    window: Box, potential: PairPotential, width: Optional[float] = None
) -> BoundaryConfiguration:
    """Square-grid authorised packing of the frame of given width around a window."""
    alpha = potential.hard_core_radius
    if alpha > 0:
        spacing = alpha * (1 + PACKING_SLACK)
    elif potential.finite_range:
        spacing = potential.interaction_range * (1 + PACKING_SLACK)
    else:
        raise UnsupportedError("dense packing needs a hard core or a finite range")
    if width is None:
        width = effective_range(potential, 1.0, 1e-6)
    lo = np.asarray(window.lo) - width
    hi = np.asarray(window.hi) + width
    axes = [np.arange(low + spacing / 2, high, spacing) for low, high in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1)
    grid = grid.reshape(-1, window.dimension)
    frame = grid[~window.contains(grid)]
    return BoundaryConfiguration.from_array(frame)


def probe_window(
    potential: PairPotential,
    z: float,
    beta: float,
    side: float,
    settings: ChainSettings,
    boundary_pair: tuple[str, str] = ('empty', 'dense'),
    window_index: int = 0,
) -> tuple[ProbeRow, ProbeRow]:
    """Compare center intensities of two chains under two boundary conditions."""
    d = potential.dimension
    window = Box.centered([0.0] * d, [side] * d)
    reports = []
    for position, name in enumerate(boundary_pair):
        if name == 'empty':
            boundary = BoundaryConfiguration()
        elif name == 'dense':
            boundary = dense_packing_frame(window, potential)
        else:
            raise ValueError(f"unknown boundary condition {name!r}")
        chain_settings = replace(
            settings,
            activity=z,
            beta=beta,
            window=window,
            boundary=boundary,
            chain_index=2 * window_index + position,
        )
        reports.append(mcmc_sample(chain_settings, potential, ('intensity_center',)))

    intensities = [report.means['intensity_center'] for report in reports]
    errors = [report.standard_errors['intensity_center'] for report in reports]
    difference = abs(intensities[0] - intensities[1])
    combined = math.hypot(*errors)
    if combined > 0:
        metric = difference / combined
    else:
        metric = 0.0 if difference == 0 else math.inf
    _LOGGER.debug(
        "Probe window %s: intensities %s, metric %s", side, intensities, metric
    )
    return tuple(
        ProbeRow(side, name, intensity, se, metric)
        for name, intensity, se in zip(boundary_pair, intensities, errors)
    )


def uniqueness_probe(
    potential: PairPotential,
    z: float,
    beta: float,
    window_sides: Sequence[float],
    settings: ChainSettings,
    boundary_pair: tuple[str, str] = ('empty', 'dense'),
) -> list[ProbeRow]:
    """Run `probe_window` for every window side, two rows per window."""
    rows: list[ProbeRow] = []
    for index, side in enumerate(window_sides):
        rows.extend(
            probe_window(potential, z, beta, side, settings, boundary_pair, index)
        )
    return rows
