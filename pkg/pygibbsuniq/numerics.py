"""Quadrature and lattice geometry shared by the analytic computations."""

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import lru_cache
import itertools
import logging
import math
from typing import Optional, Union

import numpy as np
from scipy import integrate, special
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
)

from .exceptions import IntegrabilityError, QuadratureError, UnsupportedError

_LOGGER = logging.getLogger(__name__)

# tensor quadrature cost explodes beyond this
MAX_DIMENSION = 6

QUAD_LIMIT = 200
QUAD_ATTEMPTS = 3

CUBE_ORDER = 3
CUBE_MIN_DEPTH = 2
CUBE_MAX_CELLS = 4_000_000
# points per integrand call
CHUNK_POINTS = 1 << 20

TRUNCATION_DOUBLINGS = 60


@dataclass(frozen=True)
class IntegralResult:
    """Integral value together with its absolute error estimate."""

    value: Union[float, np.ndarray]
    error_estimate: float


@dataclass(frozen=True)
class Box:
    """Axis-aligned half-open box (lo, hi]."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'lo', tuple(float(v) for v in self.lo))
        object.__setattr__(self, 'hi', tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("box corners must have the same, positive, dimension")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"box must have positive sides: {self.lo} {self.hi}")

    @classmethod
    def centered(cls, center: Sequence[float], sides: Sequence[float]) -> 'Box':
        """Return the box with given center and side lengths."""
        center = np.asarray(center, dtype=float)
        half = np.asarray(sides, dtype=float) / 2
        return cls(tuple(center - half), tuple(center + half))

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def center(self) -> np.ndarray:
        return (np.asarray(self.hi) + np.asarray(self.lo)) / 2

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def contains(self, points) -> np.ndarray:
        """Return the half-open membership of one point or an array of points."""
        points = np.asarray(points, dtype=float)
        inside = (points > np.asarray(self.lo)) & (points <= np.asarray(self.hi))
        return np.all(inside, axis=-1)

    def sample(
        self, rng: np.random.Generator, size: Optional[int] = None
    ) -> np.ndarray:
        """Draw uniform points in the box."""
        shape = (self.dimension,) if size is None else (size, self.dimension)
        return np.asarray(self.lo) + self.sides * rng.random(shape)

    def distance(self, points) -> np.ndarray:
        """Return the Euclidean distance from points to the (closed) box."""
        points = np.asarray(points, dtype=float)
        gap = np.maximum(np.asarray(self.lo) - points, points - np.asarray(self.hi))
        gap = np.maximum(gap, 0.0)
        return np.sqrt(np.sum(gap * gap, axis=-1))


@dataclass(frozen=True)
class Cube:
    """Half-open lattice cube center + (-side/2, side/2]^d."""

    center: tuple[float, ...]
    side: float

    def __post_init__(self) -> None:
        object.__setattr__(self, 'center', tuple(float(v) for v in self.center))
        if not self.side > 0:
            raise ValueError(f"cube side must be positive, got {self.side}")
        if not self.center:
            raise ValueError("cube center must have a positive dimension")

    @classmethod
    def lattice(cls, mesh: float, index: Sequence[int]) -> 'Cube':
        """Return the cube of the lattice a Z^d with the given integer index."""
        return cls(tuple(mesh * k for k in index), mesh)

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return self.side**self.dimension

    @property
    def box(self) -> Box:
        return Box.centered(self.center, [self.side] * self.dimension)

    def contains(self, points) -> np.ndarray:
        """Return the half-open membership of one point or an array of points."""
        return self.box.contains(points)

    def distance(self, points) -> np.ndarray:
        """Return the Euclidean distance from points to the (closed) cube."""
        offset = np.abs(np.asarray(points, dtype=float) - np.asarray(self.center))
        gap = np.maximum(offset - self.side / 2, 0.0)
        return np.sqrt(np.sum(gap * gap, axis=-1))


@dataclass(frozen=True, eq=False)
class JumpSet:
    """Spheres |x - c| = r, c in `centers`, r in `radii`, off which f is continuous.

    `bound` caps the oscillation sup f - inf f over a cell a sphere crosses: one number
    for the whole domain, or a callable mapping cell corners (lo, hi) to one cap per
    cell.
    """

    centers: np.ndarray
    radii: tuple[float, ...]
    bound: Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]] = 1.0

    def __post_init__(self) -> None:
        centers = np.asarray(self.centers, dtype=float)
        object.__setattr__(self, 'centers', np.atleast_2d(centers))
        object.__setattr__(
            self, 'radii', tuple(float(r) for r in self.radii if 0 < r < math.inf)
        )

    @property
    def empty(self) -> bool:
        return self.centers.size == 0 or not self.radii

    def crossed(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Return which cells (lo, hi] meet one of the spheres."""
        hit = np.zeros(len(lo), dtype=bool)
        if self.empty:
            return hit
        radii = np.asarray(self.radii)
        step = max(1, CHUNK_POINTS // len(self.centers))
        for start in range(0, len(lo), step):
            cell_lo = lo[start : start + step, None, :]
            cell_hi = hi[start : start + step, None, :]
            nearest = np.clip(self.centers, cell_lo, cell_hi) - self.centers
            farthest = np.maximum(
                np.abs(cell_lo - self.centers), np.abs(cell_hi - self.centers)
            )
            near = np.sqrt(np.sum(nearest * nearest, axis=2))[..., None]
            far = np.sqrt(np.sum(farthest * farthest, axis=2))[..., None]
            hit[start : start + step] = np.any(
                (near <= radii) & (radii <= far), axis=(1, 2)
            )
        return hit

    def jump_bound(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        if callable(self.bound):
            return np.asarray(self.bound(lo, hi), dtype=float)
        return np.full(len(lo), float(self.bound))


def unit_ball_volume(d: int) -> float:
    """Return v_d = pi^(d/2) / Gamma(d/2 + 1)."""
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {d}")
    return float(math.pi ** (d / 2) / special.gamma(d / 2 + 1))


def _quad_once(g, lo: float, hi: float, epsabs: float, limit: int):
    result = integrate.quad(
        g, lo, hi, epsabs=epsabs, epsrel=0.0, limit=limit, full_output=1
    )
    value, error = result[0], result[1]
    if len(result) > 3 or not math.isfinite(value):
        raise QuadratureError(
            f"quad on [{lo}, {hi}] did not converge with limit {limit}: "
            f"{result[-1] if len(result) > 3 else 'non-finite value'}",
            error,
        )
    return value, error


def _quad(g, lo: float, hi: float, epsabs: float):
    """Adaptive 1-D quadrature, retried with a doubled subdivision budget."""
    for attempt in Retrying(
        reraise=True,
        stop=stop_after_attempt(QUAD_ATTEMPTS),
        retry=retry_if_exception_type(QuadratureError),
        before_sleep=before_sleep_log(_LOGGER, logging.DEBUG),
    ):
        with attempt:
            limit = QUAD_LIMIT * 2 ** (attempt.retry_state.attempt_number - 1)
            return _quad_once(g, lo, hi, epsabs, limit)
    raise AssertionError("unreachable")  # pragma: no cover


def radial_integral(
    f: Callable[[np.ndarray], np.ndarray],
    d: int,
    r_max: float,
    tol: float,
    breakpoints: Sequence[float] = (),
) -> IntegralResult:
    """Return the integral over R^d of f(|y|), with f = 0 beyond r_max.

    Computed as d v_d int_0^r_max r^(d-1) f(r) dr, split at the declared breakpoints so
    jumps of f never fall inside a quadrature panel. `f` is vectorised.
    """
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if not 0 <= r_max < math.inf:
        raise ValueError(f"r_max must be finite and >= 0, got {r_max}")
    surface = d * unit_ball_volume(d)
    if r_max == 0:
        return IntegralResult(0.0, 0.0)

    edges = [0.0] + sorted({b for b in breakpoints if 0 < b < r_max}) + [r_max]
    panel_tol = tol / (surface * (len(edges) - 1))

    def g(r: float) -> float:
        return r ** (d - 1) * float(f(np.array([r]))[0])

    value = 0.0
    error = 0.0
    for lo, hi in zip(edges, edges[1:]):
        panel, panel_error = _quad(g, lo, hi, panel_tol)
        value += panel
        error += panel_error
    _LOGGER.debug(
        "Radial integral d=%s r_max=%s over %s panels: %s +- %s",
        d,
        r_max,
        len(edges) - 1,
        surface * value,
        surface * error,
    )
    return IntegralResult(surface * value, surface * error)


@lru_cache(maxsize=32)
def _tensor_rule(order: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre tensor rule on the unit cube [0, 1]^d."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = (x + 1) / 2
    w = w / 2
    nodes = np.array(list(itertools.product(x, repeat=d)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=d))), axis=1)
    return nodes, weights


@lru_cache(maxsize=8)
def _corners(d: int) -> np.ndarray:
    return np.array(list(itertools.product((0.0, 1.0), repeat=d)))


def _apply_rule(f, lo: np.ndarray, sides: np.ndarray, order: int) -> np.ndarray:
    """Integrate f over every cell (lo, lo + sides); returns (cells, components)."""
    n_cells, d = lo.shape
    nodes, weights = _tensor_rule(order, d)
    step = max(1, CHUNK_POINTS // len(weights))
    chunks = []
    for start in range(0, n_cells, step):
        cells = slice(start, start + step)
        points = lo[cells, None, :] + sides[cells, None, :] * nodes[None, :, :]
        values = np.asarray(f(points.reshape(-1, d)), dtype=float)
        chunks.append(values.reshape(len(points), len(weights), -1))
    values = np.concatenate(chunks)
    if not np.all(np.isfinite(values)):
        raise ValueError("cube_integral integrand must be bounded and defined")
    volumes = np.prod(sides, axis=1)
    return np.einsum('nqk,q->nk', values, weights) * volumes[:, None]


def _jump_error(
    jumps: JumpSet, lo: np.ndarray, sides: np.ndarray, n_parents: int
) -> np.ndarray:
    """Per parent cell, sum of volume * oscillation cap over its crossed children."""
    hi = lo + sides
    crossed = jumps.crossed(lo, hi)
    error = np.zeros(len(lo))
    if np.any(crossed):
        volume = np.prod(sides[crossed], axis=1)
        error[crossed] = jumps.jump_bound(lo[crossed], hi[crossed]) * volume
    return error.reshape(n_parents, -1).sum(axis=1)


def _split(lo: np.ndarray, sides: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split every cell into its 2^d children, children of a cell contiguous."""
    d = lo.shape[1]
    half = sides / 2
    corners = _corners(d)
    child_lo = lo[:, None, :] + corners[None, :, :] * half[:, None, :]
    child_sides = np.broadcast_to(half[:, None, :], child_lo.shape)
    return child_lo.reshape(-1, d), np.ascontiguousarray(child_sides).reshape(-1, d)


def cube_integral(
    f: Callable[[np.ndarray], np.ndarray],
    domain: Union[Cube, Box],
    tol: float,
    *,
    order: int = CUBE_ORDER,
    min_depth: int = CUBE_MIN_DEPTH,
    max_cells: int = CUBE_MAX_CELLS,
    jumps: Optional[JumpSet] = None,
) -> IntegralResult:
    """Adaptive tensor Gauss-Legendre integral of f over a cube or box.

    `f` maps an (n, d) array of points to n values, or to an (n, k) array for k
    integrands sharing one subdivision. Each round compares every active cell against
    the sum of its children; the cells carrying the largest errors are split until the
    global error estimate is below `tol`.

    Integrands that jump across spheres declare them in `jumps`. A crossed cell then
    carries an error of at least volume * oscillation cap, the worst case of a rule with
    positive weights, so jumps that fall between nodes still force refinement.
    """
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    box = domain.box if isinstance(domain, Cube) else domain
    d = box.dimension
    if d > MAX_DIMENSION:
        raise UnsupportedError(f"cube_integral supports d <= {MAX_DIMENSION}, got {d}")

    lo = np.asarray(box.lo)[None, :]
    sides = box.sides[None, :]
    for _ in range(min_depth):
        lo, sides = _split(lo, sides)
    value = _apply_rule(f, lo, sides, order)
    n_components = value.shape[1]
    vector = np.ndim(f(np.asarray(box.center)[None, :])) == 2

    frozen_value = np.zeros(n_components)
    frozen_error = 0.0
    cells = len(lo)
    rounds = 0
    while True:
        rounds += 1
        child_lo, child_sides = _split(lo, sides)
        child_value = _apply_rule(f, child_lo, child_sides, order)
        cells += len(child_lo)
        n_active = len(lo)
        refined = child_value.reshape(n_active, -1, n_components).sum(axis=1)
        error = np.max(np.abs(refined - value), axis=1)
        if jumps is not None and not jumps.empty:
            error = np.maximum(
                error, _jump_error(jumps, child_lo, child_sides, n_active)
            )

        total_error = frozen_error + float(error.sum())
        if total_error <= tol:
            total = frozen_value + refined.sum(axis=0)
            break

        ranking = np.argsort(-error, kind='stable')
        remaining = total_error - np.cumsum(error[ranking])
        n_split = int(np.argmax(remaining <= tol / 2)) + 1
        split = np.zeros(n_active, dtype=bool)
        split[ranking[:n_split]] = True

        frozen_value += refined[~split].sum(axis=0)
        frozen_error += float(error[~split].sum())
        if cells > max_cells:
            raise QuadratureError(
                f"cube_integral exceeded {max_cells} cells after {rounds} rounds",
                total_error,
            )

        per_cell = 2**d
        lo = child_lo.reshape(n_active, per_cell, d)[split].reshape(-1, d)
        sides = child_sides.reshape(n_active, per_cell, d)[split].reshape(-1, d)
        value = child_value.reshape(n_active, per_cell, n_components)[split]
        value = value.reshape(-1, n_components)

    _LOGGER.debug(
        "cube_integral converged in %s rounds, %s cells, error %s",
        rounds,
        cells,
        total_error,
    )
    return IntegralResult(total if vector else float(total[0]), total_error)


def lattice_index(point, mesh: float, origin=None) -> tuple[int, ...]:
    """Return the index k of the half-open lattice cube holding `point`."""
    point = np.asarray(point, dtype=float)
    if origin is not None:
        point = point - np.asarray(origin, dtype=float)
    return tuple(int(k) for k in np.ceil(point / mesh - 0.5))


def cube_distance(offset: Sequence[int], mesh: float) -> float:
    """Return dist(cube_i, cube_{i + offset}) on the lattice of the given mesh."""
    gaps = np.maximum(np.abs(np.asarray(offset)) - 1, 0)
    return float(mesh * np.sqrt(np.sum(gaps * gaps)))


def cube_offsets_within(mesh: float, reach: float, d: int) -> np.ndarray:
    """Return integer offsets k with dist(cube_0, cube_k) <= reach, lexicographic."""
    if math.isinf(reach):
        raise UnsupportedError(
            "lattice sums need a finite reach; truncate with a tail bound"
        )
    if not reach >= 0:
        raise ValueError(f"reach must be >= 0, got {reach}")
    kmax = int(math.floor(reach / mesh)) + 1
    axis = np.arange(-kmax, kmax + 1)
    offsets = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1)
    offsets = offsets.reshape(-1, d)
    gaps = np.maximum(np.abs(offsets) - 1, 0)
    distance = mesh * np.sqrt(np.sum(gaps * gaps, axis=1))
    return offsets[distance <= reach * (1 + 1e-12)]


def cubes_within_range(center_cube: Cube, reach: float) -> list[tuple[int, ...]]:
    """Return lattice indices j with dist(center_cube, cube_j) <= reach.

    The lattice is the one of mesh `center_cube.side` containing `center_cube`; the
    center cube itself (distance 0) is included.
    """
    mesh = center_cube.side
    origin = np.rint(np.asarray(center_cube.center) / mesh).astype(int)
    offsets = cube_offsets_within(mesh, reach, center_cube.dimension)
    return [tuple(int(k) for k in origin + offset) for offset in offsets]


def truncation_radius(
    envelope: Callable[[np.ndarray], np.ndarray],
    envelope_start: float,
    beta: float,
    d: int,
    tol: float,
) -> tuple[float, float]:
    """Return (R_eff, tail) with the Mayer tail beyond R_eff certified below tol/10.

    Uses 1 - exp(-beta phi) <= min(1, beta * envelope) for r >= envelope_start.
    """
    surface = d * unit_ball_volume(d)

    def tail_density(r: float) -> float:
        bound = beta * float(envelope(np.array([r]))[0])
        return r ** (d - 1) * min(1.0, bound)

    radius = envelope_start
    for _ in range(TRUNCATION_DOUBLINGS):
        try:
            tail, _error = _quad(tail_density, radius, math.inf, tol / 100)
        except QuadratureError as exc:
            raise IntegrabilityError(
                f"Mayer tail beyond r={radius} is not integrable: {exc}"
            ) from exc
        tail *= surface
        if not math.isfinite(tail):
            raise IntegrabilityError(f"Mayer tail beyond r={radius} diverges")
        if tail <= tol / 10:
            _LOGGER.debug("Truncation radius %s, certified tail %s", radius, tail)
            return radius, tail
        radius *= 2
    raise IntegrabilityError(
        f"Mayer tail does not fall below {tol / 10} before r={radius}"
    )


def effective_range(potential, beta: float, tol: float) -> float:
    """Return the radius beyond which the Mayer function of `potential` is negligible.

    Finite-range potentials return their interaction range; infinite-range ones need a
    declared envelope and get the certified truncation radius.
    """
    if potential.finite_range:
        return potential.interaction_range
    if potential.envelope is None:
        raise UnsupportedError(
            f"{potential.kind} has infinite range and no declared envelope"
        )
    radius, _tail = truncation_radius(
        potential.envelope, potential.envelope_start, beta, potential.dimension, tol
    )
    return radius
