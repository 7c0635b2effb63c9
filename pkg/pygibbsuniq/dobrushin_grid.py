"""Fixed-mesh Dobrushin machinery.

Single-cube specifications with at most one point per cube, their total-variation
distances, the coefficients k_ij bracketed between a searched lower end and the
analytic upper end, the Dobrushin sum over j and the activity z_bar(a) at which it
reaches one.
"""

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
import logging
import math
from typing import Optional

import numpy as np
from scipy import optimize

from .exceptions import BisectionError, ConfigurationError
from .numerics import (
    Cube,
    JumpSet,
    cube_integral,
    cube_offsets_within,
    effective_range,
    lattice_index,
)
from .potentials import PairPotential, check_beta

_LOGGER = logging.getLogger(__name__)


class Mode(StrEnum):
    """Which end of the k_ij brackets a Dobrushin sum uses."""

    LOWER = 'bracket-lower'
    UPPER = 'bracket-upper'


@dataclass(frozen=True)
class Discretization:
    """Lattice a Z^d of half-open cubes, fine enough for one point per cube."""

    mesh: float
    potential: PairPotential

    def __post_init__(self) -> None:
        if not self.mesh > 0:
            raise ConfigurationError(
                f"mesh must be positive, got {self.mesh}", "meshes"
            )
        alpha = self.potential.hard_core_radius
        if not self.mesh * math.sqrt(self.dimension) < alpha:
            raise ConfigurationError(
                f"mesh {self.mesh} needs a*sqrt(d) < hard core radius {alpha}",
                "meshes",
            )

    @property
    def dimension(self) -> int:
        return self.potential.dimension

    @property
    def diagonal(self) -> float:
        return self.mesh * math.sqrt(self.dimension)

    def cube(self, index: Sequence[int]) -> Cube:
        return Cube.lattice(self.mesh, index)

    def index_of(self, point) -> tuple[int, ...]:
        return lattice_index(point, self.mesh)


@dataclass(frozen=True)
class BoundaryConfiguration:
    """Finite point set acting as boundary condition."""

    points: tuple[tuple[float, ...], ...] = ()

    def __post_init__(self) -> None:
        points = tuple(tuple(float(v) for v in point) for point in self.points)
        if len({len(point) for point in points}) > 1:
            raise ValueError("boundary points must share one dimension")
        if len(set(points)) != len(points):
            raise ValueError("boundary configuration has duplicate points")
        object.__setattr__(self, 'points', points)

    @classmethod
    def from_array(cls, points) -> 'BoundaryConfiguration':
        return cls(tuple(map(tuple, np.asarray(points, dtype=float))))

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self, d: int) -> np.ndarray:
        """Return the points as an (n, d) array, (0, d) when empty."""
        if not self.points:
            return np.empty((0, d))
        return np.asarray(self.points, dtype=float)

    def with_point(self, point) -> 'BoundaryConfiguration':
        return BoundaryConfiguration(self.points + (tuple(point),))

    def is_authorised(self, alpha: float) -> bool:
        """Return True if all pairwise distances exceed alpha."""
        if len(self.points) < 2:
            return True
        points = np.asarray(self.points)
        diff = points[:, None, :] - points[None, :, :]
        distance = np.sqrt(np.sum(diff * diff, axis=2))
        upper = distance[np.triu_indices(len(points), k=1)]
        return bool(np.all(upper > alpha))


def _energies(
    potential: PairPotential, xs: np.ndarray, points: np.ndarray
) -> np.ndarray:
    """Return H(x u points) - H(points) for every row x of `xs`."""
    if len(points) == 0:
        return np.zeros(len(xs))
    diff = xs[:, None, :] - points[None, :, :]
    distance = np.sqrt(np.sum(diff * diff, axis=2))
    return potential.evaluate_array(distance).sum(axis=1)


def one_point_energy(
    potential: PairPotential, x, gamma: BoundaryConfiguration
) -> float:
    """Return sum over y in gamma of phi(|x - y|); +inf under any hard-core overlap."""
    x = np.asarray(x, dtype=float)
    points = gamma.as_array(len(x))
    if len(points) and np.any(np.all(points == x, axis=1)):
        raise ValueError(f"point {tuple(x)} belongs to the boundary configuration")
    return float(_energies(potential, x[None, :], points)[0])


def _relevant(
    potential: PairPotential, cube: Cube, gamma: BoundaryConfiguration, beta: float, tol
) -> np.ndarray:
    """Boundary points that can interact with some point of the cube."""
    points = gamma.as_array(cube.dimension)
    if len(points) == 0:
        return points
    if np.any(cube.contains(points)):
        raise ValueError("boundary configuration has a point inside the active cube")
    reach = effective_range(potential, beta, tol)
    return points[cube.distance(points) <= reach]


def _boltzmann(potential, beta, points):
    def weight(xs: np.ndarray) -> np.ndarray:
        return np.exp(-beta * _energies(potential, xs, points))

    return weight


def _check_activity(z: float) -> None:
    if not 0 <= z < math.inf:
        raise ValueError(f"activity must be finite and >= 0, got {z}")


def cube_partition_function(
    potential: PairPotential,
    z: float,
    beta: float,
    cube: Cube,
    gamma: BoundaryConfiguration,
    tol: float = 1e-5,
) -> float:
    """Return Z = exp(-z a^d) (1 + z int_cube exp(-beta H(x u gamma)) dx)."""
    check_beta(beta)
    _check_activity(z)
    points = _relevant(potential, cube, gamma, beta, tol)
    if z == 0:
        return 1.0
    if len(points) == 0:
        integral = cube.volume
    else:
        integral = cube_integral(
            _boltzmann(potential, beta, points),
            cube,
            tol / z,
            jumps=JumpSet(points, potential.breakpoints),
        ).value
    return math.exp(-z * cube.volume) * (1 + z * integral)


def _differing_cube(
    gamma: BoundaryConfiguration, gamma_tilde: BoundaryConfiguration, mesh: float
) -> Optional[tuple[int, ...]]:
    difference = set(gamma.points) ^ set(gamma_tilde.points)
    cubes = {lattice_index(point, mesh) for point in difference}
    if len(cubes) > 1:
        raise ValueError(
            f"boundary configurations differ in more than one cube: {sorted(cubes)}"
        )
    return cubes.pop() if cubes else None


def two_stratum_tv(
    z: float,
    integral: float,
    integral_tilde: float,
    positive_part: float,
) -> float:
    """Combine the single-cube pieces into the total-variation distance.

    With c = 1/(1 + z I), the empty atom has mass c and the one-point stratum density
    z c w(x); `positive_part` is int [c w - c~ w~]^+ dx.
    """
    atom = 1 / (1 + z * integral) - 1 / (1 + z * integral_tilde)
    return min(max(atom, 0.0) + z * positive_part, 1.0)


def _check_authorised(
    potential: PairPotential,
    gamma: BoundaryConfiguration,
    gamma_tilde: BoundaryConfiguration,
) -> None:
    alpha = potential.hard_core_radius
    for name, configuration in (('gamma', gamma), ('gamma_tilde', gamma_tilde)):
        if not configuration.is_authorised(alpha):
            raise ConfigurationError(
                f"boundary configuration {name} has two points within the hard core"
                f" radius {alpha}",
                name,
            )


def cube_tv_distance(
    potential: PairPotential,
    z: float,
    beta: float,
    cube_i: Cube,
    gamma: BoundaryConfiguration,
    gamma_tilde: BoundaryConfiguration,
    tol: float = 1e-5,
) -> float:
    """Return the total-variation distance of the specifications on `cube_i`.

    Both boundary conditions must agree outside one lattice cube. The outcome space is
    the empty configuration plus the one-point stratum, so the distance is
    [e^{-z a^d}(1/Z - 1/Z~)]^+ + z e^{-z a^d} int [w/Z - w~/Z~]^+ dx.
    """
    check_beta(beta)
    _check_activity(z)
    _check_authorised(potential, gamma, gamma_tilde)
    if _differing_cube(gamma, gamma_tilde, cube_i.side) is None or z == 0:
        return 0.0
    points = _relevant(potential, cube_i, gamma, beta, tol)
    points_tilde = _relevant(potential, cube_i, gamma_tilde, beta, tol)
    if {tuple(p) for p in points} == {tuple(p) for p in points_tilde}:
        return 0.0

    weight = _boltzmann(potential, beta, points)
    weight_tilde = _boltzmann(potential, beta, points_tilde)
    jumps = JumpSet(np.concatenate([points, points_tilde]), potential.breakpoints)
    both = cube_integral(
        lambda xs: np.stack([weight(xs), weight_tilde(xs)], axis=1),
        cube_i,
        tol / (4 * z),
        jumps=jumps,
    ).value
    norm = 1 / (1 + z * both[0])
    norm_tilde = 1 / (1 + z * both[1])
    positive = cube_integral(
        lambda xs: np.maximum(norm * weight(xs) - norm_tilde * weight_tilde(xs), 0.0),
        cube_i,
        tol / (2 * z),
        jumps=jumps,
    ).value
    distance = two_stratum_tv(z, both[0], both[1], positive)
    _LOGGER.debug(
        "TV on cube %s: Z-integrals %s, positive part %s, distance %s",
        cube_i,
        both,
        positive,
        distance,
    )
    return distance


@dataclass(frozen=True)
class SearchConfig:
    """Search family and quadrature for the k_ij brackets."""

    y_points: int = 4
    refine: bool = True
    packings: int = 2
    max_subcells: int = 12
    gauss_order: int = 2

    def __post_init__(self) -> None:
        if self.y_points < 2:
            raise ConfigurationError("must be >= 2", "search.y_points")
        if self.packings < 0:
            raise ConfigurationError("must be >= 0", "search.packings")
        if self.max_subcells < 1:
            raise ConfigurationError("must be >= 1", "search.max_subcells")
        if self.gauss_order < 1:
            raise ConfigurationError("must be >= 1", "search.gauss_order")

    @property
    def shifts(self) -> list[float]:
        """Offsets, in mesh units, of the packing candidates from the cube centers."""
        return [(m + 0.5) / self.packings - 0.5 for m in range(self.packings)]


@dataclass(frozen=True)
class KBracket:
    lower: float
    upper: float


@dataclass(frozen=True)
class ZBarResult:
    mesh: float
    mode: Mode
    z_bar: float
    saturated: bool


def _greedy_points(
    disc: Discretization, reach: float, shift: float, exclude: Iterable = ()
) -> tuple[np.ndarray, np.ndarray]:
    """Greedy authorised packing, returned as (points, lattice offsets)."""
    d = disc.dimension
    alpha = disc.potential.hard_core_radius
    excluded = {tuple(k) for k in exclude} | {(0,) * d}
    accepted: list[np.ndarray] = []
    offsets: list[np.ndarray] = []
    for offset in cube_offsets_within(disc.mesh, reach, d):
        if tuple(offset) in excluded:
            continue
        candidate = disc.mesh * (offset + shift)
        if accepted:
            diff = np.asarray(accepted) - candidate
            if np.any(np.sum(diff * diff, axis=1) <= alpha * alpha):
                continue
        accepted.append(candidate)
        offsets.append(offset)
    if not accepted:
        return np.empty((0, d)), np.empty((0, d), dtype=int)
    return np.asarray(accepted), np.asarray(offsets)


def greedy_packing(
    disc: Discretization,
    reach: float,
    shift: float = 0.0,
    exclude: Iterable = (),
) -> BoundaryConfiguration:
    """Return a greedy authorised packing of the cubes within reach of the cube 0.

    Cubes are visited in lexicographic order, each offering one candidate at its center
    moved by `shift` mesh units along every axis; the active cube and `exclude` stay
    empty.
    """
    if not -0.5 < shift <= 0.5:
        raise ValueError(f"shift must lie in (-1/2, 1/2], got {shift}")
    points, _offsets = _greedy_points(disc, reach, shift, exclude)
    return BoundaryConfiguration.from_array(points)


def _composite_rule(
    cube: Cube, subcells: int, order: int
) -> tuple[np.ndarray, np.ndarray]:
    """Composite tensor Gauss-Legendre nodes and weights on a cube."""
    x, w = np.polynomial.legendre.leggauss(order)
    width = cube.side / subcells
    lo = np.asarray(cube.box.lo)
    axis_nodes = (np.arange(subcells)[:, None] + (x[None, :] + 1) / 2).ravel() * width
    axis_weights = np.tile(w / 2, subcells) * width
    d = cube.dimension
    nodes = np.stack(
        np.meshgrid(*([axis_nodes] * d), indexing='ij'), axis=-1
    ).reshape(-1, d)
    weights = np.prod(
        np.stack(np.meshgrid(*([axis_weights] * d), indexing='ij'), axis=-1), axis=-1
    ).ravel()
    return lo + nodes, weights


@dataclass
class _Packing:
    points: np.ndarray
    offsets: np.ndarray
    energies: np.ndarray


@dataclass
class DobrushinSum:
    """Sum over j of k_0j at fixed mesh, inverse temperature and search family.

    Nodes, packings, disagreement points and the upper ends (linear in z) are cached,
    so repeated evaluations along a bisection only redo the lower-end search.
    """

    disc: Discretization
    beta: float
    tol: float = 1e-3
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self) -> None:
        check_beta(self.beta)
        if not self.tol > 0:
            raise ValueError(f"tolerance must be positive, got {self.tol}")
        potential = self.disc.potential
        a, d = self.disc.mesh, self.disc.dimension
        self.reach = effective_range(potential, self.beta, self.tol)
        offsets = cube_offsets_within(a, self.reach, d)
        self.offsets = offsets[np.any(offsets != 0, axis=1)]

        subcells = min(
            max(math.ceil(d * a**d / self.tol), 1), self.search.max_subcells
        )
        self.nodes, self.weights = _composite_rule(
            self.disc.cube((0,) * d), subcells, self.search.gauss_order
        )
        self.packings = [self._packing(np.empty((0, d)), np.empty((0, d), dtype=int))]
        for shift in self.search.shifts:
            self.packings.append(
                self._packing(
                    *_greedy_points(self.disc, self.reach + self.disc.diagonal, shift)
                )
            )
        self._disagreement: dict[tuple[int, ...], tuple[np.ndarray, np.ndarray]] = {}
        self._upper: dict[tuple[int, ...], float] = {}
        _LOGGER.debug(
            "Dobrushin sum at a=%s beta=%s: %s cubes, %s nodes, packings of %s points",
            a,
            self.beta,
            len(self.offsets),
            len(self.weights),
            [len(packing.points) for packing in self.packings],
        )

    def _packing(self, points: np.ndarray, offsets: np.ndarray) -> _Packing:
        """Attach phi(|x_q - p|) for every point p (rows) and node x_q (columns)."""
        if len(points) == 0:
            return _Packing(points, offsets, np.empty((0, len(self.weights))))
        diff = points[:, None, :] - self.nodes[None, :, :]
        distance = np.sqrt(np.sum(diff * diff, axis=2))
        return _Packing(points, offsets, self.disc.potential.evaluate_array(distance))

    def _mayer_matrix(self, ys: np.ndarray) -> np.ndarray:
        diff = ys[:, None, :] - self.nodes[None, :, :]
        r = np.sqrt(np.sum(diff * diff, axis=2))
        return self.disc.potential.mayer_array(self.beta, r)

    def _grid(self, center: np.ndarray, half_width: float, lo, hi) -> np.ndarray:
        d = self.disc.dimension
        axis = np.linspace(-half_width, half_width, self.search.y_points)
        grid = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1)
        return np.clip(center + grid.reshape(-1, d), lo, hi)

    def disagreement(self, offset: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """Return (y points, upper integrals) for the cube at `offset`.

        The y grid spans the closed cube (the open face nudged inside) and is refined
        once around the maximiser of int_{cube 0} (1 - exp(-beta phi(|x - y|))) dx.
        """
        key = tuple(int(k) for k in offset)
        if key not in self._disagreement:
            a = self.disc.mesh
            center = a * np.asarray(key, dtype=float)
            lo = center - a / 2 + a * 1e-9
            hi = center + a / 2
            ys = self._grid(center, a / 2, lo, hi)
            upper = self._mayer_matrix(ys) @ self.weights
            if self.search.refine:
                step = a / (self.search.y_points - 1)
                best = ys[int(np.argmax(upper))]
                extra = self._grid(best, step, lo, hi)
                ys = np.concatenate([ys, extra])
                extra_upper = self._mayer_matrix(extra) @ self.weights
                upper = np.concatenate([upper, extra_upper])
            self._disagreement[key] = (ys, upper)
        return self._disagreement[key]

    def upper(self, offset: Sequence[int], z: float) -> float:
        """z int_{cube 0} (1 - exp(-beta phi(|x - y|))) dx at the maximising grid y.

        The integral is recomputed adaptively at that y with the spheres around it
        declared as jumps; its error estimate is added to the value, capped at the cube
        volume.
        """
        key = tuple(int(k) for k in offset)
        if key not in self._upper:
            ys, grid_upper = self.disagreement(key)
            y = ys[int(np.argmax(grid_upper))]
            potential = self.disc.potential
            d = self.disc.dimension

            def mayer(xs: np.ndarray) -> np.ndarray:
                r = np.sqrt(np.sum((xs - y) ** 2, axis=1))
                return potential.mayer_array(self.beta, r)

            cube = self.disc.cube((0,) * d)
            result = cube_integral(
                mayer,
                cube,
                self.tol * cube.volume,
                jumps=JumpSet(y, potential.breakpoints),
            )
            bound = float(result.value) + result.error_estimate
            self._upper[key] = min(bound, cube.volume)
        return z * self._upper[key]

    def lower(self, offset: Sequence[int], z: float) -> float:
        """Largest TV distance over the searched pairs (gamma, gamma u {y})."""
        if z == 0:
            return 0.0
        ys, _upper = self.disagreement(offset)
        mayer = self._mayer_matrix(ys)
        boltzmann = 1.0 - mayer
        alpha = self.disc.potential.hard_core_radius
        key = np.asarray(offset)
        best = 0.0
        for packing in self.packings:
            keep = ~np.all(packing.offsets == key, axis=1)
            points = packing.points[keep]
            if len(points):
                diff = ys[:, None, :] - points[None, :, :]
                allowed = np.all(np.sum(diff * diff, axis=2) > alpha * alpha, axis=1)
            else:
                allowed = np.ones(len(ys), dtype=bool)
            if not np.any(allowed):
                continue
            w = np.exp(-self.beta * packing.energies[keep].sum(axis=0))
            weighted = self.weights * w
            integral = float(weighted.sum())
            integral_tilde = boltzmann[allowed] @ weighted
            norm = 1 / (1 + z * integral)
            norm_tilde = 1 / (1 + z * integral_tilde)
            atom = np.maximum(norm - norm_tilde, 0.0)
            spread = np.maximum(norm - boltzmann[allowed] * norm_tilde[:, None], 0.0)
            distance = atom + z * (spread @ weighted)
            best = max(best, float(distance.max()))
        return min(best, 1.0, self.upper(offset, z))

    def bracket(self, offset: Sequence[int], z: float) -> KBracket:
        if not np.any(np.asarray(offset) != 0):
            raise ValueError("k_ij needs i != j")
        _check_activity(z)
        if not any(np.array_equal(offset, k) for k in self.offsets):
            return KBracket(0.0, 0.0)
        return KBracket(self.lower(offset, z), self.upper(offset, z))

    def evaluate(self, z: float, mode: Mode | str) -> float:
        """Return sum over j != 0 of the chosen bracket end at activity z."""
        mode = Mode(mode)
        _check_activity(z)
        if z == 0:
            return 0.0
        if mode == Mode.UPPER:
            terms = [self.upper(offset, z) for offset in self.offsets]
        else:
            terms = [self.lower(offset, z) for offset in self.offsets]
        total = math.fsum(terms)
        _LOGGER.debug("Dobrushin sum (%s) at z=%s: %s", mode, z, total)
        return total


def k_ij(
    disc: Discretization,
    z: float,
    beta: float,
    i: Sequence[int],
    j: Sequence[int],
    search: Optional[SearchConfig] = None,
    tol: float = 1e-3,
) -> KBracket:
    """Bracket the Dobrushin coefficient k_ij; depends on j - i only."""
    offset = tuple(int(b) - int(a) for a, b in zip(i, j))
    return DobrushinSum(disc, beta, tol, search or SearchConfig()).bracket(offset, z)


def dobrushin_sum(
    disc: Discretization,
    z: float,
    beta: float,
    mode: Mode | str,
    tol: float = 1e-3,
    search: Optional[SearchConfig] = None,
) -> float:
    """Return sum over j != i of the chosen end of the k_ij brackets."""
    return DobrushinSum(disc, beta, tol, search or SearchConfig()).evaluate(z, mode)


def zbar_of_a(
    disc: Discretization,
    beta: float,
    mode: Mode | str,
    tol_z: float = 1e-5,
    *,
    tol: float = 1e-3,
    search: Optional[SearchConfig] = None,
    z_max: Optional[float] = None,
) -> ZBarResult:
    """Return the activity where the Dobrushin sum reaches one.

    In upper mode the result is a certified uniqueness activity at mesh a; in lower mode
    it is an optimistic estimate. If the sum stays below one up to `z_max` the top of
    the interval is returned with `saturated` set.
    """
    mode = Mode(mode)
    total = DobrushinSum(disc, beta, tol, search or SearchConfig())
    if z_max is None:
        slope = total.evaluate(1.0, Mode.UPPER)
        # the lower sum is dominated by the upper one, so its root lies further out
        z_max = 16 / slope if slope > 0 else 1.0

    def excess(z: float) -> float:
        return total.evaluate(z, mode) - 1

    if excess(z_max) < 0:
        _LOGGER.debug("Dobrushin sum below one up to z=%s at a=%s", z_max, disc.mesh)
        return ZBarResult(disc.mesh, mode, z_max, True)
    try:
        z_bar = optimize.bisect(excess, 0.0, z_max, xtol=tol_z)
    except (RuntimeError, ValueError) as exc:
        raise BisectionError(
            f"bisection for z_bar(a={disc.mesh}) failed: {exc}"
        ) from exc
    _LOGGER.debug("z_bar(a=%s, %s) = %s", disc.mesh, mode, z_bar)
    return ZBarResult(disc.mesh, mode, z_bar, False)
