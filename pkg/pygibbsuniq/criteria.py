"""Explicit uniqueness bounds z_bar(beta) for each criterion and their region curves."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
import logging
import math
from typing import Optional

from scipy import optimize

from .exceptions import BisectionError, UnsupportedError
from .mayer import MayerIntegralResult, mayer_integral
from .numerics import unit_ball_volume
from .potentials import PairPotential, PotentialKind, check_beta, is_zero_potential

_LOGGER = logging.getLogger(__name__)

# constant-weight cluster expansion improved for 2-d hard spheres
IMPROVED_CLUSTER_CONSTANT = 0.5107


class Method(StrEnum):
    """Uniqueness criteria."""

    DOBRUSHIN_LIMIT = 'dobrushin-limit'
    DOBRUSHIN_CONJECTURE = 'dobrushin-conjecture'
    CLUSTER_EXPANSION = 'cluster-expansion'
    CLUSTER_EXPANSION_IMPROVED = 'cluster-expansion-improved'
    DISAGREEMENT_PERCOLATION = 'disagreement-percolation'
    SUPPORT_VOLUME = 'support-volume'


BETA_INDEPENDENT = frozenset(
    {Method.DISAGREEMENT_PERCOLATION, Method.SUPPORT_VOLUME}
)


class Provenance(StrEnum):
    """Where a percolation threshold comes from."""

    MEASURED_2D = 'measured-2d'
    LOWER_BOUND = 'lower-bound-1-over-vd'
    USER_SUPPLIED = 'user-supplied'


@dataclass(frozen=True)
class PercolationThreshold:
    """Critical activity z_c(d) of the Poisson Boolean model with unit-radius balls."""

    dimension: int
    z_c: float
    provenance: Provenance

    def __post_init__(self) -> None:
        lower = 1 / unit_ball_volume(self.dimension)
        if self.z_c < lower * (1 - 1e-12):
            raise ValueError(
                f"z_c({self.dimension}) = {self.z_c} is below the bound 1/v_d = {lower}"
            )

    @property
    def certified(self) -> bool:
        return self.provenance != Provenance.LOWER_BOUND


BUILTIN_THRESHOLDS = {
    2: PercolationThreshold(2, 1.43629, Provenance.MEASURED_2D),
}


@dataclass(frozen=True)
class UniquenessBound:
    """Activity frontier z_bar at inverse temperature beta for one criterion."""

    method: Method
    beta: float
    z_bar: float
    certified: bool
    error_estimate: float

    def __post_init__(self) -> None:
        if not self.z_bar >= 0:
            raise ValueError(f"z_bar must be >= 0, got {self.z_bar}")

    @property
    def infinite(self) -> bool:
        return math.isinf(self.z_bar)


def percolation_threshold(
    d: int, table: Optional[Mapping[int, float]] = None
) -> PercolationThreshold:
    """Return z_c(d): user table first, then the built-in one, then 1/v_d."""
    if table and d in table:
        return PercolationThreshold(d, float(table[d]), Provenance.USER_SUPPLIED)
    if d in BUILTIN_THRESHOLDS:
        return BUILTIN_THRESHOLDS[d]
    _LOGGER.debug("No percolation threshold for d=%s, using 1/v_d", d)
    return PercolationThreshold(d, 1 / unit_ball_volume(d), Provenance.LOWER_BOUND)


def _inverse(mayer: MayerIntegralResult) -> tuple[float, float]:
    """Return 1/M and its propagated error; M = 0 gives an infinite bound."""
    if mayer.value == 0:
        return math.inf, 0.0
    return 1 / mayer.value, mayer.error_estimate / mayer.value**2


def dobrushin_bound(
    potential: PairPotential, beta: float, tol: float = 1e-8
) -> UniquenessBound:
    """Return the limiting Dobrushin bound z < 1/M(beta).

    Certified under a hard core; without one the same number is the conjectured region.
    """
    check_beta(beta)
    z_bar, error = _inverse(mayer_integral(potential, beta, tol))
    certified = potential.hard_core_radius > 0
    return UniquenessBound(
        method=Method.DOBRUSHIN_LIMIT if certified else Method.DOBRUSHIN_CONJECTURE,
        beta=beta,
        z_bar=z_bar,
        certified=certified,
        error_estimate=error,
    )


def cluster_expansion_bound(
    potential: PairPotential, beta: float, tol: float = 1e-8, improved: bool = False
) -> UniquenessBound:
    """Return the constant-weight cluster expansion bound z M(beta) < 1/e.

    `improved` uses z M(beta) < 0.5107, known only for 2-d hard spheres.
    """
    check_beta(beta)
    if improved and (
        potential.kind != PotentialKind.HARD_SPHERE or potential.dimension != 2
    ):
        raise UnsupportedError(
            "the improved cluster expansion constant only holds for 2-d hard spheres, "
            f"got {potential.kind} in d={potential.dimension}"
        )
    z_limit, error = _inverse(mayer_integral(potential, beta, tol))
    if improved:
        return UniquenessBound(
            method=Method.CLUSTER_EXPANSION_IMPROVED,
            beta=beta,
            z_bar=IMPROVED_CLUSTER_CONSTANT * z_limit,
            certified=True,
            error_estimate=IMPROVED_CLUSTER_CONSTANT * error,
        )
    return UniquenessBound(
        method=Method.CLUSTER_EXPANSION,
        beta=beta,
        z_bar=z_limit / math.e,
        certified=True,
        error_estimate=error / math.e,
    )


def disagreement_percolation_bound(
    potential: PairPotential,
    thresholds: Optional[Mapping[int, float]] = None,
    *,
    beta: float = math.nan,
) -> UniquenessBound:
    """Return z < z_c(d) / R^d; independent of beta."""
    if not potential.finite_range:
        raise UnsupportedError(
            "disagreement percolation needs a finite interaction range"
        )
    threshold = percolation_threshold(potential.dimension, thresholds)
    z_bar = threshold.z_c / potential.interaction_range**potential.dimension
    return UniquenessBound(
        method=Method.DISAGREEMENT_PERCOLATION,
        beta=beta,
        z_bar=z_bar,
        certified=threshold.certified,
        error_estimate=0.0,
    )


def support_volume_bound(
    potential: PairPotential, *, beta: float = math.nan
) -> UniquenessBound:
    """Return z < 1/vol({y: phi(|y|) > 0}); independent of beta."""
    radius = potential.support_radius
    if math.isinf(radius):
        raise UnsupportedError(f"{potential.kind} has an unbounded support")
    if is_zero_potential(potential):
        z_bar = math.inf
    else:
        d = potential.dimension
        z_bar = 1 / (unit_ball_volume(d) * radius**d)
    return UniquenessBound(
        method=Method.SUPPORT_VOLUME,
        beta=beta,
        z_bar=z_bar,
        certified=True,
        error_estimate=0.0,
    )


def bound(
    potential: PairPotential,
    method: Method | str,
    beta: float,
    tol: float = 1e-8,
    thresholds: Optional[Mapping[int, float]] = None,
) -> UniquenessBound:
    """Return the bound of `method` at `beta`."""
    method = Method(method)
    check_beta(beta)
    if method in (Method.DOBRUSHIN_LIMIT, Method.DOBRUSHIN_CONJECTURE):
        return dobrushin_bound(potential, beta, tol)
    if method == Method.CLUSTER_EXPANSION:
        return cluster_expansion_bound(potential, beta, tol)
    if method == Method.CLUSTER_EXPANSION_IMPROVED:
        return cluster_expansion_bound(potential, beta, tol, improved=True)
    if method == Method.DISAGREEMENT_PERCOLATION:
        return disagreement_percolation_bound(potential, thresholds, beta=beta)
    return support_volume_bound(potential, beta=beta)


def region_curve(
    potential: PairPotential,
    method: Method | str,
    beta_grid: Sequence[float],
    tol: float = 1e-8,
    thresholds: Optional[Mapping[int, float]] = None,
) -> list[UniquenessBound]:
    """Return one bound per beta, in the order of `beta_grid`."""
    betas = [float(beta) for beta in beta_grid]
    if not betas or any(beta <= 0 for beta in betas):
        raise ValueError("beta grid must be non-empty and positive")
    if any(b < a for a, b in zip(betas, betas[1:])):
        raise ValueError("beta grid must be sorted")
    return [bound(potential, method, beta, tol, thresholds) for beta in betas]


def curve_crossing(
    potential: PairPotential,
    method_a: Method | str,
    method_b: Method | str,
    beta_lo: float,
    beta_hi: float,
    tol: float = 1e-10,
    thresholds: Optional[Mapping[int, float]] = None,
) -> float:
    """Return the inverse temperature where the two region curves cross."""

    def difference(beta: float) -> float:
        return (
            bound(potential, method_a, beta, tol, thresholds).z_bar
            - bound(potential, method_b, beta, tol, thresholds).z_bar
        )

    low, high = difference(beta_lo), difference(beta_hi)
    if not (math.isfinite(low) and math.isfinite(high)) or low * high > 0:
        raise BisectionError(
            f"{method_a} and {method_b} do not cross on [{beta_lo}, {beta_hi}]: "
            f"differences {low} and {high}"
        )
    try:
        beta_star = optimize.brentq(difference, beta_lo, beta_hi, xtol=1e-10)
    except (RuntimeError, ValueError) as exc:
        raise BisectionError(str(exc)) from exc
    _LOGGER.debug("%s and %s cross at beta=%s", method_a, method_b, beta_star)
    return beta_star
