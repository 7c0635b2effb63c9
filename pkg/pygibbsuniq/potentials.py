"""Non-negative radial pair potentials and their Mayer function."""

from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum
import logging
import math
from typing import Optional

import numpy as np

from .exceptions import InvalidPotentialError

_LOGGER = logging.getLogger(__name__)


class PotentialKind(StrEnum):
    """Concrete potential families."""

    HARD_SPHERE = 'hard-sphere'
    HARD_CORE_STEP = 'hard-core-step'
    STRAUSS = 'strauss'
    CUSTOM_RADIAL = 'custom-radial'


@dataclass(frozen=True)
class ValidationReport:
    """Structural properties of a potential, as checked by `PairPotential.validate`."""

    a1_hard_core: bool
    finite_range: bool
    monotone: bool


def check_beta(beta: float) -> None:
    """Reject non-positive or non-finite inverse temperatures."""
    if not beta > 0 or not math.isfinite(beta):
        raise ValueError(f"inverse temperature must be positive, got {beta}")


def check_distance(r: float) -> None:
    """Reject negative or undefined distances."""
    if not r >= 0:
        raise ValueError(f"distance must be non-negative, got {r}")


class PairPotential:
    """Radial, translation invariant pair potential phi(|x - y|) >= 0.

    Concrete families set `KIND` and implement `_profile`, which maps an array of
    distances to an array of extended reals (`inf` inside the hard core). The hard-core
    set is the closed ball of radius `hard_core_radius`.
    """

    KIND: PotentialKind

    # grid size used to spot-check declared metadata
    VALIDATION_POINTS = 2049

    dimension: int
    hard_core_radius: float
    interaction_range: float

    def _profile(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_dimension(self) -> None:
        if not isinstance(self.dimension, int) or self.dimension < 1:
            raise ValueError(f"dimension must be an integer >= 1, got {self.dimension}")

    @property
    def kind(self) -> PotentialKind:
        """Return the potential family."""
        return self.KIND

    @property
    def monotone(self) -> bool:
        """Return True if the profile is non-increasing in r."""
        return True

    @property
    def finite_range(self) -> bool:
        """Return True if phi vanishes beyond a finite radius."""
        return math.isfinite(self.interaction_range)

    @property
    def support_radius(self) -> float:
        """Return the radius of the support {r: phi(r) > 0}."""
        return self.interaction_range

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Return the radii where the profile may jump, sorted."""
        radii = {self.hard_core_radius, self.interaction_range}
        return tuple(sorted(r for r in radii if 0 < r < math.inf))

    @property
    def envelope(self) -> Optional[Callable[[np.ndarray], np.ndarray]]:
        """Return an integrable bound on phi beyond `envelope_start`, if declared."""
        return None

    @property
    def envelope_start(self) -> Optional[float]:
        """Return the radius from which `envelope` bounds the profile."""
        return None

    def evaluate(self, r: float) -> float:
        """Return phi(r)."""
        check_distance(r)
        return float(self._profile(np.asarray([r], dtype=float))[0])

    def evaluate_array(self, r) -> np.ndarray:
        """Return phi on an array of non-negative distances."""
        return np.asarray(self._profile(np.asarray(r, dtype=float)), dtype=float)

    def mayer_value(self, beta: float, r: float) -> float:
        """Return the Mayer function 1 - exp(-beta phi(r))."""
        check_beta(beta)
        check_distance(r)
        return float(self.mayer_array(beta, np.asarray([r], dtype=float))[0])

    def mayer_array(self, beta: float, r) -> np.ndarray:
        """Return the Mayer function on an array of distances."""
        phi = self.evaluate_array(r)
        # expm1 keeps small beta*phi accurate, +0.0 clears the negative zero
        return -np.expm1(-beta * phi) + 0.0

    def validate(self) -> ValidationReport:
        """Spot-check the profile against the declared metadata."""
        alpha = self.hard_core_radius
        scale = max(self.breakpoints, default=1.0)
        if self.envelope_start is not None:
            scale = max(scale, self.envelope_start)
        r = np.linspace(0.0, 2.0 * scale, self.VALIDATION_POINTS)
        r = np.union1d(r, self.breakpoints)
        try:
            values = self.evaluate_array(r)
        except (TypeError, ValueError) as exc:
            raise InvalidPotentialError(f"{self.kind} profile failed: {exc}") from exc

        if values.shape != r.shape or np.any(np.isnan(values)):
            raise InvalidPotentialError(
                f"{self.kind} profile returned undefined values"
            )
        if np.any(values < 0):
            bad = r[values < 0][0]
            raise InvalidPotentialError(
                f"{self.kind} profile is negative at r={bad}: {self.evaluate(bad)}"
            )
        if alpha > 0 and not np.all(np.isposinf(values[r <= alpha])):
            raise InvalidPotentialError(
                f"{self.kind} profile is finite inside its hard core of radius {alpha}"
            )
        if self.finite_range and np.any(values[r > self.interaction_range] != 0):
            raise InvalidPotentialError(
                f"{self.kind} profile does not vanish beyond R={self.interaction_range}"
            )

        capped = np.where(np.isinf(values), np.finfo(float).max, values)
        observed_monotone = bool(np.all(np.diff(capped) <= 0))
        if self.monotone and not observed_monotone:
            raise InvalidPotentialError(
                f"{self.kind} profile is declared non-increasing but is not"
            )
        report = ValidationReport(
            a1_hard_core=alpha > 0,
            finite_range=self.finite_range,
            monotone=observed_monotone,
        )
        _LOGGER.debug("Validated %s: %s", self, report)
        return report


@dataclass(frozen=True)
class HardSphere(PairPotential):
    """phi = +inf on |x - y| <= radius, 0 elsewhere."""

    KIND = PotentialKind.HARD_SPHERE

    radius: float = 1.0
    dimension: int = 2

    def __post_init__(self) -> None:
        self._check_dimension()
        if not 0 < self.radius < math.inf:
            raise ValueError(f"hard-sphere radius must be positive, got {self.radius}")

    @property
    def hard_core_radius(self) -> float:
        return self.radius

    @property
    def interaction_range(self) -> float:
        return self.radius

    def _profile(self, r: np.ndarray) -> np.ndarray:
        return np.where(r <= self.radius, math.inf, 0.0)


@dataclass(frozen=True)
class HardCoreStep(PairPotential):
    """Hard core of radius `hard_core_radius` plus a constant step up to the range."""

    KIND = PotentialKind.HARD_CORE_STEP

    hard_core_radius: float = 1.0
    interaction_range: float = 3.0
    step_height: float = 1.0
    dimension: int = 2

    def __post_init__(self) -> None:
        self._check_dimension()
        if not 0 < self.hard_core_radius < self.interaction_range < math.inf:
            raise ValueError(
                "hard-core-step needs 0 < hard_core_radius < interaction_range < inf"
            )
        if not 0 <= self.step_height < math.inf:
            raise ValueError(f"step height must be finite and >= 0: {self.step_height}")

    @property
    def support_radius(self) -> float:
        if self.step_height == 0:
            return self.hard_core_radius
        return self.interaction_range

    def _profile(self, r: np.ndarray) -> np.ndarray:
        step = np.where(r <= self.interaction_range, self.step_height, 0.0)
        return np.where(r <= self.hard_core_radius, math.inf, step)


@dataclass(frozen=True)
class Strauss(PairPotential):
    """phi = strength on |x - y| <= interaction_range; no hard core."""

    KIND = PotentialKind.STRAUSS

    interaction_range: float = 1.0
    strength: float = 1.0
    dimension: int = 2

    def __post_init__(self) -> None:
        self._check_dimension()
        if not 0 < self.interaction_range < math.inf:
            raise ValueError("strauss interaction range must be positive and finite")
        if not 0 < self.strength < math.inf:
            raise ValueError(f"strauss strength must be positive, got {self.strength}")

    @property
    def hard_core_radius(self) -> float:
        return 0.0

    def _profile(self, r: np.ndarray) -> np.ndarray:
        return np.where(r <= self.interaction_range, self.strength, 0.0)


@dataclass(frozen=True)
class CustomRadial(PairPotential):
    """User supplied radial profile with declared metadata.

    `profile` must accept a numpy array of distances. Metadata is trusted by the
    numerical modules and spot-checked by `validate`. Infinite-range profiles need an
    `envelope` (with `envelope_start`) to be integrated with a certified truncation.
    """

    KIND = PotentialKind.CUSTOM_RADIAL

    profile: Callable[[np.ndarray], np.ndarray]
    hard_core_radius: float = 0.0
    interaction_range: float = math.inf
    dimension: int = 2
    declared_monotone: bool = True
    declared_breakpoints: tuple[float, ...] = ()
    declared_envelope: Optional[Callable[[np.ndarray], np.ndarray]] = None
    declared_envelope_start: Optional[float] = None

    def __post_init__(self) -> None:
        self._check_dimension()
        if not 0 <= self.hard_core_radius <= self.interaction_range:
            raise ValueError("custom potential needs 0 <= hard_core_radius <= range")
        if self.interaction_range <= 0:
            raise ValueError("custom potential needs a positive interaction range")
        if (self.declared_envelope is None) != (self.declared_envelope_start is None):
            raise ValueError("envelope and envelope_start must be given together")

    @property
    def monotone(self) -> bool:
        return self.declared_monotone

    @property
    def breakpoints(self) -> tuple[float, ...]:
        radii = set(super().breakpoints) | set(self.declared_breakpoints)
        return tuple(sorted(r for r in radii if 0 < r < math.inf))

    @property
    def envelope(self) -> Optional[Callable[[np.ndarray], np.ndarray]]:
        return self.declared_envelope

    @property
    def envelope_start(self) -> Optional[float]:
        return self.declared_envelope_start

    def _profile(self, r: np.ndarray) -> np.ndarray:
        values = np.asarray(self.profile(r), dtype=float)
        if self.hard_core_radius > 0:
            values = np.where(r <= self.hard_core_radius, math.inf, values)
        return values


def is_zero_potential(potential: PairPotential) -> bool:
    """Return True if phi vanishes identically (checked on the validation grid)."""
    if potential.hard_core_radius > 0:
        return False
    scale = max(potential.breakpoints, default=1.0)
    r = np.union1d(np.linspace(0.0, 2.0 * scale, 257), potential.breakpoints)
    return bool(np.all(potential.evaluate_array(r) == 0))
