"Factory to generate pair potentials from their kind name and parameters"

import logging
from typing import Sequence

import numpy as np

from .exceptions import ConfigurationError
from .potentials import (
    CustomRadial,
    HardCoreStep,
    HardSphere,
    PairPotential,
    PotentialKind,
    Strauss,
)

_LOGGER = logging.getLogger(__name__)

POTENTIAL_CLASSES = {
    PotentialKind.HARD_SPHERE: HardSphere,
    PotentialKind.HARD_CORE_STEP: HardCoreStep,
    PotentialKind.STRAUSS: Strauss,
}


def tabulated_potential(
    table: Sequence[Sequence[float]],
    dimension: int = 2,
    hard_core_radius: float | None = None,
) -> CustomRadial:
    """Build a piecewise-constant radial potential.

    `table` lists `(r_k, phi_k)` with increasing `r_k`; `phi_k` applies on
    `(r_{k-1}, r_k]` (with `r_{-1} = 0` and the first interval closed at 0) and the
    profile is 0 beyond the last radius.
    """
    if not table:
        raise ConfigurationError("profile table is empty", "potential.profile")
    radii = np.array([float(row[0]) for row in table])
    levels = np.array([float(row[1]) for row in table])
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ConfigurationError(
            "radii must be positive and increasing", "potential.profile"
        )

    # phi = +inf on a leading run of rows is the hard core
    inferred_core = 0.0
    for radius, level in zip(radii, levels):
        if not np.isposinf(level):
            break
        inferred_core = float(radius)
    if hard_core_radius is None:
        hard_core_radius = inferred_core

    positive = np.nonzero(levels != 0)[0]
    interaction_range = float(radii[positive[-1]]) if positive.size else float(radii[0])
    capped = np.where(np.isinf(levels), np.finfo(float).max, levels)
    monotone = bool(np.all(np.diff(capped) <= 0))

    def profile(r: np.ndarray) -> np.ndarray:
        index = np.searchsorted(radii, r, side='left')
        padded = np.append(levels, 0.0)
        return padded[np.minimum(index, len(levels))]

    return CustomRadial(
        profile=profile,
        hard_core_radius=float(hard_core_radius),
        interaction_range=interaction_range,
        dimension=dimension,
        declared_monotone=monotone,
        declared_breakpoints=tuple(float(r) for r in radii),
    )


def create_potential(kind: str, **params) -> PairPotential:
    """Init the pair potential corresponding to `kind`."""
    try:
        kind = PotentialKind(kind)
    except ValueError as exc:
        raise ConfigurationError(
            f"unknown potential kind {kind!r}", "potential.kind"
        ) from exc

    if kind == PotentialKind.CUSTOM_RADIAL:
        if 'profile' not in params:
            raise ConfigurationError(
                "custom-radial needs a profile table", "potential.profile"
            )
        potential = tabulated_potential(
            params.pop('profile'),
            dimension=params.pop('dimension', 2),
            hard_core_radius=params.pop('hard_core_radius', None),
        )
        if params:
            raise ConfigurationError(
                f"unexpected parameters {sorted(params)}", "potential"
            )
    else:
        try:
            potential = POTENTIAL_CLASSES[kind](**params)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc), "potential") from exc

    _LOGGER.debug("Generated potential: %s", potential)
    return potential
