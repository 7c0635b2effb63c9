"""Mayer integral, cube-wise local supremum integral and regularity checks."""

from collections.abc import Sequence
from dataclasses import dataclass
from enum import StrEnum
import logging
import math
from typing import Optional

import numpy as np

from .exceptions import ConfigurationError, UnsupportedError
from .numerics import (
    cube_offsets_within,
    radial_integral,
    truncation_radius,
)
from .potentials import PairPotential, check_beta

_LOGGER = logging.getLogger(__name__)

# x-grid per axis over the fundamental cell, before the refinement pass
PSI_X_POINTS = 5


@dataclass(frozen=True)
class MayerIntegralResult:
    """M(beta) = int (1 - exp(-beta phi(|y|))) dy."""

    value: float
    error_estimate: float
    beta: float
    truncation_radius: float


@dataclass(frozen=True)
class PsiIntegralResult:
    """sup over x of the integral of the cube-wise supremum of the Mayer function."""

    value: float
    error_estimate: float
    mesh: float
    x_argmax: tuple[float, ...]


class Verdict(StrEnum):
    """Empirical outcome of a regularity check."""

    CONVERGED = 'converged'
    NOT_YET_CONVERGED = 'not-yet-converged'


@dataclass(frozen=True)
class RegularityRow:
    mesh: float
    psi_integral: float
    mayer_integral: float
    gap: float


@dataclass(frozen=True)
class RegularityReport:
    """Gaps between the local supremum integrals and the Mayer integral."""

    rows: tuple[RegularityRow, ...]
    mayer: MayerIntegralResult
    decreasing: bool
    verdict: Verdict

    @property
    def gaps(self) -> list[float]:
        return [row.gap for row in self.rows]


def _truncation(
    potential: PairPotential, beta: float, tol: float
) -> tuple[float, float]:
    if potential.finite_range:
        return potential.interaction_range, 0.0
    if potential.envelope is None:
        raise UnsupportedError(
            f"{potential.kind} has infinite range and no envelope to bound its tail"
        )
    return truncation_radius(
        potential.envelope, potential.envelope_start, beta, potential.dimension, tol
    )


def mayer_integral(
    potential: PairPotential, beta: float, tol: float = 1e-8
) -> MayerIntegralResult:
    """Return M(beta) for a radial potential.

    The supremum over x is trivial by translation invariance. Infinite-range
    potentials are truncated at a radius whose certified tail is added to the error.
    """
    check_beta(beta)
    r_max, tail = _truncation(potential, beta, tol)
    result = radial_integral(
        lambda r: potential.mayer_array(beta, r),
        potential.dimension,
        r_max,
        tol - tail,
        potential.breakpoints,
    )
    mayer = MayerIntegralResult(
        value=max(float(result.value), 0.0),
        error_estimate=result.error_estimate + tail,
        beta=beta,
        truncation_radius=r_max,
    )
    _LOGGER.debug("Mayer integral of %s at beta=%s: %s", potential, beta, mayer)
    return mayer


def _cube_sup_nearest(potential, beta, mesh, offsets):
    """Per-cube supremum for non-increasing profiles: nearest point of the cube."""

    def evaluate(x: np.ndarray) -> np.ndarray:
        gap = np.maximum(np.abs(offsets * mesh - x) - mesh / 2, 0.0)
        return potential.mayer_array(beta, np.sqrt(np.sum(gap * gap, axis=1)))

    return evaluate


def _cube_sup_sampled(potential, beta, mesh, offsets, sample_points):
    """Per-cube supremum by sampling a closed grid of each cube."""
    d = offsets.shape[1]
    axis = np.linspace(-0.5, 0.5, sample_points)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1).reshape(-1, d)

    def evaluate(x: np.ndarray) -> np.ndarray:
        values = np.empty(len(offsets))
        for start in range(0, len(offsets), 1024):
            block = offsets[start : start + 1024]
            points = (block[:, None, :] + grid[None, :, :]) * mesh
            r = np.sqrt(np.sum((points - x) ** 2, axis=2))
            values[start : start + 1024] = potential.mayer_array(beta, r).max(axis=1)
        return values

    return evaluate


def psi_integral(
    potential: PairPotential,
    beta: float,
    a: float,
    tol: float = 1e-8,
    *,
    x_points: int = PSI_X_POINTS,
    refine: bool = True,
    sample_points: Optional[int] = None,
) -> PsiIntegralResult:
    """Return sup_x int Psi_a(x, y) dy.

    For each x of a grid over the fundamental cell, the lattice cubes within reach
    contribute their volume times the supremum of the Mayer function over the cube; the
    maximum over the grid is refined once around the maximiser. Non-increasing profiles
    use the exact nearest-point supremum, others need `sample_points` per cube axis.
    """
    check_beta(beta)
    if not a > 0:
        raise ValueError(f"mesh must be positive, got {a}")
    if x_points < 2:
        raise ValueError(f"x_points must be >= 2, got {x_points}")
    d = potential.dimension
    r_eff, tail = _truncation(potential, beta, tol)
    reach = r_eff if potential.finite_range else r_eff + a * math.sqrt(d)
    offsets = cube_offsets_within(a, reach, d).astype(float)

    if potential.monotone:
        cube_sup = _cube_sup_nearest(potential, beta, a, offsets)
    elif sample_points is None:
        raise ConfigurationError(
            f"{potential.kind} profile is not monotone; a per-cube sampling density is "
            "needed",
            "tolerances.psi_sample_points",
        )
    else:
        cube_sup = _cube_sup_sampled(potential, beta, a, offsets, sample_points)

    volume = a**d

    def best_of(xs: np.ndarray) -> tuple[float, np.ndarray]:
        values = [volume * float(np.sum(cube_sup(x))) for x in xs]
        best = int(np.argmax(values))
        return values[best], xs[best]

    step = a / (x_points - 1)
    axis = np.linspace(-a / 2, a / 2, x_points)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1).reshape(-1, d)
    value, x_best = best_of(grid)
    if refine:
        local = np.linspace(-step, step, x_points)
        around = np.stack(np.meshgrid(*([local] * d), indexing='ij'), axis=-1)
        around = np.clip(x_best + around.reshape(-1, d), -a / 2, a / 2)
        refined, x_refined = best_of(around)
        if refined > value:
            value, x_best = refined, x_refined

    result = PsiIntegralResult(
        value=value,
        error_estimate=tail,
        mesh=a,
        x_argmax=tuple(float(v) for v in x_best),
    )
    _LOGGER.debug(
        "Psi integral of %s at a=%s over %s cubes: %s",
        potential,
        a,
        len(offsets),
        result,
    )
    return result


def check_regularity_A3(  # pylint: disable=invalid-name
    potential: PairPotential,
    beta: float,
    mesh_sequence: Sequence[float],
    tol: float = 1e-3,
    *,
    x_points: int = PSI_X_POINTS,
    sample_points: Optional[int] = None,
) -> RegularityReport:
    """Report how sup_x int Psi_a approaches M(beta) along a decreasing mesh sequence.

    The verdict is empirical: `converged` when the gaps never increase and the gap at
    the finest mesh is below `tol`.
    """
    meshes = [float(a) for a in mesh_sequence]
    if not meshes or any(a <= 0 for a in meshes):
        raise ValueError("mesh sequence must be non-empty and positive")
    if any(b >= a for a, b in zip(meshes, meshes[1:])):
        raise ValueError(f"mesh sequence must be strictly decreasing: {meshes}")

    mayer = mayer_integral(potential, beta, min(tol, 1e-8))
    rows = []
    for a in meshes:
        psi = psi_integral(
            potential,
            beta,
            a,
            min(tol, 1e-8),
            x_points=x_points,
            sample_points=sample_points,
        )
        rows.append(RegularityRow(a, psi.value, mayer.value, psi.value - mayer.value))

    slack = mayer.error_estimate
    gaps = [row.gap for row in rows]
    # strictly shrinking while positive, then stuck at zero
    decreasing = all(
        later < earlier or (abs(later) <= slack and abs(earlier) <= slack)
        for earlier, later in zip(gaps, gaps[1:])
    )
    converged = decreasing and abs(gaps[-1]) <= tol
    report = RegularityReport(
        rows=tuple(rows),
        mayer=mayer,
        decreasing=decreasing,
        verdict=Verdict.CONVERGED if converged else Verdict.NOT_YET_CONVERGED,
    )
    _LOGGER.debug(
        "Regularity check for %s: gaps %s, %s", potential, gaps, report.verdict
    )
    return report
