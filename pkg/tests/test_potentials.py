import math

import numpy as np
import pytest

from pygibbsuniq.exceptions import InvalidPotentialError
from pygibbsuniq.potentials import (
    CustomRadial,
    HardCoreStep,
    HardSphere,
    PotentialKind,
    Strauss,
    is_zero_potential,
)


@pytest.mark.parametrize(
    'potential,r,value',
    [
        (HardSphere(radius=1.0), 0.0, math.inf),
        (HardSphere(radius=1.0), 1.0, math.inf),
        (HardSphere(radius=1.0), 1.0 + 1e-12, 0.0),
        (HardCoreStep(), 0.5, math.inf),
        (HardCoreStep(), 2.0, 1.0),
        (HardCoreStep(), 3.0, 1.0),
        (HardCoreStep(), 3.5, 0.0),
        (Strauss(strength=2.0), 0.0, 2.0),
        (Strauss(strength=2.0), 1.0, 2.0),
        (Strauss(strength=2.0), 1.5, 0.0),
    ],
)
def test_evaluate(potential, r, value):
    assert potential.evaluate(r) == value


@pytest.mark.parametrize(
    'potential,beta,r,value',
    [
        (HardSphere(), 1.0, 0.5, 1.0),
        (HardSphere(), 1.0, 2.0, 0.0),
        (Strauss(), 1.0, 0.5, 1 - math.exp(-1)),
        (HardCoreStep(), 1.0, 2.0, 1 - math.exp(-1)),
        (HardCoreStep(step_height=5.0), 0.5, 2.0, 1 - math.exp(-2.5)),
    ],
)
def test_mayer_value(potential, beta, r, value):
    assert potential.mayer_value(beta, r) == pytest.approx(value, abs=1e-15)


def test_mayer_small_beta_keeps_precision():
    assert Strauss().mayer_value(1e-12, 0.5) == pytest.approx(1e-12, rel=1e-9)


def test_mayer_is_not_negative_zero():
    value = HardSphere().mayer_value(1.0, 3.0)
    assert value == 0.0
    assert math.copysign(1.0, value) == 1.0


@pytest.mark.parametrize(
    'potential',
    [
        HardSphere(),
        HardCoreStep(),
        Strauss(strength=2.0),
        CustomRadial(
            profile=lambda r: np.where(r <= 2.0, 2.0 - r, 0.0),
            interaction_range=2.0,
        ),
    ],
)
def test_mayer_is_bounded_and_grows_with_beta(potential):
    r = np.linspace(0.0, 4.0, 4001)
    betas = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0]
    values = np.array([[potential.mayer_value(beta, x) for x in r] for beta in betas])
    assert np.all((values >= 0.0) & (values <= 1.0))
    assert np.all(np.diff(values, axis=0) >= 0.0)
    if isinstance(potential, HardSphere):
        assert np.all(values == values[0])


@pytest.mark.parametrize('beta', [0.0, -1.0, math.inf, math.nan])
def test_mayer_rejects_beta(beta):
    with pytest.raises(ValueError):
        HardSphere().mayer_value(beta, 0.5)


def test_evaluate_rejects_negative_distance():
    with pytest.raises(ValueError):
        HardSphere().evaluate(-0.1)


@pytest.mark.parametrize(
    'potential,a1,finite,monotone',
    [
        (HardSphere(), True, True, True),
        (HardCoreStep(), True, True, True),
        (Strauss(), False, True, True),
    ],
)
def test_validate(potential, a1, finite, monotone):
    report = potential.validate()
    assert report.a1_hard_core is a1
    assert report.finite_range is finite
    assert report.monotone is monotone


def test_validate_rejects_negative_profile():
    potential = CustomRadial(
        profile=lambda r: np.where(r <= 1.0, -1.0, 0.0), interaction_range=1.0
    )
    with pytest.raises(InvalidPotentialError):
        potential.validate()


def test_validate_rejects_range_violation():
    potential = CustomRadial(
        profile=lambda r: np.where(r <= 2.0, 1.0, 0.0), interaction_range=1.0
    )
    with pytest.raises(InvalidPotentialError):
        potential.validate()


def test_validate_rejects_false_monotone_claim():
    potential = CustomRadial(
        profile=lambda r: np.where((r > 0.5) & (r <= 1.0), 1.0, 0.0),
        interaction_range=1.0,
        declared_monotone=True,
    )
    with pytest.raises(InvalidPotentialError):
        potential.validate()


def test_validate_reports_non_monotone():
    potential = CustomRadial(
        profile=lambda r: np.where((r > 0.5) & (r <= 1.0), 1.0, 0.0),
        interaction_range=1.0,
        declared_monotone=False,
    )
    assert potential.validate().monotone is False


def test_validate_rejects_undefined_values():
    potential = CustomRadial(
        profile=lambda r: np.full_like(r, np.nan), interaction_range=1.0
    )
    with pytest.raises(InvalidPotentialError):
        potential.validate()


@pytest.mark.parametrize(
    'factory',
    [
        lambda: HardSphere(radius=0.0),
        lambda: HardSphere(dimension=0),
        lambda: HardCoreStep(hard_core_radius=3.0, interaction_range=1.0),
        lambda: HardCoreStep(step_height=-1.0),
        lambda: Strauss(strength=0.0),
        lambda: Strauss(interaction_range=math.inf),
    ],
)
def test_invalid_parameters(factory):
    with pytest.raises(ValueError):
        factory()


def test_kinds_and_breakpoints():
    assert HardSphere().kind == PotentialKind.HARD_SPHERE
    assert HardCoreStep().breakpoints == (1.0, 3.0)
    assert Strauss().breakpoints == (1.0,)
    assert HardCoreStep(step_height=0.0).support_radius == 1.0


def test_is_zero_potential():
    zero = CustomRadial(profile=np.zeros_like, interaction_range=1.0)
    assert is_zero_potential(zero)
    assert not is_zero_potential(Strauss())
    assert not is_zero_potential(HardSphere())
