import math

import pytest

from pygibbsuniq.exceptions import ConfigurationError
from pygibbsuniq.factory import create_potential, tabulated_potential
from pygibbsuniq.potentials import HardCoreStep, HardSphere, PotentialKind, Strauss


@pytest.mark.parametrize(
    'kind,params,cls',
    [
        ('hard-sphere', dict(radius=1.0), HardSphere),
        (
            'hard-core-step',
            dict(hard_core_radius=1.0, interaction_range=3.0),
            HardCoreStep,
        ),
        ('strauss', dict(interaction_range=1.0, strength=2.0, dimension=3), Strauss),
    ],
)
def test_create_potential(kind, params, cls):
    potential = create_potential(kind, **params)
    assert isinstance(potential, cls)
    assert potential.kind == PotentialKind(kind)


@pytest.mark.parametrize(
    'kind,params',
    [
        ('lennard-jones', {}),
        ('hard-sphere', dict(radius=-1.0)),
        ('hard-sphere', dict(diameter=1.0)),
        ('custom-radial', {}),
        ('custom-radial', dict(profile=[[1.0, 1.0]], colour='red')),
    ],
)
def test_create_potential_invalid(kind, params):
    with pytest.raises(ConfigurationError):
        create_potential(kind, **params)


def test_tabulated_potential():
    potential = tabulated_potential([[1.0, math.inf], [2.0, 0.5], [3.0, 0.25]])
    assert potential.hard_core_radius == 1.0
    assert potential.interaction_range == 3.0
    assert potential.monotone
    assert potential.breakpoints == (1.0, 2.0, 3.0)
    assert potential.evaluate(0.5) == math.inf
    assert potential.evaluate(1.5) == 0.5
    assert potential.evaluate(2.0) == 0.5
    assert potential.evaluate(2.5) == 0.25
    assert potential.evaluate(3.5) == 0.0
    potential.validate()


def test_tabulated_potential_not_monotone():
    potential = create_potential('custom-radial', profile=[[1.0, 0.0], [2.0, 1.0]])
    assert not potential.monotone
    assert potential.validate().monotone is False


@pytest.mark.parametrize(
    'table',
    [
        [],
        [[2.0, 1.0], [1.0, 0.5]],
        [[0.0, 1.0]],
    ],
)
def test_tabulated_potential_invalid(table):
    with pytest.raises(ConfigurationError):
        tabulated_potential(table)
