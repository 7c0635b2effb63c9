import math

import numpy as np
import pytest
from scipy import integrate

from pygibbsuniq.dobrushin_grid import (
    BoundaryConfiguration,
    Discretization,
    DobrushinSum,
    Mode,
    SearchConfig,
    cube_partition_function,
    cube_tv_distance,
    dobrushin_sum,
    greedy_packing,
    k_ij,
    one_point_energy,
    two_stratum_tv,
    zbar_of_a,
)
from pygibbsuniq.exceptions import ConfigurationError
from pygibbsuniq.mayer import psi_integral
from pygibbsuniq.numerics import Cube
from pygibbsuniq.potentials import HardCoreStep, HardSphere, Strauss

CUBE = Cube((0.0, 0.0), 0.2)


def covered_area(y, radius=1.0, half=0.1):
    """Area of (-half, half]^2 within distance `radius` of y."""

    def chord(x1):
        h2 = radius**2 - (x1 - y[0]) ** 2
        if h2 <= 0:
            return 0.0
        h = math.sqrt(h2)
        return max(0.0, min(half, y[1] + h) - max(-half, y[1] - h))

    kinks = [
        y[0] + s * math.sqrt(radius**2 - (y[1] + t) ** 2)
        for s in (-1, 1)
        for t in (-half, half)
        if radius**2 > (y[1] + t) ** 2
    ]
    points = [k for k in kinks if -half < k < half]
    return integrate.quad(chord, -half, half, points=points or None, epsabs=1e-13)[0]


@pytest.mark.parametrize(
    'mesh,potential',
    [
        (0.8, HardSphere()),
        (0.0, HardSphere()),
        (0.1, Strauss()),
    ],
)
def test_discretization_needs_fine_mesh(mesh, potential):
    with pytest.raises(ConfigurationError) as excinfo:
        Discretization(mesh, potential)
    assert excinfo.value.field == 'meshes'


def test_boundary_configuration():
    gamma = BoundaryConfiguration(((0.0, 0.0), (2.0, 0.0)))
    assert len(gamma) == 2
    assert gamma.is_authorised(1.0)
    assert not gamma.with_point((0.5, 0.5)).is_authorised(1.0)
    assert BoundaryConfiguration().as_array(2).shape == (0, 2)
    with pytest.raises(ValueError):
        BoundaryConfiguration(((0.0, 0.0), (0.0, 0.0)))


def test_one_point_energy():
    gamma = BoundaryConfiguration(((2.0, 0.0), (0.0, 2.5)))
    assert one_point_energy(HardCoreStep(), (0.0, 0.0), gamma) == 2.0
    assert one_point_energy(HardCoreStep(), (1.5, 0.0), gamma) == math.inf
    assert one_point_energy(HardCoreStep(), (0.0, 0.0), BoundaryConfiguration()) == 0.0
    with pytest.raises(ValueError):
        one_point_energy(HardCoreStep(), (2.0, 0.0), gamma)


def test_cube_partition_function_empty_boundary():
    z = 0.7
    value = cube_partition_function(HardSphere(), z, 1.0, CUBE, BoundaryConfiguration())
    assert value == pytest.approx(math.exp(-z * 0.04) * (1 + z * 0.04), rel=1e-12)
    empty = BoundaryConfiguration()
    assert cube_partition_function(HardSphere(), 0.0, 1.0, CUBE, empty) == 1.0


def test_cube_partition_function_excluded_area():
    z = 1.0
    y = (0.9 / math.sqrt(2), 0.9 / math.sqrt(2))
    gamma = BoundaryConfiguration((y,))
    value = cube_partition_function(HardSphere(), z, 1.0, CUBE, gamma, tol=1e-5)
    free = 0.04 - covered_area(y)
    assert value == pytest.approx(math.exp(-z * 0.04) * (1 + z * free), abs=2e-5)


def test_cube_partition_function_rejects_inner_point():
    gamma = BoundaryConfiguration(((0.05, 0.05),))
    with pytest.raises(ValueError):
        cube_partition_function(HardSphere(), 1.0, 1.0, CUBE, gamma)


def test_two_stratum_tv():
    assert two_stratum_tv(1.0, 0.04, 0.04, 0.0) == 0.0
    assert two_stratum_tv(1.0, 0.02, 0.04, 0.0) == pytest.approx(1 / 1.02 - 1 / 1.04)
    assert two_stratum_tv(1e6, 1.0, 0.0, 1.0) == 1.0


def test_cube_tv_identical_boundaries():
    gamma = BoundaryConfiguration(((0.5, 0.5),))
    assert cube_tv_distance(HardSphere(), 1.0, 1.0, CUBE, gamma, gamma) == 0.0


def test_cube_tv_out_of_range():
    far = BoundaryConfiguration(((1.5, 0.0),))
    empty = BoundaryConfiguration()
    distance = cube_tv_distance(HardSphere(), 1.0, 1.0, CUBE, empty, far)
    assert distance == pytest.approx(0.0, abs=1e-12)


def test_cube_tv_rejects_two_differing_cubes():
    empty = BoundaryConfiguration()
    gamma = BoundaryConfiguration(((0.5, 0.5), (-0.5, -0.5)))
    with pytest.raises(ValueError):
        cube_tv_distance(HardSphere(), 1.0, 1.0, CUBE, empty, gamma)


@pytest.mark.parametrize('z', [0.5, 1.0, 3.0])
@pytest.mark.parametrize('y', [(0.9 / math.sqrt(2), 0.9 / math.sqrt(2)), (1.0, 0.05)])
def test_cube_tv_area_oracle(z, y):
    area = covered_area(y)
    assert 0 < area < 0.04
    distance = cube_tv_distance(
        HardSphere(),
        z,
        1.0,
        CUBE,
        BoundaryConfiguration(),
        BoundaryConfiguration((y,)),
        tol=1e-4,
    )
    # no atom: removing the covered area raises the empty mass
    assert distance == pytest.approx(z * area / (1 + z * 0.04), abs=1e-4)


def test_cube_tv_is_symmetric_in_the_roles():
    y = (0.9, 0.3)
    gamma = BoundaryConfiguration((y,))
    empty = BoundaryConfiguration()
    forward = cube_tv_distance(HardSphere(), 1.0, 1.0, CUBE, empty, gamma, 1e-4)
    backward = cube_tv_distance(HardSphere(), 1.0, 1.0, CUBE, gamma, empty, 1e-4)
    assert forward == pytest.approx(backward, abs=2e-4)


def test_cube_tv_rejects_unauthorised_boundary():
    gamma = BoundaryConfiguration(((0.9, 0.3),))
    crowded = BoundaryConfiguration(((0.9, 0.3), (0.95, 0.3)))
    with pytest.raises(ConfigurationError) as excinfo:
        cube_tv_distance(HardSphere(), 1.0, 1.0, CUBE, gamma, crowded)
    assert excinfo.value.field == 'gamma_tilde'
    with pytest.raises(ConfigurationError) as excinfo:
        cube_tv_distance(HardSphere(), 1.0, 1.0, CUBE, crowded, gamma)
    assert excinfo.value.field == 'gamma'


@pytest.mark.parametrize(
    'kwargs,field',
    [
        (dict(y_points=1), 'search.y_points'),
        (dict(packings=-1), 'search.packings'),
        (dict(max_subcells=0), 'search.max_subcells'),
        (dict(gauss_order=0), 'search.gauss_order'),
    ],
)
def test_search_config_validation(kwargs, field):
    with pytest.raises(ConfigurationError) as excinfo:
        SearchConfig(**kwargs)
    assert excinfo.value.field == field


def test_search_shifts():
    assert SearchConfig(packings=2).shifts == [-0.25, 0.25]
    assert SearchConfig(packings=1).shifts == [0.0]
    assert SearchConfig(packings=0).shifts == []


@pytest.mark.parametrize('shift', [0.0, 0.25, -0.25])
def test_greedy_packing_is_authorised(shift):
    disc = Discretization(0.3, HardSphere())
    packing = greedy_packing(disc, 1.0 + disc.diagonal, shift, exclude=[(3, 0)])
    assert len(packing) > 0
    assert packing.is_authorised(1.0)
    indices = {disc.index_of(point) for point in packing.points}
    assert (0, 0) not in indices
    assert (3, 0) not in indices


def test_greedy_packing_rejects_shift():
    with pytest.raises(ValueError):
        greedy_packing(Discretization(0.3, HardSphere()), 1.0, shift=-0.5)


@pytest.fixture(scope='module')
def hard_sphere_sum():
    return DobrushinSum(Discretization(0.4, HardSphere()), 1.0)


def test_k_bracket_ordering(hard_sphere_sum):
    for offset in hard_sphere_sum.offsets[::5]:
        bracket = hard_sphere_sum.bracket(offset, 0.3)
        assert 0 <= bracket.lower <= bracket.upper <= 0.3 * 0.16 + 1e-12


def test_k_bracket_linear_in_small_z(hard_sphere_sum):
    offset = (2, 1)
    tiny = hard_sphere_sum.bracket(offset, 1e-5)
    small = hard_sphere_sum.bracket(offset, 1e-4)
    assert small.upper / tiny.upper == pytest.approx(10.0, rel=1e-9)
    assert small.lower / tiny.lower == pytest.approx(10.0, rel=1e-3)


def test_k_bracket_edge_cases(hard_sphere_sum):
    with pytest.raises(ValueError):
        hard_sphere_sum.bracket((0, 0), 1.0)
    far = hard_sphere_sum.bracket((10, 10), 1.0)
    assert far.lower == far.upper == 0.0
    assert hard_sphere_sum.bracket((1, 0), 0.0).upper == 0.0


def test_k_ij_depends_on_difference():
    disc = Discretization(0.4, HardSphere())
    first = k_ij(disc, 0.3, 1.0, (0, 0), (2, 1))
    second = k_ij(disc, 0.3, 1.0, (5, -3), (7, -2))
    assert first == second


def test_dobrushin_sum_modes(hard_sphere_sum):
    upper = hard_sphere_sum.evaluate(0.2, Mode.UPPER)
    lower = hard_sphere_sum.evaluate(0.2, Mode.LOWER)
    assert 0 < lower <= upper
    assert hard_sphere_sum.evaluate(0.4, Mode.UPPER) == pytest.approx(2 * upper)
    assert hard_sphere_sum.evaluate(0.0, Mode.LOWER) == 0.0


@pytest.mark.parametrize('mode', list(Mode))
def test_dobrushin_sum_is_monotone_in_z(hard_sphere_sum, mode):
    values = [hard_sphere_sum.evaluate(z, mode) for z in (0.05, 0.1, 0.2, 0.4, 0.8)]
    assert values[0] > 0
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))


def test_dobrushin_sum_function():
    disc = Discretization(0.4, HardSphere())
    value = dobrushin_sum(disc, 0.2, 1.0, 'bracket-upper')
    assert value == pytest.approx(
        DobrushinSum(disc, 1.0).evaluate(0.2, Mode.UPPER), rel=1e-12
    )


@pytest.fixture(scope='module')
def zbar_curve():
    meshes = (0.6, 0.45, 0.3, 0.2)
    rows = []
    for a in meshes:
        disc = Discretization(a, HardSphere())
        rows.append(
            (
                a,
                zbar_of_a(disc, 1.0, Mode.UPPER),
                zbar_of_a(disc, 1.0, Mode.LOWER),
                psi_integral(HardSphere(), 1.0, a).value,
            )
        )
    return rows


def test_zbar_upper_increases_as_mesh_shrinks(zbar_curve):
    values = [upper.z_bar for _a, upper, _lower, _psi in zbar_curve]
    assert values == sorted(values)
    assert not any(upper.saturated for _a, upper, _lower, _psi in zbar_curve)


def test_zbar_upper_between_psi_and_limit(zbar_curve):
    for _a, upper, _lower, psi in zbar_curve:
        assert upper.z_bar >= 1 / psi - 1e-3
        assert upper.z_bar <= 1 / math.pi + 1e-3


def test_zbar_lower_mode_is_optimistic(zbar_curve):
    for a, upper, lower, _psi in zbar_curve:
        assert lower.mode == Mode.LOWER
        assert lower.mesh == a
        assert lower.z_bar >= upper.z_bar - 2e-5


def test_zbar_saturates():
    disc = Discretization(0.4, HardSphere())
    result = zbar_of_a(disc, 1.0, Mode.UPPER, z_max=0.01)
    assert result.saturated
    assert result.z_bar == 0.01


def test_hard_core_step_upper_sum_exceeds_hard_sphere():
    hard_sphere = DobrushinSum(Discretization(0.5, HardSphere()), 1.0)
    step = DobrushinSum(Discretization(0.5, HardCoreStep()), 1.0)
    assert step.evaluate(0.1, Mode.UPPER) > hard_sphere.evaluate(0.1, Mode.UPPER)
    assert np.all(step.weights > 0)
