from pathlib import Path

import pytest

from pygibbsuniq.config import (
    DEFAULT_MESHES,
    DEFAULT_METHODS,
    BetaGrid,
    load_config,
    parse_config,
)
from pygibbsuniq.criteria import Method
from pygibbsuniq.exceptions import ConfigurationError, InvalidPotentialError
from pygibbsuniq.potentials import HardCoreStep

HARD_SPHERE = {'kind': 'hard-sphere', 'radius': 1.0}


def test_defaults():
    cfg = parse_config({'potential': HARD_SPHERE})
    assert cfg.potential.kind == 'hard-sphere'
    assert cfg.methods == DEFAULT_METHODS
    assert cfg.meshes == DEFAULT_MESHES
    assert cfg.beta == BetaGrid()
    assert cfg.output_directory == Path('out')
    assert cfg.seed == 0
    assert cfg.threads == 0
    assert cfg.sampler.burn_in is None


def test_full_document():
    cfg = parse_config(
        {
            'potential': {
                'kind': 'hard-core-step',
                'hard_core_radius': 1.0,
                'interaction_range': 3.0,
                'step_height': 1.0,
            },
            'methods': ['dobrushin-limit', 'support-volume'],
            'beta': {'min': 0.1, 'max': 1.0, 'count': 3, 'spacing': 'log'},
            'meshes': [0.5, 0.25],
            'tolerances': {'integral': 1e-6, 'psi_sample_points': 5},
            'search': {'y_points': 3, 'packings': 1},
            'percolation': {2: 1.5},
            'sampler': {'window': [3.0, 3.0], 'move_mix': [0.5, 0.3, 0.2]},
            'probe': {'windows': [2.0], 'boundaries': ['dense', 'empty']},
            'output': {'directory': 'results'},
            'seed': 42,
            'threads': 2,
        }
    )
    assert isinstance(cfg.potential.build(), HardCoreStep)
    assert cfg.methods == (Method.DOBRUSHIN_LIMIT, Method.SUPPORT_VOLUME)
    assert cfg.beta.values() == pytest.approx([0.1, 0.1**0.5, 1.0])
    assert cfg.meshes == (0.5, 0.25)
    assert cfg.tolerances.psi_sample_points == 5
    assert cfg.search.y_points == 3
    assert cfg.percolation == {2: 1.5}
    assert cfg.sampler.window == (3.0, 3.0)
    assert cfg.probe.boundaries == ('dense', 'empty')
    assert cfg.output_directory == Path('results')
    assert (cfg.seed, cfg.threads) == (42, 2)


def test_linear_beta_grid():
    assert BetaGrid(min=1.0, max=2.0, count=3).values() == [1.0, 1.5, 2.0]
    assert BetaGrid(min=1.0, max=2.0, count=1).values() == [1.0]


@pytest.mark.parametrize(
    'document,field',
    [
        ({}, 'potential'),
        ({'potential': {'radius': 1.0}}, 'potential.kind'),
        ({'potential': {'kind': 'soft-sphere'}}, 'potential.kind'),
        ({'potential': HARD_SPHERE, 'colour': 'red'}, 'colour'),
        ({'potential': HARD_SPHERE, 'beta': {'min': 2.0, 'max': 1.0}}, 'beta.min'),
        ({'potential': HARD_SPHERE, 'beta': {'spacing': 'cubic'}}, 'beta.spacing'),
        ({'potential': HARD_SPHERE, 'beta': {'count': 2.5}}, 'beta.count'),
        ({'potential': HARD_SPHERE, 'beta': {'step': 0.1}}, 'beta.step'),
        ({'potential': HARD_SPHERE, 'meshes': [0.1, 0.2]}, 'meshes'),
        ({'potential': HARD_SPHERE, 'meshes': [0.2, -0.1]}, 'meshes[1]'),
        ({'potential': HARD_SPHERE, 'methods': ['magic']}, 'methods'),
        ({'potential': HARD_SPHERE, 'tolerances': {'cube': -1.0}}, 'tolerances.cube'),
        ({'potential': HARD_SPHERE, 'search': {'y_points': 1}}, 'search.y_points'),
        ({'potential': HARD_SPHERE, 'percolation': {2: 0.1}}, 'percolation.2'),
        (
            {'potential': HARD_SPHERE, 'sampler': {'boundary': 'periodic'}},
            'sampler.boundary',
        ),
        (
            {'potential': HARD_SPHERE, 'sampler': {'move_mix': [0.5, 0.5, 0.5]}},
            'sampler.move_mix',
        ),
        (
            {'potential': HARD_SPHERE, 'sampler': {'steps': 10, 'burn_in': 10}},
            'sampler.burn_in',
        ),
        ({'potential': HARD_SPHERE, 'sampler': {'window': 2.0}}, 'sampler.window'),
        (
            {'potential': HARD_SPHERE, 'probe': {'boundaries': ['empty']}},
            'probe.boundaries',
        ),
        ({'potential': HARD_SPHERE, 'probe': {'windows': []}}, 'probe.windows'),
        ({'potential': HARD_SPHERE, 'output': {'dir': 'x'}}, 'output.dir'),
        ({'potential': HARD_SPHERE, 'seed': -1}, 'seed'),
        ({'potential': HARD_SPHERE, 'threads': 'many'}, 'threads'),
    ],
)
def test_invalid_documents(document, field):
    with pytest.raises(ConfigurationError) as excinfo:
        parse_config(document)
    assert excinfo.value.field == field


def test_invalid_potential_profile():
    document = {'potential': {'kind': 'custom-radial', 'profile': [[1.0, -1.0]]}}
    with pytest.raises(InvalidPotentialError):
        parse_config(document)


def test_load_config(tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text(
        'potential:\n'
        '  kind: strauss\n'
        '  interaction_range: 1.0\n'
        '  strength: 2.0\n'
        'methods: [dobrushin-conjecture]\n'
        'seed: 3\n',
        encoding='utf-8',
    )
    cfg = load_config(path)
    assert cfg.potential.params == {'interaction_range': 1.0, 'strength': 2.0}
    assert cfg.methods == (Method.DOBRUSHIN_CONJECTURE,)
    assert cfg.seed == 3


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigurationError) as excinfo:
        load_config(tmp_path / 'missing.yaml')
    assert excinfo.value.field == 'config'

    path = tmp_path / 'broken.yaml'
    path.write_text('potential: [unclosed\n', encoding='utf-8')
    with pytest.raises(ConfigurationError) as excinfo:
        load_config(path)
    assert excinfo.value.field == 'config'

    path.write_text('- just\n- a list\n', encoding='utf-8')
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_sample_configs_parse():
    configs = Path(__file__).parent.parent / 'docs' / 'configs'
    paths = sorted(configs.glob('*.yaml'))
    assert paths
    for path in paths:
        load_config(path)
