"""Command line front end: computes uniqueness regions and writes CSV data files."""

import argparse
import asyncio
from collections.abc import Callable, Sequence
from dataclasses import replace
import logging
import os
from pathlib import Path
import sys
from typing import Any, Optional, TypeVar

from .config import RunConfig, load_config
from .criteria import bound
from .dobrushin_grid import BoundaryConfiguration, Discretization, Mode, zbar_of_a
from .exceptions import (
    BisectionError,
    ConfigurationError,
    ErgodicityError,
    GibbsUniquenessException,
    IntegrabilityError,
    InvalidPotentialError,
    QuadratureError,
    TruncationError,
    UnsupportedError,
)
from .mayer import check_regularity_A3, mayer_integral
from .numerics import Box
from .output import (
    CHAIN_COLUMNS,
    CHECK_A3_COLUMNS,
    MAYER_COLUMNS,
    PROBE_COLUMNS,
    REGIONS_COLUMNS,
    ZBAR_COLUMNS,
    prepare_directory,
    write_csv,
)
from .sampler import (
    GENERATOR,
    ChainSettings,
    dense_packing_frame,
    mcmc_sample,
    probe_window,
)

_LOGGER = logging.getLogger(__name__)

T = TypeVar('T')

COMMANDS = ('mayer', 'regions', 'zbar-a', 'check-a3', 'simulate', 'probe')

THREADS_ENV = 'GIBBS_UNIQ_THREADS'

EXIT_OK = 0
EXIT_COMPUTATION = 1
EXIT_CONFIGURATION = 2

COMPUTATION_ERRORS = (
    QuadratureError,
    IntegrabilityError,
    BisectionError,
    TruncationError,
    ErgodicityError,
)
CONFIGURATION_ERRORS = (ConfigurationError, UnsupportedError, InvalidPotentialError)


def exit_status(exc: BaseException) -> int:
    """Map a failure to the documented exit status."""
    if isinstance(exc, BaseExceptionGroup):
        return max(exit_status(inner) for inner in exc.exceptions)
    if isinstance(exc, CONFIGURATION_ERRORS):
        return EXIT_CONFIGURATION
    if isinstance(exc, COMPUTATION_ERRORS):
        return EXIT_COMPUTATION
    raise exc


def resolve_threads(threads: int) -> int:
    """0 means one worker per CPU."""
    return threads if threads > 0 else os.cpu_count() or 1


async def gather_in_order(jobs: Sequence[Callable[[], T]], threads: int) -> list[T]:
    """Run blocking jobs on at most `threads` worker threads; results in input order."""
    semaphore = asyncio.Semaphore(value=resolve_threads(threads))

    async def _run(job: Callable[[], T]) -> T:
        async with semaphore:
            return await asyncio.to_thread(job)

    try:
        async with asyncio.TaskGroup() as tg:
            tasks = [tg.create_task(_run(job)) for job in jobs]
    except ExceptionGroup as eg:
        for exc in eg.exceptions:
            _LOGGER.error("Exception in TaskGroup: %s", exc)
        raise
    return [task.result() for task in tasks]


async def _mayer(cfg: RunConfig, potential) -> list[tuple]:
    tol = cfg.tolerances.integral
    results = await gather_in_order(
        [
            lambda beta=beta: mayer_integral(potential, beta, tol)
            for beta in cfg.beta.values()
        ],
        cfg.threads,
    )
    return [(r.beta, r.value, r.error_estimate, r.truncation_radius) for r in results]


async def _regions(cfg: RunConfig, potential) -> list[tuple]:
    tol = cfg.tolerances.integral
    jobs = [
        lambda method=method, beta=beta: bound(
            potential, method, beta, tol, cfg.percolation
        )
        for method in cfg.methods
        for beta in cfg.beta.values()
    ]
    bounds = await gather_in_order(jobs, cfg.threads)
    return [
        (str(b.method), b.beta, b.z_bar, b.certified, b.error_estimate) for b in bounds
    ]


async def _zbar_a(cfg: RunConfig, potential) -> list[tuple]:
    discretizations = [Discretization(a, potential) for a in cfg.meshes]
    jobs = [
        lambda disc=disc, mode=mode: zbar_of_a(
            disc,
            cfg.beta.fixed,
            mode,
            cfg.tolerances.zbar,
            tol=cfg.tolerances.cube,
            search=cfg.search,
        )
        for disc in discretizations
        for mode in (Mode.UPPER, Mode.LOWER)
    ]
    results = await gather_in_order(jobs, cfg.threads)
    return [(r.mesh, str(r.mode), r.z_bar, r.saturated) for r in results]


async def _check_a3(cfg: RunConfig, potential) -> list[tuple]:
    report = await asyncio.to_thread(
        check_regularity_A3,
        potential,
        cfg.beta.fixed,
        cfg.meshes,
        cfg.tolerances.cube,
        x_points=cfg.tolerances.psi_x_points,
        sample_points=cfg.tolerances.psi_sample_points,
    )
    print(f"check-a3 verdict: {report.verdict}")
    return [
        (row.mesh, row.psi_integral, row.mayer_integral, row.gap) for row in report.rows
    ]


def _chain_settings(cfg: RunConfig, potential) -> ChainSettings:
    sampler = cfg.sampler
    window = Box.centered([0.0] * potential.dimension, sampler.window)
    boundary = BoundaryConfiguration()
    if sampler.boundary == 'dense':
        boundary = dense_packing_frame(window, potential)
    return ChainSettings(
        activity=sampler.activity,
        beta=sampler.beta,
        window=window,
        boundary=boundary,
        steps=sampler.steps,
        burn_in=sampler.burn_in,
        seed=cfg.seed,
        move_mix=sampler.move_mix,
        record_every=sampler.record_every,
    )


def _check_window(cfg: RunConfig, potential) -> None:
    if len(cfg.sampler.window) != potential.dimension:
        raise ConfigurationError(
            f"window needs {potential.dimension} sides", "sampler.window"
        )


async def _simulate(cfg: RunConfig, potential) -> list[tuple]:
    _check_window(cfg, potential)
    report = await asyncio.to_thread(
        mcmc_sample, _chain_settings(cfg, potential), potential
    )
    series = report.series
    return [
        (
            int(step),
            int(series['count'][k]),
            float(series['intensity_center'][k]),
            float(series['min_pair_distance'][k]),
        )
        for k, step in enumerate(report.steps)
    ]


async def _probe(cfg: RunConfig, potential) -> list[tuple]:
    _check_window(cfg, potential)
    template = replace(
        _chain_settings(cfg, potential), boundary=BoundaryConfiguration()
    )
    jobs = [
        lambda side=side, index=index: probe_window(
            potential,
            cfg.sampler.activity,
            cfg.sampler.beta,
            side,
            template,
            cfg.probe.boundaries,
            index,
        )
        for index, side in enumerate(cfg.probe.windows)
    ]
    pairs = await gather_in_order(jobs, cfg.threads)
    return [
        (row.window, row.boundary, row.intensity, row.se, row.metric)
        for pair in pairs
        for row in pair
    ]


OUTPUTS = {
    'mayer': ('mayer.csv', MAYER_COLUMNS, _mayer),
    'regions': ('regions.csv', REGIONS_COLUMNS, _regions),
    'zbar-a': ('zbar_a.csv', ZBAR_COLUMNS, _zbar_a),
    'check-a3': ('check_a3.csv', CHECK_A3_COLUMNS, _check_a3),
    'simulate': ('chain.csv', CHAIN_COLUMNS, _simulate),
    'probe': ('probe.csv', PROBE_COLUMNS, _probe),
}


async def run(command: str, cfg: RunConfig) -> int:
    """Run one command and write its CSV; return the exit status."""
    filename, columns, compute = OUTPUTS[command]
    try:
        directory = prepare_directory(cfg.output_directory)
        potential = cfg.potential.build()
        rows = await compute(cfg, potential)
    except (GibbsUniquenessException, ExceptionGroup) as exc:
        status = exit_status(exc)
        print(f"{command} failed: {exc}", file=sys.stderr)
        return status

    path = directory / filename
    count = write_csv(path, columns, rows)
    summary = f"{command}: wrote {count} rows to {path}"
    if command in ('simulate', 'probe'):
        summary += f" (generator {GENERATOR}, seed {cfg.seed})"
    print(summary)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--config', type=Path, required=True, help="YAML run configuration"
    )
    common.add_argument('--out', type=Path, help="output directory")
    common.add_argument('--seed', type=int, help="overrides the configured seed")
    common.add_argument(
        '--threads',
        type=int,
        help=f"worker threads, 0 = one per CPU (env {THREADS_ENV})",
    )
    common.add_argument('--debug', action='store_true', help="debug logging")

    parser = argparse.ArgumentParser(
        prog='gibbsuniq',
        description="Uniqueness regions of Gibbs point processes with repulsive pair "
        "potentials.",
    )
    commands = parser.add_subparsers(dest='command', required=True)
    for command in COMMANDS:
        commands.add_parser(command, parents=[common])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the gibbsuniq script."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.debug else logging.WARNING)

    try:
        cfg = load_config(args.config)
        threads = args.threads
        if threads is None and THREADS_ENV in os.environ:
            try:
                threads = int(os.environ[THREADS_ENV])
            except ValueError as exc:
                raise ConfigurationError(
                    f"not an integer: {os.environ[THREADS_ENV]!r}", THREADS_ENV
                ) from exc
        if threads is not None and threads < 0:
            raise ConfigurationError("must be >= 0", "threads")
    except CONFIGURATION_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIGURATION

    overrides: dict[str, Any] = {}
    if args.out is not None:
        overrides['output_directory'] = args.out
    if args.seed is not None:
        overrides['seed'] = args.seed
    if threads is not None:
        overrides['threads'] = threads
    return asyncio.run(run(args.command, replace(cfg, **overrides)))
