# coding: utf-8
# Copyright (C) 2024, solitonlab contributors.
# Licensed to the Apache Software Foundation (ASF) under one
# or more contributor license agreements.  See the NOTICE file
# distributed with this work for additional information
# regarding copyright ownership.  The ASF licenses this file
# to you under the Apache License, Version 2.0 (the
# "License"); you may not use this file except in compliance
# with the License.  You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing,
# software distributed under the License is distributed on an
# "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, either express or implied.  See the License for the
# specific language governing permissions and limitations
# under the License.


from __future__ import absolute_import, division, print_function
import sys
import functools
import logging
from pathlib import Path

import click
import numpy as np

from solitonlab.consts import EXIT_CODES, EXPERIMENT_DEFAULTS, MIN_SLOPES, ODE_VARIANTS, ODE_DT
from solitonlab.utils import (
    set_logger,
    read_json,
    write_csv,
    write_json,
    wrap_angle,
    NumericalAbort,
    ValidationFailure,
)

_CONTEXT_SETTINGS = {"help_option_names": ['-h', '--help']}
logger = set_logger(log_level=logging.INFO)

SPLITTING_NAMES = ('strang', 'yoshida4')


def _parse_floats(text):
    return [float(v) for v in text.split(',') if v.strip()]


def _exit_on_errors(func):
    """maps the lab exceptions onto the documented exit codes"""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationFailure as e:
            logger.error('validation failed: %s', e)
            sys.exit(EXIT_CODES['validation'])
        except NumericalAbort as e:
            logger.error('numerical abort: %s', e)
            sys.exit(EXIT_CODES['abort'])

    return wrapper


def _log_options(run_log=False):
    """--verbose and --log-file; with run_log the log defaults to <output_dir>/run.log"""

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, verbose=False, log_file=None, **kwargs):
            if log_file is None and run_log:
                log_file = str(Path(kwargs['output_dir']) / 'run.log')
            set_logger(log_file=log_file, log_level=logging.DEBUG if verbose else logging.INFO)
            return func(*args, **kwargs)

        wrapper = click.option(
            '--log-file', type=str, default=None, help='also write the log to this file. Default: `None`'
        )(wrapper)
        wrapper = click.option('-v', '--verbose', is_flag=True, help='log at debug level. Default: `False`')(
            wrapper
        )
        return wrapper

    return decorator


@click.group(context_settings=_CONTEXT_SETTINGS)
def cli():
    pass


def _case_options(func):
    options = [
        click.option(
            '-a', '--a0', type=float, default=EXPERIMENT_DEFAULTS['a0'],
            help='initial half-separation a0. Default: `%s`' % EXPERIMENT_DEFAULTS['a0'],
        ),
        click.option(
            '-s', '--sigma', type=click.Choice(['0', '1']), default=str(EXPERIMENT_DEFAULTS['sigma']),
            help='0: in phase (attract), 1: opposite phase (repel). Default: `%s`' % EXPERIMENT_DEFAULTS['sigma'],
        ),
        click.option(
            '-t', '--t-end', type=float, default=None,
            help='run length; omitted means the automatic horizon. Default: `None`',
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@cli.command('simulate')
@_case_options
@click.option('--dt', type=float, default=EXPERIMENT_DEFAULTS['dt'], help='PDE step. Default: `%s`' % EXPERIMENT_DEFAULTS['dt'])
@click.option('-n', '--n-points', type=int, default=None, help='grid points (power of two). Default: `None`')
@click.option('--length', type=float, default=None, help='period L of the grid. Default: `None`')
@click.option(
    '--splitting', type=click.Choice(SPLITTING_NAMES), default=EXPERIMENT_DEFAULTS['splitting'],
    help='splitting scheme. Default: `%s`' % EXPERIMENT_DEFAULTS['splitting'],
)
@click.option(
    '--sample-stride', type=int, default=EXPERIMENT_DEFAULTS['sample_stride'],
    help='steps between samples. Default: `%s`' % EXPERIMENT_DEFAULTS['sample_stride'],
)
@click.option('--checkpoint-every', type=int, default=None, help='write a checkpoint every so many steps. Default: `None`')
@click.option('-o', '--output-dir', type=str, default='simulate', help='output directory. Default: `simulate`')
@_log_options()
@_exit_on_errors
def simulate(a0, sigma, t_end, dt, n_points, length, splitting, sample_stride, checkpoint_every, output_dir):
    """Evolve the two-soliton initial data and save conserved quantities and the final field"""
    from solitonlab.experiment import ExperimentConfig
    from solitonlab.soliton import case_initial_data
    from solitonlab.solver import SolverConfig, evolve
    from solitonlab.spectral import Field, save_field_csv

    cfg = ExperimentConfig(
        a0=a0,
        sigma=int(sigma),
        t_end_mode='auto' if t_end is None else 'explicit',
        t_end=t_end,
        dt=dt,
        n=n_points,
        length=length,
        sample_stride=sample_stride,
        splitting=splitting,
    )
    grid = cfg.grid()
    out_dir = Path(output_dir)
    final = {}

    def keep_last(t, u):
        final['t'], final['u'] = t, u

    solver_cfg = SolverConfig(
        dt=dt,
        t_end=cfg.resolve_t_end(),
        sample_stride=sample_stride,
        grid=grid,
        splitting=splitting,
        checkpoint_every=checkpoint_every,
        checkpoint_dir=str(out_dir / 'checkpoints'),
    )
    traj = evolve(case_initial_data(a0, cfg.sigma, grid), solver_cfg, observers=[keep_last])
    traj.save_conserved(out_dir / 'conserved.csv')
    save_field_csv(final['u'], out_dir / 'final_field.csv')
    write_json(
        out_dir / 'simulate.json',
        dict(cfg.to_dict(), t_final=final['t'], mass_drift=traj.mass_drift, energy_drift=traj.energy_drift),
    )
    logger.info('final t=%g, outputs in %s', final['t'], out_dir)


@cli.command('effective')
@_case_options
@click.option(
    '--variant', type=click.Choice(ODE_VARIANTS), default=EXPERIMENT_DEFAULTS['ode_variant'],
    help='reduced law to integrate. Default: `%s`' % EXPERIMENT_DEFAULTS['ode_variant'],
)
@click.option('--ode-dt', type=float, default=ODE_DT, help='RK4 step. Default: `%s`' % ODE_DT)
@click.option('--stride', type=int, default=100, help='steps between written rows. Default: `100`')
@click.option('-o', '--output-fp', type=str, default='effective.csv', help='output CSV. Default: `effective.csv`')
@_log_options()
@_exit_on_errors
def effective(a0, sigma, t_end, variant, ode_dt, stride, output_fp):
    """Integrate the effective two-soliton dynamics from (a0, v=0)"""
    from solitonlab.dynamics import closed_form, get_rhs, integrate
    from solitonlab.experiment import ExperimentConfig
    from solitonlab.soliton import SymmetricState

    sigma = int(sigma)
    cfg = ExperimentConfig(
        a0=a0, sigma=sigma, t_end_mode='auto' if t_end is None else 'explicit', t_end=t_end, ode_variant=variant
    )
    T = cfg.resolve_t_end()
    if variant == 'closed_form':
        times = np.linspace(0.0, T, int(np.ceil(T / (ode_dt * stride))) + 1)
        a, v = closed_form(a0, sigma, times)
        states = np.column_stack([np.ones_like(a), a, np.full_like(a, np.nan), v])
    else:
        state0 = SymmetricState(1.0, a0, 0.0, 0.0, sigma)
        y0 = state0.embed().as_array() if variant == 'general' else state0.as_array()
        traj = integrate(get_rhs(variant, sigma), y0, T, ode_dt, stride=stride, progress=True)
        times, states = traj.times, traj.reduced()
    write_csv(
        output_fp,
        ('t', 'mu', 'a', 'theta', 'theta_wrapped', 'v'),
        np.column_stack([times, states[:, 0], states[:, 1], states[:, 2], wrap_angle(states[:, 2]), states[:, 3]]),
    )
    logger.info('final a=%.12f, v=%.6e; written to %s', states[-1, 1], states[-1, 3], output_fp)


@cli.command('decompose')
@click.option('-i', '--field-fp', type=str, required=True, help='field CSV with columns x, re, im')
@click.option('-a', '--a0', type=float, required=True, help='initial guess of the half-separation')
@click.option('-s', '--sigma', type=click.Choice(['0', '1']), default='1', help='phase case of the guess. Default: `1`')
@click.option('-o', '--output-fp', type=str, default=None, help='JSON output; printed when omitted. Default: `None`')
@_log_options()
@_exit_on_errors
def decompose_field(field_fp, a0, sigma, output_fp):
    """Decompose a stored field into u_z + w with w symplectically orthogonal to the frame"""
    from solitonlab.soliton import SymmetricState
    from solitonlab.spectral import h1_norm, load_field_csv
    from solitonlab.symplectic import decompose

    u = load_field_csv(field_fp)
    dec = decompose(u, SymmetricState(1.0, a0, 0.0, 0.0, int(sigma)).embed())
    result = {
        'z': dec.z.to_dict(),
        'w_h1': h1_norm(dec.w),
        'max_residual': dec.max_residual,
        'iterations': dec.iterations,
    }
    if output_fp:
        write_json(output_fp, result)
    else:
        click.echo(result)


@cli.command('validate')
@_case_options
@click.option('--config-fp', type=str, default=None, help='JSON config; its keys override the flags. Default: `None`')
@click.option(
    '--variant', type=click.Choice(ODE_VARIANTS), default=EXPERIMENT_DEFAULTS['ode_variant'],
    help='ODE prediction. Default: `%s`' % EXPERIMENT_DEFAULTS['ode_variant'],
)
@click.option('--correction', is_flag=True, help='monitor against the corrected manifold. Default: `False`')
@click.option('-o', '--output-dir', type=str, default=EXPERIMENT_DEFAULTS['output_dir'], help='output directory. Default: `%s`' % EXPERIMENT_DEFAULTS['output_dir'])
@_log_options(run_log=True)
@_exit_on_errors
def validate(a0, sigma, t_end, config_fp, variant, correction, output_dir):
    """Run one validation case: PDE vs decomposition vs ODE prediction"""
    from solitonlab.experiment import ExperimentConfig, emit_report, run_case

    config = {
        'a0': a0,
        'sigma': int(sigma),
        't_end_mode': 'auto' if t_end is None else 'explicit',
        't_end': t_end,
        'ode_variant': variant,
        'correction': correction,
        'output_dir': output_dir,
    }
    if config_fp:
        config.update(read_json(config_fp))
    cfg = ExperimentConfig.from_config(config)
    report = run_case(cfg)
    emit_report(report, cfg.output_dir)
    if report.aborted:
        raise NumericalAbort(report.error)
    if not report.passed:
        raise ValidationFailure('; '.join(report.failures))
    logger.info('validation passed, max E = %.3e', report.summary['max_h1_error'])


@cli.command('sweep')
@click.option('--a0-list', type=str, default='4,5,6', help='comma separated separations. Default: `4,5,6`')
@click.option('-s', '--sigma', type=click.Choice(['0', '1']), default='1', help='phase case. Default: `1`')
@click.option(
    '--kind', type=click.Choice(['error', 'residual']), default='error',
    help='error: max_t ||u - u_z~||_H1 of full runs; residual: approximate-equation residual. Default: `error`',
)
@click.option('--t-end-factor', type=float, default=None, help='run length t_end_factor / h. Default: `None`')
@click.option('--config-fp', type=str, default=None, help='JSON base config of every run. Default: `None`')
@click.option('-w', '--workers', type=int, default=1, help='parallel processes. Default: `1`')
@click.option(
    '--min-slope', type=float, default=None,
    help='fail below this fitted slope. Default: `1.7` for error, `3.5` for residual',
)
@click.option('-o', '--output-dir', type=str, default='sweep', help='output directory. Default: `sweep`')
@_log_options(run_log=True)
@_exit_on_errors
def sweep(a0_list, sigma, kind, t_end_factor, config_fp, workers, min_slope, output_dir):
    """Fit the power of h over several separations"""
    from solitonlab.experiment import ExperimentConfig, emit_scaling, residual_study, scaling_study

    a0_values = _parse_floats(a0_list)
    sigma = int(sigma)
    if kind == 'residual':
        result = residual_study(a0_values, sigma)
        write_csv(Path(output_dir) / 'residual.csv', result['header'], result['rows'])
        write_json(
            Path(output_dir) / 'residual_summary.json',
            {'slope_plain': result['slope_plain'], 'slope_corrected': result['slope_corrected']},
        )
        slope = result['slope_corrected']
    else:
        base = ExperimentConfig.from_json(config_fp) if config_fp else ExperimentConfig()
        report = scaling_study(
            a0_values, sigma, base=base, t_end_factor=t_end_factor, workers=workers, output_dir=output_dir
        )
        emit_scaling(report, output_dir)
        slope = report.slope
    if min_slope is None:
        min_slope = MIN_SLOPES[kind]
    logger.info('fitted slope %.3f', slope)
    if slope < min_slope:
        raise ValidationFailure('fitted slope %.3f < %.3f' % (slope, min_slope))


@cli.command('alpha-table')
@click.option('--a-list', type=str, default='4,5,6,7', help='comma separated a values. Default: `4,5,6,7`')
@click.option('--xi-list', type=str, default='-0.1,0,0.1', help='comma separated xi values. Default: `-0.1,0,0.1`')
@click.option(
    '--mode', type=click.Choice(['quadrature', 'asymptotic', 'both']), default='both',
    help='evaluation of alpha and beta. Default: `both`',
)
@click.option('-o', '--output-fp', type=str, default='alpha_table.csv', help='output CSV. Default: `alpha_table.csv`')
@_log_options()
@_exit_on_errors
def alpha_table(a_list, xi_list, mode, output_fp):
    """Tabulate the interaction integrals alpha and beta"""
    from solitonlab.dynamics import alpha, beta

    modes = ('quadrature', 'asymptotic') if mode == 'both' else (mode,)
    rows = []
    for a in _parse_floats(a_list):
        for xi in _parse_floats(xi_list):
            for m in modes:
                al, be = alpha(xi, a, m), beta(xi, a, m)
                rows.append([a, xi, al.real, al.imag, be.real, be.imag, m])
    write_csv(output_fp, ('a', 'xi', 're_alpha', 'im_alpha', 're_beta', 'im_beta', 'mode'), rows)
    logger.info('%d rows written to %s', len(rows), output_fp)


if __name__ == "__main__":
    cli()
