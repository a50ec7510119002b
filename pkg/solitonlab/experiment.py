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

"""
Orchestration of the two-soliton validation protocol: configuration, a single
validated run, scaling studies over the separation and report emission.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .consts import (
    COLLISION_PHASE,
    EXPERIMENT_DEFAULTS,
    MIN_CASE_A0,
    ODE_VARIANTS,
    RESULT_VERSION,
    SIGMA0_T_FRACTION,
)
from .correction import build_correction, residual, symmetric_rates
from .dynamics import closed_form, get_rhs, integrate
from .lyapunov import LyapunovMonitor, MonitorReport, make_cutoffs
from .soliton import SymmetricState, ZCoords, case_initial_data, two_soliton
from .solver import SPLITTINGS, PdeTrajectory, SolverConfig, evolve
from .spectral import Field, Grid, h1_norm
from .symplectic import Decomposition, decompose
from .utils import NumericalAbort, fit_power_law, read_json, wrap_angle, write_csv, write_json

logger = logging.getLogger(__name__)

# measured tolerances of the validation verdicts
A_CLOSED_FORM_FACTOR = 20.0
MAX_VIOLATION_FRACTION = 0.01
TRIANGLE_SLACK = 1e-10
V_SIGN_SLACK = 1e-9


@dataclass
class ExperimentConfig(object):
    a0: float = EXPERIMENT_DEFAULTS['a0']
    sigma: int = EXPERIMENT_DEFAULTS['sigma']
    t_end_mode: str = EXPERIMENT_DEFAULTS['t_end_mode']
    t_end: Optional[float] = EXPERIMENT_DEFAULTS['t_end']
    dt: float = EXPERIMENT_DEFAULTS['dt']
    n: Optional[int] = EXPERIMENT_DEFAULTS['n']
    length: Optional[float] = EXPERIMENT_DEFAULTS['length']
    sample_stride: int = EXPERIMENT_DEFAULTS['sample_stride']
    splitting: str = EXPERIMENT_DEFAULTS['splitting']
    ode_variant: str = EXPERIMENT_DEFAULTS['ode_variant']
    ode_dt: float = EXPERIMENT_DEFAULTS['ode_dt']
    theta_coupling: float = EXPERIMENT_DEFAULTS['theta_coupling']
    correction: bool = EXPERIMENT_DEFAULTS['correction']
    theta_ablation: bool = EXPERIMENT_DEFAULTS['theta_ablation']
    monitor: bool = EXPERIMENT_DEFAULTS['monitor']
    t_budget: float = EXPERIMENT_DEFAULTS['t_budget']
    heatmap_points: int = EXPERIMENT_DEFAULTS['heatmap_points']
    output_dir: str = EXPERIMENT_DEFAULTS['output_dir']

    def __post_init__(self):
        if self.a0 < MIN_CASE_A0:
            raise ValueError('separation too small: a0=%g < %g' % (self.a0, MIN_CASE_A0))
        if self.sigma not in (0, 1):
            raise ValueError('sigma must be 0 or 1, got %s' % self.sigma)
        self.sigma = int(self.sigma)
        if self.t_end_mode not in ('auto', 'explicit'):
            raise ValueError('t_end_mode must be auto or explicit, got %s' % self.t_end_mode)
        if self.t_end_mode == 'explicit' and (self.t_end is None or self.t_end <= 0):
            raise ValueError('explicit t_end_mode needs a positive t_end')
        if self.ode_variant not in ODE_VARIANTS:
            raise ValueError(
                'unknown ode variant: %s, choose from %s' % (self.ode_variant, ', '.join(ODE_VARIANTS))
            )
        if self.splitting not in SPLITTINGS:
            raise ValueError('unknown splitting: %s' % self.splitting)
        if self.dt <= 0 or self.ode_dt <= 0:
            raise ValueError('time steps must be positive')
        if int(self.sample_stride) < 1:
            raise ValueError('sample_stride must be >= 1')
        self.sample_stride = int(self.sample_stride)

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> 'ExperimentConfig':
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(config) - known)
        if unknown:
            raise ValueError('unknown config keys: %s' % ', '.join(unknown))
        return cls(**config)

    @classmethod
    def from_json(cls, fp: Union[str, Path]) -> 'ExperimentConfig':
        return cls.from_config(read_json(fp))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def h(self) -> float:
        return math.exp(-self.a0)

    @property
    def sample_interval(self) -> float:
        return self.dt * self.sample_stride

    def grid(self) -> Grid:
        return Grid.for_separation(self.a0, length=self.length, n=self.n)

    def resolve_t_end(self) -> float:
        """run length, rounded down to a whole number of sample intervals"""
        h = self.h
        if self.t_end_mode == 'explicit':
            t_end = float(self.t_end)
        elif self.sigma == 0:
            t_end = SIGMA0_T_FRACTION * COLLISION_PHASE / (2 * h)
        else:
            t_end = min(math.log(1 / h) / h, self.t_budget)
        if self.sigma == 0 and 2 * h * t_end >= COLLISION_PHASE:
            raise ValueError('collision time exceeded: 2hT = %g >= pi/2' % (2 * h * t_end))
        interval = self.sample_interval
        n_samples = int(math.floor(t_end / interval + 1e-9))
        if n_samples < 1:
            raise ValueError('t_end=%g is shorter than one sample interval %g' % (t_end, interval))
        return n_samples * interval


@dataclass
class ValidationReport(object):
    config: ExperimentConfig
    t_end: float
    times: np.ndarray
    decomposition: np.ndarray
    prediction: np.ndarray
    errors: np.ndarray
    heatmap: np.ndarray
    heatmap_x: np.ndarray
    ridges: np.ndarray
    pde: PdeTrajectory
    monitor: Optional[MonitorReport] = None
    ablation: Optional[np.ndarray] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    aborted: bool = False
    error: Optional[str] = None

    ERROR_HEADER = ('t', 'h1_error', 'w_h1', 'manifold_gap', 'ablation_error')
    PREDICTION_HEADER = ('t', 'mu', 'a', 'theta', 'theta_wrapped', 'v')

    @property
    def passed(self) -> bool:
        return not self.failures and not self.aborted


def _predict(cfg: ExperimentConfig, times: np.ndarray, freeze_mu: bool = False) -> np.ndarray:
    """(mu, a, theta, v) of the chosen ODE variant at the sample times"""
    sigma = cfg.sigma
    variant = 'theorem' if freeze_mu else cfg.ode_variant
    t_end = float(times[-1])
    if variant == 'closed_form':
        a, v = closed_form(cfg.a0, sigma, times)
        sgn = -1.0 if sigma == 1 else 1.0
        theta_rate = 0.5 + 0.5 * v ** 2 + cfg.theta_coupling * sgn * np.exp(-2 * a)
        theta = cumulative_trapezoid(theta_rate, times, initial=0.0)
        return np.column_stack([np.ones_like(a), a, theta, v])

    interval = cfg.sample_interval
    per_sample = max(int(math.ceil(interval / cfg.ode_dt - 1e-9)), 1)
    ode_dt = interval / per_sample
    state0 = SymmetricState(1.0, cfg.a0, 0.0, 0.0, sigma)
    rhs = get_rhs(variant, sigma, theta_coupling=cfg.theta_coupling, freeze_mu=freeze_mu)
    y0 = state0.embed().as_array() if variant == 'general' else state0.as_array()
    traj = integrate(rhs, y0, t_end, ode_dt, stride=per_sample)
    states = traj.reduced()
    if len(states) != len(times):
        raise ValueError(
            'ode samples (%d) do not line up with the pde samples (%d)' % (len(states), len(times))
        )
    return states


def _ridges(x: np.ndarray, modulus: np.ndarray) -> np.ndarray:
    """peak positions of |u| on x < 0 and x >= 0, parabolic sub-grid refinement"""
    out = []
    dx = x[1] - x[0]
    for mask in (x < 0, x >= 0):
        idx = np.nonzero(mask)[0]
        i = idx[int(np.argmax(modulus[idx]))]
        pos = x[i]
        if 0 < i < len(x) - 1:
            f0, f1, f2 = modulus[i - 1], modulus[i], modulus[i + 1]
            denom = f0 - 2 * f1 + f2
            if denom != 0:
                pos += 0.5 * dx * (f0 - f2) / denom
        out.append(pos)
    return np.array(out)


class _CaseObserver(object):
    """Decomposes each PDE sample and compares it with the ODE prediction."""

    def __init__(self, cfg: ExperimentConfig, grid: Grid, prediction: np.ndarray, ablation):
        self.cfg = cfg
        self.grid = grid
        self.prediction = prediction
        self.ablation = ablation
        self.z_guess = SymmetricState(1.0, cfg.a0, 0.0, 0.0, cfg.sigma).embed()
        self.decompositions: List[np.ndarray] = []
        self.errors: List[List[float]] = []
        self.heatmap: List[np.ndarray] = []
        self.ridges: List[np.ndarray] = []
        self.times: List[float] = []
        stride = max(grid.n // max(cfg.heatmap_points, 1), 1)
        self.heatmap_idx = np.arange(0, grid.n, stride)
        self.monitor = LyapunovMonitor(make_cutoffs(cfg.a0, grid), cfg.h) if cfg.monitor else None

    def _predicted_field(self, states: np.ndarray, i: int) -> Field:
        z = SymmetricState.from_array(states[i], self.cfg.sigma).embed()
        return two_soliton(z, self.grid)

    def __call__(self, t: float, u: Field):
        i = len(self.times)
        dec: Decomposition = decompose(u, self.z_guess)
        self.z_guess = dec.z
        self.times.append(t)
        self.decompositions.append(dec.to_row(t))

        u_z = two_soliton(dec.z, self.grid)
        u_pred = self._predicted_field(self.prediction, i)
        err = h1_norm(u - u_pred)
        w_h1 = h1_norm(dec.w)
        gap = h1_norm(u_z - u_pred)
        abl = h1_norm(u - self._predicted_field(self.ablation, i)) if self.ablation is not None else float('nan')
        self.errors.append([t, err, w_h1, gap, abl])

        modulus = np.abs(u.values)
        self.heatmap.append(modulus[self.heatmap_idx])
        self.ridges.append(_ridges(self.grid.x, modulus))

        if self.monitor is not None:
            nu = build_correction(dec.z, self.grid) if self.cfg.correction else None
            self.monitor.add(t, dec.z, u, nu)
        logger.debug('t=%g: a=%.10f, |w|=%.3e, E=%.3e', t, dec.z.a2, w_h1, err)


def _strictly_monotone(values: np.ndarray, increasing: bool) -> bool:
    if len(values) < 2:
        return True
    diffs = np.diff(values)
    return bool(np.all(diffs > 0)) if increasing else bool(np.all(diffs < 0))


def _summarize(report: ValidationReport) -> None:
    cfg = report.config
    h = cfg.h
    errors = report.errors
    summary: Dict[str, Any] = {
        'version': RESULT_VERSION,
        'a0': cfg.a0,
        'sigma': cfg.sigma,
        'h': h,
        't_end': report.t_end,
        'samples': int(len(report.times)),
        'grid': {'n': report.pde.meta.get('n'), 'length': report.pde.meta.get('length')},
        'aborted': report.aborted,
        'error': report.error,
        'mass_drift': report.pde.mass_drift,
        'energy_drift': report.pde.energy_drift,
    }
    failures = []
    if len(errors):
        a_ext = report.decomposition[:, 1 + ZCoords.FIELDS.index('a2')]
        v_ext = report.decomposition[:, 1 + ZCoords.FIELDS.index('v2')]
        a_cf, _ = closed_form(cfg.a0, cfg.sigma, report.times)
        a_cf_err = float(np.max(np.abs(a_ext - a_cf)))
        triangle = bool(np.all(errors[:, 1] <= errors[:, 2] + errors[:, 3] + TRIANGLE_SLACK))
        monotone = _strictly_monotone(a_ext, increasing=cfg.sigma == 1)
        summary.update(
            {
                'max_h1_error': float(np.max(errors[:, 1])),
                'max_w_h1': float(np.max(errors[:, 2])),
                'max_manifold_gap': float(np.max(errors[:, 3])),
                'max_orthogonality_residual': float(np.max(report.decomposition[:, -2])),
                'a_closed_form_error': a_cf_err,
                'a_closed_form_tolerance': A_CLOSED_FORM_FACTOR * h ** 2 * cfg.a0,
                'monotone_a': monotone,
                'triangle_check': triangle,
                'max_v': float(np.max(v_ext)),
                'final_a': float(a_ext[-1]),
            }
        )
        if report.ablation is not None:
            summary['ablation_max_h1_error'] = float(np.nanmax(errors[:, 4]))
        if not monotone:
            failures.append('a(t) is not strictly %s' % ('increasing' if cfg.sigma == 1 else 'decreasing'))
        if not triangle:
            failures.append('triangle bookkeeping violated')
        if cfg.sigma == 0 and summary['max_v'] > V_SIGN_SLACK:
            failures.append('positive velocity %.3e in the attracting case' % summary['max_v'])
        if cfg.ode_variant == 'theorem' and a_cf_err > summary['a_closed_form_tolerance']:
            failures.append('extracted a(t) is %.3e away from the closed form' % a_cf_err)
    if report.monitor is not None:
        summary['monitor'] = report.monitor.summary()
        if report.monitor.violation_fraction > MAX_VIOLATION_FRACTION:
            failures.append(
                'dL/dt envelope violated on %.1f%% of samples' % (100 * report.monitor.violation_fraction)
            )
    summary['failures'] = failures
    summary['passed'] = not failures and not report.aborted
    report.summary = summary
    report.failures = failures


def run_case(cfg: ExperimentConfig, progress: bool = True) -> ValidationReport:
    """
    Evolve the symmetric two-soliton data, decompose every sample and compare
    it with the ODE prediction. A numerical abort keeps the samples gathered
    so far and marks the report as aborted.
    """
    grid = cfg.grid()
    t_end = cfg.resolve_t_end()
    n_samples = int(round(t_end / cfg.sample_interval))
    times = cfg.sample_interval * np.arange(n_samples + 1)
    logger.info(
        'run a0=%g sigma=%d: T=%g, grid n=%d L=%g, %d samples',
        cfg.a0,
        cfg.sigma,
        t_end,
        grid.n,
        grid.length,
        n_samples + 1,
    )

    prediction = _predict(cfg, times)
    ablation = _predict(cfg, times, freeze_mu=True) if cfg.theta_ablation else None
    observer = _CaseObserver(cfg, grid, prediction, ablation)
    solver_cfg = SolverConfig(
        dt=cfg.dt, t_end=t_end, sample_stride=cfg.sample_stride, grid=grid, splitting=cfg.splitting
    )
    u0 = case_initial_data(cfg.a0, cfg.sigma, grid)

    aborted, error = False, None
    pde = PdeTrajectory()
    try:
        pde = evolve(u0, solver_cfg, observers=[observer], progress=progress)
    except NumericalAbort as e:
        logger.error('run aborted: %s', e)
        aborted, error = True, str(e)

    k = len(observer.times)
    report = ValidationReport(
        config=cfg,
        t_end=t_end,
        times=np.asarray(observer.times),
        decomposition=np.array(observer.decompositions).reshape(k, len(Decomposition.CSV_HEADER)),
        prediction=prediction[:k],
        errors=np.array(observer.errors).reshape(k, len(ValidationReport.ERROR_HEADER)),
        heatmap=np.array(observer.heatmap).reshape(k, len(observer.heatmap_idx)),
        heatmap_x=grid.x[observer.heatmap_idx],
        ridges=np.array(observer.ridges).reshape(k, 2),
        pde=pde,
        monitor=observer.monitor.report() if observer.monitor is not None and k else None,
        ablation=None if ablation is None else ablation[:k],
        aborted=aborted,
        error=error,
    )
    _summarize(report)
    logger.info(
        'run a0=%g sigma=%d done: max E=%.3e, passed=%s',
        cfg.a0,
        cfg.sigma,
        report.summary.get('max_h1_error', float('nan')),
        report.passed,
    )
    return report


def emit_report(report: ValidationReport, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    write_json(out_dir / 'config.json', report.config.to_dict())
    write_csv(out_dir / 'decomposition.csv', Decomposition.CSV_HEADER, report.decomposition)
    pred = report.prediction
    write_csv(
        out_dir / 'prediction.csv',
        ValidationReport.PREDICTION_HEADER,
        np.column_stack([report.times, pred[:, 0], pred[:, 1], pred[:, 2], wrap_angle(pred[:, 2]), pred[:, 3]]),
    )
    if report.ablation is not None:
        abl = report.ablation
        write_csv(
            out_dir / 'prediction_ablation.csv',
            ValidationReport.PREDICTION_HEADER,
            np.column_stack([report.times, abl[:, 0], abl[:, 1], abl[:, 2], wrap_angle(abl[:, 2]), abl[:, 3]]),
        )
    write_csv(out_dir / 'errors.csv', ValidationReport.ERROR_HEADER, report.errors)
    if report.pde.times:
        report.pde.save_conserved(out_dir / 'conserved.csv')
    if report.monitor is not None:
        report.monitor.save(out_dir / 'monitor.csv')

    # long format (t, x, |u|) for the heatmap panel
    tt, xx = np.meshgrid(report.times, report.heatmap_x, indexing='ij')
    write_csv(
        out_dir / 'plotdata_heatmap.csv',
        ('t', 'x', 'abs_u'),
        np.column_stack([tt.ravel(), xx.ravel(), report.heatmap.ravel()]),
    )
    ridges = report.ridges
    write_csv(
        out_dir / 'plotdata_ridges.csv',
        ('t', 'left', 'right', 'separation'),
        np.column_stack([report.times, ridges[:, 0], ridges[:, 1], ridges[:, 1] - ridges[:, 0]]),
    )
    a_col = 1 + ZCoords.FIELDS.index('a2')
    a_ext = report.decomposition[:, a_col] if len(report.times) else np.zeros(0)
    if len(report.times):
        a_cf, _ = closed_form(report.config.a0, report.config.sigma, report.times)
    else:
        a_cf = np.zeros(0)
    write_csv(
        out_dir / 'plotdata_a.csv',
        ('t', 'a_extracted', 'a_predicted', 'a_closed_form'),
        np.column_stack([report.times, a_ext, report.prediction[:, 1], a_cf]),
    )
    write_json(out_dir / 'summary.json', report.summary)
    logger.info('report written to %s', out_dir)
    return out_dir


@dataclass
class ScalingReport(object):
    sigma: int
    a0_list: List[float]
    h: List[float]
    max_errors: List[float]
    slope: float
    intercept: float
    residual: float
    runs: List[Dict[str, Any]] = field(default_factory=list)

    HEADER = ('a0', 'h', 'max_h1_error', 'max_w_h1', 't_end')

    def rows(self) -> np.ndarray:
        return np.array(
            [
                [a0, h, err, run.get('max_w_h1', float('nan')), run['t_end']]
                for a0, h, err, run in zip(self.a0_list, self.h, self.max_errors, self.runs)
            ]
        )


def _run_quiet(cfg_dict: Dict[str, Any]) -> Dict[str, Any]:
    report = run_case(ExperimentConfig.from_config(cfg_dict), progress=False)
    emit_report(report, report.config.output_dir)
    return report.summary


def scaling_study(
    a0_list: Sequence[float],
    sigma: int,
    base: Optional[ExperimentConfig] = None,
    t_end_factor: Optional[float] = None,
    workers: int = 1,
    output_dir: Optional[Union[str, Path]] = None,
) -> ScalingReport:
    """
    Runs run_case for every a0 and fits max_t E(t) ~ h^slope. With
    ``t_end_factor`` the horizon is t_end_factor / h (sigma = 0 defaults to 0.5).
    """
    if len(a0_list) < 3:
        raise ValueError('need >= 3 points')
    base = base or ExperimentConfig()
    if t_end_factor is None and sigma == 0:
        t_end_factor = 0.5
    out_root = Path(output_dir or base.output_dir)

    configs = []
    for a0 in a0_list:
        overrides = {'a0': float(a0), 'sigma': sigma, 'output_dir': str(out_root / ('a0-%g_sigma-%d' % (a0, sigma)))}
        if t_end_factor is not None:
            overrides.update(t_end_mode='explicit', t_end=t_end_factor * math.exp(a0))
        configs.append(replace(base, **overrides).to_dict())

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            summaries = list(executor.map(_run_quiet, configs))
    else:
        summaries = [_run_quiet(c) for c in configs]

    aborted = [s for s in summaries if s.get('aborted') or 'max_h1_error' not in s]
    if aborted:
        raise NumericalAbort(
            'scaling study: %d of %d runs aborted (%s)'
            % (len(aborted), len(summaries), '; '.join(str(s.get('error')) for s in aborted))
        )
    h = [math.exp(-a0) for a0 in a0_list]
    max_errors = [s['max_h1_error'] for s in summaries]
    fit = fit_power_law(h, max_errors)
    logger.info('scaling sigma=%d: slope %.3f (residual %.3e)', sigma, fit['slope'], fit['residual'])
    return ScalingReport(
        sigma=sigma,
        a0_list=[float(a) for a in a0_list],
        h=h,
        max_errors=max_errors,
        slope=fit['slope'],
        intercept=fit['intercept'],
        residual=fit['residual'],
        runs=summaries,
    )


def emit_scaling(report: ScalingReport, out_dir: Union[str, Path]) -> Path:
    out_dir = Path(out_dir)
    write_csv(out_dir / 'scaling.csv', ScalingReport.HEADER, report.rows())
    write_json(
        out_dir / 'scaling_summary.json',
        {
            'version': RESULT_VERSION,
            'sigma': report.sigma,
            'a0': report.a0_list,
            'slope': report.slope,
            'intercept': report.intercept,
            'residual': report.residual,
        },
    )
    return out_dir


def residual_study(
    a0_list: Sequence[float], sigma: int = 1, velocity_factor: float = 1.0
) -> Dict[str, Any]:
    """
    Approximate-equation residual of u_z and of u_z + nu_z at symmetric states
    (1, a0, 0, velocity_factor * h) moving along the reduced law, with the
    fitted power of h for both.
    """
    if len(a0_list) < 3:
        raise ValueError('need >= 3 points')
    rows = []
    for a0 in a0_list:
        h = math.exp(-a0)
        z = SymmetricState(1.0, a0, 0.0, velocity_factor * h, sigma).embed()
        zdot = symmetric_rates(z)
        grid = Grid.for_separation(a0)
        plain = residual(z, zdot, grid, correction=False)
        corrected = residual(z, zdot, grid, correction=True)
        logger.info('a0=%g: residual %.3e without, %.3e with correction', a0, plain, corrected)
        rows.append([a0, h, plain, corrected])
    rows = np.array(rows)
    fit_plain = fit_power_law(rows[:, 1], rows[:, 2])
    fit_corrected = fit_power_law(rows[:, 1], rows[:, 3])
    return {
        'rows': rows,
        'header': ('a0', 'h', 'residual_plain', 'residual_corrected'),
        'slope_plain': fit_plain['slope'],
        'slope_corrected': fit_corrected['slope'],
    }
