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

import os
import sys
import math
import logging
import filecmp

import pytest
import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from solitonlab import experiment
from solitonlab.dynamics import closed_form
from solitonlab.experiment import (
    ExperimentConfig,
    ValidationReport,
    _predict,
    _ridges,
    emit_report,
    residual_study,
    run_case,
    scaling_study,
)
from solitonlab.utils import BlowUpError, read_csv, read_json, set_logger

logger = set_logger(log_level=logging.INFO)

SMALL_CASE = dict(
    a0=3.0, sigma=1, t_end_mode='explicit', t_end=2.0, dt=0.01, sample_stride=50, heatmap_points=64
)

REPORT_FILES = [
    'config.json',
    'decomposition.csv',
    'prediction.csv',
    'prediction_ablation.csv',
    'errors.csv',
    'conserved.csv',
    'monitor.csv',
    'plotdata_heatmap.csv',
    'plotdata_ridges.csv',
    'plotdata_a.csv',
    'summary.json',
]

BAD_CONFIGS = [
    dict(a0=2.0),
    dict(sigma=2),
    dict(t_end_mode='fixed'),
    dict(t_end_mode='explicit'),
    dict(t_end_mode='explicit', t_end=-1.0),
    dict(ode_variant='euler'),
    dict(splitting='lie'),
    dict(dt=0.0),
    dict(sample_stride=0),
]


@pytest.mark.parametrize('overrides', BAD_CONFIGS)
def test_bad_config(overrides):
    with pytest.raises(ValueError):
        ExperimentConfig(**overrides)


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(**SMALL_CASE)
    assert ExperimentConfig.from_config(cfg.to_dict()) == cfg
    with pytest.raises(ValueError, match='unknown config keys: foo'):
        ExperimentConfig.from_config(dict(SMALL_CASE, foo=1))
    defaults = ExperimentConfig()
    assert defaults.correction is False
    assert defaults.splitting == 'yoshida4'
    assert defaults.ode_variant == 'theorem'

T_END_CASES = [(5.0, 0, 93.0), (5.0, 1, 742.0), (4.0, 1, 218.0)]


@pytest.mark.parametrize('a0, sigma, expected', T_END_CASES)
def test_resolve_t_end(a0, sigma, expected):
    assert ExperimentConfig(a0=a0, sigma=sigma).resolve_t_end() == pytest.approx(expected)


def test_resolve_t_end_errors():
    h = math.exp(-5.0)
    with pytest.raises(ValueError, match='collision time exceeded'):
        ExperimentConfig(a0=5.0, sigma=0, t_end_mode='explicit', t_end=1 / h).resolve_t_end()
    with pytest.raises(ValueError, match='shorter than one sample interval'):
        ExperimentConfig(a0=5.0, t_end_mode='explicit', t_end=0.1).resolve_t_end()
    budget = ExperimentConfig(a0=8.0, sigma=1, t_budget=100.0)
    assert budget.resolve_t_end() == pytest.approx(100.0)


def test_ridges():
    x = np.linspace(-10, 10, 201)
    modulus = np.exp(-((x + 3.0) ** 2)) + np.exp(-((x - 3.02) ** 2))
    left, right = _ridges(x, modulus)
    assert abs(left + 3.0) < 1e-12
    assert abs(right - 3.02) < 5e-3


def test_predictions_agree():
    base = dict(a0=5.0, sigma=1, t_end_mode='explicit', t_end=50.0)
    times = 0.5 * np.arange(101)
    theorem = _predict(ExperimentConfig(**base), times)
    closed = _predict(ExperimentConfig(ode_variant='closed_form', **base), times)
    a, v = closed_form(5.0, 1, times)
    assert theorem.shape == closed.shape == (101, 4)
    assert np.max(np.abs(theorem[:, 1] - a)) < 1e-8
    assert np.max(np.abs(closed[:, 3] - v)) == 0
    assert np.max(np.abs(theorem[:, 2] - closed[:, 2])) < 2e-2
    assert np.all(closed[:, 0] == 1.0)

    frozen = _predict(ExperimentConfig(**base), times, freeze_mu=True)
    assert np.max(np.abs(frozen[:, 1] - a)) < 1e-8
    # mu = 1 in the phase equation gives the closed-form phase rate
    assert np.max(np.abs(frozen[:, 2] - closed[:, 2])) < 1e-4


def test_general_prediction_agrees_on_a_short_horizon():
    base = dict(a0=5.0, sigma=1, t_end_mode='explicit', t_end=1.0, ode_dt=0.05)
    times = 0.5 * np.arange(3)
    theorem = _predict(ExperimentConfig(**base), times)
    general = _predict(ExperimentConfig(ode_variant='general', **base), times)
    assert general.shape == (3, 4)
    # the two laws differ by a few percent of the acceleration 4 h^2
    bound = 0.05 * 4 * math.exp(-10.0)
    assert np.max(np.abs(general[:, 3] - theorem[:, 3])) < bound
    assert np.max(np.abs(general[:, 1] - theorem[:, 1])) < bound


def test_small_run(tmp_path):
    cfg = ExperimentConfig(**SMALL_CASE)
    report = run_case(cfg, progress=False)
    assert not report.aborted
    assert len(report.times) == 5
    assert report.errors.shape == (5, len(ValidationReport.ERROR_HEADER))
    assert report.summary['monotone_a']
    assert report.summary['triangle_check']
    assert report.summary['samples'] == 5
    assert report.summary['grid'] == {'n': 2048, 'length': 72.0}
    assert report.pde.mass_drift < 1e-11

    out = emit_report(report, tmp_path / 'first')
    for name in REPORT_FILES:
        assert (out / name).exists(), name
    assert ExperimentConfig.from_json(out / 'config.json') == cfg
    header, data = read_csv(out / 'plotdata_heatmap.csv')
    assert header == ['t', 'x', 'abs_u']
    assert data.shape == (5 * 64, 3)
    summary = read_json(out / 'summary.json')
    assert summary['samples'] == 5
    assert summary['passed'] == report.passed

    # same inputs, same bytes
    again = emit_report(run_case(cfg, progress=False), tmp_path / 'second')
    match, mismatch, errors = filecmp.cmpfiles(out, again, REPORT_FILES, shallow=False)
    assert mismatch == [] and errors == []


def test_aborted_run_keeps_partial_samples(tmp_path, monkeypatch):
    def failing_evolve(u0, cfg, observers=(), **kwargs):
        for obs in observers:
            obs(0.0, u0)
        raise BlowUpError('non-finite field after t = 0', last_time=0.0)

    monkeypatch.setattr(experiment, 'evolve', failing_evolve)
    report = run_case(ExperimentConfig(**SMALL_CASE), progress=False)
    assert report.aborted
    assert not report.passed
    assert 'non-finite' in report.error
    assert len(report.times) == 1
    out = emit_report(report, tmp_path)
    assert read_json(out / 'summary.json')['aborted'] is True
    assert not (out / 'conserved.csv').exists()


def test_studies_need_three_points():
    with pytest.raises(ValueError, match='need >= 3 points'):
        scaling_study([4.0, 5.0], 1)
    with pytest.raises(ValueError, match='need >= 3 points'):
        residual_study([4.0, 5.0])


@pytest.mark.slow
@pytest.mark.parametrize('sigma', [0, 1])
def test_error_scaling(tmp_path, sigma):
    base = ExperimentConfig(sample_stride=1000, theta_ablation=False)
    report = scaling_study([4.0, 5.0, 6.0], sigma, base=base, output_dir=str(tmp_path))
    logger.info('sigma=%d: slope %.3f, errors %s', sigma, report.slope, report.max_errors)
    assert report.slope >= 1.7
    for run in report.runs:
        assert run['monotone_a']
        assert run['triangle_check']


@pytest.mark.slow
@pytest.mark.parametrize('sigma', [0, 1])
def test_full_horizon_run(tmp_path, sigma):
    cfg = ExperimentConfig(a0=5.0, sigma=sigma, sample_stride=1000, output_dir=str(tmp_path))
    report = run_case(cfg, progress=False)
    assert not report.aborted
    assert report.summary['monotone_a']
    assert report.summary['triangle_check']
    monitored = report.monitor.summary()
    logger.info('sigma=%d monitor: %s', sigma, monitored)
    assert report.monitor.violation_fraction <= 0.01
    assert math.isfinite(monitored['fitted_constant'])
    assert monitored['fitted_constant'] > 0


@pytest.mark.slow
@pytest.mark.parametrize('sigma', [0, 1])
def test_residual_scaling(sigma):
    result = residual_study([5.0, 6.0, 7.0], sigma=sigma)
    logger.info(
        'sigma=%d residual slopes: %.3f plain, %.3f corrected',
        sigma,
        result['slope_plain'],
        result['slope_corrected'],
    )
    assert 1.6 <= result['slope_plain'] <= 2.6
    assert result['slope_corrected'] >= 3.5
    assert np.all(result['rows'][:, 3] < result['rows'][:, 2])
