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

import pytest
import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from solitonlab.soliton import REST_PARAMS, SolitonParams, case_initial_data, eval_soliton, free_flow, sech
from solitonlab.solver import (
    PdeTrajectory,
    SolverConfig,
    evolve,
    linear_flow,
    load_checkpoint,
    step,
)
from solitonlab.spectral import Field, Grid, h1_norm, momentum
from solitonlab.utils import BlowUpError, read_csv, set_logger

logger = set_logger(log_level=logging.INFO)

GRID = Grid(n=2048, length=80.0)
MOVING = SolitonParams(1.0, -1.0, 0.0, 0.5)


def _soliton_error(dt, splitting, t_end=1.0, p=MOVING):
    u0 = eval_soliton(p, GRID)
    cfg = SolverConfig(dt=dt, t_end=t_end, sample_stride=10 ** 6, splitting=splitting)
    traj = evolve(u0, cfg, keep_fields=True, progress=False)
    exact = eval_soliton(free_flow(p, t_end), GRID)
    return h1_norm(traj.fields[-1] - exact)


def test_soliton_is_transported():
    assert _soliton_error(1e-3, 'strang') <= 1e-5
    assert _soliton_error(1e-2, 'yoshida4') <= 1e-6


def test_standing_soliton_phase():
    # e^{i t / 2} sech x
    fine = _soliton_error(1e-3, 'strang', p=REST_PARAMS)
    finer = _soliton_error(5e-4, 'strang', p=REST_PARAMS)
    logger.info('standing soliton errors: %.3e, %.3e', fine, finer)
    assert fine <= 1e-6
    assert 3.2 <= fine / finer <= 4.8


SPLITTING_ORDERS = [('strang', 0.02, 3.2, 4.8), ('yoshida4', 0.04, 11.0, 21.0)]


@pytest.mark.parametrize('splitting, dt, lo, hi', SPLITTING_ORDERS)
def test_splitting_order(splitting, dt, lo, hi):
    ratio = _soliton_error(dt, splitting) / _soliton_error(dt / 2, splitting)
    logger.info('%s error ratio: %.3f', splitting, ratio)
    assert lo <= ratio <= hi


def test_mass_is_conserved():
    grid = Grid.for_separation(3.0)
    u0 = case_initial_data(3.0, 1, grid)
    cfg = SolverConfig(dt=5e-3, t_end=50.0, sample_stride=1000)
    traj = evolve(u0, cfg, progress=False)
    assert len(traj.times) == 11
    assert traj.mass_drift < 1e-12


@pytest.mark.parametrize('sigma', [0, 1])
def test_parity_is_kept(sigma):
    grid = Grid.for_separation(3.0)
    u0 = case_initial_data(3.0, sigma, grid)
    cfg = SolverConfig(dt=5e-3, t_end=5.0, sample_stride=250)
    traj = evolve(u0, cfg, keep_fields=True, progress=False)
    sign = -1 if sigma == 1 else 1
    u = traj.fields[-1]
    mirrored = u.values[grid.mirror_index()]
    assert np.max(np.abs(mirrored - sign * u.values)) < 1e-11
    assert np.max(np.abs(traj.momentum)) < 1e-13


@pytest.mark.parametrize('splitting', ['strang', 'yoshida4'])
def test_time_reversal(splitting):
    u0 = eval_soliton(MOVING, GRID) + eval_soliton(SolitonParams(0.8, 4.0, 1.0, -0.3), GRID)
    u = u0
    for _ in range(100):
        u = step(u, 0.01, splitting)
    for _ in range(100):
        u = step(u, -0.01, splitting)
    assert np.max(np.abs(u.values - u0.values)) < 1e-11


@pytest.mark.parametrize('t', [0.5, 1.0, 3.0])
def test_free_gaussian(t):
    x = GRID.x
    u0 = Field(GRID, np.exp(-(x ** 2) / 2))
    exact = (1 + 1j * t) ** -0.5 * np.exp(-(x ** 2) / (2 * (1 + 1j * t)))
    assert np.max(np.abs(linear_flow(u0, t).values - exact)) < 1e-12


def test_checkpoints(tmp_path):
    grid = Grid(n=256, length=40.0)
    u0 = Field(grid, 1.2 * sech(grid.x))
    cfg = SolverConfig(dt=0.01, t_end=0.2, sample_stride=5, checkpoint_every=5, checkpoint_dir=str(tmp_path))
    full = evolve(u0, cfg, keep_fields=True, progress=False)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ['step-%08d.bin' % i for i in (5, 10, 15, 20)]

    u_end, t, dt, idx = load_checkpoint(tmp_path / 'step-00000020.bin')
    assert (t, dt, idx) == (pytest.approx(0.2), 0.01, 20)
    assert np.array_equal(u_end.values, full.fields[-1].values)

    # resuming from the midpoint reproduces the uninterrupted run
    u_mid, t_mid, _, _ = load_checkpoint(tmp_path / 'step-00000010.bin')
    rest = evolve(u_mid, SolverConfig(dt=0.01, t_end=0.1, sample_stride=5), keep_fields=True, t0=t_mid, progress=False)
    assert np.array_equal(rest.fields[-1].values, full.fields[-1].values)
    assert rest.times[-1] == pytest.approx(0.2)


def test_blow_up():
    grid = Grid(n=64, length=20.0)
    u0 = Field(grid, 1e200 * sech(grid.x))
    with np.errstate(all='ignore'):
        with pytest.raises(BlowUpError) as e:
            evolve(u0, SolverConfig(dt=0.01, t_end=0.1), progress=False)
    assert e.value.last_time == 0.0


def test_samples_and_conserved_file(tmp_path):
    grid = Grid(n=256, length=40.0)
    calls = []
    traj = evolve(
        Field(grid, sech(grid.x)),
        SolverConfig(dt=0.01, t_end=1.0, sample_stride=30),
        observers=[lambda t, u: calls.append(t)],
        progress=False,
    )
    assert np.allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0])
    assert np.allclose(calls, traj.times)
    assert traj.meta['n'] == 256 and traj.meta['length'] == 40.0

    fp = tmp_path / 'conserved.csv'
    traj.save_conserved(fp)
    header, data = read_csv(fp)
    assert tuple(header) == PdeTrajectory.CONSERVED_HEADER
    assert data.shape == (5, 4)
    assert np.allclose(data[:, 1], 1.0, atol=1e-12)


def test_config_errors():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(t_end=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(sample_stride=0)
    with pytest.raises(ValueError, match='unknown splitting'):
        SolverConfig(splitting='euler')
    with pytest.raises(ValueError, match='does not match'):
        evolve(GRID.zeros(), SolverConfig(grid=Grid(n=512, length=80.0)), progress=False)


@pytest.mark.slow
def test_energy_drift_over_interaction_time():
    a0 = 5.0
    grid = Grid.for_separation(a0)
    t_end = round(math.exp(a0))
    cfg = SolverConfig(dt=5e-3, t_end=t_end, sample_stride=2000, splitting='yoshida4', grid=grid)
    traj = evolve(case_initial_data(a0, 1, grid), cfg, progress=False)
    assert traj.energy_drift <= 1e-8
    assert traj.mass_drift <= 1e-12
