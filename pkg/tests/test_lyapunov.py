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

import pytest
import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from solitonlab.lyapunov import (
    LyapunovMonitor,
    MonitorReport,
    L,
    W,
    bracket_drift_check,
    classical_W,
    classical_W_prime,
    classical_quadratic_form,
    coercivity_ratio,
    localized_functionals,
    make_cutoffs,
    monitor,
    poisson_brackets,
    quadratic_form,
    random_orthogonal_perturbation,
    smooth_step,
    weight_coefficients,
)
from solitonlab.soliton import (
    SolitonParams,
    SymmetricState,
    case_initial_data,
    eval_soliton,
    two_soliton,
)
from solitonlab.solver import SolverConfig, evolve
from solitonlab.spectral import Field, Grid, derivative, h1_norm, mass, momentum
from solitonlab.symplectic import pairing_matrix, single_frame, two_soliton_frame
from solitonlab.utils import read_csv

A0 = 8.0
GRID = Grid.for_separation(A0)
CUT = make_cutoffs(A0, GRID)
Z = SymmetricState(1.0, A0, 0.0, 0.0, 1).embed()


def test_smooth_step():
    psi, dpsi, ddpsi = smooth_step(np.array([-3.0, -1.0, 0.0, 0.5, 1.0, 2.0]))
    assert np.allclose(psi, [0.0, 0.0, 0.5, 0.5 * (1 + math.sin(math.pi / 4)), 1.0, 1.0], atol=1e-15)
    assert dpsi[2] == pytest.approx(math.pi / 4)
    assert dpsi[0] == dpsi[-1] == 0.0
    assert ddpsi[2] == 0.0


def test_cutoffs():
    assert CUT.delta == 4 / A0
    assert np.max(np.abs(CUT.psi1 + CUT.psi2 - 1)) < 1e-15
    assert np.all(CUT.psi2[GRID.x >= A0 / 4] == 1.0)
    assert np.all(CUT.psi1[GRID.x <= -A0 / 4] == 1.0)
    assert CUT.derivative_bound <= CUT.delta ** 2 * math.pi ** 2 / 4 + 1e-15
    with pytest.raises(ValueError, match='separation too small'):
        make_cutoffs(2.0, GRID)


def test_localized_functionals_split_the_totals():
    u = two_soliton(SymmetricState(1.1, A0, 0.3, 0.2, 0).embed(), GRID)
    m1, m2, p1, p2 = localized_functionals(u, CUT)
    assert abs(m1 + m2 - mass(u)) < 1e-13
    assert abs(p1 + p2 - momentum(u)) < 1e-13
    # symmetric data splits evenly, the momenta cancel
    assert abs(m1 - m2) < 1e-12
    assert abs(p1 + p2) < 1e-12

    right = eval_soliton(SolitonParams(1.0, A0, 0.0, 0.0), GRID)
    m1, m2, _, _ = localized_functionals(right, CUT)
    assert m1 < 1e-5
    assert abs(m2 - 1.0) < 1e-5


def test_weight_coefficients():
    (c1, c2), (d1, d2) = weight_coefficients(Z)
    assert c1 == c2 == 0.5
    assert d1 == d2 == 0.0
    moving = SymmetricState(1.2, A0, 0.0, 0.1, 0).embed()
    (c1, c2), (d1, d2) = weight_coefficients(moving)
    assert c1 == c2 == pytest.approx(0.5 * 1.44 + 0.5 * 0.01 / 1.44)
    assert d1 == -d2 == pytest.approx(-0.1 / 1.2)


def test_W_of_two_solitons():
    u = two_soliton(Z, GRID)
    assert abs(W(Z, u, CUT) - 2.0 / 3) < 1e-5
    assert abs(W(Z, u * np.exp(0.9j), CUT) - W(Z, u, CUT)) < 1e-13


def _perturbation(seed, h1=1.0):
    frame = two_soliton_frame(Z, GRID)
    A = pairing_matrix(frame)
    return random_orthogonal_perturbation(frame, A, seed, centers=(-A0, A0), h1=h1)


def test_L_vanishes_on_the_manifold():
    u = two_soliton(Z, GRID)
    assert L(Z, u, CUT) == 0.0
    nu = _perturbation(0, h1=1e-4)
    assert abs(L(Z, u + nu, CUT, nu=nu)) < 1e-15


def test_L_is_quadratic():
    u = two_soliton(Z, GRID)
    w = _perturbation(1)
    eps = 1e-3
    l1 = L(Z, u + w * eps, CUT)
    l2 = L(Z, u + w * (2 * eps), CUT)
    assert abs(l2 / l1 - 4) < 1e-2
    q = quadratic_form(Z, w, CUT)
    assert abs(2 * l1 / eps ** 2 - q) < 1e-2 * abs(q)


def test_quadratic_form_is_second_variation():
    u = two_soliton(Z, GRID)
    w = _perturbation(2)
    eps = 1e-3
    second = (W(Z, u + w * eps, CUT) - 2 * W(Z, u, CUT) + W(Z, u - w * eps, CUT)) / eps ** 2
    q = quadratic_form(Z, w, CUT)
    assert abs(second - q) < 1e-4 * max(1.0, abs(q))


@pytest.mark.parametrize('seed', range(5))
def test_coercivity_on_the_complement(seed):
    w = _perturbation(seed)
    ratio = coercivity_ratio(quadratic_form(Z, w, CUT), w)
    assert ratio >= 0.02


def test_phase_direction_is_nearly_degenerate():
    eta1 = eval_soliton(Z.soliton(1), GRID)
    w = eta1 * 1j
    assert abs(coercivity_ratio(quadratic_form(Z, w, CUT), w)) <= 1e-2


@pytest.mark.parametrize('a0', [4.0, 5.0, 6.0])
def test_coercivity_over_random_samples(a0):
    grid = Grid.for_separation(a0)
    cut = make_cutoffs(a0, grid)
    z = SymmetricState(1.0, a0, 0.0, 0.0, 1).embed()
    frame = two_soliton_frame(z, grid)
    A = pairing_matrix(frame)
    rng = np.random.default_rng(int(a0))
    ratios = []
    for _ in range(200):
        w = random_orthogonal_perturbation(frame, A, rng, centers=(-a0, a0), h1=1.0)
        ratios.append(coercivity_ratio(quadratic_form(z, w, cut), w))
    assert min(ratios) >= 0.02

    eta1 = eval_soliton(z.soliton(1), grid)
    for w in (eta1 * 1j, derivative(eta1)):
        assert abs(coercivity_ratio(quadratic_form(z, w, cut), w)) <= 1e-2



SINGLE = [SolitonParams(1.0, 0.0, 0.0, 0.0), SolitonParams(1.3, 1.0, 0.5, 0.4)]


@pytest.mark.parametrize('p', SINGLE)
def test_classical_functional(p):
    eta = eval_soliton(p, GRID)
    assert h1_norm(classical_W_prime(p, eta)) < 1e-10
    assert abs(classical_W(p, eta) - p.mu ** 3 / 3) < 1e-10


@pytest.mark.parametrize('seed', range(3))
def test_classical_coercivity(seed):
    p = SolitonParams(1.0, 0.0, 0.0, 0.0)
    frame = single_frame(p, GRID)
    w = random_orthogonal_perturbation(frame, pairing_matrix(frame), seed, centers=(0.0,), h1=1.0)
    assert abs(h1_norm(w) - 1.0) < 1e-12
    eta = eval_soliton(p, GRID)
    assert coercivity_ratio(classical_quadratic_form(p, w, eta), w) >= 0.05


def test_brackets():
    far = eval_soliton(SolitonParams(1.0, 20.0, 0.0, 0.5), GRID)
    assert np.max(np.abs(poisson_brackets(far, CUT))) < 1e-8

    u = eval_soliton(SolitonParams(1.0, 0.5, 0.0, 0.7), GRID)
    hm1, hm2, hp1, hp2 = poisson_brackets(u, CUT)
    assert abs(hm1) > 1e-3
    assert abs(hm1 + hm2) < 1e-14
    assert abs(hp1 + hp2) < 1e-14


def test_brackets_match_the_flow():
    u0 = eval_soliton(SolitonParams(1.0, -2.0, 0.0, 1.0), GRID)
    cfg = SolverConfig(dt=1e-3, t_end=0.5, sample_stride=10)
    traj = evolve(u0, cfg, keep_fields=True, progress=False)
    drift = bracket_drift_check(traj.times, traj.fields, CUT)
    assert drift['scale'] > 1e-3
    assert drift['mass'] < 1e-3 * drift['scale']
    assert drift['momentum'] < 1e-3 * drift['scale']

    with pytest.raises(ValueError):
        bracket_drift_check(traj.times[:2], traj.fields[:2], CUT)


def test_monitor_on_frozen_data(tmp_path):
    w = _perturbation(3, h1=1e-3)
    u = two_soliton(Z, GRID) + w
    report = monitor([0.0, 1.0, 2.0], [u] * 3, [Z] * 3, CUT, h=math.exp(-A0))
    assert isinstance(report, MonitorReport)
    assert np.all(report.dL_dt == 0)
    assert report.violations == []
    assert np.allclose(report.w_norm, 1e-3)
    assert np.all(report.coercivity_ratio > 0)

    fp = tmp_path / 'monitor.csv'
    report.save(fp)
    header, data = read_csv(fp)
    assert tuple(header) == MonitorReport.HEADER
    assert data.shape == (3, 6)
    assert set(report.summary()) == {'fitted_constant', 'violations', 'violation_fraction', 'max_L'}


def test_monitor_ignores_exact_manifold_points():
    mon = LyapunovMonitor(CUT, h=math.exp(-A0))
    u = two_soliton(Z, GRID)
    mon.add(0.0, Z, u)
    mon.add(1.0, Z, u + _perturbation(4, h1=1e-3))
    mon.add(2.0, Z, u + _perturbation(4, h1=2e-3))
    report = mon.report()
    assert report.w_norm[0] == 0.0
    assert report.violation_fraction == 0.0
    assert report.fitted_constant > 0


def test_symmetric_odd_data_has_equal_local_masses():
    grid = Grid.for_separation(5.0)
    u = case_initial_data(5.0, 1, grid)
    m1, m2, p1, p2 = localized_functionals(u, make_cutoffs(5.0, grid))
    assert abs(m1 - m2) < 1e-12
    assert abs(p1) < 1e-14 and abs(p2) < 1e-14
