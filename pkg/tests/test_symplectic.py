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
import logging

import pytest
import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from solitonlab import symplectic
from solitonlab.soliton import REST_PARAMS, SolitonParams, SymmetricState, ZCoords, two_soliton
from solitonlab.spectral import Field, Grid, h1_norm, nls_vector_field, symplectic_pair
from solitonlab.symplectic import (
    Decomposition,
    Frame,
    complement,
    decompose,
    orthogonality_residuals,
    pairing_matrix,
    project,
    single_frame,
    two_soliton_frame,
)
from solitonlab.utils import ConvergenceError, DegenerateFrameError, LeftManifoldError, set_logger

logger = set_logger(log_level=logging.INFO)

GRID = Grid(n=2048, length=80.0)


def _bump(grid, center, seed=0):
    rng = np.random.default_rng(seed)
    x = grid.x
    return Field(grid, (rng.normal() + 1j * rng.normal()) * np.exp(-((x - center) ** 2) + 1j * rng.normal() * x))


def test_rest_pairing_matrix():
    A = pairing_matrix(single_frame(REST_PARAMS, GRID)).entries
    expected = np.zeros((4, 4))
    # rows and columns ordered (mu, a, theta, v)
    expected[2, 0], expected[0, 2] = 1.0, -1.0
    expected[3, 1], expected[1, 3] = 1.0, -1.0
    assert np.max(np.abs(A - expected)) < 1e-12


@pytest.mark.parametrize('p', [REST_PARAMS, SolitonParams(1.3, 2.0, 0.7, -0.4)])
def test_pairing_matrix_entries(p):
    frame = single_frame(p, GRID)
    A = pairing_matrix(frame)
    for l in range(4):
        for m in range(4):
            assert abs(A.entries[l, m] - symplectic_pair(frame.fields[l], frame.fields[m])) < 1e-12
    assert np.allclose(A.entries @ A.inverse, np.eye(4), atol=1e-12)
    assert A.cond < 1e3


def test_projection():
    p = SolitonParams(1.1, 0.5, 0.3, 0.2)
    frame = single_frame(p, GRID)
    A = pairing_matrix(frame)
    for V in frame.fields:
        assert h1_norm(project(frame, A, V) - V) < 1e-10

    f = _bump(GRID, 0.8, seed=3)
    pf = project(frame, A, f)
    assert h1_norm(project(frame, A, pf) - pf) < 1e-10 * h1_norm(f)
    assert np.max(np.abs(frame.pairings(complement(frame, A, f)))) < 1e-12 * h1_norm(f)


def test_two_soliton_pairing_is_block_diagonal():
    a = 8.0
    grid = Grid.for_separation(a)
    z = ZCoords(1.0, -a, 1.2, a, 0.0, 0.1, 0.5, -0.2)
    A = pairing_matrix(two_soliton_frame(z, grid)).entries
    for j in (1, 2):
        idx = list(ZCoords.SOLITON_INDEX[j])
        single = pairing_matrix(single_frame(z.soliton(j), grid)).entries
        assert np.max(np.abs(A[np.ix_(idx, idx)] - single)) < 1e-12
    cross = A[np.ix_(list(ZCoords.SOLITON_INDEX[1]), list(ZCoords.SOLITON_INDEX[2]))]
    assert np.max(np.abs(cross)) <= 20 * a ** 3 * np.exp(-2 * a)


def test_degenerate_frame():
    phi = REST_PARAMS
    fields = single_frame(phi, GRID).fields
    frame = Frame((fields[0], fields[0], fields[2], fields[2]), ('mu', 'a', 'theta', 'v'))
    with pytest.raises(DegenerateFrameError, match='degenerate frame'):
        pairing_matrix(frame)
    with pytest.raises(ValueError):
        Frame(fields[:3], ('mu', 'a', 'theta'))


def _perturbed_case(a0=5.0, sigma=1, size=1e-3):
    grid = Grid.for_separation(a0)
    z_star = SymmetricState(1.05, a0, 0.2, 0.01, sigma).embed()
    frame = two_soliton_frame(z_star, grid)
    A = pairing_matrix(frame)
    w = complement(frame, A, _bump(grid, a0 + 0.5, seed=1) + _bump(grid, -a0 - 1.0, seed=2))
    w = w * (size / h1_norm(w))
    return z_star, two_soliton(z_star, grid) + w, w


def test_orthogonality_residuals_vanish_on_manifold():
    z_star, u, _ = _perturbed_case()
    assert np.max(np.abs(orthogonality_residuals(two_soliton(z_star, u.grid), z_star))) < 1e-14
    assert np.max(np.abs(orthogonality_residuals(u, z_star))) < 1e-12


def test_decompose_recovers_coordinates():
    z_star, u, w = _perturbed_case()
    guess = ZCoords.from_array(z_star.as_array() + 1e-2 * np.array([1, -1, -1, 1, 1, 1, -1, 1]))
    d = decompose(u, guess)
    assert isinstance(d, Decomposition)
    assert np.max(np.abs(d.z.as_array() - z_star.as_array())) < 1e-8
    assert h1_norm(d.w - w) < 1e-8
    assert np.max(np.abs((two_soliton(d.z, u.grid) + d.w).values - u.values)) < 1e-14
    assert d.history[-1] <= d.history[0]
    row = d.to_row(1.5)
    assert row.shape == (len(Decomposition.CSV_HEADER),)
    assert row[0] == 1.5


def test_decompose_leaves_chart():
    z_star, u, _ = _perturbed_case()
    bad = ZCoords(1.0, -0.5, 1.0, 0.5, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(LeftManifoldError):
        decompose(u, bad)


def test_decompose_converges_quadratically():
    z_star, u, _ = _perturbed_case()
    guess = ZCoords.from_array(z_star.as_array() + 2e-2 * np.array([1, -1, -1, 1, 1, 1, -1, 1]))
    d = decompose(u, guess)
    logger.info('newton history: %s', d.history)
    assert d.iterations <= 6
    steps = [(e0, e1) for e0, e1 in zip(d.history[:-1], d.history[1:]) if e0 >= 1e-6]
    assert steps
    for e0, e1 in steps:
        assert e1 <= 100 * e0 ** 2


def test_decompose_singular_system(monkeypatch):
    z_star, u, _ = _perturbed_case()
    guess = ZCoords.from_array(z_star.as_array() + 1e-2)
    monkeypatch.setattr(symplectic, '_jacobian', lambda u, z_arr, fd_step: np.zeros((8, 8)))
    with pytest.raises(ConvergenceError, match='singular Newton system'):
        decompose(u, guess)


def test_projection_is_real_linear():
    z = SymmetricState(1.1, 6.0, 0.4, 0.05, 0).embed()
    grid = Grid.for_separation(6.0)
    frame = two_soliton_frame(z, grid)
    A = pairing_matrix(frame)
    f, g = _bump(grid, 5.5, seed=4), _bump(grid, -6.5, seed=5)
    combined = f * 0.7 + g * (-1.3)
    for op in (project, complement):
        expected = op(frame, A, f) * 0.7 + op(frame, A, g) * (-1.3)
        assert h1_norm(op(frame, A, combined) - expected) < 1e-12 * h1_norm(combined)


@pytest.mark.parametrize('a0', [5.0, 6.0, 7.0])
def test_transverse_vector_field_is_interaction_sized(a0):
    # the flow leaves the manifold only through the e^{-2 a0} overlap of the tails
    grid = Grid.for_separation(a0)
    z = SymmetricState(1.0, a0, 0.0, 0.0, 1).embed()
    frame = two_soliton_frame(z, grid)
    transverse = complement(frame, pairing_matrix(frame), nls_vector_field(two_soliton(z, grid)))
    h2 = np.exp(-2 * a0)
    size = h1_norm(transverse)
    logger.info('a0=%g: transverse H^1 norm %.3e = %.3f h^2 a0', a0, size, size / (h2 * a0))
    assert 1e-2 * h2 <= size <= 20 * h2 * a0
