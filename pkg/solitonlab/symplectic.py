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
Symplectic pairing matrix of a tangent frame, the symplectic projection onto
the frame and the modulation decomposition u = u_z + w.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .consts import MIN_SEPARATION, NEWTON_DEFAULTS
from .soliton import (
    SolitonParams,
    ZCoords,
    tangent_frame,
    two_soliton,
    two_soliton_tangents,
)
from .spectral import Field, Grid, h1_norm, l2_norm
from .utils import ConvergenceError, DegenerateFrameError, LeftManifoldError

logger = logging.getLogger(__name__)

MAX_COND = 1e8
NEWTON_BASIN = 0.2
SINGLE_LABELS = ('mu', 'a', 'theta', 'v')


@dataclass(frozen=True, eq=False)
class Frame(object):
    fields: Tuple[Field, ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        fields_ = tuple(self.fields)
        if len(fields_) not in (4, 8):
            raise ValueError('a frame has 4 or 8 fields, got %d' % len(fields_))
        if len(self.labels) != len(fields_):
            raise ValueError('need one label per frame field')
        grid = fields_[0].grid
        if any(f.grid != grid for f in fields_):
            raise ValueError('frame fields live on different grids')
        object.__setattr__(self, 'fields', fields_)
        object.__setattr__(self, 'labels', tuple(self.labels))

    @property
    def grid(self) -> Grid:
        return self.fields[0].grid

    @property
    def k(self) -> int:
        return len(self.fields)

    @property
    def matrix(self) -> np.ndarray:
        """k x n complex matrix, one frame field per row"""
        return np.stack([f.values for f in self.fields])

    def pairings(self, f: Field) -> np.ndarray:
        """omega(f, V_l) = <f, J^{-1} V_l> for every frame field"""
        if f.grid != self.grid:
            raise ValueError('field and frame live on different grids')
        return self.grid.dx * (np.conj(self.matrix) @ f.values).imag


@dataclass(frozen=True, eq=False)
class PairingMatrix(object):
    entries: np.ndarray
    inverse: np.ndarray
    cond: float


def single_frame(p: SolitonParams, grid: Grid) -> Frame:
    return Frame(tuple(tangent_frame(p, grid)), SINGLE_LABELS)


def two_soliton_frame(z: ZCoords, grid: Grid) -> Frame:
    return Frame(tuple(two_soliton_tangents(z, grid)), ZCoords.FIELDS)


def pairing_matrix(frame: Frame) -> PairingMatrix:
    V = frame.matrix
    A = frame.grid.dx * (V @ np.conj(V).T).imag
    A = 0.5 * (A - A.T)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > MAX_COND:
        raise DegenerateFrameError('degenerate frame: cond(A) = %.3e' % cond)
    return PairingMatrix(entries=A, inverse=linalg.inv(A), cond=cond)


def project(frame: Frame, A: PairingMatrix, f: Field) -> Field:
    """
    Symplectic projection onto span(frame): the result is sum_m d_m V_m with
    omega(f - sum_m d_m V_m, V_l) = 0 for every l.
    """
    c = frame.pairings(f)
    d = A.inverse.T @ c
    return Field(frame.grid, d @ frame.matrix)


def complement(frame: Frame, A: PairingMatrix, f: Field) -> Field:
    return f - project(frame, A, f)


@dataclass(frozen=True, eq=False)
class Decomposition(object):
    z: ZCoords
    w: Field
    residuals: np.ndarray
    iterations: int
    history: List[float] = field(default_factory=list)

    CSV_HEADER = ('t',) + ZCoords.FIELDS + ('w_l2', 'w_h1', 'max_residual', 'iterations')

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals)))

    def to_row(self, t: float) -> np.ndarray:
        return np.concatenate(
            [
                [t],
                self.z.as_array(),
                [l2_norm(self.w), h1_norm(self.w), self.max_residual, self.iterations],
            ]
        )


def orthogonality_residuals(u: Field, z: ZCoords) -> np.ndarray:
    """G_l(z) = <u - u_z, J^{-1} d_l u_z>"""
    frame = two_soliton_frame(z, u.grid)
    return frame.pairings(u - two_soliton(z, u.grid))


def _check_chart(z_arr: np.ndarray):
    if z_arr[0] <= 0 or z_arr[2] <= 0:
        raise LeftManifoldError('left manifold: non-positive scale mu = (%g, %g)' % (z_arr[0], z_arr[2]))
    if abs(z_arr[3] - z_arr[1]) < MIN_SEPARATION:
        raise LeftManifoldError(
            'left manifold: solitons overlap, |a2 - a1| = %g' % abs(z_arr[3] - z_arr[1])
        )
    if not np.all(np.isfinite(z_arr)):
        raise LeftManifoldError('left manifold: non-finite coordinates')


def _jacobian(u: Field, z_arr: np.ndarray, fd_step: float) -> np.ndarray:
    jac = np.empty((8, 8))
    for m in range(8):
        step = fd_step * max(1.0, abs(z_arr[m]))
        plus, minus = z_arr.copy(), z_arr.copy()
        plus[m] += step
        minus[m] -= step
        jac[:, m] = (
            orthogonality_residuals(u, ZCoords.from_array(plus))
            - orthogonality_residuals(u, ZCoords.from_array(minus))
        ) / (2 * step)
    return jac


def decompose(
    u: Field,
    z_guess: ZCoords,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
    fd_step: Optional[float] = None,
) -> Decomposition:
    """
    Newton solve of the eight orthogonality conditions
    <u - u_z, J^{-1} d_l u_z> = 0, starting from ``z_guess``.
    """
    max_iter = max_iter or NEWTON_DEFAULTS['max_iter']
    tol = tol or NEWTON_DEFAULTS['tol']
    fd_step = fd_step or NEWTON_DEFAULTS['fd_step']

    z_arr = z_guess.as_array()
    _check_chart(z_arr)
    threshold = tol * h1_norm(u)
    distance = h1_norm(u - two_soliton(z_guess, u.grid))
    if distance > NEWTON_BASIN * max(1.0, h1_norm(u)):
        logger.warning('initial guess is %.3e away from u in H^1; Newton may fail', distance)

    history = []
    for it in range(max_iter + 1):
        z = ZCoords.from_array(z_arr)
        residuals = orthogonality_residuals(u, z)
        err = float(np.max(np.abs(residuals)))
        history.append(err)
        logger.debug('newton iter %d: max residual %.3e', it, err)
        if err <= threshold:
            w = u - two_soliton(z, u.grid)
            return Decomposition(z=z, w=w, residuals=residuals, iterations=it, history=history)
        if it == max_iter:
            break
        jac = _jacobian(u, z_arr, fd_step)
        try:
            delta = linalg.lu_solve(linalg.lu_factor(jac), -residuals)
        except (linalg.LinAlgError, ValueError) as e:
            raise ConvergenceError('no convergence: singular Newton system (%s)' % e)
        if not np.all(np.isfinite(delta)):
            raise ConvergenceError('no convergence: singular Newton system at iteration %d' % it)
        z_arr = z_arr + delta
        _check_chart(z_arr)

    raise ConvergenceError(
        'no convergence: max residual %.3e after %d iterations (threshold %.3e)'
        % (history[-1], max_iter, threshold)
    )
