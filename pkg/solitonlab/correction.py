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
Correction of the two-soliton ansatz: the reference operator

    S rho = 1/2 rho - 1/2 rho_xx - 2 phi^2 rho - phi^2 conj(rho),  phi = sech,

its inversion off the kernel span{i phi, phi'}, the pulled-back sources f_j,
the profiles rho^1, rho^2 and the assembled field nu_z.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import fft as sp_fft
from scipy import linalg

from .consts import (
    CORRECTION_FD_STEP,
    DECAY_WEIGHT,
    KERNEL_FAIL_TOL,
    KERNEL_WARN_TOL,
    MIN_SEPARATION,
    RESIDUAL_FD_STEP,
    RESIDUAL_KMAX,
    SOLVE_DEFECT_TOL,
)
from .dynamics import embed_rates, rhs_reduced
from .soliton import (
    REST_PARAMS,
    SymmetricState,
    ZCoords,
    group_apply,
    sech,
    two_soliton,
)
from .spectral import Field, Grid, apply_j, apply_j_inv, derivative, h1_norm, nls_vector_field
from .symplectic import complement, pairing_matrix, single_frame
from .utils import IllPosedSourceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ReferenceProfile(Field):
    """A profile on the reference grid centred at the standing soliton."""

    def _weight(self, weight: float) -> np.ndarray:
        return np.exp(weight * np.sqrt(1.0 + self.x ** 2))

    def decay_norm(self, weight: float = DECAY_WEIGHT) -> float:
        """||e^{weight <x>} rho||_{L^2}"""
        weighted = self._weight(weight) * self.values
        return math.sqrt(self.grid.dx * float(np.sum(np.abs(weighted) ** 2)))

    def decay_h2_norm(self, weight: float = DECAY_WEIGHT) -> float:
        weighted = self._weight(weight) * self.values
        grid = self.grid
        power = np.abs(sp_fft.fft(weighted)) ** 2
        return math.sqrt(grid.length / grid.n ** 2 * float(np.sum((1 + grid.k ** 2) ** 2 * power)))


@dataclass(frozen=True, eq=False)
class SourceTerm(object):
    values: ReferenceProfile
    omegas: Tuple[float, float, float, float]
    j: int


def s_apply(rho: Field) -> ReferenceProfile:
    phi2 = sech(rho.x) ** 2
    values = (
        0.5 * rho.values
        - 0.5 * derivative(rho, 2).values
        - 2 * phi2 * rho.values
        - phi2 * np.conj(rho.values)
    )
    return ReferenceProfile(rho.grid, values)


def second_derivative_matrix(grid: Grid) -> np.ndarray:
    spectral = -(grid.k ** 2)[:, None] * sp_fft.fft(np.eye(grid.n), axis=0)
    d2 = sp_fft.ifft(spectral, axis=0).real
    return 0.5 * (d2 + d2.T)


class ReferenceOperator(object):
    """
    S splits into real blocks, S(p + i q) = L_+ p + i L_- q with
    L_+ = 1/2 - 1/2 d_xx - 3 phi^2 and L_- = 1/2 - 1/2 d_xx - phi^2.
    Each block is diagonalised once; the eigenvector closest to zero spans
    its kernel (phi' for L_+, phi for L_-).
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        phi2 = sech(grid.x) ** 2
        base = 0.5 * np.eye(grid.n) - 0.5 * second_derivative_matrix(grid)
        self.l_plus = base - 3 * np.diag(phi2)
        self.l_minus = base - np.diag(phi2)
        self.eig_plus, self.vec_plus = linalg.eigh(self.l_plus)
        self.eig_minus, self.vec_minus = linalg.eigh(self.l_minus)
        self.kernel_plus = int(np.argmin(np.abs(self.eig_plus)))
        self.kernel_minus = int(np.argmin(np.abs(self.eig_minus)))
        logger.debug(
            'reference operator on n=%d, L=%g: kernel eigenvalues %.3e, %.3e',
            grid.n,
            grid.length,
            self.eig_plus[self.kernel_plus],
            self.eig_minus[self.kernel_minus],
        )

    @property
    def kernel(self) -> Tuple[np.ndarray, np.ndarray]:
        """unit kernel vectors of L_+ and L_-"""
        return self.vec_plus[:, self.kernel_plus], self.vec_minus[:, self.kernel_minus]

    @staticmethod
    def _pinv_apply(eig, vec, kernel_idx, rhs):
        coeffs = vec.T @ rhs
        inv = np.zeros_like(eig)
        mask = np.arange(len(eig)) != kernel_idx
        inv[mask] = 1.0 / eig[mask]
        return vec @ (inv * coeffs)

    def solve(self, p: np.ndarray, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return (
            self._pinv_apply(self.eig_plus, self.vec_plus, self.kernel_plus, p),
            self._pinv_apply(self.eig_minus, self.vec_minus, self.kernel_minus, q),
        )


@lru_cache(maxsize=4)
def reference_operator(grid: Grid) -> ReferenceOperator:
    return ReferenceOperator(grid)


def s_solve(F: Field) -> ReferenceProfile:
    """Minimum-norm solution of S rho = F with rho orthogonal to ker S."""
    norm = float(np.linalg.norm(F.values))
    if norm == 0.0:
        return ReferenceProfile(F.grid, np.zeros(F.grid.n, dtype=complex))
    op = reference_operator(F.grid)
    k_plus, k_minus = op.kernel
    p, q = F.values.real.copy(), F.values.imag.copy()
    c_plus, c_minus = float(k_plus @ p), float(k_minus @ q)
    kernel_part = math.hypot(c_plus, c_minus) / norm
    if kernel_part > KERNEL_FAIL_TOL:
        raise IllPosedSourceError(
            'ill-posed source: kernel component is %.3e of the source norm' % kernel_part
        )
    if kernel_part > KERNEL_WARN_TOL:
        logger.warning('source has kernel component %.3e; projecting it out', kernel_part)
    p -= c_plus * k_plus
    q -= c_minus * k_minus

    rho_p, rho_q = op.solve(p, q)
    rho = ReferenceProfile(F.grid, rho_p + 1j * rho_q)
    target = p + 1j * q
    defect = float(np.linalg.norm(s_apply(rho).values - target)) / max(
        float(np.linalg.norm(target)), np.finfo(float).tiny
    )
    if defect > SOLVE_DEFECT_TOL:
        logger.warning('S solve defect %.3e exceeds %.1e', defect, SOLVE_DEFECT_TOL)
    return rho


def source_omegas(z: ZCoords, j: int) -> Tuple[float, float, float, float]:
    pj, pk = z.soliton(j), z.soliton(3 - j)
    w1 = pj.theta - pk.theta - pk.v * (pj.a - pk.a) / pk.mu
    w2 = pj.v / pj.mu ** 2 - pk.v / (pj.mu * pk.mu)
    return w1, w2, -w1, -w2


def source_values(z: ZCoords, j: int, y: np.ndarray) -> np.ndarray:
    """
    f_j = g_j^{-1}[(g_j phi)^2 conj(g_k phi)] + 2 g_j^{-1}[|g_j phi|^2 g_k phi]
    evaluated in closed form at the reference points y.
    """
    pj, pk = z.soliton(j), z.soliton(3 - j)
    w1, w2, w3, w4 = source_omegas(z, j)
    envelope = pj.mu * pk.mu * sech(y) ** 2 * sech(pk.mu * y / pj.mu + pk.mu * (pj.a - pk.a))
    return envelope * (np.exp(1j * (w1 + w2 * y)) + 2 * np.exp(1j * (w3 + w4 * y)))


def build_source(z: ZCoords, j: int, grid: Optional[Grid] = None) -> SourceTerm:
    if z.separation < MIN_SEPARATION:
        raise ValueError('separation too small: |a2 - a1| = %g' % z.separation)
    grid = grid or Grid.reference()
    values = ReferenceProfile(grid, source_values(z, j, grid.x))
    logger.debug(
        'source %d: decay norm %.3e, e^{-|a2-a1|} = %.3e',
        j,
        values.decay_norm(),
        math.exp(-z.separation),
    )
    return SourceTerm(values=values, omegas=source_omegas(z, j), j=j)


def symmetric_rates(z: ZCoords) -> np.ndarray:
    """
    eight-component rate of a symmetric z along the reduced law; its a' keeps
    the a h^2 v terms, which the corrected residual resolves
    """
    return embed_rates(rhs_reduced(SymmetricState.from_z(z)))


def source_rate(
    z: ZCoords, j: int, zdot: Optional[Sequence[float]] = None, grid: Optional[Grid] = None
) -> ReferenceProfile:
    """d/dt f_j along z' by a central difference in the direction of z'"""
    grid = grid or Grid.reference()
    rates = np.array(symmetric_rates(z) if zdot is None else zdot, dtype=float)
    # f_j only sees theta_1 - theta_2
    common = 0.5 * (rates[4] + rates[6])
    rates[4] -= common
    rates[6] -= common
    speed = float(np.linalg.norm(rates))
    if speed == 0.0:
        return ReferenceProfile(grid, np.zeros(grid.n, dtype=complex))
    direction = rates / speed
    step = CORRECTION_FD_STEP
    base = z.as_array()
    plus = source_values(ZCoords.from_array(base + step * direction), j, grid.x)
    minus = source_values(ZCoords.from_array(base - step * direction), j, grid.x)
    return ReferenceProfile(grid, speed * (plus - minus) / (2 * step))


def _orthogonal_source(f: Field) -> Field:
    """J^{-1} Pi^perp J f with the rest-soliton frame"""
    frame = single_frame(REST_PARAMS, f.grid)
    A = pairing_matrix(frame)
    return apply_j_inv(complement(frame, A, apply_j(f)))


def build_rho(
    z: ZCoords, j: int, zdot: Optional[Sequence[float]] = None, grid: Optional[Grid] = None
) -> Tuple[ReferenceProfile, ReferenceProfile]:
    """
    rho^1 = S^{-1} J^{-1} Pi^perp J f_j and
    rho^2 = S^{-1} [mu_j^{-2} J^{-1} S^{-1} J^{-1} Pi^perp J d_t f_j].
    """
    grid = grid or Grid.reference()
    mu_j = z.soliton(j).mu
    f = build_source(z, j, grid).values
    rho1 = s_solve(_orthogonal_source(f))
    f_t = source_rate(z, j, zdot, grid)
    inner = s_solve(_orthogonal_source(f_t))
    rho2 = s_solve(apply_j_inv(inner) / mu_j ** 2)
    return rho1, rho2


def build_correction(
    z: ZCoords,
    grid: Grid,
    zdot: Optional[Sequence[float]] = None,
    ref_grid: Optional[Grid] = None,
) -> Field:
    """nu_z = sum_j mu_j^{-2} g_j (rho_j^1 + rho_j^2) on the simulation grid"""
    ref_grid = ref_grid or Grid.reference()
    nu = grid.zeros()
    for j in (1, 2):
        rho1, rho2 = build_rho(z, j, zdot, ref_grid)
        p = z.soliton(j)
        nu = nu + group_apply(p, rho1 + rho2, grid) / p.mu ** 2
    return nu


def corrected_two_soliton(
    z: ZCoords, grid: Grid, correction: bool = True, ref_grid: Optional[Grid] = None
) -> Field:
    """u~_z = u_z + nu_z (nu_z = 0 without correction)"""
    u = two_soliton(z, grid)
    if correction:
        u = u + build_correction(z, grid, ref_grid=ref_grid)
    return u


def residual(
    z: ZCoords,
    zdot: Sequence[float],
    grid: Optional[Grid] = None,
    correction: bool = True,
    kmax: Optional[float] = RESIDUAL_KMAX,
    fd_step: float = RESIDUAL_FD_STEP,
    ref_grid: Optional[Grid] = None,
) -> float:
    """
    ||sum_l z'_l d_l u~_z - J H'(u~_z)||_{H^1}, restricted to |k| <= kmax.
    The common phase rate multiplies i u~_z exactly; the remaining
    directions are differentiated along z' with a four-point stencil.
    """
    if grid is None:
        grid = Grid.for_separation(0.5 * z.separation)
    zdot = np.asarray(zdot, dtype=float)
    base = z.as_array()

    def u_tilde(arr):
        return corrected_two_soliton(ZCoords.from_array(arr), grid, correction, ref_grid)

    u = u_tilde(base)
    omega = 0.5 * (zdot[4] + zdot[6])
    rates = zdot.copy()
    rates[4] -= omega
    rates[6] -= omega
    tangent = u * (1j * omega)
    speed = float(np.linalg.norm(rates))
    if speed > 0.0:
        d = rates / speed
        s = fd_step
        stencil = (
            -u_tilde(base + 2 * s * d)
            + u_tilde(base + s * d) * 8
            - u_tilde(base - s * d) * 8
            + u_tilde(base - 2 * s * d)
        )
        tangent = tangent + stencil * (speed / (12 * s))
    return h1_norm(tangent - nls_vector_field(u), kmax=kmax)
