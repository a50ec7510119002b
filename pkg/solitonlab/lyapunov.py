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
Localized Weinstein functional W_z, its quadratic remainder L_z above the
(corrected) two-soliton manifold, Poisson brackets with H and the runtime
dL/dt monitor. The single-soliton functional is kept for comparison.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union
from pathlib import Path

import numpy as np

from .consts import CUTOFF_SCALE, MIN_CASE_A0
from .soliton import SolitonParams, ZCoords, dH_dmu, dH_dv, two_soliton
from .spectral import (
    Field,
    Grid,
    derivative,
    h1_norm,
    hamiltonian,
    hamiltonian_gradient,
    hamiltonian_hessian,
    inner,
    mass,
    momentum,
)
from .symplectic import Frame, PairingMatrix, complement
from .utils import write_csv

logger = logging.getLogger(__name__)

FIT_QUANTILE = 0.9
VIOLATION_FACTOR = 10.0
# below this ||w~||_H1 the envelope ratio is round-off over round-off
W_FLOOR = 1e-9


def smooth_step(x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Psi = (1 + sin(pi x / 2)) / 2 on [-1, 1], 0 below and 1 above; with Psi', Psi''"""
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 1
    xc = np.clip(x, -1.0, 1.0)
    psi = 0.5 * (1 + np.sin(0.5 * np.pi * xc))
    dpsi = np.where(inside, 0.25 * np.pi * np.cos(0.5 * np.pi * xc), 0.0)
    ddpsi = np.where(inside, -(np.pi ** 2 / 8) * np.sin(0.5 * np.pi * xc), 0.0)
    return psi, dpsi, ddpsi


@dataclass(frozen=True, eq=False)
class CutoffPair(object):
    grid: Grid
    delta: float
    psi: Tuple[np.ndarray, np.ndarray]
    dpsi: Tuple[np.ndarray, np.ndarray]
    ddpsi: Tuple[np.ndarray, np.ndarray]

    @property
    def psi1(self) -> np.ndarray:
        return self.psi[0]

    @property
    def psi2(self) -> np.ndarray:
        return self.psi[1]

    @property
    def derivative_bound(self) -> float:
        """max over nodes of (psi_j')^2 / min(psi_j, 1 - psi_j)"""
        lower = np.minimum(self.psi2, self.psi1)
        mask = lower > 0
        if not np.any(mask):
            return 0.0
        return float(np.max(self.dpsi[1][mask] ** 2 / lower[mask]))


def make_cutoffs(a0: float, grid: Grid) -> CutoffPair:
    if a0 < MIN_CASE_A0:
        raise ValueError('separation too small: a0=%g < %g' % (a0, MIN_CASE_A0))
    delta = CUTOFF_SCALE / a0
    psi2, dpsi2, ddpsi2 = smooth_step(delta * grid.x)
    dpsi2 = delta * dpsi2
    ddpsi2 = delta ** 2 * ddpsi2
    return CutoffPair(
        grid=grid,
        delta=delta,
        psi=(1.0 - psi2, psi2),
        dpsi=(-dpsi2, dpsi2),
        ddpsi=(-ddpsi2, ddpsi2),
    )


def _local_mass(u: Field, psi: np.ndarray) -> float:
    return 0.5 * u.grid.dx * float(np.sum(psi * u.abs2()))


def _local_momentum(u: Field, psi: np.ndarray) -> float:
    u_x = derivative(u).values
    return 0.5 * u.grid.dx * float(np.sum(psi * np.conj(u.values) * u_x).imag)


def localized_functionals(u: Field, cut: CutoffPair) -> Tuple[float, float, float, float]:
    """(M1, M2, P1, P2) with M_j(u) = M(psi_j^{1/2} u), P_j(u) = P(psi_j^{1/2} u)"""
    return (
        _local_mass(u, cut.psi1),
        _local_mass(u, cut.psi2),
        _local_momentum(u, cut.psi1),
        _local_momentum(u, cut.psi2),
    )


def weight_coefficients(z: ZCoords) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    """((c1, c2), (d1, d2)) with c_j = -dH/dmu(eta_j), d_j = dH/dv(eta_j)"""
    p1, p2 = z.soliton(1), z.soliton(2)
    return (-dH_dmu(p1), -dH_dmu(p2)), (dH_dv(p1), dH_dv(p2))


def W(z: ZCoords, u: Field, cut: CutoffPair) -> float:
    (c1, c2), (d1, d2) = weight_coefficients(z)
    m1, m2, p1, p2 = localized_functionals(u, cut)
    return c1 * m1 + c2 * m2 - d1 * p1 - d2 * p2 + hamiltonian(u)


def _local_momentum_gradient(u: Field, psi: np.ndarray) -> np.ndarray:
    """P_j'(u) = -(i/2) (psi u_x + (psi u)_x)"""
    u_x = derivative(u).values
    psi_u_x = derivative(u.with_values(psi * u.values)).values
    return -0.5j * (psi * u_x + psi_u_x)


def W_prime(z: ZCoords, u: Field, cut: CutoffPair) -> Field:
    (c1, c2), (d1, d2) = weight_coefficients(z)
    values = (
        (c1 * cut.psi1 + c2 * cut.psi2) * u.values
        - d1 * _local_momentum_gradient(u, cut.psi1)
        - d2 * _local_momentum_gradient(u, cut.psi2)
        + hamiltonian_gradient(u).values
    )
    return u.with_values(values)


def L(z: ZCoords, u: Field, cut: CutoffPair, nu: Optional[Field] = None) -> float:
    """L_z(u) = W_z(u) - W_z(u~) - <W_z'(u~), u - u~>, u~ = u_z + nu"""
    u_tilde = two_soliton(z, u.grid)
    if nu is not None:
        u_tilde = u_tilde + nu
    w = u - u_tilde
    return W(z, u, cut) - W(z, u_tilde, cut) - inner(W_prime(z, u_tilde, cut), w)


def quadratic_form(
    z: ZCoords, w: Field, cut: CutoffPair, u: Optional[Field] = None
) -> float:
    """<W_z''(u) w, w>, at u = u_z unless a base point is given"""
    if u is None:
        u = two_soliton(z, w.grid)
    (c1, c2), (d1, d2) = weight_coefficients(z)
    m1, m2, p1, p2 = localized_functionals(w, cut)
    # M_j and P_j are quadratic: <M_j'' w, w> = 2 M_j(w)
    local = 2 * (c1 * m1 + c2 * m2 - d1 * p1 - d2 * p2)
    return local + inner(hamiltonian_hessian(u, w), w)


def poisson_brackets(u: Field, cut: CutoffPair) -> Tuple[float, float, float, float]:
    """({H, M1}, {H, M2}, {H, P1}, {H, P2})"""
    dx = u.grid.dx
    u_x = derivative(u).values
    ubar_ux = np.conj(u.values) * u_x
    density = 0.5 * np.abs(u_x) ** 2 - 0.25 * u.abs2() ** 2
    hm = [0.5 * dx * float(np.sum(d * ubar_ux).imag) for d in cut.dpsi]
    hp = [
        dx * float(np.sum(d * density)) + 0.25 * dx * float(np.sum(dd * ubar_ux.real))
        for d, dd in zip(cut.dpsi, cut.ddpsi)
    ]
    return hm[0], hm[1], hp[0], hp[1]


def bracket_drift_check(
    times: Sequence[float], fields: Sequence[Field], cut: CutoffPair
) -> Dict[str, float]:
    """
    Compare d/dt of M_j, P_j along sampled fields (centred differences) with
    the brackets {H, M_j}, {H, P_j}; returns the largest discrepancies.
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise ValueError('need at least 3 samples for the bracket drift check')
    local = np.array([localized_functionals(u, cut) for u in fields])
    brackets = np.array([poisson_brackets(u, cut) for u in fields])
    rates = np.gradient(local, times, axis=0)
    # one-sided differences at the ends are only first order
    err = np.abs(rates[1:-1] - brackets[1:-1])
    return {
        'mass': float(np.max(err[:, :2])),
        'momentum': float(np.max(err[:, 2:])),
        'scale': float(np.max(np.abs(brackets))),
    }


def classical_W(p: SolitonParams, u: Field) -> float:
    return -dH_dmu(p) * mass(u) - dH_dv(p) * momentum(u) + hamiltonian(u)


def classical_W_prime(p: SolitonParams, u: Field) -> Field:
    u_x = derivative(u).values
    values = -dH_dmu(p) * u.values - dH_dv(p) * (-1j * u_x) + hamiltonian_gradient(u).values
    return u.with_values(values)


def classical_quadratic_form(p: SolitonParams, w: Field, u: Field) -> float:
    """<W''(u) w, w> of the single-soliton functional"""
    return (
        2 * (-dH_dmu(p) * mass(w) - dH_dv(p) * momentum(w))
        + inner(hamiltonian_hessian(u, w), w)
    )


def coercivity_ratio(q: float, w: Field) -> float:
    return q / h1_norm(w) ** 2


def random_orthogonal_perturbation(
    frame: Frame,
    A: PairingMatrix,
    rng: Union[np.random.Generator, int],
    centers: Sequence[float] = (0.0,),
    h1: float = 1e-3,
    n_bumps: int = 6,
) -> Field:
    """
    A smooth decaying random field, symplectically orthogonal to ``frame``,
    scaled to the requested H^1 norm.
    """
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    grid = frame.grid
    x = grid.x
    values = np.zeros(grid.n, dtype=complex)
    for _ in range(n_bumps):
        center = rng.choice(np.asarray(centers, dtype=float)) + rng.normal(scale=1.0)
        width = rng.uniform(0.5, 2.0)
        amp = rng.normal() + 1j * rng.normal()
        freq = rng.normal(scale=0.5)
        values += amp * np.exp(-(((x - center) / width) ** 2) + 1j * freq * x)
    w = complement(frame, A, Field(grid, values))
    return w * (h1 / h1_norm(w))


@dataclass
class MonitorReport(object):
    times: np.ndarray
    L: np.ndarray
    dL_dt: np.ndarray
    w_norm: np.ndarray
    bound_rhs: np.ndarray
    coercivity_ratio: np.ndarray
    fitted_constant: float
    violations: List[int] = field(default_factory=list)

    HEADER = ('t', 'L', 'dL_dt', 'w_h1', 'bound_rhs', 'coercivity_ratio')

    @property
    def violation_fraction(self) -> float:
        return len(self.violations) / max(len(self.times), 1)

    def rows(self) -> np.ndarray:
        return np.column_stack(
            [self.times, self.L, self.dL_dt, self.w_norm, self.bound_rhs, self.coercivity_ratio]
        )

    def save(self, fp: Union[str, Path]):
        write_csv(fp, self.HEADER, self.rows())

    def summary(self) -> Dict:
        return {
            'fitted_constant': self.fitted_constant,
            'violations': len(self.violations),
            'violation_fraction': self.violation_fraction,
            'max_L': float(np.max(np.abs(self.L))) if len(self.L) else 0.0,
        }


class LyapunovMonitor(object):
    """Accumulates L_z(u(t)) along a run; ``report`` fits the growth envelope."""

    def __init__(self, cut: CutoffPair, h: float):
        self.cut = cut
        self.h = h
        self._times = []
        self._L = []
        self._w = []

    def add(self, t: float, z: ZCoords, u: Field, nu: Optional[Field] = None):
        u_tilde = two_soliton(z, u.grid)
        if nu is not None:
            u_tilde = u_tilde + nu
        self._times.append(t)
        self._L.append(L(z, u, self.cut, nu))
        self._w.append(h1_norm(u - u_tilde))

    def report(self) -> MonitorReport:
        times = np.asarray(self._times, dtype=float)
        values = np.asarray(self._L, dtype=float)
        w = np.asarray(self._w, dtype=float)
        if len(times) >= 2:
            rate = np.gradient(values, times)
        else:
            rate = np.zeros_like(values)
        h = self.h
        bound = h * w ** 2 + h ** 3 * w + w ** 3
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(w > 0, 2 * values / w ** 2, np.nan)
            envelope = np.where(w > W_FLOOR, np.abs(rate) / bound, np.nan)
        finite = envelope[np.isfinite(envelope)]
        fitted = float(np.quantile(finite, FIT_QUANTILE)) if finite.size else 0.0
        violations = [int(i) for i in np.nonzero(envelope > VIOLATION_FACTOR * fitted)[0]] if fitted > 0 else []
        if violations:
            logger.warning(
                '%d of %d samples exceed %g x the fitted dL/dt envelope %.3e',
                len(violations),
                len(times),
                VIOLATION_FACTOR,
                fitted,
            )
        return MonitorReport(
            times=times,
            L=values,
            dL_dt=rate,
            w_norm=w,
            bound_rhs=bound,
            coercivity_ratio=ratio,
            fitted_constant=fitted,
            violations=violations,
        )


def monitor(
    times: Sequence[float],
    fields: Sequence[Field],
    zs: Sequence[ZCoords],
    cut: CutoffPair,
    h: float,
    nus: Optional[Sequence[Optional[Field]]] = None,
) -> MonitorReport:
    mon = LyapunovMonitor(cut, h)
    nus = nus if nus is not None else [None] * len(times)
    for t, u, z, nu in zip(times, fields, zs, nus):
        mon.add(t, z, u, nu)
    return mon.report()
