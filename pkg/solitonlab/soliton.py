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
The sech soliton family

    eta(x; mu, a, theta, v) = e^{i theta} e^{i v (x - a) / mu} mu sech(mu (x - a)),

its parameter group, tangent frames and the two-soliton superpositions.
"""

import logging
import math
from dataclasses import astuple, dataclass, fields
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from .consts import MIN_CASE_A0
from .spectral import (
    Field,
    Grid,
    fourier_resample,
    h1_norm,
    high_frequency_fraction,
    nls_vector_field,
)

logger = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-14
BANDWIDTH_TOL = 1e-12

Profile = Union[Field, Callable[[np.ndarray], np.ndarray]]


def sech(x):
    """overflow-free sech"""
    ax = np.abs(np.asarray(x, dtype=float))
    e = np.exp(-ax)
    return 2.0 * e / (1.0 + e * e)


def sech_prime(x):
    x = np.asarray(x, dtype=float)
    return -sech(x) * np.tanh(x)


@dataclass(frozen=True)
class SolitonParams(object):
    mu: float
    a: float
    theta: float
    v: float

    def __post_init__(self):
        for f in fields(self):
            val = float(getattr(self, f.name))
            if not math.isfinite(val):
                raise ValueError('soliton parameter %s is not finite' % f.name)
            object.__setattr__(self, f.name, val)
        if self.mu <= 0:
            raise ValueError('soliton scale mu must be positive, got %s' % self.mu)

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def to_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d) -> 'SolitonParams':
        return cls(d['mu'], d['a'], d['theta'], d['v'])


REST_PARAMS = SolitonParams(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class ZCoords(object):
    mu1: float
    a1: float
    mu2: float
    a2: float
    theta1: float
    v1: float
    theta2: float
    v2: float

    FIELDS = ('mu1', 'a1', 'mu2', 'a2', 'theta1', 'v1', 'theta2', 'v2')
    # positions of (mu, a, theta, v) of soliton j inside the 8-vector
    SOLITON_INDEX = {1: (0, 1, 4, 5), 2: (2, 3, 6, 7)}

    def __post_init__(self):
        for name in self.FIELDS:
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError('coordinate %s is not finite' % name)
            object.__setattr__(self, name, val)
        if self.mu1 <= 0 or self.mu2 <= 0:
            raise ValueError('soliton scales must be positive: %s, %s' % (self.mu1, self.mu2))

    @classmethod
    def from_array(cls, arr) -> 'ZCoords':
        arr = np.asarray(arr, dtype=float)
        if arr.shape != (8,):
            raise ValueError('expected 8 coordinates, got shape %s' % (arr.shape,))
        return cls(*arr)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in self.FIELDS], dtype=float)

    def to_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in self.FIELDS}

    @classmethod
    def from_dict(cls, d) -> 'ZCoords':
        return cls(*[d[name] for name in cls.FIELDS])

    def soliton(self, j: int) -> SolitonParams:
        idx = self.SOLITON_INDEX[j]
        arr = self.as_array()
        return SolitonParams(*arr[list(idx)])

    @classmethod
    def from_solitons(cls, p1: SolitonParams, p2: SolitonParams) -> 'ZCoords':
        arr = np.zeros(8)
        arr[list(cls.SOLITON_INDEX[1])] = p1.as_array()
        arr[list(cls.SOLITON_INDEX[2])] = p2.as_array()
        return cls.from_array(arr)

    @property
    def separation(self) -> float:
        return abs(self.a2 - self.a1)


@dataclass(frozen=True)
class SymmetricState(object):
    """
    Reduced state of an even (sigma = 0) or odd (sigma = 1) two-soliton
    configuration: the right soliton carries (mu, a, theta, v).
    """

    mu: float
    a: float
    theta: float
    v: float
    sigma: int
    a0: Optional[float] = None

    def __post_init__(self):
        if self.sigma not in (0, 1):
            raise ValueError('sigma must be 0 or 1, got %s' % self.sigma)
        if self.mu <= 0:
            raise ValueError('mu must be positive, got %s' % self.mu)
        if self.a <= 0:
            raise ValueError('half separation a must be positive, got %s' % self.a)

    @property
    def sign(self) -> int:
        return -1 if self.sigma == 1 else 1

    @property
    def h(self) -> float:
        a0 = self.a if self.a0 is None else self.a0
        return math.exp(-a0)

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.a, self.theta, self.v], dtype=float)

    @classmethod
    def from_array(cls, arr, sigma: int, a0: Optional[float] = None) -> 'SymmetricState':
        mu, a, theta, v = (float(val) for val in arr)
        return cls(mu, a, theta, v, sigma, a0)

    def embed(self) -> ZCoords:
        return ZCoords(
            self.mu,
            -self.a,
            self.mu,
            self.a,
            self.theta + self.sigma * math.pi,
            -self.v,
            self.theta,
            self.v,
        )

    @classmethod
    def from_z(cls, z: ZCoords, a0: Optional[float] = None, tol: float = 1e-8) -> 'SymmetricState':
        scale = max(1.0, abs(z.a2))
        if (
            abs(z.mu1 - z.mu2) > tol
            or abs(z.a1 + z.a2) > tol * scale
            or abs(z.v1 + z.v2) > tol
        ):
            raise ValueError('coordinates are not symmetric: %s' % (z,))
        sigma = int(round((z.theta1 - z.theta2) / math.pi)) % 2
        return cls(z.mu2, z.a2, z.theta2, z.v2, sigma, a0)


def soliton_values(p: SolitonParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * (p.theta + p.v * (x - p.a) / p.mu))
    return phase * p.mu * sech(p.mu * (x - p.a))


def eval_soliton(p: SolitonParams, grid: Grid) -> Field:
    values = soliton_values(p, grid.x)
    edge = max(abs(values[0]), abs(values[-1]))
    if edge > BOUNDARY_TOL * p.mu:
        logger.warning(
            'soliton at a=%g has boundary amplitude %.3e on a grid of length %g',
            p.a,
            edge,
            grid.length,
        )
    return Field(grid, values)


def free_flow(p0: SolitonParams, t: float) -> SolitonParams:
    mu, a, theta, v = p0.mu, p0.a, p0.theta, p0.v
    return SolitonParams(
        mu, a + t * v / mu, theta + 0.5 * t * (mu ** 2 + v ** 2 / mu ** 2), v
    )


def tangent_values(p: SolitonParams, x) -> List[np.ndarray]:
    """(d_mu eta, d_a eta, d_theta eta, d_v eta) at the points x"""
    x = np.asarray(x, dtype=float)
    mu, a, v = p.mu, p.a, p.v
    s = x - a
    y = mu * s
    phase = np.exp(1j * (p.theta + v * s / mu))
    phi = sech(y)
    dphi = sech_prime(y)
    eta = phase * mu * phi
    d_mu = phase * (phi + y * dphi - 1j * v * s * phi / mu)
    d_a = phase * (-1j * v * phi - mu ** 2 * dphi)
    d_theta = 1j * eta
    d_v = 1j * s * eta / mu
    return [d_mu, d_a, d_theta, d_v]


def tangent_frame(p: SolitonParams, grid: Grid) -> List[Field]:
    return [Field(grid, vals) for vals in tangent_values(p, grid.x)]


def two_soliton(z: ZCoords, grid: Grid) -> Field:
    return eval_soliton(z.soliton(1), grid) + eval_soliton(z.soliton(2), grid)


def two_soliton_tangents(z: ZCoords, grid: Grid) -> List[Field]:
    """tangent fields in the order of ZCoords.FIELDS"""
    left = tangent_frame(z.soliton(1), grid)
    right = tangent_frame(z.soliton(2), grid)
    return [left[0], left[1], right[0], right[1], left[2], left[3], right[2], right[3]]


def _profile_values(rho: Profile, y: np.ndarray) -> np.ndarray:
    if isinstance(rho, Field):
        return fourier_resample(rho, y)
    return np.asarray(rho(y), dtype=complex)


def _check_bandwidth(rho: Profile, scale: float, target: Grid):
    """warn if the rescaled profile carries energy above the target Nyquist"""
    if not isinstance(rho, Field):
        return
    frac = high_frequency_fraction(rho, target.k_max / scale)
    if frac > BANDWIDTH_TOL:
        logger.warning(
            'resampling loses %.3e of the spectral energy (scale %g, target dx %g)',
            frac,
            scale,
            target.dx,
        )


def group_apply(p: SolitonParams, rho: Profile, grid: Optional[Grid] = None) -> Field:
    """(g rho)(x) = e^{i theta} e^{i v (x - a) / mu} mu rho(mu (x - a))"""
    if grid is None:
        if not isinstance(rho, Field):
            raise ValueError('a target grid is required for callable profiles')
        grid = rho.grid
    _check_bandwidth(rho, p.mu, grid)
    s = grid.x - p.a
    phase = np.exp(1j * (p.theta + p.v * s / p.mu))
    return Field(grid, phase * p.mu * _profile_values(rho, p.mu * s))


def group_inverse(p: SolitonParams, F: Profile, grid: Optional[Grid] = None) -> Field:
    """(g^{-1} F)(y) = e^{-i theta} e^{-i v y / mu^2} mu^{-1} F(y / mu + a)"""
    if grid is None:
        if not isinstance(F, Field):
            raise ValueError('a target grid is required for callable profiles')
        grid = F.grid
    _check_bandwidth(F, 1.0 / p.mu, grid)
    y = grid.x
    phase = np.exp(-1j * (p.theta + p.v * y / p.mu ** 2))
    return Field(grid, phase * _profile_values(F, y / p.mu + p.a) / p.mu)


def group_adjoint(p: SolitonParams, F: Profile, grid: Optional[Grid] = None) -> Field:
    """g^* = mu g^{-1}"""
    return group_inverse(p, F, grid) * p.mu


def case_initial_data(a0: float, sigma: int, grid: Grid) -> Field:
    if a0 < MIN_CASE_A0:
        raise ValueError('separation too small: a0=%g < %g' % (a0, MIN_CASE_A0))
    if sigma not in (0, 1):
        raise ValueError('sigma must be 0 or 1, got %s' % sigma)
    sign = -1.0 if sigma == 1 else 1.0
    x = grid.x
    return Field(grid, sign * sech(x + a0) + sech(x - a0))


def restricted_hamiltonian(p: SolitonParams) -> float:
    """H(eta) = v^2 / (2 mu) - mu^3 / 6"""
    return 0.5 * p.v ** 2 / p.mu - p.mu ** 3 / 6.0


def dH_dmu(p: SolitonParams) -> float:
    return -0.5 * p.v ** 2 / p.mu ** 2 - 0.5 * p.mu ** 2


def dH_dv(p: SolitonParams) -> float:
    return p.v / p.mu


def vector_field_defect(p: SolitonParams, grid: Grid) -> float:
    """H^1 norm of J H'(eta) - [(v^2/(2 mu^2) + mu^2/2) d_theta eta + v/mu d_a eta]"""
    eta = eval_soliton(p, grid)
    _, d_a, d_theta, _ = tangent_frame(p, grid)
    flow = d_theta * (0.5 * p.v ** 2 / p.mu ** 2 + 0.5 * p.mu ** 2) + d_a * (p.v / p.mu)
    return h1_norm(nls_vector_field(eta) - flow)
