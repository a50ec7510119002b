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
Periodic uniform grid, spectral calculus and the conserved functionals of the
cubic NLS ``i u_t + 1/2 u_xx + |u|^2 u = 0``.

The real line is replaced by the periodic box ``[-L/2, L/2)``. Integrals are
``dx * sum`` over the nodes and the real inner product is
``<u, v> = Re int u conj(v)``.
"""

import logging
import math
import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import fft as sp_fft

from .consts import MAX_DX, MIN_GRID_POINTS, REFERENCE_GRID, SIM_GRID_FACTOR
from .utils import next_power_of_two, prepare_dir, read_csv, write_csv

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid(object):
    n: int
    length: float

    def __post_init__(self):
        n = int(self.n)
        if n < MIN_GRID_POINTS or n & (n - 1) != 0:
            raise ValueError('grid size must be a power of two >= %d, got %s' % (MIN_GRID_POINTS, self.n))
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValueError('grid length must be positive, got %s' % self.length)
        object.__setattr__(self, 'n', n)
        object.__setattr__(self, 'length', float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @cached_property
    def x(self) -> np.ndarray:
        nodes = -0.5 * self.length + self.dx * np.arange(self.n)
        nodes.flags.writeable = False
        return nodes

    @cached_property
    def k(self) -> np.ndarray:
        wavenumbers = 2 * np.pi * sp_fft.fftfreq(self.n, d=self.dx)
        wavenumbers.flags.writeable = False
        return wavenumbers

    @property
    def k_max(self) -> float:
        return np.pi / self.dx

    @classmethod
    def reference(cls) -> 'Grid':
        return cls(**REFERENCE_GRID)

    @classmethod
    def for_separation(cls, a0: float, length: Optional[float] = None, n: Optional[int] = None) -> 'Grid':
        """Simulation grid for two solitons at +-a0."""
        if length is None:
            length = SIM_GRID_FACTOR * a0
        if n is None:
            n = max(next_power_of_two(length / MAX_DX), MIN_GRID_POINTS)
        return cls(n=n, length=length)

    def mirror_index(self) -> np.ndarray:
        """index of the node -x_j; x_0 = -L/2 is its own mirror."""
        return (-np.arange(self.n)) % self.n

    def field(self, values) -> 'Field':
        return Field(self, values)

    def zeros(self) -> 'Field':
        return Field(self, np.zeros(self.n, dtype=complex))


@dataclass(frozen=True, eq=False)
class Field(object):
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n,):
            raise ValueError(
                'field has %s samples, grid expects %d' % (values.shape, self.grid.n)
            )
        if not np.all(np.isfinite(values)):
            raise ValueError('field contains non-finite values')
        object.__setattr__(self, 'values', values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def with_values(self, values) -> 'Field':
        return type(self)(self.grid, values)

    def _check(self, other: 'Field'):
        if other.grid != self.grid:
            raise ValueError('fields live on different grids: %s vs %s' % (self.grid, other.grid))

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return self.with_values(self.values - other.values)
        return self.with_values(self.values - other)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.with_values(self.values / scalar)

    def __neg__(self):
        return self.with_values(-self.values)

    def conj(self) -> 'Field':
        return self.with_values(np.conj(self.values))

    def abs2(self) -> np.ndarray:
        return self.values.real ** 2 + self.values.imag ** 2


def spectrum(u: Field) -> np.ndarray:
    return sp_fft.fft(u.values)


def from_spectrum(grid: Grid, u_hat: np.ndarray) -> Field:
    return Field(grid, sp_fft.ifft(u_hat))


def derivative(u: Field, order: int = 1) -> Field:
    """Spectral derivative: inverse transform of (i k)^order * u_hat."""
    if order == 0:
        return u
    k = u.grid.k
    if order % 2 == 1:
        # odd derivatives drop the unpaired Nyquist mode
        k = np.where(np.arange(u.grid.n) == u.grid.n // 2, 0.0, k)
    return from_spectrum(u.grid, (1j * k) ** order * spectrum(u))


def apply_j(u: Field) -> Field:
    """J = -i"""
    return u.with_values(-1j * u.values)


def apply_j_inv(u: Field) -> Field:
    return u.with_values(1j * u.values)


def inner(u: Field, v: Field) -> float:
    u._check(v)
    return float(u.grid.dx * np.sum(u.values.real * v.values.real + u.values.imag * v.values.imag))


def symplectic_pair(v1: Field, v2: Field) -> float:
    """omega(v1, v2) = <v1, J^{-1} v2>"""
    v1._check(v2)
    # Re(v1 * conj(i v2)) = Im(v1 * conj(v2))
    return float(v1.grid.dx * np.sum((v1.values * np.conj(v2.values)).imag))


def l2_norm(u: Field) -> float:
    return math.sqrt(u.grid.dx * float(np.sum(u.abs2())))


def mass(u: Field) -> float:
    return 0.5 * u.grid.dx * float(np.sum(u.abs2()))


def momentum(u: Field) -> float:
    u_x = derivative(u).values
    return 0.5 * u.grid.dx * float(np.sum(np.conj(u.values) * u_x).imag)


def hamiltonian(u: Field) -> float:
    u_x = derivative(u).values
    kinetic = 0.25 * u.grid.dx * float(np.sum(np.abs(u_x) ** 2))
    potential = 0.25 * u.grid.dx * float(np.sum(u.abs2() ** 2))
    return kinetic - potential


def hamiltonian_gradient(u: Field) -> Field:
    """H'(u) = -1/2 u_xx - |u|^2 u"""
    return u.with_values(-0.5 * derivative(u, 2).values - u.abs2() * u.values)


def nls_vector_field(u: Field) -> Field:
    """J H'(u)"""
    return apply_j(hamiltonian_gradient(u))


def h1_norm(u: Field, kmax: Optional[float] = None) -> float:
    """(||u||^2 + ||u_x||^2)^{1/2}, optionally restricted to |k| <= kmax."""
    grid = u.grid
    weights = 1.0 + grid.k ** 2
    power = np.abs(spectrum(u)) ** 2
    if kmax is not None:
        power = np.where(np.abs(grid.k) <= kmax, power, 0.0)
    # Parseval: dx * sum |u|^2 = L / n^2 * sum |u_hat|^2
    return math.sqrt(grid.length / grid.n ** 2 * float(np.sum(weights * power)))


def fourier_resample(u: Field, points: np.ndarray, chunk_size: int = 256) -> np.ndarray:
    """
    Evaluate the trigonometric interpolant of ``u`` at arbitrary points.
    Points outside the periodic window ``[-L/2, L/2)`` give zero.
    """
    grid = u.grid
    points = np.asarray(points, dtype=float)
    flat = points.ravel()
    out = np.zeros(flat.shape, dtype=complex)
    coeffs = spectrum(u) / grid.n
    half = 0.5 * grid.length
    inside = np.nonzero((flat >= -half) & (flat < half))[0]
    for start in range(0, inside.size, chunk_size):
        idx = inside[start : start + chunk_size]
        phases = np.exp(1j * np.outer(flat[idx] + half, grid.k))
        out[idx] = phases @ coeffs
    return out.reshape(points.shape)


def high_frequency_fraction(u: Field, k_cut: float) -> float:
    """share of the spectral energy of u above |k| = k_cut"""
    power = np.abs(spectrum(u)) ** 2
    total = float(np.sum(power))
    if total == 0.0:
        return 0.0
    return float(np.sum(power[np.abs(u.grid.k) > k_cut])) / total


def save_field_csv(u: Field, fp: Union[str, Path]):
    rows = np.column_stack([u.x, u.values.real, u.values.imag])
    write_csv(fp, ['x', 're', 'im'], rows)


def load_field_csv(fp: Union[str, Path]) -> Field:
    _, data = read_csv(fp)
    x = data[:, 0]
    grid = Grid(n=len(x), length=-2.0 * x[0])
    return Field(grid, data[:, 1] + 1j * data[:, 2])


def field_to_bytes(u: Field) -> bytes:
    header = struct.pack('<2d', float(u.grid.n), u.grid.length)
    pairs = np.empty(2 * u.grid.n, dtype='<f8')
    pairs[0::2] = u.values.real
    pairs[1::2] = u.values.imag
    return header + pairs.tobytes()


def field_from_bytes(buf: bytes) -> Field:
    n, length = struct.unpack('<2d', buf[:16])
    n = int(n)
    pairs = np.frombuffer(buf[16 : 16 + 16 * n], dtype='<f8')
    if pairs.size != 2 * n:
        raise ValueError('truncated field dump: expected %d values, got %d' % (2 * n, pairs.size))
    return Field(Grid(n=n, length=length), pairs[0::2] + 1j * pairs[1::2])


def save_field_binary(u: Field, fp: Union[str, Path]):
    prepare_dir(Path(fp).parent)
    with open(fp, 'wb') as f:
        f.write(field_to_bytes(u))


def load_field_binary(fp: Union[str, Path]) -> Field:
    with open(fp, 'rb') as f:
        return field_from_bytes(f.read())


def hamiltonian_hessian(u: Field, w: Field) -> Field:
    """H''(u) w = -1/2 w_xx - 2 |u|^2 w - u^2 conj(w)"""
    u._check(w)
    values = (
        -0.5 * derivative(w, 2).values
        - 2 * u.abs2() * w.values
        - u.values ** 2 * np.conj(w.values)
    )
    return w.with_values(values)
