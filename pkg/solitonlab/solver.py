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
Split-step pseudospectral evolution of i u_t + 1/2 u_xx + |u|^2 u = 0 on the
periodic grid, with conservation diagnostics, observers and checkpoints.
"""

import logging
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import fft as sp_fft
from tqdm import tqdm

from .consts import SOLVER_DEFAULTS
from .spectral import (
    Field,
    Grid,
    field_from_bytes,
    field_to_bytes,
    hamiltonian,
    mass,
    momentum,
)
from .utils import BlowUpError, prepare_dir, write_csv

logger = logging.getLogger(__name__)

Observer = Callable[[float, Field], None]

YOSHIDA_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
YOSHIDA_W0 = -(2.0 ** (1.0 / 3.0)) * YOSHIDA_W1


@lru_cache(maxsize=32)
def _linear_propagator(grid: Grid, dt: float) -> np.ndarray:
    return np.exp(-0.5j * grid.k ** 2 * dt)


def _nonlinear(values: np.ndarray, dt: float) -> np.ndarray:
    # |u| is constant along this sub-flow, so the phase is exact
    return values * np.exp(1j * (values.real ** 2 + values.imag ** 2) * dt)


def _linear(values: np.ndarray, grid: Grid, dt: float) -> np.ndarray:
    return sp_fft.ifft(_linear_propagator(grid, dt) * sp_fft.fft(values))


def _strang(values: np.ndarray, grid: Grid, dt: float) -> np.ndarray:
    values = _nonlinear(values, 0.5 * dt)
    values = _linear(values, grid, dt)
    return _nonlinear(values, 0.5 * dt)


def _yoshida4(values: np.ndarray, grid: Grid, dt: float) -> np.ndarray:
    for weight in (YOSHIDA_W1, YOSHIDA_W0, YOSHIDA_W1):
        values = _strang(values, grid, weight * dt)
    return values


SPLITTINGS = {
    'strang': _strang,
    'yoshida4': _yoshida4,
}


def _get_splitting(name: str):
    if name not in SPLITTINGS:
        raise ValueError(
            'unknown splitting: %s, choose from %s' % (name, ', '.join(SPLITTINGS))
        )
    return SPLITTINGS[name]


def linear_flow(u: Field, dt: float) -> Field:
    """exact free Schroedinger flow over dt"""
    return Field(u.grid, _linear(u.values, u.grid, dt))


def step(u: Field, dt: float, splitting: str = 'strang') -> Field:
    """One split step; negative dt runs the scheme backwards."""
    return Field(u.grid, _get_splitting(splitting)(u.values, u.grid, dt))


@dataclass
class SolverConfig(object):
    dt: float = SOLVER_DEFAULTS['dt']
    t_end: float = 1.0
    sample_stride: int = SOLVER_DEFAULTS['sample_stride']
    grid: Optional[Grid] = None
    splitting: str = SOLVER_DEFAULTS['splitting']
    checkpoint_every: Optional[int] = None
    checkpoint_dir: Optional[str] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError('dt must be positive, got %s' % self.dt)
        if self.t_end < 0:
            raise ValueError('t_end must be non-negative, got %s' % self.t_end)
        if int(self.sample_stride) < 1:
            raise ValueError('sample_stride must be >= 1, got %s' % self.sample_stride)
        self.sample_stride = int(self.sample_stride)
        _get_splitting(self.splitting)
        if self.grid is not None:
            rotation = self.dt * self.grid.k_max ** 2
            if rotation > SOLVER_DEFAULTS['max_phase_rotation']:
                logger.warning(
                    'dt * k_max^2 = %.1f exceeds %g; high modes rotate by many turns per step',
                    rotation,
                    SOLVER_DEFAULTS['max_phase_rotation'],
                )

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(1.0, self.t_end):
            logger.warning(
                't_end=%g is not a multiple of dt=%g; running %d steps to t=%g',
                self.t_end,
                self.dt,
                n,
                n * self.dt,
            )
        return n


@dataclass
class PdeTrajectory(object):
    times: List[float] = field(default_factory=list)
    mass: List[float] = field(default_factory=list)
    momentum: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)
    fields: List[Field] = field(default_factory=list)
    meta: Dict = field(default_factory=dict)

    CONSERVED_HEADER = ('t', 'M', 'P', 'H')

    def record(self, t: float, u: Field, keep_field: bool = False):
        self.times.append(t)
        self.mass.append(mass(u))
        self.momentum.append(momentum(u))
        self.energy.append(hamiltonian(u))
        if keep_field:
            self.fields.append(u)

    @staticmethod
    def _drift(values: Sequence[float]) -> float:
        values = np.asarray(values)
        if values.size == 0:
            return 0.0
        ref = abs(values[0])
        return float(np.max(np.abs(values - values[0]))) / (ref if ref > 0 else 1.0)

    @property
    def mass_drift(self) -> float:
        return self._drift(self.mass)

    @property
    def energy_drift(self) -> float:
        return self._drift(self.energy)

    def conserved_rows(self) -> np.ndarray:
        return np.column_stack([self.times, self.mass, self.momentum, self.energy])

    def save_conserved(self, fp: Union[str, Path]):
        write_csv(fp, self.CONSERVED_HEADER, self.conserved_rows())


def save_checkpoint(fp: Union[str, Path], u: Field, t: float, dt: float, step_index: int):
    prepare_dir(Path(fp).parent)
    with open(fp, 'wb') as f:
        f.write(struct.pack('<3d', t, dt, float(step_index)))
        f.write(field_to_bytes(u))


def load_checkpoint(fp: Union[str, Path]) -> Tuple[Field, float, float, int]:
    """returns (u, t, dt, step index)"""
    with open(fp, 'rb') as f:
        buf = f.read()
    t, dt, step_index = struct.unpack('<3d', buf[:24])
    return field_from_bytes(buf[24:]), t, dt, int(step_index)


def evolve(
    u0: Field,
    cfg: SolverConfig,
    observers: Sequence[Observer] = (),
    keep_fields: bool = False,
    t0: float = 0.0,
    progress: bool = True,
) -> PdeTrajectory:
    """
    Step u0 to t0 + cfg.t_end. Every ``cfg.sample_stride`` steps (and at the
    end) the conserved quantities are recorded and each observer is called
    with (t, u).
    """
    grid = u0.grid
    if cfg.grid is not None and cfg.grid != grid:
        raise ValueError('initial field grid %s does not match the solver grid %s' % (grid, cfg.grid))
    advance = _get_splitting(cfg.splitting)
    n_steps = cfg.n_steps
    traj = PdeTrajectory(
        meta={'dt': cfg.dt, 'steps': n_steps, 'splitting': cfg.splitting, 'n': grid.n, 'length': grid.length}
    )

    def sample(i, values):
        t = t0 + i * cfg.dt
        u = Field(grid, values)
        traj.record(t, u, keep_fields)
        for obs in observers:
            obs(t, u)

    values = u0.values.copy()
    sample(0, values)
    last_good = t0
    for i in tqdm(range(1, n_steps + 1), disable=not progress, desc='evolve'):
        values = advance(values, grid, cfg.dt)
        is_sample = i % cfg.sample_stride == 0 or i == n_steps
        if is_sample or (cfg.checkpoint_every and i % cfg.checkpoint_every == 0):
            if not np.all(np.isfinite(values)):
                raise BlowUpError('non-finite field after t = %g' % last_good, last_time=last_good)
            last_good = t0 + i * cfg.dt
        if is_sample:
            sample(i, values)
        if cfg.checkpoint_every and i % cfg.checkpoint_every == 0:
            ckpt_dir = Path(cfg.checkpoint_dir or '.')
            save_checkpoint(ckpt_dir / ('step-%08d.bin' % i), Field(grid, values), t0 + i * cfg.dt, cfg.dt, i)
    logger.info(
        'evolved %d steps to t=%g: mass drift %.3e, energy drift %.3e',
        n_steps,
        t0 + n_steps * cfg.dt,
        traj.mass_drift,
        traj.energy_drift,
    )
    return traj
