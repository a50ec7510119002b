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
Finite-dimensional dynamics of the two-soliton parameters: the reduced
(mu, a, theta, v) laws, their closed forms, the full eight-dimensional system
with quadrature-evaluated interaction terms, the alpha / beta coefficients and
a fixed-step RK4 integrator.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate as sp_integrate
from tqdm import tqdm

from .consts import (
    INTERACTION_FD_STEPS,
    MIN_SEPARATION,
    ODE_MAX_DT,
    ODE_MAX_STEPS,
    ODE_VARIANTS,
    QUAD_DEFAULTS,
    THETA_COUPLING,
)
from .soliton import (
    SolitonParams,
    SymmetricState,
    ZCoords,
    dH_dmu,
    dH_dv,
    sech,
    sech_prime,
    soliton_values,
)
from .utils import BlowUpError, ConvergenceError

logger = logging.getLogger(__name__)

EffectiveState = SymmetricState

ALPHA_EPSREL = 1e-10


@dataclass
class OdeTrajectory(object):
    times: np.ndarray
    states: np.ndarray
    meta: Dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def reduced(self) -> np.ndarray:
        """(mu, a, theta, v) columns of the right soliton"""
        if self.states.shape[1] == 4:
            return self.states
        return self.states[:, list(ZCoords.SOLITON_INDEX[2])]


@dataclass(frozen=True)
class InteractionValue(object):
    value: float
    gradient: np.ndarray


def _sign(sigma: int) -> float:
    return -1.0 if sigma == 1 else 1.0


def rhs_theorem(
    s: EffectiveState, theta_coupling: float = THETA_COUPLING, freeze_mu: bool = False
) -> np.ndarray:
    """
    (mu', a', theta', v') of the symmetric two-soliton law. With ``freeze_mu``
    the phase equation uses mu = 1.
    """
    sgn = _sign(s.sigma)
    decay = math.exp(-2 * s.a)
    mu_theta = 1.0 if freeze_mu else s.mu
    return np.array(
        [
            sgn * (8 * s.a - 4) * s.v * decay,
            s.v,
            0.5 * mu_theta ** 2 + 0.5 * s.v ** 2 / mu_theta ** 2 + theta_coupling * sgn * decay,
            -4 * sgn * decay,
        ]
    )


def rhs_reduced(s: EffectiveState, theta_coupling: float = THETA_COUPLING) -> np.ndarray:
    out = rhs_theorem(s, theta_coupling)
    sgn = _sign(s.sigma)
    out[1] = s.v / s.mu + sgn * (-4 * s.a + 2 * math.pi ** 2 / 3) * s.v * math.exp(-2 * s.a)
    return out


def closed_form(a0: float, sigma: int, t) -> Tuple[np.ndarray, np.ndarray]:
    """a(t), v(t) solving a' = v, v' = -4 (-1)^sigma e^{-2a} from (a0, 0)"""
    h = math.exp(-a0)
    t = np.asarray(t, dtype=float)
    phase = 2 * h * t
    if sigma == 1:
        a = a0 + np.log(np.cosh(phase))
        v = 2 * h * np.tanh(phase)
    elif sigma == 0:
        if np.any(np.abs(phase) >= math.pi / 2):
            raise ValueError('collision time exceeded: 2ht >= pi/2')
        a = a0 + np.log(np.cos(phase))
        v = -2 * h * np.tan(phase)
    else:
        raise ValueError('sigma must be 0 or 1, got %s' % sigma)
    return a, v


def effective_energy(s: EffectiveState) -> float:
    return s.v ** 2 - 4 * _sign(s.sigma) * math.exp(-2 * s.a)


def _quad(func: Callable, lo: float, hi: float, points: Sequence[float], **kwargs) -> float:
    opts = dict(
        epsabs=QUAD_DEFAULTS['epsabs'],
        epsrel=QUAD_DEFAULTS['epsrel'],
        limit=QUAD_DEFAULTS['limit'],
    )
    opts.update(kwargs)
    with warnings.catch_warnings():
        warnings.simplefilter('error', sp_integrate.IntegrationWarning)
        try:
            val, err = sp_integrate.quad(func, lo, hi, points=list(points), **opts)
        except sp_integrate.IntegrationWarning as e:
            raise ConvergenceError('no convergence in quadrature: %s' % e)
    logger.debug('quad over [%g, %g]: %.6e (+- %.1e)', lo, hi, val, err)
    return val


def interaction_integral(z: ZCoords, j: int = 2) -> float:
    """<H_p'(eta_j), eta_k> = -Re int |eta_j|^2 eta_j conj(eta_k), k = 3 - j"""
    if z.separation < MIN_SEPARATION:
        raise ValueError('separation too small: |a2 - a1| = %g' % z.separation)
    pj, pk = z.soliton(j), z.soliton(3 - j)

    def integrand(x):
        eta_j = soliton_values(pj, x)
        eta_k = soliton_values(pk, x)
        return -(abs(eta_j) ** 2 * eta_j * np.conj(eta_k)).real

    pad = QUAD_DEFAULTS['padding']
    lo = min(z.a1, z.a2) - pad
    hi = max(z.a1, z.a2) + pad
    return _quad(integrand, lo, hi, points=sorted((z.a1, z.a2)))


def interaction_gradient(
    z: ZCoords,
    j: int = 2,
    indices: Optional[Sequence[int]] = None,
    func: Optional[Callable[[ZCoords], float]] = None,
) -> np.ndarray:
    """
    Central differences of the interaction integral in the coordinates
    ``indices`` (all eight by default); other entries are left at zero.
    """
    func = func or (lambda zz: interaction_integral(zz, j))
    indices = range(8) if indices is None else indices
    base = z.as_array()
    grad = np.zeros(8)
    for m in indices:
        step = INTERACTION_FD_STEPS[m]
        plus, minus = base.copy(), base.copy()
        plus[m] += step
        minus[m] -= step
        grad[m] = (func(ZCoords.from_array(plus)) - func(ZCoords.from_array(minus))) / (2 * step)
    return grad


def interaction_value(z: ZCoords, j: int = 2) -> InteractionValue:
    return InteractionValue(interaction_integral(z, j), interaction_gradient(z, j))


def rhs_general(z: ZCoords, interaction: bool = True) -> np.ndarray:
    """
    The eight equations

        mu_j'    =  d_{theta_j} I_j
        a_j'     =  v_j / mu_j + d_{v_j} I_j
        theta_j' = -dH/dmu(eta_j) - d_{mu_j} I_j
        v_j'     = -d_{a_j} I_j

    with I_j = <H_p'(eta_j), eta_{3-j}>.
    """
    out = np.zeros(8)
    for j in (1, 2):
        p = z.soliton(j)
        i_mu, i_a, i_theta, i_v = ZCoords.SOLITON_INDEX[j]
        if interaction:
            g = interaction_gradient(z, j, indices=(i_mu, i_a, i_theta, i_v))
        else:
            g = np.zeros(8)
        out[i_mu] = g[i_theta]
        out[i_a] = dH_dv(p) + g[i_v]
        out[i_theta] = -dH_dmu(p) - g[i_mu]
        out[i_v] = -g[i_a]
    return out


def reduce_general(zdot: np.ndarray) -> np.ndarray:
    """(mu2', a2', theta2', v2') of an eight-component rate"""
    return np.asarray(zdot)[list(ZCoords.SOLITON_INDEX[2])]


def embed_rates(rates: Sequence[float]) -> np.ndarray:
    """symmetric eight-component rate of a reduced (mu', a', theta', v')"""
    mu_dot, a_dot, theta_dot, v_dot = rates
    return np.array([mu_dot, -a_dot, mu_dot, a_dot, theta_dot, -v_dot, theta_dot, v_dot])


# alpha(xi, a) = int e^{-i x xi} phi^3(x - a) phi(x + a) dx
# beta(xi, a)  = int e^{-i x xi} [phi^3]'(x - a) phi(x + a) dx
def _alpha_kernel(x, a):
    return sech(x - a) ** 3 * sech(x + a)


def _beta_kernel(x, a):
    y = x - a
    return 3 * sech(y) ** 2 * sech_prime(y) * sech(x + a)


def _oscillatory_quad(kernel: Callable, xi: float, a: float, moment: int = 0) -> complex:
    pad = QUAD_DEFAULTS['padding']
    lo, hi = -a - pad, a + pad

    def weight(x):
        return (-1j * x) ** moment * np.exp(-1j * x * xi) * kernel(x, a)

    re = _quad(lambda x: weight(x).real, lo, hi, points=(-a, a), epsrel=ALPHA_EPSREL)
    im = _quad(lambda x: weight(x).imag, lo, hi, points=(-a, a), epsrel=ALPHA_EPSREL)
    return complex(re, im)


def _check_mode(mode: str, xi: float, a: float):
    if a < 2:
        raise ValueError('alpha/beta need a >= 2, got %g' % a)
    if mode == 'asymptotic':
        if abs(xi) > 0.5:
            raise ValueError('asymptotic alpha/beta need |xi| <= 0.5, got %g' % xi)
    elif mode != 'quadrature':
        raise ValueError('unknown alpha/beta mode: %s' % mode)


def alpha(xi: float, a: float, mode: str = 'quadrature') -> complex:
    _check_mode(mode, xi, a)
    if mode == 'quadrature':
        return _oscillatory_quad(_alpha_kernel, xi, a)
    c2 = -math.pi ** 2 / 6 + 2 * a - 2 * a ** 2
    return math.exp(-2 * a) * (4 + (2 - 4 * a) * 1j * xi + c2 * xi ** 2)


def alpha_dxi(xi: float, a: float, mode: str = 'quadrature') -> complex:
    _check_mode(mode, xi, a)
    if mode == 'quadrature':
        return _oscillatory_quad(_alpha_kernel, xi, a, moment=1)
    c2 = -math.pi ** 2 / 6 + 2 * a - 2 * a ** 2
    return math.exp(-2 * a) * ((2 - 4 * a) * 1j + 2 * c2 * xi)


def beta(xi: float, a: float, mode: str = 'quadrature') -> complex:
    _check_mode(mode, xi, a)
    if mode == 'quadrature':
        return _oscillatory_quad(_beta_kernel, xi, a)
    return math.exp(-2 * a) * (4 + (6 - 4 * a) * 1j * xi)


def beta_dxi(xi: float, a: float, mode: str = 'quadrature') -> complex:
    _check_mode(mode, xi, a)
    if mode == 'quadrature':
        return _oscillatory_quad(_beta_kernel, xi, a, moment=1)
    return math.exp(-2 * a) * (6 - 4 * a) * 1j


def rhs_alpha_beta(s: EffectiveState, mode: str = 'asymptotic') -> np.ndarray:
    """the reduced system written with alpha, beta at xi = -2 v / mu"""
    sgn = _sign(s.sigma)
    xi = -2 * s.v / s.mu
    al = alpha(xi, s.a, mode)
    al_xi = alpha_dxi(xi, s.a, mode)
    be = beta(xi, s.a, mode)
    be_xi = beta_dxi(xi, s.a, mode)
    a, v = s.a, s.v
    return np.array(
        [
            sgn * (-1j * al).real,
            v / s.mu + sgn * (1j * a * al + al_xi).real,
            0.5 * s.mu ** 2
            + 0.5 * v ** 2 / s.mu ** 2
            + sgn * ((1j * v * a + 3) * al + v * al_xi + 1j * be_xi - a * be).real,
            sgn * (-1j * v * al - be).real,
        ]
    )


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    state0: Union[Sequence[float], np.ndarray],
    T: float,
    dt: float,
    stride: int = 1,
    t0: float = 0.0,
    progress: bool = False,
) -> OdeTrajectory:
    """
    Classical fixed-step RK4 from t0 to t0 + T. The step is the largest
    T / N with N integer and |T / N| <= dt; negative T integrates backwards.
    """
    dt = abs(dt)
    if dt == 0 or dt > ODE_MAX_DT:
        raise ValueError('ode step must be in (0, %g], got %g' % (ODE_MAX_DT, dt))
    if abs(T) / dt > ODE_MAX_STEPS:
        raise ValueError('too many ode steps: T/dt = %.3e' % (abs(T) / dt))
    stride = max(int(stride), 1)
    n_steps = int(math.ceil(abs(T) / dt - 1e-9)) if T != 0 else 0
    h = T / n_steps if n_steps else 0.0

    y = np.asarray(state0, dtype=float).copy()
    times, states = [t0], [y.copy()]
    t = t0
    for i in tqdm(range(n_steps), disable=not progress, desc='rk4'):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y_next = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y_next)):
            raise BlowUpError('non-finite ode state after t = %g' % t, last_time=t)
        y = y_next
        t = t0 + (i + 1) * h
        if (i + 1) % stride == 0 or i + 1 == n_steps:
            times.append(t)
            states.append(y.copy())
    return OdeTrajectory(
        times=np.array(times),
        states=np.array(states),
        meta={'method': 'rk4', 'dt': h, 'steps': n_steps, 'stride': stride},
    )


def get_rhs(
    variant: str,
    sigma: int,
    theta_coupling: float = THETA_COUPLING,
    freeze_mu: bool = False,
    alpha_mode: str = 'asymptotic',
) -> Callable[[float, np.ndarray], np.ndarray]:
    """
    Right-hand side f(t, y) of an ODE variant. The 'general' variant acts on
    the eight-vector of ZCoords, every other one on (mu, a, theta, v).
    """
    if variant not in ODE_VARIANTS:
        raise ValueError('unknown ode variant: %s' % variant)

    def state(y):
        return SymmetricState.from_array(y, sigma)

    if variant == 'theorem':
        return lambda t, y: rhs_theorem(state(y), theta_coupling, freeze_mu)
    elif variant == 'reduced':
        return lambda t, y: rhs_reduced(state(y), theta_coupling)
    elif variant == 'alpha_beta':
        return lambda t, y: rhs_alpha_beta(state(y), alpha_mode)
    elif variant == 'general':
        return lambda t, y: rhs_general(ZCoords.from_array(y))
    else:
        raise ValueError('closed_form is evaluated directly, it has no right-hand side')
