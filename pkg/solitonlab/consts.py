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


import logging
import math

from .__version__ import __version__

logger = logging.getLogger(__name__)


# 结果文件里记录的版本只到第二层
RESULT_VERSION = '.'.join(__version__.split('.', maxsplit=2)[:2])

# reference frame of the linearized operator S; solutions are mapped onto the
# simulation grid by the group action
REFERENCE_GRID = {'n': 1024, 'length': 64.0}

# simulation grid: L = 24 * a0, n the smallest power of two with dx <= MAX_DX
SIM_GRID_FACTOR = 24.0
MAX_DX = 0.05
MIN_GRID_POINTS = 8

# phase-equation coupling of the interaction; 18 is what the beta terms give
# with their sign flipped
THETA_COUPLING = 6.0
THETA_COUPLING_FLIPPED = 18.0

MIN_CASE_A0 = 3.0
MIN_SEPARATION = 2.0

SOLVER_DEFAULTS = {
    'dt': 5e-3,
    'sample_stride': 100,
    'splitting': 'strang',
    'max_phase_rotation': 50.0,
}

NEWTON_DEFAULTS = {
    'max_iter': 50,
    'tol': 1e-11,
    'fd_step': 1e-6,
}

QUAD_DEFAULTS = {
    'epsabs': 1e-16,
    'epsrel': 1e-12,
    'limit': 400,
    'padding': 40.0,
}

# central finite-difference steps for interaction gradients, in the order of
# ZCoords.FIELDS
INTERACTION_FD_STEPS = (1e-6,) * 8

ODE_DT = 0.01
ODE_MAX_DT = 0.05
ODE_MAX_STEPS = 1e8
ODE_VARIANTS = ('theorem', 'reduced', 'alpha_beta', 'general', 'closed_form')

# exponential weight e^{DECAY_WEIGHT <x>} of the decay certificates
DECAY_WEIGHT = 0.9

# kernel handling of S
KERNEL_WARN_TOL = 1e-8
KERNEL_FAIL_TOL = 1e-4
SOLVE_DEFECT_TOL = 1e-8

# H^1 norm of the approximate-equation residual is taken over |k| <= RESIDUAL_KMAX
RESIDUAL_KMAX = 12.0
RESIDUAL_FD_STEP = 1e-4

CORRECTION_FD_STEP = 1e-6

# 两个孤子之间的过渡区域宽度: delta = 4 / a0
CUTOFF_SCALE = 4.0

EXPERIMENT_DEFAULTS = {
    'a0': 5.0,
    'sigma': 1,
    't_end_mode': 'auto',
    't_end': None,
    'dt': 5e-3,
    'n': None,
    'length': None,
    'sample_stride': 100,
    'splitting': 'yoshida4',
    'ode_variant': 'theorem',
    'ode_dt': ODE_DT,
    'theta_coupling': THETA_COUPLING,
    'correction': False,
    'theta_ablation': True,
    'monitor': True,
    't_budget': 2000.0,
    'heatmap_points': 256,
    'output_dir': 'runs',
}

# sigma = 0 runs stop at 2hT = 2 * SIGMA0_T_FRACTION * pi / 4
SIGMA0_T_FRACTION = 0.8
COLLISION_PHASE = math.pi / 2

EXIT_CODES = {'ok': 0, 'validation': 2, 'abort': 3}

# sweep pass thresholds on the fitted power of h
MIN_SLOPES = {'error': 1.7, 'residual': 3.5}

CSV_FLOAT_FMT = '%.17g'
