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


from .__version__ import __version__
from .consts import RESULT_VERSION, THETA_COUPLING
from .utils import (
    set_logger,
    SolitonLabError,
    NumericalAbort,
    DegenerateFrameError,
    ConvergenceError,
    LeftManifoldError,
    IllPosedSourceError,
    BlowUpError,
    ValidationFailure,
)
from .spectral import Grid, Field
from .soliton import SolitonParams, ZCoords, SymmetricState, two_soliton, case_initial_data
from .symplectic import decompose, Decomposition
from .dynamics import EffectiveState, closed_form, get_rhs, integrate
from .correction import build_correction, corrected_two_soliton
from .solver import SolverConfig, evolve
from .lyapunov import LyapunovMonitor, make_cutoffs
from .experiment import ExperimentConfig, run_case, scaling_study, emit_report
