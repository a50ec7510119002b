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
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .consts import CSV_FLOAT_FMT

fmt = '[%(levelname)s %(asctime)s %(funcName)s:%(lineno)d] %(' 'message)s '
logging.basicConfig(format=fmt)
logging.captureWarnings(True)
logger = logging.getLogger()


def set_logger(log_file=None, log_level=logging.INFO, log_file_level=logging.NOTSET):
    """
    Example:
        >>> set_logger(log_file)
        >>> logger.info("abc'")
    """
    log_format = logging.Formatter(fmt)
    logger.setLevel(log_level)
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(log_format)
    logger.handlers = [console_handler]
    if log_file and log_file != '':
        if not Path(log_file).parent.exists():
            os.makedirs(Path(log_file).parent)
        if isinstance(log_file, Path):
            log_file = str(log_file)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(log_file_level)
        file_handler.setFormatter(log_format)
        logger.addHandler(file_handler)
    return logger


class SolitonLabError(Exception):
    pass


class NumericalAbort(SolitonLabError, RuntimeError):
    """数值计算失败，命令行返回码为 3。"""


class DegenerateFrameError(NumericalAbort):
    pass


class ConvergenceError(NumericalAbort):
    pass


class LeftManifoldError(NumericalAbort):
    pass


class IllPosedSourceError(NumericalAbort):
    pass


class BlowUpError(NumericalAbort):
    def __init__(self, message, last_time=None):
        super().__init__(message)
        self.last_time = last_time


class ValidationFailure(SolitonLabError):
    """验证指标没有达到阈值，命令行返回码为 2。"""


def next_power_of_two(value: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(value, 1.0))))


def wrap_angle(theta):
    """wrap into (-pi, pi]; only used when writing reports."""
    wrapped = np.mod(np.asarray(theta, dtype=float) + np.pi, 2 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return wrapped


def fit_power_law(h: Sequence[float], values: Sequence[float]) -> Dict[str, float]:
    """Least-squares fit of log(values) = slope * log(h) + intercept."""
    h = np.asarray(h, dtype=float)
    values = np.asarray(values, dtype=float)
    if h.size < 3:
        raise ValueError('need >= 3 points')
    if np.any(h <= 0) or np.any(values <= 0):
        raise ValueError('power-law fit needs positive h and values')
    log_h, log_v = np.log(h), np.log(values)
    (slope, intercept), residuals, *_ = np.polyfit(log_h, log_v, 1, full=True)
    residual = float(np.sqrt(residuals[0] / h.size)) if residuals.size else 0.0
    return {'slope': float(slope), 'intercept': float(intercept), 'residual': residual}


def prepare_dir(dir_path: Union[str, Path]) -> Path:
    dir_path = Path(dir_path)
    if not dir_path.exists():
        os.makedirs(dir_path)
    return dir_path


def _format_cell(val) -> str:
    if isinstance(val, str):
        return val
    return CSV_FLOAT_FMT % float(val)


def write_csv(
    fp: Union[str, Path], header: Sequence[str], rows: Union[np.ndarray, Iterable]
):
    """Comma separated, dot decimal, 17 significant digits; str cells verbatim."""
    if isinstance(rows, np.ndarray):
        rows = np.atleast_2d(rows) if rows.size else np.zeros((0, len(header)))
    rows = [list(row) for row in rows]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(
                'csv row width %d does not match header width %d'
                % (len(row), len(header))
            )
    prepare_dir(Path(fp).parent)
    with open(fp, 'w') as f:
        f.write(','.join(header) + '\n')
        for row in rows:
            f.write(','.join(_format_cell(val) for val in row) + '\n')


def read_csv(fp: Union[str, Path]) -> Tuple[List[str], np.ndarray]:
    with open(fp) as f:
        header = f.readline().strip().split(',')
    data = np.loadtxt(fp, delimiter=',', skiprows=1, ndmin=2)
    return header, data


def _to_jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(fp: Union[str, Path], obj: Any):
    prepare_dir(Path(fp).parent)
    with open(fp, 'w') as f:
        json.dump(_to_jsonable(obj), f, indent=2, sort_keys=False)
        f.write('\n')


def read_json(fp: Union[str, Path]) -> Any:
    with open(fp) as f:
        return json.load(f)
