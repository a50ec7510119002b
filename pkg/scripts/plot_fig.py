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
画出 validate 运行的结果图，每个运行目录一行：|u| 热力图（含两条峰线）、a(t) 对比和 H1 误差曲线。
给出 scaling.csv 时再加一张 log-log 的误差-h 拟合图。
"""

import logging
from pathlib import Path

import click
import numpy as np
import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt

from solitonlab.utils import read_csv, read_json, set_logger

logger = set_logger(log_level=logging.INFO)


def _heatmap(ax, run_dir):
    _, data = read_csv(run_dir / 'plotdata_heatmap.csv')
    times = np.unique(data[:, 0])
    xs = data[: len(data) // len(times), 1]
    modulus = data[:, 2].reshape(len(times), len(xs))
    mesh = ax.pcolormesh(xs, times, modulus, shading='auto', cmap='viridis')
    _, ridges = read_csv(run_dir / 'plotdata_ridges.csv')
    ax.plot(ridges[:, 1], ridges[:, 0], 'w--', lw=0.8)
    ax.plot(ridges[:, 2], ridges[:, 0], 'w--', lw=0.8)
    ax.set_xlabel('x')
    ax.set_ylabel('t')
    ax.set_title('|u(t, x)|')
    plt.colorbar(mesh, ax=ax)


def _separation(ax, run_dir):
    _, data = read_csv(run_dir / 'plotdata_a.csv')
    ax.plot(data[:, 0], data[:, 1], label='extracted')
    ax.plot(data[:, 0], data[:, 2], '--', label='ODE')
    ax.plot(data[:, 0], data[:, 3], ':', label='closed form')
    ax.set_xlabel('t')
    ax.set_ylabel('a(t)')
    ax.legend()


def _errors(ax, run_dir):
    header, data = read_csv(run_dir / 'errors.csv')
    for name, style in (('h1_error', '-'), ('w_h1', '--'), ('ablation_error', ':')):
        col = header.index(name)
        if np.all(np.isnan(data[:, col])):
            continue
        ax.semilogy(data[:, 0], np.maximum(data[:, col], 1e-16), style, label=name)
    ax.set_xlabel('t')
    ax.legend()


def _scaling(ax, scaling_fp):
    header, data = read_csv(scaling_fp)
    h, err = data[:, header.index('h')], data[:, header.index('max_h1_error')]
    summary_fp = Path(scaling_fp).parent / 'scaling_summary.json'
    ax.loglog(h, err, 'o', label='max E')
    if summary_fp.exists():
        fit = read_json(summary_fp)
        ax.loglog(h, np.exp(fit['intercept']) * h ** fit['slope'], '-', label='slope %.2f' % fit['slope'])
    ax.set_xlabel('h')
    ax.legend()


@click.command()
@click.option(
    '-i', '--run-dir', type=str, multiple=True, required=True,
    help='output directory of `solitonlab validate`; repeat for the sigma = 0 and sigma = 1 runs',
)
@click.option('--scaling-fp', type=str, default=None, help='scaling.csv of `solitonlab sweep`. Default: `None`')
@click.option('-o', '--output-fp', type=str, default='validate.png', help='image file. Default: `validate.png`')
def plot(run_dir, scaling_fp, output_fp):
    n_rows = len(run_dir) + (1 if scaling_fp else 0)
    fig, axes = plt.subplots(n_rows, 3, figsize=(15, 4.5 * n_rows), squeeze=False)
    for row, one_dir in enumerate(run_dir):
        one_dir = Path(one_dir)
        config = read_json(one_dir / 'config.json')
        _heatmap(axes[row, 0], one_dir)
        axes[row, 0].set_title('|u(t, x)|, a0=%g, sigma=%d' % (config['a0'], config['sigma']))
        _separation(axes[row, 1], one_dir)
        _errors(axes[row, 2], one_dir)
    if scaling_fp:
        _scaling(axes[-1, 0], scaling_fp)
        axes[-1, 1].axis('off')
        axes[-1, 2].axis('off')
    fig.tight_layout()
    fig.savefig(output_fp, dpi=150)
    logger.info('figure saved to %s', output_fp)


if __name__ == '__main__':
    plot()
