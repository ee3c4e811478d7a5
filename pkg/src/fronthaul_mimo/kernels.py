"""Hot scalar kernels with a numba path and a numpy path.

Every kernel exists twice, ``*_numba`` and ``*_numpy``. The unsuffixed name
is bound to one of them according to :data:`fronthaul_mimo._accel.ENABLE_NUMBA`.
All kernels take and return flat ``float64`` arrays; shape handling lives
in the callers.
"""
import math

import numpy as np
from scipy import special

from ._accel import ENABLE_NUMBA, njit

__all__ = [
    "quantize_flat",
    "bussgang_gain_flat",
    "output_power_flat",
    "quantize_flat_numba",
    "quantize_flat_numpy",
    "bussgang_gain_flat_numba",
    "bussgang_gain_flat_numpy",
    "output_power_flat_numba",
    "output_power_flat_numpy",
]


# ---------------------------------------------------------------------------
# mid-rise quantizer
# ---------------------------------------------------------------------------
# The cell index floor(x/step) is clipped to [-L/2, L/2 - 1]; this reproduces
# both saturation branches and guards against x/step rounding up onto L/2.

@njit
def quantize_flat_numba(x, step, levels):
    half = levels / 2.0
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        # float floor: math.floor would return int64 and overflow on huge inputs
        k = np.floor(x[i] / step)
        if k < -half:
            k = -half
        elif k > half - 1.0:
            k = half - 1.0
        out[i] = step * (k + 0.5)
    return out


def quantize_flat_numpy(x, step, levels):
    half = levels // 2
    k = np.clip(np.floor(x / step), -half, half - 1)
    return step * (k + 0.5)


# ---------------------------------------------------------------------------
# Bussgang gain of the quantizer for a circularly-symmetric Gaussian input
# ---------------------------------------------------------------------------

@njit
def bussgang_gain_flat_numba(var, step, levels):
    out = np.empty_like(var)
    half = levels / 2.0
    for b in range(var.shape[0]):
        acc = 0.0
        for i in range(1, levels):
            t = step * (i - half)
            acc += math.exp(-t * t / var[b])
        out[b] = step / math.sqrt(math.pi * var[b]) * acc
    return out


def bussgang_gain_flat_numpy(var, step, levels):
    thresholds = step * (np.arange(1, levels) - levels / 2.0)
    expo = np.exp(-thresholds[None, :] ** 2 / var[:, None])
    return step / np.sqrt(np.pi * var) * expo.sum(axis=1)


# ---------------------------------------------------------------------------
# exact output power E|Q(y)|^2 for y ~ CN(0, var)
# ---------------------------------------------------------------------------
# Uses symmetry about zero and erfc on the positive half so that tail cells
# are not lost to cancellation.

@njit
def output_power_flat_numba(var, step, levels):
    out = np.empty_like(var)
    half = levels // 2
    for b in range(var.shape[0]):
        scale = math.sqrt(var[b])  # sigma_real * sqrt(2)
        acc = 0.0
        for k in range(half):
            level = step * (k + 0.5)
            lo = math.erfc(step * k / scale)
            if k == half - 1:
                hi = 0.0
            else:
                hi = math.erfc(step * (k + 1) / scale)
            acc += level * level * 0.5 * (lo - hi)
        # two signs per real dimension, two real dimensions
        out[b] = 4.0 * acc
    return out


def output_power_flat_numpy(var, step, levels):
    half = levels // 2
    k = np.arange(half)
    level = step * (k + 0.5)
    scale = np.sqrt(var)[:, None]
    lo = special.erfc(step * k[None, :] / scale)
    hi = special.erfc(step * (k[None, :] + 1) / scale)
    hi[:, -1] = 0.0
    return 4.0 * (level ** 2 * 0.5 * (lo - hi)).sum(axis=1)


if ENABLE_NUMBA:
    quantize_flat = quantize_flat_numba
    bussgang_gain_flat = bussgang_gain_flat_numba
    output_power_flat = output_power_flat_numba
else:
    quantize_flat = quantize_flat_numpy
    bussgang_gain_flat = bussgang_gain_flat_numpy
    output_power_flat = output_power_flat_numpy
