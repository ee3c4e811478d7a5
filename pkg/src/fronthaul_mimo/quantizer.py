"""Uniform mid-rise quantizer and its Bussgang linearization.

A ``QuantizerSpec`` describes the converter of one real dimension. Complex
signals are quantized by applying it to the real and imaginary parts
separately. Passing ``None`` where a spec is expected means an ideal
(infinite-precision) converter.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import kernels

__all__ = [
    "QuantizerSpec",
    "Exactness",
    "DistortionModel",
    "quantize",
    "quantize_array",
    "quantize_complex",
    "calibrate_step",
    "calibrated_spec",
    "bussgang_gain",
    "output_power",
    "output_power_1bit",
    "arcsine_output_cov",
    "distortion_cov",
]


@dataclass(frozen=True)
class QuantizerSpec:
    """Resolution ``bits`` and step size ``step`` of one real-valued converter."""

    bits: int
    step: float

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise ValueError(f"bits must be an integer >= 1, got {self.bits!r}")
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be positive and finite, got {self.step!r}")

    @property
    def levels(self):
        return 2 ** int(self.bits)

    @property
    def clip_level(self):
        """Edge of the granular region, ``step * levels / 2``."""
        return self.step * self.levels / 2

    def alphabet(self):
        """The ``levels`` output values of one real dimension, ascending."""
        L = self.levels
        return self.step * (np.arange(L) - L / 2 + 0.5)


class Exactness(enum.Enum):
    EXACT_1BIT = "exact-1bit"
    DIAGONAL_APPROX = "diagonal-approx"
    INFINITE_PRECISION = "infinite-precision"


@dataclass
class DistortionModel:
    """Bussgang decomposition ``Q(x) = diag(gain) x + e`` with ``Cov(e) = error_cov``.

    ``gain`` holds the diagonal of the (real, positive) gain matrix.
    """

    gain: np.ndarray
    error_cov: np.ndarray
    exactness: Exactness

    @property
    def gain_matrix(self):
        return np.diag(self.gain)


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ValueError("quantizer input must be finite")


def quantize(r, spec):
    """Quantize a single real number."""
    r = float(r)
    _check_finite(r)
    return float(kernels.quantize_flat(np.array([r]), float(spec.step), spec.levels)[0])


def quantize_array(x, spec):
    """Quantize a real array elementwise; returns a new array of the same shape."""
    x = np.asarray(x, dtype=np.float64)
    _check_finite(x)
    flat = np.ascontiguousarray(x).reshape(-1)
    return kernels.quantize_flat(flat, float(spec.step), spec.levels).reshape(x.shape)


def quantize_complex(z, spec):
    """Quantize real and imaginary parts of a complex array independently.

    ``spec=None`` returns the input unchanged (ideal converter).
    """
    z = np.asarray(z, dtype=np.complex128)
    if spec is None:
        return z.copy()
    return quantize_array(z.real, spec) + 1j * quantize_array(z.imag, spec)


def calibrate_step(bits, input_power, clip_prob):
    """Step size giving a per-real-dimension clipping probability ``clip_prob``.

    The input is taken as circularly-symmetric complex Gaussian with power
    ``input_power``, so each real dimension has variance ``input_power / 2``.
    Clipping is two-sided: ``P(|x| >= step * L / 2) = clip_prob``.
    """
    if not (0.0 < clip_prob < 1.0):
        raise ValueError(f"clip_prob must lie in (0, 1), got {clip_prob!r}")
    if not input_power > 0:
        raise ValueError(f"input_power must be positive, got {input_power!r}")
    sigma_real = math.sqrt(input_power / 2)
    L = 2 ** int(bits)
    return 2 * sigma_real / L * float(special.ndtri(1 - clip_prob / 2))


def calibrated_spec(bits, input_power, clip_prob):
    """``QuantizerSpec`` with the step from :func:`calibrate_step`; ``None`` stays ``None``."""
    if bits is None:
        return None
    return QuantizerSpec(int(bits), calibrate_step(bits, input_power, clip_prob))


def _as_variances(var):
    var = np.atleast_1d(np.asarray(var, dtype=np.float64))
    if np.any(~np.isfinite(var)) or np.any(var <= 0):
        raise ValueError("input variances must be positive and finite")
    return np.ascontiguousarray(var.reshape(-1)), var.shape


def bussgang_gain(input_var, spec):
    """Per-entry Bussgang gain for complex Gaussian inputs of variance ``input_var``.

    ``g = step / sqrt(pi var) * sum_{i=1}^{L-1} exp(-step^2 (i - L/2)^2 / var)``
    which equals ``E[Q(y) y*] / E[|y|^2]``. Returns ones for ``spec=None``.
    """
    flat, shape = _as_variances(input_var)
    if spec is None:
        return np.ones(shape)
    return kernels.bussgang_gain_flat(flat, float(spec.step), spec.levels).reshape(shape)


def output_power(input_var, spec):
    """Exact ``E|Q(y)|^2`` for ``y ~ CN(0, input_var)``."""
    flat, shape = _as_variances(input_var)
    if spec is None:
        return flat.reshape(shape).copy()
    return kernels.output_power_flat(flat, float(spec.step), spec.levels).reshape(shape)


def output_power_1bit(spec):
    """Output power of a complex 1-bit converter, ``step**2 / 2``, whatever the input."""
    if spec.bits != 1:
        raise ValueError("output_power_1bit only supports bits == 1")
    return spec.step ** 2 / 2


def arcsine_output_cov(normalized_cov, spec, atol=1e-9):
    """Output covariance of a complex 1-bit quantizer (arcsine law).

    ``normalized_cov`` is the input covariance scaled to unit diagonal.
    """
    if spec.bits != 1:
        raise ValueError("the arcsine law only applies to bits == 1")
    sigma = np.asarray(normalized_cov, dtype=np.complex128)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("normalized_cov must be a square matrix")
    if np.any(np.abs(np.diag(sigma) - 1) > atol):
        raise ValueError("normalized_cov must have unit diagonal")
    re = np.clip(sigma.real, -1.0, 1.0)
    im = np.clip(sigma.imag, -1.0, 1.0)
    out = spec.step ** 2 / np.pi * (np.arcsin(re) + 1j * np.arcsin(im))
    np.fill_diagonal(out, spec.step ** 2 / 2)
    return out


def _check_covariance(cov, rtol=1e-9):
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValueError("covariance must be a square matrix")
    diag = cov.diagonal().real
    if np.any(~np.isfinite(cov)) or np.any(diag <= 0):
        raise ValueError("covariance must be finite with a positive diagonal")
    scale = diag.max()
    if np.max(np.abs(cov - cov.conj().T)) > rtol * scale * 10:
        raise ValueError("covariance must be Hermitian")
    try:
        np.linalg.cholesky(cov + rtol * scale * np.eye(cov.shape[0]))
    except np.linalg.LinAlgError:
        raise ValueError("covariance must be positive semidefinite") from None


def distortion_cov(input_cov, spec, check=True):
    """Bussgang gain and distortion covariance for a Gaussian input vector.

    For 1-bit converters the distortion covariance is exact (arcsine law).
    For more bits only its diagonal is kept, built from the exact scalar
    output power: ``P_out(var_b) - g_b**2 var_b``.
    """
    cov = np.asarray(input_cov, dtype=np.complex128)
    if check:
        _check_covariance(cov)
    var = cov.diagonal().real.copy()
    B = var.shape[0]
    if spec is None:
        return DistortionModel(np.ones(B), np.zeros((B, B), dtype=np.complex128),
                               Exactness.INFINITE_PRECISION)

    gain = bussgang_gain(var, spec)
    if spec.bits == 1:
        inv_sd = 1 / np.sqrt(var)
        c_r = arcsine_output_cov(cov * np.outer(inv_sd, inv_sd), spec, atol=1e-6)
        c_e = c_r - np.outer(gain, gain) * cov
        c_e = (c_e + c_e.conj().T) / 2
        d = c_e.diagonal().real
        np.fill_diagonal(c_e, np.maximum(d, 0.0))
        return DistortionModel(gain, c_e, Exactness.EXACT_1BIT)

    d = np.maximum(output_power(var, spec) - gain ** 2 * var, 0.0)
    return DistortionModel(gain, np.diag(d).astype(np.complex128), Exactness.DIAGONAL_APPROX)
