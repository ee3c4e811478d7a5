"""Pilot-based channel estimation through quantized receivers (Bussgang MMSE).

Pilot model, one row per receive antenna::

    Y = sqrt(rho) H Phi^T + N,        R = Q(a Y)

with ``Phi`` the ``n_p x U`` pilot matrix, ``N`` unit-variance AWGN and ``a``
the AGC factor that brings every antenna to power ``1/B``. Channel rows
are modeled as ``CN(0, diag(prior_var))``. The AGC and the Bussgang model
both use the prior statistics.

With DFT pilots every covariance in the pilot domain is circulant (the
arcsine law acts elementwise and keeps this structure), so the estimator
reduces to a matched filter per pilot followed by a scalar weight.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .quantizer import (
    bussgang_gain,
    calibrated_spec,
    distortion_cov,
    output_power,
    quantize_complex,
)

__all__ = [
    "PilotBook",
    "EstimationMethod",
    "EstimateReport",
    "PilotModel",
    "dft_pilots",
    "pilot_model",
    "pilot_observations",
    "bussgang_mmse_estimate",
    "estimate_channel",
    "empirical_mse",
    "monte_carlo_mse",
    "mse_1bit_closed_form",
    "mse_1bit_floor",
    "mse_vs_snr_curve",
]


@dataclass(frozen=True)
class PilotBook:
    """Pilot matrix (``length x U``); ``dft_index`` is set for DFT pilots."""

    matrix: np.ndarray
    dft_index: tuple | None = None

    @property
    def length(self):
        return self.matrix.shape[0]

    @property
    def num_users(self):
        return self.matrix.shape[1]


class EstimationMethod(enum.Enum):
    BUSSGANG_MMSE = "bussgang-mmse"
    GENIE = "genie"


@dataclass
class EstimateReport:
    H_hat: np.ndarray
    mse_per_coeff: float | None
    method: EstimationMethod
    analytic_mse: np.ndarray | None = None
    regularized: bool = False


def dft_pilots(n_p, U):
    """First ``U`` columns of the ``n_p``-point DFT matrix (unit-modulus entries)."""
    if U < 1 or n_p < U:
        raise ValueError(f"need n_p >= U >= 1, got n_p={n_p}, U={U}")
    t = np.arange(n_p)[:, None]
    k = np.arange(U)[None, :]
    # exact integer phase index keeps the Gram matrix clean for large n_p
    return PilotBook(np.exp(2j * np.pi * ((t * k) % n_p) / n_p), tuple(range(U)))


def _prior(prior_var, U):
    v = np.asarray(prior_var, dtype=np.float64)
    v = np.full(U, float(v)) if v.ndim == 0 else v
    if v.shape != (U,) or np.any(v <= 0):
        raise ValueError("prior_var must be positive, scalar or one entry per user")
    return v


@dataclass
class PilotModel:
    """Everything the estimator needs, precomputed once per configuration."""

    pilots: PilotBook
    prior_var: np.ndarray
    rho: float
    spec: object
    agc: float
    gain: float
    weights: np.ndarray  # maps pilot-correlator outputs to estimates
    analytic_mse: np.ndarray  # per-user LMMSE error under the Bussgang model
    regularized: bool = False
    extra: dict = field(default_factory=dict)


def _output_cov_first_column(pilots, prior_var, rho, spec, num_antennas):
    """First column of the circulant covariance of the quantizer output."""
    n_p = pilots.length
    m = np.arange(n_p)[:, None]
    k = np.asarray(pilots.dft_index)[None, :]
    power = rho * prior_var.sum() + 1
    col = (rho * prior_var[None, :] * np.exp(2j * np.pi * ((m * k) % n_p) / n_p)).sum(axis=1)
    col[0] += 1
    corr = col / power  # correlation coefficients, corr[0] == 1
    var_in = 1 / num_antennas
    if spec is None:
        return corr * var_in
    if spec.bits == 1:
        re = np.clip(corr.real, -1, 1)
        im = np.clip(corr.imag, -1, 1)
        out = spec.step ** 2 / np.pi * (np.arcsin(re) + 1j * np.arcsin(im))
        out[0] = spec.step ** 2 / 2
        return out
    g = float(bussgang_gain(var_in, spec)[0])
    p_out = float(output_power(var_in, spec)[0])
    out = g ** 2 * var_in * corr
    out[0] = p_out
    return out


def pilot_model(pilots, prior_var, rho, bits=None, clip_prob=1e-4, num_antennas=1, spec="auto"):
    """Bussgang-MMSE estimator for the given pilots, prior and converter resolution."""
    U = pilots.num_users
    prior_var = _prior(prior_var, U)
    if rho <= 0:
        raise ValueError("rho must be positive")
    if isinstance(spec, str):
        spec = calibrated_spec(bits, 1 / num_antennas, clip_prob)
    power = rho * prior_var.sum() + 1
    agc = 1 / math.sqrt(num_antennas * power)
    gain = 1.0 if spec is None else float(bussgang_gain(1 / num_antennas, spec)[0])
    cross = math.sqrt(rho) * agc * gain * prior_var  # E[h_u r^H] = cross_u * phi_u^H
    regularized = False
    n_p = pilots.length

    if pilots.dft_index is not None:
        col = _output_cov_first_column(pilots, prior_var, rho, spec, num_antennas)
        eig = np.fft.fft(col).real[list(pilots.dft_index)]
        floor = 1e-12 * np.abs(np.fft.fft(col).real).max()
        if np.any(eig <= floor):
            eig = np.maximum(eig, floor)
            regularized = True
        weights = cross / eig
        mse = prior_var - cross ** 2 * n_p / eig
        return PilotModel(pilots, prior_var, rho, spec, agc, gain, weights,
                          np.maximum(mse, 0.0), regularized)

    # generic pilots: dense n_p x n_p algebra
    Phi = pilots.matrix
    C_y = rho * (Phi * prior_var[None, :]) @ Phi.conj().T + np.eye(n_p)
    C_z = agc ** 2 * C_y
    dist = distortion_cov(C_z, spec)
    C_r = dist.gain[:, None] * C_z * dist.gain[None, :] + dist.error_cov
    if np.linalg.cond(C_r) > 1e12:
        C_r = C_r + 1e-12 * np.trace(C_r).real / n_p * np.eye(n_p)
        regularized = True
    C_hr = cross[:, None] * Phi.conj().T  # U x n_p
    W = np.linalg.solve(C_r, C_hr.conj().T).conj().T
    mse = prior_var - np.einsum("ut,ut->u", W, C_hr.conj()).real
    return PilotModel(pilots, prior_var, rho, spec, agc, gain, W,
                      np.maximum(mse, 0.0), regularized, {"dense": True})


def pilot_observations(rng, H, model):
    """Quantized received pilots ``Q(a (sqrt(rho) H Phi^T + N))``, one row per antenna."""
    H = np.asarray(H)
    B = H.shape[0]
    n_p = model.pilots.length
    noise = (rng.standard_normal((B, n_p)) + 1j * rng.standard_normal((B, n_p))) / math.sqrt(2)
    Y = math.sqrt(model.rho) * (H @ model.pilots.matrix.T) + noise
    return quantize_complex(model.agc * Y, model.spec)


def bussgang_mmse_estimate(received, model, H_true=None):
    """Apply the estimator of ``model`` to quantized pilots ``received`` (``B x n_p``)."""
    R = np.asarray(received)
    if model.extra.get("dense"):
        H_hat = R @ model.weights.T
    else:
        H_hat = (R @ model.pilots.matrix.conj()) * model.weights[None, :]
    mse = None if H_true is None else empirical_mse(H_true, H_hat, model.prior_var)
    return EstimateReport(H_hat, mse, EstimationMethod.BUSSGANG_MMSE,
                          model.analytic_mse, model.regularized)


def empirical_mse(H_true, H_hat, prior_var=1.0):
    """Squared error per coefficient, normalized by the prior variance of its column."""
    H_true = np.asarray(H_true)
    v = _prior(prior_var, H_true.shape[1])
    err = np.abs(np.asarray(H_hat) - H_true) ** 2
    return float(np.sum(err) / (H_true.shape[0] * v.sum()))


def estimate_channel(rng, H, prior_var, rho, n_p, bits, clip_prob, model=None):
    """Send DFT pilots over ``H``, quantize, and return the Bussgang-MMSE estimate."""
    H = np.asarray(H)
    B, U = H.shape
    if model is None:
        model = pilot_model(dft_pilots(n_p, U), prior_var, rho, bits, clip_prob, B)
    return bussgang_mmse_estimate(pilot_observations(rng, H, model), model, H_true=H)


def monte_carlo_mse(rng, H_rows, model, max_elements=1 << 22):
    """Empirical estimator MSE over the rows of ``H_rows``.

    Rows are independent antenna observations, so many channel draws can
    be stacked into one tall matrix. Rows are processed in fixed-size
    chunks; the chunking depends only on the shapes, which keeps results
    reproducible for a given generator state.
    """
    H_rows = np.asarray(H_rows)
    rows = H_rows.shape[0]
    step = max(1, max_elements // model.pilots.length)
    err = 0.0
    for start in range(0, rows, step):
        H = H_rows[start:start + step]
        H_hat = bussgang_mmse_estimate(pilot_observations(rng, H, model), model).H_hat
        err += float(np.sum(np.abs(H_hat - H) ** 2))
    return float(err / (rows * model.prior_var.sum()))


def mse_1bit_closed_form(n_p, rho):
    """Single-user 1-bit Bussgang-MMSE error for ``n_p`` pilots at SNR ``rho``."""
    n_p = np.asarray(n_p, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    x = rho / (1 + rho)
    return 1 - x * n_p / (np.pi / 2 + (n_p - 1) * np.arcsin(x))


def mse_1bit_floor(rho):
    """Limit of :func:`mse_1bit_closed_form` as ``n_p`` grows without bound."""
    rho = np.asarray(rho, dtype=np.float64)
    x = rho / (1 + rho)
    return 1 - x / np.arcsin(x)


def mse_vs_snr_curve(pilot_lengths, rho_grid):
    """Closed-form 1-bit MSE on a grid, with the minimizing SNR per pilot length.

    Returns a list of dicts with keys ``n_p``, ``mse`` (array over
    ``rho_grid``), ``argmin_rho`` and ``min_mse``.
    """
    rho_grid = np.asarray(rho_grid, dtype=np.float64)
    rows = []
    for n_p in pilot_lengths:
        mse = mse_1bit_closed_form(n_p, rho_grid)
        i = int(np.argmin(mse))
        rows.append({"n_p": int(n_p), "mse": mse, "argmin_rho": float(rho_grid[i]),
                     "min_mse": float(mse[i])})
    return rows

