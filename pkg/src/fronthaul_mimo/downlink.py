"""Quantized downlink: MR precoding, DAC linearization and SINDR.

The DAC output ``power_norm * Q(P s)``, ``s ~ CN(0, I_U)``, has unit total
power whatever the resolution. The stored gain and distortion covariance
already include ``power_norm``. In the SINDR the SNR ``rho`` multiplies
the signal and interference terms; the distortion term enters unscaled
unless ``scale_distortion=True`` is requested.
"""
import math
from dataclasses import dataclass

import numpy as np

from .quantizer import calibrated_spec, distortion_cov

__all__ = [
    "DownlinkModel",
    "mr_precoder",
    "downlink_linearize",
    "downlink_sindr",
    "downlink_rate",
    "downlink_trial",
]


@dataclass
class DownlinkModel:
    precoder: np.ndarray
    gain: np.ndarray
    error_cov: np.ndarray
    power_norm: float
    spec: object = None

    def transmit_power(self):
        """``trace(G P P^H G^H + C_e)``; equals 1 by construction."""
        gp = self.gain[:, None] * self.precoder
        return float(np.sum(np.abs(gp) ** 2) + np.trace(self.error_cov).real)


def mr_precoder(H_hat):
    """Conjugate (matched) precoder ``H_hat^* / ||H_hat||_F``."""
    H_hat = np.asarray(H_hat)
    norm = np.linalg.norm(H_hat)
    if norm == 0:
        raise ValueError("cannot build a precoder from an all-zero channel")
    return H_hat.conj() / norm


def downlink_linearize(P, bits, clip_prob, check=False):
    """Bussgang model of the DAC array driven by ``P s``.

    A single step size is calibrated to the mean per-antenna power
    ``||P||_F^2 / B``; per-antenna gains follow from each antenna's own
    variance.
    """
    P = np.asarray(P, dtype=np.complex128)
    C_x = P @ P.conj().T
    var = C_x.diagonal().real
    B = var.shape[0]
    spec = calibrated_spec(bits, float(var.mean()), clip_prob)
    dist = distortion_cov(C_x, spec, check=check)
    total = float(np.sum(dist.gain ** 2 * var) + np.trace(dist.error_cov).real)
    power_norm = 1 / math.sqrt(total)
    return DownlinkModel(
        precoder=P,
        gain=power_norm * dist.gain,
        error_cov=power_norm ** 2 * dist.error_cov,
        power_norm=power_norm,
        spec=spec,
    )


def downlink_sindr(H, model, rho, scale_distortion=False):
    """Per-user downlink SINDR for the true channel ``H`` (columns ``h_u``).

    ``gamma_u = rho |h_u^T G p_u|^2 / (rho sum_{v!=u} |h_u^T G p_v|^2
    + h_u^T C_e h_u^* + 1)``. With ``scale_distortion`` the distortion
    term is multiplied by ``rho`` as well, i.e. treated as part of a
    transmit signal of power ``rho``.
    """
    H = np.asarray(H)
    U = H.shape[1]
    rho = np.asarray(rho, dtype=np.float64)
    rho = np.full(U, float(rho)) if rho.ndim == 0 else rho
    M = H.T @ (model.gain[:, None] * model.precoder)
    power = np.abs(M) ** 2
    signal = np.diag(power).copy()
    interference = power.sum(axis=1) - signal
    distortion = np.einsum("bu,bc,cu->u", H, model.error_cov, H.conj()).real
    if scale_distortion:
        distortion = rho * distortion
    return rho * signal / (rho * interference + distortion + 1)


def downlink_rate(sindr):
    """``log2(1 + sindr)``."""
    return np.log1p(np.asarray(sindr, dtype=np.float64)) / math.log(2)


def downlink_trial(H_true, H_hat, rho, bits, clip_prob, scale_distortion=False):
    """Per-user downlink rates with the MR precoder built from ``H_hat``."""
    model = downlink_linearize(mr_precoder(H_hat), bits, clip_prob)
    return downlink_rate(downlink_sindr(H_true, model, rho, scale_distortion))
