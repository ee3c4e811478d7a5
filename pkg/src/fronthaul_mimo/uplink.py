"""Quantized uplink: AGC, Bussgang linearization, combining, SINDR and GMI rates.

Diagonal matrices (AGC ``A``, Bussgang gain ``G``) are passed around as 1-D
arrays of their diagonal entries. The per-user SNR may be a scalar or a
length-``U`` vector; path-loss differences can equally be folded into the
columns of ``H`` with a common scalar SNR.

Rates are in bits per channel use.
"""
import math
from dataclasses import dataclass

import numpy as np

from .quantizer import DistortionModel, calibrated_spec, distortion_cov

__all__ = [
    "LinearizedUplink",
    "GmiTerms",
    "receive_cov",
    "agc_matrix",
    "linearize_uplink",
    "mr_combiner",
    "da_mmse_combiner",
    "uplink_sindr",
    "uplink_rate_perfect",
    "effective_gains",
    "gmi_terms",
    "gmi_objective",
    "uplink_gmi",
    "uplink_trial",
]

LN2 = math.log(2)


def _user_snr(rho, U):
    rho = np.asarray(rho, dtype=np.float64)
    if rho.ndim == 0:
        return np.full(U, float(rho))
    if rho.shape != (U,):
        raise ValueError(f"rho must be a scalar or have shape ({U},), got {rho.shape}")
    return rho


def receive_cov(H, rho):
    """``C_y = H diag(rho) H^H + I``."""
    H = np.asarray(H)
    rho = _user_snr(rho, H.shape[1])
    return (H * rho[None, :]) @ H.conj().T + np.eye(H.shape[0])


def agc_matrix(C_y):
    """AGC diagonal ``(1/sqrt(B)) diag(C_y)**(-1/2)``: every antenna gets power ``1/B``."""
    d = np.asarray(C_y).diagonal().real
    if np.any(d <= 0):
        raise ValueError("C_y must have a strictly positive diagonal")
    return 1 / np.sqrt(d.shape[0] * d)


@dataclass
class LinearizedUplink:
    agc: np.ndarray
    distortion: DistortionModel
    input_cov: np.ndarray
    spec: object = None

    @property
    def gain(self):
        return self.distortion.gain

    @property
    def error_cov(self):
        return self.distortion.error_cov


def linearize_uplink(H, rho, bits, clip_prob, check=False):
    """AGC plus Bussgang model of the ADC array for the true channel ``H``.

    The step size is calibrated for the post-AGC per-antenna power ``1/B``.
    ``bits=None`` gives ideal converters.
    """
    C_y = receive_cov(H, rho)
    a = agc_matrix(C_y)
    quant_in = np.outer(a, a) * C_y
    B = C_y.shape[0]
    spec = calibrated_spec(bits, 1 / B, clip_prob)
    return LinearizedUplink(a, distortion_cov(quant_in, spec, check=check), C_y, spec)


def mr_combiner(H_hat, agc, gain):
    """Maximum-ratio combiner ``W = G A H_hat``."""
    return (np.asarray(gain) * np.asarray(agc))[:, None] * np.asarray(H_hat)


def da_mmse_combiner(H_hat, agc, gain, C_e, rho):
    """Distortion-aware MMSE combiner; maximizes the SINDR evaluated on ``H_hat``.

    Returns ``(W, regularized)`` where ``regularized`` tells whether a
    diagonal load was needed to invert the covariance.
    """
    H_hat = np.asarray(H_hat)
    B, U = H_hat.shape
    rho = _user_snr(rho, U)
    ga = np.asarray(gain) * np.asarray(agc)
    eff = ga[:, None] * H_hat
    total = (eff * rho[None, :]) @ eff.conj().T + np.asarray(C_e) + np.diag(ga ** 2)
    regularized = False
    if np.linalg.cond(total) > 1e12:
        total = total + 1e-12 * np.trace(total).real / B * np.eye(B)
        regularized = True
    W = np.empty_like(eff)
    for u in range(U):
        # remove user u's own contribution to get its interference covariance
        cov_u = total - rho[u] * np.outer(eff[:, u], eff[:, u].conj())
        W[:, u] = np.linalg.solve(cov_u, eff[:, u])
    return W, regularized


def _coupling(H, W, agc, gain):
    """``M[u, v] = w_u^H G A h_v``."""
    ga = np.asarray(gain) * np.asarray(agc)
    return np.asarray(W).conj().T @ (ga[:, None] * np.asarray(H))


def _noise_distortion(W, agc, gain, C_e):
    """Per-user ``||A G w_u||^2 + w_u^H C_e w_u``."""
    W = np.asarray(W)
    ga = np.asarray(gain) * np.asarray(agc)
    noise = np.sum(np.abs(ga[:, None] * W) ** 2, axis=0)
    dist = np.einsum("bu,bc,cu->u", W.conj(), np.asarray(C_e), W).real
    return noise + dist


def uplink_sindr(H, W, agc, gain, C_e, rho):
    """Per-user SINDR of the linearized quantized uplink for the true channel ``H``."""
    H = np.asarray(H)
    U = H.shape[1]
    rho = _user_snr(rho, U)
    M = _coupling(H, W, agc, gain)
    power = np.abs(M) ** 2 * rho[None, :]
    signal = np.diag(power).copy()
    interference = power.sum(axis=1) - signal
    denom = interference + _noise_distortion(W, agc, gain, C_e)
    if np.any(denom <= 0):
        raise ValueError("SINDR denominator must be positive (zero combiner column?)")
    return signal / denom


def uplink_rate_perfect(sindr):
    """``log2(1 + sindr)``."""
    return np.log1p(np.asarray(sindr, dtype=np.float64)) / LN2


@dataclass
class GmiTerms:
    """Scalar channel seen by the mismatched decoder of one user.

    ``g`` is the true effective gain, ``g_hat`` the gain the decoder assumes
    and ``sigma2`` the interference-plus-noise-plus-distortion power. ``s``
    is the optimal GMI parameter, ``None`` when ``b == 0``.
    """

    g: complex
    g_hat: complex
    sigma2: float
    rho: float
    a: float
    b: float
    c: float
    s: float | None


def _optimal_s(g, g_hat, sigma2, rho):
    # s = (b - 2c + sqrt(b^2 + 4ac)) / (2bc), rewritten so that the
    # difference sqrt(b^2 + 4ac) - 2c is formed without cancellation.
    b = abs(g_hat) ** 2 * rho
    c = abs(g - g_hat) ** 2 * rho + sigma2
    a = abs(g) ** 2 * rho + sigma2
    if b <= 0:
        return a, b, c, None
    delta = (abs(g) ** 2 - abs(g - g_hat) ** 2) * rho  # a - c
    root = math.sqrt(b * b + 4 * a * c)
    sb = (b + (b * b + 4 * c * delta) / (root + 2 * c)) / (2 * c)
    return a, b, c, max(sb, 0.0) / b


def effective_gains(H, H_hat, W, agc, gain, C_e, rho, u):
    """Decoder-side scalar channel of user ``u`` for combiner ``W`` built from ``H_hat``."""
    H = np.asarray(H)
    U = H.shape[1]
    rho = _user_snr(rho, U)
    W = np.asarray(W)
    ga = np.asarray(gain) * np.asarray(agc)
    gw = ga * W[:, u]  # G A w_u (both diagonal and real)
    row = gw.conj() @ H
    g = complex(row[u])
    g_hat = complex(gw.conj() @ np.asarray(H_hat)[:, u])
    others = np.arange(U) != u
    sigma2 = float(np.sum(rho[others] * np.abs(row[others]) ** 2)
                   + _noise_distortion(W[:, [u]], agc, gain, C_e)[0])
    return gmi_terms(g, g_hat, sigma2, rho[u])


def gmi_terms(g, g_hat, sigma2, rho):
    """:class:`GmiTerms` with the optimal ``s`` for a given scalar channel."""
    a, b, c, s = _optimal_s(g, g_hat, sigma2, rho)
    return GmiTerms(complex(g), complex(g_hat), float(sigma2), float(rho), a, b, c, s)


def gmi_objective(s, g, g_hat, sigma2, rho):
    """GMI in nats as a function of the free parameter ``s >= 0``."""
    s = np.asarray(s, dtype=np.float64)
    b = abs(g_hat) ** 2 * rho
    a = abs(g) ** 2 * rho + sigma2
    c = abs(g - g_hat) ** 2 * rho + sigma2
    return -s * c + s * a / (1 + s * b) + np.log1p(s * b)


def uplink_gmi(terms, rho=None):
    """GMI rate (bits) of the scaled nearest-neighbor decoder, clamped at zero."""
    t = terms
    if rho is None:
        rho = t.rho
    if t.s is None or t.s <= 0 or rho <= 0:
        return 0.0
    x = t.s * abs(t.g_hat) ** 2 * rho
    delta = (abs(t.g) ** 2 - abs(t.g - t.g_hat) ** 2) * rho
    c = abs(t.g - t.g_hat) ** 2 * rho + t.sigma2
    # -s c + s a / (1 + x) == s (a - c - c x) / (1 + x)
    nats = t.s * (delta - c * x) / (1 + x) + math.log1p(x)
    return max(nats, 0.0) / LN2


def uplink_trial(H_true, H_hat, rho, bits, clip_prob, combiner="mr"):
    """Per-user uplink rates for one realization.

    The AGC and distortion statistics come from the true channel; the
    combiner and the decoder's gain from ``H_hat``. With ``H_hat is H_true``
    the result is the perfect-CSI rate ``log2(1 + SINDR)``.
    """
    H_true = np.asarray(H_true)
    lin = linearize_uplink(H_true, rho, bits, clip_prob)
    if combiner == "mr":
        W = mr_combiner(H_hat, lin.agc, lin.gain)
    elif combiner == "da-mmse":
        W, _ = da_mmse_combiner(H_hat, lin.agc, lin.gain, lin.error_cov, rho)
    else:
        raise ValueError(f"unknown combiner {combiner!r}")
    U = H_true.shape[1]
    if H_hat is H_true:
        return uplink_rate_perfect(uplink_sindr(H_true, W, lin.agc, lin.gain, lin.error_cov, rho))
    return np.array([
        uplink_gmi(effective_gains(H_true, H_hat, W, lin.agc, lin.gain, lin.error_cov, rho, u))
        for u in range(U)
    ])
