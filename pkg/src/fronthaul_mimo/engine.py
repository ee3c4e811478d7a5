"""Monte Carlo outage rates and the fronthaul-constrained (Q, B) sweep.

Random streams are derived from ``(seed, trial)`` for the user drop and
from ``(seed, trial, Q)`` for pilot noise. A trial's result therefore
depends only on its own indices, not on execution order or on how many
worker processes are used. All resolutions in one sweep see the same drops.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, normalized_los_channel, sample_drop
from .config import antennas_for_resolution
from .downlink import downlink_trial
from .estimation import (
    dft_pilots,
    estimate_channel,
    monte_carlo_mse,
    mse_1bit_closed_form,
    pilot_model,
)
from .uplink import uplink_trial

__all__ = [
    "TrialError",
    "TrialRecord",
    "SweepRow",
    "antennas_for_resolution",
    "trial_rngs",
    "run_trial",
    "run_trials",
    "outage_rate",
    "bidirectional_outage_rate",
    "fronthaul_sweep",
    "MseRow",
    "mse_curve",
]

_DROP_STREAM = 0
_NOISE_STREAM = 1
_MSE_CHANNEL_STREAM = 2
_MSE_NOISE_STREAM = 3


class TrialError(RuntimeError):
    """A Monte Carlo trial failed; the sweep is aborted rather than skipping it."""


@dataclass
class TrialRecord:
    drop_id: int
    ul: np.ndarray
    dl: np.ndarray

    @property
    def bidir(self):
        return np.minimum(self.ul, self.dl)


@dataclass
class SweepRow:
    q: int
    b: int
    csi_mode: str
    rho_ul_db: float
    rho_dl_db: float
    ul_rate: float
    dl_rate: float
    bidir_rate: float
    trials: int
    seed: int
    samples: int = 0


def trial_rngs(seed, trial, bits):
    """Generators for the user drop and for the pilot noise of one trial.

    ``bits=None`` (ideal converters) uses key 0, which no real resolution has.
    """
    bits = 0 if bits is None else int(bits)
    drop = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_DROP_STREAM, trial)))
    noise = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_NOISE_STREAM, trial, bits)))
    return drop, noise


def run_trial(config, bits, num_antennas, trial, csi_mode):
    """One user drop: LOS channel, CSI acquisition, uplink GMI and downlink rates."""
    drop_rng, noise_rng = trial_rngs(config.seed, trial, bits)
    drop = sample_drop(drop_rng, config.num_users, config.d_min, config.d_max,
                       config.phi_min, config.phi_max, config.wavelength)
    geometry = ArrayGeometry(num_antennas, config.aperture, config.wavelength)
    H = normalized_los_channel(geometry, drop).H
    if csi_mode == "perfect":
        H_hat = H
    elif csi_mode == "estimated":
        model = pilot_model(dft_pilots(config.pilot_len, config.num_users), drop.snr_scale,
                            config.rho_ul, bits, config.clip_prob, num_antennas)
        H_hat = estimate_channel(noise_rng, H, drop.snr_scale, config.rho_ul, config.pilot_len,
                                 bits, config.clip_prob, model=model).H_hat
    else:
        raise ValueError(f"unknown csi_mode {csi_mode!r}")
    ul = uplink_trial(H, H_hat, config.rho_ul, bits, config.clip_prob, combiner=config.combiner)
    dl = downlink_trial(H, H_hat, config.rho_dl, bits, config.clip_prob)
    record = TrialRecord(trial, np.asarray(ul, dtype=np.float64), np.asarray(dl, dtype=np.float64))
    if not (np.all(np.isfinite(record.ul)) and np.all(np.isfinite(record.dl))
            and np.all(record.ul >= 0) and np.all(record.dl >= 0)):
        raise TrialError(f"trial {trial} (Q={bits}, {csi_mode}) produced invalid rates")
    return record


def _run_chunk(config, bits, num_antennas, trials, csi_mode):
    out = []
    for t in trials:
        try:
            out.append(run_trial(config, bits, num_antennas, t, csi_mode))
        except TrialError:
            raise
        except Exception as exc:
            raise TrialError(f"trial {t} (Q={bits}, {csi_mode}) failed: {exc}") from exc
    return out


def run_trials(config, bits, csi_mode, workers=1, executor=None):
    """All ``config.trials`` drops for one resolution, returned in trial order."""
    B = antennas_for_resolution(config.fronthaul_rate, bits)
    indices = list(range(config.trials))
    if executor is None or workers <= 1:
        return _run_chunk(config, bits, B, indices, csi_mode)
    size = math.ceil(len(indices) / (4 * workers))
    chunks = [indices[i:i + size] for i in range(0, len(indices), size)]
    futures = [executor.submit(_run_chunk, config, bits, B, c, csi_mode) for c in chunks]
    records = []
    for f in futures:  # submission order == trial order
        records.extend(f.result())
    return records


def outage_rate(samples, eps):
    """Largest rate ``R`` with at most a fraction ``eps`` of samples strictly below it.

    This is the order statistic of (0-based) rank ``floor(eps * N)``.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    if x.size == 0:
        raise ValueError("outage_rate needs at least one sample")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    k = int(math.floor(eps * x.size + 1e-9))
    return float(x[min(k, x.size - 1)])


def _samples(records, attr, mode):
    per_drop = [getattr(r, attr) for r in records]
    if mode == "pooled":
        return np.concatenate(per_drop)
    if mode == "worst-user":
        return np.array([x.min() for x in per_drop])
    raise ValueError(f"unknown outage mode {mode!r}")


def bidirectional_outage_rate(records, eps, mode="pooled"):
    """Outage rate of ``min(UL, DL)``, by default pooled over users and drops."""
    if not records:
        raise ValueError("bidirectional_outage_rate needs at least one record")
    return outage_rate(_samples(records, "bidir", mode), eps)


def _aggregate(config, bits, csi_mode, records):
    mode = config.outage_mode
    ul = _samples(records, "ul", mode)
    dl = _samples(records, "dl", mode)
    expected = config.trials * (config.num_users if mode == "pooled" else 1)
    if ul.size != expected or dl.size != expected:
        raise TrialError(f"expected {expected} samples, got {ul.size}/{dl.size}")
    eps = config.outage_level
    B = antennas_for_resolution(config.fronthaul_rate, bits)
    assert 2 * B * bits <= config.fronthaul_rate
    return SweepRow(
        q=int(bits), b=B, csi_mode=csi_mode,
        rho_ul_db=float(config.rho_ul_db), rho_dl_db=float(config.rho_dl_db),
        ul_rate=outage_rate(ul, eps), dl_rate=outage_rate(dl, eps),
        bidir_rate=bidirectional_outage_rate(records, eps, mode),
        trials=config.trials, seed=config.seed, samples=int(ul.size),
    )


def fronthaul_sweep(config, csi_modes=None, workers=None, progress=None):
    """One :class:`SweepRow` per (resolution, CSI mode), in config order."""
    csi_modes = config.csi_modes if csi_modes is None else list(csi_modes)
    workers = config.workers if workers is None else workers
    rows = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for bits in config.resolutions:
            for mode in csi_modes:
                records = run_trials(config, bits, mode, workers, executor)
                rows.append(_aggregate(config, bits, mode, records))
                if progress is not None:
                    progress(rows[-1])
    finally:
        if executor is not None:
            executor.shutdown()
    return rows


@dataclass
class MseRow:
    mode: str
    q: str
    n_p: int
    rho_db: float
    mse_analytic: float | None
    mse_empirical: float


def mse_curve(config, progress=None):
    """Bussgang-MMSE estimation error on i.i.d. Rayleigh channels.

    Every (resolution, SNR, pilot length) row reuses the same channel draws,
    so differences between rows are not masked by channel sampling noise.
    ``mse_analytic`` holds the single-user 1-bit closed form and is ``None``
    when it does not apply.
    """
    B, U = config.mse_num_antennas, config.mse_num_users
    rows_total = B * config.mse_realizations
    h_rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(_MSE_CHANNEL_STREAM,)))
    H = (h_rng.standard_normal((rows_total, U)) + 1j * h_rng.standard_normal((rows_total, U))) / math.sqrt(2)
    out = []
    for qi, bits in enumerate(config.mse_bits):
        for ri, (rho_db, rho) in enumerate(zip(config.mse_rho_db, config.mse_rho)):
            for n_p in config.mse_pilot_lengths:
                model = pilot_model(dft_pilots(n_p, U), 1.0, rho, bits, config.clip_prob, B)
                rng = np.random.default_rng(np.random.SeedSequence(
                    config.seed, spawn_key=(_MSE_NOISE_STREAM, qi, ri, int(n_p))))
                empirical = monte_carlo_mse(rng, H, model)
                analytic = float(mse_1bit_closed_form(n_p, rho)) if bits == 1 and U == 1 else None
                out.append(MseRow("ideal" if bits is None else "quantized",
                                  "inf" if bits is None else str(bits), int(n_p), float(rho_db),
                                  analytic, empirical))
                if progress is not None:
                    progress(out[-1])
    return out
