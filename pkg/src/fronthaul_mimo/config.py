"""Scenario configuration, read from a flat JSON object.

SNRs are given in dB in the file and converted to linear scale here, once.
"""
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

__all__ = ["ConfigError", "SystemConfig", "parse_config", "config_from_dict", "antennas_for_resolution"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


CSI_CHOICES = ("perfect", "estimated", "both")
OUTAGE_MODES = ("pooled", "worst-user")


def antennas_for_resolution(fronthaul_rate, bits):
    """Largest antenna count whose fronthaul load ``2 B Q`` fits in ``fronthaul_rate``."""
    if bits < 1 or fronthaul_rate < 2 * bits:
        raise ValueError(f"fronthaul rate {fronthaul_rate} cannot carry even one {bits}-bit antenna")
    return int(fronthaul_rate) // (2 * int(bits))


@dataclass
class SystemConfig:
    fronthaul_rate: int = 512
    resolutions: list = field(default_factory=lambda: [1, 2, 3, 4, 5, 6, 7, 8])
    num_users: int = 8
    rho_ul_db: float = 5.0
    rho_dl_db: float = 15.0
    wavelength: float = 0.01
    aperture: float = 1.28
    d_min: float = 50.0
    d_max: float = 150.0
    phi_min: float = 30.0
    phi_max: float = 150.0
    pilot_len: int = 100
    clip_prob: float = 1e-4
    outage_level: float = 0.1
    outage_mode: str = "pooled"
    trials: int = 500
    seed: int = 1
    csi: str = "both"
    combiner: str = "mr"
    precoder: str = "mr"
    workers: int = 1
    # channel-estimation MSE curves (i.i.d. Rayleigh)
    mse_num_antennas: int = 100
    mse_num_users: int = 10
    mse_pilot_lengths: list = field(default_factory=lambda: [10, 100, 1000, 10000])
    mse_rho_db: list = field(default_factory=lambda: [10.0])
    mse_resolutions: list = field(default_factory=lambda: [1, 2, 3, 4, "inf"])
    mse_realizations: int = 20
    # linear SNRs, filled in from the dB values at construction
    rho_ul: float = field(init=False, repr=False)
    rho_dl: float = field(init=False, repr=False)
    mse_rho: list = field(init=False, repr=False)

    def __post_init__(self):
        self.validate()
        self.rho_ul = 10 ** (self.rho_ul_db / 10)
        self.rho_dl = 10 ** (self.rho_dl_db / 10)
        self.mse_rho = [10 ** (r / 10) for r in self.mse_rho_db]

    @property
    def csi_modes(self):
        return ["perfect", "estimated"] if self.csi == "both" else [self.csi]

    @property
    def mse_bits(self):
        """``mse_resolutions`` with ``"inf"`` mapped to ``None`` (ideal converter)."""
        return [None if q == "inf" else int(q) for q in self.mse_resolutions]

    def antennas(self, bits):
        return antennas_for_resolution(self.fronthaul_rate, bits)

    def validate(self):
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(f"{key}: {msg}")

        need(_is_int(self.fronthaul_rate) and self.fronthaul_rate >= 2, "fronthaul_rate", "must be an integer >= 2")
        need(_is_int(self.num_users) and self.num_users >= 1, "num_users", "must be an integer >= 1")
        need(isinstance(self.resolutions, list) and self.resolutions, "resolutions", "must be a non-empty list")
        for i, q in enumerate(self.resolutions):
            key = f"resolutions[{i}]"
            need(_is_int(q) and q >= 1, key, f"must be an integer >= 1, got {q!r}")
            b = self.fronthaul_rate // (2 * q)
            need(b >= self.num_users, key,
                 f"Q={q} leaves B={b} antennas under fronthaul_rate={self.fronthaul_rate}, "
                 f"fewer than num_users={self.num_users}")
        for key in ("rho_ul_db", "rho_dl_db", "wavelength", "aperture", "d_min", "d_max",
                    "phi_min", "phi_max", "clip_prob", "outage_level"):
            need(_is_real(getattr(self, key)), key, "must be a finite number")
        need(self.wavelength > 0, "wavelength", "must be positive")
        need(self.aperture > 0, "aperture", "must be positive")
        need(0 < self.d_min <= self.d_max, "d_min", "need 0 < d_min <= d_max")
        need(self.phi_min < self.phi_max, "phi_min", "need phi_min < phi_max")
        need(0 < self.clip_prob < 1, "clip_prob", "must lie in (0, 1)")
        need(0 < self.outage_level < 1, "outage_level", "must lie in (0, 1)")
        need(self.outage_mode in OUTAGE_MODES, "outage_mode", f"must be one of {OUTAGE_MODES}")
        need(_is_int(self.trials) and self.trials >= 1, "trials", "must be an integer >= 1")
        need(_is_int(self.seed) and 0 <= self.seed < 2 ** 64, "seed", "must be an unsigned 64-bit integer")
        need(_is_int(self.pilot_len) and self.pilot_len >= self.num_users, "pilot_len",
             "must be an integer >= num_users")
        need(self.csi in CSI_CHOICES, "csi", f"must be one of {CSI_CHOICES}")
        need(self.combiner in ("mr", "da-mmse"), "combiner", "must be 'mr' or 'da-mmse'")
        need(self.precoder == "mr", "precoder", "only 'mr' is supported")
        need(_is_int(self.workers) and self.workers >= 1, "workers", "must be an integer >= 1")
        need(_is_int(self.mse_num_antennas) and self.mse_num_antennas >= 1, "mse_num_antennas", "must be >= 1")
        need(_is_int(self.mse_num_users) and self.mse_num_users >= 1, "mse_num_users", "must be >= 1")
        need(_is_int(self.mse_realizations) and self.mse_realizations >= 1, "mse_realizations", "must be >= 1")
        for i, n in enumerate(self.mse_pilot_lengths):
            need(_is_int(n) and n >= self.mse_num_users, f"mse_pilot_lengths[{i}]",
                 "must be an integer >= mse_num_users")
        for i, r in enumerate(self.mse_rho_db):
            need(_is_real(r), f"mse_rho_db[{i}]", "must be a finite number")
        for i, q in enumerate(self.mse_resolutions):
            need(q == "inf" or (_is_int(q) and q >= 1), f"mse_resolutions[{i}]",
                 "must be an integer >= 1 or \"inf\"")

    def to_dict(self):
        d = asdict(self)
        del d["rho_ul"], d["rho_dl"], d["mse_rho"]
        return d

    def digest(self):
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


_FIELDS = {f.name for f in fields(SystemConfig) if f.init}


def config_from_dict(data, **overrides):
    """Build a validated config from a mapping; ``None`` overrides are ignored."""
    if not isinstance(data, dict):
        raise ConfigError("<root>: configuration must be a JSON object")
    merged = dict(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(merged) - _FIELDS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    return SystemConfig(**merged)


def parse_config(path=None, **overrides):
    """Read a JSON config file; a missing path or an empty file gives the defaults."""
    data = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"<root>: invalid JSON ({exc})") from None
    return config_from_dict(data, **overrides)
