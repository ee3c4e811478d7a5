"""Channel realizations: far-field ULA line-of-sight and i.i.d. Rayleigh."""
import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArrayGeometry",
    "UserDrop",
    "ChannelModel",
    "ChannelRealization",
    "average_distance",
    "free_space_pathloss",
    "sample_drop",
    "steering_matrix",
    "los_channel",
    "rayleigh_channel",
    "normalized_los_channel",
]


@dataclass(frozen=True)
class ArrayGeometry:
    """ULA with ``num_antennas`` elements spread over a fixed ``aperture`` (meters)."""

    num_antennas: int
    aperture: float
    wavelength: float

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be >= 1")
        if not (self.aperture > 0 and self.wavelength > 0):
            raise ValueError("aperture and wavelength must be positive")

    @property
    def spacing_wavelengths(self):
        return self.aperture / (self.num_antennas * self.wavelength)


@dataclass
class UserDrop:
    """One placement of all users.

    ``distance`` in meters, ``azimuth`` in degrees, ``pathloss`` linear, and
    ``snr_scale = (d_avg / d)**2``, the SNR of each user relative to a user
    at the average distance.
    """

    distance: np.ndarray
    azimuth: np.ndarray
    pathloss: np.ndarray
    snr_scale: np.ndarray

    @property
    def num_users(self):
        return self.distance.shape[0]


class ChannelModel(enum.Enum):
    LOS_ULA = "los-ula"
    IID_RAYLEIGH = "iid-rayleigh"


@dataclass
class ChannelRealization:
    H: np.ndarray
    drop: UserDrop | None
    model: ChannelModel


def average_distance(d_min, d_max):
    """Mean distance of a user drawn uniformly over the annulus ``[d_min, d_max]``."""
    if not 0 < d_min <= d_max:
        raise ValueError("need 0 < d_min <= d_max")
    # (2/3)(b^3 - a^3)/(b^2 - a^2) with the common factor (b - a) cancelled
    a, b = float(d_min), float(d_max)
    return 2 / 3 * (a * a + a * b + b * b) / (a + b)


def free_space_pathloss(d, wavelength):
    """Friis gain ``(wavelength / (4 pi d))**2``."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return (wavelength / (4 * np.pi * d)) ** 2


def sample_drop(rng, num_users, d_min, d_max, phi_min, phi_max, wavelength=0.01):
    """Place ``num_users`` users uniformly in area over an annular sector."""
    if not (0 < d_min <= d_max):
        raise ValueError(f"invalid radii: d_min={d_min}, d_max={d_max}")
    if not phi_min < phi_max:
        raise ValueError(f"invalid azimuth range: ({phi_min}, {phi_max})")
    if num_users < 1:
        raise ValueError("num_users must be >= 1")
    u = rng.random(num_users)
    d = np.sqrt(d_min ** 2 + u * (d_max ** 2 - d_min ** 2))
    # 1 - random() lies in (0, 1], so phi_min itself is never drawn
    phi = phi_min + (phi_max - phi_min) * (1 - rng.random(num_users))
    d_avg = average_distance(d_min, d_max)
    return UserDrop(
        distance=d,
        azimuth=phi,
        pathloss=free_space_pathloss(d, wavelength),
        snr_scale=(d_avg / d) ** 2,
    )


def steering_matrix(num_antennas, spacing_wavelengths, azimuth_deg):
    """Unit-modulus far-field ULA responses, one column per azimuth (degrees)."""
    b = np.arange(num_antennas)[:, None]
    cos_phi = np.cos(np.deg2rad(np.asarray(azimuth_deg, dtype=np.float64)))[None, :]
    return np.exp(2j * np.pi * spacing_wavelengths * b * cos_phi)


def los_channel(geometry, drop):
    """Physical LOS channel: column ``u`` is ``sqrt(pathloss_u)`` times the steering vector."""
    a = steering_matrix(geometry.num_antennas, geometry.spacing_wavelengths, drop.azimuth)
    return ChannelRealization(a * np.sqrt(drop.pathloss)[None, :], drop, ChannelModel.LOS_ULA)


def normalized_los_channel(geometry, drop):
    """LOS channel with the path loss expressed relative to the average distance.

    Column ``u`` has squared norm ``B * snr_scale_u``; multiplying by the
    nominal SNR then gives each user's actual SNR.
    """
    a = steering_matrix(geometry.num_antennas, geometry.spacing_wavelengths, drop.azimuth)
    return ChannelRealization(a * np.sqrt(drop.snr_scale)[None, :], drop, ChannelModel.LOS_ULA)


def rayleigh_channel(rng, num_antennas, num_users):
    """i.i.d. CN(0, 1) entries."""
    if num_antennas < 1 or num_users < 1:
        raise ValueError("dimensions must be >= 1")
    shape = (num_antennas, num_users)
    H = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    return ChannelRealization(H, None, ChannelModel.IID_RAYLEIGH)
