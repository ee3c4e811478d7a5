"""Massive MIMO link-level simulator with low-resolution converters and a rate-limited fronthaul."""
from ._accel import ENABLE_NUMBA
from .config import ConfigError, SystemConfig, parse_config
from .quantizer import QuantizerSpec, calibrated_spec, quantize_complex

__version__ = "0.1.0"

__all__ = [
    "ENABLE_NUMBA",
    "ConfigError",
    "SystemConfig",
    "parse_config",
    "QuantizerSpec",
    "calibrated_spec",
    "quantize_complex",
    "__version__",
]
