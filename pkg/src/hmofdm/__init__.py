"""Beamforming-based CFO separation receiver for high-mobility OFDM with a large ULA."""

from hmofdm.config import ChannelProfile, ConfigError, OfdmConfig

__all__ = ["ChannelProfile", "ConfigError", "OfdmConfig"]
