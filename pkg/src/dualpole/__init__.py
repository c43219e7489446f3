"""Design and analysis of dual-periodically poled backward-wave photon-pair sources."""

__version__ = "0.1.0"
