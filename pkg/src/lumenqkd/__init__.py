"""Three-state decoy BB84 QKD simulator and side-channel analysis toolkit."""

__version__ = "0.1.0"
