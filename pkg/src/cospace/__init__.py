"""Shared-subspace learning from paired hyperspectral-multispectral samples."""

__version__ = "0.1.0"
