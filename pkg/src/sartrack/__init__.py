"""Shadow-based multi-object tracking toolkit for video SAR sequences."""

__version__ = "0.1.0"
