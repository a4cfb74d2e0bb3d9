"""Hockey face-off classification and post-face-off value metrics."""

__version__ = "0.1.0"
