"""Free-space QKD link simulator: channel loss, detection and finite-key rates."""

__version__ = "0.1.0"
