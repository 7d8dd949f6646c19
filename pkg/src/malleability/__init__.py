"""Sample-to-sample fluctuations of phase synchronization in finite Kuramoto rings."""

__version__ = "0.1.0"
