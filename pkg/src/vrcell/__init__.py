"""System-level simulation of cellular-connected VR downlink delivery."""

__version__ = "0.1.0"
