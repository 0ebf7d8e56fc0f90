"""Simulator and estimation toolkit for holographic storage of
polarization-entangled photon pairs in a multimode atomic memory."""

__version__ = "0.1.0"
