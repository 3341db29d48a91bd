"""Simulation and analysis of multicarrier multiuser quadrature allocation.

Gaussian-modulated continuous-variable signals are modelled as circular
symmetric complex Gaussian variables, spread over Gaussian subcarriers by a
unitary inverse DFT, sent through a bank of noisy sub-channels and decoded by
the forward DFT.
"""

__version__ = "0.1.0"
