"""Unitary DFT pair standing in for the CV Fourier transform.

Both directions carry a ``1/sqrt(n)`` factor, so Parseval holds with no
scale factor.  The forward transform uses the ``exp(-2j*pi*i*k/n)`` kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpectralConvention:
    size: int
    normalization: str = "unitary"

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("transform size must be positive")
        if self.normalization != "unitary":
            raise ValueError("only the unitary normalization is supported")


def _check(x, convention):
    x = np.asarray(x, dtype=complex)
    if convention is not None and x.shape[-1] != convention.size:
        raise ValueError(
            f"input dimension {x.shape[-1]} does not match transform size {convention.size}"
        )
    if x.ndim == 0 or x.shape[-1] < 1:
        raise ValueError("input must be a non-empty vector")
    return x


def idft(x, convention: SpectralConvention | None = None) -> np.ndarray:
    """Unitary inverse DFT along the last axis (encoder side)."""
    return np.fft.ifft(_check(x, convention), norm="ortho")


def dft(x, convention: SpectralConvention | None = None) -> np.ndarray:
    """Unitary forward DFT along the last axis (decoder side)."""
    return np.fft.fft(_check(x, convention), norm="ortho")


def subcarrier_energy(block) -> float:
    block = np.asarray(block)
    if block.size == 0:
        raise ValueError("empty block")
    return float(np.sum(np.abs(block) ** 2))
