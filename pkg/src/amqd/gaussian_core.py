"""Circular-symmetric complex Gaussian variables.

Variance convention used throughout the package: ``quad_variance`` is the
variance of each quadrature (real and imaginary part), so a sample ``z`` has
``E[|z|^2] = 2 * quad_variance``.

Draw sequence (part of the reproducibility contract): a source seeded with
``seed`` owns ``numpy.random.Generator(PCG64(seed))``.  Each call to
:meth:`GaussianSource.draw` with ``count`` requests one
``standard_normal((count, 2))`` block (ziggurat); column 0 is the position
quadrature, column 1 the momentum quadrature, both scaled by
``sqrt(quad_variance)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOG2E = np.log2(np.e)


@dataclass
class GaussianSource:
    quad_variance: float
    seed: int
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not self.quad_variance >= 0:
            raise ValueError(f"quad_variance must be >= 0, got {self.quad_variance}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.rng = np.random.Generator(np.random.PCG64(int(self.seed)))

    def standard(self, count: int) -> np.ndarray:
        """Unit per-quadrature complex normals, consuming one draw block."""
        q = self.rng.standard_normal((count, 2))
        return q[:, 0] + 1j * q[:, 1]

    def draw(self, count: int) -> np.ndarray:
        return np.sqrt(self.quad_variance) * self.standard(count)


def sample(source: GaussianSource, count: int) -> np.ndarray:
    """Draw ``count`` complex samples from ``source``.

    Returns a complex128 array; ``quad_variance == 0`` gives exact zeros.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    return source.draw(count)


def _require_positive(quad_variance):
    if not quad_variance > 0:
        raise ValueError(f"degenerate density: quad_variance must be > 0, got {quad_variance}")


def density(z, quad_variance: float):
    """Joint density of (Re z, Im z) for z ~ CN(0, 2*quad_variance)."""
    _require_positive(quad_variance)
    z = np.asarray(z)
    return np.exp(-np.abs(z) ** 2 / (2 * quad_variance)) / (2 * np.pi * quad_variance)


def magnitude_density(r, quad_variance: float):
    """Rayleigh density of |z|."""
    _require_positive(quad_variance)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("magnitude must be non-negative")
    return r / quad_variance * np.exp(-r**2 / (2 * quad_variance))


def squared_magnitude_density(s, quad_variance: float):
    # mean of |z|^2 is 2*quad_variance
    _require_positive(quad_variance)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("squared magnitude must be non-negative")
    mean = 2 * quad_variance
    return np.exp(-s / mean) / mean


def differential_entropy_complex(quad_variance: float) -> float:
    """Differential entropy of CN(0, 2*quad_variance) in bits."""
    if not quad_variance > 0:
        raise ValueError(f"quad_variance must be > 0, got {quad_variance}")
    return float(np.log2(np.pi * np.e * 2 * quad_variance))


def entropy_monte_carlo(samples, log_density) -> float:
    """Estimate differential entropy in bits as ``-mean(log2 f(sample))``.

    ``log_density`` returns natural-log densities.  Atoms of a discrete
    distribution carry ``+inf`` log density, giving ``-inf`` entropy.
    """
    logf = np.asarray(log_density(np.asarray(samples)), dtype=float)
    if np.any(np.isneginf(logf)):
        raise ValueError("sample outside the support of the density")
    if np.any(np.isposinf(logf)):
        return -np.inf
    return float(-np.mean(logf) * LOG2E)
