"""Bank of Gaussian sub-channels and AMQD block transmission."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gaussian_core import GaussianSource
from .spectral import dft, idft

_TBOUND = 1 / np.sqrt(2)


@dataclass(frozen=True)
class Transmittance:
    re: float
    im: float

    def __post_init__(self):
        for part, v in (("re", self.re), ("im", self.im)):
            if not 0 <= v <= _TBOUND + 1e-15:
                raise ValueError(f"transmittance {part}={v} outside [0, 1/sqrt(2)]")

    @classmethod
    def from_magnitude(cls, magnitude: float) -> "Transmittance":
        """Equal real and imaginary parts with ``|T| = magnitude``."""
        part = magnitude / np.sqrt(2)
        return cls(part, part)

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


@dataclass(frozen=True)
class SubchannelProfile:
    transmittance: Transmittance
    noise_quad_variance: float

    def __post_init__(self):
        if not self.noise_quad_variance >= 0:
            raise ValueError("noise_quad_variance must be >= 0")


@dataclass(frozen=True, eq=False)
class ChannelBank:
    """``n`` sub-channels with their unitary-DFT transmittance coefficients.

    Construct from time-domain transmittance coefficients with
    :meth:`from_profiles` / :meth:`from_arrays`, or directly from the
    Fourier-domain coefficients ``F(T)`` with :meth:`from_fourier` (used for
    idealised banks such as a unit pass-through channel, whose time-domain
    vector lies outside the normalised transmittance box).
    """

    transmittances: np.ndarray
    noise_quad_variances: np.ndarray
    coefficients: np.ndarray = field(repr=False)

    @classmethod
    def from_profiles(cls, profiles) -> "ChannelBank":
        profiles = list(profiles)
        if not profiles:
            raise ValueError("a channel bank needs at least one sub-channel")
        t = np.array([p.transmittance.value for p in profiles], dtype=complex)
        noise = np.array([p.noise_quad_variance for p in profiles], dtype=float)
        return cls(t, noise, dft(t))

    @classmethod
    def from_arrays(cls, transmittances, noise_quad_variances) -> "ChannelBank":
        t = np.atleast_1d(np.asarray(transmittances, dtype=complex))
        noise = np.broadcast_to(np.asarray(noise_quad_variances, dtype=float), t.shape)
        profiles = [
            SubchannelProfile(Transmittance(v.real, v.imag), float(s)) for v, s in zip(t, noise)
        ]
        return cls.from_profiles(profiles)

    @classmethod
    def from_fourier(cls, coefficients, noise_quad_variances) -> "ChannelBank":
        c = np.atleast_1d(np.asarray(coefficients, dtype=complex))
        noise = np.array(np.broadcast_to(np.asarray(noise_quad_variances, dtype=float), c.shape))
        if c.size == 0:
            raise ValueError("a channel bank needs at least one sub-channel")
        if np.any(noise < 0):
            raise ValueError("noise_quad_variance must be >= 0")
        return cls(idft(c), noise, c)

    def __len__(self):
        return self.coefficients.size

    @property
    def n(self) -> int:
        return self.coefficients.size

    @property
    def fourier_gains(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2

    @property
    def nu(self) -> np.ndarray:
        """Noise-to-gain coefficients; ``inf`` where the gain vanishes."""
        g = self.fourier_gains
        with np.errstate(divide="ignore"):
            return np.where(g > 0, self.noise_quad_variances / np.where(g > 0, g, 1), np.inf)

    def eve_transmittances(self) -> np.ndarray:
        """``1 - T_i`` per sub-channel (reporting only)."""
        return 1 - self.transmittances

    def gain_comparison(self) -> tuple[float, float]:
        """Mean ``|F(T_i)|^2`` and mean ``|T_i|^2`` over the bank."""
        return float(np.mean(self.fourier_gains)), float(np.mean(np.abs(self.transmittances) ** 2))

    def to_dict(self) -> dict:
        return {
            "domain": "fourier",
            "subchannels": [
                [c.real, c.imag, s] for c, s in zip(self.coefficients, self.noise_quad_variances)
            ],
        }


@dataclass(frozen=True)
class EveModel:
    expected_transmittances: tuple
    nu_eve: float
    lam: float


@dataclass(frozen=True)
class AmqdBlock:
    block_index: int
    subcarriers: np.ndarray
    quad_variance: float

    def __post_init__(self):
        if self.block_index < 0:
            raise ValueError("block index must be >= 0")


def snr(profile: SubchannelProfile, quad_variance: float) -> float:
    if profile.noise_quad_variance == 0:
        raise ZeroDivisionError("noise variance is zero: SNR is infinite")
    return quad_variance / profile.noise_quad_variance


def nu_coefficient(profile: SubchannelProfile, fourier_gain: float) -> float:
    if fourier_gain <= 0:
        raise ValueError("sub-channel with zero Fourier gain is unusable")
    return profile.noise_quad_variance / fourier_gain


def eve_parameter(expected_transmittances, n: int) -> EveModel:
    """Eavesdropper water level ``nu_eve = 1/lambda``.

    ``lambda = (1/n) sum_i |sum_k T*_k exp(-2j*pi*i*k/n)|^2`` with 1-based
    indices, evaluated by direct summation.
    """
    t = np.asarray(expected_transmittances, dtype=complex).ravel()
    if t.size != n:
        raise ValueError(f"expected {n} transmittances, got {t.size}")
    idx = np.arange(1, n + 1)
    kernel = np.exp(-2j * np.pi * np.outer(idx, idx) / n)
    lam = float(np.mean(np.abs(kernel @ t) ** 2))
    if lam == 0:
        raise ValueError("all expected transmittances are zero: nu_eve undefined")
    return EveModel(tuple(complex(v) for v in t), 1.0 / lam, lam)


def _noise(source: GaussianSource, shape, noise):
    w = source.standard(int(np.prod(shape))).reshape(shape)
    return np.sqrt(noise) * w


def transmit(d, bank: ChannelBank, active, source: GaussianSource) -> np.ndarray:
    """Vectorised block transmission.

    ``d`` has shape ``(..., l)`` holding subcarriers for the ``l`` active
    sub-channels.  Returns ``F(T)[active] * dft(d) + F(noise)`` with the noise
    drawn from ``source`` in C order over the leading axes.
    """
    d = np.asarray(d, dtype=complex)
    active = np.asarray(active, dtype=int)
    if d.shape[-1] != active.size:
        raise ValueError("number of active sub-channels must equal the block length")
    if np.any(active < 0) or np.any(active >= bank.n):
        raise IndexError("active sub-channel index out of range")
    coeff = bank.coefficients[active]
    noise = bank.noise_quad_variances[active]
    return coeff * dft(d) + _noise(source, d.shape, noise)


def transmit_block(block: AmqdBlock, bank: ChannelBank, active, source: GaussianSource) -> AmqdBlock:
    y = transmit(block.subcarriers, bank, active, source)
    return AmqdBlock(block.block_index, y, block.quad_variance)


def load_bank(path) -> ChannelBank:
    """Read a channel profile file (see README for the schema)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read channel profile {path}: {exc}") from exc
    return bank_from_spec(doc)


def bank_from_spec(doc) -> ChannelBank:
    if isinstance(doc, list):
        doc = {"subchannels": doc}
    rows = doc.get("subchannels")
    if not rows:
        raise ValueError("channel profile needs a non-empty 'subchannels' list")
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != 3:
        raise ValueError("each sub-channel entry must be a [re, im, noise_quad_variance] triple")
    values = rows[:, 0] + 1j * rows[:, 1]
    domain = doc.get("domain", "time")
    if domain == "time":
        return ChannelBank.from_arrays(values, rows[:, 2])
    if domain == "fourier":
        return ChannelBank.from_fourier(values, rows[:, 2])
    raise ValueError(f"unknown channel domain {domain!r}")
