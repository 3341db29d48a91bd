"""Capacities, rate reports and mutual-information estimators (bits throughout)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import VarianceAllocation
from .channel import ChannelBank
from .gaussian_core import GaussianSource
from .inputs import InputDistribution


def _check_noise(quad_signal, quad_noise):
    if not quad_noise > 0:
        raise ValueError(f"noise variance must be > 0, got {quad_noise}")
    if quad_signal < 0:
        raise ValueError("signal variance must be >= 0")


def awgn_capacity_complex(quad_signal: float, quad_noise: float) -> float:
    _check_noise(quad_signal, quad_noise)
    return float(np.log2(1 + quad_signal / quad_noise))


def awgn_capacity_quadrature(quad_signal: float, quad_noise: float) -> float:
    return 0.5 * awgn_capacity_complex(quad_signal, quad_noise)


def _terms(bank: ChannelBank, alloc: VarianceAllocation, good) -> np.ndarray:
    good = np.asarray(good, dtype=int)
    v = alloc.per_subchannel[good]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(v > 0, v * bank.fourier_gains[good] / bank.noise_quad_variances[good], 0.0)
    return np.log2(1 + ratio)


def sum_capacity(bank: ChannelBank, alloc: VarianceAllocation, good) -> float:
    if len(good) == 0:
        raise ValueError("sum capacity needs at least one good sub-channel")
    return float(np.sum(_terms(bank, alloc, good)))


def symmetric_capacity(bank: ChannelBank, alloc: VarianceAllocation, good, K: int) -> float:
    if K < 1:
        raise ValueError("K must be >= 1")
    return sum_capacity(bank, alloc, good) / K


@dataclass(frozen=True)
class CapacityRegion:
    """Two-user region ``{R >= 0, R1 <= c1, R2 <= c2, R1 + R2 <= sum_bound}``."""

    c1: float
    c2: float
    sum_bound: float

    def contains(self, r1: float, r2: float, tol: float = 1e-12) -> bool:
        return bool(
            r1 >= -tol and r2 >= -tol
            and r1 <= self.c1 + tol and r2 <= self.c2 + tol
            and r1 + r2 <= self.sum_bound + tol
        )

    def vertices(self) -> list[tuple[float, float]]:
        s = self.sum_bound
        pts = [(0.0, 0.0), (min(self.c1, s), 0.0)]
        if self.c1 < s:
            pts.append((self.c1, s - self.c1))
        if self.c2 < s:
            pts.append((s - self.c2, self.c2))
        pts.append((0.0, min(self.c2, s)))
        # drop repeated vertices (degenerate region)
        out = []
        for p in pts:
            if not out or p != out[-1]:
                out.append(p)
        return out

    def boundary(self, count: int = 64) -> np.ndarray:
        """``count`` points spaced evenly by arc length around the closed boundary."""
        v = np.array(self.vertices() + [self.vertices()[0]], dtype=float)
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        total = seg.sum()
        if total == 0:
            return np.zeros((count, 2))
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        t = np.arange(count) * total / count
        x = np.interp(t, cum, v[:, 0])
        y = np.interp(t, cum, v[:, 1])
        return np.column_stack([x, y])

    def to_dict(self, points: int = 64) -> dict:
        return {
            "C1": self.c1,
            "C2": self.c2,
            "sum_bound": self.sum_bound,
            "boundary": self.boundary(points).tolist(),
        }


def capacity_region_2user(bank: ChannelBank, alloc: VarianceAllocation, good) -> CapacityRegion:
    # each corner gives one user all l good sub-channels
    c = sum_capacity(bank, alloc, good)
    return CapacityRegion(c, c, c)


ROLES = ("input", "subcarrier", "noise", "output")


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    entries: np.ndarray
    role: str = "subcarrier"

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"covariance must be square, got shape {m.shape}")
        if self.role not in ROLES:
            raise ValueError(f"unknown covariance role {self.role!r}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.conj().T)) > 1e-12 * scale:
            raise ValueError("covariance matrix is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -1e-9:
            raise ValueError("covariance matrix is not positive semidefinite")
        object.__setattr__(self, "entries", m)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def diagonal(cls, values, role: str = "subcarrier") -> "CovarianceMatrix":
        return cls(np.diag(np.asarray(values, dtype=complex)), role)


def mimo_mutual_information(gains, k_d, quad_noise: float) -> float:
    """``log2 det(I + F K_d F^H / (2 quad_noise))``.

    ``gains`` is either the diagonal of ``F`` (1-D) or the full matrix.
    """
    if not quad_noise > 0:
        raise ValueError("quad_noise must be > 0")
    if not isinstance(k_d, CovarianceMatrix):
        k_d = CovarianceMatrix(k_d)
    f = np.asarray(gains, dtype=complex)
    if f.ndim <= 1:
        f = np.diag(np.atleast_1d(f))
    if f.shape[1] != k_d.dimension:
        raise ValueError("transform and covariance dimensions differ")
    m = np.eye(f.shape[0]) + f @ k_d.entries @ f.conj().T / (2 * quad_noise)
    sign, logdet = np.linalg.slogdet(m)
    if sign.real <= 0:
        raise ValueError("determinant is not positive")
    return float(logdet / np.log(2))


@dataclass(frozen=True)
class RateReport:
    per_user: tuple
    sum_rate: float
    symmetric_rate: float
    corner_points: tuple
    csi_mode: str = "full"

    def __post_init__(self):
        if self.csi_mode not in ("full", "partial"):
            raise ValueError(f"unknown csi mode {self.csi_mode!r}")
        if len(self.per_user) != len(self.corner_points):
            raise ValueError("one corner point per user is required")
        if abs(self.sum_rate - sum(self.per_user)) > 1e-9:
            raise ValueError("sum_rate must equal the sum of per-user rates")
        if abs(self.symmetric_rate - self.sum_rate / len(self.per_user)) > 1e-9:
            raise ValueError("symmetric_rate must equal sum_rate / K")
        for r, c in zip(self.per_user, self.corner_points):
            if r > c + 1e-9:
                raise ValueError(f"user rate {r} exceeds its corner point {c}")

    @classmethod
    def from_rates(cls, per_user, corner_points, csi_mode: str = "full") -> "RateReport":
        per_user = tuple(float(r) for r in per_user)
        total = float(sum(per_user))
        return cls(per_user, total, total / len(per_user),
                   tuple(float(c) for c in corner_points), csi_mode)

    @property
    def K(self) -> int:
        return len(self.per_user)

    def to_dict(self) -> dict:
        return {
            "per_user": list(self.per_user),
            "sum_rate": self.sum_rate,
            "symmetric_rate": self.symmetric_rate,
            "corner_points": list(self.corner_points),
            "csi_mode": self.csi_mode,
        }

    def csv_header(self) -> list[str]:
        return ([f"rate_U{k + 1}" for k in range(self.K)] + ["sum_rate", "symmetric_rate"]
                + [f"corner_U{k + 1}" for k in range(self.K)] + ["csi_mode"])

    def csv_row(self) -> list:
        return [*self.per_user, self.sum_rate, self.symmetric_rate, *self.corner_points, self.csi_mode]


def partial_csi_rate(sampler, alloc: VarianceAllocation, trials: int,
                     source: GaussianSource) -> tuple[float, float]:
    """Expected sum capacity over channel draws.

    ``sampler(rng)`` returns a :class:`ChannelBank`; rates use the
    sub-channels with positive allocated variance.  Returns
    ``(mean, std / sqrt(trials))`` with the unbiased sample std (0 for one
    trial).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    good = np.flatnonzero(alloc.per_subchannel > 0)
    if good.size == 0:
        return 0.0, 0.0
    rates = np.array([sum_capacity(sampler(source.rng), alloc, good) for _ in range(trials)])
    if trials == 1 or np.all(rates == rates[0]):
        # constant draws: report the value itself rather than a rounded mean
        return float(rates[0]), 0.0
    return float(rates.mean()), float(rates.std(ddof=1) / np.sqrt(trials))


def mi_monte_carlo(bank: ChannelBank, alloc: VarianceAllocation, good, samples: int,
                   source: GaussianSource) -> float:
    """Semi-analytic Monte Carlo estimate of ``sum_i H(y_i) - H(noise_i)``.

    Draws ``samples`` Gaussian inputs per good sub-channel, passes them
    through ``F(T_i)`` plus noise, and applies the Gaussian entropy formula
    to the empirical output power.  The noise entropy is closed form.
    """
    if samples < 1000:
        raise ValueError("mi_monte_carlo needs at least 1000 samples")
    good = np.asarray(good, dtype=int)
    if good.size == 0:
        return 0.0
    v = alloc.per_subchannel[good]
    noise = bank.noise_quad_variances[good]
    coeff = bank.coefficients[good]
    x = source.standard(samples * good.size).reshape(samples, good.size)
    w = source.standard(samples * good.size).reshape(samples, good.size)
    y = coeff * np.sqrt(v) * x + np.sqrt(noise) * w
    power = np.mean(np.abs(y) ** 2, axis=0)
    return float(np.sum(np.log2(power / (2 * noise))))


def input_mutual_information_mc(dist: InputDistribution, snr: float, samples: int,
                                rng: np.random.Generator) -> float:
    """Monte Carlo ``I(d; y)`` for ``y = sqrt(snr) d + n`` using the exact output density.

    ``d`` is taken at unit second moment and ``n ~ CN(0, 1)``, so
    ``I = -E[log2 p_y(y)] - log2(pi e)``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    d = dist.sample_unit(rng, samples)
    q = rng.standard_normal((samples, 2)) * np.sqrt(0.5)
    y = np.sqrt(snr) * d + (q[:, 0] + 1j * q[:, 1])
    with np.errstate(divide="ignore"):
        logp = np.log2(dist.output_pdf(y, snr))
    return float(-np.mean(logp) - np.log2(np.pi * np.e))


def histogram_mutual_information(x, y, bins: int = 16) -> float:
    """Plug-in MI estimate in bits from a 2-D histogram on equiprobable bins.

    The Miller-Madow correction removes the leading finite-sample bias.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size or x.size == 0:
        raise ValueError("x and y must be non-empty and equally long")
    qs = np.linspace(0, 1, bins + 1)
    ex, ey = np.unique(np.quantile(x, qs)), np.unique(np.quantile(y, qs))
    joint, _, _ = np.histogram2d(x, y, bins=[ex, ey])
    n = joint.sum()
    pxy = joint / n
    px, py = pxy.sum(axis=1), pxy.sum(axis=0)
    nz = pxy > 0
    mi = float(np.sum(pxy[nz] * np.log(pxy[nz] / np.outer(px, py)[nz])))
    # Miller-Madow correction applied to each entropy term (nats)
    kx, ky, kxy = np.count_nonzero(px), np.count_nonzero(py), np.count_nonzero(nz)
    mi += (kx + ky - kxy - 1) / (2 * n)
    return mi / np.log(2)
