"""Compensation of nonideal Gaussian input modulation.

The Gaussian has the largest MMSE of any input at a given SNR, so a
nonideal distribution has a smaller MMSE and a larger inverse-MMSE term
``xi_inv``.  That term feeds the deviation functional
``G = 1/(nu_min kappa) - xi_inv`` and fixes ``kappa`` through

    kappa * (nu_eve + nu_min * (1 - G(kappa))) = 1,

which yields the lift ``nu_kappa = nu_min (1 - G)`` added to every
sub-channel coefficient.  For the ideal Gaussian ``G = 1`` and nothing is
lifted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .allocation import select_good
from .channel import ChannelBank
from .inputs import DISCRETE, IDEAL, InputDistribution


class ConvergenceError(RuntimeError):
    pass


def xi_ideal(quad_variance: float) -> float:
    """MMSE of a unit-variance Gaussian input at complex SNR ``2 * quad_variance``."""
    if quad_variance < 0:
        raise ValueError("quad_variance must be >= 0")
    return 1.0 / (1.0 + 2.0 * quad_variance)


def xi_inverse_ideal(u: float) -> float:
    if not 0 < u <= 1:
        raise ValueError(f"u must lie in (0, 1], got {u}")
    return (1.0 - u) / u


def _mmse_product(dist: InputDistribution, snr: float, nx: int = 2001, ny: int = 4001) -> float:
    # complex MMSE of a product input equals the real unit-variance MMSE at snr
    half = dist.quadrature_support()
    scale = np.sqrt(2.0)  # quadrature at variance 1/2 -> unit variance
    u = np.linspace(-half, half, nx) * scale
    pu = dist.quadrature_pdf(u / scale) / scale
    pu /= integrate.simpson(pu, x=u)
    rs = np.sqrt(snr)
    lim = rs * u[-1] + 10.0
    y = np.linspace(-lim, lim, ny)
    # p(y | u) for y = sqrt(snr) u + w, w ~ N(0, 1)
    lik = np.exp(-0.5 * (y[:, None] - rs * u[None, :]) ** 2) / np.sqrt(2 * np.pi)
    den = integrate.simpson(lik * pu, x=u, axis=1)
    num = integrate.simpson(lik * (u * pu), x=u, axis=1)
    ex2 = integrate.simpson(u**2 * pu, x=u)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0, num**2 / den, 0.0)
    return float(ex2 - integrate.simpson(ratio, x=y))


def _mmse_discrete(dist: InputDistribution, snr: float, nodes: int = 64) -> float:
    pts, p = dist.unit_points, dist.weights
    # Gauss-Hermite nodes integrate against exp(-x^2), i.e. N(0, 1/2) per quadrature
    x, w = np.polynomial.hermite.hermgauss(nodes)
    w = w / np.sqrt(np.pi)
    noise = (x[:, None] + 1j * x[None, :]).ravel()
    wn = np.outer(w, w).ravel()
    rs = np.sqrt(snr)
    total = 0.0
    for m, pm in zip(pts, p):
        y = rs * m + noise
        logw = np.log(np.where(p > 0, p, 1.0)) - np.abs(y[:, None] - rs * pts[None, :]) ** 2
        logw = np.where(p > 0, logw, -np.inf)
        logw -= logw.max(axis=1, keepdims=True)
        post = np.exp(logw)
        post /= post.sum(axis=1, keepdims=True)
        est = post @ pts
        total += pm * np.sum(wn * np.abs(m - est) ** 2)
    return float(total)


def xi_numeric(dist: InputDistribution, quad_variance: float) -> float:
    """MMSE ``E|d - E[d | sqrt(2 q) d + n]|^2`` with ``E|d|^2 = 1`` and ``n ~ CN(0, 1)``.

    Product-form inputs (Gaussian, truncated Gaussian) use grid quadrature;
    discrete constellations use the exact posterior mean with Gauss-Hermite
    integration over the noise.
    """
    if quad_variance < 0:
        raise ValueError("quad_variance must be >= 0")
    if quad_variance == 0:
        return 1.0
    snr = 2.0 * quad_variance
    if dist.is_product:
        return _mmse_product(dist, snr)
    if dist.kind == DISCRETE:
        return _mmse_discrete(dist, snr)
    raise ValueError(f"xi_numeric does not support {dist.kind!r}")


def g_delta(nu_min: float, kappa: float, xi_inv: float) -> float:
    """Deviation functional ``1/(nu_min kappa) - xi_inv``; equals 1 for ideal inputs."""
    if not nu_min > 0:
        raise ValueError("nu_min must be > 0")
    if not 0 < kappa < 1 / nu_min:
        raise ValueError(f"kappa={kappa} outside (0, 1/nu_min={1 / nu_min})")
    return 1.0 / (nu_min * kappa) - xi_inv


@dataclass(frozen=True)
class CompensationResult:
    nu_eve: float
    nu_min: float
    sigma_omega_sq: float
    xi_inv: float
    kappa: float
    sigma_kappa_sq: float
    nu_kappa: float
    g_delta: float
    good: tuple
    lifted_nu: tuple
    active: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "nu_eve": self.nu_eve,
            "nu_min": self.nu_min,
            "sigma_omega_sq": self.sigma_omega_sq,
            "xi_inv": self.xi_inv,
            "kappa": self.kappa,
            "sigma_kappa_sq": self.sigma_kappa_sq,
            "nu_kappa": self.nu_kappa,
            "g_delta": self.g_delta,
            "good": list(self.good),
            "lifted_nu": list(self.lifted_nu),
            "active": list(self.active),
        }


def _bisect(f, lo, hi, tol=1e-10, max_iter=200):
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise ConvergenceError(
            f"fixed point not bracketed: residual {flo:.3g} at kappa={lo:.3g}, "
            f"{fhi:.3g} at kappa={hi:.3g}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or hi - lo < tol * 1e-6:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def compensate(bank: ChannelBank, nu_eve: float, dist: InputDistribution,
               eps: float = 1e-9) -> CompensationResult:
    """Run the four-step compensation procedure on ``bank``.

    The inverse-MMSE term is evaluated at the operating SNR of the best good
    sub-channel, ``(nu_eve - nu_min) / nu_min``.  Sub-channels whose lifted
    coefficient reaches ``nu_eve`` are left out of ``active``.
    """
    good = select_good(bank, nu_eve)
    if not good:
        raise ValueError("no good sub-channel: every nu_i >= nu_eve")
    nu = bank.nu
    nu_min = float(np.min(nu[good]))
    sigma_omega_sq = nu_eve - nu_min
    snr_op = sigma_omega_sq / nu_min
    if dist.kind == IDEAL:
        xi = xi_ideal(snr_op / 2)
    else:
        xi = xi_numeric(dist, snr_op / 2)
    xi_inv = xi_inverse_ideal(xi)

    def residual(kappa):
        return kappa * (nu_eve + nu_min * (1 - g_delta(nu_min, kappa, xi_inv))) - 1

    kappa = _bisect(residual, eps, 1 / nu_min - eps)
    g = g_delta(nu_min, kappa, xi_inv)
    sigma_kappa_sq = 1 / kappa - nu_eve
    nu_kappa = nu_min * (1 - g)
    lifted = nu[good] + nu_kappa
    active = tuple(i for i, v in zip(good, lifted) if v < nu_eve)
    return CompensationResult(
        nu_eve=float(nu_eve),
        nu_min=nu_min,
        sigma_omega_sq=float(sigma_omega_sq),
        xi_inv=float(xi_inv),
        kappa=float(kappa),
        sigma_kappa_sq=float(sigma_kappa_sq),
        nu_kappa=float(nu_kappa),
        g_delta=float(g),
        good=tuple(good),
        lifted_nu=tuple(float(v) for v in lifted),
        active=active,
    )


def nu_sum_rate(nu, variance) -> float:
    """``sum log2(1 + variance / nu_i)``, the sum capacity in coefficient form."""
    nu = np.asarray(nu, dtype=float)
    return float(np.sum(np.log2(1 + np.asarray(variance) / nu)))
