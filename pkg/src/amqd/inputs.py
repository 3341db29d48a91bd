"""Input modulation distributions with a common second moment.

Every distribution is held internally at unit complex second moment
(``E|d|^2 = 1``) and scaled by ``sqrt(2 * quad_variance)`` on sampling.
Output densities refer to the normalised observation
``y = sqrt(snr) * d + n`` with ``d`` at unit second moment and
``n ~ CN(0, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

IDEAL = "ideal_gaussian"
TRUNCATED = "truncated_gaussian"
DISCRETE = "discrete_constellation"
DISC = "uniform_disc"
KINDS = (IDEAL, TRUNCATED, DISCRETE, DISC)

_DISC_RADIUS = np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class InputDistribution:
    kind: str
    quad_variance: float = 0.5
    bound: float | None = None
    points: tuple | None = None
    probs: tuple | None = None
    _unit_points: np.ndarray = field(init=False, repr=False, default=None)
    _probs: np.ndarray = field(init=False, repr=False, default=None)
    _quad_scale: float = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown input distribution kind {self.kind!r}")
        if not self.quad_variance >= 0:
            raise ValueError("quad_variance must be >= 0")
        if self.kind == TRUNCATED:
            if self.bound is None or not self.bound > 0:
                raise ValueError("truncated_gaussian needs a positive bound (in standard deviations)")
            # per-quadrature scale bringing TN(-b, b) to variance 1/2
            var = stats.truncnorm(-self.bound, self.bound).var()
            object.__setattr__(self, "_quad_scale", float(np.sqrt(0.5 / var)))
        if self.kind == DISCRETE:
            pts = np.asarray(self.points if self.points is not None else (), dtype=complex)
            if pts.size == 0:
                raise ValueError("discrete constellation needs points")
            p = (np.full(pts.size, 1 / pts.size) if self.probs is None
                 else np.asarray(self.probs, dtype=float))
            if p.shape != pts.shape or np.any(p < 0):
                raise ValueError("constellation probabilities must be non-negative, one per point")
            if abs(p.sum() - 1) > 1e-12:
                raise ValueError(f"constellation probabilities sum to {p.sum()}, not 1")
            m2 = float(np.sum(p * np.abs(pts) ** 2))
            if m2 <= 0:
                raise ValueError("constellation has zero second moment: cannot normalise")
            object.__setattr__(self, "_unit_points", pts / np.sqrt(m2))
            object.__setattr__(self, "_probs", p)

    @classmethod
    def qpsk(cls, quad_variance: float = 0.5) -> "InputDistribution":
        pts = tuple(np.exp(1j * (np.pi / 4 + np.pi / 2 * np.arange(4))))
        return cls(DISCRETE, quad_variance, points=pts)

    @property
    def is_product(self) -> bool:
        """Quadratures are independent and identically distributed."""
        return self.kind in (IDEAL, TRUNCATED)

    @property
    def unit_points(self) -> np.ndarray:
        return self._unit_points

    @property
    def weights(self) -> np.ndarray:
        return self._probs

    def second_moment(self) -> float:
        """``E|d|^2`` at the configured scale."""
        return 2 * self.quad_variance

    # -- unit-moment primitives -------------------------------------------

    def quadrature_pdf(self, x):
        """Density of one quadrature at unit complex moment (variance 1/2)."""
        x = np.asarray(x, dtype=float)
        if self.kind == IDEAL:
            return stats.norm.pdf(x, scale=np.sqrt(0.5))
        if self.kind == TRUNCATED:
            s = self._quad_scale
            return stats.truncnorm.pdf(x / s, -self.bound, self.bound) / s
        raise ValueError(f"{self.kind} is not a product distribution")

    def quadrature_support(self) -> float:
        """Half-width of the quadrature support used for quadrature grids."""
        if self.kind == IDEAL:
            return 8 * np.sqrt(0.5)
        if self.kind == TRUNCATED:
            return self.bound * self._quad_scale
        raise ValueError(f"{self.kind} is not a product distribution")

    def sample_unit(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.kind == IDEAL:
            q = rng.standard_normal((count, 2)) * np.sqrt(0.5)
            return q[:, 0] + 1j * q[:, 1]
        if self.kind == TRUNCATED:
            u = stats.truncnorm.rvs(-self.bound, self.bound, size=(count, 2), random_state=rng)
            q = u * self._quad_scale
            return q[:, 0] + 1j * q[:, 1]
        if self.kind == DISCRETE:
            idx = rng.choice(self._unit_points.size, size=count, p=self._probs)
            return self._unit_points[idx]
        r = _DISC_RADIUS * np.sqrt(rng.random(count))
        phi = 2 * np.pi * rng.random(count)
        return r * np.exp(1j * phi)

    def log_pdf_unit(self, d):
        d = np.asarray(d, dtype=complex)
        if self.kind == IDEAL:
            return -np.log(np.pi) - np.abs(d) ** 2
        if self.kind == TRUNCATED:
            with np.errstate(divide="ignore"):
                return np.log(self.quadrature_pdf(d.real)) + np.log(self.quadrature_pdf(d.imag))
        if self.kind == DISC:
            inside = np.abs(d) <= _DISC_RADIUS
            return np.where(inside, -np.log(np.pi * _DISC_RADIUS**2), -np.inf)
        # point masses: infinite density on atoms
        on_atom = np.isclose(d[..., None], self._unit_points, atol=1e-12).any(axis=-1)
        return np.where(on_atom, np.inf, -np.inf)

    def output_pdf(self, y, snr: float):
        """Density of ``y = sqrt(snr) d + n`` with ``n ~ CN(0, 1)``."""
        y = np.asarray(y, dtype=complex)
        if snr < 0:
            raise ValueError("snr must be non-negative")
        if self.kind == IDEAL:
            return np.exp(-np.abs(y) ** 2 / (1 + snr)) / (np.pi * (1 + snr))
        if snr == 0:
            return np.exp(-np.abs(y) ** 2) / np.pi
        if self.kind == TRUNCATED:
            return self._trunc_quad_output(y.real, snr) * self._trunc_quad_output(y.imag, snr)
        if self.kind == DISCRETE:
            diff = y[..., None] - np.sqrt(snr) * self._unit_points
            return np.sum(self._probs * np.exp(-np.abs(diff) ** 2), axis=-1) / np.pi
        # uniform disc: (1 / (pi R^2 snr)) * P(|y + n| <= sqrt(snr) R)
        inside = special.chndtr(2 * snr * _DISC_RADIUS**2, 2, 2 * np.abs(y) ** 2)
        return inside / (np.pi * _DISC_RADIUS**2 * snr)

    def _trunc_quad_output(self, y, snr):
        # x = s*u, u ~ TN(-b, b); y = sqrt(snr) x + n, n ~ N(0, 1/2)
        s, b = self._quad_scale, self.bound
        tau2, a, nv = s * s, s * b, 0.5
        v = 1 / (1 / tau2 + snr / nv)
        m = v * np.sqrt(snr) * y / nv
        sd = np.sqrt(v)
        mass = special.ndtr((a - m) / sd) - special.ndtr((-a - m) / sd)
        z = special.ndtr(b) - special.ndtr(-b)
        return stats.norm.pdf(y, scale=np.sqrt(snr * tau2 + nv)) * mass / z

    # -- configured-scale helpers -----------------------------------------

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return np.sqrt(2 * self.quad_variance) * self.sample_unit(rng, count)

    def log_pdf(self, d):
        scale2 = 2 * self.quad_variance
        if scale2 <= 0:
            raise ValueError("zero-variance distribution has no density")
        return self.log_pdf_unit(np.asarray(d) / np.sqrt(scale2)) - np.log(scale2)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "quad_variance": self.quad_variance}
        if self.bound is not None:
            out["bound"] = self.bound
        if self.kind == DISCRETE:
            out["points"] = [[p.real, p.imag] for p in np.asarray(self.points, dtype=complex)]
            out["probs"] = self._probs.tolist()
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "InputDistribution":
        kind = doc.get("kind", IDEAL)
        q = float(doc.get("quad_variance", 0.5))
        if kind == DISCRETE and doc.get("points") == "qpsk":
            return cls.qpsk(q)
        pts = doc.get("points")
        if pts is not None:
            pts = tuple(complex(p[0], p[1]) for p in pts)
        probs = doc.get("probs")
        return cls(kind, q, bound=doc.get("bound"), points=pts,
                   probs=None if probs is None else tuple(probs))
