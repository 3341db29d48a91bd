"""Opportunistic per-subcarrier weighting ``sqrt(a) * exp(i theta)``.

Weights scale each subcarrier's effective gain by ``a``; phases never change
squared magnitudes.  The raw rate follows the weighted gains directly; the
renormalised rate rescales the amplitudes so the weighted variance budget
``sum(a_i * var_i)`` equals the unweighted one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class OpportunisticPlan:
    amplitudes: np.ndarray
    phases: np.ndarray = None
    block_index: int = 0
    enforce_budget: bool = True

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        th = np.zeros_like(a) if self.phases is None else np.atleast_1d(np.asarray(self.phases, dtype=float))
        if a.ndim != 1 or a.size == 0:
            raise ValueError("plan needs a non-empty 1-D amplitude list")
        if th.shape != a.shape:
            raise ValueError("one phase per amplitude is required")
        if np.any(a < 0):
            raise ValueError("amplitudes a_i must be >= 0")
        if np.any(th < 0) or np.any(th >= 2 * np.pi):
            raise ValueError("phases must lie in [0, 2*pi)")
        if self.enforce_budget and not a.sum() > 1:
            raise ValueError(f"amplitude budget sum(a)={a.sum()} must exceed 1")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "phases", th)

    @classmethod
    def identity(cls, s: int, block_index: int = 0) -> "OpportunisticPlan":
        # a = 1 everywhere; with s = 1 the budget is exactly 1, so skip the check
        return cls(np.ones(s), np.zeros(s), block_index, enforce_budget=False)

    @property
    def size(self) -> int:
        return self.amplitudes.size

    @property
    def weights(self) -> np.ndarray:
        return np.sqrt(self.amplitudes) * np.exp(1j * self.phases)

    def to_dict(self) -> dict:
        return {
            "block_index": self.block_index,
            "weights": [[float(a), float(t)] for a, t in zip(self.amplitudes, self.phases)],
        }

    @classmethod
    def from_dict(cls, doc) -> "OpportunisticPlan":
        if isinstance(doc, dict):
            pairs, j = doc["weights"], int(doc.get("block_index", 0))
        else:
            pairs, j = doc, 0
        pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls(pairs[:, 0], np.mod(pairs[:, 1], 2 * np.pi), j)


def _check_len(plan: OpportunisticPlan, n: int):
    if plan.size != n:
        raise ValueError(f"plan has {plan.size} weights but {n} subcarriers were given")


def stationarity_average(history) -> float:
    """Mean of ``|F(T)|`` over ``d`` blocks and ``K`` users (``history`` is ``d x K``)."""
    h = np.asarray(history, dtype=float)
    if h.size == 0:
        raise ValueError("empty history")
    h = np.atleast_2d(h)
    return float(np.mean(np.mean(h, axis=0)))


def apply_plan(z, plan: OpportunisticPlan) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    _check_len(plan, z.shape[-1])
    return z * plan.weights


def energy_factor(z, plan: OpportunisticPlan) -> float:
    """``sum a_i |z_i|^2 / sum |z_i|^2``: signal energy added by the plan."""
    z = np.asarray(z, dtype=complex)
    _check_len(plan, z.shape[-1])
    e = np.sum(np.abs(z) ** 2)
    if e == 0:
        raise ValueError("zero-energy input")
    return float(np.sum(plan.amplitudes * np.abs(z) ** 2) / e)


def effective_gains(plan: OpportunisticPlan, gains) -> tuple[float, np.ndarray]:
    g = np.asarray(gains, dtype=float)
    _check_len(plan, g.size)
    per = plan.amplitudes * g
    return float(per.sum()), per


def opportunistic_rate(plan: OpportunisticPlan, gains, variances, quad_noise,
                       renormalize: bool = False) -> float:
    """``sum log2(1 + var_i * a_i * gain_i / noise_i)``.

    With ``renormalize`` the amplitudes are scaled by
    ``sum(var) / sum(a * var)`` so the plan adds no variance.
    """
    g = np.asarray(gains, dtype=float)
    v = np.broadcast_to(np.asarray(getattr(variances, "per_subchannel", variances), dtype=float), g.shape)
    noise = np.broadcast_to(np.asarray(quad_noise, dtype=float), g.shape)
    _check_len(plan, g.size)
    a = plan.amplitudes
    if renormalize:
        weighted = np.sum(a * v)
        if weighted > 0:
            a = a * np.sum(v) / weighted
    return float(np.sum(np.log2(1 + v * a * g / noise)))


MODES = ("concentrate", "proportional", "uniform")


def optimize_plan(gains, budget: float, mode: str = "concentrate", block_index: int = 0) -> OpportunisticPlan:
    g = np.asarray(gains, dtype=float)
    if g.size == 0:
        raise ValueError("gains must be non-empty")
    if not budget > 1:
        raise ValueError(f"budget must exceed 1, got {budget}")
    if mode == "concentrate":
        a = np.zeros(g.size)
        a[int(np.argmax(g))] = budget  # argmax returns the lowest index on ties
    elif mode == "proportional":
        total = g.sum()
        a = np.full(g.size, budget / g.size) if total <= 0 else budget * g / total
    elif mode == "uniform":
        a = np.full(g.size, budget / g.size)
    else:
        raise ValueError(f"unknown plan mode {mode!r}")
    return OpportunisticPlan(a, np.zeros(g.size), block_index)


def random_plan(s: int, budget: float, rng: np.random.Generator, block_index: int = 0) -> OpportunisticPlan:
    """Amplitudes drawn uniformly on the simplex ``sum(a) = budget``, random phases."""
    a = budget * rng.dirichlet(np.ones(s))
    th = rng.uniform(0, 2 * np.pi, s)
    return OpportunisticPlan(a, th, block_index)


@dataclass(frozen=True)
class DiversityStats:
    c_average: float
    gain_spread_before: float
    gain_spread_after: float

    def __post_init__(self):
        if self.gain_spread_before < 0 or self.gain_spread_after < 0:
            raise ValueError("spreads must be non-negative")


def diversity_stats(magnitudes, plans) -> DiversityStats:
    """Spread (std) of ``|F(T)|`` before and after weighting by ``sqrt(a)``.

    ``magnitudes`` is ``d x s``; ``plans`` holds one plan per block.
    """
    m = np.atleast_2d(np.asarray(magnitudes, dtype=float))
    if len(plans) != m.shape[0]:
        raise ValueError("one plan per block is required")
    after = np.array([np.abs(p.weights) * row for p, row in zip(plans, m)])
    return DiversityStats(stationarity_average(m), float(np.std(m)), float(np.std(after)))
