"""Good sub-channel selection, variance allocation and the rate-selection matrix."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelBank

EXACT = "exact_waterfill"
CONSTANT = "constant"


@dataclass(frozen=True, eq=False)
class VarianceAllocation:
    per_subchannel: np.ndarray
    mode: str

    def __post_init__(self):
        v = np.asarray(self.per_subchannel, dtype=float)
        object.__setattr__(self, "per_subchannel", v)
        if np.any(v < 0):
            raise ValueError("modulation variances must be non-negative")
        if self.mode not in (EXACT, CONSTANT):
            raise ValueError(f"unknown allocation mode {self.mode!r}")
        if self.mode == CONSTANT:
            nz = v[v > 0]
            if nz.size and not np.allclose(nz, nz[0], rtol=0, atol=0):
                raise ValueError("constant mode requires equal nonzero variances")

    @property
    def total(self) -> float:
        return float(self.per_subchannel.sum())


def select_good(bank: ChannelBank, nu_eve: float) -> list[int]:
    """Indices with ``nu_i < nu_eve`` in bank order."""
    if not nu_eve > 0:
        raise ValueError("nu_eve must be positive")
    return [int(i) for i in np.flatnonzero(bank.nu < nu_eve)]


def waterfill_exact(bank: ChannelBank, nu_eve: float) -> VarianceAllocation:
    """Water-filling at level ``nu_eve``: ``max(0, nu_eve - nu_i)``."""
    if not nu_eve > 0:
        raise ValueError("nu_eve must be positive")
    return VarianceAllocation(np.maximum(0.0, nu_eve - bank.nu), EXACT)


def waterfill_budget(nu, budget: float) -> tuple[np.ndarray, float]:
    """Classic water-filling of a total ``budget`` over coefficients ``nu``.

    Returns the variances and the water level ``mu`` with
    ``sum(max(0, mu - nu)) == budget``.
    """
    nu = np.asarray(nu, dtype=float)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    finite = np.isfinite(nu)
    order = np.sort(nu[finite])
    if order.size == 0:
        return np.zeros_like(nu), -np.inf
    # largest m such that the level over the m best channels clears the m-th one
    csum = np.cumsum(order)
    m = np.arange(1, order.size + 1)
    levels = (budget + csum) / m
    k = int(np.max(np.flatnonzero(levels > order))) if budget > 0 else 0
    mu = levels[k]
    out = np.zeros_like(nu)
    out[finite] = np.maximum(0.0, mu - nu[finite])
    return out, float(mu)


def constant_variance(bank: ChannelBank, nu_eve: float) -> VarianceAllocation:
    good = select_good(bank, nu_eve)
    if not good:
        raise ValueError("no good sub-channel: every nu_i >= nu_eve")
    nu = bank.nu
    level = nu_eve - float(np.min(nu[good]))
    v = np.zeros(bank.n)
    v[good] = level
    return VarianceAllocation(v, CONSTANT)


def lagrangian(bank: ChannelBank, variances, lam: float) -> float:
    """Sum-rate objective penalised by ``lam * sum(variances)``."""
    v = np.asarray(variances, dtype=float)
    return float(np.sum(np.log2(1 + v / bank.nu)) - lam * v.sum())


@dataclass(frozen=True, eq=False)
class AllocationMatrix:
    """Binary ``l x K`` user/sub-channel assignment for one AMQD block.

    Row ``r`` refers to bank sub-channel ``subchannels[r]`` (defaults to
    ``r``).
    """

    entries: np.ndarray
    block_index: int = 0
    subchannels: tuple = field(default=None)

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 1:
            raise ValueError(f"allocation matrix must be l x K with l, K >= 1, got shape {e.shape}")
        if not np.all((e == 0) | (e == 1)):
            raise ValueError("allocation matrix entries must be 0 or 1")
        object.__setattr__(self, "entries", e.astype(np.int8))
        rows = tuple(range(e.shape[0])) if self.subchannels is None else tuple(self.subchannels)
        if len(rows) != e.shape[0]:
            raise ValueError("subchannel map length must equal the number of rows")
        object.__setattr__(self, "subchannels", rows)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def allocated_users(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.entries.any(axis=0))]

    def user_rows(self, user: int) -> np.ndarray:
        return np.flatnonzero(self.entries[:, user])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"U{k + 1}" for k in range(self.shape[1])])
        w.writerows(self.entries.tolist())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, block_index: int = 0) -> "AllocationMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        if len(rows) < 2:
            raise ValueError("allocation CSV needs a header row and at least one data row")
        header, body = rows[0], rows[1:]
        try:
            e = np.array([[int(x) for x in r] for r in body])
        except ValueError as exc:
            raise ValueError(f"non-integer allocation entry: {exc}") from exc
        if e.shape[1] != len(header):
            raise ValueError("allocation CSV rows must match the header width")
        return cls(e, block_index)


def write_matrix_csv(matrix: AllocationMatrix, path) -> None:
    Path(path).write_text(matrix.to_csv())


def read_matrix_csv(path, block_index: int = 0) -> AllocationMatrix:
    return AllocationMatrix.from_csv(Path(path).read_text(), block_index)


def build_matrix(l: int, K: int, policy: str = "round_robin", demands=None, gains=None,
                 explicit=None, block_index: int = 0, subchannels=None) -> AllocationMatrix:
    """Build the rate-selection matrix.

    ``round_robin`` gives sub-channel ``i`` to user ``i mod K``.
    ``greedy_by_gain`` deals sub-channels in order of descending gain to users
    ranked by descending demand weight (ties broken by user index).
    ``explicit`` returns the supplied matrix after validation.
    """
    if l < 1 or K < 1:
        raise ValueError("l and K must be >= 1")
    if policy == "explicit":
        if explicit is None:
            raise ValueError("explicit policy needs a full matrix")
        e = np.asarray(explicit)
        if e.shape != (l, K):
            raise ValueError(f"explicit matrix has shape {e.shape}, expected {(l, K)}")
        return AllocationMatrix(e, block_index, subchannels)
    e = np.zeros((l, K), dtype=np.int8)
    if policy == "round_robin":
        e[np.arange(l), np.arange(l) % K] = 1
    elif policy == "greedy_by_gain":
        if gains is None or len(gains) != l:
            raise ValueError("greedy_by_gain needs one gain per sub-channel")
        w = np.ones(K) if demands is None else np.asarray(demands, dtype=float)
        if w.shape != (K,):
            raise ValueError("demands must hold one weight per user")
        users = np.lexsort((np.arange(K), -w))
        rows = np.argsort(-np.asarray(gains, dtype=float), kind="stable")
        for rank, i in enumerate(rows):
            e[i, users[rank % K]] = 1
    else:
        raise ValueError(f"unknown allocation policy {policy!r}")
    return AllocationMatrix(e, block_index, subchannels)


def subchannel_rates(bank: ChannelBank, alloc: VarianceAllocation) -> np.ndarray:
    """Per-sub-channel ``log2(1 + var_i * |F(T_i)|^2 / noise_i)``."""
    v = alloc.per_subchannel
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(v > 0, v * bank.fourier_gains / bank.noise_quad_variances, 0.0)
    return np.log2(1 + ratio)


def user_rate(matrix: AllocationMatrix, bank: ChannelBank, alloc: VarianceAllocation,
              user: int) -> float:
    """Rate of ``user`` in bits per block use.

    A sub-channel shared by several users in its row is split equally.
    """
    if not 0 <= user < matrix.shape[1]:
        raise IndexError(f"user {user} out of range")
    rates = subchannel_rates(bank, alloc)
    rows = matrix.user_rows(user)
    if rows.size == 0:
        return 0.0
    share = matrix.entries[rows].sum(axis=1)
    idx = np.asarray(matrix.subchannels)[rows]
    return float(np.sum(rates[idx] / share))
