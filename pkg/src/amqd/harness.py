"""Experiment configuration, end-to-end AMQD-MQA runs and result emission.

Per block ``j`` a run samples the allocated users' inputs, places them on
the good sub-channels through the allocation matrix, optionally weights
them with an opportunistic plan, applies the inverse DFT, transmits over the
bank, and decodes with the forward DFT and the known ``F(T_i)``.

Both settings (one transmitter serving every user, or independent
transmitters) go through the same pipeline; the flag only labels output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy
from scipy import stats

from . import __version__
from .allocation import (
    CONSTANT,
    EXACT,
    AllocationMatrix,
    build_matrix,
    constant_variance,
    select_good,
    user_rate,
    waterfill_exact,
)
from .capacity import CapacityRegion, RateReport, capacity_region_2user, sum_capacity
from .channel import ChannelBank, bank_from_spec, eve_parameter, load_bank, transmit
from .compensation import CompensationResult, compensate
from .gaussian_core import GaussianSource
from .inputs import IDEAL, InputDistribution
from .opportunistic import (
    OpportunisticPlan,
    diversity_stats,
    energy_factor,
    opportunistic_rate,
    optimize_plan,
    random_plan,
)
from .spectral import idft

SCHEMA_VERSION = 1
SETTINGS = ("single_transmitter", "multiple_transmitters")
POLICIES = ("round_robin", "greedy_by_gain", "explicit")
OUTPUTS = ("rates_csv", "rates_json", "region_json", "distribution_tests", "diversity_csv")
PLAN_MODES = ("random", "concentrate", "proportional", "uniform", "explicit")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists every violation."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass
class ExperimentConfig:
    n: int
    K: int
    seed: int
    channel: object
    eve: dict
    setting: str = "single_transmitter"
    allocation_policy: str = "round_robin"
    demands: list | None = None
    explicit_matrix: list | None = None
    variance_mode: str = CONSTANT
    input_distribution: dict = field(default_factory=lambda: {"kind": IDEAL})
    opportunistic_plan: dict | None = None
    compensate: bool = False
    channel_jitter: float = 0.0
    trials: int = 1
    keep_samples: bool = False
    outputs: list = field(default_factory=lambda: ["rates_csv", "region_json"])
    base_dir: str = field(default=".", repr=False, compare=False)

    _bank: ChannelBank = field(default=None, init=False, repr=False, compare=False)
    _dist: InputDistribution = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError(["configuration must be a mapping"])
        known = {f for f in cls.__dataclass_fields__ if not f.startswith("_") and f != "base_dir"}
        errors = [f"unknown field {k!r}" for k in sorted(set(doc) - known)]
        errors += [f"missing required field {k!r}" for k in ("n", "K", "seed", "channel", "eve")
                   if k not in doc]
        if errors:
            raise ConfigError(errors)
        return cls(**{k: doc[k] for k in known if k in doc}, base_dir=str(base_dir))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except OSError as exc:
            raise ConfigError([f"cannot read config {path}: {exc.strerror}"]) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config {path} is not valid JSON: {exc}"]) from exc
        return cls.from_dict(doc, base_dir=path.parent)

    def validate(self):
        errors = []

        def is_int(v):
            return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

        if not is_int(self.n) or self.n < 1:
            errors.append(f"n must be an integer >= 1, got {self.n!r}")
        if not is_int(self.K) or self.K < 1:
            errors.append(f"K must be an integer >= 1, got {self.K!r}")
        elif is_int(self.n) and self.K > self.n:
            errors.append(f"K={self.K} exceeds n={self.n}: need n >= K >= 1")
        if not is_int(self.seed) or not 0 <= self.seed < 2**64:
            errors.append("seed must be a 64-bit unsigned integer")
        if not is_int(self.trials) or self.trials < 1:
            errors.append(f"trials must be an integer >= 1, got {self.trials!r}")
        if self.setting not in SETTINGS:
            errors.append(f"setting must be one of {SETTINGS}, got {self.setting!r}")
        if self.allocation_policy not in POLICIES:
            errors.append(f"allocation_policy must be one of {POLICIES}")
        if self.allocation_policy == "explicit" and self.explicit_matrix is None:
            errors.append("allocation_policy 'explicit' needs explicit_matrix")
        if self.variance_mode not in (EXACT, CONSTANT):
            errors.append(f"variance_mode must be {EXACT!r} or {CONSTANT!r}")
        if not isinstance(self.channel_jitter, (int, float)) or self.channel_jitter < 0:
            errors.append("channel_jitter must be a number >= 0")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            errors.append(f"unknown outputs {bad}; choose from {OUTPUTS}")
        if "distribution_tests" in self.outputs and not self.keep_samples:
            errors.append("output 'distribution_tests' requires keep_samples: true")

        try:
            if isinstance(self.channel, str):
                p = Path(self.channel)
                self._bank = load_bank(p if p.is_absolute() else Path(self.base_dir) / p)
            else:
                self._bank = bank_from_spec(self.channel)
            if is_int(self.n) and self._bank.n != self.n:
                errors.append(f"channel has {self._bank.n} sub-channels but n={self.n}")
        except (OSError, ValueError, TypeError) as exc:
            errors.append(f"channel: {exc}")

        if not isinstance(self.eve, dict) or not ({"nu_eve", "expected_transmittances"} & set(self.eve)):
            errors.append("eve must give 'nu_eve' or 'expected_transmittances'")
        elif "expected_transmittances" in self.eve:
            t = np.asarray(self.eve["expected_transmittances"], dtype=float)
            if t.ndim != 2 or t.shape[1] != 2:
                errors.append("eve.expected_transmittances must be a list of [re, im] pairs")
            elif is_int(self.n) and t.shape[0] != self.n:
                errors.append(f"eve.expected_transmittances needs n={self.n} entries")
            elif not np.any(t):
                errors.append("eve.expected_transmittances are all zero: nu_eve undefined")
        elif not self.eve["nu_eve"] > 0:
            errors.append("eve.nu_eve must be > 0")

        try:
            self._dist = InputDistribution.from_dict(self.input_distribution)
        except (ValueError, TypeError, KeyError) as exc:
            errors.append(f"input_distribution: {exc}")

        if self.opportunistic_plan is not None:
            mode = self.opportunistic_plan.get("mode")
            if mode not in PLAN_MODES:
                errors.append(f"opportunistic_plan.mode must be one of {PLAN_MODES}")
            elif mode == "explicit":
                if "weights" not in self.opportunistic_plan:
                    errors.append("explicit opportunistic plan needs 'weights'")
            elif not self.opportunistic_plan.get("budget", 0) > 1:
                errors.append("opportunistic_plan.budget must exceed 1")
        if errors:
            raise ConfigError(errors)

    def to_dict(self) -> dict:
        keys = [f for f in self.__dataclass_fields__ if not f.startswith("_") and f != "base_dir"]
        return {k: getattr(self, k) for k in keys}

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, with the channel resolved to its coefficients."""
        doc = {**self.to_dict(), "channel": self._bank.to_dict()}
        canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=_jsonable)
        return hashlib.sha256(canon.encode()).hexdigest()

    @property
    def bank(self) -> ChannelBank:
        return self._bank

    @property
    def distribution(self) -> InputDistribution:
        return self._dist

    def nu_eve(self) -> float:
        if "nu_eve" in self.eve:
            return float(self.eve["nu_eve"])
        t = np.asarray(self.eve["expected_transmittances"], dtype=float)
        return eve_parameter(t[:, 0] + 1j * t[:, 1], self.n).nu_eve


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


@dataclass
class RunRecord:
    config_hash: str
    setting: str
    nu_eve: float
    good: tuple
    variances: np.ndarray
    matrix: AllocationMatrix
    reports: list
    region: CapacityRegion
    aggregate: dict
    compensation: CompensationResult | None
    diversity: list
    checks: dict
    samples: dict | None
    versions: dict
    wall_clock: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        # wall_clock is deliberately left out so emitted files are reproducible
        return {
            "schema_version": SCHEMA_VERSION,
            "config_hash": self.config_hash,
            "setting": self.setting,
            "nu_eve": self.nu_eve,
            "good": list(self.good),
            "variances": self.variances.tolist(),
            "allocation_matrix": self.matrix.entries.tolist(),
            "reports": [r.to_dict() for r in self.reports],
            "aggregate": self.aggregate,
            "compensation": None if self.compensation is None else self.compensation.to_dict(),
            "checks": self.checks,
            "versions": self.versions,
        }


def _block_seeds(seed: int, trials: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(trials)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _make_plan(spec, gains, rng, block_index):
    mode = spec["mode"]
    if mode == "explicit":
        return OpportunisticPlan.from_dict({"weights": spec["weights"], "block_index": block_index})
    if mode == "random":
        return random_plan(gains.size, spec["budget"], rng, block_index)
    return optimize_plan(gains, spec["budget"], mode, block_index)


def run(config: ExperimentConfig) -> RunRecord:
    """Execute ``config.trials`` AMQD blocks; a pure function of the config."""
    start = time.perf_counter()
    bank = config.bank
    nu_eve = config.nu_eve()
    good = select_good(bank, nu_eve)
    if not good:
        raise RuntimeError("no good sub-channel: every nu_i >= nu_eve")
    l = len(good)
    alloc = waterfill_exact(bank, nu_eve) if config.variance_mode == EXACT else constant_variance(bank, nu_eve)
    v_good = alloc.per_subchannel[good]
    gains_good = bank.fourier_gains[good]
    matrix = build_matrix(l, config.K, config.allocation_policy, config.demands, gains_good,
                          config.explicit_matrix, 0, good)
    entries = matrix.entries.astype(float)
    share = entries.sum(axis=1, keepdims=True)
    mix = np.divide(entries, np.sqrt(share), out=np.zeros_like(entries), where=share > 0)

    dist = config.distribution
    comp = None
    if config.compensate:
        comp = compensate(bank, nu_eve, dist)

    reports, diversity = [], []
    inputs, decoded, subcarriers = [], [], []
    max_decode_err = max_parseval_err = 0.0
    static_report = None
    for j, block_seed in enumerate(_block_seeds(config.seed, config.trials)):
        source = GaussianSource(1.0, block_seed)
        block_bank = bank
        if config.channel_jitter > 0:
            jitter = 1 + config.channel_jitter * source.rng.standard_normal(bank.n)
            block_bank = ChannelBank.from_fourier(bank.coefficients * jitter, bank.noise_quad_variances)

        # per-user draws on each row, combined with 1/sqrt(share) so the row keeps variance v
        if dist.kind == IDEAL:
            unit = source.standard(l * config.K).reshape(l, config.K) * np.sqrt(0.5)
        else:
            unit = dist.sample_unit(source.rng, l * config.K).reshape(l, config.K)
        z = np.sqrt(2 * v_good) * np.sum(unit * mix, axis=1)

        plan = None
        if config.opportunistic_plan is not None:
            plan = _make_plan(config.opportunistic_plan, block_bank.fourier_gains[good], source.rng, j)
            z_tx = plan.weights * z
        else:
            z_tx = z
        d = idft(z_tx)
        max_parseval_err = max(max_parseval_err, abs(np.vdot(d, d).real - np.vdot(z_tx, z_tx).real)
                               / max(np.vdot(z_tx, z_tx).real, 1e-300))
        y = transmit(d, block_bank, good, source)
        coeff = block_bank.coefficients[good]
        z_hat = np.divide(y, coeff, out=np.zeros_like(y), where=coeff != 0)
        ref = np.max(np.abs(z_tx)) or 1.0
        max_decode_err = max(max_decode_err, float(np.max(np.abs(z_hat - z_tx)) / ref))

        if block_bank is not bank or static_report is None:
            c_sum = sum_capacity(block_bank, alloc, good)
            per_user = [user_rate(matrix, block_bank, alloc, k) for k in range(config.K)]
            mode = "partial" if config.channel_jitter > 0 else "full"
            report = RateReport.from_rates(per_user, [c_sum] * config.K, mode)
            if block_bank is bank:
                static_report = report  # a static bank gives the same report every block
        reports.append(static_report if block_bank is bank else report)

        if plan is not None:
            mags = np.abs(block_bank.coefficients[good])
            st = diversity_stats(mags[None, :], [plan])
            g = block_bank.fourier_gains[good]
            noise = block_bank.noise_quad_variances[good]
            identity = OpportunisticPlan.identity(l)
            diversity.append({
                "block": j,
                "c_average": st.c_average,
                "spread_before": st.gain_spread_before,
                "spread_after": st.gain_spread_after,
                "energy_factor": energy_factor(z, plan) if np.any(z) else float("nan"),
                "rate_identity": opportunistic_rate(identity, g, v_good, noise),
                "rate_raw": opportunistic_rate(plan, g, v_good, noise),
                "rate_renormalized": opportunistic_rate(plan, g, v_good, noise, renormalize=True),
            })
        if config.keep_samples:
            inputs.append(z)
            decoded.append(z_hat)
            subcarriers.append(d)

    sums = np.array([r.sum_rate for r in reports])
    aggregate = {
        "blocks": config.trials,
        "l": l,
        "mean_sum_rate": float(sums.mean()),
        "stderr_sum_rate": (float(sums.std(ddof=1) / np.sqrt(sums.size))
                            if sums.size > 1 and np.all(np.isfinite(sums)) else 0.0),
        "mean_per_user": np.mean([r.per_user for r in reports], axis=0).tolist(),
    }
    if config.K == 2:
        region = capacity_region_2user(bank, alloc, good)
    else:
        c = sum_capacity(bank, alloc, good)
        region = CapacityRegion(c, c, c)
    samples = None
    if config.keep_samples:
        samples = {
            "inputs": np.array(inputs),
            "decoded": np.array(decoded),
            "subcarriers": np.array(subcarriers),
            "quad_variances": v_good.copy(),
        }
    return RunRecord(
        config_hash=config.config_hash(),
        setting=config.setting,
        nu_eve=float(nu_eve),
        good=tuple(good),
        variances=alloc.per_subchannel.copy(),
        matrix=matrix,
        reports=reports,
        region=region,
        aggregate=aggregate,
        compensation=comp,
        diversity=diversity,
        checks={"max_decode_error": max_decode_err, "max_parseval_error": max_parseval_err},
        samples=samples,
        versions={"amqd": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        wall_clock=time.perf_counter() - start,
    )


def _ks(name, data, dist, alpha):
    res = stats.kstest(data, dist)
    return {"test": name, "statistic": float(res.statistic), "pvalue": float(res.pvalue),
            "samples": int(np.size(data)), "passed": bool(res.pvalue >= alpha)}


def distribution_suite(record: RunRecord, alpha: float = 0.01, tau_margin: float = 0.02) -> dict:
    """KS tests on the recorded inputs and subcarriers plus the mean block-energy bound."""
    if record.samples is None:
        raise ValueError("record has no raw samples: run with keep_samples enabled")
    z = record.samples["inputs"]
    d = record.samples["subcarriers"]
    if z.size == 0:
        raise ValueError("empty sample set")
    v = record.samples["quad_variances"]
    zn = (z / np.sqrt(v)).ravel()  # unit per-quadrature variance
    dn = (d / np.sqrt(v.mean())).ravel()
    quads = np.concatenate([dn.real, dn.imag])
    tests = [
        _ks("magnitude_rayleigh", np.abs(zn), stats.rayleigh().cdf, alpha),
        _ks("squared_magnitude_exponential", np.abs(zn) ** 2, stats.expon(scale=2).cdf, alpha),
        _ks("subcarrier_quadrature_normal", quads, stats.norm().cdf, alpha),
    ]
    tau = np.sum(np.abs(d) ** 2, axis=1)
    l = d.shape[1]
    bound = 2 * float(np.sum(v)) * (1 + tau_margin)  # l * 2 * mean(sigma_omega^2)
    tau_check = {"test": "mean_block_energy", "mean_tau": float(tau.mean()), "bound": bound,
                 "l": l, "passed": bool(tau.mean() <= bound)}
    tests.append(tau_check)
    return {"schema_version": SCHEMA_VERSION, "alpha": alpha,
            "all_passed": all(t["passed"] for t in tests), "tests": tests}


def _fmt(x):
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"


def rates_csv(record: RunRecord) -> str:
    header = ["block"] + record.reports[0].csv_header()
    return _csv_text(header, [[str(j), *r.csv_row()] for j, r in enumerate(record.reports)])


def diversity_csv(record: RunRecord) -> str:
    cols = ["block", "c_average", "spread_before", "spread_after", "energy_factor",
            "rate_identity", "rate_raw", "rate_renormalized"]
    rows = [[str(r["block"])] + [r[c] for c in cols[1:]] for r in record.diversity]
    return _csv_text(cols, rows)


def emit(record: RunRecord, fmt: str, path, outputs=None) -> list[Path]:
    """Write the requested outputs into directory ``path``; returns the files written.

    ``fmt`` selects the rate table format (``csv`` or ``json``).
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    outputs = list(outputs or ["rates_csv", "region_json"])
    out = Path(path)
    files = {}
    if "rates_csv" in outputs or "rates_json" in outputs:
        if fmt == "csv":
            files["rates.csv"] = rates_csv(record)
        else:
            files["rates.json"] = json_text(record.to_dict())
    if "region_json" in outputs:
        files["region.json"] = json_text({"schema_version": SCHEMA_VERSION,
                                           **record.region.to_dict(64)})
    if "diversity_csv" in outputs:
        files["diversity.csv"] = diversity_csv(record)
    if "distribution_tests" in outputs:
        files["distribution_tests.json"] = json_text(distribution_suite(record))
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            p = out / name
            with open(p, "w", newline="") as fh:
                fh.write(text)
            written.append(p)
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc.strerror or exc}") from exc
    return written
