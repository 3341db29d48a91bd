"""Command-line entry point: ``amqd {run,region,compensate,diversity,selftest}``.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .harness import ConfigError, ExperimentConfig, json_text, diversity_csv, emit, run


def _load(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError(["--config is required for this command"])
    path = Path(args.config)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc.strerror}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config {path} is not valid JSON: {exc}"]) from exc
    if args.seed is not None and isinstance(doc, dict):
        doc["seed"] = args.seed
    return ExperimentConfig.from_dict(doc, base_dir=path.parent)


def _write(out: Path, name: str, text: str) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
        p = out / name
        with open(p, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out / name}: {exc.strerror or exc}") from exc
    return p


def cmd_run(args) -> int:
    cfg = _load(args)
    record = run(cfg)
    outputs = list(cfg.outputs)
    if args.format == "json" and "rates_csv" in outputs:
        outputs.append("rates_json")
    for p in emit(record, args.format, args.out, outputs):
        print(f"wrote {p}")
    agg = record.aggregate
    print(f"l={agg['l']} nu_eve={record.nu_eve:.6g} mean_sum_rate={agg['mean_sum_rate']:.6g} bits")
    return 0


def cmd_region(args) -> int:
    record = run(_load(args))
    emit(record, args.format, args.out, ["region_json"])
    r = record.region
    print(f"C1={r.c1:.17g} C2={r.c2:.17g} sum_bound={r.sum_bound:.17g}")
    return 0


def cmd_compensate(args) -> int:
    from .compensation import compensate

    cfg = _load(args)
    res = compensate(cfg.bank, cfg.nu_eve(), cfg.distribution)
    doc = {"schema_version": 1, "input_distribution": cfg.distribution.to_dict(), **res.to_dict()}
    if args.format == "json":
        print(f"wrote {_write(Path(args.out), 'compensation.json', json_text(doc))}")
    else:
        keys = ["nu_eve", "nu_min", "sigma_omega_sq", "xi_inv", "kappa", "sigma_kappa_sq",
                "nu_kappa", "g_delta"]
        text = ",".join(keys) + "\n" + ",".join(format(doc[k], ".17g") for k in keys) + "\n"
        print(f"wrote {_write(Path(args.out), 'compensation.csv', text)}")
    print(f"kappa={res.kappa:.12g} nu_kappa={res.nu_kappa:.12g} active={list(res.active)}")
    return 0


def cmd_diversity(args) -> int:
    cfg = _load(args)
    if cfg.opportunistic_plan is None:
        raise ConfigError(["diversity needs an opportunistic_plan in the config"])
    record = run(cfg)
    print(f"wrote {_write(Path(args.out), 'diversity.csv', diversity_csv(record))}")
    before = np.mean([r["spread_before"] for r in record.diversity])
    after = np.mean([r["spread_after"] for r in record.diversity])
    print(f"mean spread before={before:.6g} after={after:.6g}")
    return 0


def _selftest_checks():
    from .capacity import CapacityRegion
    from .channel import ChannelBank
    from .compensation import compensate
    from .inputs import InputDistribution
    from .spectral import dft, idft

    rng = np.random.default_rng(0)
    for n in (1, 2, 4, 8, 64, 1024):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        ok = (abs(np.linalg.norm(dft(x)) ** 2 / np.linalg.norm(x) ** 2 - 1) < 1e-12
              and np.max(np.abs(dft(idft(x)) - x)) <= 1e-12 * np.max(np.abs(x)))
        yield f"unitary transform n={n}", ok
    region = CapacityRegion(2.0, 2.0, 2.0)
    yield "region corner and sum line", region.contains(2, 0) and region.contains(1, 1) and not region.contains(2, 1e-6)
    bank = ChannelBank.from_fourier(np.ones(4), [0.2, 0.35, 0.5, 0.9])
    res = compensate(bank, 1.0, InputDistribution("ideal_gaussian"))
    yield "ideal input needs no compensation", abs(res.nu_kappa) < 1e-9 and abs(res.kappa - 1) < 1e-9
    doc = {"n": 4, "K": 2, "seed": 7, "trials": 3,
           "channel": {"domain": "fourier", "subchannels": [[1, 0, 0]] * 4},
           "eve": {"nu_eve": 1.0}}
    a, b = run(ExperimentConfig.from_dict(doc)), run(ExperimentConfig.from_dict(doc))
    yield "noiseless round trip", a.checks["max_decode_error"] < 1e-12
    yield "deterministic record", json_text(a.to_dict()) == json_text(b.to_dict())


def cmd_selftest(args) -> int:
    failed = 0
    for name, ok in _selftest_checks():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += not ok
    return 0 if failed == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amqd", description="AMQD-MQA multicarrier multiple-access simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "run": (cmd_run, "run an experiment and write its outputs"),
        "region": (cmd_region, "write the two-user capacity region"),
        "compensate": (cmd_compensate, "compensation of a nonideal input distribution"),
        "diversity": (cmd_diversity, "gain spreads before/after opportunistic plans"),
        "selftest": (cmd_selftest, "quick built-in consistency checks"),
    }
    for name, (fn, help_text) in handlers.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default="results", help="output directory (default: results)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit code 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
