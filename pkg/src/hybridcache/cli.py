"""Experiment orchestration: generate workloads, run policies, sweep
library size or capacity, and aggregate results.

Configuration is a flat key=value file; every key can be overridden by
an environment variable with the HYBRIDCACHE_ prefix (uppercased key)
and by command-line flags, in that order of precedence.

Exit codes: 0 success, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .catalog import CatalogConfig, build_catalog, save_catalog
from .engine import run_simulation
from .errors import ConfigError, HybridCacheError, TraceParseError
from .policy import POLICY_NAMES
from .workload import generate_trace, load_trace, save_trace

ENV_PREFIX = "HYBRIDCACHE_"
SWEEP_AXES = ("library_size", "capacity")
SWEEP_HEADER = [
    "axis", "value", "policy", "seed",
    "mean_hit_ratio", "final_regret", "config_hash",
]

# catalog and trace draw from separated seed streams
TRACE_SEED_OFFSET = 7919


@dataclass(frozen=True)
class ExperimentConfig:
    horizon: int = 600
    library_size: int = 150
    capacity: float = 40.0
    w_snm: float = 0.8
    zipf_delta: float = 0.8
    pareto_beta: float = 2.0
    pareto_n_min: float = 1.0
    requests_per_slot: int = 100
    exploration_beta: float = 2.0
    alloc_window: int = 10
    alloc_smoothing: float = 0.3
    seeds: tuple = tuple(range(1000, 1010))
    policies: tuple = ("hybrid", "popular", "random")
    sweep_axis: str = "capacity"
    sweep_values: tuple = (10.0, 20.0, 30.0, 40.0)
    out: str = "results"

    def validate(self) -> "ExperimentConfig":
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.library_size < 2:
            raise ConfigError("library_size must be >= 2")
        if self.capacity < 0:
            raise ConfigError("capacity must be >= 0")
        if not (0.0 <= self.w_snm <= 1.0):
            raise ConfigError("w_snm must lie in [0, 1]")
        if self.zipf_delta < 0:
            raise ConfigError("zipf_delta must be >= 0")
        if self.pareto_beta <= 1:
            raise ConfigError("pareto_beta must exceed 1")
        if self.pareto_n_min <= 0:
            raise ConfigError("pareto_n_min must be positive")
        if self.requests_per_slot < 1:
            raise ConfigError("requests_per_slot must be >= 1")
        if self.exploration_beta <= 0:
            raise ConfigError("exploration_beta must be positive")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        for p in self.policies:
            if p not in POLICY_NAMES:
                raise ConfigError(f"policies: unknown policy {p!r}")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {SWEEP_AXES}")
        if any(b <= a for a, b in zip(self.sweep_values, self.sweep_values[1:])):
            raise ConfigError("sweep_values must be strictly increasing")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["seeds"] = list(self.seeds)
        d["policies"] = list(self.policies)
        d["sweep_values"] = list(self.sweep_values)
        return d

    def hash(self) -> str:
        d = self.to_dict()
        d.pop("out")  # the output path is not part of the experiment
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _parse_value(name: str, text: str, kind):
    text = text.strip()
    try:
        if name == "seeds":
            return tuple(int(x) for x in text.split(","))
        if name == "sweep_values":
            return tuple(float(x) for x in text.split(","))
        if name == "policies":
            return tuple(x.strip() for x in text.split(","))
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {text!r}") from exc


def load_config(path=None, env=None, overrides=None) -> ExperimentConfig:
    """Build a config from file, environment, and explicit overrides."""
    kinds = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    typemap = {"int": int, "float": float, "str": str, "tuple": tuple}
    values = {}
    if path is not None:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                key, _, text = line.partition("=")
                key = key.strip()
                if key not in kinds:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _parse_value(key, text, typemap.get(kinds[key], str))
    env = os.environ if env is None else env
    for key, kind in kinds.items():
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            values[key] = _parse_value(key, raw, typemap.get(kind, str))
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = val
    return ExperimentConfig(**values).validate()


def make_workload(config: ExperimentConfig, library_size: int, seed: int):
    """Build the (catalog, trace) pair for one seed of one sweep point."""
    catalog = build_catalog(
        CatalogConfig(
            library_size=library_size,
            w_snm=config.w_snm,
            horizon=config.horizon,
            pareto_beta=config.pareto_beta,
            pareto_n_min=config.pareto_n_min,
        ),
        seed=seed,
    )
    trace = generate_trace(
        catalog,
        horizon=config.horizon,
        requests_per_slot=config.requests_per_slot,
        w_snm=config.w_snm,
        delta=config.zipf_delta,
        seed=seed + TRACE_SEED_OFFSET,
    )
    return catalog, trace


def cmd_generate(config: ExperimentConfig) -> int:
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    catalog, trace = make_workload(config, config.library_size, config.seeds[0])
    save_catalog(catalog, outdir / "catalog.csv")
    save_trace(trace, outdir / "trace.csv")
    print(f"config_hash={config.hash()}")
    print(f"wrote {outdir / 'catalog.csv'} and {outdir / 'trace.csv'}")
    return 0


def _run_one(config, catalog, trace, policy, capacity, seed):
    return run_simulation(
        catalog,
        trace,
        policy,
        capacity,
        seed=seed,
        exploration_beta=config.exploration_beta,
        alloc_window=config.alloc_window,
        alloc_smoothing=config.alloc_smoothing,
        config_hash=config.hash(),
    )


def cmd_run(config: ExperimentConfig, catalog_path=None, trace_path=None) -> int:
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    fixed = None
    if catalog_path is not None:
        from .catalog import load_catalog

        catalog = load_catalog(catalog_path)
        if trace_path is None:
            raise ConfigError("trace: --trace is required with --catalog")
        fixed = (catalog, load_trace(trace_path, catalog))

    summaries = []
    with open(outdir / "per_slot.csv", "w", newline="") as fh:
        fh.write("seed,policy,slot,hit_ratio,oracle_hit_ratio,"
                 "regret_increment,cumulative_regret\n")
        for seed in config.seeds:
            catalog, trace = fixed or make_workload(
                config, config.library_size, seed
            )
            for policy in config.policies:
                metrics = _run_one(
                    config, catalog, trace, policy, config.capacity, seed
                )
                summaries.append(metrics.summary)
                for t, rec in enumerate(metrics.per_slot, start=1):
                    fh.write(
                        f"{seed},{policy},{t},{rec.hit_ratio!r},"
                        f"{rec.oracle_hit_ratio!r},{rec.regret_increment!r},"
                        f"{metrics.cumulative_regret[t - 1]!r}\n"
                    )
    with open(outdir / "metrics.json", "w") as fh:
        json.dump(
            {"config_hash": config.hash(), "runs": summaries}, fh, indent=2
        )
    print(f"config_hash={config.hash()}")
    for s in summaries:
        print(
            f"policy={s['policy']} seed={s['seed']} "
            f"mean_hit_ratio={s['mean_hit_ratio']:.4f} "
            f"final_regret={s['final_regret']:.3f}"
        )
    return 0


def sweep_results(config: ExperimentConfig):
    """Run the configured sweep; yields one result row per run.

    A library-size sweep regenerates the workload per point; a
    capacity sweep holds each seed's workload fixed and varies C.
    """
    if config.sweep_axis == "library_size":
        for value in config.sweep_values:
            for seed in config.seeds:
                catalog, trace = make_workload(config, int(value), seed)
                for policy in config.policies:
                    m = _run_one(
                        config, catalog, trace, policy, config.capacity, seed
                    )
                    yield {
                        "axis": "library_size",
                        "value": value,
                        "policy": policy,
                        "seed": seed,
                        "mean_hit_ratio": m.summary["mean_hit_ratio"],
                        "final_regret": m.summary["final_regret"],
                        "config_hash": config.hash(),
                    }
    else:
        for seed in config.seeds:
            catalog, trace = make_workload(config, config.library_size, seed)
            for value in config.sweep_values:
                for policy in config.policies:
                    m = _run_one(config, catalog, trace, policy, value, seed)
                    yield {
                        "axis": "capacity",
                        "value": value,
                        "policy": policy,
                        "seed": seed,
                        "mean_hit_ratio": m.summary["mean_hit_ratio"],
                        "final_regret": m.summary["final_regret"],
                        "config_hash": config.hash(),
                    }


def cmd_sweep(config: ExperimentConfig) -> int:
    outdir = Path(config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "sweep.csv"
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SWEEP_HEADER) + "\n")
        for row in sweep_results(config):
            fh.write(
                f"{row['axis']},{row['value']!r},{row['policy']},{row['seed']},"
                f"{row['mean_hit_ratio']!r},{row['final_regret']!r},"
                f"{row['config_hash']}\n"
            )
    print(f"config_hash={config.hash()}")
    print(f"wrote {path}")
    return 0


def read_sweep_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TraceParseError("empty results file", line=1)
    header = lines[0].split(",")
    if header != SWEEP_HEADER:
        raise TraceParseError("bad results header", line=1)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            rows.append(
                {
                    "axis": parts[0],
                    "value": float(parts[1]),
                    "policy": parts[2],
                    "seed": int(parts[3]),
                    "mean_hit_ratio": float(parts[4]),
                    "final_regret": float(parts[5]),
                    "config_hash": parts[6],
                }
            )
        except (ValueError, IndexError) as exc:
            raise TraceParseError(str(exc), line=lineno) from exc
    if not rows:
        raise TraceParseError("results file has no data rows", line=2)
    return rows


def aggregate_results(rows: list) -> list:
    """Seed-average each (axis value, policy); add hybrid improvements."""
    groups = {}
    for row in rows:
        groups.setdefault((row["value"], row["policy"]), []).append(row)

    def stats(samples):
        n = len(samples)
        mean = sum(samples) / n
        if n > 1:
            var = sum((x - mean) ** 2 for x in samples) / (n - 1)
            stderr = math.sqrt(var / n)
        else:
            stderr = 0.0
        return mean, stderr

    out = []
    values = sorted({v for v, _ in groups})
    for value in values:
        means = {
            p: stats([r["mean_hit_ratio"] for r in groups[(value, p)]])
            for v, p in groups
            if v == value
        }
        regrets = {
            p: stats([r["final_regret"] for r in groups[(value, p)]])
            for v, p in groups
            if v == value
        }
        for policy in sorted(means):
            hr_mean, hr_se = means[policy]
            rg_mean, rg_se = regrets[policy]
            entry = {
                "value": value,
                "policy": policy,
                "n_seeds": len(groups[(value, policy)]),
                "mean_hit_ratio": hr_mean,
                "stderr_hit_ratio": hr_se,
                "mean_final_regret": rg_mean,
                "stderr_final_regret": rg_se,
                "improvement_over": "",
            }
            if policy == "hybrid":
                gains = []
                for other, (other_mean, _) in sorted(means.items()):
                    if other == "hybrid" or other_mean == 0:
                        continue
                    gains.append(
                        f"{other}:{(hr_mean - other_mean) / other_mean:+.2%}"
                    )
                entry["improvement_over"] = ";".join(gains)
            out.append(entry)
    return out


def cmd_report(input_path, out) -> int:
    rows = read_sweep_csv(input_path)
    agg = aggregate_results(rows)
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "report.csv"
    cols = [
        "value", "policy", "n_seeds",
        "mean_hit_ratio", "stderr_hit_ratio",
        "mean_final_regret", "stderr_final_regret", "improvement_over",
    ]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for entry in agg:
            fh.write(
                f"{entry['value']!r},{entry['policy']},{entry['n_seeds']},"
                f"{entry['mean_hit_ratio']!r},{entry['stderr_hit_ratio']!r},"
                f"{entry['mean_final_regret']!r},"
                f"{entry['stderr_final_regret']!r},{entry['improvement_over']}\n"
            )
    print(f"{'value':>8} {'policy':>8} {'hit_ratio':>12} {'regret':>12}  improvement")
    for entry in agg:
        print(
            f"{entry['value']:>8.4g} {entry['policy']:>8} "
            f"{entry['mean_hit_ratio']:>8.4f}±{entry['stderr_hit_ratio']:.4f} "
            f"{entry['mean_final_regret']:>8.2f}±{entry['stderr_final_regret']:.2f}"
            f"  {entry['improvement_over']}"
        )
    print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridcache",
        description="Edge-cloud caching simulator: hybrid bandit policy, "
        "baselines, and sweep harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="single seed (replaces the list)")
        p.add_argument("--horizon", type=int)
        p.add_argument("--library-size", type=int, dest="library_size")
        p.add_argument("--capacity", type=float)
        p.add_argument("--w-snm", type=float, dest="w_snm")
        p.add_argument("--beta", type=float, dest="exploration_beta",
                       help="UCB exploration constant")
        p.add_argument("--delta", type=float, dest="zipf_delta")
        p.add_argument("--requests-per-slot", type=int, dest="requests_per_slot")

    p_gen = sub.add_parser("generate", help="emit catalog and trace CSVs")
    common(p_gen)

    p_run = sub.add_parser("run", help="run policies over one workload")
    common(p_run)
    p_run.add_argument("--policy", help="run a single policy")
    p_run.add_argument("--catalog", help="load an existing catalog CSV")
    p_run.add_argument("--trace", help="load an existing trace CSV")

    p_sweep = sub.add_parser("sweep", help="sweep library size or capacity")
    common(p_sweep)
    p_sweep.add_argument("--axis", choices=SWEEP_AXES, dest="sweep_axis")
    p_sweep.add_argument(
        "--values",
        help="comma-separated sweep values",
    )

    p_rep = sub.add_parser("report", help="aggregate a sweep results CSV")
    p_rep.add_argument("input", help="sweep results CSV")
    p_rep.add_argument("--out", default="results")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    overrides = {}
    for key in (
        "out", "horizon", "library_size", "capacity", "w_snm",
        "exploration_beta", "zipf_delta", "requests_per_slot", "sweep_axis",
    ):
        if getattr(args, key, None) is not None:
            overrides[key] = getattr(args, key)
    if getattr(args, "seed", None) is not None:
        overrides["seeds"] = (args.seed,)
    if getattr(args, "policy", None) is not None:
        overrides["policies"] = (args.policy,)
    if getattr(args, "values", None) is not None:
        overrides["sweep_values"] = tuple(
            float(x) for x in args.values.split(",")
        )
    return load_config(path=args.config, overrides=overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.input, args.out)
        config = _config_from_args(args)
        if args.command == "generate":
            return cmd_generate(config)
        if args.command == "run":
            return cmd_run(config, args.catalog, args.trace)
        if args.command == "sweep":
            return cmd_sweep(config)
        raise ConfigError(f"unknown command {args.command!r}")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    except HybridCacheError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
