"""Command-line experiment runner.

Writes a CSV with header ``t,policy,mean_regret,std_err,normalized`` (one row
per checkpoint and policy) plus a JSON sidecar holding the resolved
configuration, from which the CSV can be regenerated exactly.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from ._backend import resolve
from .bound import bound_constants, bound_curve
from .engine import POLICY_NAMES, Dynamics, aggregate, default_checkpoints, make_policy_spec, simulate_runs
from .markov import ChainError, ConfigurationError, instance_stats, load_arms
from .policies import TIE_BREAKS
from .scenarios import PRESETS, Scenario, load_scenario

log = logging.getLogger("restless_asr")

CSV_HEADER = ("t", "policy", "mean_regret", "std_err", "normalized")
BASELINE_PRESETS = {"default": None, "liu10": 10.0}


@dataclass
class ExperimentConfig:
    scenario: str
    policies: list[str] = field(default_factory=lambda: ["asr", "dsee", "rca"])
    mode: str = "practical"
    epsilon: float = 0.0
    delta: float = 0.0
    horizon: int = 100_000
    runs: int = 100
    master_seed: int = 0
    checkpoints: Optional[list[int]] = None
    output: Optional[str] = None
    bound: bool = False
    bound_offset: float = 0.0
    big_l: Optional[float] = None
    explore_scale: float = 1.0
    baseline_preset: str = "default"
    tie_break: str = "deficit"
    dynamics: str = "restless"
    regret: str = "pseudo"
    threads: int = 1
    backend: str = "auto"

    def validate(self) -> None:
        bad = [p for p in self.policies if p not in POLICY_NAMES]
        if bad or not self.policies:
            raise ConfigurationError(f"policies must be a non-empty subset of {POLICY_NAMES}, got {self.policies}")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigurationError("duplicate policy names")
        if self.mode not in ("practical", "theoretical"):
            raise ConfigurationError("mode must be 'practical' or 'theoretical'")
        if self.runs < 1:
            raise ConfigurationError("runs must be >= 1")
        if self.threads < 1:
            raise ConfigurationError("threads must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.baseline_preset not in BASELINE_PRESETS:
            raise ConfigurationError(f"baseline preset must be one of {sorted(BASELINE_PRESETS)}")
        if self.tie_break not in TIE_BREAKS:
            raise ConfigurationError(f"tie-break must be one of {TIE_BREAKS}")
        if self.regret not in ("pseudo", "realized"):
            raise ConfigurationError("regret must be 'pseudo' or 'realized'")
        if self.explore_scale <= 0:
            raise ConfigurationError("explore scale must be positive")
        if self.big_l is not None and not self.big_l > 0:
            raise ConfigurationError("L must be positive")
        Dynamics(self.dynamics)
        resolve(self.backend)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    scenario: Scenario
    rows: list[tuple]
    csv_text: str
    bound_note: Optional[str] = None


def _fmt(x: float) -> str:
    return repr(float(x))


def _resolve_scenario(cfg: ExperimentConfig, embedded: Optional[list] = None) -> Scenario:
    if embedded is not None:
        return Scenario(cfg.scenario, tuple(load_arms(embedded)), "")
    return load_scenario(cfg.scenario)


def run_experiment(cfg: ExperimentConfig, *, embedded_arms: Optional[list] = None) -> ExperimentResult:
    """Run every configured policy and build the CSV text.

    All configuration errors are raised before the first simulation.
    """
    cfg.validate()
    scenario = _resolve_scenario(cfg, embedded_arms)
    arms = list(scenario.arms)
    stats = instance_stats(arms, cfg.epsilon, cfg.delta)
    if cfg.horizon < len(arms):
        raise ConfigurationError(f"horizon must be >= number of arms ({len(arms)})")
    cps = default_checkpoints(cfg.horizon) if cfg.checkpoints is None else np.asarray(cfg.checkpoints, dtype=np.int64)
    if cps.size == 0 or np.any(np.diff(cps) <= 0) or cps[0] < 1 or cps[-1] > cfg.horizon:
        raise ConfigurationError("checkpoints must be strictly increasing within [1, horizon]")
    specs = [
        make_policy_spec(
            name, stats, mode=cfg.mode, big_l=cfg.big_l, explore_scale=cfg.explore_scale,
            dsee_fixed_rate=BASELINE_PRESETS[cfg.baseline_preset], tie_break=cfg.tie_break,
        )
        for name in cfg.policies
    ]
    bc = bound_constants(stats) if cfg.bound else None

    rows: list[tuple] = []
    for spec in specs:
        log.info("simulating %s: %d runs x %d slots", spec.name, cfg.runs, cfg.horizon)
        res = simulate_runs(arms, spec, cfg.horizon, cfg.runs, cfg.master_seed, cps,
                            dynamics=cfg.dynamics, stats=stats, backend=cfg.backend, threads=cfg.threads)
        curve = aggregate(spec.name, res["checkpoints"], res[cfg.regret])
        for t, m, se, nm in zip(curve.checkpoints, curve.mean_regret, curve.std_err, curve.normalized):
            rows.append((int(t), spec.name, float(m), float(se), float(nm)))
    if bc is not None:
        values = bound_curve(cps, bc, cfg.bound_offset)
        for t, v in zip(cps, values):
            lt = math.log(t)
            rows.append((int(t), "bound", float(v), 0.0, v / lt if lt > 0 else math.nan))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t, name, m, se, nm in rows:
        w.writerow((t, name, _fmt(m), _fmt(se), _fmt(nm)))
    note = "bound shown up to an additive constant (offset)" if bc is not None else None
    return ExperimentResult(cfg, scenario, rows, buf.getvalue(), note)


def sidecar(result: ExperimentResult) -> dict:
    stats = instance_stats(list(result.scenario.arms), result.config.epsilon, result.config.delta)
    out = {
        "version": __version__,
        "config": result.config.to_dict(),
        "scenario_arms": [a.to_dict() for a in result.scenario.arms],
        "backend": resolve(result.config.backend),
        "big_l": stats.big_l,
        "means": stats.means.tolist(),
    }
    if result.bound_note:
        out["bound_note"] = result.bound_note
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="restless-asr", description=__doc__.splitlines()[0])
    p.add_argument("--scenario", help=f"preset ({', '.join(PRESETS)}) or scenario JSON path")
    p.add_argument("--policies", default="asr,dsee,rca", help="comma-separated subset of " + ",".join(POLICY_NAMES))
    p.add_argument("--mode", default="practical", choices=["practical", "theoretical"])
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--horizon", type=int, default=100_000)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    p.add_argument("--checkpoints", help="comma-separated slots (default: 50 log-spaced in [100, horizon])")
    p.add_argument("--output", "-o", help="CSV path (default: stdout); sidecar goes to <output>.json")
    p.add_argument("--bound", action="store_true", help="append the regret bound as policy 'bound'")
    p.add_argument("--bound-offset", type=float, default=0.0)
    p.add_argument("--big-l", type=float, help="override the concentration constant L")
    p.add_argument("--explore-scale", type=float, default=1.0, help="scale baseline exploration constants")
    p.add_argument("--baseline-preset", default="default", choices=sorted(BASELINE_PRESETS),
                   help="liu10: DSEE explores at rate 10 ln t per arm")
    p.add_argument("--tie-break", default="deficit", choices=TIE_BREAKS)
    p.add_argument("--dynamics", default="restless", choices=[d.value for d in Dynamics])
    p.add_argument("--regret", default="pseudo", choices=["pseudo", "realized"])
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--backend", default="auto", choices=["auto", "compiled", "python"])
    p.add_argument("--from-config", metavar="SIDECAR", help="rerun from a sidecar JSON (other flags except --output ignored)")
    p.add_argument("--list-scenarios", action="store_true")
    p.add_argument("--dump-scenario", metavar="NAME", help="print a scenario as JSON and exit")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    if not ns.scenario:
        raise ConfigurationError("--scenario is required")
    try:
        cps = None if ns.checkpoints is None else [int(x) for x in ns.checkpoints.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError("checkpoints must be integers") from None
    return ExperimentConfig(
        scenario=ns.scenario,
        policies=[p.strip() for p in ns.policies.split(",") if p.strip()],
        mode=ns.mode,
        epsilon=ns.epsilon,
        delta=ns.delta,
        horizon=ns.horizon,
        runs=ns.runs,
        master_seed=ns.seed,
        checkpoints=cps,
        output=ns.output,
        bound=ns.bound,
        bound_offset=ns.bound_offset,
        big_l=ns.big_l,
        explore_scale=ns.explore_scale,
        baseline_preset=ns.baseline_preset,
        tie_break=ns.tie_break,
        dynamics=ns.dynamics,
        regret=ns.regret,
        threads=ns.threads,
        backend=ns.backend,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(ns.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if ns.list_scenarios:
            for name in PRESETS:
                print(f"{name}\t{load_scenario(name).description}")
            return 0
        if ns.dump_scenario:
            print(json.dumps(load_scenario(ns.dump_scenario).to_dict(), indent=2))
            return 0
        embedded = None
        if ns.from_config:
            data = json.loads(Path(ns.from_config).read_text())
            cfg = ExperimentConfig.from_dict(data["config"])
            embedded = data.get("scenario_arms")
            if ns.output:
                cfg.output = ns.output
        else:
            cfg = config_from_args(ns)
        result = run_experiment(cfg, embedded_arms=embedded)
    except (ChainError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.output:
        out = Path(cfg.output)
        out.write_text(result.csv_text)
        Path(str(out) + ".json").write_text(json.dumps(sidecar(result), indent=2, sort_keys=True) + "\n")
        log.info("wrote %s and %s.json", out, out)
    else:
        sys.stdout.write(result.csv_text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
