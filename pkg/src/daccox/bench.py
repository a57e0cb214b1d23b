"""Monte Carlo benchmark harness: replicate simulate+fit over a config grid.

Each replicate draws its data seed from ``SeedSequence([seed, replicate])``
so reruns with equal flags reproduce every statistical number bitwise.
Timing fields (``wall_seconds``, ``stage_seconds``) are the only
non-reproducible part of a report.
"""

from __future__ import annotations

import logging
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .inference import (
    DacFitResult,
    PathConfig,
    fit_dac,
    fit_full_adaptive_lasso_oracle,
    fit_full_penalized_pl,
)
from .simulate import ScenarioConfig, covariance, generate

__all__ = ["ESTIMATORS", "BenchSpec", "replicate_seed", "run_config", "run_bench", "format_table", "gmse"]

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
ESTIMATORS = ("dac_i1", "dac_i2", "dac_i3", "full", "full_lin")
TIMING_KEYS = ("wall_seconds", "stage_seconds")


@dataclass(frozen=True)
class BenchSpec:
    scenario: str
    n0: int
    v: float
    p: int | None = None
    p_ind: int | None = None
    p_dep: int | None = None
    k_shards: int = 10

    def scenario_config(self, seed: int) -> ScenarioConfig:
        return ScenarioConfig(self.scenario, self.n0, self.v, seed, p=self.p, p_ind=self.p_ind, p_dep=self.p_dep)


def replicate_seed(seed: int, replicate: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(replicate)]).generate_state(1)[0])


def gmse(beta_hat: np.ndarray, beta0: np.ndarray, cov: np.ndarray) -> float:
    diff = np.asarray(beta_hat) - beta0
    return float(diff @ cov @ diff)


def _fitter(tag: str, k_shards: int, threads: int, path_config: PathConfig) -> Callable:
    if tag.startswith("dac_i"):
        n_iter = int(tag[len("dac_i"):])
        return lambda d, seed: fit_dac(d, k_shards, n_iter, seed=seed, threads=threads, path_config=path_config)
    if tag == "full":
        return lambda d, seed: fit_full_penalized_pl(d, path_config=path_config)
    if tag == "full_lin":
        return lambda d, seed: fit_full_adaptive_lasso_oracle(d, path_config=path_config)
    raise ValueError(f"unknown estimator {tag!r}")


def _groups(cfg: ScenarioConfig) -> list[tuple[str, float, np.ndarray]]:
    beta0 = cfg.beta
    blocks = [("", np.arange(cfg.p))]
    if cfg.scenario == "IV":
        blocks = [("ind:", np.arange(cfg.p_ind)), ("dep:", cfg.p_ind + np.arange(cfg.p_dep))]
    out = []
    for prefix, idx in blocks:
        vals = beta0[idx]
        for v in sorted(set(vals.tolist()), reverse=True):
            out.append((f"{prefix}{v:g}", float(v), idx[vals == v]))
    return out


def _replicate(spec: BenchSpec, estimators, seed: int, r: int, threads: int, path_config: PathConfig):
    rseed = replicate_seed(seed, r)
    cfg = spec.scenario_config(rseed)
    data = generate(cfg)
    fits: dict[str, DacFitResult] = {}
    for tag in estimators:
        t0 = time.perf_counter()
        fit = _fitter(tag, spec.k_shards, threads, path_config)(data, rseed)
        fit.timings.setdefault("total", time.perf_counter() - t0)
        fits[tag] = fit
    return cfg, data.d0 / data.n_subjects, fits


def _summarize(cfg: ScenarioConfig, tag: str, fits: Sequence[DacFitResult]) -> dict:
    beta0 = cfg.beta
    cov = covariance(cfg)
    hats = np.array([f.beta_hat for f in fits])
    tildes = np.array([f.beta_tilde for f in fits])
    groups = []
    for label, value, idx in _groups(cfg):
        err = hats[:, idx] - value
        covered, n_ci = 0, 0
        for f in fits:
            pos = {int(j): k for k, j in enumerate(f.active_set)}
            for j in idx:
                k = pos.get(int(j))
                if k is not None:
                    n_ci += 1
                    covered += int(f.ci_lower[k] <= beta0[j] <= f.ci_upper[k])
        groups.append(
            {
                "label": label,
                "true_value": value,
                "indices": [int(j) for j in idx],
                "bias": float(err.mean()),
                "mse": float((err**2).mean()),
                "pct_zero": float(100.0 * np.mean(hats[:, idx] == 0.0)),
                "coverage": None if value == 0.0 or n_ci == 0 else float(100.0 * covered / n_ci),
                "n_intervals": n_ci,
            }
        )
    stage_keys = sorted(set().union(*(f.timings.keys() for f in fits)))
    return {
        "estimator": tag,
        "n_reps": len(fits),
        "gmse": float(np.mean([gmse(b, beta0, cov) for b in hats])),
        "gmse_unpenalized": float(np.mean([gmse(b, beta0, cov) for b in tildes])),
        "groups": groups,
        "wall_seconds": float(np.median([f.timings["total"] for f in fits])),
        "stage_seconds": {
            k: float(np.median([f.timings.get(k, 0.0) for f in fits])) for k in stage_keys
        },
    }


def run_config(
    spec: BenchSpec,
    reps: int,
    seed: int,
    estimators: Sequence[str] = ESTIMATORS,
    threads: int = 1,
    parallel_reps: int = 1,
    path_config: PathConfig | None = None,
) -> dict:
    path_config = path_config or PathConfig()

    def one(r):
        return _replicate(spec, estimators, seed, r, threads, path_config)

    if parallel_reps > 1:
        with ThreadPoolExecutor(max_workers=parallel_reps) as pool:
            results = list(pool.map(one, range(reps)))
    else:
        results = [one(r) for r in range(reps)]
    cfg = results[0][0]
    config = cfg.to_dict()
    config.pop("seed")
    config["k_shards"] = spec.k_shards
    return {
        "config": config,
        "true_beta": cfg.beta.tolist(),
        "event_fraction": float(np.mean([r[1] for r in results])),
        "estimators": [_summarize(cfg, tag, [r[2][tag] for r in results]) for tag in estimators],
    }


def machine_info() -> dict:
    return {
        "platform": platform.platform(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpu_count": os.cpu_count(),
    }


def new_report(specs: Sequence[BenchSpec], reps: int, seed: int, estimators: Sequence[str]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "bench_report",
        "package_version": __version__,
        "complete": False,
        "metadata": {
            "seed": seed,
            "reps": reps,
            "estimators": list(estimators),
            "grid": [asdict(s) for s in specs],
            "machine": machine_info(),
        },
        "configs": [],
    }


def run_bench(
    specs: Sequence[BenchSpec],
    reps: int,
    seed: int,
    estimators: Sequence[str] = ESTIMATORS,
    threads: int = 1,
    parallel_reps: int = 1,
    path_config: PathConfig | None = None,
    on_progress: Callable[[dict], None] | None = None,
) -> dict:
    """Run every config in ``specs``; ``on_progress`` sees the report after each config."""
    for tag in estimators:
        if tag not in ESTIMATORS:
            raise ValueError(f"unknown estimator {tag!r}")
    report = new_report(specs, reps, seed, estimators)
    for spec in specs:
        log.info("bench config %s", spec)
        report["configs"].append(
            run_config(spec, reps, seed, estimators, threads, parallel_reps, path_config)
        )
        if on_progress is not None:
            on_progress(report)
    report["complete"] = True
    return report


def strip_timings(report: dict) -> dict:
    """Copy of a report without timing or machine fields (the reproducible payload)."""
    out = {k: v for k, v in report.items() if k != "metadata"}
    out["metadata"] = {k: v for k, v in report["metadata"].items() if k != "machine"}
    out["configs"] = [
        {**c, "estimators": [{k: v for k, v in e.items() if k not in TIMING_KEYS} for e in c["estimators"]]}
        for c in report["configs"]
    ]
    return out


def _fmt(x, scale=1.0, digits=2):
    if x is None:
        return "-"
    return f"{x * scale:.{digits}f}"


def format_table(report: dict) -> str:
    """Fixed-width text tables: estimator columns by metric rows."""
    lines = []
    for c in report["configs"]:
        cfg = c["config"]
        ests = c["estimators"]
        title = f"scenario {cfg['scenario']}  n0={cfg['n0']}  p={cfg['p']}  v={cfg['v']}  K={cfg['k_shards']}"
        title += f"  reps={ests[0]['n_reps'] if ests else 0}  censoring={100 * (1 - c['event_fraction']):.1f}%"
        lines.append(title)
        width = 11
        head = f"{'':<8}{'':<14}" + "".join(f"{e['estimator']:>{width}}" for e in ests)
        rule = "-" * len(head)
        lines += [rule, head, rule]

        def row(group, metric, values):
            lines.append(f"{group:<8}{metric:<14}" + "".join(f"{v:>{width}}" for v in values))

        row("", "Time (s)", [_fmt(e["wall_seconds"], 1.0, 3) for e in ests])
        row("", "GMSE x1e-5", [_fmt(e["gmse"], 1e5) for e in ests])
        row("", "GMSE~ x1e-5", [_fmt(e["gmse_unpenalized"], 1e5) for e in ests])
        for gi, g in enumerate(ests[0]["groups"] if ests else []):
            lines.append(rule)
            gs = [e["groups"][gi] for e in ests]
            row(g["label"], "%zero", [_fmt(x["pct_zero"], 1.0, 1) for x in gs])
            row("", "Bias x1e-4", [_fmt(x["bias"], 1e4) for x in gs])
            row("", "MSE x1e-5", [_fmt(x["mse"], 1e5) for x in gs])
            if g["true_value"] != 0.0:
                row("", "CovP", [_fmt(x["coverage"], 1.0, 1) for x in gs])
        lines += [rule, ""]
    return "\n".join(lines)
