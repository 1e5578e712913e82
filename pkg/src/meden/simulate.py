"""Seeded Monte Carlo engine comparing estimators by mean squared error.

Each replicate draws its own deterministic substream from (seed, replicate),
so results are bit-identical across runs and across worker-pool sizes: the
pool only changes who computes a replicate, never its stream or the merge
order.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .divergences import divergence_by_name
from .errors import ConfigError, MedenError, SingularFisher
from .estimator import EstimateOptions, EstimateStatus, estimate
from .models import builtin_model
from .umre import UmreOptions, umre_correct

__all__ = ["DistSpec", "MethodSpec", "SimConfig", "MethodResult", "SimReport",
           "generate_sample", "run_simulation", "sim_config_from_dict",
           "GENERATOR_NAME"]

GENERATOR_NAME = "numpy.random.PCG64(SeedSequence([seed, replicate]))"


@dataclass(frozen=True)
class DistSpec:
    kind: str = "normal"
    mean: float = 0.0
    sd: float = 1.0
    dim: int = 1


@dataclass(frozen=True)
class MethodSpec:
    divergence: str  # divergence name, or "truth" for the harness stub
    umre: bool = False

    @property
    def label(self) -> str:
        if self.divergence == "truth":
            return "truth"
        return f"{self.divergence}+umre" if self.umre else self.divergence


@dataclass(frozen=True)
class SimConfig:
    model: str
    theta_true: tuple
    dist: DistSpec
    sample_sizes: tuple
    runs: int
    seed: int
    methods: tuple  # of MethodSpec
    parallelism: int = 1
    grid_points: int = 64
    theta_tol: float = 1e-9


@dataclass
class MethodResult:
    method: str
    n: int
    mse: float
    std_error: float
    failures: int
    runs_used: int


@dataclass
class SimReport:
    config: SimConfig
    results: list = field(default_factory=list)
    generator: str = GENERATOR_NAME
    wall_time_s: float = 0.0


def generate_sample(dist: DistSpec, n: int, seed: int, replicate_index: int) -> np.ndarray:
    """Deterministic sample for one replicate, shape (n, dim)."""
    if dist.kind != "normal":
        raise ConfigError(f"dist.kind: unsupported generator {dist.kind!r}")
    rng = np.random.default_rng([int(seed), int(replicate_index)])
    return rng.normal(dist.mean, dist.sd, size=(n, dist.dim))


def _validate(config: SimConfig) -> None:
    if config.runs < 1:
        raise ConfigError("runs: must be >= 1")
    if not config.sample_sizes:
        raise ConfigError("sample_sizes: must be nonempty")
    if any(n < 4 for n in config.sample_sizes):
        raise ConfigError("sample_sizes: every size must be >= 4")
    if config.parallelism < 1:
        raise ConfigError("parallelism: must be >= 1")
    for ms in config.methods:
        if ms.divergence != "truth":
            divergence_by_name(ms.divergence)  # raises UnknownDivergence
    builtin_model(config.model)


def _replicate(args) -> dict:
    """Per-replicate worker: squared error (or failure string) per method."""
    config, n, rep = args
    model = builtin_model(config.model)
    theta_true = np.asarray(config.theta_true, dtype=float)
    sample = generate_sample(config.dist, n, config.seed, rep)
    opts = EstimateOptions(grid_points=config.grid_points,
                           theta_tol=config.theta_tol)

    estimates: dict[str, object] = {}
    out: dict[str, object] = {}
    for ms in config.methods:
        if ms.divergence == "truth":
            out[ms.label] = 0.0
            continue
        spec = divergence_by_name(ms.divergence)
        if ms.divergence not in estimates:
            estimates[ms.divergence] = estimate(spec, model, sample, opts)
        est = estimates[ms.divergence]
        if est.status is EstimateStatus.NO_FEASIBLE_REGION:
            out[ms.label] = "no_feasible_region"
            continue
        theta = est.theta_hat
        if ms.umre:
            try:
                theta = umre_correct(spec, model, sample, est,
                                     UmreOptions()).theta_umre
            except (SingularFisher, MedenError) as exc:
                out[ms.label] = type(exc).__name__
                continue
        out[ms.label] = float(np.sum((theta - theta_true) ** 2))
    return out


def run_simulation(config: SimConfig) -> SimReport:
    """Run the full study; replicate failures are reported, never folded in."""
    _validate(config)
    start = time.monotonic()
    report = SimReport(config=config)

    for n in config.sample_sizes:
        tasks = [(config, n, rep) for rep in range(config.runs)]
        if config.parallelism > 1:
            with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
                chunk = max(1, config.runs // (4 * config.parallelism))
                rows = list(pool.map(_replicate, tasks, chunksize=chunk))
        else:
            rows = [_replicate(t) for t in tasks]

        for ms in config.methods:
            errs = [r[ms.label] for r in rows]
            sq = np.array([e for e in errs if isinstance(e, float)])
            failures = len(errs) - len(sq)
            if len(sq) == 0:
                mse, se = float("nan"), float("nan")
            else:
                mse = float(sq.mean())
                se = float(sq.std(ddof=1) / np.sqrt(config.runs)) if len(sq) > 1 else 0.0
            report.results.append(MethodResult(
                method=ms.label, n=int(n), mse=mse, std_error=se,
                failures=failures, runs_used=len(sq)))

    report.results.sort(key=lambda r: (r.method, r.n))
    report.wall_time_s = time.monotonic() - start
    return report


def sim_config_from_dict(d: dict) -> SimConfig:
    """Build a SimConfig from parsed JSON, naming the offending field on error."""
    if not isinstance(d, dict):
        raise ConfigError("config: expected a JSON object")

    def need(key, types, default=None):
        if key not in d:
            if default is not None:
                return default
            raise ConfigError(f"{key}: missing required field")
        v = d[key]
        if not isinstance(v, types):
            raise ConfigError(f"{key}: wrong type {type(v).__name__}")
        return v

    model = need("model", str)
    theta_true = need("theta_true", (list, int, float))
    if isinstance(theta_true, (int, float)):
        theta_true = [theta_true]
    dist_d = need("dist", dict, default={"kind": "normal", "mean": 0.0, "sd": 1.0})
    try:
        dist = DistSpec(kind=str(dist_d.get("kind", "normal")),
                        mean=float(dist_d.get("mean", 0.0)),
                        sd=float(dist_d.get("sd", 1.0)),
                        dim=int(dist_d.get("dim", 1)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"dist: {exc}") from None
    sizes = need("sample_sizes", list)
    if not all(isinstance(n, int) for n in sizes):
        raise ConfigError("sample_sizes: entries must be integers")
    runs = need("runs", int)
    seed = need("seed", int)
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed: must fit in 64 unsigned bits")
    methods_raw = need("methods", list)
    methods = []
    for i, mr in enumerate(methods_raw):
        if isinstance(mr, (list, tuple)) and len(mr) == 2 and isinstance(mr[0], str) \
                and isinstance(mr[1], bool):
            methods.append(MethodSpec(divergence=mr[0], umre=mr[1]))
        elif isinstance(mr, dict) and isinstance(mr.get("divergence"), str):
            methods.append(MethodSpec(divergence=mr["divergence"],
                                      umre=bool(mr.get("umre", False))))
        else:
            raise ConfigError(f"methods[{i}]: expected [divergence, umre_flag]")
    parallelism = need("parallelism", int, default=1)
    env = os.environ.get("MEDEN_THREADS")
    if env is not None:
        try:
            parallelism = max(1, int(env))
        except ValueError:
            raise ConfigError("MEDEN_THREADS: not an integer") from None
    cfg = SimConfig(model=model, theta_true=tuple(float(v) for v in theta_true),
                    dist=dist, sample_sizes=tuple(sizes), runs=runs, seed=seed,
                    methods=tuple(methods), parallelism=parallelism,
                    grid_points=int(d.get("grid_points", 64)),
                    theta_tol=float(d.get("theta_tol", 1e-9)))
    _validate(cfg)
    return cfg
