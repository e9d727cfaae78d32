"""Replicated estimation experiments: build sketches over synthetic streams,
estimate, and aggregate percent errors, empirical variances, efficiency
ratios and pivot diagnostics.

Replicates run in one of two modes.  "hash" ingests every stream through
the real seeded-hash path; "sampled" draws each sketch state directly from
its exact sampling distribution under the truly-random-hash idealization
(see sampling module), which makes desk-scale replication of large-c
configurations affordable.  "auto" picks hash while c*m*replicates stays
small.  Either way a (config, seed) pair fixes the report bytes.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import sampling
from .errors import SketchError
from .hashing import fnv1a64, mix64
from .inference import optimal_lambda
from .order_sketch import (
    BernoulliSketch,
    ContinuousMaxSketch,
    GeometricMaxSketch,
    KthOrderSketch,
)
from .baselines import HyperLogLogSketch, LogLogSketch, MinCountSketch
from .projection import ProjectionSketch
from .serialize import json_dumps
from .streams import exact_count, generate_stream

ALGOS = ("max-uniform", "max-exp", "max-geom", "kth", "bernoulli",
         "projection", "median", "loglog", "hll", "mincount")

# full hash ingestion is kept below ~2^25 hashed words per experiment
_HASH_BUDGET = 1 << 25


@dataclass
class ExperimentConfig:
    c: int
    m: int
    algos: tuple = ("max-uniform",)
    replicates: int = 1
    seed: int = 0
    level: float = 0.95
    q: float = 10.0 / 11.0
    p: float | None = None      # bernoulli rate; defaults to lambda0/c
    alpha: float = 0.05
    k: int = 3
    repeats: int = 1
    heavy_tail: bool = False
    d_model: str = "unit"
    deleted_extra: int = 0
    method: str = "auto"        # hash | sampled | auto

    def __post_init__(self):
        if self.c < 1 or self.m < 1 or self.replicates < 1:
            raise ValueError("c, m and replicates must all be >= 1")
        self.algos = tuple(self.algos)
        for a in self.algos:
            if a not in ALGOS:
                raise ValueError(f"unknown algorithm {a!r}")
        if self.method not in ("hash", "sampled", "auto"):
            raise ValueError(f"unknown method {self.method!r}")

    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        cost = self.c * self.m * self.replicates * max(1, self.repeats)
        return "hash" if cost <= _HASH_BUDGET else "sampled"

    def bernoulli_p(self) -> float:
        return self.p if self.p is not None else optimal_lambda() / self.c

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ExperimentReport:
    config: dict
    method: str
    exact_c: int
    replicates: dict = field(default_factory=dict)   # algo -> column arrays
    summary: dict = field(default_factory=dict)      # algo -> aggregates
    variance_ratios: dict = field(default_factory=dict)

    def to_json(self, canonical: bool = False, indent: int | None = 2) -> str:
        doc = {
            "format": "cardsketch-report",
            "version": 1,
            "config": self.config,
            "method": self.method,
            "exact_c": self.exact_c,
            "summary": self.summary,
            "variance_ratios": self.variance_ratios,
            "replicates": self.replicates,
        }
        if canonical:
            doc["summary"] = {
                a: {k: v for k, v in s.items() if k != "wall_s"}
                for a, s in self.summary.items()
            }
        return json_dumps(doc, indent=indent, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["algo", "replicate", "c_hat", "pct_error",
                    "ci_lo", "ci_hi", "covered"])
        for algo in sorted(self.replicates):
            cols = self.replicates[algo]
            for i in range(len(cols["c_hat"])):
                w.writerow([
                    algo, i, cols["c_hat"][i], cols["pct_error"][i],
                    cols["ci_lo"][i], cols["ci_hi"][i], int(cols["covered"][i]),
                ])
        return buf.getvalue()


def _rep_rng(seed: int, rep: int):
    return np.random.default_rng((int(seed) & 0xFFFFFFFFFFFFFFFF, 0xC0DE, rep))


def _algo_salt(seed: int, rep: int, algo: str) -> int:
    return mix64(mix64(seed ^ (rep * 0x9E3779B97F4A7C15)) ^ fnv1a64(algo.encode()))


def _build_hash_sketch(algo: str, cfg: ExperimentConfig, salt: int, stream):
    if algo in ("projection", "median"):
        sk = ProjectionSketch(cfg.m, cfg.alpha, salt)
        sk.add_batch(stream.keys, stream.d)
        return sk
    if algo in ("max-uniform", "max-exp"):
        sk = ContinuousMaxSketch(cfg.m, salt,
                                 "uniform" if algo == "max-uniform" else "exponential")
    elif algo == "max-geom":
        sk = GeometricMaxSketch(cfg.m, cfg.q, salt)
    elif algo == "kth":
        sk = KthOrderSketch(cfg.m, cfg.k, salt)
    elif algo == "bernoulli":
        sk = BernoulliSketch(cfg.m, cfg.bernoulli_p(), salt)
    elif algo == "loglog":
        sk = LogLogSketch(cfg.m, salt)
    elif algo == "hll":
        sk = HyperLogLogSketch(cfg.m, salt)
    else:
        sk = MinCountSketch(cfg.m, salt)
    if algo in ("max-uniform", "max-exp", "max-geom", "kth", "bernoulli"):
        sk.add_batch(stream.keys, stream.d)
    else:
        sk.add_batch(stream.keys)
    return sk


def _sample_sketch(algo: str, cfg: ExperimentConfig, c: int, rng):
    if algo in ("max-uniform", "max-exp"):
        return sampling.sample_continuous(
            c, cfg.m, rng, "uniform" if algo == "max-uniform" else "exponential")
    if algo == "max-geom":
        return sampling.sample_geometric(c, cfg.m, cfg.q, rng)
    if algo == "kth":
        return sampling.sample_kth(c, cfg.k, cfg.m, rng)
    if algo == "bernoulli":
        return sampling.sample_bernoulli(c, cfg.m, cfg.bernoulli_p(), rng)
    if algo in ("projection", "median"):
        return sampling.sample_projection(c, cfg.m, cfg.alpha, rng)
    if algo == "loglog":
        return sampling.sample_loglog(c, cfg.m, rng)
    if algo == "hll":
        return sampling.sample_hll(c, cfg.m, rng)
    return sampling.sample_mincount(c, cfg.m, rng)


def _estimate(algo: str, sk, level: float):
    if algo == "median":
        c_hat = sk.median_estimate()
        # the median estimator carries no interval of its own
        return c_hat, (0.0, math.inf), None
    est = sk.estimate(level)
    pivot = None
    if algo in ("max-uniform", "max-exp", "projection"):
        pivot = sk.pivot_sum()
    return est.c_hat, est.ci, pivot


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    method = cfg.resolved_method()
    c_exact = cfg.c
    cols = {
        a: {"c_hat": [], "pct_error": [], "ci_lo": [], "ci_hi": [],
            "covered": [], "pivot": [], "errors": 0}
        for a in cfg.algos
    }
    wall = {a: 0.0 for a in cfg.algos}
    state_bytes = {a: None for a in cfg.algos}

    for rep in range(cfg.replicates):
        rng = _rep_rng(cfg.seed, rep)
        stream = None
        if method == "hash":
            stream = generate_stream(
                cfg.c, seed=int(rng.integers(0, 2**63)), repeats=cfg.repeats,
                heavy_tail=cfg.heavy_tail, d_model=cfg.d_model,
                deleted_extra=cfg.deleted_extra)
            c_exact = exact_count(stream)
        shared_projection = None
        for algo in cfg.algos:
            t0 = time.perf_counter()
            try:
                if algo in ("projection", "median") and shared_projection is not None:
                    sk = shared_projection
                elif method == "hash":
                    sk = _build_hash_sketch(algo, cfg, _algo_salt(cfg.seed, rep, algo), stream)
                else:
                    sk = _sample_sketch(algo, cfg, cfg.c, rng)
                if algo in ("projection", "median"):
                    shared_projection = sk
                c_hat, ci, pivot = _estimate(algo, sk, cfg.level)
            except SketchError:
                cols[algo]["errors"] += 1
                wall[algo] += time.perf_counter() - t0
                continue
            wall[algo] += time.perf_counter() - t0
            state_bytes[algo] = sk.state_bytes()
            cols[algo]["c_hat"].append(c_hat)
            cols[algo]["pct_error"].append(100.0 * abs(c_hat - c_exact) / c_exact)
            cols[algo]["ci_lo"].append(ci[0])
            cols[algo]["ci_hi"].append(ci[1])
            cols[algo]["covered"].append(ci[0] <= c_exact <= ci[1])
            if pivot is not None:
                cols[algo]["pivot"].append(pivot * c_exact)

    summary = {}
    for algo in cfg.algos:
        ch = np.array(cols[algo]["c_hat"])
        pe = np.array(cols[algo]["pct_error"])
        entry = {
            "replicates": len(ch),
            "failed": cols[algo]["errors"],
            "mean_c_hat": float(ch.mean()) if len(ch) else None,
            "mean_pct_error": float(pe.mean()) if len(pe) else None,
            "sd_pct_error": float(pe.std(ddof=1)) if len(pe) > 1 else None,
            "empirical_var": float(ch.var(ddof=1)) if len(ch) > 1 else None,
            "coverage": float(np.mean(cols[algo]["covered"])) if len(ch) else None,
            "state_bytes": state_bytes[algo],
            "wall_s": round(wall[algo], 6),
        }
        if entry["empirical_var"]:
            entry["are_empirical"] = (c_exact**2 / cfg.m) / entry["empirical_var"]
        pivots = cols[algo]["pivot"]
        if len(pivots) > 7:
            ks = stats.kstest(np.array(pivots), "gamma", args=(cfg.m,))
            entry["pivot_ks_stat"] = float(ks.statistic)
            entry["pivot_ks_pvalue"] = float(ks.pvalue)
        summary[algo] = entry

    ratios = {}
    for a in cfg.algos:
        for b in cfg.algos:
            va, vb = summary[a]["empirical_var"], summary[b]["empirical_var"]
            if a != b and va and vb:
                ratios[f"{a}/{b}"] = va / vb

    report = ExperimentReport(
        config=asdict(cfg), method=method, exact_c=c_exact,
        summary=summary, variance_ratios=ratios,
    )
    for algo in cfg.algos:
        report.replicates[algo] = {
            k: list(map(float, v)) if k != "covered" else list(map(bool, v))
            for k, v in cols[algo].items()
            if k in ("c_hat", "pct_error", "ci_lo", "ci_hi", "covered", "pivot")
        }
    return report
