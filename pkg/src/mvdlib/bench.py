"""Empirical approximation-ratio harness.

A run is ``(algorithms, generator spec, seeds)``.  Every output is checked
for validity before its cost is recorded; references come from the exact
oracle when the instance is small enough, otherwise from the known optimum
of the construction when there is one.
"""
from __future__ import annotations

import json
import math
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import FLOAT_METRIC_TOL, DistanceMatrix, is_metric, is_ultrametric
from .instances import (gen_hypercube, gen_random_metric_noise, gen_random_ultra_noise, gen_star,
                        hypercube_noised_pairs)
from .lp_round import lp_ultra
from .oracle import exact_mvd, exact_umvd
from .pivot import mvd_pivot, umvd_pivot
from .umvd_cc import umvd_constant

ALGOS = ("pivot-metric", "pivot-ultra", "cc-ultra", "lp-ultra")
ULTRA_ALGOS = ("pivot-ultra", "cc-ultra", "lp-ultra")
GENERATORS = ("star", "hypercube", "random-ultra", "random-metric")


class ValidationFailure(RuntimeError):
    """An algorithm returned an output that fails its own validity check."""


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    params: tuple[tuple[str, str], ...] = ()

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        kind, _, rest = text.partition(":")
        if kind not in GENERATORS:
            raise ValueError(f"unknown generator {kind!r}; choose from {', '.join(GENERATORS)}")
        params = []
        for item in filter(None, rest.split(",")):
            key, eq, value = item.partition("=")
            if not eq:
                raise ValueError(f"bad generator parameter {item!r}")
            params.append((key.strip(), value.strip()))
        return cls(kind, tuple(sorted(params)))

    def get(self, key: str, default=None, cast=int):
        for k, v in self.params:
            if k == key:
                return cast(v)
        if default is None:
            raise ValueError(f"generator {self.kind} needs parameter {key}")
        return default

    @property
    def seeded(self) -> bool:
        return self.kind.startswith("random")

    def build(self, seed: int) -> DistanceMatrix:
        if self.kind == "star":
            return gen_star(self.get("m"))
        if self.kind == "hypercube":
            return gen_hypercube(self.get("d"))
        if self.kind == "random-ultra":
            x, _ = gen_random_ultra_noise(self.get("n"), self.get("levels", 3),
                                          self.get("flip", 0.05, float), seed)
            return x
        x, _ = gen_random_metric_noise(self.get("n"), self.get("flip", 0.05, float), seed)
        return x

    def known_reference(self):
        """``(value, label)`` for constructions with a known optimum or bound."""
        if self.kind == "star":
            return 1.0, "opt"
        if self.kind == "hypercube":
            d = self.get("d")
            return float(len(hypercube_noised_pairs(d))), "nd/2"
        return None, None

    def __str__(self):
        return self.kind + (":" + ",".join(f"{k}={v}" for k, v in self.params) if self.params else "")


@dataclass
class Row:
    algo: str
    seed: int
    n: int
    cost: float
    reference: float | None
    ref_kind: str | None
    mod_hist: dict[int, int] | None
    seconds: float

    @property
    def ratio(self):
        if self.reference is None:
            return None
        if self.reference == 0:
            return 1.0 if self.cost == 0 else math.inf
        return self.cost / self.reference


def run_algo(algo: str, x: DistanceMatrix, seed: int, lp_solver: str = "builtin", eps=None):
    """Run one algorithm; returns the repair result."""
    if algo == "pivot-metric":
        return mvd_pivot(x, seed, trace=True)
    if algo == "pivot-ultra":
        return umvd_pivot(x, seed, trace=True)
    if algo == "cc-ultra":
        from .corrclust import AgreementParams

        return umvd_constant(x, AgreementParams() if eps is None else AgreementParams(eps))
    if algo == "lp-ultra":
        res, _ = lp_ultra(x, solver=lp_solver)
        return res
    raise ValueError(f"unknown algorithm {algo!r}; choose from {', '.join(ALGOS)}")


def _check(algo: str, y: DistanceMatrix) -> None:
    ok = is_metric(y, tol=FLOAT_METRIC_TOL) if algo == "pivot-metric" else is_ultrametric(y)
    if not ok:
        kind = "metric" if algo == "pivot-metric" else "ultrametric"
        raise ValidationFailure(f"{algo} produced an output that is not a {kind}")


def _hist(counts: np.ndarray) -> dict[int, int]:
    return {int(k): int(v) for k, v in sorted(Counter(counts.tolist()).items())}


def _one(algo, spec: GeneratorSpec, seed: int, oracle_limit: int, lp_solver, cache) -> Row:
    x = spec.build(seed)
    t0 = time.perf_counter()
    res = run_algo(algo, x, seed, lp_solver)
    seconds = time.perf_counter() - t0
    _check(algo, res.output)
    ref, kind = spec.known_reference()
    if x.n <= oracle_limit:
        key = (algo == "pivot-metric", seed if spec.seeded else None)
        if key not in cache:
            cache[key] = (exact_mvd if key[0] else exact_umvd)(x)[0]
        ref, kind = float(cache[key]), "oracle"
    hist = _hist(res.trace.pair_counts()) if res.trace is not None and hasattr(res.trace, "pair_counts") else None
    return Row(algo, seed, x.n, float(res.cost), ref, kind, hist, seconds)


def _ci95(values: np.ndarray) -> tuple[float, float]:
    if values.size < 2:
        m = float(values.mean()) if values.size else math.nan
        return m, m
    m = float(values.mean())
    half = 1.96 * float(values.std(ddof=1)) / math.sqrt(values.size)
    return m - half, m + half


@dataclass
class Summary:
    algo: str
    runs: int
    cost_min: float
    cost_mean: float
    cost_max: float
    ci95: tuple[float, float]
    ratio_min: float | None
    ratio_mean: float | None
    ratio_max: float | None
    reference: str | None
    mod_hist: dict[int, int] | None
    mean_mod: float | None
    seconds: float


def summarize(rows: list[Row]) -> Summary:
    costs = np.array([r.cost for r in rows])
    ratios = [r.ratio for r in rows if r.ratio is not None]
    hist = None
    mean_mod = None
    if all(r.mod_hist is not None for r in rows):
        total = Counter()
        for r in rows:
            total.update(r.mod_hist)
        hist = dict(sorted(total.items()))
        pairs = sum(total.values())
        mean_mod = sum(k * v for k, v in total.items()) / pairs if pairs else 0.0
    kinds = sorted({r.ref_kind for r in rows if r.ref_kind})
    return Summary(
        rows[0].algo, len(rows), float(costs.min()), float(costs.mean()), float(costs.max()), _ci95(costs),
        min(ratios) if ratios else None, float(np.mean(ratios)) if ratios else None,
        max(ratios) if ratios else None, "/".join(kinds) or None, hist, mean_mod,
        sum(r.seconds for r in rows))


@dataclass
class Report:
    generator: str
    seeds: list[int]
    rows: list[Row] = field(default_factory=list)
    summaries: list[Summary] = field(default_factory=list)

    def to_json(self, timings: bool = False) -> str:
        lines = []
        for r in self.rows:
            rec = {"type": "row", "algo": r.algo, "seed": r.seed, "n": r.n, "cost": r.cost,
                   "reference": r.reference, "reference_kind": r.ref_kind, "ratio": _finite(r.ratio)}
            if timings:
                rec["seconds"] = r.seconds
            lines.append(json.dumps(rec, sort_keys=True))
        for s in self.summaries:
            rec = {"type": "summary", "generator": self.generator, "algo": s.algo, "runs": s.runs,
                   "cost_min": s.cost_min, "cost_mean": s.cost_mean, "cost_max": s.cost_max,
                   "cost_mean_ci95": list(s.ci95), "ratio_min": _finite(s.ratio_min),
                   "ratio_mean": _finite(s.ratio_mean), "ratio_max": _finite(s.ratio_max),
                   "reference": s.reference, "mean_pair_modifications": s.mean_mod,
                   "modification_histogram": {str(k): v for k, v in s.mod_hist.items()} if s.mod_hist else None}
            if timings:
                rec["seconds"] = s.seconds
            lines.append(json.dumps(rec, sort_keys=True))
        return "\n".join(lines) + "\n"

    def to_text(self, timings: bool = False) -> str:
        head = ["algo", "runs", "cost_min", "cost_mean", "ci95_lo", "ci95_hi", "cost_max",
                "ref", "ratio_min", "ratio_mean", "ratio_max", "mean_mods"]
        if timings:
            head.append("seconds")
        table = [head]
        for s in self.summaries:
            row = [s.algo, str(s.runs), _f(s.cost_min), _f(s.cost_mean), _f(s.ci95[0]), _f(s.ci95[1]),
                   _f(s.cost_max), s.reference or "-", _f(s.ratio_min), _f(s.ratio_mean), _f(s.ratio_max),
                   _f(s.mean_mod)]
            if timings:
                row.append(_f(s.seconds))
            table.append(row)
        widths = [max(len(r[c]) for r in table) for c in range(len(head))]
        out = [f"# generator {self.generator}, {len(self.seeds)} seeds"]
        out += ["  ".join(cell.rjust(w) for cell, w in zip(r, widths)) for r in table]
        for s in self.summaries:
            if s.mod_hist:
                out.append(f"# {s.algo} pair-modification histogram: "
                           + " ".join(f"{k}:{v}" for k, v in s.mod_hist.items()))
        return "\n".join(out) + "\n"


def _finite(v):
    if v is None or math.isfinite(v):
        return v
    return "inf"


def _f(v) -> str:
    if v is None:
        return "-"
    return f"{v:.4f}"


def bench_ratio(algos, generator, seeds, oracle_limit: int = 7, threads: int = 1,
                lp_solver: str = "builtin") -> Report:
    """Run each algorithm on the generator for every seed and collect a report.

    Rows are sorted by ``(algo order, seed)`` whatever the thread count, so the
    report depends only on the inputs.
    """
    if isinstance(algos, str):
        algos = ULTRA_ALGOS if algos == "all-ultra" else tuple(a for a in algos.split(",") if a)
    for a in algos:
        if a not in ALGOS:
            raise ValueError(f"unknown algorithm {a!r}; choose from {', '.join(ALGOS)}")
    spec = generator if isinstance(generator, GeneratorSpec) else GeneratorSpec.parse(generator)
    seeds = sorted(int(s) for s in seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    cache: dict = {}
    # warm the oracle cache serially so worker threads only read it
    x0 = spec.build(seeds[0])
    if x0.n <= oracle_limit:
        for algo in algos:
            for s in (seeds if spec.seeded else seeds[:1]):
                key = (algo == "pivot-metric", s if spec.seeded else None)
                if key not in cache:
                    x = spec.build(s)
                    cache[key] = (exact_mvd if key[0] else exact_umvd)(x)[0]
    jobs = [(a, s) for a in algos for s in seeds]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda job: _one(job[0], spec, job[1], oracle_limit, lp_solver, cache), jobs))
    else:
        rows = [_one(a, spec, s, oracle_limit, lp_solver, cache) for a, s in jobs]
    report = Report(str(spec), seeds, rows)
    for a in algos:
        report.summaries.append(summarize([r for r in rows if r.algo == a]))
    return report
