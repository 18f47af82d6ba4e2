"""Randomised pivot repair for metrics and ultrametrics.

Each round freezes the distances at a pivot and minimally rewrites the
opposite side of every triangle through it.  Pivots come from a
:class:`PivotSource`: a seeded RNG or an explicit sequence of point indices.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .core import DistanceMatrix, RepairResult, as_matrix


class InsufficientPivots(ValueError):
    pass


@dataclass(frozen=True)
class PivotSource:
    seed: int | None = None
    sequence: tuple[int, ...] | None = None

    def __post_init__(self):
        if (self.seed is None) == (self.sequence is None):
            raise ValueError("give exactly one of seed or sequence")
        if self.sequence is not None:
            seq = tuple(int(p) for p in self.sequence)
            if len(set(seq)) != len(seq):
                raise ValueError("explicit pivot sequence repeats a point")
            object.__setattr__(self, "sequence", seq)

    @classmethod
    def seeded(cls, seed: int) -> "PivotSource":
        return cls(seed=int(seed))

    @classmethod
    def explicit(cls, sequence: Sequence[int]) -> "PivotSource":
        return cls(sequence=tuple(sequence))

    @property
    def is_explicit(self) -> bool:
        return self.sequence is not None


def as_pivot_source(pivots) -> PivotSource:
    if isinstance(pivots, PivotSource):
        return pivots
    if isinstance(pivots, (int, np.integer)):
        return PivotSource.seeded(int(pivots))
    return PivotSource.explicit(pivots)


@dataclass
class PivotStep:
    pivot: int
    changes: list[tuple[tuple[int, int], float, float]]


@dataclass
class PivotTrace:
    n: int
    steps: list[PivotStep] = field(default_factory=list)
    mod_count: np.ndarray = None

    def __post_init__(self):
        if self.mod_count is None:
            self.mod_count = np.zeros((self.n, self.n), dtype=np.int64)

    def record(self, pivot, j, k, old, x):
        changes = []
        for a, b, o in zip(j.tolist(), k.tolist(), old.tolist()):
            a, b = (a, b) if a < b else (b, a)
            changes.append(((a, b), o, float(x[a, b])))
            self.mod_count[a, b] += 1
            self.mod_count[b, a] += 1
        self.steps.append(PivotStep(int(pivot), changes))

    @property
    def pivots(self) -> list[int]:
        return [s.pivot for s in self.steps]

    def pair_counts(self) -> np.ndarray:
        """Modification count of every unordered pair, row-major."""
        return self.mod_count[np.triu_indices(self.n, k=1)]

    def to_jsonl(self) -> str:
        lines = []
        for s, step in enumerate(self.steps):
            lines.append(json.dumps({
                "step": s,
                "pivot": step.pivot,
                "changes": [[a, b, old, new] for (a, b), old, new in step.changes],
            }))
        return "\n".join(lines) + ("\n" if lines else "")


def _explicit_prefix(src: PivotSource, n: int, rounds: int) -> list[int]:
    seq = list(src.sequence)
    bad = [p for p in seq if not 0 <= p < n]
    if bad:
        raise ValueError(f"pivot {bad[0]} out of range for n={n}")
    if len(seq) < rounds:
        raise InsufficientPivots(f"insufficient pivots: need {rounds}, got {len(seq)}")
    return seq[:rounds]


def _run_global(x: DistanceMatrix, pivots, ultra: bool, trace: bool, backend) -> RepairResult:
    src = as_pivot_source(pivots)
    n = x.n
    a = x.copy_array()
    rounds = max(n - 2, 0)
    tr = PivotTrace(n) if trace else None
    live = np.arange(n, dtype=np.int64)
    if src.is_explicit:
        order = _explicit_prefix(src, n, rounds)
        rng = None
    else:
        rng = np.random.default_rng(src.seed)
    for r in range(rounds):
        if rng is None:
            p = order[r]
            if p not in live:
                raise ValueError(f"pivot {p} is not live")
        else:
            p = int(live[rng.integers(live.size)])
        rest = live[live != p]
        j, k, old = kernels.pivot_step(a, rest, p, ultra, backend)
        if tr is not None:
            tr.record(p, j, k, old, a)
        live = rest
    return RepairResult.build(x, DistanceMatrix(a), tr)


def mvd_pivot(x, pivots=0, trace: bool = False, backend: str | None = None) -> RepairResult:
    """Repair ``x`` into a metric by random pivoting.

    For each pivot ``i`` and remaining pair ``(j, k)``: lower ``x(j, k)`` to
    ``x(i, j) + x(i, k)`` when strictly above it, raise it to
    ``|x(i, j) - x(i, k)|`` when strictly below; then drop ``i``.  Stops
    when two points remain, so an explicit sequence needs ``n - 2`` pivots.
    """
    return _run_global(as_matrix(x), pivots, False, trace, backend)


def _split_by_pivot(a: np.ndarray, p: int, rest: np.ndarray) -> list[np.ndarray]:
    vals = a[p, rest]
    order = np.argsort(vals, kind="stable")
    vals, rest = vals[order], rest[order]
    cuts = np.nonzero(np.diff(vals))[0] + 1
    return [np.sort(part) for part in np.split(rest, cuts)]


def umvd_pivot(x, pivots=0, trace: bool = False, backend: str | None = None,
               literal: bool = False) -> RepairResult:
    """Repair ``x`` into an ultrametric by random pivoting.

    Pivot rule for a remaining pair ``(j, k)``: if ``x(i, j) == x(i, k)`` the
    pair is capped at that value, otherwise it is set to
    ``max(x(i, j), x(i, k))``.  After a pivot the remaining points split into
    clusters of equal distance to it, and clusters never interact again, so by
    default each cluster is recursed on separately with its own uniformly
    chosen pivot.  ``literal=True`` runs the unsplit version over all live
    points instead (same output for the same explicit sequence).
    """
    x = as_matrix(x)
    if literal:
        return _run_global(x, pivots, True, trace, backend)
    src = as_pivot_source(pivots)
    n = x.n
    a = x.copy_array()
    tr = PivotTrace(n) if trace else None

    def step(cluster: np.ndarray, p: int) -> list[np.ndarray]:
        rest = cluster[cluster != p]
        j, k, old = kernels.pivot_step(a, rest, p, True, backend)
        if tr is not None:
            tr.record(p, j, k, old, a)
        return _split_by_pivot(a, p, rest)

    if not src.is_explicit:
        rng = np.random.default_rng(src.seed)
        stack = [np.arange(n, dtype=np.int64)]
        while stack:
            cluster = stack.pop()
            if cluster.size <= 2:
                continue
            p = int(cluster[rng.integers(cluster.size)])
            stack.extend(reversed(step(cluster, p)))
        return RepairResult.build(x, DistanceMatrix(a), tr)

    seq = list(src.sequence)
    bad = [p for p in seq if not 0 <= p < n]
    if bad:
        raise ValueError(f"pivot {bad[0]} out of range for n={n}")
    clusters = {0: np.arange(n, dtype=np.int64)}
    owner = np.zeros(n, dtype=np.int64)
    pending = 1 if n > 2 else 0
    next_id = 1
    for p in seq:
        if pending == 0:
            break
        cid = int(owner[p])
        cluster = clusters.get(cid)
        if cluster is None or cluster.size <= 2:
            continue
        del clusters[cid]
        pending -= 1
        for part in step(cluster, p):
            clusters[next_id] = part
            owner[part] = next_id
            if part.size > 2:
                pending += 1
            next_id += 1
        owner[p] = -1
    if pending:
        raise InsufficientPivots("insufficient pivots: a cluster of 3+ points was never pivoted")
    return RepairResult.build(x, DistanceMatrix(a), tr)


def pivot_clusters(x, pivot: int, points: Sequence[int] | None = None) -> dict[float, list[int]]:
    """Group ``points`` (default: all but the pivot) by their distance to ``pivot``."""
    x = as_matrix(x)
    if points is None:
        points = [j for j in range(x.n) if j != pivot]
    groups: dict[float, list[int]] = {}
    for j in points:
        if j == pivot:
            continue
        groups.setdefault(x[pivot, j], []).append(int(j))
    return {v: sorted(groups[v]) for v in sorted(groups)}
