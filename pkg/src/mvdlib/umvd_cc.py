"""Constant-factor ultrametric repair by peeling the top distance level.

Each call turns the largest working distance into a correlation clustering
instance, clusters it with :func:`agreement_cluster`, pins every cross-cluster
pair at the top value, caps in-cluster pairs at the next value down and
recurses into each cluster.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DistanceMatrix, RepairResult, as_instance
from .corrclust import AgreementParams, SignedGraph, agreement_cluster


def build_cc_level(x, w_max: float | None = None) -> SignedGraph:
    """+ for pairs strictly below ``w_max``, - for pairs at ``w_max``."""
    a = x.array if isinstance(x, DistanceMatrix) else np.asarray(x, dtype=np.float64)
    n = a.shape[0]
    iu = np.triu_indices(n, k=1)
    top = a[iu].max() if n > 1 else 0.0
    if w_max is None:
        w_max = top
    elif n > 1 and w_max != top:
        raise ValueError(f"w_max={w_max} is not the largest entry ({top})")
    return SignedGraph(a < w_max)


@dataclass
class PeelCall:
    members: tuple[int, ...]
    w_max: float
    parent_w_max: float | None
    clusters: tuple[tuple[int, ...], ...] = ()


@dataclass
class PeelTrace:
    calls: list[PeelCall] = field(default_factory=list)


def umvd_constant(x, params: AgreementParams = AgreementParams(), trace: bool = False) -> RepairResult:
    """Repair an unweighted instance into an ultrametric.

    A cluster whose working distances are all equal is already an ultrametric
    and is kept as is.  The reported cost is against the original input, not
    the capped working copy.
    """
    inst = as_instance(x)
    if not inst.unit_weights:
        raise ValueError("umvd_constant takes unit-weight instances only")
    n = inst.n
    work = inst.distances.copy_array()
    out = inst.distances.copy_array()
    tr = PeelTrace() if trace else None

    stack = [(np.arange(n, dtype=np.int64), None)]
    while stack:
        members, parent = stack.pop()
        if members.size <= 1:
            continue
        sub = work[np.ix_(members, members)]
        vals = sub[np.triu_indices(members.size, k=1)]
        w_max = vals.max()
        below = vals[vals < w_max]
        if below.size == 0:
            out[np.ix_(members, members)] = sub
            if tr is not None:
                tr.calls.append(PeelCall(tuple(members.tolist()), float(w_max), parent, (tuple(members.tolist()),)))
            continue
        w_next = below.max()
        clustering = agreement_cluster(build_cc_level(sub, w_max), params)
        lab = clustering.labels()
        same = lab[:, None] == lab[None, :]
        block = np.where(same, np.minimum(sub, w_next), w_max)
        np.fill_diagonal(block, 0.0)
        work[np.ix_(members, members)] = block
        out[np.ix_(members, members)] = block
        parts = [members[list(c)] for c in clustering.clusters]
        if tr is not None:
            tr.calls.append(PeelCall(tuple(members.tolist()), float(w_max), parent,
                                     tuple(tuple(p.tolist()) for p in parts)))
        for part in reversed(parts):
            stack.append((part, float(w_max)))
    return RepairResult.build(inst, DistanceMatrix(out), tr)
