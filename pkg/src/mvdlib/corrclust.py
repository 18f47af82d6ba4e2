"""Agreement correlation clustering on complete signed graphs.

Neighbourhoods are closed: ``N(u)`` contains ``u`` itself.  All fraction
thresholds are compared exactly by integer cross-multiplication against
``eps`` held as a :class:`fractions.Fraction`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

DELTA = 14


class SignedGraph:
    """Complete graph with each pair labelled + or -; stores the + pairs."""

    __slots__ = ("_plus",)

    def __init__(self, plus):
        m = np.array(plus, dtype=bool, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("adjacency must be symmetric")
        np.fill_diagonal(m, False)
        m.flags.writeable = False
        self._plus = m

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "SignedGraph":
        m = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            m[i, j] = m[j, i] = True
        return cls(m)

    @property
    def n(self) -> int:
        return self._plus.shape[0]

    @property
    def plus(self) -> np.ndarray:
        """Open + adjacency (no self loops)."""
        return self._plus

    def closed(self) -> np.ndarray:
        return self._plus | np.eye(self.n, dtype=bool)

    def neighbors(self, u: int) -> list[int]:
        """Closed + neighbourhood of ``u``, sorted."""
        nb = np.nonzero(self._plus[u])[0].tolist()
        return sorted(nb + [u])

    def plus_edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self._plus, k=1))
        return list(zip(i.tolist(), j.tolist()))

    def __eq__(self, other):
        return isinstance(other, SignedGraph) and np.array_equal(self._plus, other._plus)

    def __repr__(self):
        return f"SignedGraph(n={self.n}, plus_edges={int(self._plus.sum()) // 2})"


@dataclass(frozen=True)
class Clustering:
    """A partition of ``range(n)``; clusters sorted and ordered by smallest member."""

    clusters: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        cl = tuple(sorted((tuple(sorted(int(v) for v in c)) for c in self.clusters), key=lambda c: c[0] if c else -1))
        if any(len(c) == 0 for c in cl):
            raise ValueError("empty cluster")
        members = [v for c in cl for v in c]
        if sorted(members) != list(range(len(members))):
            raise ValueError("clusters do not partition 0..n-1")
        object.__setattr__(self, "clusters", cl)

    @property
    def n(self) -> int:
        return sum(len(c) for c in self.clusters)

    def labels(self) -> np.ndarray:
        lab = np.empty(self.n, dtype=np.int64)
        for c, members in enumerate(self.clusters):
            lab[list(members)] = c
        return lab

    def cluster_of(self, v: int) -> tuple[int, ...]:
        for c in self.clusters:
            if v in c:
                return c
        raise KeyError(v)

    def __len__(self):
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)


def _frac(eps) -> Fraction:
    if isinstance(eps, Fraction):
        return eps
    if isinstance(eps, float):
        return Fraction(repr(eps))
    return Fraction(eps)


@dataclass(frozen=True)
class AgreementParams:
    eps: Fraction = Fraction(19, 1000)
    delta: int = DELTA

    def __post_init__(self):
        e = _frac(self.eps)
        object.__setattr__(self, "eps", e)
        if self.delta != DELTA:
            raise ValueError("delta is fixed at 14")
        if not 0 < e < Fraction(1, 50):
            raise ValueError(f"eps must lie in (0, 1/50), got {e}")
        d = self.delta
        c1 = (Fraction(1, 3) - d * e) / (1 + d * e)
        c2 = 1 / (1 + (Fraction(1, 3) + d * e) / (Fraction(2, 3) - d * e))
        if not (c1 > e / 8 and c2 > e / 8):
            raise ValueError(f"eps={e} violates the structural constraints")

    @property
    def num(self) -> int:
        return self.eps.numerator

    @property
    def den(self) -> int:
        return self.eps.denominator


def _mask(n: int, members: Iterable[int] | None) -> np.ndarray:
    if members is None:
        return np.ones(n, dtype=bool)
    m = np.zeros(n, dtype=bool)
    m[list(members)] = True
    return m


def agree(u: int, v: int, g: SignedGraph, p: AgreementParams = AgreementParams(),
          within: Iterable[int] | None = None) -> bool:
    """``|N(u) ^ N(v)| <= eps * min(|N(u)|, |N(v)|)`` on closed neighbourhoods,
    optionally restricted to the vertex set ``within``."""
    r = _mask(g.n, within)
    nu = g.closed()[u] & r
    nv = g.closed()[v] & r
    sym = int(np.count_nonzero(nu ^ nv))
    return p.den * sym <= p.num * min(int(nu.sum()), int(nv.sum()))


@dataclass
class ClusterRecord:
    """How one output cluster was produced (for structural checks)."""

    pivot: int
    cluster: tuple[int, ...]
    residual: tuple[int, ...]
    outcome: str  # "cluster", "singleton-step2", "singleton-step5", "singleton-step7"


@dataclass
class AgreementResult:
    clustering: Clustering
    records: list[ClusterRecord] = field(default_factory=list)


def _prune(S, M, deg, a, b):
    """Step 4: drop members with too many + neighbours outside S or too few inside."""
    inside = M[:, S].sum(axis=1)
    size = int(S.sum())
    pos = 0
    changed = False
    while True:
        out = deg - inside
        bad = S & ((b * out > 2 * a * deg) | (b * inside < (b - 2 * a) * size))
        bad[:pos] = False
        hits = np.flatnonzero(bad)
        if hits.size == 0:
            if not changed:
                return S
            pos, changed = 0, False
            continue
        u = int(hits[0])
        S[u] = False
        size -= 1
        inside -= M[:, u]
        changed = True
        pos = u + 1


def _grow(S, M, deg, R, a, b):
    """Step 6: absorb outsiders with most + neighbours inside S."""
    inside = M[:, S].sum(axis=1)
    size = int(S.sum())
    pos = 0
    changed = False
    while True:
        good = R & ~S & (b * inside > (b - 4 * a) * deg) & (b * inside >= (b - 4 * a) * size)
        good[:pos] = False
        hits = np.flatnonzero(good)
        if hits.size == 0:
            if not changed:
                return S
            pos, changed = 0, False
            continue
        u = int(hits[0])
        S[u] = True
        size += 1
        inside += M[:, u]
        changed = True
        pos = u + 1


def agreement_cluster(g: SignedGraph, p: AgreementParams = AgreementParams(),
                      order: Sequence[int] | None = None, details: bool = False):
    """Partition ``g`` by agreement clustering.

    ``order`` fixes which unclustered vertex is picked next (default: lowest
    index).  All neighbourhoods, agreement sets and fractions are taken inside
    the residual graph of still-unclustered vertices.  With ``details=True``
    an :class:`AgreementResult` carrying per-cluster records is returned.
    """
    n = g.n
    if order is None:
        order = range(n)
    order = [int(v) for v in order]
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the vertices")
    a, b = p.num, p.den
    closed = g.closed().astype(np.int64)
    R = np.ones(n, dtype=bool)
    clusters: list[tuple[int, ...]] = []
    records: list[ClusterRecord] = []
    cursor = 0

    while R.any():
        while not R[order[cursor]]:
            cursor += 1
        v = order[cursor]
        residual = tuple(np.flatnonzero(R).tolist())
        M = closed * R[None, :] * R[:, None]
        deg = M.sum(axis=1)
        Nv = M[v].astype(bool)
        common = M @ M[v]
        sym = deg + deg[v] - 2 * common
        A = R & (b * sym <= a * np.minimum(deg, deg[v]))
        I = A & Nv
        s0 = int(I.sum())

        def emit(members, outcome):
            members = tuple(sorted(int(u) for u in members))
            clusters.append(members)
            records.append(ClusterRecord(v, members, residual, outcome))
            R[list(members)] = False

        # step 2
        if 2 * b * s0 <= (2 * b - a) * min(int(deg[v]), int(A.sum())):
            emit([v], "singleton-step2")
            continue
        S = _prune(I.copy(), M, deg, a, b)
        if b * int(S.sum()) < (b - a) * s0:
            emit([v], "singleton-step5")
            continue
        S = _grow(S, M, deg, R, a, b)
        if b * int(S.sum()) > (b + 3 * a) * s0:
            emit([v], "singleton-step7")
            continue
        emit(np.flatnonzero(S), "cluster")

    result = Clustering(tuple(clusters))
    if details:
        return AgreementResult(result, records)
    return result


def cc_cost(g: SignedGraph, c: Clustering) -> int:
    """Number of - pairs inside clusters plus + pairs across clusters."""
    lab = c.labels()
    if lab.size != g.n:
        raise ValueError("clustering and graph sizes differ")
    same = lab[:, None] == lab[None, :]
    iu = np.triu_indices(g.n, k=1)
    plus = g.plus[iu]
    same = same[iu]
    return int(np.count_nonzero(same & ~plus) + np.count_nonzero(~same & plus))


def cc_brute_force(g: SignedGraph, max_n: int = 10) -> tuple[Clustering, int]:
    """Optimal correlation clustering by exhaustive partition enumeration.

    Partitions are walked as restricted growth strings in lexicographic order,
    so among optimal partitions the lexicographically smallest encoding wins.
    """
    n = g.n
    if n > max_n:
        raise ValueError(f"brute force limited to n <= {max_n}, got {n}")
    plus = g.plus
    best = [None, np.inf]
    assign = [0] * n

    def rec(v: int, blocks: int, cost: int):
        if cost >= best[1]:
            return
        if v == n:
            best[0], best[1] = list(assign), cost
            return
        for blk in range(blocks + 1):
            delta = 0
            for u in range(v):
                if assign[u] == blk:
                    delta += 0 if plus[u, v] else 1
                else:
                    delta += 1 if plus[u, v] else 0
            assign[v] = blk
            rec(v + 1, max(blocks, blk + 1), cost + delta)

    rec(0, 0, 0)
    labels = best[0]
    groups: dict[int, list[int]] = {}
    for v, blk in enumerate(labels):
        groups.setdefault(blk, []).append(v)
    return Clustering(tuple(tuple(m) for m in groups.values())), int(best[1])


def is_important_group(C: Iterable[int], g: SignedGraph, p: AgreementParams = AgreementParams()) -> bool:
    """Every member keeps at most eps/8 of its + neighbours outside ``C`` and is
    + connected to at least (1 - eps/8) of ``C`` (closed neighbourhoods)."""
    members = _mask(g.n, C)
    size = int(members.sum())
    if size == 0:
        raise ValueError("empty group")
    a, b = p.num, p.den
    closed = g.closed()[members]
    total = closed.sum(axis=1)
    inside = closed[:, members].sum(axis=1)
    outside = total - inside
    return bool(np.all(8 * b * outside <= a * total) and np.all(8 * b * inside >= (8 * b - a) * size))


def is_everywhere_dense(C: Iterable[int], g: SignedGraph) -> bool:
    """Every member has + edges to at least 2/3 of the other members.

    A singleton is everywhere dense.
    """
    members = _mask(g.n, C)
    size = int(members.sum())
    if size <= 1:
        return True
    inside = g.plus[members][:, members].sum(axis=1)
    return bool(np.all(3 * inside >= 2 * (size - 1)))


def dense_bounds_ok(S: Iterable[int], g: SignedGraph, p: AgreementParams = AgreementParams(),
                    within: Iterable[int] | None = None) -> bool:
    """Each member of ``S`` is + connected to at least (1 - 14 eps)|S| of ``S``
    and has at most 14 eps |S| + neighbours outside it, counted inside
    ``within`` (the residual graph ``S`` was cut from)."""
    r = _mask(g.n, within)
    members = _mask(g.n, S)
    size = int(members.sum())
    a, b = p.num, p.den
    d = p.delta
    rows = g.closed()[members] & r[None, :]
    inside = rows[:, members].sum(axis=1)
    outside = rows.sum(axis=1) - inside
    return bool(np.all(b * inside >= (b - d * a) * size) and np.all(b * outside <= d * a * size))
