"""Domain types shared by every algorithm: distance matrices, weighted
instances, unbalanced triangles, repair results and level maps."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import kernels

Pair = tuple[int, int]


def canon(i: int, j: int) -> Pair:
    if i == j:
        raise ValueError(f"pair ({i}, {j}) is not a pair of distinct points")
    return (i, j) if i < j else (j, i)


class DistanceMatrix:
    """Symmetric dissimilarities on ``n`` points, one value per unordered pair.

    Backed by a read-only ``n x n`` float64 array with a zero diagonal; the
    diagonal is not part of the data.
    """

    __slots__ = ("_a",)

    def __init__(self, array):
        a = np.array(array, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        iu = np.triu_indices(a.shape[0], k=1)
        upper = a[iu]
        if not np.array_equal(upper, a.T[iu]):
            raise ValueError("distance matrix is not symmetric")
        if not np.all(np.isfinite(upper)):
            raise ValueError("distances must be finite")
        if np.any(upper < 0):
            raise ValueError("distances must be nonnegative")
        np.fill_diagonal(a, 0.0)
        a.flags.writeable = False
        self._a = a

    @classmethod
    def from_pairs(cls, n: int, values: Mapping[Pair, float]) -> "DistanceMatrix":
        a = np.full((n, n), np.nan)
        for (i, j), v in values.items():
            i, j = canon(i, j)
            a[i, j] = a[j, i] = v
        np.fill_diagonal(a, 0.0)
        missing = np.argwhere(np.isnan(a))
        if missing.size:
            i, j = missing[0]
            raise ValueError(f"missing pair ({min(i, j)}, {max(i, j)})")
        return cls(a)

    @classmethod
    def from_condensed(cls, n: int, values: Sequence[float]) -> "DistanceMatrix":
        """Build from values listed in row-major upper-triangle pair order."""
        values = np.asarray(values, dtype=np.float64)
        if values.size != n * (n - 1) // 2:
            raise ValueError(f"expected {n * (n - 1) // 2} values, got {values.size}")
        a = np.zeros((n, n))
        iu = np.triu_indices(n, k=1)
        a[iu] = values
        a.T[iu] = values
        return cls(a)

    @property
    def n(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        """The read-only backing array."""
        return self._a

    def copy_array(self) -> np.ndarray:
        return np.array(self._a, copy=True)

    def __getitem__(self, pair: Pair) -> float:
        i, j = canon(*pair)
        return float(self._a[i, j])

    def pairs(self) -> Iterator[Pair]:
        n = self.n
        for i in range(n):
            for j in range(i + 1, n):
                yield (i, j)

    def condensed(self) -> np.ndarray:
        return self._a[np.triu_indices(self.n, k=1)]

    def __eq__(self, other) -> bool:
        return isinstance(other, DistanceMatrix) and np.array_equal(self._a, other._a)

    def __hash__(self):
        return hash((self.n, self._a.tobytes()))

    def __repr__(self) -> str:
        return f"DistanceMatrix(n={self.n})"


@dataclass(frozen=True)
class WeightedInstance:
    distances: DistanceMatrix
    weights: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        n = self.distances.n
        if self.weights is None:
            w = np.ones((n, n))
        else:
            w = np.array(self.weights, dtype=np.float64, copy=True)
            if w.shape != (n, n):
                raise ValueError(f"weights must have shape {(n, n)}, got {w.shape}")
            iu = np.triu_indices(n, k=1)
            if not np.array_equal(w[iu], w.T[iu]):
                raise ValueError("weights are not symmetric")
            if not np.all(np.isfinite(w[iu])) or np.any(w[iu] < 0):
                raise ValueError("weights must be finite and nonnegative")
        np.fill_diagonal(w, 0.0)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @classmethod
    def unit(cls, x: DistanceMatrix) -> "WeightedInstance":
        return cls(x)

    @property
    def n(self) -> int:
        return self.distances.n

    def weight(self, i: int, j: int) -> float:
        i, j = canon(i, j)
        return float(self.weights[i, j])

    @property
    def unit_weights(self) -> bool:
        iu = np.triu_indices(self.n, k=1)
        return bool(np.all(self.weights[iu] == 1.0))


def as_instance(x) -> WeightedInstance:
    if isinstance(x, WeightedInstance):
        return x
    if isinstance(x, DistanceMatrix):
        return WeightedInstance(x)
    return WeightedInstance(DistanceMatrix(x))


def as_matrix(x) -> DistanceMatrix:
    if isinstance(x, DistanceMatrix):
        return x
    if isinstance(x, WeightedInstance):
        return x.distances
    return DistanceMatrix(x)


@dataclass(frozen=True)
class Triangle:
    """An unbalanced triangle ``i < j < k`` and its offending edge.

    ``kind`` is ``"excess"``: the edge is strictly longer than the sum of the
    other two (metric rule) or is the unique strict maximum (ultrametric
    rule).  In the metric case the two remaining edges are in deficit.
    """

    i: int
    j: int
    k: int
    kind: str
    edge: Pair

    @property
    def deficit_edges(self) -> tuple[Pair, Pair]:
        others = [e for e in ((self.i, self.j), (self.i, self.k), (self.j, self.k)) if e != self.edge]
        return others[0], others[1]


def _triangles_from(arr: np.ndarray) -> list[Triangle]:
    out = []
    for i, j, k, e in arr.tolist():
        edge = ((i, j), (i, k), (j, k))[e]
        out.append(Triangle(i, j, k, "excess", edge))
    return out


# Relative slack for checking float outputs of the metric pivot: its rewrites
# are sums of earlier values, each rounded once, so exact tests can trip on
# the last few ulps.  Integer-valued data never needs it.
FLOAT_METRIC_TOL = 1e-12


def metric_violations(x, backend: str | None = None, tol: float = 0.0) -> list[Triangle]:
    """Every triangle that breaks the triangle inequality (by more than
    ``tol`` times its longest side)."""
    return _triangles_from(kernels.violations(as_matrix(x).array, False, backend, tol))


def ultrametric_violations(x, backend: str | None = None) -> list[Triangle]:
    """Every triangle whose largest side is a unique strict maximum."""
    return _triangles_from(kernels.violations(as_matrix(x).array, True, backend))


def is_metric(x, backend: str | None = None, tol: float = 0.0) -> bool:
    return kernels.count_violations(as_matrix(x).array, False, backend, tol) == 0


def is_ultrametric(x, backend: str | None = None) -> bool:
    return kernels.count_violations(as_matrix(x).array, True, backend) == 0


def _differs(a: np.ndarray, b: np.ndarray, eq_tol: float) -> np.ndarray:
    if eq_tol == 0:
        return a != b
    return np.abs(a - b) > eq_tol


def l0_cost(x, y, eq_tol: float = 0.0) -> float:
    """Weighted count of pairs where ``y`` differs from ``x``.

    ``x`` may be a :class:`WeightedInstance` (its weights are used) or a plain
    matrix (unit weights).  Values are compared exactly unless ``eq_tol > 0``.
    """
    inst = as_instance(x)
    y = as_matrix(y)
    if y.n != inst.n:
        raise ValueError(f"dimension mismatch: {inst.n} vs {y.n}")
    iu = np.triu_indices(inst.n, k=1)
    diff = _differs(inst.distances.array[iu], y.array[iu], eq_tol)
    total = inst.weights[iu][diff].sum()
    return float(total)


def modified_pairs(x, y, eq_tol: float = 0.0) -> list[tuple[Pair, float, float]]:
    x, y = as_matrix(x), as_matrix(y)
    if x.n != y.n:
        raise ValueError(f"dimension mismatch: {x.n} vs {y.n}")
    iu = np.triu_indices(x.n, k=1)
    a, b = x.array[iu], y.array[iu]
    idx = np.nonzero(_differs(a, b, eq_tol))[0]
    return [((int(iu[0][e]), int(iu[1][e])), float(a[e]), float(b[e])) for e in idx]


@dataclass
class RepairResult:
    output: DistanceMatrix
    cost: float
    modified_pairs: list[tuple[Pair, float, float]]
    trace: object | None = None

    @classmethod
    def build(cls, x, y, trace=None, eq_tol: float = 0.0) -> "RepairResult":
        y = as_matrix(y)
        return cls(y, l0_cost(x, y, eq_tol), modified_pairs(as_matrix(x), y, eq_tol), trace)


@dataclass(frozen=True)
class LevelMap:
    """Distinct distance values ``w_1 < ... < w_L`` with a value -> level lookup.

    Levels are 1-based, matching ``w_t``; ``w(0)`` is the bottom value 0.
    """

    levels: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("levels must be strictly increasing")

    @property
    def L(self) -> int:
        return len(self.levels)

    def index(self, value: float) -> int:
        t = int(np.searchsorted(self.levels, value)) + 1
        if t > self.L or self.levels[t - 1] != value:
            raise KeyError(value)
        return t

    def w(self, t: int) -> float:
        if t == 0:
            return 0.0
        return self.levels[t - 1]

    def level_matrix(self, x) -> np.ndarray:
        """Integer matrix of level indices (diagonal 0)."""
        a = as_matrix(x).array
        t = np.searchsorted(np.asarray(self.levels), a) + 1
        np.fill_diagonal(t, 0)
        return t.astype(np.int64)


def build_level_map(x) -> LevelMap:
    x = as_matrix(x)
    return LevelMap(tuple(float(v) for v in np.unique(x.condensed())))


def iter_triples(n: int) -> Iterable[tuple[int, int, int]]:
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                yield i, j, k
