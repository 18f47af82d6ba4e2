"""Exact minimum-l0 repair for tiny instances.

A set ``S`` of pairs can be rewritten so that everything else stays fixed
iff every pair outside ``S`` is tight in the path closure of the remaining
graph.  The oracle searches for the smallest such ``S`` and rebuilds a
witness from the closure.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable

import numpy as np

from . import kernels
from .core import DistanceMatrix, Pair, as_matrix, canon

DEFAULT_MAX_N = 7


def _removed(x: DistanceMatrix, S: Iterable[Pair]) -> np.ndarray:
    d = x.copy_array()
    for i, j in S:
        i, j = canon(i, j)
        d[i, j] = d[j, i] = np.inf
    return d


def metric_completion(x, S: Iterable[Pair] = (), backend: str | None = None) -> DistanceMatrix:
    """Shortest paths avoiding ``S``, capped at ``1 + sum(x)``."""
    x = as_matrix(x)
    cap = 1.0 + float(x.condensed().sum())
    closed = kernels.path_closure(_removed(x, S), False, backend)
    out = np.minimum(closed, cap)
    np.fill_diagonal(out, 0.0)
    return DistanceMatrix(out)


def ultrametric_completion(x, S: Iterable[Pair] = (), backend: str | None = None) -> DistanceMatrix:
    """Minimax paths avoiding ``S``; unreachable pairs get ``1 + max(x)``."""
    x = as_matrix(x)
    top = 1.0 + float(x.condensed().max()) if x.n > 1 else 1.0
    closed = kernels.path_closure(_removed(x, S), True, backend)
    out = np.where(np.isinf(closed), top, closed)
    np.fill_diagonal(out, 0.0)
    return DistanceMatrix(out)


def _exact_feasible(x: DistanceMatrix, S, ultra: bool) -> bool:
    # Fraction arithmetic, for cross-checking float closures
    n = x.n
    INF = None
    d = [[Fraction(float(x.array[i, j])) for j in range(n)] for i in range(n)]
    for i, j in S:
        d[i][j] = d[j][i] = INF
    for i in range(n):
        d[i][i] = Fraction(0)
    for k in range(n):
        for i in range(n):
            if d[i][k] is INF:
                continue
            for j in range(n):
                if d[k][j] is INF:
                    continue
                via = max(d[i][k], d[k][j]) if ultra else d[i][k] + d[k][j]
                if d[i][j] is INF or via < d[i][j]:
                    d[i][j] = via
    for i in range(n):
        for j in range(i + 1, n):
            if (i, j) in S:
                continue
            if d[i][j] < Fraction(float(x.array[i, j])):
                return False
    return True


def _exact_search(x: DistanceMatrix, ultra: bool) -> tuple[int, list[Pair]]:
    from itertools import combinations

    pairs = list(x.pairs())
    for size in range(len(pairs) + 1):
        for combo in combinations(pairs, size):
            if _exact_feasible(x, set(combo), ultra):
                return size, list(combo)
    raise RuntimeError("unreachable: removing every pair is always feasible")


def _solve(x, ultra: bool, max_n: int, exact: bool, backend):
    x = as_matrix(x)
    if x.n > max_n:
        raise ValueError(f"oracle limited to n <= {max_n}, got n={x.n}")
    if exact:
        size, S = _exact_search(x, ultra)
    else:
        size, S = kernels.smallest_hitting_set(x.array, ultra, backend=backend)
    complete = ultrametric_completion if ultra else metric_completion
    return size, complete(x, S, backend), S


def exact_mvd(x, max_n: int = DEFAULT_MAX_N, exact: bool = False, backend: str | None = None,
              return_set: bool = False):
    """Minimum number of entries to change to reach a metric, with a witness.

    ``exact=True`` runs the feasibility test in rational arithmetic.
    Returns ``(cost, y)`` or ``(cost, y, S)`` with ``return_set``.
    """
    size, y, S = _solve(x, False, max_n, exact, backend)
    return (size, y, S) if return_set else (size, y)


def exact_umvd(x, max_n: int = DEFAULT_MAX_N, exact: bool = False, backend: str | None = None,
               return_set: bool = False):
    """Minimum number of entries to change to reach an ultrametric, with a witness."""
    size, y, S = _solve(x, True, max_n, exact, backend)
    return (size, y, S) if return_set else (size, y)
