"""Hot inner loops.

Every kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version.  The public wrappers pick one according to the
``backend`` argument (``"numba"``, ``"numpy"`` or ``None`` for the default,
which is numba unless ``MVDLIB_DISABLE_NUMBA`` is set).  Both versions must
give bit-identical results; ``tests/test_kernels.py`` checks this.

Matrices are dense symmetric float64 arrays with a zero diagonal.  Edge codes
in violation arrays: 0 -> (i, j), 1 -> (i, k), 2 -> (j, k) with i < j < k.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit, use_numba

BACKENDS = ("numba", "numpy")


def resolve_backend(backend: str | None) -> str:
    if backend is None:
        return "numba" if use_numba() else "numpy"
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not use_numba():
        raise RuntimeError("numba backend requested but numba is disabled or missing")
    return backend


# ---------------------------------------------------------------------------
# violation enumeration


@njit
def _offending_edge(a, b, c, ultra, tol):
    if ultra:
        if a > b and a > c:
            return 0
        if b > a and b > c:
            return 1
        if c > a and c > b:
            return 2
        return -1
    # tol is relative to the longest side; 0 means an exact test
    slack = tol * max(a, b, c)
    if a > b + c + slack:
        return 0
    if b > a + c + slack:
        return 1
    if c > a + b + slack:
        return 2
    return -1


@njit
def _violations_loop(x, ultra, tol):
    n = x.shape[0]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            a = x[i, j]
            for k in range(j + 1, n):
                if _offending_edge(a, x[i, k], x[j, k], ultra, tol) >= 0:
                    count += 1
    out = np.empty((count, 4), dtype=np.int64)
    pos = 0
    for i in range(n):
        for j in range(i + 1, n):
            a = x[i, j]
            for k in range(j + 1, n):
                e = _offending_edge(a, x[i, k], x[j, k], ultra, tol)
                if e >= 0:
                    out[pos, 0] = i
                    out[pos, 1] = j
                    out[pos, 2] = k
                    out[pos, 3] = e
                    pos += 1
    return out


@njit
def _count_violations_loop(x, ultra, tol):
    n = x.shape[0]
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            a = x[i, j]
            for k in range(j + 1, n):
                if _offending_edge(a, x[i, k], x[j, k], ultra, tol) >= 0:
                    count += 1
    return count


def _violation_codes_np(x, i, ultra, tol=0.0):
    """Edge codes (or -1) for all triples (i, j, k), i < j < k, as a 2-D block."""
    n = x.shape[0]
    a = x[i, i + 1:][:, None]  # x(i, j)
    b = x[i, i + 1:][None, :]  # x(i, k)
    c = x[i + 1:, i + 1:]      # x(j, k)
    code = np.full((n - i - 1, n - i - 1), -1, dtype=np.int64)
    if ultra:
        code[(c > a) & (c > b)] = 2
        code[(b > a) & (b > c)] = 1
        code[(a > b) & (a > c)] = 0
    else:
        slack = tol * np.maximum(np.maximum(a, b), c)
        code[c > a + b + slack] = 2
        code[b > a + c + slack] = 1
        code[a > b + c + slack] = 0
    code[np.tril_indices(n - i - 1)] = -1
    return code


def _violations_np(x, ultra, tol=0.0):
    n = x.shape[0]
    rows = []
    for i in range(max(n - 2, 0)):
        code = _violation_codes_np(x, i, ultra, tol)
        jj, kk = np.nonzero(code >= 0)
        if jj.size:
            rows.append(np.column_stack([np.full(jj.size, i), jj + i + 1, kk + i + 1, code[jj, kk]]))
    if not rows:
        return np.empty((0, 4), dtype=np.int64)
    return np.vstack(rows).astype(np.int64)


def _count_violations_np(x, ultra, tol=0.0):
    n = x.shape[0]
    return int(sum(np.count_nonzero(_violation_codes_np(x, i, ultra, tol) >= 0) for i in range(max(n - 2, 0))))


def violations(x: np.ndarray, ultra: bool, backend: str | None = None, tol: float = 0.0) -> np.ndarray:
    """All unbalanced triangles as an ``(m, 4)`` int array ``(i, j, k, edge_code)``.

    ``tol`` loosens the metric test to ``a > b + c + tol * max(a, b, c)``; the
    ultrametric test is always exact.
    """
    if resolve_backend(backend) == "numba":
        return _violations_loop(x, ultra, float(tol))
    return _violations_np(x, ultra, float(tol))


def count_violations(x: np.ndarray, ultra: bool, backend: str | None = None, tol: float = 0.0) -> int:
    if resolve_backend(backend) == "numba":
        return int(_count_violations_loop(x, ultra, float(tol)))
    return _count_violations_np(x, ultra, float(tol))


# ---------------------------------------------------------------------------
# single pivot steps (mutate x in place, report the changed pairs)


@njit
def _mvd_step_loop(x, rest, p, out_j, out_k, out_old):
    m = rest.shape[0]
    count = 0
    for a in range(m):
        j = rest[a]
        pj = x[p, j]
        for b in range(a + 1, m):
            k = rest[b]
            pk = x[p, k]
            v = x[j, k]
            s = pj + pk
            d = abs(pj - pk)
            if v > s:
                new = s
            elif v < d:
                new = d
            else:
                continue
            out_j[count] = j
            out_k[count] = k
            out_old[count] = v
            count += 1
            x[j, k] = new
            x[k, j] = new
    return count


@njit
def _umvd_step_loop(x, rest, p, out_j, out_k, out_old):
    m = rest.shape[0]
    count = 0
    for a in range(m):
        j = rest[a]
        pj = x[p, j]
        for b in range(a + 1, m):
            k = rest[b]
            pk = x[p, k]
            v = x[j, k]
            if pj == pk:
                if v > pj:
                    new = pj
                else:
                    continue
            else:
                new = pj if pj > pk else pk
                if v == new:
                    continue
            out_j[count] = j
            out_k[count] = k
            out_old[count] = v
            count += 1
            x[j, k] = new
            x[k, j] = new
    return count


def _pivot_step_np(x, rest, p, ultra):
    pj = x[p, rest][:, None]
    pk = x[p, rest][None, :]
    sub = x[np.ix_(rest, rest)]
    if ultra:
        same = pj == pk
        top = np.maximum(pj, pk)
        new = np.where(same, np.minimum(sub, pj), top)
    else:
        s = pj + pk
        d = np.abs(pj - pk)
        new = np.where(sub > s, s, np.where(sub < d, d, sub))
    changed = np.triu(new != sub, k=1)
    a, b = np.nonzero(changed)
    j, k = rest[a], rest[b]
    old = sub[a, b]
    vals = new[a, b]
    x[j, k] = vals
    x[k, j] = vals
    return j.astype(np.int64), k.astype(np.int64), old


def pivot_step(x: np.ndarray, rest: np.ndarray, p: int, ultra: bool, backend: str | None = None):
    """Repair every triangle ``(p, j, k)`` with ``j, k`` in ``rest``.

    Mutates ``x``; returns ``(j, k, old)`` arrays for the pairs whose value
    strictly changed, in ascending ``(position of j, position of k)`` order.
    """
    rest = np.ascontiguousarray(rest, dtype=np.int64)
    if resolve_backend(backend) == "numpy":
        return _pivot_step_np(x, rest, p, ultra)
    m = rest.shape[0]
    size = m * (m - 1) // 2
    out_j = np.empty(size, dtype=np.int64)
    out_k = np.empty(size, dtype=np.int64)
    out_old = np.empty(size, dtype=np.float64)
    step = _umvd_step_loop if ultra else _mvd_step_loop
    c = step(x, rest, p, out_j, out_k, out_old)
    return out_j[:c], out_k[:c], out_old[:c]


# ---------------------------------------------------------------------------
# path closures


@njit
def _closure_loop(d, ultra):
    n = d.shape[0]
    for m in range(n):
        for i in range(n):
            dim = d[i, m]
            for j in range(n):
                if ultra:
                    via = dim if dim > d[m, j] else d[m, j]
                else:
                    via = dim + d[m, j]
                if via < d[i, j]:
                    d[i, j] = via
    return d


def _closure_np(d, ultra):
    n = d.shape[0]
    for m in range(n):
        col = d[:, m][:, None]
        row = d[m, :][None, :]
        via = np.maximum(col, row) if ultra else col + row
        np.minimum(d, via, out=d)
    return d


def path_closure(d: np.ndarray, ultra: bool, backend: str | None = None) -> np.ndarray:
    """Shortest-path (min-plus) or bottleneck (min-max) closure of a copy of ``d``.

    ``+inf`` marks a missing edge.  The diagonal is treated as 0.
    """
    d = np.array(d, dtype=np.float64, copy=True)
    np.fill_diagonal(d, 0.0)
    if resolve_backend(backend) == "numba":
        return _closure_loop(d, ultra)
    return _closure_np(d, ultra)


# ---------------------------------------------------------------------------
# smallest hitting set of unbalanced cycles (exact oracle search)


@njit
def _feasible_loop(x, pi, pj, chosen, ultra, work):
    n = x.shape[0]
    for a in range(n):
        for b in range(n):
            work[a, b] = x[a, b]
    for e in range(chosen.shape[0]):
        work[pi[chosen[e]], pj[chosen[e]]] = np.inf
        work[pj[chosen[e]], pi[chosen[e]]] = np.inf
    for a in range(n):
        work[a, a] = 0.0
    _closure_loop(work, ultra)
    # removed pairs are free; flag them so the scan skips them
    for e in range(chosen.shape[0]):
        work[pi[chosen[e]], pj[chosen[e]]] = np.inf
    for a in range(n):
        for b in range(a + 1, n):
            # pairs kept must be tight: no alternative path undercuts them
            if work[a, b] < x[a, b]:
                return False
    return True


@njit
def _hitting_set_loop(x, pi, pj, ultra, max_size):
    n = x.shape[0]
    npairs = pi.shape[0]
    work = np.empty((n, n), dtype=np.float64)
    for size in range(0, max_size + 1):
        idx = np.arange(size)
        while True:
            if _feasible_loop(x, pi, pj, idx, ultra, work):
                return size, idx
            # next combination in lexicographic order
            pos = size - 1
            while pos >= 0 and idx[pos] == npairs - size + pos:
                pos -= 1
            if pos < 0:
                break
            idx[pos] += 1
            for q in range(pos + 1, size):
                idx[q] = idx[q - 1] + 1
    return -1, np.empty(0, dtype=np.int64)


def feasible_removal(x: np.ndarray, removed, ultra: bool, backend: str | None = None) -> bool:
    """True when every pair outside ``removed`` is already tight in the closure."""
    d = np.array(x, dtype=np.float64, copy=True)
    for i, j in removed:
        d[i, j] = d[j, i] = np.inf
    closed = path_closure(d, ultra, backend)
    kept = np.isfinite(d)
    return bool(np.all(closed[kept] >= x[kept]))


def smallest_hitting_set(x: np.ndarray, ultra: bool, max_size: int | None = None,
                         backend: str | None = None):
    """Smallest set ``S`` of pairs whose removal leaves every other pair tight.

    Sizes are tried in increasing order and, within one size, combinations of
    the row-major pair list in lexicographic order; the first feasible one is
    returned.  Returns ``(size, [(i, j), ...])``.
    """
    n = x.shape[0]
    pi, pj = np.triu_indices(n, k=1)
    pi = pi.astype(np.int64)
    pj = pj.astype(np.int64)
    if max_size is None:
        max_size = pi.size
    if resolve_backend(backend) == "numba":
        size, idx = _hitting_set_loop(np.ascontiguousarray(x, dtype=np.float64), pi, pj, ultra, max_size)
        if size < 0:
            raise RuntimeError("no feasible removal set within max_size")
        return int(size), [(int(pi[e]), int(pj[e])) for e in idx]
    from itertools import combinations

    pairs = list(zip(pi.tolist(), pj.tolist()))
    for size in range(0, max_size + 1):
        for combo in combinations(range(len(pairs)), size):
            chosen = [pairs[e] for e in combo]
            if feasible_removal(x, chosen, ultra, backend="numpy"):
                return size, chosen
    raise RuntimeError("no feasible removal set within max_size")
