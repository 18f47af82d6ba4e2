"""Dense primal simplex for ``min c.x  s.t.  A x <= b, 0 <= x <= u`` with ``b >= 0``.

Bounded variables are handled by bound flipping, so the box constraints add
no rows.  The slack basis at ``x = 0`` is the starting point, which is why
``b`` must be nonnegative (no phase one).  Pivoting follows Bland's rule by
default; ``rule="dantzig"`` picks the most negative reduced cost and falls
back to Bland after a run of degenerate pivots.

With ``exact=True`` the tableau holds :class:`fractions.Fraction` objects and
all comparisons are exact; only sensible for tiny problems.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class LPError(RuntimeError):
    pass


@dataclass
class SimplexResult:
    x: np.ndarray
    objective: float
    iterations: int
    status: str = "optimal"


def _as_exact(a):
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    flat = out.reshape(-1)
    for idx, v in enumerate(a.reshape(-1)):
        flat[idx] = v if isinstance(v, Fraction) else Fraction(float(v))
    return out


def simplex(c, A, b, upper, rule: str = "bland", exact: bool = False,
            tol: float = 1e-10, max_iter: int = 200_000) -> SimplexResult:
    if rule not in ("bland", "dantzig"):
        raise ValueError(f"unknown pivot rule {rule!r}")
    A = np.asarray(A, dtype=np.float64)
    m, nv = A.shape
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    ub = np.asarray(upper, dtype=np.float64)
    if np.any(b < 0):
        raise LPError("right-hand side must be nonnegative (origin must be feasible)")
    if np.any(ub < 0):
        raise LPError("upper bounds must be nonnegative")

    nt = nv + m
    T = np.hstack([A, np.eye(m)])
    cost = np.concatenate([c, np.zeros(m)])
    ubt = np.concatenate([ub, np.full(m, np.inf)])
    finite_ub = np.isfinite(ubt)
    beta = b.copy()
    if exact:
        T = _as_exact(T)
        cost = _as_exact(cost)
        beta = _as_exact(beta)
        ubt = np.array([Fraction(float(u)) if f else np.inf for u, f in zip(ubt, finite_ub)], dtype=object)
        eps = 0
    else:
        eps = tol
    basis = np.arange(nv, nt)
    at_upper = np.zeros(nt, dtype=bool)
    is_basic = np.zeros(nt, dtype=bool)
    is_basic[basis] = True
    # reduced costs: c_j - c_B B^-1 a_j, with c_B = 0 for the slack basis
    red = cost.copy()

    iters = 0
    degenerate_run = 0
    while True:
        if iters >= max_iter:
            raise LPError("simplex iteration limit reached")
        red_f = red.astype(np.float64) if exact else red
        neg = (red < -eps).astype(bool)
        pos = (red > eps).astype(bool)
        improve = ~is_basic & (((~at_upper) & neg & (~finite_ub | (ubt != 0).astype(bool))) | (at_upper & pos))
        cand = np.flatnonzero(improve)
        if cand.size == 0:
            break
        if rule == "dantzig" and degenerate_run < 50:
            j = int(cand[np.argmax(np.abs(red_f[cand]))])
        else:
            j = int(cand[0])
        direction = -1 if at_upper[j] else 1
        col = T[:, j] * direction

        theta = ubt[j]
        leave = -1
        leave_to_upper = False
        dec = np.flatnonzero((col > eps).astype(bool))
        inc = np.flatnonzero((col < -eps).astype(bool) & finite_ub[basis])
        best_var = nt
        for rows, upper_side in ((dec, False), (inc, True)):
            if rows.size == 0:
                continue
            if upper_side:
                ratios = (ubt[basis[rows]] - beta[rows]) / (-col[rows])
            else:
                ratios = beta[rows] / col[rows]
            for r, q in zip(rows.tolist(), ratios.tolist()):
                if q < theta or (q == theta and leave >= 0 and basis[r] < best_var):
                    theta, leave, leave_to_upper, best_var = q, r, upper_side, basis[r]
        if not isinstance(theta, Fraction) and theta == np.inf:
            raise LPError("LP is unbounded")
        if not exact and theta < 0:
            theta = 0.0
        degenerate_run = degenerate_run + 1 if theta == 0 else 0

        beta = beta - theta * col
        iters += 1
        if leave < 0:
            at_upper[j] = not at_upper[j]
            continue

        entering_value = (ubt[j] - theta) if at_upper[j] else theta
        out_var = basis[leave]
        is_basic[out_var] = False
        at_upper[out_var] = leave_to_upper
        is_basic[j] = True
        at_upper[j] = False
        basis[leave] = j

        piv = T[leave, j]
        T[leave] = T[leave] / piv
        factors = T[:, j].copy()
        factors[leave] = 0
        nz = np.flatnonzero(factors != 0)
        if nz.size:
            T[nz] -= np.outer(factors[nz], T[leave])
        red = red - red[j] * T[leave]
        beta[leave] = entering_value

    x = np.zeros(nt, dtype=object if exact else np.float64)
    up = at_upper & ~is_basic
    x[up] = ubt[up]
    x[basis] = beta
    if not exact:
        # polish basic values from the original data
        full = np.hstack([A, np.eye(m)])
        nonbasic = ~is_basic
        rhs = b - full[:, nonbasic] @ x[nonbasic]
        try:
            x[basis] = np.linalg.solve(full[:, basis], rhs)
        except np.linalg.LinAlgError:
            pass
    xv = x[:nv]
    obj = sum(cv * xv_ for cv, xv_ in zip(cost[:nv], xv)) if exact else float(c @ xv)
    return SimplexResult(xv, obj, iters)
