"""Weighted ultrametric repair by LP relaxation and region-growing rounding.

Variables ``d[t, i, j]`` (``t = 1..L``) say "``i`` and ``j`` are at distance
at least ``w_t``".  Rounding walks the levels top-down; at each level the
current cluster is carved into balls of the LP metric ``d[t]`` whose cut
weight is bounded by their volume times a log factor.
"""
from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (DistanceMatrix, LevelMap, RepairResult, WeightedInstance, as_instance, as_matrix,
                   build_level_map, is_ultrametric)
from .simplex import LPError, simplex

ONE_THIRD = 1.0 / 3.0
TWO_THIRDS = 2.0 / 3.0
SNAP = 1e-9
FEAS_TOL = 1e-9
BUILTIN_MAX_N = 15
BUILTIN_MAX_L = 5


class RegionGrowingError(RuntimeError):
    pass


@dataclass
class UltrametricLP:
    instance: WeightedInstance
    level_map: LevelMap
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    constant: float
    n_triangle_rows: int
    n_monotone_rows: int
    row_names: list[str]

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def L(self) -> int:
        return self.level_map.L

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    @property
    def n_vars(self) -> int:
        return self.L * self.n_pairs

    def pair_index(self) -> np.ndarray:
        n = self.n
        idx = -np.ones((n, n), dtype=np.int64)
        iu = np.triu_indices(n, k=1)
        idx[iu] = np.arange(iu[0].size)
        idx.T[iu] = idx[iu]
        return idx

    def var(self, t: int, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        n = self.n
        # row-major position of (i, j) in the upper triangle
        p = i * n - i * (i + 1) // 2 + (j - i - 1)
        return (t - 1) * self.n_pairs + p

    def var_names(self) -> list[str]:
        n = self.n
        names = []
        for t in range(1, self.L + 1):
            for i in range(n):
                for j in range(i + 1, n):
                    names.append(f"d_{t}_{i}_{j}")
        return names

    def objective(self, z: np.ndarray) -> float:
        return float(self.c @ z + self.constant)

    def max_violation(self, z: np.ndarray) -> float:
        viol = 0.0
        if self.A.shape[0]:
            viol = max(viol, float(np.max(self.A @ z - self.b)))
        viol = max(viol, float(np.max(-z)), float(np.max(z - 1.0)))
        return max(viol, 0.0)


def build_lp(inst) -> UltrametricLP:
    """Triangle rows ``d_ik <= d_ij + d_jk`` (each side of each triple, every
    level), monotone rows ``d^{t+1} <= d^t``, box ``[0, 1]`` and objective
    ``sum w (d^{x+1} + 1 - d^x)`` with ``x`` the pair's level and
    ``d^{L+1} = 0``."""
    inst = as_instance(inst)
    lm = build_level_map(inst.distances)
    n, L = inst.n, lm.L
    P = n * (n - 1) // 2
    nv = L * P
    lp = UltrametricLP(inst, lm, np.zeros((0, nv)), np.zeros(0), np.zeros(nv), 0.0, 0, 0, [])

    rows, names = [], []
    for t in range(1, L + 1):
        for i in range(n):
            for j in range(i + 1, n):
                for k in range(j + 1, n):
                    sides = ((i, j), (i, k), (j, k))
                    for e in range(3):
                        r = np.zeros(nv)
                        long = sides[e]
                        r[lp.var(t, *long)] = 1.0
                        for o in range(3):
                            if o != e:
                                r[lp.var(t, *sides[o])] -= 1.0
                        rows.append(r)
                        names.append(f"tri_{t}_{i}_{j}_{k}_{e}")
    n_tri = len(rows)
    for t in range(1, L):
        for i in range(n):
            for j in range(i + 1, n):
                r = np.zeros(nv)
                r[lp.var(t + 1, i, j)] = 1.0
                r[lp.var(t, i, j)] = -1.0
                rows.append(r)
                names.append(f"mono_{t}_{i}_{j}")
    lp.A = np.array(rows).reshape(len(rows), nv)
    lp.b = np.zeros(len(rows))
    lp.n_triangle_rows = n_tri
    lp.n_monotone_rows = len(rows) - n_tri
    lp.row_names = names

    lev = lm.level_matrix(inst.distances)
    c = np.zeros(nv)
    const = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            w = inst.weights[i, j]
            t = int(lev[i, j])
            const += w
            c[lp.var(t, i, j)] -= w
            if t < L:
                c[lp.var(t + 1, i, j)] += w
    lp.c = c
    lp.constant = const
    return lp


@dataclass
class LPSolution:
    """``d[t]`` is the ``n x n`` LP metric at level ``t`` (``d[L + 1] = 0``)."""

    d: np.ndarray
    objective: float
    rho: float
    solver: str = "builtin"

    @property
    def L(self) -> int:
        return self.d.shape[0] - 2


def _values_to_solution(lp: UltrametricLP, z: np.ndarray, solver: str) -> LPSolution:
    z = np.asarray(z, dtype=np.float64).copy()
    z[np.abs(z) <= SNAP] = 0.0
    z[np.abs(z - 1.0) <= SNAP] = 1.0
    viol = lp.max_violation(z)
    if viol > FEAS_TOL:
        raise LPError(f"LP solution violates constraints by {viol:.3g}")
    n, L = lp.n, lp.L
    d = np.zeros((L + 2, n, n))
    iu = np.triu_indices(n, k=1)
    for t in range(1, L + 1):
        block = z[(t - 1) * lp.n_pairs: t * lp.n_pairs]
        d[t][iu] = block
        d[t].T[iu] = block
    obj = lp.objective(z)
    return LPSolution(d, obj, max(obj, 0.0) / n, solver)


def integral_solution(inst, y) -> LPSolution:
    """The 0/1 LP point of an ultrametric ``y``: ``d[t] = [y >= w_t]``.

    Built directly, without materialising the LP, so it works at any size.
    """
    inst = as_instance(inst)
    y = as_matrix(y)
    if not is_ultrametric(y):
        raise ValueError("integral_solution needs an ultrametric")
    lm = build_level_map(inst.distances)
    n, L = inst.n, lm.L
    d = np.zeros((L + 2, n, n))
    for t in range(1, L + 1):
        d[t] = y.array >= lm.w(t)
        np.fill_diagonal(d[t], 0.0)
    iu = np.triu_indices(n, k=1)
    lev = lm.level_matrix(inst.distances)[iu]
    vals = np.stack([d[t][iu] for t in range(L + 2)])
    cols = np.arange(lev.size)
    obj = float((inst.weights[iu] * (vals[lev + 1, cols] + 1.0 - vals[lev, cols])).sum())
    return LPSolution(d, obj, obj / n, "integral")


def write_lp(lp: UltrametricLP, path) -> None:
    """CPLEX LP text.  The objective constant goes in a comment line."""

    def term(coef, name):
        sign = "-" if coef < 0 else "+"
        return f"{sign} {abs(coef):.17g} {name}"

    names = lp.var_names()
    out = [f"\\ mvdlib ultrametric LP n={lp.n} L={lp.L}", f"\\ objective constant {lp.constant:.17g}", "Minimize"]
    obj_terms = [term(cv, names[v]) for v, cv in enumerate(lp.c) if cv != 0]
    out.append(" obj: " + (" ".join(obj_terms) if obj_terms else "0 " + names[0]))
    out.append("Subject To")
    for r, row in enumerate(lp.A):
        nz = np.flatnonzero(row)
        out.append(f" {lp.row_names[r]}: " + " ".join(term(row[v], names[v]) for v in nz) + f" <= {lp.b[r]:.17g}")
    out.append("Bounds")
    for name in names:
        out.append(f" 0 <= {name} <= 1")
    out.append("End")
    Path(path).write_text("\n".join(out) + "\n")


def read_solution(lp: UltrametricLP, path) -> np.ndarray:
    """Parse ``name value`` lines; unknown names are ignored."""
    names = {nm: v for v, nm in enumerate(lp.var_names())}
    z = np.full(lp.n_vars, np.nan)
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if len(parts) < 2 or parts[0] not in names:
            continue
        try:
            z[names[parts[0]]] = float(parts[1])
        except ValueError:
            continue
    if np.isnan(z).any():
        missing = lp.var_names()[int(np.flatnonzero(np.isnan(z))[0])]
        raise LPError(f"solution file lacks variable {missing}")
    return z


def solve_lp(lp: UltrametricLP, solver: str = "builtin", exact: bool = False, force: bool = False,
             command: str | None = None, rule: str = "bland") -> LPSolution:
    """Solve the relaxation.

    ``solver``: ``"builtin"`` (dense simplex), ``"scipy"`` (HiGHS through
    :func:`scipy.optimize.linprog`) or ``"external-cmd"``, which writes the LP
    to a temp file and runs ``command`` with ``{lp}`` and ``{sol}``
    placeholders; the command must write ``name value`` lines to ``{sol}``.
    """
    if solver == "builtin":
        if not force and (lp.n > BUILTIN_MAX_N or lp.L > BUILTIN_MAX_L):
            raise LPError(f"instance too large for the builtin solver (n={lp.n}, L={lp.L}); "
                          f"limits n<={BUILTIN_MAX_N}, L<={BUILTIN_MAX_L}, use force=True to override")
        res = simplex(lp.c, lp.A, lp.b, np.ones(lp.n_vars), rule=rule, exact=exact)
        z = np.array([float(v) for v in res.x]) if exact else res.x
        sol = _values_to_solution(lp, z, "builtin-exact" if exact else "builtin")
        if exact:
            sol.objective = float(res.objective + lp.constant)
            sol.rho = sol.objective / lp.n
        return sol
    if solver == "scipy":
        from scipy.optimize import linprog

        res = linprog(lp.c, A_ub=lp.A if lp.A.size else None, b_ub=lp.b if lp.A.size else None,
                      bounds=(0, 1), method="highs")
        if res.status != 0:
            raise LPError(f"scipy linprog failed: {res.message}")
        return _values_to_solution(lp, res.x, "scipy")
    if solver == "external-cmd":
        if not command:
            raise ValueError("external-cmd solver needs a command template")
        with tempfile.TemporaryDirectory() as tmp:
            lp_path = Path(tmp) / "model.lp"
            sol_path = Path(tmp) / "model.sol"
            write_lp(lp, lp_path)
            cmd = [part.format(lp=lp_path, sol=sol_path) for part in shlex.split(command)]
            subprocess.run(cmd, check=True, capture_output=True)
            z = read_solution(lp, sol_path)
        return _values_to_solution(lp, z, "external-cmd")
    raise ValueError(f"unknown solver {solver!r}")


# ---------------------------------------------------------------------------
# region growing


@dataclass
class RegionState:
    """A live set ``Z`` at level ``t`` with the data needed for ball queries."""

    Z: np.ndarray
    t: int
    D: np.ndarray        # d[t] restricted to Z
    W: np.ndarray        # weights restricted to Z, zero outside E_t
    rho: float

    @classmethod
    def make(cls, Z, t: int, sol: LPSolution, inst, lev: np.ndarray | None = None) -> "RegionState":
        inst = as_instance(inst)
        Z = np.asarray(sorted(int(v) for v in Z), dtype=np.int64)
        if lev is None:
            lev = build_level_map(inst.distances).level_matrix(inst.distances)
        lev = lev[np.ix_(Z, Z)]
        D = sol.d[t][np.ix_(Z, Z)].copy()
        np.fill_diagonal(D, 0.0)
        in_et = lev < t
        np.fill_diagonal(in_et, False)
        W = np.where(in_et, inst.weights[np.ix_(Z, Z)], 0.0)
        return cls(Z, t, D, W, sol.rho)

    def local(self, v: int) -> int:
        pos = int(np.searchsorted(self.Z, v))
        if pos >= self.Z.size or self.Z[pos] != v:
            raise KeyError(v)
        return pos

    def total(self) -> float:
        """``A_Z = rho |Z| + sum_{ij in E_t} w d``."""
        return self.rho * self.Z.size + float(np.triu(self.W * self.D, k=1).sum())

    def quantities(self, c_loc: int, r: float):
        inside = self.D[c_loc] <= r
        vol = self.rho * int(inside.sum())
        vol += float(np.triu((self.W * self.D)[np.ix_(inside, inside)], k=1).sum())
        cross = self.W[np.ix_(inside, ~inside)]
        boundary = float(cross.sum())
        vol += float(((r - self.D[c_loc][inside])[:, None] * cross).sum())
        return inside, vol, boundary


@dataclass
class RegionQuantities:
    ball: list[int]
    volume: float
    boundary: float
    total: float


def region_quantities(Z, t: int, c: int, r: float, sol: LPSolution, inst) -> RegionQuantities:
    """Ball ``V(c, r)``, its volume ``A(c, r)``, cut weight ``w(delta(c, r))`` and ``A_Z``."""
    st = RegionState.make(Z, t, sol, inst)
    inside, vol, boundary = st.quantities(st.local(c), r)
    return RegionQuantities(st.Z[inside].tolist(), vol, boundary, st.total())


def radius_constant(total: float, rho: float, k0: float) -> float:
    """``K = k0 (ln ln max(A_Z / rho, e^e) + 1)``.

    With ``rho = 0`` the LP optimum is 0, every ``E_t`` pair has ``d = 0`` and
    both sides of the inequality vanish, so the floor value is used.
    """
    ratio = total / rho if rho > 0 else 0.0
    return k0 * (math.log(math.log(max(ratio, math.e ** math.e))) + 1.0)


def _log_term(vol: float, total: float) -> float:
    """``vol * ln(total / vol)`` with the ``0 ln(./0) = 0`` limit."""
    if vol <= 0 or total <= 0:
        return 0.0
    return vol * math.log(max(total / vol, 1.0))


@dataclass
class RadiusChoice:
    center: int
    r: float
    slack: float
    K: float
    volume: float
    boundary: float
    total: float


def _candidate_radii(st: RegionState, c_loc: int) -> list[float]:
    dist = st.D[c_loc]
    breaks = sorted({0.0, ONE_THIRD, *[float(v) for v in dist if v <= ONE_THIRD]})
    cands = set(breaks)
    total = st.total()
    for lo, hi in zip(breaks, breaks[1:]):
        # sup over [lo, hi) is approached from below hi
        below = float(np.nextafter(hi, -np.inf))
        if below > lo:
            cands.add(below)
        # interior maximiser of the concave piece: volume = total / e
        _, vol, bnd = st.quantities(c_loc, lo)
        if bnd > 0 and total > 0:
            r_star = lo + (total / math.e - vol) / bnd
            if lo < r_star < hi:
                cands.add(float(r_star))
    return sorted(cands)


def choose_radius_state(st: RegionState, c_loc: int, k0: float = 3.0, check: bool = True) -> RadiusChoice:
    total = st.total()
    K = radius_constant(total, st.rho, k0)
    best = None
    for r in _candidate_radii(st, c_loc):
        _, vol, bnd = st.quantities(c_loc, r)
        slack = K * _log_term(vol, total) - bnd
        if math.isnan(slack):
            raise RegionGrowingError(f"slack undefined at r={r:.6g} (K={K}, volume={vol})")
        if best is None or slack >= best.slack:
            best = RadiusChoice(int(st.Z[c_loc]), r, slack, K, vol, bnd, total)
    if check and best.slack < -1e-9:
        raise RegionGrowingError(
            f"region-growing guarantee violated: best slack {best.slack:.3g} at r={best.r:.6g}")
    return best


def choose_radius(Z, t: int, c: int, sol: LPSolution, inst, k0: float = 3.0) -> RadiusChoice:
    """Radius in ``[0, 1/3]`` maximising ``K A(c,r) ln(A_Z / A(c,r)) - w(delta(c,r))``.

    Candidates are the ball breakpoints, the points just below each
    breakpoint, and the stationary point of each concave piece, so the
    maximum over the whole interval is found.  Ties go to the larger radius.
    """
    st = RegionState.make(Z, t, sol, inst)
    return choose_radius_state(st, st.local(c), k0)


@dataclass
class PartitionRecord:
    t: int
    pair: tuple[int, int]
    choice: RadiusChoice
    part: tuple[int, ...]


def cluster_partition(Z, t: int, sol: LPSolution, inst, k0: float = 3.0,
                      records: list | None = None, lev: np.ndarray | None = None) -> list[list[int]]:
    """Cut balls off ``Z`` while some ``E'_t`` pair in it has ``d[t] > 2/3``.

    ``lev`` is the precomputed level matrix of ``inst`` (computed if omitted).
    """
    inst = as_instance(inst)
    if lev is None:
        lev = build_level_map(inst.distances).level_matrix(inst.distances)
    Z = sorted(int(v) for v in Z)
    parts: list[list[int]] = []
    while Z:
        st = RegionState.make(Z, t, sol, inst, lev)
        far = (st.D > TWO_THIRDS) & (lev[np.ix_(st.Z, st.Z)] >= t)
        far = np.triu(far, k=1)
        if not far.any():
            parts.append(Z)
            break
        # lexicographically smallest qualifying pair
        i_loc, j_loc = (int(v) for v in np.argwhere(far)[0])
        total = st.total()
        _, vol_i, _ = st.quantities(i_loc, ONE_THIRD)
        c_loc = i_loc if vol_i <= total / 2 else j_loc
        choice = choose_radius_state(st, c_loc, k0)
        inside = st.D[c_loc] <= choice.r
        part = st.Z[inside].tolist()
        if records is not None:
            records.append(PartitionRecord(t, (int(st.Z[i_loc]), int(st.Z[j_loc])), choice, tuple(part)))
        parts.append(part)
        Z = st.Z[~inside].tolist()
    return parts


@dataclass
class RoundingTrace:
    records: list[PartitionRecord] = field(default_factory=list)


def hierarchical_cluster(inst, sol: LPSolution, k0: float = 3.0, trace: bool = False) -> RepairResult:
    """Round an LP solution top-down into an ultrametric.

    At level ``t`` the current cluster is partitioned; pairs split apart get
    ``w_t``, pairs kept together are capped at ``w_{t-1}`` (``w_0 = 0``).
    """
    inst = as_instance(inst)
    lm = build_level_map(inst.distances)
    lev = lm.level_matrix(inst.distances)
    n = inst.n
    y = np.full((n, n), lm.w(lm.L))
    np.fill_diagonal(y, 0.0)
    tr = RoundingTrace() if trace else None
    stack = [(list(range(n)), lm.L)]
    while stack:
        Z, t = stack.pop()
        if t == 0 or len(Z) <= 1:
            continue
        parts = cluster_partition(Z, t, sol, inst, k0, tr.records if tr is not None else None, lev)
        lab = np.empty(n, dtype=np.int64)
        for q, part in enumerate(parts):
            lab[part] = q
        idx = np.asarray(Z)
        same = lab[idx][:, None] == lab[idx][None, :]
        block = y[np.ix_(idx, idx)]
        block = np.where(same, np.minimum(block, lm.w(t - 1)), lm.w(t))
        np.fill_diagonal(block, 0.0)
        y[np.ix_(idx, idx)] = block
        for part in reversed(parts):
            stack.append((part, t - 1))
    return RepairResult.build(inst, DistanceMatrix(y), tr)


def lp_ultra(inst, solver: str = "builtin", k0: float = 3.0, force: bool = False,
             command: str | None = None, trace: bool = False) -> tuple[RepairResult, LPSolution]:
    """Build, solve and round in one call."""
    lp = build_lp(inst)
    sol = solve_lp(lp, solver=solver, force=force, command=command)
    return hierarchical_cluster(inst, sol, k0, trace), sol
