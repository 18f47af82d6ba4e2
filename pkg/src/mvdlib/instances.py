"""Instance generators: the star and noised-hypercube lower-bound constructions
and seeded random noise models for benchmarks."""
from __future__ import annotations

import numpy as np

from .core import DistanceMatrix
from .corrclust import Clustering, SignedGraph

# point indices in gen_star
STAR_V = 0
STAR_W = 1


def star_spoke(k: int) -> int:
    """Index of spoke ``u_k`` (1-based ``k``)."""
    return k + 1


def gen_star(m: int) -> DistanceMatrix:
    """Points ``v, w, u_1..u_m`` with ``x(v,u_k) = x(w,u_k) = k``,
    ``x(u_j,u_k) = j + k`` and ``x(v,w) = 2m + 1``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    n = m + 2
    a = np.zeros((n, n))
    k = np.arange(1, m + 1, dtype=np.float64)
    a[STAR_V, 2:] = a[2:, STAR_V] = k
    a[STAR_W, 2:] = a[2:, STAR_W] = k
    a[2:, 2:] = k[:, None] + k[None, :]
    a[STAR_V, STAR_W] = a[STAR_W, STAR_V] = 2 * m + 1
    np.fill_diagonal(a, 0.0)
    return DistanceMatrix(a)


def _hypercube_labels(d: int) -> np.ndarray:
    if not 1 <= d <= 12:
        raise ValueError("d must be in [1, 12]")
    return np.arange(2 ** d, dtype=np.int64)


def hypercube_base(d: int) -> DistanceMatrix:
    """Tree ultrametric: ``d`` minus the common prefix length of the labels."""
    lab = _hypercube_labels(d)
    xor = lab[:, None] ^ lab[None, :]
    # bit length of a ^ b is d - (common prefix length)
    base = np.zeros(xor.shape)
    nz = xor > 0
    base[nz] = np.floor(np.log2(xor[nz])) + 1
    return DistanceMatrix(base)


def hypercube_noised_pairs(d: int) -> list[tuple[int, int]]:
    n = 2 ** d
    return [(a, a ^ (1 << b)) for a in range(n) for b in range(d) if a < a ^ (1 << b)]


def gen_hypercube(d: int) -> DistanceMatrix:
    """The base tree ultrametric with every Hamming-distance-1 pair set to ``d + 1``."""
    a = hypercube_base(d).copy_array()
    for i, j in hypercube_noised_pairs(d):
        a[i, j] = a[j, i] = d + 1
    return DistanceMatrix(a)


def _check_fraction(f: float) -> None:
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"flip_fraction must lie in [0, 1], got {f}")


def _flip_indices(rng: np.random.Generator, n: int, f: float):
    iu = np.triu_indices(n, k=1)
    count = int(round(f * iu[0].size))
    picks = np.sort(rng.choice(iu[0].size, size=count, replace=False)) if count else np.empty(0, np.int64)
    return iu[0][picks], iu[1][picks]


def gen_random_ultra_noise(n: int, levels: int, flip_fraction: float, seed: int):
    """Random hierarchy of depth ``levels`` (values ``1..levels``) with a
    fraction of pairs moved to a different level.  Returns ``(noised, clean)``."""
    _check_fraction(flip_fraction)
    if n < 1 or levels < 1:
        raise ValueError("need n >= 1 and levels >= 1")
    rng = np.random.default_rng(seed)
    clean = np.ones((n, n))
    blocks = [np.arange(n)]
    for value in range(levels, 1, -1):
        nxt = []
        for blk in blocks:
            k = int(rng.integers(2, 4)) if blk.size > 1 else 1
            lab = rng.integers(0, k, size=blk.size)
            parts = [blk[lab == q] for q in range(k) if np.any(lab == q)]
            for a in range(len(parts)):
                for b in range(a + 1, len(parts)):
                    clean[np.ix_(parts[a], parts[b])] = value
                    clean[np.ix_(parts[b], parts[a])] = value
            nxt.extend(parts)
        blocks = nxt
    np.fill_diagonal(clean, 0.0)
    noised = clean.copy()
    fi, fj = _flip_indices(rng, n, flip_fraction)
    if fi.size and levels < 2:
        raise ValueError("flipping needs at least two levels")
    for i, j in zip(fi.tolist(), fj.tolist()):
        choices = [v for v in range(1, levels + 1) if v != clean[i, j]]
        noised[i, j] = noised[j, i] = float(choices[int(rng.integers(len(choices)))])
    return DistanceMatrix(noised), DistanceMatrix(clean)


def gen_random_metric_noise(n: int, flip_fraction: float, seed: int):
    """Euclidean distances of random points in the unit square, with a fraction
    of entries multiplied by a uniform factor in ``[0, 3]``."""
    _check_fraction(flip_fraction)
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    diff = pts[:, None, :] - pts[None, :, :]
    clean = np.sqrt((diff ** 2).sum(-1))
    np.fill_diagonal(clean, 0.0)
    clean = (clean + clean.T) / 2
    noised = clean.copy()
    fi, fj = _flip_indices(rng, n, flip_fraction)
    factors = rng.uniform(0.0, 3.0, size=fi.size)
    noised[fi, fj] *= factors
    noised[fj, fi] = noised[fi, fj]
    return DistanceMatrix(noised), DistanceMatrix(clean)


def gen_planted_cc(sizes, flip_fraction: float, seed: int):
    """Disjoint + cliques of the given sizes, - across, with a fraction of
    pair signs flipped.  Returns ``(graph, planted clustering)``."""
    _check_fraction(flip_fraction)
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1:
        raise ValueError("sizes must be positive")
    rng = np.random.default_rng(seed)
    n = sum(sizes)
    lab = np.repeat(np.arange(len(sizes)), sizes)
    plus = lab[:, None] == lab[None, :]
    np.fill_diagonal(plus, False)
    fi, fj = _flip_indices(rng, n, flip_fraction)
    plus[fi, fj] = ~plus[fi, fj]
    plus[fj, fi] = plus[fi, fj]
    starts = np.concatenate([[0], np.cumsum(sizes)])
    planted = Clustering([tuple(range(starts[q], starts[q + 1])) for q in range(len(sizes))])
    return SignedGraph(plus), planted


def signed_to_matrix(g: SignedGraph) -> DistanceMatrix:
    """Distances 0 for + pairs and 1 for - pairs."""
    a = np.where(g.plus, 0.0, 1.0)
    np.fill_diagonal(a, 0.0)
    return DistanceMatrix(a)


def matrix_to_signed(x) -> SignedGraph:
    a = x.array if isinstance(x, DistanceMatrix) else np.asarray(x)
    off = ~np.eye(a.shape[0], dtype=bool)
    vals = a[off]
    if not np.all((vals == 0) | (vals == 1)):
        raise ValueError("signed graph files hold only 0 (+) and 1 (-) distances")
    return SignedGraph((a == 0) & off)
