import numpy as np
import pytest

from mvdlib.core import build_level_map, is_ultrametric, l0_cost, metric_violations, ultrametric_violations
from mvdlib.corrclust import cc_brute_force, is_important_group
from mvdlib.instances import (STAR_V, STAR_W, gen_hypercube, gen_planted_cc, gen_random_metric_noise,
                              gen_random_ultra_noise, gen_star, hypercube_base, hypercube_noised_pairs,
                              matrix_to_signed, signed_to_matrix, star_spoke)
from mvdlib.oracle import exact_mvd, exact_umvd


def test_star_layout():
    x = gen_star(3)
    assert x.n == 5
    assert x[STAR_V, STAR_W] == 7
    assert x[STAR_V, star_spoke(2)] == 2 == x[STAR_W, star_spoke(2)]
    assert x[star_spoke(1), star_spoke(3)] == 4
    with pytest.raises(ValueError):
        gen_star(0)


@pytest.mark.parametrize("m", [1, 2, 4, 9])
def test_star_unbalanced_triangles(m):
    tris = {(t.i, t.j, t.k) for t in metric_violations(gen_star(m))}
    assert tris == {(STAR_V, STAR_W, star_spoke(k)) for k in range(1, m + 1)}


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_star_opt_is_one(m):
    assert exact_mvd(gen_star(m), max_n=7)[0] == 1


def test_hypercube_d2_pairs():
    x = gen_hypercube(2)
    # 00-01 shares one prefix bit (base 1) and is a Hamming-1 pair, so it becomes 3
    assert x[0, 1] == 3 and x[0, 2] == 3
    # 00-11 shares no prefix (base 2) and differs in two bits, so it keeps 2
    assert x[0, 3] == 2 and x[1, 2] == 2


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_hypercube_properties(d):
    x, base = gen_hypercube(d), hypercube_base(d)
    n = 2 ** d
    noised = hypercube_noised_pairs(d)
    assert len(noised) == n * d // 2
    assert np.count_nonzero(x.array == d + 1) // 2 == n * d // 2
    assert is_ultrametric(base)
    assert l0_cost(x, base) == n * d // 2
    if d >= 3:
        touched = {frozenset(p) for t in ultrametric_violations(x) for p in ((t.i, t.j), (t.i, t.k), (t.j, t.k))}
        assert all(frozenset(p) in touched for p in noised)


def test_hypercube_d2_is_already_ultrametric():
    # at d=2 every triangle keeps two equal maxima after noising
    assert is_ultrametric(gen_hypercube(2))
    assert exact_umvd(gen_hypercube(2))[0] == 0


def test_hypercube_d3_counts():
    x = gen_hypercube(3)
    assert x.n == 8 and np.count_nonzero(np.triu(x.array == 4)) == 12
    assert build_level_map(x).levels == (2.0, 3.0, 4.0)
    with pytest.raises(ValueError):
        gen_hypercube(13)


def test_random_ultra():
    x, clean = gen_random_ultra_noise(7, 3, 0.0, 1)
    assert x == clean and is_ultrametric(clean) and exact_umvd(x)[0] == 0
    x, clean = gen_random_ultra_noise(7, 3, 1 / 21, 2)
    assert l0_cost(x, clean) == 1 and exact_umvd(x)[0] <= 1
    a, _ = gen_random_ultra_noise(30, 3, 0.05, 42)
    b, _ = gen_random_ultra_noise(30, 3, 0.05, 42)
    assert a.array.tobytes() == b.array.tobytes()
    assert set(np.unique(a.condensed())) <= {1.0, 2.0, 3.0}
    with pytest.raises(ValueError):
        gen_random_ultra_noise(5, 3, 1.5, 0)


def test_random_metric():
    x, clean = gen_random_metric_noise(6, 0.0, 1)
    assert x == clean and exact_mvd(x)[0] == 0
    a, _ = gen_random_metric_noise(30, 0.1, 7)
    b, _ = gen_random_metric_noise(30, 0.1, 7)
    assert a.array.tobytes() == b.array.tobytes()
    with pytest.raises(ValueError):
        gen_random_metric_noise(5, -0.1, 0)


def test_random_metric_single_upward_flip():
    # find seeds whose single flip breaks a triangle; the oracle repairs it with one change
    hits = 0
    for seed in range(40):
        x, clean = gen_random_metric_noise(6, 1 / 15, seed)
        if metric_violations(x):
            assert exact_mvd(x)[0] == 1
            hits += 1
    assert hits > 0


def test_planted_cc():
    g, planted = gen_planted_cc([4, 3, 3], 0.0, 0)
    assert all(is_important_group(c, g) for c in planted)
    assert cc_brute_force(g)[1] == 0
    g1, _ = gen_planted_cc([6, 6], 0.1, 5)
    g2, _ = gen_planted_cc([6, 6], 0.1, 5)
    assert g1 == g2
    with pytest.raises(ValueError):
        gen_planted_cc([0, 3], 0.0, 0)


def test_signed_matrix_roundtrip():
    g, _ = gen_planted_cc([3, 3], 0.2, 1)
    assert matrix_to_signed(signed_to_matrix(g)) == g
    with pytest.raises(ValueError):
        matrix_to_signed(gen_star(2))
