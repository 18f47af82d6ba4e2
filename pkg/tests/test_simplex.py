from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import linprog

from mvdlib.simplex import LPError, simplex


def test_small_known_optimum():
    # max x + y  s.t. x + 2y <= 4, 3x + y <= 6, 0 <= x, y <= 10  ->  (1.6, 1.2)
    res = simplex([-1, -1], [[1, 2], [3, 1]], [4, 6], [10, 10])
    assert np.allclose(res.x, [1.6, 1.2]) and res.objective == pytest.approx(-2.8)
    ex = simplex([-1, -1], [[1, 2], [3, 1]], [4, 6], [10, 10], exact=True)
    assert list(ex.x) == [Fraction(8, 5), Fraction(6, 5)] and ex.objective == Fraction(-14, 5)


def test_bound_flip_only():
    res = simplex([-1, -2], np.zeros((0, 2)), np.zeros(0), [3, 4])
    assert res.x.tolist() == [3, 4]


def test_errors():
    with pytest.raises(LPError, match="unbounded"):
        simplex([-1], [[-1]], [0], [np.inf])
    with pytest.raises(LPError):
        simplex([1], [[1]], [-1], [1])
    with pytest.raises(ValueError):
        simplex([1], [[1]], [1], [1], rule="steepest")


@pytest.mark.parametrize("rule", ["bland", "dantzig"])
def test_random_against_highs(rule):
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(120):
        m, n = int(rng.integers(1, 8)), int(rng.integers(1, 8))
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        b = rng.integers(0, 6, size=m).astype(float)
        c = rng.integers(-4, 4, size=n).astype(float)
        u = np.where(rng.random(n) < 0.7, rng.integers(0, 4, size=n).astype(float), np.inf)
        ref = linprog(c, A_ub=A, b_ub=b, bounds=list(zip([0] * n, u)), method="highs")
        if ref.status != 0:
            continue
        res = simplex(c, A, b, u, rule=rule)
        assert res.objective == pytest.approx(ref.fun, abs=1e-8)
        assert np.all(A @ res.x <= b + 1e-9) and np.all(res.x >= -1e-12) and np.all(res.x <= u + 1e-12)
        ex = simplex(c, A, b, u, rule=rule, exact=True)
        assert float(ex.objective) == pytest.approx(ref.fun, abs=1e-9)
        checked += 1
    assert checked > 50
