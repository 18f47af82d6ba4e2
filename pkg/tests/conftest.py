import numpy as np
import pytest

from mvdlib._accel import use_numba
from mvdlib.core import DistanceMatrix

BACKENDS = ["numpy"] + (["numba"] if use_numba() else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def dm(n, values):
    """Matrix from a {(i, j): x} dict with 0-based pairs."""
    return DistanceMatrix.from_pairs(n, values)


def random_matrix(rng, n, kind="mixed"):
    """Random instance: small integer values (many ties), or floats."""
    if kind == "mixed":
        kind = ("int", "float", "levels")[int(rng.integers(3))]
    if kind == "int":
        vals = rng.integers(0, 8, size=n * (n - 1) // 2).astype(float)
    elif kind == "levels":
        vals = rng.integers(1, 4, size=n * (n - 1) // 2).astype(float)
    else:
        vals = rng.random(n * (n - 1) // 2) * 10
    return DistanceMatrix.from_condensed(n, vals)


def triple_loop_metric(a):
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if len({i, j, k}) == 3 and a[i, j] > a[i, k] + a[k, j]:
                    return False
    return True


def triple_loop_ultra(a):
    n = a.shape[0]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if len({i, j, k}) == 3 and a[i, j] > max(a[i, k], a[k, j]):
                    return False
    return True
