"""Plain-text instance files.

    mvdlib-instance 1
    n 3
    0 1 2
    0 2 1 0.5
    1 2 1

One line per unordered pair ``i j x [w]`` with ``i < j``; a missing weight
means 1.  Lines starting with ``#`` are comments; ``# signed`` marks a signed
graph stored as distances 0 (+) and 1 (-).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DistanceMatrix, WeightedInstance, as_instance
from .corrclust import SignedGraph
from .instances import matrix_to_signed, signed_to_matrix

MAGIC = "mvdlib-instance 1"
SIGNED_TAG = "# signed"


class InstanceFormatError(ValueError):
    def __init__(self, line: int | None, msg: str):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass
class ParsedInstance:
    instance: WeightedInstance
    signed: bool = False


def format_number(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _number(tok: str, lineno: int, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise InstanceFormatError(lineno, f"bad {what} {tok!r}") from None
    if not math.isfinite(v):
        raise InstanceFormatError(lineno, f"{what} must be finite, got {tok!r}")
    if v < 0:
        raise InstanceFormatError(lineno, f"negative {what} {tok!r}")
    return v


def _index(tok: str, n: int, lineno: int) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise InstanceFormatError(lineno, f"bad point index {tok!r}") from None
    if not 0 <= v < n:
        raise InstanceFormatError(lineno, f"point index {v} out of range for n={n}")
    return v


def parse_text(text: str) -> ParsedInstance:
    signed = False
    body = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            signed = signed or line == SIGNED_TAG
            continue
        if not line:
            continue
        body.append((lineno, line))
    if not body or body[0][1] != MAGIC:
        raise InstanceFormatError(body[0][0] if body else 1, f"expected header {MAGIC!r}")
    if len(body) < 2:
        raise InstanceFormatError(None, "missing 'n <count>' line")
    lineno, line = body[1]
    parts = line.split()
    if len(parts) != 2 or parts[0] != "n":
        raise InstanceFormatError(lineno, f"expected 'n <count>', got {line!r}")
    try:
        n = int(parts[1])
    except ValueError:
        raise InstanceFormatError(lineno, f"bad point count {parts[1]!r}") from None
    if n < 1:
        raise InstanceFormatError(lineno, "point count must be >= 1")

    x = np.zeros((n, n))
    w = np.ones((n, n))
    seen = np.zeros((n, n), dtype=bool)
    for lineno, line in body[2:]:
        parts = line.split()
        if len(parts) not in (3, 4):
            raise InstanceFormatError(lineno, f"expected 'i j x [w]', got {line!r}")
        i, j = _index(parts[0], n, lineno), _index(parts[1], n, lineno)
        if i >= j:
            raise InstanceFormatError(lineno, f"pair ({i}, {j}) must have i < j")
        if seen[i, j]:
            raise InstanceFormatError(lineno, f"duplicate pair ({i}, {j})")
        seen[i, j] = True
        x[i, j] = x[j, i] = _number(parts[2], lineno, "distance")
        if len(parts) == 4:
            w[i, j] = w[j, i] = _number(parts[3], lineno, "weight")
    iu = np.triu_indices(n, k=1)
    missing = np.flatnonzero(~seen[iu])
    if missing.size:
        e = int(missing[0])
        raise InstanceFormatError(None, f"missing pair ({int(iu[0][e])}, {int(iu[1][e])})")
    np.fill_diagonal(w, 1.0)
    return ParsedInstance(WeightedInstance(DistanceMatrix(x), w), signed)


def parse_instance(path) -> WeightedInstance:
    return parse_text(Path(path).read_text()).instance


def read_parsed(path) -> ParsedInstance:
    return parse_text(Path(path).read_text())


def format_instance(inst, signed: bool = False, comments: tuple[str, ...] = ()) -> str:
    inst = as_instance(inst)
    n = inst.n
    x, w = inst.distances.array, inst.weights
    iu = np.triu_indices(n, k=1)
    with_w = not inst.unit_weights
    lines = [MAGIC, f"n {n}"]
    if signed:
        lines.append(SIGNED_TAG)
    lines.extend(f"# {c}" for c in comments)
    for i, j in zip(iu[0].tolist(), iu[1].tolist()):
        row = f"{i} {j} {format_number(x[i, j])}"
        if with_w:
            row += f" {format_number(w[i, j])}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def write_instance(inst, path, signed: bool = False) -> None:
    Path(path).write_text(format_instance(inst, signed))


def format_signed(g: SignedGraph) -> str:
    return format_instance(signed_to_matrix(g), signed=True)


def parse_signed(path) -> SignedGraph:
    parsed = read_parsed(path)
    return matrix_to_signed(parsed.instance.distances)
