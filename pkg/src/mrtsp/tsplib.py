"""TSPLIB instance loading.

Supports EXPLICIT/FULL_MATRIX (the asymmetric instances this project targets)
and EUC_2D coordinate files. Headers are parsed leniently (unknown keys such
as COMMENT are skipped), sections strictly: the weight section must contain
exactly N*N numeric tokens and nothing numeric may trail it before EOF.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator

import numpy as np


class ParseError(ValueError):
    """Malformed TSPLIB input. Carries the offending line number and keyword."""

    def __init__(self, message: str, *, line: int | None = None, keyword: str | None = None):
        detail = message
        if keyword is not None:
            detail += f" (keyword {keyword}"
            detail += f", line {line})" if line is not None else ")"
        elif line is not None:
            detail += f" (line {line})"
        super().__init__(detail)
        self.line = line
        self.keyword = keyword


class MissingKeywordError(ParseError):
    pass


class UnsupportedFormatError(ParseError):
    pass


class TokenCountError(ParseError):
    pass


class TokenValueError(ParseError):
    pass


@dataclass(frozen=True, eq=False)
class Instance:
    """A TSP instance as an N x N matrix of directed edge weights.

    distances[i][j] is the cost of travelling i -> j; asymmetry is allowed.
    Diagonal entries are stored as read but never used by tour evaluation.
    """

    name: str
    dimension: int
    distances: np.ndarray
    known_optimum: float | None = None
    _rows: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        n = self.dimension
        if n < 2:
            raise ValueError(f"dimension must be >= 2, got {n}")
        if self.distances.shape != (n, n):
            raise ValueError(f"distance matrix must be {n}x{n}, got {self.distances.shape}")
        if not np.all(np.isfinite(self.distances)):
            raise ValueError("distance matrix has non-finite entries")
        if np.any(self.distances < 0):
            raise ValueError("distance matrix has negative entries")
        self.distances.setflags(write=False)
        # plain-list rows for the GA hot loops; numpy scalar indexing is slow
        self._rows.extend(self.distances.tolist())

    @property
    def rows(self) -> list:
        """Distance matrix as nested Python lists (fast element access)."""
        return self._rows

    def with_known_optimum(self, value: float | None) -> "Instance":
        return Instance(self.name, self.dimension, np.array(self.distances), value)


def _as_matrix(values: list, n: int) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(n, n)
    if np.all(arr == np.floor(arr)) and np.all(np.abs(arr) < 2**62):
        return arr.astype(np.int64)
    return arr


def _numeric(token: str) -> float | None:
    try:
        return float(token)
    except ValueError:
        return None


def _iter_lines(source: str | IO[str]) -> Iterator[tuple[int, str]]:
    text = source if isinstance(source, str) else source.read()
    for idx, line in enumerate(text.splitlines(), start=1):
        yield idx, line


_HEADER_KEYS = {
    "NAME", "TYPE", "COMMENT", "DIMENSION", "EDGE_WEIGHT_TYPE", "EDGE_WEIGHT_FORMAT",
    "DISPLAY_DATA_TYPE", "NODE_COORD_TYPE", "CAPACITY",
}


def parse_instance(source: str | IO[str]) -> Instance:
    """Parse TSPLIB text into an Instance.

    Accepts EDGE_WEIGHT_TYPE EXPLICIT (EDGE_WEIGHT_FORMAT FULL_MATRIX, tokens
    row-major) or EUC_2D (NODE_COORD_SECTION, distances rounded to the nearest
    integer). Anything else raises UnsupportedFormatError.
    """
    name = ""
    dimension: int | None = None
    ew_type: str | None = None
    ew_format: str | None = None
    matrix: np.ndarray | None = None
    coords: list[tuple[float, float]] | None = None

    lines = _iter_lines(source)
    for lineno, raw in lines:
        stripped = raw.strip()
        if not stripped:
            continue
        key, _, value = stripped.partition(":")
        key = key.strip().upper()
        value = value.strip()

        if key == "EOF":
            break
        if key == "NAME":
            name = value
        elif key == "DIMENSION":
            num = _numeric(value)
            if num is None or num != int(num):
                raise TokenValueError(f"DIMENSION value {value!r} is not an integer",
                                      line=lineno, keyword="DIMENSION")
            dimension = int(num)
        elif key == "EDGE_WEIGHT_TYPE":
            ew_type = value.upper()
        elif key == "EDGE_WEIGHT_FORMAT":
            ew_format = value.upper()
        elif key == "EDGE_WEIGHT_SECTION":
            if dimension is None:
                raise MissingKeywordError("DIMENSION must appear before EDGE_WEIGHT_SECTION",
                                          line=lineno, keyword="DIMENSION")
            if ew_type != "EXPLICIT":
                raise UnsupportedFormatError(
                    f"EDGE_WEIGHT_SECTION requires EDGE_WEIGHT_TYPE EXPLICIT, got {ew_type!r}",
                    line=lineno, keyword="EDGE_WEIGHT_TYPE")
            if ew_format not in (None, "FULL_MATRIX"):
                raise UnsupportedFormatError(
                    f"unsupported EDGE_WEIGHT_FORMAT {ew_format!r}; only FULL_MATRIX is supported",
                    line=lineno, keyword="EDGE_WEIGHT_FORMAT")
            matrix = _read_full_matrix(lines, dimension)
        elif key == "NODE_COORD_SECTION":
            if dimension is None:
                raise MissingKeywordError("DIMENSION must appear before NODE_COORD_SECTION",
                                          line=lineno, keyword="DIMENSION")
            if ew_type != "EUC_2D":
                raise UnsupportedFormatError(
                    f"NODE_COORD_SECTION requires EDGE_WEIGHT_TYPE EUC_2D, got {ew_type!r}",
                    line=lineno, keyword="EDGE_WEIGHT_TYPE")
            coords = _read_coords(lines, dimension)
        elif key in _HEADER_KEYS:
            continue
        else:
            # numeric junk outside any section is a structural error
            if _numeric(key.split()[0] if key else "") is not None:
                raise TokenCountError(f"unexpected numeric data outside a section: {stripped!r}",
                                      line=lineno, keyword="EDGE_WEIGHT_SECTION")

    if dimension is None:
        raise MissingKeywordError("missing DIMENSION", keyword="DIMENSION")
    if ew_type is None:
        raise MissingKeywordError("missing EDGE_WEIGHT_TYPE", keyword="EDGE_WEIGHT_TYPE")
    if matrix is None and coords is None:
        if ew_type == "EXPLICIT":
            raise MissingKeywordError("missing EDGE_WEIGHT_SECTION", keyword="EDGE_WEIGHT_SECTION")
        if ew_type == "EUC_2D":
            raise MissingKeywordError("missing NODE_COORD_SECTION", keyword="NODE_COORD_SECTION")
        raise UnsupportedFormatError(f"unsupported EDGE_WEIGHT_TYPE {ew_type!r}",
                                     keyword="EDGE_WEIGHT_TYPE")
    if coords is not None:
        matrix = _euclidean_matrix(coords)
    assert matrix is not None
    return Instance(name=name, dimension=dimension, distances=matrix)


def _read_full_matrix(lines: Iterator[tuple[int, str]], n: int) -> np.ndarray:
    """Consume exactly n*n numeric tokens, row-major, then require EOF/keyword."""
    need = n * n
    values: list[float] = []
    last_line = None
    for lineno, raw in lines:
        last_line = lineno
        stripped = raw.strip()
        if not stripped:
            continue
        first = stripped.split()[0]
        if _numeric(first) is None:
            # hit the next keyword (EOF etc.) before enough tokens
            if len(values) < need:
                raise TokenCountError(
                    f"EDGE_WEIGHT_SECTION ended after {len(values)} tokens, expected {need}",
                    line=lineno, keyword="EDGE_WEIGHT_SECTION")
            break
        for token in stripped.split():
            num = _numeric(token)
            if num is None:
                raise TokenValueError(f"non-numeric token {token!r} in EDGE_WEIGHT_SECTION",
                                      line=lineno, keyword="EDGE_WEIGHT_SECTION")
            values.append(num)
        if len(values) > need:
            raise TokenCountError(
                f"EDGE_WEIGHT_SECTION holds more than {need} tokens",
                line=lineno, keyword="EDGE_WEIGHT_SECTION")
    if len(values) < need:
        raise TokenCountError(
            f"EDGE_WEIGHT_SECTION ended after {len(values)} tokens, expected {need}",
            line=last_line, keyword="EDGE_WEIGHT_SECTION")
    return _as_matrix(values, n)


def _read_coords(lines: Iterator[tuple[int, str]], n: int) -> list[tuple[float, float]]:
    coords: list[tuple[float, float] | None] = [None] * n
    seen = 0
    for lineno, raw in lines:
        stripped = raw.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if _numeric(parts[0]) is None:
            break
        if len(parts) != 3:
            raise TokenValueError(f"NODE_COORD_SECTION line needs 'index x y', got {stripped!r}",
                                  line=lineno, keyword="NODE_COORD_SECTION")
        idx_f, x, y = (_numeric(p) for p in parts)
        if idx_f is None or x is None or y is None:
            raise TokenValueError(f"non-numeric token in NODE_COORD_SECTION: {stripped!r}",
                                  line=lineno, keyword="NODE_COORD_SECTION")
        idx = int(idx_f) - 1
        if idx < 0 or idx >= n or coords[idx] is not None:
            raise TokenValueError(f"bad node index {parts[0]} in NODE_COORD_SECTION",
                                  line=lineno, keyword="NODE_COORD_SECTION")
        coords[idx] = (x, y)
        seen += 1
        if seen == n:
            break
    if seen < n:
        raise TokenCountError(f"NODE_COORD_SECTION has {seen} nodes, expected {n}",
                              keyword="NODE_COORD_SECTION")
    return [c for c in coords if c is not None]


def _euclidean_matrix(coords: list[tuple[float, float]]) -> np.ndarray:
    # TSPLIB nint() rounding: floor(d + 0.5)
    n = len(coords)
    mat = np.zeros((n, n), dtype=np.int64)
    for i, (xi, yi) in enumerate(coords):
        for j, (xj, yj) in enumerate(coords):
            if i != j:
                mat[i, j] = math.floor(math.hypot(xi - xj, yi - yj) + 0.5)
    return mat


def format_instance(instance: Instance) -> str:
    """Render an Instance as EXPLICIT/FULL_MATRIX TSPLIB text.

    parse_instance(format_instance(x)) reproduces the matrix exactly.
    """
    out = [
        f"NAME: {instance.name}",
        "TYPE: ATSP",
        f"DIMENSION: {instance.dimension}",
        "EDGE_WEIGHT_TYPE: EXPLICIT",
        "EDGE_WEIGHT_FORMAT: FULL_MATRIX",
        "EDGE_WEIGHT_SECTION",
    ]
    for row in instance.distances:
        out.append(" ".join(repr(v) if isinstance(v, float) else str(v) for v in row.tolist()))
    out.append("EOF")
    return "\n".join(out) + "\n"


def random_instance(n: int, weight_range: tuple[int, int], seed: int) -> Instance:
    """Seeded random asymmetric instance; off-diagonal weights drawn uniformly."""
    if not 2 <= n <= 64:
        raise ValueError(f"n must be in [2, 64], got {n}")
    lo, hi = weight_range
    if lo < 0 or hi < lo:
        raise ValueError(f"weight range must be a non-empty range of non-negative ints, got {weight_range}")
    rng = random.Random(seed)
    mat = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if i != j:
                mat[i, j] = rng.randint(lo, hi)
    return Instance(name=f"rand{n}s{seed}", dimension=n, distances=mat)


def load_registry(path: Path | str) -> dict[str, float]:
    """Read a 'name value' registry of known optima; '#' starts a comment."""
    registry: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or _numeric(parts[1]) is None:
            raise ParseError(f"registry line must be 'name value', got {raw!r}", line=lineno)
        value = float(parts[1])
        registry[parts[0]] = int(value) if value == int(value) else value
    return registry


def save_registry(registry: dict[str, float], path: Path | str) -> None:
    """Write the registry sorted by name; rewriting the same mapping is idempotent."""
    lines = [f"{name} {value}" for name, value in sorted(registry.items())]
    Path(path).write_text("\n".join(lines) + "\n")


def load_instance(path: Path | str, registry_path: Path | str | None = None) -> Instance:
    """Parse an instance file; fill known_optimum from a registry when available.

    With no explicit registry path, an optima.txt next to the instance file is
    used if present.
    """
    path = Path(path)
    with path.open() as fh:
        instance = parse_instance(fh)
    if not instance.name:
        instance = Instance(path.stem, instance.dimension, np.array(instance.distances))
    if registry_path is None:
        candidate = path.parent / "optima.txt"
        registry_path = candidate if candidate.exists() else None
    if registry_path is not None:
        registry = load_registry(registry_path)
        if instance.name in registry:
            instance = instance.with_known_optimum(registry[instance.name])
    return instance
