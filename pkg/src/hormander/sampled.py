"""Functions sampled on a uniform cell-centred grid over [-L, L].

Samples are interpreted as a piecewise-constant function (constant on each
cell), so every integral, box average and convolution below is exact for
that interpretation.  Everything is built on one prefix-sum array.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "DomainError",
    "CsvFormatError",
    "Interval",
    "GridFunction",
    "VectorGridFunction",
    "generate",
    "load_csv",
    "save_csv",
    "load_manifest",
    "save_manifest",
]


class DomainError(ValueError):
    """An argument lies outside the domain where the operation is defined."""


class CsvFormatError(ValueError):
    """Malformed CSV input; the message carries the offending line number."""


@dataclass(frozen=True)
class Interval:
    """Ball B = (center - radius, center + radius) on the real line."""

    center: float
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DomainError(f"interval radius must be positive, got {self.radius}")

    @classmethod
    def from_endpoints(cls, a: float, b: float) -> "Interval":
        if not b > a:
            raise DomainError(f"empty interval ({a}, {b})")
        return cls(0.5 * (a + b), 0.5 * (b - a))

    @property
    def left(self) -> float:
        return self.center - self.radius

    @property
    def right(self) -> float:
        return self.center + self.radius

    @property
    def length(self) -> float:
        return 2.0 * self.radius

    def dilate(self, factor: float) -> "Interval":
        """Concentric interval with radius multiplied by ``factor`` (2B, 2^j B, ...)."""
        return Interval(self.center, self.radius * factor)

    def contains(self, other: "Interval") -> bool:
        return self.left <= other.left and other.right <= self.right


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real function on [-L, L] sampled at the centres of N equal cells."""

    L: float
    samples: np.ndarray

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or not _is_pow2(samples.size):
            raise ValueError(f"sample count must be a power of two >= 2, got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples must be finite")
        if not self.L > 0:
            raise ValueError("half-length L must be positive")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "L", float(self.L))

    @classmethod
    def from_callable(cls, fn, L: float, N: int) -> "GridFunction":
        h = 2.0 * L / N
        x = -L + (np.arange(N) + 0.5) * h
        return cls(L, np.asarray(fn(x), dtype=float) * np.ones(N))

    @property
    def N(self) -> int:
        return self.samples.size

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        return -self.L + (np.arange(self.N) + 0.5) * self.h

    @cached_property
    def prefix(self) -> np.ndarray:
        """P[i] = sum of samples[:i]; integrals are h * differences of P."""
        out = np.zeros(self.N + 1)
        np.cumsum(self.samples, out=out[1:])
        return out

    def with_samples(self, samples) -> "GridFunction":
        return GridFunction(self.L, samples)

    def abs(self) -> "GridFunction":
        return self.with_samples(np.abs(self.samples))

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check_same_grid(other)
            return self.with_samples(self.samples + other.samples)
        return self.with_samples(self.samples + other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check_same_grid(other)
            return self.with_samples(self.samples * other.samples)
        return self.with_samples(self.samples * other)

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return self.with_samples(-self.samples)

    def __sub__(self, other):
        return self + (-other)

    def __pow__(self, p):
        return self.with_samples(self.samples**p)

    def _check_same_grid(self, other: "GridFunction"):
        if other.N != self.N or other.L != self.L:
            raise ValueError("grid functions live on different grids")

    def to_cells(self, pos) -> np.ndarray:
        """Map real positions to (fractional) cell coordinates in [0, N]."""
        return (np.asarray(pos, dtype=float) + self.L) / self.h

    def _antiderivative(self, u) -> np.ndarray:
        # F(u) = sum of samples over [0, u) in cell units, zero outside the domain
        u = np.clip(np.asarray(u, dtype=float), 0.0, float(self.N))
        i = np.minimum(np.floor(u).astype(np.int64), self.N - 1)
        frac = u - i
        return self.prefix[i] + frac * self.samples[i]

    def integrate_between(self, a, b) -> np.ndarray:
        """Integral over (a, b), vectorised; the function is zero-extended."""
        return self.h * (self._antiderivative(self.to_cells(b)) - self._antiderivative(self.to_cells(a)))

    def integrate(self, interval: Interval) -> float:
        """Exact integral of the piecewise-constant function over ``interval``."""
        tol = 1e-12 * self.L
        if interval.left < -self.L - tol or interval.right > self.L + tol:
            raise DomainError(f"{interval} is not inside [-{self.L}, {self.L}]")
        return float(self.integrate_between(interval.left, interval.right))

    def average(self, interval: Interval) -> float:
        return self.integrate(interval) / interval.length

    def cell_weights(self, interval: Interval) -> tuple[np.ndarray, np.ndarray]:
        """Sample values of the cells meeting ``interval`` and their overlap lengths."""
        tol = 1e-12 * self.L
        if interval.left < -self.L - tol or interval.right > self.L + tol:
            raise DomainError(f"{interval} is not inside [-{self.L}, {self.L}]")
        ua = max(0.0, float(self.to_cells(interval.left)))
        ub = min(float(self.N), float(self.to_cells(interval.right)))
        i0 = int(math.floor(ua))
        i1 = min(int(math.ceil(ub)), self.N)
        idx = np.arange(i0, i1)
        lo = np.maximum(idx, ua)
        hi = np.minimum(idx + 1, ub)
        w = (hi - lo) * self.h
        keep = w > 0
        return self.samples[idx[keep]], w[keep]

    def sliding_window_average(self, halfwidth: float) -> "GridFunction":
        """x -> average of f over (x - halfwidth, x + halfwidth), zero-extended."""
        if halfwidth < 0.5 * self.h * (1 - 1e-12):
            raise DomainError(f"halfwidth {halfwidth} is below half a cell ({self.h / 2})")
        span = halfwidth / self.h
        centres = np.arange(self.N) + 0.5
        total = self._antiderivative(centres + span) - self._antiderivative(centres - span)
        return self.with_samples(total * self.h / (2.0 * halfwidth))

    def translate(self, cells: int) -> "GridFunction":
        """Shift right by a whole number of cells, filling with zeros."""
        out = np.zeros(self.N)
        if cells >= 0:
            out[cells:] = self.samples[: self.N - cells]
        else:
            out[:cells] = self.samples[-cells:]
        return self.with_samples(out)

    def core_mask(self, fraction: float = 0.5) -> np.ndarray:
        """Cells whose centre lies in [-fraction * L, fraction * L]."""
        return np.abs(self.x) <= fraction * self.L

    def sup(self) -> float:
        return float(np.max(np.abs(self.samples)))


@dataclass(frozen=True, eq=False)
class VectorGridFunction:
    """Levels l_min..l_max of a vector-valued function on a shared grid.

    ``data[i]`` holds level ``l_min + i``.
    """

    L: float
    l_min: int
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or not _is_pow2(data.shape[1]):
            raise ValueError(f"bad vector grid function shape {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def l_max(self) -> int:
        return self.l_min + self.data.shape[0] - 1

    @property
    def levels(self) -> range:
        return range(self.l_min, self.l_max + 1)

    @property
    def N(self) -> int:
        return self.data.shape[1]

    def level(self, l: int) -> GridFunction:
        if not self.l_min <= l <= self.l_max:
            raise DomainError(f"level {l} outside [{self.l_min}, {self.l_max}]")
        return GridFunction(self.L, self.data[l - self.l_min])

    @property
    def grid(self) -> GridFunction:
        return GridFunction(self.L, np.zeros(self.N))

    def __add__(self, other: "VectorGridFunction") -> "VectorGridFunction":
        return VectorGridFunction(self.L, self.l_min, self.data + other.data)

    def __sub__(self, other: "VectorGridFunction") -> "VectorGridFunction":
        return VectorGridFunction(self.L, self.l_min, self.data - other.data)

    def scale(self, factor) -> "VectorGridFunction":
        """Multiply every level by a scalar or by a pointwise array/GridFunction."""
        if isinstance(factor, GridFunction):
            factor = factor.samples
        return VectorGridFunction(self.L, self.l_min, self.data * factor)

    def save_csv(self, path) -> None:
        x = self.grid.x
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"] + [f"level_{l}" for l in self.levels])
            for i in range(self.N):
                w.writerow([repr(float(x[i]))] + [repr(float(v)) for v in self.data[:, i]])

    @classmethod
    def load_csv(cls, path) -> "VectorGridFunction":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "x" or not all(c.startswith("level_") for c in rows[0][1:]):
            raise CsvFormatError("line 1: expected header x,level_<l>,...")
        levels = [int(c[len("level_"):]) for c in rows[0][1:]]
        try:
            arr = np.array([[float(v) for v in r] for r in rows[1:]])
        except ValueError as exc:
            raise CsvFormatError(f"non-numeric entry: {exc}") from None
        L = _infer_half_length(arr[:, 0])
        return cls(L, levels[0], arr[:, 1:].T)


# ---------------------------------------------------------------------------
# generators


def _bump(u):
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def _dyadic_chirp(u, depth):
    # frequency doubles on each successive dyadic block [1 - 2^-j, 1 - 2^-(j+1))
    out = np.zeros_like(u)
    inside = (u >= 0) & (u < 1)
    j = np.floor(-np.log2(1.0 - u[inside])).astype(int)
    j = np.minimum(j, depth)
    out[inside] = np.sin(2 * np.pi * 2.0 ** (j + 1) * u[inside])
    return out


def generate(kind: str, params: dict | None = None, L: float = 2.0**10, N: int = 2**16) -> GridFunction:
    """Build a test function or weight on the standard grid.

    kinds: ``bump`` (center, radius, height), ``step`` (a, b), ``dyadic-chirp``
    (a, b, depth), ``power`` (a: exponent of |x|; ``average: true`` takes exact
    cell averages instead of centre samples), ``log-abs``, ``constant``
    (value), ``oscillating`` (offset + sin(freq x)).
    """
    p = dict(params or {})
    h = 2.0 * L / N
    x = -L + (np.arange(N) + 0.5) * h
    if kind == "bump":
        c, r, height = p.get("center", 0.0), p.get("radius", 1.0), p.get("height", 1.0)
        y = height * _bump((x - c) / r)
    elif kind == "step":
        a, b = p.get("a", 0.0), p.get("b", 1.0)
        y = ((x >= a) & (x <= b)).astype(float)
    elif kind == "dyadic-chirp":
        a, b = p.get("a", 0.0), p.get("b", 1.0)
        y = _dyadic_chirp((x - a) / (b - a), int(p.get("depth", 6)))
    elif kind == "power":
        a = p["a"]
        if p.get("average") and a != -1:
            # exact cell averages of |x|^a; midpoint samples miss the mass near 0
            lo, hi = x - 0.5 * h, x + 0.5 * h
            prim = lambda u: np.sign(u) * np.abs(u) ** (a + 1) / (a + 1)
            y = (prim(hi) - prim(lo)) / h
        else:
            y = np.abs(x) ** a
    elif kind == "log-abs":
        y = np.log(np.abs(x))
    elif kind == "constant":
        y = np.full(N, float(p.get("value", 1.0)))
    elif kind == "oscillating":
        y = p.get("offset", 1.5) + np.sin(p.get("freq", 1.0) * x)
    else:
        raise ValueError(f"unknown generator kind {kind!r}")
    return GridFunction(L, y)


def save_manifest(path, entries: list[dict]) -> None:
    """Write a JSON manifest of generated families: [{"kind", "params", "L", "N"}, ...]."""
    Path(path).write_text(json.dumps(entries, indent=2, sort_keys=True))


def load_manifest(path) -> list[GridFunction]:
    entries = json.loads(Path(path).read_text())
    return [generate(e["kind"], e.get("params"), e.get("L", 2.0**10), e.get("N", 2**16)) for e in entries]


# ---------------------------------------------------------------------------
# CSV


def save_csv(f: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for xi, vi in zip(f.x, f.samples):
            w.writerow([repr(float(xi)), repr(float(vi))])


def _infer_half_length(x: np.ndarray) -> float:
    n = x.size
    if not _is_pow2(n):
        raise CsvFormatError(f"row count {n} is not a power of two >= 2")
    h = (x[-1] - x[0]) / (n - 1)
    if not h > 0 or not np.allclose(np.diff(x), h, rtol=1e-9, atol=0):
        raise CsvFormatError("x column is not a uniform increasing grid")
    L = n * h / 2
    if abs(x[0] - (-L + h / 2)) > 1e-9 * L:
        raise CsvFormatError("x column is not centred on a symmetric cell grid")
    return L


def load_csv(path) -> GridFunction:
    xs, vs = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if [c.strip() for c in row] != ["x", "value"]:
                    raise CsvFormatError(f"line 1: expected header 'x,value', got {row!r}")
                continue
            if not row:
                continue
            if len(row) != 2:
                raise CsvFormatError(f"line {lineno}: expected 2 columns, got {len(row)}")
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError:
                raise CsvFormatError(f"line {lineno}: non-numeric entry {row!r}") from None
            if not (math.isfinite(xs[-1]) and math.isfinite(vs[-1])):
                raise CsvFormatError(f"line {lineno}: non-finite entry {row!r}")
    if not xs:
        raise CsvFormatError("no data rows")
    L = _infer_half_length(np.array(xs))
    return GridFunction(L, np.array(vs))
