"""Young functions, their inverses and complements, and Luxemburg averages.

A Young function here is any of the concrete families below.  Every family
evaluates vectorised over numpy arrays and knows its own inverse, either in
closed form or by bisection on the monotone map.

    >>> Power(2)(3.0)
    9.0
"""

from __future__ import annotations

import math

import numpy as np

from .sampled import DomainError, GridFunction, Interval

__all__ = [
    "YoungFunction",
    "Power",
    "ScaledPower",
    "PowerLog",
    "ExpPower",
    "Linear",
    "Custom",
    "Degenerate",
    "Interval",
    "from_dict",
    "luxemburg",
    "luxemburg_average",
    "indicator_luxemburg",
]

# numba dispatch codes, see maximal._phi_eval
KIND_POWER, KIND_POWERLOG_PLUS, KIND_POWERLOG_LOG1P, KIND_EXP, KIND_LINEAR, KIND_TABLE = range(6)

INVERSE_RTOL = 1e-13
LUX_RTOL = 1e-13
# numeric complement: log-spaced sup grid
CONJ_DECADES = (-8, 8)
CONJ_PER_DECADE = 4096


def _as_array(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise DomainError("Young functions are evaluated on [0, inf)")
    return arr


def _scalarize(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _invert_monotone(fn, s: np.ndarray) -> np.ndarray:
    """Solve fn(t) = s for nondecreasing fn with fn(0) = 0, geometric bisection."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    if not np.any(pos):
        return out
    target = s[pos]
    lo = np.ones_like(target)
    hi = np.ones_like(target)
    for _ in range(2100):
        grow = fn(hi) < target
        if not grow.any():
            break
        hi[grow] *= 2.0
    for _ in range(2100):
        shrink = fn(lo) > target
        if not shrink.any():
            break
        lo[shrink] *= 0.5
    for _ in range(200):
        if np.all(hi <= lo * (1 + INVERSE_RTOL)):
            break
        mid = np.sqrt(lo * hi)
        up = fn(mid) < target
        lo = np.where(up, mid, lo)
        hi = np.where(up, hi, mid)
    out[pos] = np.sqrt(lo * hi)
    return out


class YoungFunction:
    """Base class.  Subclasses implement ``_eval`` and optionally ``_inverse``."""

    #: smallest t beyond which the function is convex (0 for genuinely convex ones)
    convex_from = 0.0
    degenerate = False

    def __call__(self, t):
        arr = _as_array(t)
        with np.errstate(over="ignore"):
            return _scalarize(self._eval(arr), t)

    def inverse(self, s):
        arr = _as_array(s)
        return _scalarize(self._inverse(arr), s)

    def _inverse(self, s):
        return _invert_monotone(self._eval_safe, s)

    def _eval_safe(self, t):
        with np.errstate(over="ignore", invalid="ignore"):
            return self._eval(t)

    def complementary(self) -> "YoungFunction":
        return conjugate_table(self)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def numba_spec(self) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
        """(kind, params, table_x, table_y) consumed by compiled kernels."""
        raise NotImplementedError

    def __repr__(self):
        fields = ", ".join(f"{k}={v}" for k, v in self.to_dict().items() if k != "variant")
        return f"{type(self).__name__}({fields})"

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(repr(self))


class Power(YoungFunction):
    """t**r, r >= 1."""

    def __init__(self, r: float):
        if r < 1:
            raise DomainError(f"Power needs r >= 1, got {r}")
        self.r = float(r)

    def _eval(self, t):
        return t**self.r

    def _inverse(self, s):
        return s ** (1.0 / self.r)

    def complementary(self):
        if self.r == 1:
            return Degenerate()
        r = self.r
        rp = r / (r - 1)
        # sup_t (s t - t^r) is attained at t = (s/r)^(1/(r-1))
        return ScaledPower((r - 1) / r**rp, rp)

    def to_dict(self):
        return {"variant": "power", "r": self.r}

    def numba_spec(self):
        return KIND_POWER, np.array([self.r, 1.0, 0.0]), _EMPTY, _EMPTY


class ScaledPower(YoungFunction):
    """c * t**r; the complement of t**r is of this form with the dual exponent."""

    def __init__(self, c: float, r: float):
        if r < 1 or not c > 0:
            raise DomainError(f"ScaledPower needs r >= 1 and c > 0, got c={c}, r={r}")
        self.c = float(c)
        self.r = float(r)

    def _eval(self, t):
        return self.c * t**self.r

    def _inverse(self, s):
        return (s / self.c) ** (1.0 / self.r)

    def complementary(self):
        r, c = self.r, self.c
        if r == 1:
            raise DomainError("complement of c*t is degenerate")
        rp = r / (r - 1)
        return ScaledPower((r - 1) / r * (r * c) ** (1.0 - rp), rp)

    def to_dict(self):
        return {"variant": "scaledpower", "c": self.c, "r": self.r}

    def numba_spec(self):
        return KIND_POWER, np.array([self.r, self.c, 0.0]), _EMPTY, _EMPTY


class PowerLog(YoungFunction):
    """t^r (1 + log+ t)^beta, or t^r log(t + 1)^beta with ``log_form="log1p"``."""

    def __init__(self, r: float, beta: float, log_form: str = "plus"):
        if r < 1 or beta < 0:
            raise DomainError(f"PowerLog needs r >= 1, beta >= 0, got r={r}, beta={beta}")
        if log_form not in ("plus", "log1p"):
            raise ValueError(f"unknown log_form {log_form!r}")
        self.r = float(r)
        self.beta = float(beta)
        self.log_form = log_form

    def _eval(self, t):
        if self.log_form == "plus":
            lg = 1.0 + np.log(np.maximum(t, 1.0))
        else:
            lg = np.log1p(t)
        return t**self.r * lg**self.beta

    def to_dict(self):
        return {"variant": "powerlog", "r": self.r, "beta": self.beta, "log_form": self.log_form}

    def numba_spec(self):
        kind = KIND_POWERLOG_PLUS if self.log_form == "plus" else KIND_POWERLOG_LOG1P
        return kind, np.array([self.r, self.beta, 0.0]), _EMPTY, _EMPTY


class ExpPower(YoungFunction):
    """exp(t^gamma) - 1 (offset=1).

    With offset=0 the function is exp(t^gamma) for t >= 1, continued by the
    chord e*t on [0, 1] so that it vanishes at 0.
    """

    def __init__(self, gamma: float, offset: int = 1):
        if not gamma > 0:
            raise DomainError(f"ExpPower needs gamma > 0, got {gamma}")
        if offset not in (0, 1):
            raise DomainError("offset must be 0 or 1")
        self.gamma = float(gamma)
        self.offset = int(offset)
        knee = ((1.0 - self.gamma) / self.gamma) ** (1.0 / self.gamma) if self.gamma < 1 else 0.0
        self.convex_from = knee if offset == 1 else max(1.0, knee)

    def _eval(self, t):
        if self.offset == 1:
            return np.expm1(t**self.gamma)
        return np.where(t <= 1.0, math.e * t, np.exp(np.maximum(t, 1.0) ** self.gamma))

    def _inverse(self, s):
        if self.offset == 1:
            return np.log1p(s) ** (1.0 / self.gamma)
        return np.where(s <= math.e, s / math.e, np.log(np.maximum(s, math.e)) ** (1.0 / self.gamma))

    def to_dict(self):
        return {"variant": "exppower", "gamma": self.gamma, "offset": self.offset}

    def numba_spec(self):
        return KIND_EXP, np.array([self.gamma, float(self.offset), 0.0]), _EMPTY, _EMPTY


class Linear(YoungFunction):
    """t, giving L^1."""

    def _eval(self, t):
        return t.astype(float, copy=True)

    def _inverse(self, s):
        return s.astype(float, copy=True)

    def complementary(self):
        return Degenerate()

    def to_dict(self):
        return {"variant": "linear"}

    def numba_spec(self):
        return KIND_LINEAR, np.zeros(3), _EMPTY, _EMPTY


class Degenerate(YoungFunction):
    """Complement of t: 0 on [0, 1], +inf beyond.  Its Luxemburg norm is the sup norm."""

    degenerate = True

    def _eval(self, t):
        return np.where(t <= 1.0, 0.0, np.inf)

    def _inverse(self, s):
        return np.where(s > 0, 1.0, 0.0)

    def complementary(self):
        return Linear()

    def to_dict(self):
        return {"variant": "degenerate"}


class Custom(YoungFunction):
    """Piecewise-linear Young function through a monotone table (t_i, A(t_i)).

    The table starts at (0, 0); beyond the last knot the function continues
    with slope ``tail_slope`` (default: the last segment's slope).
    """

    def __init__(self, t, values, tail_slope: float | None = None, name: str = "custom"):
        t = np.asarray(t, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("table must be two 1-d arrays of equal length >= 2")
        if t[0] != 0 or v[0] != 0:
            raise ValueError("table must start at (0, 0)")
        if np.any(np.diff(t) <= 0) or np.any(np.diff(v) < 0):
            raise ValueError("table must be increasing in t and nondecreasing in value")
        self.t = t
        self.values = v
        if tail_slope is None:
            tail_slope = (v[-1] - v[-2]) / (t[-1] - t[-2])
        self.tail_slope = float(tail_slope)
        if not self.tail_slope > 0:
            raise ValueError("tail slope must be positive so that A(t) -> infinity")
        self.name = name
        # inverse table: last knot of every flat run at zero
        zero_run = int(np.searchsorted(v, 0.0, side="right")) - 1
        self._inv_t = t[zero_run:]
        self._inv_v = v[zero_run:]

    def _eval(self, t):
        inside = np.interp(t, self.t, self.values)
        beyond = self.values[-1] + self.tail_slope * (t - self.t[-1])
        return np.where(t <= self.t[-1], inside, beyond)

    def _inverse(self, s):
        inside = np.interp(s, self._inv_v, self._inv_t)
        beyond = self.t[-1] + (s - self.values[-1]) / self.tail_slope
        out = np.where(s <= self.values[-1], inside, beyond)
        return np.where(s > 0, out, 0.0)

    def to_dict(self):
        return {
            "variant": "custom",
            "name": self.name,
            "t": self.t.tolist(),
            "values": self.values.tolist(),
            "tail_slope": self.tail_slope,
        }

    def __repr__(self):
        return f"Custom({self.name}, {self.t.size} knots)"

    def numba_spec(self):
        return KIND_TABLE, np.array([self.tail_slope, 0.0, 0.0]), self.t, self.values


_EMPTY = np.zeros(1)


def _lower_hull(t: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Indices of the lower convex hull of points sorted by t (monotone chain)."""
    hull: list[int] = []
    for i in range(t.size):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # drop i1 if it lies on or above the chord i0 -> i
            cross = (t[i1] - t[i0]) * (a[i] - a[i0]) - (a[i1] - a[i0]) * (t[i] - t[i0])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull)


def conjugate_table(phi: YoungFunction) -> Custom:
    """Complementary function sup_t (s t - phi(t)) over a log-spaced t grid.

    The sup over finitely many points is the piecewise-linear function whose
    knots are the slopes of the lower convex hull of the sampled graph, so it
    is represented exactly as a table.
    """
    lo, hi = CONJ_DECADES
    t = np.concatenate([[0.0], np.logspace(lo, hi, (hi - lo) * CONJ_PER_DECADE + 1)])
    a = phi._eval_safe(t)
    keep = np.isfinite(a) & (a < 1e300)
    t, a = t[keep], a[keep]
    hull = _lower_hull(t, a)
    th, ah = t[hull], a[hull]
    slopes = np.diff(ah) / np.diff(th)
    # on [slopes[j-1], slopes[j]] the maximiser is hull vertex j
    knots_s = np.concatenate([[0.0], slopes])
    vertex = np.arange(slopes.size)
    knots_v = np.concatenate([[0.0], slopes * th[vertex] - ah[vertex]])
    knots_v = np.maximum(knots_v, 0.0)
    # a zero first slope would duplicate s = 0
    if knots_s.size > 1 and knots_s[1] <= 0:
        knots_s, knots_v = knots_s[1:], knots_v[1:]
        knots_s[0], knots_v[0] = 0.0, 0.0
    return Custom(knots_s, knots_v, tail_slope=float(th[-1]), name=f"conj[{phi!r}]")


_KEYS = {
    "power": {"variant", "r"},
    "scaledpower": {"variant", "c", "r"},
    "powerlog": {"variant", "r", "beta", "log_form"},
    "exppower": {"variant", "gamma", "offset"},
    "linear": {"variant"},
    "degenerate": {"variant"},
    "custom": {"variant", "t", "values", "tail_slope", "name"},
}


def from_dict(spec: dict) -> YoungFunction:
    """Inverse of ``YoungFunction.to_dict`` (the JSON wire format)."""
    variant = spec.get("variant")
    extra = set(spec) - _KEYS.get(variant, set(spec))
    if extra:
        raise ValueError(f"unknown keys for {variant!r}: {sorted(extra)}")
    if variant == "power":
        return Power(spec["r"])
    if variant == "scaledpower":
        return ScaledPower(spec["c"], spec["r"])
    if variant == "powerlog":
        return PowerLog(spec["r"], spec.get("beta", 0.0), spec.get("log_form", "plus"))
    if variant == "exppower":
        return ExpPower(spec["gamma"], spec.get("offset", 1))
    if variant == "linear":
        return Linear()
    if variant == "degenerate":
        return Degenerate()
    if variant == "custom":
        return Custom(spec["t"], spec["values"], spec.get("tail_slope"), spec.get("name", "custom"))
    raise ValueError(f"unknown Young function variant {variant!r}")


# ---------------------------------------------------------------------------
# Luxemburg averages


def luxemburg(values, weights, phi: YoungFunction, measure: float | None = None) -> float:
    """inf{lam > 0 : (1/measure) * sum_i weights_i * phi(|values_i| / lam) <= 1}.

    ``weights`` are the measures carried by each value; ``measure`` defaults to
    their sum (the normalising |B|).
    """
    v = np.abs(np.asarray(values, dtype=float))
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite samples in Luxemburg average")
    if measure is None:
        measure = float(w.sum())
    nz = (v > 0) & (w > 0)
    if not nz.any():
        return 0.0
    v, w = v[nz], w[nz]
    vmax = float(v.max())
    if phi.degenerate:
        return vmax
    wsum = float(w.sum())

    def avg(lam):
        with np.errstate(over="ignore"):
            return float(np.dot(w, phi._eval(v / lam))) / measure

    # avg(hi) <= (wsum / measure) * phi(vmax / hi) = 1
    hi = vmax / float(phi.inverse(measure / wsum))
    # avg(lo) >= (w_at_max / measure) * phi(vmax / lo) = 1
    lo = vmax / float(phi.inverse(measure / float(w[v == vmax].sum())))
    if not lo < hi:
        return hi
    for _ in range(64):
        if avg(lo) > 1.0:
            break
        lo *= 0.5
    for _ in range(400):
        if hi <= lo * (1.0 + LUX_RTOL):
            break
        mid = math.sqrt(lo * hi)
        if avg(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return hi


def indicator_luxemburg(c: float, ratio: float, phi: YoungFunction) -> float:
    """||c chi_E||_{phi, I} = c / phi^{-1}(|I| / |E|), with ratio = |I| / |E|."""
    if c == 0:
        return 0.0
    return abs(c) / float(phi.inverse(ratio))


def luxemburg_average(f: GridFunction, interval: Interval, phi: YoungFunction) -> float:
    """Normalised Luxemburg norm ||f||_{phi, I} of a sampled function."""
    values, weights = f.cell_weights(interval)
    return luxemburg(values, weights, phi, measure=interval.length)
