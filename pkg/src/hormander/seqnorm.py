"""Norms on finitely supported sequences indexed by the integers.

``Lp`` and ``OrliczSeq`` are monotone lattice norms; ``CounterexampleQuadratic``
is a genuine norm that is *not* monotone and is kept as a witness.

Norms act on a ``SparseSeq`` or, vectorised, on a stack of coordinates laid
out along ``axis`` (this is how pointwise norms of operator outputs are taken).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .young import YoungFunction, from_dict as young_from_dict

__all__ = [
    "SparseSeq",
    "SeqNorm",
    "Lp",
    "OrliczSeq",
    "CounterexampleQuadratic",
    "MonotoneCheck",
    "HarmonicReport",
    "check_monotone",
    "harmonic_norm",
    "orlicz_lambda0",
    "from_dict",
]

ORLICZ_RTOL = 1e-11


@dataclass(frozen=True)
class SparseSeq:
    """Finitely supported real sequence; indices not stored are zero."""

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, v in dict(self.entries).items():
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"non-finite value at index {k}")
            if v != 0.0:
                clean[int(k)] = v
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_values(cls, values, start: int = 0) -> "SparseSeq":
        return cls({start + i: v for i, v in enumerate(values)})

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        idx = np.array(sorted(self.entries), dtype=np.int64)
        return idx, np.array([self.entries[i] for i in idx], dtype=float)

    def __getitem__(self, n: int) -> float:
        return self.entries.get(int(n), 0.0)


class SeqNorm:
    monotone = True

    def norm(self, a) -> float:
        if not isinstance(a, SparseSeq):
            a = SparseSeq(a) if isinstance(a, dict) else SparseSeq.from_values(a)
        idx, vals = a.arrays()
        if vals.size == 0:
            return 0.0
        return float(self.norm_array(vals, axis=0, indices=idx))

    def norm_array(self, values, axis: int = 0, indices=None) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.to_dict()})"


class Lp(SeqNorm):
    def __init__(self, p: float):
        if not p >= 1:
            raise ValueError(f"l^p needs p >= 1, got {p}")
        self.p = float(p)

    def norm_array(self, values, axis=0, indices=None):
        a = np.abs(np.asarray(values, dtype=float))
        if math.isinf(self.p):
            return a.max(axis=axis)
        if self.p == 1:
            return a.sum(axis=axis)
        # scale by the max to keep a**p in range
        m = a.max(axis=axis, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        u = a / safe
        if self.p == 2:
            out = np.sqrt(np.sum(u * u, axis=axis, keepdims=True)) * m
        else:
            out = np.sum(u**self.p, axis=axis, keepdims=True) ** (1.0 / self.p) * m
        return np.squeeze(out, axis=axis)

    def to_dict(self):
        return {"variant": "lp", "p": "inf" if math.isinf(self.p) else self.p}


class OrliczSeq(SeqNorm):
    """||a||_E = inf{lam > 0 : sum_n E(|a_n| / lam) <= 1} (no normalising measure)."""

    def __init__(self, E: YoungFunction):
        self.E = E
        self._inv1 = float(E.inverse(1.0))

    def norm_array(self, values, axis=0, indices=None):
        a = np.moveaxis(np.abs(np.asarray(values, dtype=float)), axis, 0)
        vmax = a.max(axis=0)
        nnz = np.count_nonzero(a, axis=0)
        out = np.zeros(vmax.shape)
        live = vmax > 0
        if not np.any(live):
            return out if out.ndim else float(out)
        vmax = vmax[live]
        # solve for a / max(a), which keeps the norm exactly homogeneous
        a = a[:, live] / vmax
        # sum E(a/hi) <= nnz * E(1/hi) = 1   and   sum E(a/lo) >= E(1/lo) = 1
        hi = 1.0 / self.E.inverse(1.0 / nnz[live])
        lo = 1.0 / self._inv1 * (1.0 - 1e-15)
        for _ in range(200):
            if np.all(hi <= lo * (1.0 + ORLICZ_RTOL)):
                break
            mid = np.sqrt(lo * hi)
            over = self._modular(a, mid) > 1.0
            lo = np.where(over, mid, lo)
            hi = np.where(over, hi, mid)
        out[live] = hi * vmax
        return out if out.ndim else float(out)

    def _modular(self, a, lam):
        with np.errstate(over="ignore"):
            return np.sum(self.E._eval(a / lam), axis=0)

    def modular(self, values, lam: float) -> float:
        """sum_n E(|a_n| / lam) for a 1-d array of coordinates."""
        a = np.abs(np.asarray(values, dtype=float))[:, None]
        return float(self._modular(a, np.array([lam]))[0])

    def to_dict(self):
        return {"variant": "orlicz", "E": self.E.to_dict()}


class CounterexampleQuadratic(SeqNorm):
    """((x_1 - x_2)^2 + sum_{n != 1} x_n^2)^(1/2): a norm that is not monotone."""

    monotone = False
    # the pair (1, 3) <= (2, 3) at indices (1, 2) whose norms are sqrt(13) > sqrt(10)
    known_witness = ({1: 1.0, 2: 3.0}, {1: 2.0, 2: 3.0})

    def norm_array(self, values, axis=0, indices=None):
        a = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
        if indices is None:
            raise ValueError("the counterexample norm depends on the index positions")
        indices = np.asarray(indices)
        x1 = a[indices == 1].sum(axis=0)
        x2 = a[indices == 2].sum(axis=0)
        rest = np.sum(a[indices != 1] ** 2, axis=0)
        return np.sqrt((x1 - x2) ** 2 + rest)

    def to_dict(self):
        return {"variant": "counterexample"}


def from_dict(spec: dict) -> SeqNorm:
    variant = spec.get("variant")
    allowed = {"lp": {"variant", "p"}, "orlicz": {"variant", "E"}, "counterexample": {"variant"}}
    extra = set(spec) - allowed.get(variant, set(spec))
    if extra:
        raise ValueError(f"unknown keys for {variant!r}: {sorted(extra)}")
    if variant == "lp":
        p = spec.get("p", 2)
        return Lp(math.inf if p in ("inf", math.inf) else float(p))
    if variant == "orlicz":
        return OrliczSeq(young_from_dict(spec["E"]))
    if variant == "counterexample":
        return CounterexampleQuadratic()
    raise ValueError(f"unknown sequence norm variant {variant!r}")


# ---------------------------------------------------------------------------


@dataclass
class MonotoneCheck:
    passed: bool
    trials: int
    witness: tuple[SparseSeq, SparseSeq] | None = None
    norms: tuple[float, float] | None = None


def check_monotone(X: SeqNorm, trials: int = 1000, seed: int = 0) -> MonotoneCheck:
    """Search for |a_n| <= |b_n| with ||a|| > ||b||; report the first violation."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    candidates = []
    if getattr(X, "known_witness", None):
        candidates.append(tuple(SparseSeq(d) for d in X.known_witness))
    rng = np.random.default_rng(seed)
    for t in range(trials):
        if t < len(candidates):
            a, b = candidates[t]
        else:
            size = int(rng.integers(1, 9))
            idx = rng.choice(np.arange(-3, 7), size=size, replace=False)
            bv = rng.normal(size=size) * np.exp(rng.normal(size=size))
            av = bv * rng.uniform(-1, 1, size=size)
            a = SparseSeq(dict(zip(idx.tolist(), av.tolist())))
            b = SparseSeq(dict(zip(idx.tolist(), bv.tolist())))
        na, nb = X.norm(a), X.norm(b)
        if na > nb * (1 + 1e-12):
            return MonotoneCheck(False, t + 1, (a, b), (na, nb))
    return MonotoneCheck(True, trials)


@dataclass
class HarmonicReport:
    """Truncated ||{1/m}||_X with the diagnostics used to judge finiteness."""

    index_set: str
    m_max: int
    partial: float
    partial_half: float
    corrected: float
    tail_bound: tuple[float, float] | None
    increment: float
    stabilized: bool


def _harmonic_values(index_set: str, m: int) -> tuple[np.ndarray, np.ndarray]:
    pos = np.arange(1, m + 1, dtype=np.int64)
    if index_set == "Z*":
        idx = np.concatenate([-pos[::-1], pos])
    elif index_set == "N":
        idx = pos
    else:
        raise ValueError("index_set must be 'Z*' (Z without 0) or 'N'")
    return idx, 1.0 / idx


def harmonic_norm(X: SeqNorm, index_set: str = "Z*", m_max: int = 2**16, tol: float = 1e-8) -> HarmonicReport:
    """||{1/m}||_X truncated to |m| <= m_max, plus stabilisation diagnostics.

    For l^p with 1 < p < inf the tail sum over |m| > m_max is estimated by the
    midpoint integral and bracketed by the integral test; the corrected value
    is what the stabilisation test looks at.  Other norms use raw partials.
    """
    if m_max < 2:
        raise ValueError("m_max must be >= 2")
    sides = 2 if index_set == "Z*" else 1

    def value(m):
        idx, vals = _harmonic_values(index_set, m)
        return float(X.norm_array(vals, axis=0, indices=idx))

    full, half = value(m_max), value(m_max // 2)
    tail = None
    corrected, corrected_half = full, half
    if isinstance(X, Lp) and 1 < X.p < math.inf:
        p = X.p

        def tail_est(m):
            return sides * (m + 0.5) ** (1 - p) / (p - 1)

        tail = (sides * (m_max + 1) ** (1 - p) / (p - 1), sides * m_max ** (1 - p) / (p - 1))
        corrected = (full**p + tail_est(m_max)) ** (1 / p)
        corrected_half = (half**p + tail_est(m_max // 2)) ** (1 / p)
    increment = abs(corrected - corrected_half)
    stabilized = increment < tol and (tail is not None or not isinstance(X, Lp) or math.isinf(X.p))
    return HarmonicReport(index_set, m_max, full, half, corrected, tail, increment, stabilized)


def orlicz_lambda0(r: float, beta: float, m_max: int = 2**16) -> float:
    """(log(2)^beta * C + 1)^(1/r), C = 2 * sum m^-r bounded above via the integral test."""
    if not r > 1:
        raise ValueError("the bound needs r > 1")
    m = np.arange(1, m_max + 1, dtype=float)
    C = 2.0 * (float(np.sum(m**-r)) + m_max ** (1 - r) / (r - 1))
    return (math.log(2.0) ** beta * C + 1.0) ** (1.0 / r)
