"""Maximal operators on sampled functions.

Every supremum "over intervals containing x" runs over an ``IntervalFamily``:
cell-aligned intervals whose lengths grow geometrically (``per_octave`` steps
per doubling) and whose start positions are spaced max(1, n // stride_div)
cells apart.  Any interval J containing x sits inside a family interval I
containing x with |I| <= ``family.factor`` * |J|.  For L^1 and Luxemburg
averages this gives family_max >= true_max / factor, and family_max never
exceeds the true sup because family members are genuine intervals.

The Orlicz maximal function has two evaluation methods:

``exact``
    Luxemburg average of every family interval (compiled Newton/bisection).
``screen``
    Prefix sums of phi(|f| / lam_k) on a geometric lam-grid bracket every
    interval's average; each point's best-bracketed interval is then solved
    exactly and the exact values are spread over the intervals.  The result
    lies within a factor grid_ratio^2 below the family maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .sampled import DomainError, GridFunction
from .young import (
    KIND_EXP,
    KIND_LINEAR,
    KIND_POWER,
    KIND_POWERLOG_LOG1P,
    KIND_POWERLOG_PLUS,
    YoungFunction,
)

__all__ = [
    "IntervalFamily",
    "FINE",
    "COARSE",
    "hl_maximal",
    "orlicz_maximal",
    "iterated_maximal",
    "fractional_orlicz_maximal",
    "sharp_maximal",
    "sharp_maximal_delta",
]


@dataclass(frozen=True)
class IntervalFamily:
    per_octave: int = 16
    stride_div: int = 16  # 0 means every start position

    def __post_init__(self):
        if self.per_octave < 1 or self.stride_div < 0:
            raise ValueError("per_octave must be >= 1 and stride_div >= 0")

    def lengths(self, N: int) -> np.ndarray:
        out = set(range(1, min(N, self.per_octave) + 1))
        n = float(self.per_octave)
        while n < N:
            n *= 1.0 + 1.0 / self.per_octave
            out.add(min(N, math.ceil(n)))
        out.add(N)
        return np.array(sorted(out), dtype=np.int64)

    def stride(self, n: int) -> int:
        return 1 if self.stride_div == 0 else max(1, n // self.stride_div)

    def strides(self, N: int) -> np.ndarray:
        return np.array([self.stride(int(n)) for n in self.lengths(N)], dtype=np.int64)

    @property
    def factor(self) -> float:
        """Bound on |I| / |J| for the smallest family interval I covering J."""
        grow = 1.0 + 1.0 / self.per_octave
        if self.stride_div == 0:
            return grow
        return grow / (1.0 - 1.0 / self.stride_div)

    def size(self, N: int) -> int:
        return int(sum((N - n) // d + 1 + ((N - n) % d != 0) for n, d in zip(self.lengths(N), self.strides(N))))


FINE = IntervalFamily(per_octave=128, stride_div=0)
COARSE = IntervalFamily(per_octave=16, stride_div=16)


# ---------------------------------------------------------------------------
# compiled kernels


@njit(cache=True)
def _starts(n, d, N):
    count = (N - n) // d + 1
    extra = 1 if (count - 1) * d != N - n else 0
    out = np.empty(count + extra, dtype=np.int64)
    for i in range(count):
        out[i] = i * d
    if extra:
        out[count] = N - n
    return out


@njit(cache=True)
def _cover_max(starts, vals, n, N, best, best_id, id0):
    """best[c] = max(best[c], max{vals[i] : starts[i] <= c < starts[i] + n}) via a monotone deque."""
    S = starts.size
    q = np.empty(S, dtype=np.int64)
    head = 0
    tail = 0
    ptr = 0
    for c in range(N):
        while ptr < S and starts[ptr] <= c:
            while tail > head and vals[q[tail - 1]] <= vals[ptr]:
                tail -= 1
            q[tail] = ptr
            tail += 1
            ptr += 1
        while tail > head and starts[q[head]] + n <= c:
            head += 1
        if tail > head:
            v = vals[q[head]]
            if v > best[c]:
                best[c] = v
                best_id[c] = id0 + q[head]


@njit(cache=True)
def _hl_family(P, lens, strides, N, h, alpha):
    best = np.full(N, -np.inf)
    best_id = np.zeros(N, dtype=np.int64)
    for j in range(lens.size):
        n = lens[j]
        st = _starts(n, strides[j], N)
        scale = (n * h) ** alpha / n
        vals = np.empty(st.size)
        for i in range(st.size):
            vals[i] = (P[st[i] + n] - P[st[i]]) * scale
        _cover_max(st, vals, n, N, best, best_id, 0)
    return best


@njit(cache=True)
def _phi_d(kind, p, tx, ty, t):
    """(phi(t), phi'(t)) for the dispatch codes of ``YoungFunction.numba_spec``."""
    if t <= 0.0:
        if kind == KIND_LINEAR:
            return 0.0, 1.0
        return 0.0, 0.0
    if kind == KIND_POWER:
        r, c = p[0], p[1]
        v = c * t**r
        return v, r * v / t
    if kind == KIND_POWERLOG_PLUS:
        r, b = p[0], p[1]
        if t <= 1.0:
            v = t**r
            return v, r * v / t
        lg = 1.0 + math.log(t)
        v = t**r * lg**b
        return v, v * (r / t + b / (t * lg))
    if kind == KIND_POWERLOG_LOG1P:
        r, b = p[0], p[1]
        lg = math.log1p(t)
        tr = t**r
        if b == 0.0:
            return tr, r * tr / t
        v = tr * lg**b
        return v, r * v / t + tr * b * lg ** (b - 1.0) / (1.0 + t)
    if kind == KIND_EXP:
        g, off = p[0], p[1]
        if off == 0.0 and t <= 1.0:
            return math.e * t, math.e
        tg = t**g
        if tg > 700.0:
            return np.inf, np.inf
        e = math.exp(tg)
        return (e - 1.0 if off == 1.0 else e), e * g * tg / t
    if kind == KIND_LINEAR:
        return t, 1.0
    # piecewise-linear table
    m = tx.size
    if t >= tx[m - 1]:
        return ty[m - 1] + p[0] * (t - tx[m - 1]), p[0]
    lo = 0
    hi = m - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tx[mid] <= t:
            lo = mid
        else:
            hi = mid
    slope = (ty[hi] - ty[lo]) / (tx[hi] - tx[lo])
    return ty[lo] + slope * (t - tx[lo]), slope


@njit(cache=True)
def _lux_cells(a, s, n, kind, p, tx, ty):
    """Luxemburg average of the cell values a[s:s+n] (normalised by n cells).

    Solves F(mu) = sum phi(mu a_c) - n = 0 for mu = 1/lam by Newton steps
    from the right, falling back to bisection when a step leaves the bracket.
    """
    vmax = 0.0
    for c in range(s, s + n):
        if a[c] > vmax:
            vmax = a[c]
    if vmax == 0.0:
        return 0.0

    def F(mu):
        tot = 0.0
        der = 0.0
        for c in range(s, s + n):
            if a[c] > 0.0:
                v, d = _phi_d(kind, p, tx, ty, mu * a[c])
                tot += v
                der += a[c] * d
        return tot - n, der

    hi = 1.0 / vmax
    f_hi, d_hi = F(hi)
    while f_hi < 0.0:
        hi *= 2.0
        f_hi, d_hi = F(hi)
    lo = 0.5 * hi
    f_lo, _ = F(lo)
    while f_lo >= 0.0:
        hi = lo
        f_hi, d_hi = F(hi)
        lo *= 0.5
        f_lo, _ = F(lo)
    for _ in range(300):
        if hi - lo <= 1e-15 * hi:
            break
        cand = -1.0
        if d_hi > 0.0 and np.isfinite(f_hi) and np.isfinite(d_hi):
            cand = hi - f_hi / d_hi
        if not (lo < cand < hi):
            cand = math.sqrt(lo * hi)
        fc, dc = F(cand)
        if fc >= 0.0:
            step = hi - cand
            hi = cand
            f_hi, d_hi = fc, dc
            if step <= 1e-15 * hi:
                break
        else:
            lo = cand
    return 1.0 / hi


@njit(cache=True)
def _orlicz_exact(a, lens, strides, N, h, alpha, kind, p, tx, ty):
    best = np.full(N, -np.inf)
    best_id = np.zeros(N, dtype=np.int64)
    for j in range(lens.size):
        n = lens[j]
        st = _starts(n, strides[j], N)
        scale = (n * h) ** alpha
        vals = np.empty(st.size)
        for i in range(st.size):
            vals[i] = _lux_cells(a, st[i], n, kind, p, tx, ty) * scale
        _cover_max(st, vals, n, N, best, best_id, 0)
    return best


@njit(cache=True)
def _screen(T, H, lam_log, lens, strides, N, h, alpha):
    """Best bracketed interval per cell.

    T[k] is the prefix sum of min(phi(|f|/lam_k), cap) and H[k] counts cells
    above the cap.  kappa(I) = max{k : avg_I phi(|f|/lam_k) > 1}; the score
    log-interpolates inside the bracket and adds alpha log|I|.
    """
    K = T.shape[0]
    best = np.full(N, -np.inf)
    best_id = np.full(N, -1, dtype=np.int64)
    id0 = 0
    for j in range(lens.size):
        n = lens[j]
        st = _starts(n, strides[j], N)
        vals = np.full(st.size, -np.inf)
        for i in range(st.size):
            s = st[i]
            e = s + n
            # avg > 1 at level k  <=>  huge cell present or sum > n
            lo = -1
            hi = K - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if H[mid, e] - H[mid, s] > 0 or T[mid, e] - T[mid, s] > n:
                    lo = mid
                else:
                    hi = mid
            if lo < 0:
                continue
            if H[lo, e] - H[lo, s] > 0:
                frac = 1.0
            else:
                a0 = (T[lo, e] - T[lo, s]) / n
                a1 = (T[lo + 1, e] - T[lo + 1, s]) / n
                if a1 <= 0.0:
                    frac = 1.0
                else:
                    l0 = math.log(a0)
                    l1 = math.log(a1)
                    frac = l0 / (l0 - l1) if l0 > l1 else 1.0
            vals[i] = lam_log[lo] + frac * (lam_log[lo + 1] - lam_log[lo]) + alpha * math.log(n * h)
        _cover_max(st, vals, n, N, best, best_id, id0)
        id0 += st.size
    return best_id


@njit(cache=True)
def _find(nxt, c):
    root = c
    while nxt[root] != root:
        root = nxt[root]
    while nxt[c] != root:
        t = nxt[c]
        nxt[c] = root
        c = t
    return root


@njit(cache=True)
def _fill_descending(order, starts, lengths, values, N):
    """out[c] = max value over the given intervals containing c.

    Intervals are visited in descending value order; a union-find "next
    unfilled cell" pointer makes the whole fill near-linear.
    """
    out = np.full(N, -np.inf)
    nxt = np.arange(N + 1)
    for idx in order:
        e = starts[idx] + lengths[idx]
        c = _find(nxt, starts[idx])
        while c < e:
            out[c] = values[idx]
            nxt[c] = c + 1
            c = _find(nxt, c + 1)
    return out


@njit(cache=True)
def _sharp_family(b, P, lens, strides, N):
    best = np.zeros(N)
    best_id = np.zeros(N, dtype=np.int64)
    for j in range(lens.size):
        n = lens[j]
        st = _starts(n, strides[j], N)
        vals = np.empty(st.size)
        for i in range(st.size):
            s = st[i]
            mean = (P[s + n] - P[s]) / n
            tot = 0.0
            for c in range(s, s + n):
                tot += abs(b[c] - mean)
            vals[i] = tot / n
        _cover_max(st, vals, n, N, best, best_id, 0)
    return best


# ---------------------------------------------------------------------------


def _prefix(values: np.ndarray) -> np.ndarray:
    P = np.empty(values.size + 1)
    P[0] = 0.0
    np.cumsum(values, out=P[1:])
    return P


def hl_maximal(f: GridFunction, family: IntervalFamily = FINE) -> GridFunction:
    """Uncentred Hardy-Littlewood maximal function of |f|."""
    return _hl(f, family, 0.0)


def _hl(f: GridFunction, family: IntervalFamily, alpha: float) -> GridFunction:
    N = f.N
    P = _prefix(np.abs(f.samples))
    out = _hl_family(P, family.lengths(N), family.strides(N), N, f.h, alpha)
    return f.with_samples(out)


def iterated_maximal(f: GridFunction, k: int, family: IntervalFamily = FINE) -> GridFunction:
    """M^k f by k-fold application of the Hardy-Littlewood maximal operator."""
    if k < 1:
        raise ValueError("k must be >= 1")
    g = f
    for _ in range(k):
        g = hl_maximal(g, family)
    return g


EXACT_BUDGET = 4e7


def orlicz_maximal(
    f: GridFunction,
    phi: YoungFunction,
    family: IntervalFamily = COARSE,
    method: str = "auto",
    grid_ratio: float = 1.02,
) -> GridFunction:
    """M_phi f(x) = sup over family intervals I containing x of ||f||_{phi, I}."""
    return _orlicz(f, phi, family, method, grid_ratio, 0.0)


def fractional_orlicz_maximal(
    f: GridFunction,
    phi: YoungFunction,
    alpha: float,
    family: IntervalFamily = COARSE,
    method: str = "auto",
    grid_ratio: float = 1.02,
) -> GridFunction:
    """sup over family intervals I containing x of |I|^alpha ||f||_{phi, I}, 0 < alpha < 1."""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return _orlicz(f, phi, family, method, grid_ratio, alpha)


def _exact_cost(N: int, family: IntervalFamily) -> float:
    lens, strides = family.lengths(N), family.strides(N)
    return float(sum(((N - n) // d + 1) * n for n, d in zip(lens, strides)))


def _orlicz(f, phi, family, method, grid_ratio, alpha):
    if method not in ("auto", "exact", "screen"):
        raise ValueError("method must be 'auto', 'exact' or 'screen'")
    N, h = f.N, f.h
    a = np.abs(np.asarray(f.samples, dtype=float))
    if not np.any(a > 0):
        return f.with_samples(np.zeros(N))
    if phi.degenerate:
        # ||f||_{Dbar, I} = sup_I |f|; the whole domain belongs to every family
        if alpha == 0:
            return f.with_samples(np.full(N, a.max()))
        return _sup_family(f, family, alpha)
    kind, p, tx, ty = phi.numba_spec()
    lens, strides = family.lengths(N), family.strides(N)
    if method == "auto":
        method = "exact" if _exact_cost(N, family) <= EXACT_BUDGET else "screen"
    if method == "exact":
        out = _orlicz_exact(a, lens, strides, N, h, alpha, kind, p, tx, ty)
        return f.with_samples(out)
    return f.with_samples(_orlicz_screen(a, phi, lens, strides, N, h, alpha, grid_ratio))


def _sup_family(f, family, alpha):
    N, h = f.N, f.h
    a = np.abs(np.asarray(f.samples, dtype=float))
    best = np.full(N, -np.inf)
    best_id = np.zeros(N, dtype=np.int64)
    for n, d in zip(family.lengths(N), family.strides(N)):
        st = _starts(int(n), int(d), N)
        vals = np.array([a[s : s + n].max() for s in st]) * (n * h) ** alpha
        _cover_max(st, vals, int(n), N, best, best_id, 0)
    return f.with_samples(best)


def _orlicz_screen(a, phi, lens, strides, N, h, alpha, grid_ratio):
    kind, p, tx, ty = phi.numba_spec()
    lam_hi = float(a.max() / phi.inverse(1.0))
    lam_lo = _lux_cells(a, 0, N, kind, p, tx, ty)
    if lam_lo <= 0:
        return np.zeros(N)
    K = int(np.clip(math.ceil(math.log(lam_hi / lam_lo) / math.log(grid_ratio)) + 1, 2, 128))
    lam = lam_lo * (lam_hi / lam_lo) ** (np.arange(K) / (K - 1))
    lam[0] = lam_lo * (1 - 1e-12)
    cap = 2.0 * N
    T = np.empty((K, N + 1))
    H = np.empty((K, N + 1), dtype=np.int32)
    T[:, 0] = 0.0
    H[:, 0] = 0
    for k in range(K):
        with np.errstate(over="ignore"):
            v = phi._eval(a / lam[k])
        huge = ~(v < cap)
        v = np.where(huge, 0.0, v)
        np.cumsum(v, out=T[k, 1:])
        np.cumsum(huge, out=H[k, 1:])
    best_id = _screen(T, H, np.log(lam), lens, strides, N, h, alpha)
    # map global ids back to (start, length)
    starts, lengths = [], []
    for n, d in zip(lens, strides):
        st = _starts(int(n), int(d), N)
        starts.append(st)
        lengths.append(np.full(st.size, n, dtype=np.int64))
    starts = np.concatenate(starts)
    lengths = np.concatenate(lengths)
    ids = np.unique(best_id[best_id >= 0])
    values = np.array([_lux_cells(a, int(starts[i]), int(lengths[i]), kind, p, tx, ty) for i in ids])
    values = values * (lengths[ids] * h) ** alpha
    order = np.argsort(-values, kind="stable")
    out = _fill_descending(order, starts[ids], lengths[ids], values, N)
    return np.where(np.isfinite(out), out, 0.0)


def sharp_maximal(f: GridFunction, family: IntervalFamily = COARSE) -> GridFunction:
    """M# f(x) = sup over family intervals I containing x of (1/|I|) int_I |f - f_I|."""
    b = np.asarray(f.samples, dtype=float)
    P = _prefix(b)
    N = f.N
    return f.with_samples(_sharp_family(b, P, family.lengths(N), family.strides(N), N))


def sharp_maximal_delta(f: GridFunction, delta: float, family: IntervalFamily = COARSE) -> GridFunction:
    """M#_delta f = (M#(|f|^delta))^(1/delta)."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    g = f.with_samples(np.abs(f.samples) ** delta)
    return f.with_samples(sharp_maximal(g, family).samples ** (1.0 / delta))
