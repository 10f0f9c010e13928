"""The dyadic square-operator kernel and its Hormander-type sums.

K_l(z) = 2^-(l+1) chi(-2^l, 2^l)(z) - 2^-l chi(-2^(l-1), 2^(l-1))(z), and the
fractional variant K_{alpha,l}(z) = |z|^alpha K_l(z).

For alpha = 0 every restriction of a kernel difference to an annulus is a step
function with breakpoints among the dyadic points and the annulus ends, so its
Luxemburg average is computed exactly from segment lengths.  For alpha > 0 the
segments are integrated with Gauss-Legendre nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .sampled import DomainError
from .seqnorm import Lp, SeqNorm, from_dict as seqnorm_from_dict
from .young import YoungFunction, from_dict as young_from_dict, luxemburg

__all__ = [
    "DyadicKernel",
    "HormanderQuery",
    "HormanderResult",
    "ClosedForm",
    "diff_table",
    "dagger_sum",
    "plain_sum",
    "prop3_closed_form",
    "s_alpha_check",
    "covering_kernel",
]

GAUSS_NODES = 24
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_NODES)


@dataclass(frozen=True)
class DyadicKernel:
    l_min: int = -4
    l_max: int = 14
    alpha: float = 0.0

    def __post_init__(self):
        if self.l_min > self.l_max:
            raise ValueError("empty level window")
        if not 0.0 <= self.alpha < 1.0:
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")

    @property
    def levels(self) -> range:
        return range(self.l_min, self.l_max + 1)

    def eval_level(self, l: int, z):
        if not self.l_min <= l <= self.l_max:
            raise DomainError(f"level {l} outside window [{self.l_min}, {self.l_max}]")
        return _level(l, z, self.alpha)

    def to_dict(self) -> dict:
        return {"l_min": self.l_min, "l_max": self.l_max, "alpha": self.alpha}


def covering_kernel(R: float, m_max: int, alpha: float = 0.0) -> DyadicKernel:
    """Window holding every level whose differences reach annuli m = 1..m_max at scale R."""
    i = math.floor(math.log2(R))
    return DyadicKernel(i - 1, i + m_max + 2, alpha)


def _level(l: int, z, alpha: float = 0.0):
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    out = np.where(a < 2.0**l, 2.0 ** -(l + 1), 0.0) - np.where(a < 2.0 ** (l - 1), 2.0**-l, 0.0)
    if alpha:
        out = out * a**alpha
    return out if out.ndim else float(out)


def diff_table(i: int, j: int, x: float, x0: float, l: int, y: float) -> float:
    """|K_l(y - x) - K_l(y - x0)| from the closed-form table of difference sets.

    Valid for i < j, |x - x0| < 2^i and y in the j-annulus about x0.  Set
    membership is tested on u = y - x and v = y - x0 so that it agrees with
    direct evaluation bit for bit.
    """
    if not i < j:
        raise ValueError("need i < j")
    if not abs(x - x0) < 2.0**i:
        raise ValueError("need |x - x0| < 2^i")
    v = y - x0
    if not 2.0**j < abs(v) < 2.0 ** (j + 1):
        raise ValueError("y must lie in the j-annulus about x0")
    u = y - x
    # (x - 2^j, x0 - 2^j) u (x0 + 2^j, x + 2^j)
    inner = (u > -(2.0**j) and v < -(2.0**j)) or (v > 2.0**j and u < 2.0**j)
    # (x0 - 2^(j+1), x - 2^(j+1)) u (x + 2^(j+1), x0 + 2^(j+1))
    # K_l vanishes on its support ends, so the x side is closed
    outer = (v > -(2.0 ** (j + 1)) and u <= -(2.0 ** (j + 1))) or (u >= 2.0 ** (j + 1) and v < 2.0 ** (j + 1))
    if l == j:
        return 2.0 ** -(j + 1) if inner else 0.0
    if l == j + 1:
        return (2.0 ** -(j + 2) if outer else 0.0) + (2.0 ** -(j + 1) if inner else 0.0)
    if l == j + 2:
        return 2.0 ** -(j + 2) if outer else 0.0
    return 0.0


# ---------------------------------------------------------------------------


FLAVORS = ("plain", "dagger", "fractional-dagger")


@dataclass(frozen=True)
class HormanderQuery:
    phi: YoungFunction
    k: int = 0
    X: SeqNorm = field(default_factory=lambda: Lp(2))
    x: float = 0.2
    R: float = 1.0
    c_A: float = 4.0
    m_max: int = 80
    flavor: str = "dagger"

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"flavor must be one of {FLAVORS}")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.m_max < 1:
            raise ValueError("m_max must be >= 1")
        if not self.c_A > 1:
            raise ValueError("c_A must exceed 1")
        if not self.R > self.c_A * abs(self.x):
            raise DomainError(f"gate violated: R = {self.R} <= c_A |x| = {self.c_A * abs(self.x)}")

    def replace(self, **changes) -> "HormanderQuery":
        d = dict(phi=self.phi, k=self.k, X=self.X, x=self.x, R=self.R, c_A=self.c_A,
                 m_max=self.m_max, flavor=self.flavor)
        d.update(changes)
        return HormanderQuery(**d)

    def to_dict(self) -> dict:
        return {
            "flavor": self.flavor,
            "phi": self.phi.to_dict(),
            "k": self.k,
            "X": self.X.to_dict(),
            "x": self.x,
            "R": self.R,
            "c_A": self.c_A,
            "m_max": self.m_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HormanderQuery":
        return cls(
            phi=young_from_dict(d["phi"]),
            k=int(d.get("k", 0)),
            X=seqnorm_from_dict(d.get("X", {"variant": "lp", "p": 2})),
            x=float(d.get("x", 0.2)),
            R=float(d.get("R", 1.0)),
            c_A=float(d.get("c_A", 4.0)),
            m_max=int(d.get("m_max", 80)),
            flavor=d.get("flavor", "dagger"),
        )


@dataclass
class HormanderResult:
    value: float
    per_level: list[float]
    levels: list[int]
    query: dict

    def to_dict(self) -> dict:
        return {"value": self.value, "per_level": self.per_level, "levels": self.levels, "query": self.query}


def _coef(l: int, z: Fraction) -> float:
    """K_l(z) for exact rational z (the box heights are powers of two)."""
    a = abs(z)
    out = 0.0
    if a < Fraction(2) ** l:
        out += 2.0 ** -(l + 1)
    if a < Fraction(2) ** (l - 1):
        out -= 2.0**-l
    return out


def _breakpoints(levels, x: Fraction) -> list[Fraction]:
    pts = []
    for l in levels:
        for e in (Fraction(2) ** l, Fraction(2) ** (l - 1)):
            pts += [e, -e, x + e, x - e]
    return pts


def _diff_samples(levels, x: float, R: float, m: int, alpha: float):
    """Samples of K_l(y - x) - K_l(y), one row per level, on the annulus 2^m R < |y| <= 2^(m+1) R.

    Breakpoints are handled in exact rational arithmetic: at |y| ~ 2^60 the
    jump sets have width |x| and would vanish in floating point.
    Returns (rows[levels, samples], weights).
    """
    xf, Rf = Fraction(x), Fraction(R)
    lo, hi = Fraction(2) ** m * Rf, Fraction(2) ** (m + 1) * Rf
    pts = _breakpoints(levels, xf)
    rows, weights = [], []
    for a, b in ((-hi, -lo), (lo, hi)):
        edges = [a, *sorted({p for p in pts if a < p < b}), b]
        for s, t in zip(edges[:-1], edges[1:]):
            mid = (s + t) / 2
            cu = np.array([_coef(l, mid - xf) for l in levels])
            cv = np.array([_coef(l, mid) for l in levels])
            length = float(t - s)
            if not alpha:
                rows.append((cu - cv)[:, None])
                weights.append(np.array([length]))
                continue
            off = 0.5 * length * (1.0 + _GL_X)
            u = np.abs(float(s - xf) + off) ** alpha
            v = np.abs(float(s) + off) ** alpha
            rows.append(cu[:, None] * u[None, :] - cv[:, None] * v[None, :])
            weights.append(0.5 * length * _GL_W)
    return np.concatenate(rows, axis=1), np.concatenate(weights)


def _annulus_range(l: int, x: float, R: float, m_max: int) -> range:
    # support of K_l(. - x) - K_l(.) lies in 2^(l-1) - |x| <= |y| <= 2^l + |x|;
    # padded by one annulus each side since the float logs may round across
    lo = 2.0 ** (l - 1) - abs(x)
    hi = 2.0**l + abs(x)
    m_lo = 1 if lo <= 0 else max(1, math.floor(math.log2(lo / R)) - 1)
    m_hi = min(m_max, math.floor(math.log2(hi / R)) + 1)
    return range(m_lo, m_hi + 1)


def _weight(m: int, k: int) -> float:
    # 0^0 = 1 only for k = 0
    if m == 0:
        return 1.0 if k == 0 else 0.0
    return float(m) ** k


def dagger_levels(kernel: DyadicKernel, q: HormanderQuery) -> tuple[list[int], np.ndarray]:
    """Per-level sums s_l = sum_m (2^m R)^(1-alpha) m^k ||(K_l(.-x) - K_l) chi_m||_{phi, B(0, 2^(m+1) R)}."""
    alpha = kernel.alpha
    levels = list(kernel.levels)
    s = np.zeros(len(levels))
    if q.x == 0:
        return levels, s
    for n, l in enumerate(levels):
        total = 0.0
        for m in _annulus_range(l, q.x, q.R, q.m_max):
            rows, wts = _diff_samples([l], q.x, q.R, m, alpha)
            norm = luxemburg(rows[0], wts, q.phi, measure=2.0 ** (m + 2) * q.R)
            if norm:
                total += (2.0**m * q.R) ** (1.0 - alpha) * _weight(m, q.k) * norm
        s[n] = total
    return levels, s


def dagger_sum(kernel: DyadicKernel, q: HormanderQuery) -> HormanderResult:
    """X-norm over levels of the per-level annulus sums (norm outside the average)."""
    if q.flavor == "plain":
        raise ValueError("dagger_sum needs flavor 'dagger' or 'fractional-dagger'")
    if q.flavor == "fractional-dagger" and kernel.alpha == 0:
        raise ValueError("fractional-dagger needs a kernel with alpha > 0")
    levels, s = dagger_levels(kernel, q)
    value = float(q.X.norm_array(s, axis=0, indices=np.array(levels))) if len(s) else 0.0
    return HormanderResult(value, s.tolist(), levels, q.to_dict())


def plain_sum(kernel: DyadicKernel, q: HormanderQuery) -> HormanderResult:
    """sum_m (2^m R)^(1-alpha) m^k || ||K(.-x) - K(.)||_X ||_{phi, B(0, 2^(m+1) R)} (norm inside)."""
    if q.flavor != "plain":
        raise ValueError("plain_sum needs flavor 'plain'")
    alpha = kernel.alpha
    levels = np.array(list(kernel.levels))
    terms = np.zeros(q.m_max)
    if q.x != 0:
        for m in range(1, q.m_max + 1):
            lo, hi = 2.0**m * q.R, 2.0 ** (m + 1) * q.R
            active = [int(l) for l in levels if m in _annulus_range(int(l), q.x, q.R, q.m_max)]
            if not active:
                continue
            act = np.array(active)
            rows, wts = _diff_samples(active, q.x, q.R, m, alpha)
            vals = q.X.norm_array(rows, axis=0, indices=act)
            norm = luxemburg(vals, wts, q.phi, measure=2.0 ** (m + 2) * q.R)
            terms[m - 1] = (lo) ** (1.0 - alpha) * _weight(m, q.k) * norm
    return HormanderResult(float(terms.sum()), terms.tolist(), list(range(1, q.m_max + 1)), q.to_dict())


# ---------------------------------------------------------------------------


@dataclass
class ClosedForm:
    value: float
    terms: list[float]
    stabilization: dict
    stabilized: bool


def prop3_closed_form(phi: YoungFunction, k: int, X: SeqNorm, m_max: int = 80, tol: float = 1e-6) -> ClosedForm:
    """X-norm of {m^k / phi^{-1}(8 * 2^m)} over m = 1..m_max with stabilisation diagnostics.

    The diagnostics record the value at m_max/4, m_max/2 and m_max; the
    sequence is called stabilised when the last doubling moves it by < tol
    (relative).
    """
    if m_max < 2:
        raise ValueError("m_max must be >= 2")

    def value(M):
        m = np.arange(1, M + 1)
        terms = np.array([_weight(int(j), k) for j in m]) / phi.inverse(8.0 * 2.0**m)
        return float(X.norm_array(terms, axis=0, indices=m)), terms

    v, terms = value(m_max)
    checkpoints = sorted({max(1, m_max // 4), max(1, m_max // 2), m_max})
    stab = {str(M): value(M)[0] for M in checkpoints}
    half = stab[str(max(1, m_max // 2))]
    stabilized = abs(v - half) <= tol * max(abs(v), 1e-300)
    return ClosedForm(v, terms.tolist(), stab, stabilized)


def _level_samples(l: int, s: float, alpha: float):
    """Samples of K_{alpha,l} on s < |z| <= 2s (exact steps when alpha = 0)."""
    vals, wts = [], []
    for a, b in ((-2 * s, -s), (s, 2 * s)):
        inner = sorted(p for p in (2.0**l, -(2.0**l), 2.0 ** (l - 1), -(2.0 ** (l - 1))) if a < p < b)
        edges = np.array([a, *inner, b])
        half = 0.5 * np.diff(edges)
        mids = 0.5 * (edges[:-1] + edges[1:])
        base = _level(l, mids)
        if not alpha:
            vals.append(base)
            wts.append(2 * half)
            continue
        nodes = mids[:, None] + half[:, None] * _GL_X[None, :]
        vals.append((base[:, None] * np.abs(nodes) ** alpha).ravel())
        wts.append((half[:, None] * _GL_W[None, :]).ravel())
    return np.concatenate(vals), np.concatenate(wts)


@dataclass
class SAlphaReport:
    s_values: list[float]
    ratios: list[float]
    constant: float
    band: float


def s_alpha_check(kernel: DyadicKernel, phi: YoungFunction, X: SeqNorm, s_values) -> SAlphaReport:
    """sup_s of ||{||K_{alpha,l}||_{phi, |z| ~ s}}_l||_X / s^(alpha - 1).

    The annulus |z| ~ s is s < |z| <= 2s with its own measure as normaliser.
    Levels with 2^l <= s vanish on it.
    """
    alpha = kernel.alpha
    levels = np.array(list(kernel.levels))
    ratios = []
    for s in s_values:
        per_level = np.zeros(len(levels))
        for n, l in enumerate(levels):
            if 2.0**l <= s:
                continue
            vals, wts = _level_samples(int(l), s, alpha)
            per_level[n] = luxemburg(vals, wts, phi, measure=2.0 * s)
        norm = float(X.norm_array(per_level, axis=0, indices=levels))
        ratios.append(norm / s ** (alpha - 1.0))
    r = np.array(ratios)
    live = r[r > 0]
    band = float(live.max() / live.min()) if live.size else 1.0
    return SAlphaReport(list(map(float, s_values)), r.tolist(), float(r.max()), band)
