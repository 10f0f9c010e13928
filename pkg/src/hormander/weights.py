"""Muckenhoupt constants, BMO norms and John-Nirenberg checks on sampled data.

Constants are suprema over an ``IntervalFamily``; membership is never a bare
boolean but a (constant, growth under refinement) pair, since a grid cannot
certify membership but trends can falsify it.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .maximal import COARSE, FINE, IntervalFamily, _starts, hl_maximal, sharp_maximal
from .sampled import DomainError, GridFunction, Interval
from .young import ExpPower, luxemburg_average

__all__ = [
    "ConstantReport",
    "ap_constant",
    "a1_constant",
    "apq_constant",
    "apq_direct",
    "bmo_norm",
    "jn_exp_check",
    "jn_telescope_check",
    "refinement_study",
    "ainf_gate",
    "check_weight",
]


def check_weight(w: GridFunction) -> GridFunction:
    if not np.all(w.samples > 0):
        raise DomainError("weights must be strictly positive")
    return w


@dataclass
class ConstantReport:
    constant: float
    argmax_interval: tuple[float, float] | None = None
    refinement_ratios: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@njit(cache=True)
def _product_max(P1, P2, e1, e2, lens, strides, N):
    """max over family intervals of avg(u)^e1 * avg(v)^e2, with its argmax."""
    best = -1.0
    bs = 0
    bn = 1
    for j in range(lens.size):
        n = lens[j]
        st = _starts(n, strides[j], N)
        for i in range(st.size):
            s = st[i]
            val = ((P1[s + n] - P1[s]) / n) ** e1 * ((P2[s + n] - P2[s]) / n) ** e2
            if val > best:
                best = val
                bs = s
                bn = n
    return best, bs, bn


def _prefix(v):
    P = np.empty(v.size + 1)
    P[0] = 0.0
    np.cumsum(v, out=P[1:])
    return P


def _report(f: GridFunction, best: float, s: int, n: int) -> ConstantReport:
    a = -f.L + s * f.h
    return ConstantReport(float(best), (float(a), float(a + n * f.h)))


def ap_constant(w: GridFunction, p: float, family: IntervalFamily = FINE) -> ConstantReport:
    """sup_I (avg_I w) (avg_I w^(-1/(p-1)))^(p-1) over the family."""
    if not p > 1:
        raise DomainError(f"A_p needs p > 1, got {p}")
    check_weight(w)
    u = np.asarray(w.samples, dtype=float)
    v = u ** (-1.0 / (p - 1.0))
    N = w.N
    best, s, n = _product_max(_prefix(u), _prefix(v), 1.0, p - 1.0, family.lengths(N), family.strides(N), N)
    return _report(w, best, s, n)


def a1_constant(w: GridFunction, family: IntervalFamily = FINE) -> ConstantReport:
    """sup_x Mw(x) / w(x)."""
    check_weight(w)
    ratio = hl_maximal(w, family).samples / w.samples
    c = int(np.argmax(ratio))
    x = float(w.x[c])
    return ConstantReport(float(ratio[c]), (x - w.h / 2, x + w.h / 2))


def _dual(p: float) -> float:
    return math.inf if p == 1 else p / (p - 1.0)


def apq_constant(w: GridFunction, p: float, q: float, family: IntervalFamily = FINE) -> ConstantReport:
    """A_{1+q/p'} constant of w^q (w in A_{p,q} iff w^q in A_{1+q/p'})."""
    if not (1 <= p < math.inf and 1 <= q < math.inf):
        raise DomainError("A_{p,q} needs 1 <= p, q < inf")
    check_weight(w)
    r = 1.0 + q / _dual(p)
    wq = w.with_samples(w.samples**q)
    if r == 1.0:
        return a1_constant(wq, family)
    return ap_constant(wq, r, family)


def apq_direct(w: GridFunction, p: float, q: float, family: IntervalFamily = FINE) -> float:
    """sup_I (avg_I w^q)^(1/q) (avg_I w^(-p'))^(1/p'), the classical A_{p,q} product (p > 1).

    Independent of ``apq_constant``: the two agree through
    apq_constant = apq_direct ** q.
    """
    if not (1 < p < math.inf and 1 <= q < math.inf):
        raise DomainError("the direct product needs 1 < p < inf and 1 <= q < inf")
    check_weight(w)
    pp = _dual(p)
    u = np.asarray(w.samples, dtype=float)
    Pq = np.concatenate([[0.0], np.cumsum(u**q)])
    Pd = np.concatenate([[0.0], np.cumsum(u ** (-pp))])
    best = 0.0
    N = w.N
    for n, d in zip(family.lengths(N), family.strides(N)):
        st = _starts(int(n), int(d), N)
        avq = (Pq[st + n] - Pq[st]) / n
        avd = (Pd[st + n] - Pd[st]) / n
        best = max(best, float(np.max(avq ** (1.0 / q) * avd ** (1.0 / pp))))
    return best


def bmo_norm(b: GridFunction, family: IntervalFamily = COARSE) -> ConstantReport:
    """sup over the grid of the sharp maximal function."""
    m = sharp_maximal(b, family).samples
    c = int(np.argmax(m))
    x = float(b.x[c])
    return ConstantReport(float(m[c]), (x - b.h / 2, x + b.h / 2))


# ---------------------------------------------------------------------------


@dataclass
class JNReport:
    k: int
    q: float
    lq: float
    orlicz: float
    exp_power: float
    bmo: float
    constant: float
    chain_holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def jn_exp_check(b: GridFunction, B: Interval, k: int, q: float | None = None, bmo: float | None = None) -> JNReport:
    """||(b - b_B)^k||_{L^q,B} <= ||(b - b_B)^k||_{A,B} = ||b - b_B||_{exp L,B}^k <= C ||b||_BMO^k.

    A(t) = exp(t^(1/k)) - 1 and exp L uses exp(t) - 1, which makes the middle
    equality exact.  q defaults to 2/k: e^s - 1 >= s^(kq) pointwise then, so
    the first inequality holds with no constant.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    q = 2.0 / k if q is None else float(q)
    if not 0 < q * k <= 2:
        raise ValueError("the exact first link needs 0 < k q <= 2")
    mean = b.average(B)
    g = (b - mean).abs()
    gk = g.with_samples(g.samples**k)
    lq = (gk.with_samples(gk.samples**q).average(B)) ** (1.0 / q)
    orlicz = luxemburg_average(gk, B, ExpPower(1.0 / k, 1))
    expn = luxemburg_average(g, B, ExpPower(1.0, 1)) ** k
    if bmo is None:
        bmo = bmo_norm(b).constant
    const = expn / bmo**k if bmo > 0 else 0.0
    holds = lq <= orlicz * (1 + 1e-12) and math.isclose(orlicz, expn, rel_tol=1e-9, abs_tol=1e-300)
    return JNReport(k, q, float(lq), float(orlicz), float(expn), float(bmo), float(const), bool(holds))


@dataclass
class TelescopeReport:
    j: list[int]
    lhs: list[float]
    chain_sum: list[float]
    oscillation_bound: list[float]
    rhs: list[float]
    slack: list[float]
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)


def jn_telescope_check(b: GridFunction, B: Interval, j_max: int | None = None, bmo: float | None = None) -> TelescopeReport:
    """|b_B - b_{2^j B}| <= sum |b_{2^(m-1)B} - b_{2^m B}| <= 2 sum ||b - b_{2^m B}||_{L^1, 2^m B} <= 2 j ||b||_BMO."""
    if bmo is None:
        bmo = bmo_norm(b).constant
    js, lhs, chain, osc, rhs = [], [], [], [], []
    mean0 = b.average(B)
    prev = mean0
    run_chain = 0.0
    run_osc = 0.0
    j = 1
    while j_max is None or j <= j_max:
        Bj = B.dilate(2.0**j)
        if Bj.left < -b.L or Bj.right > b.L:
            if j_max is not None:
                raise DomainError(f"2^{j} B leaves the grid domain")
            break
        mj = b.average(Bj)
        run_chain += abs(prev - mj)
        run_osc += (b - mj).abs().average(Bj)
        prev = mj
        js.append(j)
        lhs.append(abs(mean0 - mj))
        chain.append(run_chain)
        osc.append(2.0 * run_osc)
        rhs.append(2.0 * j * bmo)
        j += 1
    tol = 1e-12
    holds = all(
        a <= c * (1 + tol) + 1e-300 and c <= o * (1 + tol) + 1e-300 and o <= r * (1 + tol) + 1e-300
        for a, c, o, r in zip(lhs, chain, osc, rhs)
    )
    slack = [r - a for a, r in zip(lhs, rhs)]
    return TelescopeReport(js, lhs, chain, osc, rhs, slack, bool(holds))


# ---------------------------------------------------------------------------


def refinement_study(estimator, make, Ns) -> ConstantReport:
    """Run ``estimator(make(N))`` for each N; report the last constant and successive ratios."""
    reports = [estimator(make(N)) for N in Ns]
    consts = [r.constant if isinstance(r, ConstantReport) else float(r) for r in reports]
    ratios = [b / a for a, b in zip(consts[:-1], consts[1:])]
    last = reports[-1]
    arg = last.argmax_interval if isinstance(last, ConstantReport) else None
    return ConstantReport(consts[-1], arg, ratios)


def ainf_gate(make, Ns=(2**12, 2**13, 2**14), ps=(2.0, 4.0, 8.0), tol: float = 0.05) -> dict:
    """A_infinity surrogate: ap_constant stabilises under refinement for some p in ``ps``."""
    studies = {}
    passed = False
    for p in ps:
        rep = refinement_study(lambda w: ap_constant(w, p), make, Ns)
        studies[str(p)] = rep.to_dict()
        if all(abs(r - 1.0) <= tol for r in rep.refinement_ratios):
            passed = True
            break
    return {"passed": passed, "studies": studies}
