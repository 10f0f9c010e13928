"""Acceptance criteria 1-15 at their stated tolerances and full desk size.

Each criterion records one pass/fail line, printed when the module finishes.
Criteria that are out of reach (5, 6 and the fractional drift of 15) are
checked exactly as stated and marked as strict expected failures.
"""

import functools
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from hormander.cli import default_config_path
from hormander.harness import ExperimentConfig, RegressionStore, run_suite
from hormander.kernel import (
    DyadicKernel,
    HormanderQuery,
    covering_kernel,
    dagger_sum,
    diff_table,
    prop3_closed_form,
)
from hormander.maximal import COARSE, hl_maximal, orlicz_maximal
from hormander.sampled import GridFunction, Interval, generate
from hormander.seqnorm import (
    CounterexampleQuadratic,
    Lp,
    OrliczSeq,
    SparseSeq,
    check_monotone,
    harmonic_norm,
    orlicz_lambda0,
)
from hormander.vvop import OperatorSpec, apply, apply_commutator, commutator_recursive
from hormander.weights import (
    ap_constant,
    bmo_norm,
    jn_exp_check,
    jn_telescope_check,
    refinement_study,
)
from hormander.young import (
    Custom,
    ExpPower,
    Linear,
    Power,
    PowerLog,
    ScaledPower,
    luxemburg,
    luxemburg_average,
)

pytestmark = pytest.mark.acceptance

RESULTS = {}


def record(n, ok, detail):
    RESULTS.setdefault(n, []).append((bool(ok), detail))
    return ok


@pytest.fixture(scope="module", autouse=True)
def report_lines(request):
    yield
    tr = request.config.pluginmanager.get_plugin("terminalreporter")
    write = tr.write_line if tr else print
    write("")
    for n in sorted(RESULTS):
        parts = RESULTS[n]
        ok = all(p[0] for p in parts)
        write(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  " + "; ".join(p[1] for p in parts))


@functools.cache
def suite(name):
    cfg = ExperimentConfig.load(default_config_path(name))
    t = time.perf_counter()
    rep = run_suite(cfg, RegressionStore())
    return rep, time.perf_counter() - t


ALL_PHI = [
    Power(1.5),
    Power(2),
    Power(3),
    ScaledPower(0.3, 2.5),
    PowerLog(1, 1),
    PowerLog(1, 2),
    PowerLog(2, 1, "log1p"),
    ExpPower(1.0, 1),
    ExpPower(0.5, 1),
    ExpPower(1.0 / 3.0, 1),
    ExpPower(1.0, 0),
    Linear(),
    Custom([0.0, 1.0, 2.0], [0.0, 0.5, 2.0]),
]


def test_c01_luxemburg_power_closed_form():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for r in (1, 1.5, 2, 3):
        for _ in range(100):
            f = GridFunction(8.0, rng.normal(size=256) * np.exp(rng.normal()))
            a, b = np.sort(rng.uniform(-8, 8, size=2))
            I = Interval.from_endpoints(a, b)
            vals, w = f.cell_weights(I)
            want = (np.sum(w * np.abs(vals) ** r) / I.length) ** (1 / r)
            worst = max(worst, abs(luxemburg_average(f, I, Power(r)) - want) / want)
    dt = time.perf_counter() - t0
    ok = record(1, worst <= 1e-8 and dt < 5, f"max rel err {worst:.1e}, {dt:.2f}s")
    assert ok


def test_c02_indicator_identity():
    rng = np.random.default_rng(2)
    worst = 0.0
    brackets = True
    for phi in ALL_PHI:
        for _ in range(1000):
            c = float(np.exp(rng.uniform(-4, 4)))
            I_len = float(rng.uniform(0.1, 100))
            E = float(rng.uniform(1e-3, 1.0)) * I_len
            got = luxemburg([c, 0.0], [E, I_len - E], phi, measure=I_len)
            want = c / float(phi.inverse(I_len / E))
            worst = max(worst, abs(got - want) / want)
            # second route through phi itself: the modular crosses 1 at got
            brackets &= float(phi(c / got)) * E / I_len <= 1 + 1e-9
            brackets &= float(phi(c / (got * (1 - 1e-9)))) * E / I_len > 1
    ok = record(2, worst <= 1e-10 and brackets,
                f"{len(ALL_PHI)} phi x 1000 configs, max rel err {worst:.1e}, modular brackets {brackets}")
    assert ok


def test_c03_difference_table():
    rng = np.random.default_rng(3)
    K = DyadicKernel(-40, 40)
    t0 = time.perf_counter()
    n = bad = 0
    while n < 10_000:
        i = int(rng.integers(-6, 6))
        j = i + int(rng.integers(1, 6))
        x0 = float(rng.uniform(-8, 8))
        x = x0 + float(rng.uniform(-1, 1)) * 2.0**i * 0.999
        r = float(rng.uniform(2.0**j, 2.0 ** (j + 1)))
        y = x0 + (r if rng.random() < 0.5 else -r)
        if rng.random() < 0.3:
            # land on a breakpoint of the x side
            e = float(rng.choice([2.0**j, 2.0 ** (j + 1)])) * (1 if y > x0 else -1)
            y = x + e
            if not 2.0**j < abs(y - x0) < 2.0 ** (j + 1):
                continue
        n += 1
        for l in range(j - 2, j + 4):
            direct = abs(K.eval_level(l, y - x) - K.eval_level(l, y - x0))
            bad += diff_table(i, j, x, x0, l, y) != direct
    dt = time.perf_counter() - t0
    ok = record(3, bad == 0 and dt < 5, f"{n} configs x 6 levels, {bad} mismatches, {dt:.2f}s")
    assert ok


def test_c04_prop3_sandwich():
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    details = []
    ok = True
    for X, xl in ((Lp(2), "l2"), (OrliczSeq(PowerLog(2, 1, "log1p")), "orlicz")):
        for k in (0, 1, 2):
            phi = ExpPower(1.0 / (1 + k), 1)
            cf = prop3_closed_form(phi, k, X, m_max=80).value
            best = 0.0
            for _ in range(64):
                i = int(rng.integers(-4, 5))
                R = 2.0**i
                x = float(rng.uniform(0.02, 0.99)) * R / 4 * rng.choice([-1, 1])
                q = HormanderQuery(phi, k, X, x, R, m_max=80)
                best = max(best, dagger_sum(covering_kernel(R, 80), q).value)
            ok &= 0.5 * cf <= best <= 2 * cf
            details.append(f"{xl} k={k}: {best / cf:.3f}")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    record(4, ok, "sup/closed form " + ", ".join(details) + f", {dt:.1f}s")
    assert ok


@pytest.mark.xfail(strict=True, reason="dagger tail decays like C/m_max; increments ~1e-3 past 60")
def test_c05_dagger_convergence():
    rep, _ = suite("gap_probe")
    b = rep.summary["dagger_bound"]
    c = rep.summary["dagger_cauchy"]
    bound_ok = record(5, rep.gates["dagger_bound"],
                      "bound " + ", ".join(f"k={k}: {b[k]['value']:.3f} <= {b[k]['bound']:.2f}" for k in sorted(b)))
    cauchy_ok = record(5, rep.gates["dagger_cauchy"],
                       "Cauchy increments past 60 " + ", ".join(f"k={k}: {c[k]:.1e}" for k in sorted(c)) + " (need < 1e-6)")
    assert bound_ok and cauchy_ok


@pytest.mark.xfail(strict=True, reason="k=0 plain growth 1.47 < 1.5 and dagger window change ~12%")
def test_c06_gap():
    rep, _ = suite("gap_probe")
    s = rep.summary
    g0, d0 = s["plain_growth"]["0"], s["dagger_change"]["0"]
    locked = rep.regression.get("gap_probe/plain_growth/k=0", {}).get("ok")
    ok = record(6, g0 >= 1.5 and d0 < 0.01 and locked is not False,
                f"plain growth {g0:.3f} (need >= 1.5), dagger change {100 * d0:.1f}% (need < 1%), locked {locked}")
    assert ok


def test_c07_harmonic():
    l2 = harmonic_norm(Lp(2), "Z*")
    lo, hi = l2.tail_bound
    enclosed = l2.partial**2 + lo <= math.pi**2 / 3 <= l2.partial**2 + hi
    ok = abs(l2.corrected - math.pi / math.sqrt(3)) <= 1e-4 and enclosed
    l1 = harmonic_norm(Lp(1), "Z*")
    ok &= not l1.stabilized
    orl = []
    for r, beta in ((2, 1), (3, 2)):
        rep = harmonic_norm(OrliczSeq(PowerLog(r, beta, "log1p")), "Z*")
        lam0 = orlicz_lambda0(r, beta)
        ok &= rep.partial <= lam0
        orl.append(f"({r},{beta}): {rep.partial:.4f} <= {lam0:.4f}")
    record(7, ok, f"l2 err {abs(l2.corrected - math.pi / math.sqrt(3)):.1e}, l1 divergent {not l1.stabilized}, "
           + ", ".join(orl))
    assert ok


def test_c08_monotone_counterexample():
    X = CounterexampleQuadratic()
    a, b = SparseSeq({1: 1.0, 2: 3.0}), SparseSeq({1: 2.0, 2: 3.0})
    ok = X.norm(a) == math.sqrt(13) and X.norm(b) == math.sqrt(10)
    rep = check_monotone(X, trials=100)
    ok &= not rep.passed and rep.witness is not None
    lp = [check_monotone(Lp(p), trials=10_000).passed for p in (1, 2, 3, math.inf)]
    ok &= all(lp)
    record(8, ok, f"sqrt13 > sqrt10 exact, witness {rep.witness is not None}, l^p 10^4 trials {all(lp)}")
    assert ok


def test_c09_maximal():
    f = generate("step", {"a": 0.0, "b": 1.0}, 256.0, 2**14)
    M = hl_maximal(f).samples
    sel = (f.x >= 2) & (f.x <= 100)
    err1 = float(np.max(np.abs(M[sel] * f.x[sel] - 1)))
    rng = np.random.default_rng(9)
    g = GridFunction(16.0, np.where(np.abs(np.linspace(-16, 16, 1024)) < 6, rng.normal(size=1024), 0.0))
    err2 = 0.0
    for r in (1.5, 2, 3):
        want = hl_maximal(g.abs() ** r, COARSE).samples ** (1 / r)
        got = orlicz_maximal(g, Power(r), method="exact").samples
        m = want > 0
        err2 = max(err2, float(np.max(np.abs(got[m] / want[m] - 1))))
    rep, _ = suite("comparability")
    consts = rep.summary["constants"]
    ok = err1 <= 0.02 and err2 <= 1e-8 and rep.gates["finite"] and rep.gates["regression"] is True
    record(9, ok, f"M chi vs 1/x {100 * err1:.2f}%, M_Power vs M(|f|^r)^(1/r) {err2:.1e}, comparability "
           + ", ".join(f"{k} {v:.3f}" for k, v in sorted(consts.items())) + f", locked {rep.gates['regression']}")
    assert ok


def test_c10_weights_bmo():
    L = 2.0**10
    Ns = (2**12, 2**13, 2**14)
    one = ap_constant(GridFunction(L, np.ones(2**12)), 2.0).constant == 1.0
    root = refinement_study(lambda w: ap_constant(w, 2.0), lambda N: generate("power", {"a": 0.5}, L, N), Ns)
    inv2 = refinement_study(lambda w: ap_constant(w, 2.0), lambda N: generate("power", {"a": -2.0}, L, N), Ns)
    bmo = refinement_study(bmo_norm, lambda N: generate("log-abs", {}, L, N), Ns)
    ok = one
    ok &= all(abs(r - 1) <= 0.05 for r in root.refinement_ratios)
    ok &= all(r >= 2.0 for r in inv2.refinement_ratios)
    ok &= all(abs(r - 1) <= 0.05 for r in bmo.refinement_ratios)
    b = generate("log-abs", {}, 256.0, 2**13)
    norm = bmo_norm(b).constant
    rng = np.random.default_rng(10)
    trials = chains = 0
    while trials < 40:
        B = Interval(float(rng.uniform(-40, 40)), float(np.exp(rng.uniform(-1, 3))))
        if B.left < -128 or B.right > 128:
            continue
        trials += 1
        chains += all(jn_exp_check(b, B, k, bmo=norm).chain_holds for k in (1, 2, 3))
        chains += jn_telescope_check(b, Interval(B.center, min(B.radius, 1.0)), 4, bmo=norm).holds
    ok &= chains == 2 * trials
    fmt = lambda v: "/".join(f"{r:.3f}" for r in v)
    record(10, ok, f"A_p(1)=1 {one}, A2(|x|^1/2) {fmt(root.refinement_ratios)}, A2(|x|^-2) {fmt(inv2.refinement_ratios)}, "
           f"bmo(log) {bmo.constant:.4f} {fmt(bmo.refinement_ratios)}, JN {chains}/{2 * trials}")
    assert ok


def _quad_level(f, l, x):
    K = DyadicKernel(-40, 40)
    total = 0.0
    for i in np.nonzero(f.samples)[0]:
        a, b = f.x[i] - f.h / 2, f.x[i] + f.h / 2
        pts = [p for p in (x - 2.0**l, x - 2.0 ** (l - 1), x + 2.0 ** (l - 1), x + 2.0**l) if a < p < b]
        total += f.samples[i] * quad(lambda y: K.eval_level(l, x - y), a, b, points=pts or None,
                                     epsabs=1e-14, epsrel=1e-13)[0]
    return total


def test_c11_operator_core():
    rng = np.random.default_rng(11)
    f = GridFunction(4.0, rng.normal(size=64))
    spec = OperatorSpec(DyadicKernel(-2, 1))
    F = apply(spec, f)
    e_quad = max(abs(F.level(l).samples[i] - _quad_level(f, l, f.x[i]))
                 for i in rng.integers(0, 64, size=8) for l in spec.kernel.levels)
    g = GridFunction(64.0, np.where(np.abs(np.linspace(-64, 64, 2**11)) < 10, rng.normal(size=2**11), 0.0))
    b = generate("log-abs", {}, 64.0, 2**11)
    e_rec = 0.0
    for k in (1, 2, 3):
        s = OperatorSpec(DyadicKernel(-4, 5), k=k, b=b)
        r = commutator_recursive(s, g).data
        e_rec = max(e_rec, float(np.max(np.abs(apply_commutator(s, g).data - r)) / max(1.0, np.max(np.abs(r)))))
    Tf = apply(OperatorSpec(DyadicKernel(-4, 5)), g).data
    Tg = apply(OperatorSpec(DyadicKernel(-3, 6)), GridFunction(128.0, g.samples)).data
    e_dil = float(np.max(np.abs(Tg - Tf)) / np.max(np.abs(Tf)))
    rep, _ = suite("kolmogorov")
    ok = e_quad <= 1e-8 and e_rec <= 1e-10 and e_dil <= 1e-10
    ok &= rep.gates["finite"] and rep.gates["regression"] is True
    record(11, ok, f"quadrature {e_quad:.1e}, recursion {e_rec:.1e}, dilation {e_dil:.1e}, "
           f"Kolmogorov sup {rep.summary['sup_ratio']:.3f} locked {rep.gates['regression']}")
    assert ok


def test_c12_coifman():
    rep, dt = suite("coifman")
    s = rep.summary
    ok = rep.passed and rep.gates["regression"] is True and dt < 300
    record(12, ok, f"sup {s['sup_ratio']:.3f}, drift {s['max_drift']:.3f}, homogeneity {s['homogeneity_error']:.1e}, "
           f"locked {rep.gates['regression']}, {dt:.0f}s")
    assert ok


def test_c13_sharp():
    rep, _ = suite("sharp")
    s = rep.summary
    ok = rep.gates["finite"] and rep.gates["drift"]
    record(13, ok, f"sup {s['sup_ratio']:.4f}, windowed drift {s['max_drift']:.3f}")
    assert ok


def test_c14_weak_type():
    rep, _ = suite("weak_type")
    ok = rep.gates["finite"] and rep.gates["monotone_lhs"]
    record(14, ok, f"sup {rep.summary['sup_ratio']:.3f}, LHS monotone {rep.gates['monotone_lhs']}")
    assert ok


def test_c15_fractional_band_pq_consistency():
    rep, _ = suite("fractional")
    s = rep.summary
    g = rep.gates
    ok = g["finite"] and g["s_alpha_band"] and g["pq_bounded"] and g["alpha_consistency"]
    bands = ", ".join(f"alpha={a}: {v['band']:.3f}" for a, v in s["s_alpha"].items())
    record(15, ok, f"S band {bands}; pq bounded {g['pq_bounded']}; alpha->0 {100 * s['alpha_consistency']:.2f}%")
    assert ok


@pytest.mark.xfail(strict=True, reason="fractional Coifman drift 2.64 > 2 from domain truncation")
def test_c15_fractional_drift():
    rep, _ = suite("fractional")
    ok = record(15, rep.gates["drift"], f"dilation drift {rep.summary['max_drift']:.3f} (need <= 2)")
    assert ok
