import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from hormander.kernel import DyadicKernel
from hormander.sampled import DomainError, GridFunction, Interval, VectorGridFunction, generate
from hormander.seqnorm import CounterexampleQuadratic, Lp, OrliczSeq
from hormander.vvop import (
    ConfigurationError,
    OperatorSpec,
    apply,
    apply_at,
    apply_commutator,
    bochner_norm,
    commutator_recursive,
    fractional_apply,
    kolmogorov_check,
    s_norm,
)
from hormander.young import PowerLog

from .conftest import SMALL_L, SMALL_N, random_grid

KERN = DyadicKernel(-4, 5)


def symbol(L=SMALL_L, N=SMALL_N):
    return generate("log-abs", {}, L, N)


def quad_level(f, l, x, alpha=0.0):
    """int |x - y|^alpha K_l(x - y) f(y) dy with adaptive quadrature over each cell."""
    total = 0.0
    for i in range(f.N):
        c = f.samples[i]
        if c == 0:
            continue
        a, b = f.x[i] - f.h / 2, f.x[i] + f.h / 2
        pts = [p for p in (x - 2.0**l, x - 2.0 ** (l - 1), x, x + 2.0 ** (l - 1), x + 2.0**l) if a < p < b]
        k = lambda y: abs(x - y) ** alpha * KERN_ANY.eval_level(l, x - y)
        total += c * quad(k, a, b, points=pts or None, epsabs=1e-14, epsrel=1e-13)[0]
    return total


KERN_ANY = DyadicKernel(-30, 30)


def test_constant_is_annihilated():
    f = GridFunction(SMALL_L, np.full(SMALL_N, 2.0))
    F = apply(OperatorSpec(KERN), f)
    core = f.core_mask(0.5)
    assert np.max(np.abs(F.data[:, core])) <= 1e-12


def test_linearity(rng):
    f, g = random_grid(rng), random_grid(rng)
    spec = OperatorSpec(KERN)
    lhs = apply(spec, 2.5 * f - 0.75 * g).data
    rhs = 2.5 * apply(spec, f).data - 0.75 * apply(spec, g).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_levels_against_quadrature(rng):
    f = random_grid(rng, 4.0, 64)
    spec = OperatorSpec(DyadicKernel(-2, 1))
    F = apply(spec, f)
    for i in rng.integers(0, f.N, size=6):
        for l in spec.kernel.levels:
            assert F.level(l).samples[i] == pytest.approx(quad_level(f, l, f.x[i]), abs=1e-8)


def test_apply_at_off_grid(rng):
    f = random_grid(rng, 4.0, 64)
    spec = OperatorSpec(DyadicKernel(-2, 1))
    xs = rng.uniform(-1.5, 1.5, size=4)
    got = apply_at(spec, f, xs)
    for c, x in enumerate(xs):
        for r, l in enumerate(spec.kernel.levels):
            assert got[r, c] == pytest.approx(quad_level(f, l, x), abs=1e-8)


def test_apply_at_matches_apply_on_centres(rng):
    f = random_grid(rng)
    spec = OperatorSpec(KERN)
    np.testing.assert_allclose(apply_at(spec, f, f.x[::37]), apply(spec, f).data[:, ::37], atol=1e-12)


def test_whole_cell_translation(rng):
    f = random_grid(rng, support=(-20.0, 20.0))
    spec = OperatorSpec(KERN)
    for s in (1, 17, -40):
        a = apply(spec, f.translate(s)).data
        b = np.array([f.with_samples(row).translate(s).samples for row in apply(spec, f).data])
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_dilation_covariance(rng):
    # g(x) = f(x / 2) on the doubled grid: (T_l g)(2x) = (T_{l-1} f)(x)
    f = random_grid(rng)
    g = GridFunction(2 * f.L, f.samples)
    Tf = apply(OperatorSpec(KERN), f).data
    Tg = apply(OperatorSpec(DyadicKernel(KERN.l_min + 1, KERN.l_max + 1)), g).data
    np.testing.assert_allclose(Tg, Tf, rtol=1e-10, atol=1e-13)


def test_low_levels_rejected():
    f = GridFunction(SMALL_L, np.ones(SMALL_N))
    with pytest.raises(ConfigurationError):
        apply(OperatorSpec(DyadicKernel(-6, 2)), f)


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        OperatorSpec(KERN, k=1)
    with pytest.raises(ConfigurationError):
        OperatorSpec(KERN, X=CounterexampleQuadratic())
    with pytest.raises(ConfigurationError):
        OperatorSpec(KERN, k=-1)


def test_spec_dict_round_trip():
    d = {"kernel": {"l_min": -2, "l_max": 3, "alpha": 0.0}, "X": {"variant": "lp", "p": 2}, "k": 1,
         "b": {"kind": "log-abs", "params": {}}}
    spec = OperatorSpec.from_dict(d, L=8.0, N=256)
    assert spec.b.N == 256
    assert OperatorSpec.from_dict(spec.to_dict(), L=8.0, N=256).to_dict() == spec.to_dict()


# ---------------------------------------------------------------------------
# commutators


def test_order_zero_commutator_is_apply(rng):
    f = random_grid(rng)
    spec = OperatorSpec(KERN)
    np.testing.assert_array_equal(apply_commutator(spec, f).data, apply(spec, f).data)


def test_constant_symbol_commutes(rng):
    f = random_grid(rng)
    b = GridFunction(f.L, np.full(f.N, 3.7))
    for k in (1, 2):
        C = apply_commutator(OperatorSpec(KERN, k=k, b=b), f).data
        assert np.max(np.abs(C)) <= 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_binomial_matches_recursion(k, rng):
    f = random_grid(rng, support=(-10.0, 10.0))
    spec = OperatorSpec(KERN, k=k, b=symbol())
    a = apply_commutator(spec, f).data
    r = commutator_recursive(spec, f).data
    scale = max(1.0, np.max(np.abs(r)))
    assert np.max(np.abs(a - r)) <= 1e-10 * scale


def test_commutator_of_first_order_by_hand(rng):
    f = random_grid(rng)
    b = symbol()
    spec = OperatorSpec(KERN, k=1, b=b)
    want = b.samples * apply(OperatorSpec(KERN), f).data - apply(OperatorSpec(KERN), f * b).data
    np.testing.assert_allclose(apply_commutator(spec, f).data, want, atol=1e-10)


def test_symbol_grid_mismatch(rng):
    spec = OperatorSpec(KERN, k=1, b=symbol(SMALL_L, SMALL_N // 2))
    with pytest.raises(ConfigurationError):
        apply_commutator(spec, random_grid(rng))


def test_s_norm_ordering(rng):
    f = random_grid(rng)
    two = s_norm(OperatorSpec(KERN, X=Lp(2)), f).samples
    sup = s_norm(OperatorSpec(KERN, X=Lp(math.inf)), f).samples
    one = s_norm(OperatorSpec(KERN, X=Lp(1)), f).samples
    assert np.all(sup <= two * (1 + 1e-12) + 1e-15)
    assert np.all(two <= one * (1 + 1e-12) + 1e-15)


@settings(max_examples=15)
@given(c=st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3), seed=st.integers(0, 1000))
def test_s_norm_homogeneous(c, seed):
    f = random_grid(np.random.default_rng(seed), 16.0, 256)
    spec = OperatorSpec(DyadicKernel(-2, 3), X=OrliczSeq(PowerLog(2, 1, "log1p")))
    np.testing.assert_allclose(s_norm(spec, f * c).samples, abs(c) * s_norm(spec, f).samples, rtol=1e-9, atol=1e-300)


# ---------------------------------------------------------------------------
# fractional kernel


def test_fractional_small_alpha_reduces(rng):
    f = random_grid(rng)
    a = fractional_apply(OperatorSpec(DyadicKernel(-4, 5, 1e-6)), f).data
    b = apply(OperatorSpec(KERN), f).data
    assert np.max(np.abs(a - b)) <= 1e-4 * max(1.0, np.max(np.abs(b)))


@pytest.mark.parametrize("alpha", [0.25, 0.5])
def test_fractional_against_quadrature(alpha, rng):
    f = random_grid(rng, 4.0, 64)
    spec = OperatorSpec(DyadicKernel(-2, 1, alpha))
    F = fractional_apply(spec, f)
    for i in rng.integers(0, f.N, size=4):
        for l in spec.kernel.levels:
            assert F.level(l).samples[i] == pytest.approx(quad_level(f, l, f.x[i], alpha), abs=1e-8)


def test_fractional_zero_and_subcell_levels(rng):
    z = GridFunction(SMALL_L, np.zeros(SMALL_N))
    assert not np.any(fractional_apply(OperatorSpec(DyadicKernel(-8, 3, 0.5)), z).data)
    # a level inside one cell acts by multiplication
    f = random_grid(rng)
    F = apply(OperatorSpec(DyadicKernel(-12, -12, 0.5)), f).data[0]
    ratio = F[f.samples != 0] / f.samples[f.samples != 0]
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


# ---------------------------------------------------------------------------
# Bochner norm and the Kolmogorov check


def test_bochner_basics(rng):
    zero = VectorGridFunction(4.0, 0, np.zeros((3, 64)))
    assert bochner_norm(zero, Lp(2), 2.0) == 0.0
    row = rng.normal(size=64)
    data = np.zeros((3, 64))
    data[1] = row
    F = VectorGridFunction(4.0, 0, data)
    h = 8.0 / 64
    assert bochner_norm(F, Lp(2), 3.0) == pytest.approx((h * np.sum(np.abs(row) ** 3)) ** (1 / 3), rel=1e-12)
    assert bochner_norm(F, Lp(2), math.inf) == pytest.approx(np.max(np.abs(row)), rel=1e-14)
    G = VectorGridFunction(4.0, 0, -4 * data)
    assert bochner_norm(G, Lp(2), 2.0) == pytest.approx(4 * bochner_norm(F, Lp(2), 2.0), rel=1e-12)
    with pytest.raises(ValueError):
        bochner_norm(F, Lp(2), 0.0)


def test_kolmogorov():
    spec = OperatorSpec(KERN)
    B, B_hat = Interval(0.0, 8.0), Interval(0.0, 2.0)
    zero = GridFunction(SMALL_L, np.zeros(SMALL_N))
    rep = kolmogorov_check(spec, zero, B, B_hat)
    assert rep.passed and rep.lhs == 0.0
    f = generate("step", {"a": -1.5, "b": 1.5}, SMALL_L, SMALL_N)
    rep = kolmogorov_check(spec, f, B, B_hat)
    assert rep.passed and 0 < rep.ratio < 10


def test_kolmogorov_domain():
    spec = OperatorSpec(KERN)
    f = generate("step", {"a": -1.5, "b": 1.5}, SMALL_L, SMALL_N)
    B, B_hat = Interval(0.0, 8.0), Interval(0.0, 2.0)
    with pytest.raises(DomainError):
        kolmogorov_check(spec, f, B, B_hat, eps=1.0)
    with pytest.raises(DomainError):
        kolmogorov_check(spec, f, B_hat, B)
    with pytest.raises(DomainError):
        kolmogorov_check(spec, f, B, Interval(0.0, 1.0))
