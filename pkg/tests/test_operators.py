import math

import numpy as np
import pytest

from hardylab.expr import parse
from hardylab.kernels import KernelSpec, Scenario
from hardylab.operators import (OperatorInstance, apply,
                                apply_radial_closed_form, power_log_moment)
from hardylab.spaces import RadialFunction, log_profile, power_profile
from hardylab.weights import isotropic

from conftest import diagonal_scenario, hardy_scenario


def test_power_log_moment_closed_forms():
    assert power_log_moment(-0.25, 1, 0.0, 1.0) == pytest.approx(16.0 / 9.0)
    assert power_log_moment(-0.5, 0, 0.0, 1.0) == pytest.approx(2.0)
    assert power_log_moment(-1.0, 1, 0.1, 1.0) == pytest.approx(
        math.log(10.0) ** 2 / 2.0
    )
    assert power_log_moment(-1.2, 0, 0.0, 1.0) == math.inf


def test_power_log_moment_against_quadrature(rng):
    from hardylab.quad import integrate_interval

    for _ in range(8):
        b = rng.uniform(-0.9, 1.5)
        m = int(rng.integers(0, 3))
        lo = rng.uniform(0.0, 0.3)
        hi = rng.uniform(0.6, 1.0)
        want = integrate_interval(
            lambda t, b=b, m=m: t ** b * np.log(1.0 / t) ** m, lo, hi, tol=1e-12
        ).value
        assert power_log_moment(b, m, lo, hi) == pytest.approx(want, rel=1e-10)


def test_constant_inputs_give_one():
    s = hardy_scenario()
    inst = OperatorInstance(s, (power_profile(0.0),))
    for x in (0.5, 1.0, 7.0):
        assert apply(inst, [x]).value == pytest.approx(1.0, rel=1e-12)


def test_identity_profile_halves():
    s = hardy_scenario()
    inst = OperatorInstance(s, (power_profile(1.0),))
    assert apply(inst, [4.0]).value == pytest.approx(2.0, rel=1e-12)


def test_zero_kernel_gives_zero():
    k = KernelSpec(m=1, n=1, psi=parse("0", 1), s=(parse("t1", 1),))
    s = Scenario(d=1, kernel=k, weights=(isotropic(1, 0.0),), p=(2,))
    inst = OperatorInstance(s, (power_profile(-0.25),))
    coeff, _ = apply_radial_closed_form(inst)
    assert coeff.value == 0.0


def test_radial_closed_form_single_slot():
    s = hardy_scenario()
    inst = OperatorInstance(s, (power_profile(-0.25),))
    coeff, exponent = apply_radial_closed_form(inst)
    assert coeff.value == pytest.approx(4.0 / 3.0, rel=1e-14)
    assert exponent == pytest.approx(-0.25)


def test_radial_closed_form_vs_quadrature_cross_check():
    s = diagonal_scenario(p=(4, 4))
    inst = OperatorInstance(s, (power_profile(-0.25), power_profile(-0.3)))
    coeff, exponent = apply_radial_closed_form(inst)
    for r in (0.5, 2.0, 16.0):
        got = apply(inst, [r], force_quadrature=True)
        assert got.value == pytest.approx(coeff.value * r ** exponent, rel=1e-7)


def test_commutator_closed_form_log_moment():
    k = KernelSpec(m=1, n=1, psi=parse("1", 1), s=(parse("t1", 1),))
    s = Scenario(d=1, kernel=k, weights=(isotropic(1, 0.0),), p=(3,), q=(6,),
                 lam=(-0.25,), mode="commutator")
    inst = OperatorInstance(s, (power_profile(-0.25),), (log_profile(),),
                            mode="commutator")
    coeff, exponent = apply_radial_closed_form(inst)
    assert coeff.value == pytest.approx(16.0 / 9.0, rel=1e-14)
    got = apply(inst, [3.0], force_quadrature=True)
    assert got.value == pytest.approx(16.0 / 9.0 * 3.0 ** -0.25, rel=1e-7)


def test_commutator_with_scaled_dilation_expands_log():
    # s(t) = c t: the symbol factor -log|s| = -log c + log(1/t) splits
    c = 0.5
    k = KernelSpec(m=1, n=1, psi=parse("1", 1), s=(parse(f"{c}*t1", 1),))
    s = Scenario(d=1, kernel=k, weights=(isotropic(1, 0.0),), p=(3,), q=(6,),
                 lam=(-0.25,), mode="commutator")
    inst = OperatorInstance(s, (power_profile(-0.25),), (log_profile(),),
                            mode="commutator")
    coeff, _ = apply_radial_closed_form(inst)
    want = c ** -0.25 * (-math.log(c) * (4.0 / 3.0) + 16.0 / 9.0)
    assert coeff.value == pytest.approx(want, rel=1e-13)
    got = apply(inst, [2.0], force_quadrature=True)
    assert got.value == pytest.approx(want * 2.0 ** -0.25, rel=1e-7)


def test_cutoff_witness_profile_matches_piecewise_oracle():
    s = hardy_scenario()
    eps = 0.01
    f = power_profile(-0.5 - eps, inner_cutoff=1.0)
    inst = OperatorInstance(s, (f,))
    for r in (0.5, 1.0, 2.0, 8.0, 100.0):
        want = 0.0
        if r > 1.0:
            want = r ** (-0.5 - eps) * (1.0 - r ** -(0.5 - eps)) / (0.5 - eps)
        exact = apply(inst, [r]).value
        quad = apply(inst, [r], force_quadrature=True).value
        assert exact == pytest.approx(want, rel=1e-12, abs=1e-15)
        assert quad == pytest.approx(want, rel=1e-7, abs=1e-12)


def test_multilinearity_in_each_slot(rng):
    s = diagonal_scenario(p=(4, 4))
    f2 = RadialFunction(parse("1/(1+r)", 0))
    g1 = RadialFunction(parse("exp(-r^2)", 0))
    g2 = RadialFunction(parse("1/(1+r^2)", 0))

    for _ in range(4):
        a, b = rng.uniform(-2.0, 2.0, size=2)
        x = np.array([float(rng.uniform(0.5, 4.0))])

        def f(pts, a=a, b=b):
            return a * g1(pts) + b * g2(pts)

        lhs = apply(OperatorInstance(s, (f, f2)), x, tol=1e-11).value
        v1 = apply(OperatorInstance(s, (g1, f2)), x, tol=1e-11).value
        v2 = apply(OperatorInstance(s, (g2, f2)), x, tol=1e-11).value
        assert lhs == pytest.approx(a * v1 + b * v2, rel=1e-10, abs=1e-12)


def test_linearity_survives_cutoff_inputs(rng):
    # combinations of cutoff powers go through the generic interface handling;
    # accuracy there is quadrature-limited, not exact
    s = diagonal_scenario(p=(4, 4))
    f2 = power_profile(-0.2, inner_cutoff=1.0)
    g1 = power_profile(-0.3, inner_cutoff=1.0)
    g2 = power_profile(-0.45, inner_cutoff=1.0)
    a, b = 1.5, -0.7
    x = np.array([3.7])

    def f(pts):
        return a * g1(pts) + b * g2(pts)

    lhs = apply(OperatorInstance(s, (f, f2)), x).value
    v1 = apply(OperatorInstance(s, (g1, f2)), x).value
    v2 = apply(OperatorInstance(s, (g2, f2)), x).value
    assert lhs == pytest.approx(a * v1 + b * v2, rel=1e-4)


def test_homogeneity_transport_for_power_inputs():
    s = diagonal_scenario(p=(4, 4))
    inst = OperatorInstance(s, (power_profile(-0.3), power_profile(-0.15)))
    vx = apply(inst, [3.0], force_quadrature=True).value
    vy = apply(inst, [0.75], force_quadrature=True).value
    assert vx / vy == pytest.approx((3.0 / 0.75) ** (-0.45), rel=1e-8)


def test_reduction_to_plain_multilinear_average(rng):
    # with n = m and s_k(t) = t_k the operator is the plain multilinear
    # average; compare against a direct tensor Gauss-Legendre evaluation
    k = KernelSpec(m=2, n=2, psi=parse("t1 + t2", 2),
                   s=(parse("t1", 2), parse("t2", 2)))
    s = Scenario(d=1, kernel=k, weights=(isotropic(1, 0.0),) * 2, p=(4, 4))
    g1 = RadialFunction(parse("exp(-r^2)", 0))
    g2 = RadialFunction(parse("1/(1+r^2)", 0))
    inst = OperatorInstance(s, (g1, g2))

    nodes, weights_ = np.polynomial.legendre.leggauss(64)
    u = 0.5 * (nodes + 1.0)
    wq = 0.5 * weights_

    def direct(x):
        t1, t2 = np.meshgrid(u, u, indexing="ij")
        vals = (np.exp(-((t1 * x) ** 2)) * 1.0 / (1.0 + (t2 * x) ** 2)
                * (t1 + t2))
        return float(wq @ vals @ wq)

    for _ in range(16):
        x = float(rng.uniform(0.1, 5.0))
        got = apply(inst, [x]).value
        assert got == pytest.approx(direct(x), rel=1e-6)


def test_hausdorff_mode_reciprocal_dilation():
    k = KernelSpec(m=1, n=1, psi=parse("exp(-t1)", 1), s=(parse("1/t1", 1),),
                   domain="positive-orthant")
    s = Scenario(d=1, kernel=k, weights=(isotropic(1, 0.0),), p=(2,))
    inst = OperatorInstance(s, (power_profile(-0.5),), mode="hausdorff")
    got = apply(inst, [4.0])
    assert got.value == pytest.approx(math.gamma(1.5) * 0.5, rel=1e-7)


def test_hausdorff_mode_requires_orthant_kernel():
    s = hardy_scenario()
    with pytest.raises(ValueError):
        OperatorInstance(s, (power_profile(0.0),), mode="hausdorff")


def test_divergent_input_is_flagged():
    # too-negative power against a vanishing dilation: inner integral blows up
    s = hardy_scenario()
    inst = OperatorInstance(s, (power_profile(-1.5),))
    res = apply(inst, [2.0])
    assert res.divergent


def test_higher_dimension_points():
    s = hardy_scenario(d=3)
    inst = OperatorInstance(s, (power_profile(-0.25),))
    x = np.array([1.0, 2.0, 2.0])  # |x| = 3
    got = apply(inst, x).value
    assert got == pytest.approx(4.0 / 3.0 * 3.0 ** -0.25, rel=1e-12)
