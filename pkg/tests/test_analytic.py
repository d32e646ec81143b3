import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import params, random_xstate, xstates
from qep.analytic import (
    EPS_EP,
    Branch,
    Discriminant,
    evolve_fields,
    kernels,
    mixed_fields,
    propagate,
    propagate_initial,
    propagate_mixed,
)
from qep.core import EXCITED_10, EXCITED_11, Params, XState, initial_xstate, mix, xstate_to_density
from qep.oracle import LindbladGenerator, integrate

mpmath.mp.dps = 40


def _kernels_mp(kappa, tau):
    # complex hyperbolic forms in extended precision: independent of the branch logic
    d = mpmath.sqrt(mpmath.mpc(mpmath.mpf(kappa) ** 2 - 1))
    t = mpmath.mpf(tau)
    if d == 0:
        return t * t / 2, t, mpmath.mpf(1)
    return (
        mpmath.re((mpmath.cosh(d * t) - 1) / d**2),
        mpmath.re(mpmath.sinh(d * t) / d),
        mpmath.re(mpmath.cosh(d * t)),
    )


def test_kernel_underdamped_sign_example():
    # kappa = 0, tau = pi: the hyperbolic form with imaginary Delta gives +2
    d = cmath.sqrt(-1)
    assert ((cmath.cosh(d * math.pi) - 1) / d**2).real == pytest.approx(2.0)
    assert kernels(0.0, math.pi).cm1_over_D2 == pytest.approx(2.0, abs=1e-15)


def test_kernel_critical_example():
    k = kernels(1.0, 2.0)
    assert (k.cm1_over_D2, k.sinh_over_D, k.cosh_val) == (2.0, 2.0, 1.0)


def test_kernel_overdamped_example():
    k = kernels(2.0, 1.0)
    assert k.cosh_val == pytest.approx(math.cosh(math.sqrt(3.0)), rel=1e-15)
    assert k.cosh_val == pytest.approx(2.9145, abs=1e-4)
    assert k.sinh_over_D == pytest.approx(math.sinh(math.sqrt(3.0)) / math.sqrt(3.0), rel=1e-15)


@pytest.mark.parametrize(
    "kappa", [0.0, 0.3, -0.7, 0.999, 1 - 2e-7, 1 - 5e-8, 1.0, -1.0, 1 + 5e-8, -1 - 2e-7, 1.001, 1.5, -3.0]
)
def test_kernels_match_extended_precision(kappa):
    for tau in (0.0, 0.01, 0.5, 1.0, 3.7, 10.0):
        got = kernels(kappa, tau)
        ref = _kernels_mp(kappa, tau)
        for g, r in zip((got.cm1_over_D2, got.sinh_over_D, got.cosh_val), ref):
            assert abs(g - float(r)) <= 1e-13 * max(1.0, abs(float(r)))


def test_kernels_vectorised_equal_scalar():
    taus = np.linspace(0, 10, 11)
    for kappa in (0.4, 1.0, 2.0):
        vec = kernels(kappa, taus)
        for i, t in enumerate(taus):
            assert kernels(kappa, t).cm1_over_D2 == pytest.approx(vec.cm1_over_D2[i], rel=1e-15, abs=0)


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_kernels_continuous_across_series_switch(sign):
    taus = np.linspace(0, 10, 101)
    inside = kernels(sign * (1 + EPS_EP), taus)
    outside = kernels(sign * (1 + EPS_EP * (1 + 1e-9)), taus)
    below_in = kernels(sign * (1 - EPS_EP), taus)
    below_out = kernels(sign * (1 - EPS_EP * (1 + 1e-9)), taus)
    for a, b in ((inside, outside), (below_in, below_out)):
        for f in ("cm1_over_D2", "sinh_over_D", "cosh_val"):
            assert np.abs(getattr(a, f) - getattr(b, f)).max() <= 1e-9


def test_kernel_limits_at_ep():
    for kappa in (1 - 1e-12, 1 + 1e-12, -1 + 1e-12, -1.0):
        k = kernels(kappa, 3.0)
        assert k.cm1_over_D2 == pytest.approx(4.5, abs=1e-9)
        assert k.sinh_over_D == pytest.approx(3.0, abs=1e-9)
        assert k.cosh_val == pytest.approx(1.0, abs=1e-9)


def test_negative_tau_rejected():
    with pytest.raises(ValueError):
        kernels(0.5, -1.0)
    with pytest.raises(ValueError):
        propagate(initial_xstate(EXCITED_10), Params(1, 0), -0.1)


@pytest.mark.parametrize(
    "kappa,branch", [(0.5, Branch.UNDER), (1.0, Branch.CRITICAL), (-1 - 5e-8, Branch.CRITICAL), (1.2, Branch.OVER)]
)
def test_discriminant_branch(kappa, branch):
    d = Discriminant.of(kappa)
    assert d.branch is branch
    assert d.value == pytest.approx(math.sqrt(abs(kappa * kappa - 1)))


def test_unitary_swap_makes_bell_state():
    s = propagate(initial_xstate(EXCITED_10), Params(0.0, 0.0), math.pi / 2)
    assert s.z == pytest.approx(1j, abs=1e-15)
    assert s.b == pytest.approx(0.5, abs=1e-15) and s.c == pytest.approx(0.5, abs=1e-15)
    assert abs(s.z) == pytest.approx(1.0)


@pytest.mark.parametrize("kappa", [0.0, 0.5, -1.0, 1.0])
def test_double_excitation_decays_at_twice_gamma(kappa):
    assert propagate(initial_xstate(EXCITED_11), Params(1.0, kappa), 1.0).a == pytest.approx(math.exp(-2), rel=1e-15)


def test_random_state_matches_oracle(rng):
    p = Params(1.3, 0.7)
    for _ in range(5):
        s0 = random_xstate(rng)
        _, rho = integrate(LindbladGenerator(p), xstate_to_density(s0), 2.5)[-1]
        assert np.abs(rho - xstate_to_density(propagate(s0, p, 2.5))).max() <= 1e-8


def test_coherence_channels_decay_exponentially():
    s0 = XState(0.3, 0.2, 0.2, 0.3, 0.1 - 0.2j, 0.15 + 0.05j)
    for kappa in (-1.5, -0.4, 1.0, 1.9):
        p = Params(2.0, kappa)
        for tau in (0.3, 1.7):
            s = propagate(s0, p, tau)
            e = math.exp(-2.0 * tau)
            assert s.h == pytest.approx(s0.h * e, abs=1e-15)
            assert 2 * s.m.real == pytest.approx(2 * s0.m.real * e, abs=1e-15)


def test_x_closure_of_named_starts():
    for ic in (EXCITED_10, EXCITED_11, mix(0.4)):
        f = propagate_initial(ic, Params(1.4, -0.9), np.linspace(0, 10, 51))
        assert np.abs(f.h).max() == 0.0
        assert np.abs(f.m.real).max() <= 1e-14


@settings(max_examples=200)
@given(s0=xstates(), p=params(), tau=st.floats(0.0, 10.0))
def test_trace_conserved(s0, p, tau):
    s = propagate(s0, p, tau)
    assert abs(s.a + s.x + s.d - 1.0) <= 1e-12


def test_mixed_endpoints():
    p = Params(1.1, -0.6)
    for tau in (0.0, 0.8, 4.0):
        one = propagate_mixed(1.0, p, tau).as_array()
        np.testing.assert_allclose(one, propagate(initial_xstate(EXCITED_10), p, tau).as_array(), atol=1e-15)
        zero = propagate_mixed(0.0, p, tau).as_array()
        np.testing.assert_allclose(zero, propagate(initial_xstate(EXCITED_11), p, tau).as_array(), atol=1e-15)


def test_mixed_population_example():
    s = propagate_mixed(0.5, Params(1.2, 1.2), 1.0)
    assert s.a == pytest.approx(0.5 * math.exp(-2.4), rel=1e-15)


@settings(max_examples=200)
@given(alpha=st.floats(0.0, 1.0), p=params(), tau=st.floats(0.0, 10.0))
def test_mixed_closed_forms_agree_with_general_solution(alpha, p, tau):
    a, z, d = mixed_fields(alpha, p, tau)
    f = evolve_fields(initial_xstate(mix(alpha)), p, tau)
    assert abs(a[0] - f.a[0]) <= 1e-12
    assert abs(z[0] - f.z[0]) <= 1e-12
    assert abs(d[0] - f.d[0]) <= 1e-12


def test_jump_across_ep_is_physical():
    # the state's own kappa sensitivity near gamma = 1 exceeds one; the oracle sees the same jump
    s0 = initial_xstate(EXCITED_11)
    g, tau = 1.0 + 1e-6, 2.8
    rho0 = xstate_to_density(s0)
    for kappa in (1.0, -1.0):
        near = kappa * (1 - 1e-6)
        analytic = np.abs(propagate(s0, Params(g, kappa), tau).as_array() - propagate(s0, Params(g, near), tau).as_array())
        o1 = integrate(LindbladGenerator(Params(g, kappa)), rho0, tau)[-1][1]
        o2 = integrate(LindbladGenerator(Params(g, near)), rho0, tau)[-1][1]
        assert analytic.max() == pytest.approx(np.abs(o1 - o2).max(), rel=1e-6)
        assert analytic.max() > 1.5e-6
