import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semigroup_lab import heat, kernels
from semigroup_lab.measure_core import DICTIONARY, GridSpec, Measure, pairing, test_function, tv_norm

SMALL = GridSpec(20.0, 2049)


def test_zero_time_is_identity(delta0):
    assert heat.apply_T(0.0, delta0) is delta0
    with pytest.raises(ValueError):
        heat.apply_T(-0.1, delta0)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_closed_forms_on_dirac(delta0, t):
    T = heat.apply_T(t, delta0)
    assert pairing(test_function("cos_1"), T) == pytest.approx(math.exp(-t / 2), abs=1e-12)
    assert pairing(test_function("cos_2"), T) == pytest.approx(math.exp(-2 * t), abs=1e-12)
    assert pairing(test_function("gauss_bump"), T) == pytest.approx((1 + 2 * t) ** -0.5, abs=1e-12)
    assert tv_norm(T) == pytest.approx(1.0, abs=1e-12)


def test_shifted_atom(grid):
    mu = Measure.dirac(grid, 1.3, 2.0)
    val = pairing(test_function("sin_1"), heat.apply_T(1.0, mu))
    assert val == pytest.approx(2.0 * math.exp(-0.5) * math.sin(1.3), abs=1e-12)


@pytest.mark.parametrize("lam", [1.0, 2.0, 8.0])
def test_resolvent_mass(delta0, lam):
    assert pairing(test_function("const1"), heat.resolvent(lam, delta0)) == pytest.approx(1 / lam, abs=1e-6)


def test_resolvent_cos(delta0):
    assert pairing(test_function("cos_1"), heat.resolvent(1.0, delta0)) == pytest.approx(2 / 3, abs=1e-5)


@pytest.mark.parametrize("t,s", [(0.1, 0.5), (1.0, 1.0), (0.5, 0.1)])
def test_semigroup_law(delta0, gauss1, t, s):
    for mu in (delta0, gauss1):
        assert heat.semigroup_law_gap(t, s, mu) <= 1e-10


def test_duality(delta0, gauss1):
    for mu in (delta0, gauss1):
        for f in DICTIONARY.values():
            assert heat.duality_residual(f, 0.5, mu) <= 1e-9


def test_smoothed_function_closed_form(grid):
    sm = heat.smoothed(1.0, test_function("cos_1"), grid)
    x = np.array([0.0, 0.3, 2.0, 19.9])
    assert np.max(np.abs(sm.at(x) - math.exp(-0.5) * np.cos(x))) < 1e-10
    assert np.max(np.abs(sm.sample(grid) - math.exp(-0.5) * np.cos(grid.nodes))) < 1e-10


def test_generator_is_half_laplacian(gauss1):
    # d/dt <cos, T(t) gamma_1> = -1/2 <cos, gamma_1>
    val = pairing(test_function("cos_1"), heat.generator(gauss1))
    assert val == pytest.approx(-0.5 * math.exp(-0.5), abs=1e-6)


def test_laplace_transform_cos(delta0):
    assert heat.laplace_residual(1.0, test_function("cos_1"), delta0, 30.0, 600) <= 1e-3


def test_laplace_residual_is_trapezoid_defect(delta0):
    # <1, T(t) delta0> = 1, so the residual is the trapezoid error of int e^{-lam t} dt
    lam, H, steps = 8.0, 5.0, 400
    d = H / steps
    q = math.exp(-lam * d)
    trap = d * ((1 - q ** (steps + 1)) / (1 - q) - 0.5 * (1 + q**steps))
    expect = abs(trap - 1 / lam)
    got = heat.laplace_residual(lam, test_function("const1"), delta0, H, steps)
    assert got == pytest.approx(expect, abs=2e-6)


def test_bicontinuity_probe(delta0):
    rep = heat.bicontinuity_probe(delta0, test_function("cos_1"), [1.0, 0.1, 0.01, 1e-4])
    assert rep.decreasing and rep.tends_to_zero
    # norm continuity fails: ||T(t) delta0 - delta0|| = 2 for every t > 0
    assert tv_norm(heat.apply_T(1e-4, delta0) - delta0) == pytest.approx(2.0)


def test_equicontinuity_probe():
    seq = [Measure.dirac(SMALL, 1.0 / k) for k in range(1, 6)]
    sups = heat.equicontinuity_probe(seq, 0.5, test_function("cos_1"))
    assert all(v <= 1.0 + 1e-12 for v in sups)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-2, 2)), max_size=4), st.floats(-3, 3), st.floats(0.05, 2.0))
def test_T_is_linear(atoms, c, t):
    mu = Measure.atomic(SMALL, atoms)
    nu = kernels.gaussian_measure(SMALL, 0.5, 1.0)
    lhs = heat.apply_T(t, mu + c * nu)
    rhs = heat.apply_T(t, mu) + c * heat.apply_T(t, nu)
    for f in DICTIONARY.values():
        assert pairing(f, lhs) == pytest.approx(pairing(f, rhs), abs=1e-10)
