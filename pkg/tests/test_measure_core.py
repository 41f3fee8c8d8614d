import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semigroup_lab import kernels
from semigroup_lab.errors import GridMismatchError, NotPositiveError
from semigroup_lab.measure_core import (
    DICTIONARY,
    GridSpec,
    Measure,
    SemigroupParams,
    check_al,
    dumps_measure,
    jordan,
    measure_from_record,
    measure_to_record,
    nonnegative_dictionary,
    norming_ratio,
    pairing,
    seminorm,
    split_seminorm_gap,
    test_function,
    tv_norm,
)

SMALL = GridSpec(20.0, 1025)
coef = st.floats(-5, 5, allow_nan=False)
loc = st.floats(-10, 10, allow_nan=False)
atoms = st.lists(st.tuples(loc, st.floats(-3, 3, allow_nan=False)), max_size=4)
pos_atoms = st.lists(st.tuples(loc, st.floats(0, 3, allow_nan=False)), max_size=4)


def bump(center, width, amp=1.0):
    return Measure.from_density(SMALL, amp * kernels.heat_kernel(width, SMALL.nodes - center))


def test_grid_geometry():
    g = GridSpec()
    assert g.n == 16385 and g.h == pytest.approx(40 / 16384)
    assert g.nodes[g.center] == 0.0
    assert g.nodes[0] == -20.0 and g.nodes[-1] == 20.0
    assert g.weights.sum() == pytest.approx(40.0)


def test_grid_rejects_even_or_tiny():
    with pytest.raises(ValueError):
        GridSpec(20.0, 16384)
    with pytest.raises(ValueError):
        GridSpec(-1.0, 17)


def test_smallness_threshold():
    assert SemigroupParams(eta=2.0).smallness_threshold == 0.25


def test_dirac_pairings(grid):
    d = Measure.dirac(grid)
    assert pairing(test_function("cos_1"), d) == 1.0
    assert pairing(test_function("sin_1"), d) == 0.0
    assert tv_norm(d) == 1.0


def test_gaussian_pairing_characteristic_function(grid):
    g = kernels.gaussian_measure(grid, 1.0)
    assert pairing(test_function("cos_1"), g) == pytest.approx(math.exp(-0.5), abs=1e-12)
    assert pairing(test_function("const1"), g) == pytest.approx(1.0, abs=1e-12)


def test_atoms_merge_and_sort():
    mu = Measure(SMALL, [1.0, -1.0, 1.0], [0.5, 2.0, 0.25])
    assert list(mu.locations) == [-1.0, 1.0]
    assert list(mu.weights) == [2.0, 0.75]
    with pytest.raises(ValueError):
        mu.weights[0] = 3.0


def test_atoms_outside_box_rejected():
    with pytest.raises(ValueError):
        Measure.dirac(SMALL, 25.0)


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        Measure.dirac(SMALL) + Measure.dirac(GridSpec(20.0, 2049))
    with pytest.raises(GridMismatchError):
        Measure.from_density(SMALL, np.zeros(7))


@settings(max_examples=40, deadline=None)
@given(atoms, atoms, coef, coef)
def test_pairing_is_bilinear(a1, a2, c1, c2):
    mu, nu = Measure.atomic(SMALL, a1) + bump(0.5, 1.0), Measure.atomic(SMALL, a2)
    f, g = test_function("cos_2"), test_function("tanh_1")
    lhs = pairing(f, c1 * mu + c2 * nu)
    assert lhs == pytest.approx(c1 * pairing(f, mu) + c2 * pairing(f, nu), abs=1e-9)
    combo = type(f)("combo", lambda x: c1 * f(x) + c2 * g(x), abs(c1) + abs(c2))
    assert pairing(combo, mu) == pytest.approx(c1 * pairing(f, mu) + c2 * pairing(g, mu), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(pos_atoms, pos_atoms, st.floats(0, 2), st.floats(-4, 4))
def test_al_additivity_on_positive_cone(a1, a2, amp, center):
    mu = Measure.atomic(SMALL, a1) + bump(center, 0.5, amp)
    nu = Measure.atomic(SMALL, a2) + bump(-center, 2.0)
    assert check_al(mu, nu).max_gap <= 1e-12


def test_al_rejects_signed():
    with pytest.raises(NotPositiveError):
        check_al(Measure.dirac(SMALL, weight=-1.0), Measure.dirac(SMALL))


@settings(max_examples=40, deadline=None)
@given(atoms, st.floats(-2, 2), st.floats(-4, 4))
def test_jordan_decomposition(a, amp, center):
    mu = Measure.atomic(SMALL, a) + bump(center, 1.0, amp) - bump(0.0, 0.3)
    plus, minus = jordan(mu)
    assert plus.is_positive() and minus.is_positive()
    assert tv_norm(plus) + tv_norm(minus) == pytest.approx(tv_norm(mu), abs=1e-12)
    assert tv_norm(plus - minus - mu) == 0.0
    for f in DICTIONARY.values():
        assert split_seminorm_gap(f, mu) <= 1e-12


def test_seminorm_is_not_additive_for_signed_functions():
    # p_f for a sign-changing f is only subadditive
    f = test_function("sin_1")
    mu, nu = Measure.dirac(SMALL, 1.0), Measure.dirac(SMALL, -1.0)
    assert seminorm(f, mu + nu) < seminorm(f, mu) + seminorm(f, nu)


def test_norming_ratio_bounds_tv():
    mu = Measure.dirac(SMALL, 0.0) + Measure.dirac(SMALL, math.pi, -1.0)
    r = norming_ratio(mu)
    assert r <= tv_norm(mu)
    assert r == pytest.approx(2.0)  # cos_1 sees both atoms with full weight


def test_nonnegative_dictionary():
    names = {f.name for f in nonnegative_dictionary()}
    assert names == {"const1", "gauss_bump", "one_plus_cos"}
    x = np.linspace(-20, 20, 1001)
    for f in nonnegative_dictionary():
        assert np.all(f(x) >= 0)


def test_dictionary_derivatives_match_finite_differences():
    x = np.linspace(-5, 5, 201)
    h = 1e-5
    for f in DICTIONARY.values():
        fd = (f(x + h) - f(x - h)) / (2 * h)
        assert np.max(np.abs(fd - f.derivative(x))) < 1e-8, f.name
        fd2 = (f.derivative(x + h) - f.derivative(x - h)) / (2 * h)
        assert np.max(np.abs(fd2 - f.second_derivative(x))) < 1e-7, f.name
        assert np.max(np.abs(f(x))) <= f.sup_norm + 1e-15


def test_unknown_test_function():
    with pytest.raises(KeyError):
        test_function("nope")


def test_record_round_trip(tmp_path):
    mu = Measure.atomic(SMALL, [(0.0, 1.0), (2.5, -0.5)]) + bump(1.0, 0.7)
    rec = measure_to_record(mu, tmp_path / "rho.txt")
    back = measure_from_record(json.loads(json.dumps(rec)), SMALL)
    assert np.array_equal(back.locations, mu.locations)
    assert np.array_equal(back.weights, mu.weights)
    assert np.array_equal(back.density, mu.density)


def test_record_density_expr_and_grid_check():
    rec = {"atoms": [[0.0, 1.0]], "density_expr": "exp(-x**2/2)/sqrt(2*pi)"}
    mu = measure_from_record(rec, SMALL)
    assert tv_norm(mu) == pytest.approx(2.0, abs=1e-12)
    with pytest.raises(GridMismatchError):
        measure_from_record({"grid": {"L": 10, "n": 1025}}, SMALL)


def test_dumps_atomic_only():
    assert json.loads(dumps_measure(Measure.dirac(SMALL)))["atoms"] == [[0.0, 1.0]]
    with pytest.raises(ValueError):
        dumps_measure(bump(0, 1))
