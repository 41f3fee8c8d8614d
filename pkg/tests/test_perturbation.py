import math

import numpy as np
import pytest
from scipy import integrate, special

from semigroup_lab import heat, kernels
from semigroup_lab.errors import DomainError
from semigroup_lab.measure_core import GridSpec, Measure, SemigroupParams, pairing, test_function, tv_norm
from semigroup_lab.perturbation import (
    PotentialPerturbation,
    RankOnePerturbation,
    analytic_bound,
    composed_norm_estimate,
    locality_probe,
    lp_split,
    mv_integral,
)
from semigroup_lab.perturbed import default_probes

LAMBDAS = [0.5, 2.0, 12.5, 50.0]


def test_exp_decay_cell_average_preserves_l1(grid, psi):
    assert grid.integrate(psi.cell_average(grid)) == pytest.approx(2.0 - 2 * math.exp(-20), abs=1e-6)
    assert psi.norm_l1 == 2.0


def test_sqrt_singular_norm_and_antiderivative(grid):
    p = PotentialPerturbation.sqrt_singular(100.0)
    exact = 2 * integrate.quad(p, 0, 1, points=[1e-4])[0]
    assert p.norm_l1 == pytest.approx(exact, rel=1e-6)
    assert float(np.sum(p.cell_average(grid)) * grid.h) == pytest.approx(p.norm_l1, rel=1e-9)


def test_singular_atom_rejected(grid):
    p = PotentialPerturbation.sqrt_singular()
    with pytest.raises(DomainError):
        p.apply(Measure.dirac(grid))
    assert tv_norm(p.apply(Measure.dirac(grid, 0.25))) == pytest.approx(2.0)


def test_apply_on_atoms_and_density(grid, psi):
    mu = Measure.dirac(grid, 1.0, 3.0)
    assert tv_norm(psi.apply(mu)) == pytest.approx(3 * math.exp(-1))
    g = kernels.gaussian_measure(grid, 1.0)
    # <1, psi gamma_1> = E e^{-|X|} = e^{1/2} erfc(1/sqrt 2)
    assert tv_norm(psi.apply(g)) == pytest.approx(math.exp(0.5) * special.erfc(1 / math.sqrt(2)), abs=1e-6)


def test_from_spec_and_table(tmp_path):
    assert PotentialPerturbation.from_spec("exp_decay").name == "exp_decay"
    assert PotentialPerturbation.from_spec("sqrt_singular(50)").norm_l1 == pytest.approx(2 * (2 - 1 / 50))
    assert PotentialPerturbation.from_spec("zero").norm_l1 == 0.0
    x = np.linspace(-3, 3, 61)
    np.savetxt(tmp_path / "psi.csv", np.column_stack([x, np.exp(-np.abs(x))]), delimiter=",")
    t = PotentialPerturbation.from_spec("table:psi.csv", tmp_path)
    assert t(0.0) == pytest.approx(1.0)
    assert t(5.0) == 0.0
    with pytest.raises(ValueError):
        PotentialPerturbation.from_spec("gaussian")
    with pytest.raises(ValueError):
        PotentialPerturbation.from_table([0, 1], [1, -1])


def test_scaled(psi):
    assert psi.scaled(0.25).norm_l1 == 0.5
    assert psi.scaled(0.25)(0.0) == 0.25


@pytest.mark.parametrize("lam", LAMBDAS)
def test_young_bound(grid, psi, lam):
    est = composed_norm_estimate(psi, lam, default_probes(grid))
    assert est.ok
    # the Dirac probe attains ||psi xi_lam||_1 = 2 / (r (1 + r)), r = sqrt(2 lam)
    r = math.sqrt(2 * lam)
    assert est.empirical == pytest.approx(2 / (r * (1 + r)), rel=1e-4)
    assert est.analytic == pytest.approx(2 / r)


def test_analytic_bound_at_threshold(psi):
    assert analytic_bound(psi, 12.5) == pytest.approx(0.4)
    assert analytic_bound(psi, 12.5) < 1 / (2 * SemigroupParams().M)


def test_rank_one(grid):
    y = Measure.dirac(grid, 1.0, 0.5)
    B = RankOnePerturbation(test_function("gauss_bump"), y)
    mu = Measure.dirac(grid, 0.0, 2.0)
    assert tv_norm(B.apply(mu)) == pytest.approx(1.0)
    assert analytic_bound(B, 3.0) == pytest.approx(0.5 / 3.0)
    assert composed_norm_estimate(B, 3.0, default_probes(grid)).ok
    with pytest.raises(ValueError):
        RankOnePerturbation(test_function("cos_1"), y)
    with pytest.raises(ValueError):
        RankOnePerturbation(test_function("const1"), -1.0 * y)


def test_mv_integral_dirac_oracle(delta0, psi):
    # int_0^t0 E e^{-|W_s|} ds with E e^{-|W_s|} = e^{s/2} erfc(sqrt(s/2))
    exact = integrate.quad(lambda s: math.exp(s / 2) * special.erfc(math.sqrt(s / 2)), 0, 0.1)[0]
    got = mv_integral(psi, delta0, 0.1)
    assert got == pytest.approx(exact, abs=1e-5)  # trapezoid in s, integrand has a sqrt(s) term
    assert got <= 0.1 + 1e-6 and got < 0.25


def test_mv_integral_rescaling_sandwich(delta0, psi):
    i0 = mv_integral(psi, delta0, 0.1)
    for lam in LAMBDAS:
        il = mv_integral(psi, delta0, 0.1, lam)
        assert math.exp(-lam * 0.1) * i0 <= il <= i0


def test_mv_integral_errors(grid, psi):
    with pytest.raises(ValueError):
        mv_integral(psi, Measure.zero(grid), 0.1)
    with pytest.raises(ValueError):
        mv_integral(psi, Measure.dirac(grid), 0.0)


def test_locality_probe(grid, psi):
    probes = default_probes(grid)
    K = locality_probe(psi, 2.0, test_function("cos_1"), test_function("gauss_bump"), 0.01, probes)
    assert np.isfinite(K)
    far = [Measure.dirac(grid, 0.0)]
    with pytest.raises(DomainError):
        locality_probe(psi, 2.0, test_function("const1"), test_function("sin_1"), 1e-3, far)


def test_lp_split():
    v = np.array([0.1, 5.0, 0.5, 20.0])
    big, small = lp_split(v, 1.0)
    assert np.array_equal(big + small, v)
    assert small.max() <= 1.0
