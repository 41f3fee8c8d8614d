import math

import numpy as np
import pytest
from scipy import integrate

from semigroup_lab import kernels
from semigroup_lab.errors import GridMismatchError
from semigroup_lab.measure_core import GridSpec, Measure, tv_norm


def test_kernel_masses():
    for t in (0.1, 1.0, 3.0):
        assert integrate.quad(lambda x: kernels.heat_kernel(t, x), -np.inf, np.inf)[0] == pytest.approx(1.0)
    for lam in (0.5, 2.0, 8.0):
        m = integrate.quad(lambda x: kernels.resolvent_kernel(lam, x), -np.inf, np.inf)[0]
        assert m == pytest.approx(1.0 / lam) == kernels.resolvent(lam).mass


def test_resolvent_kernel_is_laplace_transform_of_heat_kernel():
    lam, x = 2.0, 0.7
    lt = integrate.quad(lambda t: math.exp(-lam * t) * kernels.heat_kernel(t, x), 0, np.inf)[0]
    assert lt == pytest.approx(float(kernels.resolvent_kernel(lam, x)), rel=1e-8)


def test_bad_parameters():
    with pytest.raises(ValueError):
        kernels.heat_kernel(0.0, 1.0)
    with pytest.raises(ValueError):
        kernels.Kernel("laplace", 1.0)
    with pytest.raises(ValueError):
        kernels.resolvent(-1.0)


def test_convolving_gaussians_adds_variances(grid):
    g = kernels.gaussian_measure(grid, 0.5, center=1.0)
    out = kernels.convolve(kernels.heat(0.7), g)
    expect = kernels.heat_kernel(1.2, grid.nodes - 1.0)
    assert np.max(np.abs(out - expect)) < 1e-12


def test_atoms_convolve_exactly(grid):
    mu = Measure.atomic(grid, [(0.3, 2.0), (-1.0, 0.5)])
    out = kernels.convolve(kernels.resolvent(2.0), mu)
    x = grid.nodes
    expect = 2.0 * kernels.resolvent_kernel(2.0, x - 0.3) + 0.5 * kernels.resolvent_kernel(2.0, x + 1.0)
    assert np.array_equal(out, expect)


def test_fft_matches_direct_sum():
    g = GridSpec(5.0, 257)
    rho = np.exp(-np.abs(g.nodes)) * (1 + np.sin(3 * g.nodes))
    mu = Measure.from_density(g, rho)
    k = kernels.heat(0.3)
    out = kernels.convolve(k, mu)
    x = g.nodes
    direct = (k(x[:, None] - x[None, :]) * rho[None, :]).sum(axis=1) * g.h
    assert np.max(np.abs(out - direct)) < 1e-13


def test_positive_output_for_positive_input(grid, rng):
    mu = kernels.random_positive_measure(rng, grid)
    assert mu.is_positive()
    assert np.all(kernels.convolve(kernels.heat(0.01), mu) >= 0)


def test_kernel_grid_mismatch(grid):
    sk = kernels.heat(1.0).sample(GridSpec(20.0, 1025))
    with pytest.raises(GridMismatchError):
        kernels.convolve(sk, Measure.dirac(grid))


def test_random_measure_is_seeded(grid):
    a = kernels.random_positive_measure(np.random.default_rng(5), grid)
    b = kernels.random_positive_measure(np.random.default_rng(5), grid)
    assert tv_norm(a - b) == 0.0


def test_fft_workers_env(monkeypatch):
    monkeypatch.setenv("SEMIGROUP_LAB_THREADS", "3")
    assert kernels.fft_workers() == 3
    monkeypatch.setenv("SEMIGROUP_LAB_THREADS", "junk")
    assert kernels.fft_workers() == 1
