"""Skorohod derivatives of density measures by finite differences.

For ``mu = rho dx`` the Skorohod derivative is ``rho' dx``; with the difference
quotient ``int (f(x - t) - f(x))/t dmu`` this sign is the one for which
``int f' dmu = -int f d(D mu)`` holds.  Measures with atoms are rejected.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .measure_core import GridSpec, Measure, TestFunction, pairing


def _require_density(mu: Measure) -> np.ndarray:
    if mu.has_atoms and np.any(mu.weights != 0):
        raise DomainError("not Skorohod differentiable: measure has atoms")
    if mu.density is None:
        return np.zeros(mu.grid.n)
    return mu.density


def skorohod_derivative(mu: Measure) -> Measure:
    """Centred first difference of the density, one-sided at the two ends."""
    rho = _require_density(mu)
    return Measure.from_density(mu.grid, np.gradient(rho, mu.grid.h, edge_order=1))


def laplacian(mu: Measure) -> Measure:
    """Second Skorohod derivative by the three-point stencil."""
    rho = _require_density(mu)
    h2 = mu.grid.h ** 2
    out = np.empty_like(rho)
    out[1:-1] = (rho[2:] - 2.0 * rho[1:-1] + rho[:-2]) / h2
    out[0] = (rho[0] - 2.0 * rho[1] + rho[2]) / h2
    out[-1] = (rho[-1] - 2.0 * rho[-2] + rho[-3]) / h2
    return Measure.from_density(mu.grid, out)


def difference_quotient(mu: Measure, f: TestFunction, t: float) -> float:
    """``int (f(x - t) - f(x))/t dmu``."""
    if t == 0:
        raise ValueError("t must be nonzero")
    rho = _require_density(mu)
    x = mu.grid.nodes
    return mu.grid.integrate((f.at(x - t) - f.at(x)) / t * rho)


def quotient_residual(mu: Measure, f: TestFunction, t: float) -> float:
    return abs(difference_quotient(mu, f, t) - pairing(f, skorohod_derivative(mu)))


def parts_residual(mu: Measure, f: TestFunction) -> float:
    """``|<f', mu> + <f, D mu>|``."""
    _require_density(mu)
    return abs(pairing(f.d1(), mu) + pairing(f, skorohod_derivative(mu)))


def double_parts_residual(mu: Measure, f: TestFunction) -> float:
    """``|<f'', mu> - <f, laplacian mu>|``."""
    _require_density(mu)
    return abs(pairing(f.d2(), mu) - pairing(f, laplacian(mu)))


def second_difference_l1(mu: Measure) -> float:
    lap = laplacian(mu).density
    return mu.grid.integrate(np.abs(lap))


def in_domain_proxy(density_fn, half_width: float = 20.0, sizes=(2049, 4097, 8193, 16385), growth: float = 1.5) -> bool:
    """Twice-differentiability proxy: the l1 norm of the discrete second
    derivative stays bounded as the grid is refined."""
    norms = []
    for n in sizes:
        g = GridSpec(half_width, n)
        norms.append(second_difference_l1(Measure.from_function(g, density_fn)))
    return all(b <= growth * a + 1e-12 for a, b in zip(norms, norms[1:]))
