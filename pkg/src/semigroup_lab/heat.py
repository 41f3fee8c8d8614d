"""The Gauss-Weierstrass semigroup on measures and its predual on functions.

``T(t) mu = gamma_t * mu`` acts on measures, ``T_*(t) f = phi_t * f`` on
bounded continuous functions, and the resolvent is convolution with the
closed-form kernel ``xi_lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from . import kernels
from .measure_core import DICTIONARY, GridSpec, Measure, TestFunction, pairing, seminorm


def apply_T(t: float, mu: Measure) -> Measure:
    """``T(t) mu``; for ``t > 0`` the result is a pure density measure."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return mu
    return Measure.from_density(mu.grid, kernels.convolve(kernels.heat(t), mu))


def resolvent(lam: float, mu: Measure) -> Measure:
    """``R(lam, A) mu = xi_lam * mu``."""
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    return Measure.from_density(mu.grid, kernels.convolve(kernels.resolvent(lam), mu))


def generator(mu: Measure) -> Measure:
    """``A mu``, half the second Skorohod derivative (the kernel has variance ``t``)."""
    from .skorohod import laplacian

    return 0.5 * laplacian(mu)


@dataclass(frozen=True, eq=False)
class SmoothedFunction(TestFunction):
    """``phi_t * f``: grid samples by FFT, off-grid values by direct quadrature."""

    __test__ = False

    base: TestFunction | None = None
    t: float = 0.0
    step: float = GridSpec().h

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.at(x.ravel()).reshape(x.shape)

    def sample(self, grid: GridSpec) -> np.ndarray:
        if self.t == 0:
            return self.base.sample(grid)
        n = grid.n
        # f on [-3L, 3L] so that every node sees the full kernel support [-2L, 2L]
        ext = grid.nodes[0] + (np.arange(3 * n - 2) - (n - 1)) * grid.h
        kern = kernels.heat_kernel(self.t, kernels.offsets(grid))
        return fftconvolve(self.base(ext), kern, mode="valid") * grid.h

    def at(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.t == 0:
            return self.base(x)
        half = 12.0 * np.sqrt(self.t)
        off = np.arange(-np.ceil(half / self.step), np.ceil(half / self.step) + 1) * self.step
        w = kernels.heat_kernel(self.t, off) * self.step
        return np.array([np.dot(w, self.base(xi - off)) for xi in x])


def smoothed(t: float, f: TestFunction, grid: GridSpec | None = None) -> SmoothedFunction:
    """``T_*(t) f`` as a test function."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return SmoothedFunction(
        name=f"T*({t:g}){f.name}",
        fn=f.fn,
        sup_norm=f.sup_norm,
        smoothness="smooth" if t > 0 else f.smoothness,
        nonnegative=f.nonnegative,
        base=f,
        t=float(t),
        step=(grid or GridSpec()).h,
    )


def apply_T_star(t: float, f: TestFunction, grid: GridSpec) -> np.ndarray:
    """Grid samples of ``phi_t * f``."""
    return smoothed(t, f, grid).sample(grid)


def duality_residual(f: TestFunction, t: float, mu: Measure) -> float:
    """``|<f, T(t) mu> - <T_*(t) f, mu>|``."""
    return abs(pairing(f, apply_T(t, mu)) - pairing(smoothed(t, f, mu.grid), mu))


def laplace_transform(values: np.ndarray, times: np.ndarray, lam: float) -> float:
    """Trapezoid approximation of ``int e^{-lam t} v(t) dt`` on ``times``."""
    return float(np.trapezoid(np.exp(-lam * times) * values, times))


def laplace_residual(lam: float, f: TestFunction, mu: Measure, horizon: float, steps: int) -> float:
    """Time-quadrature Laplace transform of ``<f, T(t) mu>`` against the kernel resolvent."""
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    times = np.linspace(0.0, horizon, steps + 1)
    vals = np.array([pairing(f, apply_T(t, mu)) for t in times])
    return abs(laplace_transform(vals, times, lam) - pairing(f, resolvent(lam, mu)))


@dataclass
class ProbeReport:
    values: list[float]
    decreasing: bool
    tends_to_zero: bool


def bicontinuity_probe(
    mu: Measure, f: TestFunction, t_seq: Sequence[float], tol: float = 1e-10, zero_tol: float = 1e-3
) -> ProbeReport:
    """``p_f(T(t) mu - mu)`` along a sequence ``t -> 0``."""
    vals = [seminorm(f, apply_T(t, mu) - mu) for t in t_seq]
    dec = all(b <= a + tol for a, b in zip(vals, vals[1:]))
    return ProbeReport(vals, dec, bool(vals[-1] <= zero_tol))


def equicontinuity_probe(
    mu_seq: Iterable[Measure], t0: float, f: TestFunction, s_points: int = 21
) -> list[float]:
    """``sup_{s in [0, t0]} p_f(T(s) mu_n)`` for each ``mu_n``."""
    s_grid = np.linspace(0.0, t0, s_points)
    return [max(seminorm(f, apply_T(s, mu)) for s in s_grid) for mu in mu_seq]


def semigroup_law_gap(t: float, s: float, mu: Measure, functions: Iterable[TestFunction] | None = None) -> float:
    """Max seminorm of ``T(t)T(s) mu - T(t+s) mu`` over a dictionary."""
    diff = apply_T(t, apply_T(s, mu)) - apply_T(t + s, mu)
    functions = DICTIONARY.values() if functions is None else functions
    return max(seminorm(f, diff) for f in functions)
