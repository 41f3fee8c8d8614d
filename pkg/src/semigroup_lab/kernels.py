"""Heat and resolvent kernels and grid convolution against measures.

Densities are convolved with a sampled kernel through a zero-padded real FFT,
atoms through exact kernel evaluation at ``node - location``.  The kernel is
sampled at every grid offset in ``[-2L, 2L]``; anything farther is dropped.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatchError
from .measure_core import GridSpec, Measure


def fft_workers() -> int:
    """Thread cap for FFTs, read from ``SEMIGROUP_LAB_THREADS``."""
    try:
        return max(1, int(os.environ.get("SEMIGROUP_LAB_THREADS", "1")))
    except ValueError:
        return 1


def heat_kernel(t: float, x):
    """Gaussian density of variance ``t``."""
    if not t > 0:
        raise ValueError(f"heat kernel needs t > 0, got {t}")
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def resolvent_kernel(lam: float, x):
    """``(2 lam)^(-1/2) exp(-sqrt(2 lam)|x|)``, the Laplace transform of the heat kernel."""
    if not lam > 0:
        raise ValueError(f"resolvent kernel needs lambda > 0, got {lam}")
    x = np.asarray(x, dtype=float)
    r = math.sqrt(2.0 * lam)
    return np.exp(-r * np.abs(x)) / r


eval_heat = heat_kernel
eval_resolvent_kernel = resolvent_kernel


@dataclass(frozen=True)
class Kernel:
    """A nonnegative even convolution kernel, ``kind`` in {"heat", "resolvent"}."""

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in ("heat", "resolvent"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.param > 0:
            raise ValueError(f"{self.kind} kernel parameter must be positive, got {self.param}")

    def __call__(self, x):
        if self.kind == "heat":
            return heat_kernel(self.param, x)
        return resolvent_kernel(self.param, x)

    @property
    def mass(self) -> float:
        return 1.0 if self.kind == "heat" else 1.0 / self.param

    def sample(self, grid: GridSpec) -> "SampledKernel":
        return SampledKernel(grid, self)


def heat(t: float) -> Kernel:
    return Kernel("heat", float(t))


def resolvent(lam: float) -> Kernel:
    return Kernel("resolvent", float(lam))


def fft_size(grid: GridSpec) -> int:
    return sfft.next_fast_len(2 * grid.n - 1, real=True)


def offsets(grid: GridSpec) -> np.ndarray:
    """Kernel sample points ``(k - (n-1)) h`` for ``k = 0..2n-2``."""
    return (np.arange(2 * grid.n - 1) - (grid.n - 1)) * grid.h


@lru_cache(maxsize=512)
def kernel_spectrum(grid: GridSpec, kernel: Kernel) -> np.ndarray:
    spec = sfft.rfft(kernel(offsets(grid)), fft_size(grid), workers=fft_workers())
    spec.flags.writeable = False
    return spec


def density_spectrum(grid: GridSpec, rho: np.ndarray) -> np.ndarray:
    return sfft.rfft(rho, fft_size(grid), workers=fft_workers())


def from_spectrum(grid: GridSpec, spec: np.ndarray) -> np.ndarray:
    """Inverse of a product spectrum, sliced back to the grid and scaled by ``h``."""
    full = sfft.irfft(spec, fft_size(grid), workers=fft_workers())
    return full[grid.n - 1 : 2 * grid.n - 1] * grid.h


def atom_contribution(grid: GridSpec, kernel, locations, weights) -> np.ndarray:
    """``sum_a w_a k(x_i - y_a)`` by direct evaluation."""
    out = np.zeros(grid.n)
    x = grid.nodes
    for y, w in zip(locations, weights):
        if w != 0.0:
            out += w * kernel(x - y)
    return out


@dataclass(frozen=True)
class SampledKernel:
    grid: GridSpec
    kernel: Kernel

    @property
    def samples(self) -> np.ndarray:
        return self.kernel(offsets(self.grid))

    @property
    def spectrum(self) -> np.ndarray:
        return kernel_spectrum(self.grid, self.kernel)


def convolve(g: SampledKernel | Kernel, mu: Measure) -> np.ndarray:
    """Density samples of ``g * mu`` on the grid of ``mu``."""
    if isinstance(g, Kernel):
        g = g.sample(mu.grid)
    if g.grid != mu.grid:
        raise GridMismatchError(f"kernel sampled on {g.grid}, measure lives on {mu.grid}")
    grid = mu.grid
    out = atom_contribution(grid, g.kernel, mu.locations, mu.weights)
    if mu.density is not None:
        out += from_spectrum(grid, density_spectrum(grid, mu.density) * g.spectrum)
    if mu.is_positive():
        # kernel >= 0, so any negative sample is FFT round-off
        np.maximum(out, 0.0, out=out)
    return out


def gaussian_measure(grid: GridSpec, t: float = 1.0, center: float = 0.0) -> Measure:
    """The centred Gaussian measure of variance ``t`` as a density measure."""
    return Measure.from_density(grid, heat_kernel(t, grid.nodes - center))


def random_positive_measure(rng: np.random.Generator, grid: GridSpec, max_atoms: int = 3, max_bumps: int = 3) -> Measure:
    """Random atoms in ``[-5, 5]`` plus a random mixture of Gaussian densities."""
    k = int(rng.integers(0, max_atoms + 1))
    loc = rng.uniform(-5.0, 5.0, k)
    w = rng.uniform(0.0, 1.0, k)
    dens = np.zeros(grid.n)
    for _ in range(int(rng.integers(1, max_bumps + 1))):
        dens += rng.uniform(0.0, 1.0) * heat_kernel(rng.uniform(0.2, 2.0), grid.nodes - rng.uniform(-3.0, 3.0))
    return Measure(grid, loc, w, dens)
