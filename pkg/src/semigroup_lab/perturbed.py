"""The perturbed semigroup ``S(t)`` generated by ``A + B``.

Three constructions are provided:

* :func:`dyson_apply` - the Duhamel iteration ``U_0 = T``,
  ``U_{k+1}(t) = int_0^t T(t-s) B U_k(s) ds`` on a uniform trapezoid grid;
* :func:`trotter_apply` - the Lie product ``(T(t/m) e^{(t/m) psi})^m``
  (multiplicative ``B`` only), positive by construction;
* :func:`neumann_resolvent` - ``R(lam, A) sum_n (B R(lam, A))^n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from . import heat, kernels
from .errors import ConvergenceError, DomainError, RefusedError
from .measure_core import (
    DICTIONARY,
    Measure,
    SemigroupParams,
    TestFunction,
    nonnegative_dictionary,
    pairing,
    seminorm,
    tv_norm,
)
from .perturbation import Perturbation, PotentialPerturbation, analytic_bound, apply_B

DYSON_TAIL_TOL = 1e-6
NEUMANN_TAIL_TOL = 1e-8


def max_seminorm(mu: Measure, functions: Iterable[TestFunction] | None = None) -> float:
    functions = DICTIONARY.values() if functions is None else functions
    return max(seminorm(f, mu) for f in functions)


def _trapezoid_weights(i: int, ds: float) -> np.ndarray:
    w = np.full(i + 1, ds)
    w[0] = w[-1] = 0.5 * ds
    return w


def duhamel_path(nodes: np.ndarray, sources: Sequence[Measure], positive: bool = False) -> list[Measure]:
    """``int_0^{s_i} T(s_i - s) nu(s) ds`` at every node ``s_i`` by the trapezoid rule.

    ``sources[j]`` is ``nu(s_j)``.  Nodes must be uniform.  Densities go
    through one FFT each; the lag kernels ``T(l ds)`` are shared.
    """
    m = len(nodes)
    grid = sources[0].grid
    ds = nodes[1] - nodes[0] if m > 1 else 0.0
    nspec = kernels.fft_size(grid) // 2 + 1
    specs = np.zeros((m, nspec), dtype=complex)
    for j, nu in enumerate(sources):
        if nu.density is not None and np.any(nu.density != 0):
            specs[j] = kernels.density_spectrum(grid, nu.density)
    lags = np.zeros((m, nspec), dtype=complex)
    for lag in range(1, m):
        lags[lag] = kernels.kernel_spectrum(grid, kernels.heat(lag * ds))
    atom_sources = [j for j, nu in enumerate(sources) if nu.has_atoms and np.any(nu.weights != 0)]

    # sum_{j<i} K_{i-j} F_j for all i at once: a causal convolution along the node axis
    causal = fftconvolve(lags, specs, axes=0)[:m]
    out = [Measure.from_density(grid, np.zeros(grid.n))]
    for i in range(1, m):
        w = _trapezoid_weights(i, ds)
        acc = ds * causal[i] - 0.5 * ds * lags[i] * specs[0]
        dens = kernels.from_spectrum(grid, acc)
        for ja in atom_sources:
            if ja < i:
                nu = sources[ja]
                dens += w[ja] * kernels.atom_contribution(grid, kernels.heat((i - ja) * ds), nu.locations, nu.weights)
        if positive:
            # every term is a positive kernel against a positive source
            np.maximum(dens, 0.0, out=dens)
        out.append(Measure.from_density(grid, dens) + w[i] * sources[i])
    return out


@dataclass
class DysonResult:
    measure: Measure
    tail: float
    converged: bool
    nodes: np.ndarray = field(repr=False)
    path: list[Measure] = field(repr=False)
    terms: list[float] = field(default_factory=list)


def dyson_path(B: Perturbation, t: float, mu: Measure, N: int = 8, m: int = 64) -> DysonResult:
    """Partial Dyson sums ``S_N(s_i) mu`` at all ``m`` uniform nodes of ``[0, t]``."""
    if N < 1 or m < 8:
        raise ValueError("need N >= 1 and m >= 8")
    if not t > 0:
        raise ValueError("t must be positive")
    nodes = np.linspace(0.0, t, m)
    positive = mu.is_positive()
    level = [heat.apply_T(s, mu) for s in nodes]
    total = list(level)
    terms = [tv_norm(level[-1])]
    for _ in range(N):
        sources = [apply_B(B, u) for u in level]
        level = duhamel_path(nodes, sources, positive=positive)
        total = [a + b for a, b in zip(total, level)]
        terms.append(tv_norm(level[-1]))
    norm = tv_norm(mu)
    tail = terms[-1]
    return DysonResult(total[-1], tail, tail <= DYSON_TAIL_TOL * norm, nodes, total, terms)


def dyson_apply(B: Perturbation, t: float, mu: Measure, N: int = 8, m: int = 64) -> DysonResult:
    """``S_N(t) mu``; ``converged`` is False when ``||U_N(t) mu|| >= 1e-6 ||mu||``."""
    if t == 0:
        return DysonResult(mu, 0.0, True, np.zeros(1), [mu])
    return dyson_path(B, t, mu, N, m)


def _trotter_factors(B: PotentialPerturbation, tau: float, mu: Measure):
    return np.exp(tau * B.cell_average(mu.grid)), np.exp(tau * B(mu.locations))


def trotter_path(B: Perturbation, t: float, mu: Measure, m: int, record_every: int | None = None) -> list[Measure]:
    """States of ``(T(tau) e^{tau psi})^k mu``, ``tau = t/m``, every ``record_every`` steps."""
    if not isinstance(B, PotentialPerturbation):
        raise TypeError("Lie-Trotter splitting needs a multiplicative perturbation; use dyson_apply")
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return [mu]
    if m < 16:
        raise ValueError("need m >= 16 Trotter steps")
    record_every = record_every or m
    tau = t / m
    grid = mu.grid
    dens_factor, atom_factor = _trotter_factors(B, tau, mu)
    positive = mu.is_positive()
    spec = kernels.kernel_spectrum(grid, kernels.heat(tau))
    # first step handles atoms exactly; afterwards the state is a density
    first = Measure(grid, mu.locations, mu.weights * atom_factor,
                    None if mu.density is None else mu.density * dens_factor)
    rho = kernels.convolve(kernels.heat(tau), first)
    out = [mu]
    if record_every == 1:
        out.append(Measure.from_density(grid, rho))
    for k in range(2, m + 1):
        rho = kernels.from_spectrum(grid, kernels.density_spectrum(grid, rho * dens_factor) * spec)
        if positive:
            np.maximum(rho, 0.0, out=rho)
        if k % record_every == 0:
            out.append(Measure.from_density(grid, rho))
    return out


def trotter_apply(B: Perturbation, t: float, mu: Measure, m: int = 2048) -> Measure:
    return trotter_path(B, t, mu, m)[-1]


@dataclass
class NeumannResult:
    measure: Measure
    tail: float
    converged: bool
    ratio_bound: float
    min_partial: float
    terms: list[float] = field(default_factory=list)


def neumann_resolvent(B: Perturbation, lam: float, mu: Measure, N: int = 30) -> NeumannResult:
    """``R(lam, A) sum_{n<=N} (B R(lam, A))^n mu``.

    Refused when the analytic bound on ``||B R(lam, A)||`` is not below one.
    ``tail`` is the norm of the last retained term ``(B R)^N mu``.
    """
    ratio = analytic_bound(B, lam)
    if ratio >= 1:
        raise RefusedError(f"||B R(lam, A)|| bound {ratio:.4g} >= 1 at lambda={lam}")
    nu = mu
    total = None
    terms = []
    min_partial = math.inf
    for n in range(N + 1):
        terms.append(tv_norm(nu))
        r = heat.resolvent(lam, nu)
        total = r if total is None else total + r
        min_partial = min(min_partial, total.min_value())
        if n < N:
            nu = apply_B(B, r)
    tail = terms[-1]
    converged = tail <= NEUMANN_TAIL_TOL * max(1.0, tv_norm(mu))
    return NeumannResult(total, tail, converged, ratio, min_partial, terms)


@dataclass
class StageReport:
    stage_norms: list[float]
    analytic_bounds: list[float]
    threshold: float
    passed: list[bool]
    monotone: bool

    @property
    def ok(self) -> bool:
        return all(self.passed)


def default_probes(grid) -> list[Measure]:
    return [
        Measure.dirac(grid, 0.0),
        Measure.dirac(grid, 0.5),
        Measure.dirac(grid, -2.0),
        kernels.gaussian_measure(grid, 1.0),
        kernels.gaussian_measure(grid, 0.25, center=1.0),
    ]


def staged_bound_check(
    B: Perturbation,
    lam: float,
    n_stages: int,
    eta: float = 2.0,
    probes: Sequence[Measure] | None = None,
    N: int = 40,
) -> StageReport:
    """Check ``||(1/n) B R(lam, A + (j/n) B)|| < 1/(2 eta)`` for ``j = 0..n-1``.

    Each intermediate resolvent is a Neumann series around ``A``.  Also probes
    the ordering ``R(lam, A) <= R(lam, A + sB) <= R(lam, A + B)`` termwise on
    positive probes against nonnegative test functions.
    """
    threshold = SemigroupParams(eta=eta).smallness_threshold
    a = analytic_bound(B, lam)
    if probes is None:
        grid = B.y.grid if hasattr(B, "y") else None
        if grid is None:
            raise ValueError("probes are required for a potential perturbation")
        probes = default_probes(grid)
    norms, bounds, passed = [], [], []
    pairings = []
    for j in range(n_stages + 1):
        s = j / n_stages
        if s * a >= 1:
            raise RefusedError(f"stage {j}: base ratio {s * a:.4g} >= 1")
        Bs = B.scaled(s)
        stage_vals, worst = [], 0.0
        for mu in probes:
            res = neumann_resolvent(Bs, lam, mu, N)
            if not res.converged:
                raise ConvergenceError(f"stage {j}: Neumann tail {res.tail:.3g}")
            stage_vals.append([pairing(f, res.measure) for f in nonnegative_dictionary()])
            nm = tv_norm(mu)
            if nm > 0 and j < n_stages:
                worst = max(worst, tv_norm(apply_B(B, res.measure)) / (n_stages * nm))
        pairings.append(stage_vals)
        if j < n_stages:
            norms.append(worst)
            bounds.append(a / (n_stages * (1.0 - s * a)))
            passed.append(worst < threshold)
    arr = np.asarray(pairings)
    monotone = bool(np.all(np.diff(arr, axis=0) >= -1e-12))
    return StageReport(norms, bounds, threshold, passed, monotone)


def vop_residual(B: Perturbation, t: float, mu: Measure, sign: int, N: int = 8, m: int = 64) -> float:
    """Max dictionary seminorm of ``T(t)mu - S(t)mu - sign int_0^t T(t-s) B S(s) mu ds``."""
    return vop_residuals(B, t, mu, N, m)[sign]


def vop_residuals(B: Perturbation, t: float, mu: Measure, N: int = 8, m: int = 64) -> dict[int, float]:
    """Residuals of the variation-of-parameters identity for both signs."""
    if t == 0:
        return {1: 0.0, -1: 0.0}
    res = dyson_path(B, t, mu, N, m)
    if not res.converged:
        raise ConvergenceError(f"Dyson tail {res.tail:.3g} at t={t}")
    sources = [apply_B(B, s_mu) for s_mu in res.path]
    integral = duhamel_path(res.nodes, sources, positive=mu.is_positive())[-1]
    base = heat.apply_T(t, mu) - res.measure
    return {sgn: max_seminorm(base - sgn * integral) for sgn in (1, -1)}


@dataclass
class GeneratorReport:
    h: list[float]
    errors: list[float]

    @property
    def ratios(self) -> list[float]:
        return [a / b for a, b in zip(self.errors, self.errors[1:])]


def generator_check(
    B: Perturbation, mu: Measure, h_seq: Sequence[float], N: int = 8, m: int = 64
) -> GeneratorReport:
    """Max seminorm of ``(S(h)mu - mu)/h - (A mu + B mu)`` for each ``h``."""
    if mu.has_atoms:
        raise DomainError("generator check needs an atom-free measure in dom(A)")
    target = heat.generator(mu) + apply_B(B, mu)
    errs = []
    for h in h_seq:
        res = dyson_apply(B, h, mu, N, m)
        if not res.converged:
            raise ConvergenceError(f"Dyson tail {res.tail:.3g} at h={h}")
        errs.append(max_seminorm((1.0 / h) * (res.measure - mu) - target))
    return GeneratorReport(list(h_seq), errs)


def perturbed_path(B: Perturbation, times: np.ndarray, mu: Measure, substeps: int = 4, N: int = 12) -> list[Measure]:
    """``S(t_i) mu`` on a uniform time grid starting at 0.

    Multiplicative ``B`` uses Lie-Trotter with ``substeps`` steps per interval;
    otherwise the Dyson path on the same nodes.
    """
    times = np.asarray(times, dtype=float)
    steps = len(times) - 1
    if isinstance(B, PotentialPerturbation):
        return trotter_path(B, times[-1], mu, max(16, steps * substeps), record_every=substeps)
    res = dyson_path(B, times[-1], mu, N, len(times))
    return res.path


def positivity_scan(B: Perturbation, mu: Measure, t_grid: Iterable[float], m: int = 256, method: str | None = None) -> float:
    """Minimum atom weight or density sample of ``S(t) mu`` over ``t_grid``."""
    if method is None:
        method = "trotter" if isinstance(B, PotentialPerturbation) else "dyson"
    lo = math.inf
    for t in t_grid:
        if t == 0:
            s = mu
        elif method == "trotter":
            s = trotter_apply(B, t, mu, m)
        else:
            s = dyson_apply(B, t, mu).measure
        lo = min(lo, s.min_value())
    return lo


def laplace_consistency(
    B: Perturbation,
    lam: float,
    f: TestFunction,
    mu: Measure,
    horizon: float,
    steps: int,
    substeps: int = 4,
    N: int = 30,
) -> float:
    """``|int_0^H e^{-lam t} <f, S(t) mu> dt - <f, R(lam, A + B) mu>|``."""
    neu = neumann_resolvent(B, lam, mu, N)
    if not neu.converged:
        raise ConvergenceError(f"Neumann tail {neu.tail:.3g}")
    times = np.linspace(0.0, horizon, steps + 1)
    path = perturbed_path(B, times, mu, substeps)
    vals = np.array([pairing(f, s) for s in path])
    return abs(heat.laplace_transform(vals, times, lam) - pairing(f, neu.measure))
