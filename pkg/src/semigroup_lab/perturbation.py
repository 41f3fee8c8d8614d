"""Positive perturbations ``B`` and the estimates that make them admissible.

Two kinds are provided: multiplication by an integrable potential ``psi >= 0``
and the rank-one operator ``mu -> <g, mu> y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from . import heat
from .errors import DomainError
from .measure_core import (
    GridSpec,
    Measure,
    SemigroupParams,
    TestFunction,
    pairing,
    seminorm,
    tv_norm,
)


def _exp_decay_antiderivative(x):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * -np.expm1(-np.abs(x))


def _sqrt_singular_antiderivative(cap):
    c0 = 1.0 / cap**2

    def G(x):
        x = np.asarray(x, dtype=float)
        a = np.abs(x)
        val = np.where(a <= c0, cap * a, np.where(a <= 1.0, 2.0 * np.sqrt(np.minimum(a, 1.0)) - 1.0 / cap, 2.0 - 1.0 / cap))
        return np.sign(x) * val

    return G


@dataclass(frozen=True, eq=False)
class PotentialPerturbation:
    """``B mu = psi . mu`` for a nonnegative integrable ``psi``.

    Densities are multiplied by exact cell averages of ``psi`` over
    ``[x_i - h/2, x_i + h/2]`` when an antiderivative is known, which keeps
    ``||psi||_1`` under discretisation; atoms are multiplied by ``psi(x)``.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    l1_norm: float
    antiderivative: Callable[[np.ndarray], np.ndarray] | None = None
    singular_points: tuple[float, ...] = ()
    scale: float = 1.0
    table: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @classmethod
    def exp_decay(cls) -> "PotentialPerturbation":
        return cls("exp_decay", lambda x: np.exp(-np.abs(x)), 2.0, _exp_decay_antiderivative)

    @classmethod
    def sqrt_singular(cls, cap: float = 100.0) -> "PotentialPerturbation":
        if not cap > 1:
            raise ValueError("cap must exceed 1")

        def psi(x):
            a = np.abs(np.asarray(x, dtype=float))
            with np.errstate(divide="ignore"):
                v = np.minimum(np.where(a > 0, a, 1.0) ** -0.5, cap)
            v = np.where(a == 0, cap, v)
            return np.where(a <= 1.0, v, 0.0)

        return cls(f"sqrt_singular({cap:g})", psi, 2.0 * (2.0 - 1.0 / cap), _sqrt_singular_antiderivative(cap), (0.0,))

    @classmethod
    def zero(cls) -> "PotentialPerturbation":
        return cls("zero", lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0, lambda x: np.zeros_like(np.asarray(x, dtype=float)))

    @classmethod
    def from_table(cls, x, values, name: str = "table") -> "PotentialPerturbation":
        x = np.asarray(x, dtype=float)
        v = np.asarray(values, dtype=float)
        if np.any(v < 0):
            raise ValueError("potential must be nonnegative")
        order = np.argsort(x)
        x, v = x[order], v[order]

        def psi(z):
            return np.interp(z, x, v, left=0.0, right=0.0)

        return cls(name, psi, float(np.trapezoid(v, x)), None, (), 1.0, (x, v))

    @classmethod
    def from_table_file(cls, path: str | Path) -> "PotentialPerturbation":
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls.from_table(data[:, 0], data[:, 1], name=f"table:{path}")

    @classmethod
    def from_spec(cls, spec: str, base_dir: str | Path = ".") -> "PotentialPerturbation":
        """Parse ``exp_decay``, ``sqrt_singular(cap)``, ``zero`` or ``table:<file>``."""
        spec = spec.strip()
        if spec == "exp_decay":
            return cls.exp_decay()
        if spec == "zero":
            return cls.zero()
        if spec.startswith("sqrt_singular"):
            inner = spec[len("sqrt_singular"):].strip("() ")
            return cls.sqrt_singular(float(inner) if inner else 100.0)
        if spec.startswith("table:"):
            return cls.from_table_file(Path(base_dir) / spec[len("table:"):])
        raise ValueError(f"unknown potential spec {spec!r}")

    def scaled(self, c: float) -> "PotentialPerturbation":
        return PotentialPerturbation(
            self.name, self.fn, self.l1_norm, self.antiderivative, self.singular_points, self.scale * c, self.table
        )

    @property
    def norm_l1(self) -> float:
        return self.scale * self.l1_norm

    def __call__(self, x):
        return self.scale * np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)

    def cell_average(self, grid: GridSpec) -> np.ndarray:
        x = grid.nodes
        if self.antiderivative is None:
            return self(x)
        G = self.antiderivative
        return self.scale * (G(x + 0.5 * grid.h) - G(x - 0.5 * grid.h)) / grid.h

    def apply(self, mu: Measure) -> Measure:
        if mu.has_atoms:
            hit = [p for p in self.singular_points if np.any((mu.locations == p) & (mu.weights != 0))]
            if hit:
                raise DomainError(f"atom at singular point {hit[0]} of {self.name}")
        dens = None if mu.density is None else mu.density * self.cell_average(mu.grid)
        return Measure(mu.grid, mu.locations, mu.weights * self(mu.locations), dens)


@dataclass(frozen=True, eq=False)
class RankOnePerturbation:
    """``B mu = <g, mu> y`` with ``g >= 0`` bounded continuous and ``y >= 0``."""

    g: TestFunction
    y: Measure
    scale: float = 1.0

    def __post_init__(self):
        if not self.g.nonnegative:
            raise ValueError(f"functional {self.g.name} must be nonnegative")
        if not self.y.is_positive():
            raise ValueError("y must be a positive measure")

    def scaled(self, c: float) -> "RankOnePerturbation":
        return RankOnePerturbation(self.g, self.y, self.scale * c)

    def apply(self, mu: Measure) -> Measure:
        return (self.scale * pairing(self.g, mu)) * self.y


Perturbation = Union[PotentialPerturbation, RankOnePerturbation]


def apply_B(B: Perturbation, mu: Measure) -> Measure:
    return B.apply(mu)


def analytic_bound(B: Perturbation, lam: float, params: SemigroupParams = SemigroupParams()) -> float:
    """Upper bound for ``||B R(lam, A)||``.

    Potential: ``||psi||_1 / sqrt(2 lam)`` (Young with ``||xi_lam||_inf``).
    Rank-one: ``||g||_inf M ||y|| / |lam - omega|`` (Hille-Yosida).
    """
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    if isinstance(B, PotentialPerturbation):
        return B.norm_l1 / math.sqrt(2.0 * lam)
    return B.scale * B.g.sup_norm * params.M * tv_norm(B.y) / abs(lam - params.omega)


@dataclass
class NormEstimate:
    empirical: float
    analytic: float

    @property
    def ok(self) -> bool:
        return self.empirical <= self.analytic + 1e-6


def composed_norm_estimate(B: Perturbation, lam: float, probes: Iterable[Measure]) -> NormEstimate:
    analytic = analytic_bound(B, lam)
    emp = 0.0
    for mu in probes:
        n = tv_norm(mu)
        if n > 0:
            emp = max(emp, tv_norm(apply_B(B, heat.resolvent(lam, mu))) / n)
    return NormEstimate(emp, analytic)


def mv_integral(B: Perturbation, mu: Measure, t0: float, lam: float = 0.0, steps: int = 200) -> float:
    """``(1/||mu||) int_0^t0 ||e^{-lam s} B T(s) mu|| ds`` by the trapezoid rule."""
    if not t0 > 0:
        raise ValueError("t0 must be positive")
    norm = tv_norm(mu)
    if norm == 0:
        raise ValueError("mv_integral is normalised by ||mu||, which is zero")
    s = np.linspace(0.0, t0, steps + 1)
    vals = np.array([math.exp(-lam * si) * tv_norm(apply_B(B, heat.apply_T(si, mu))) for si in s])
    return float(np.trapezoid(vals, s)) / norm


def locality_probe(
    B: Perturbation,
    lam: float,
    f: TestFunction,
    q: TestFunction,
    eps: float,
    probes: Iterable[Measure],
) -> float:
    """Smallest ``K`` with ``p_f(B R mu) <= K p_q(mu) + eps ||mu||`` on the probe set.

    A falsification probe: a finite ``K`` here proves nothing, but a probe with
    positive slack and ``p_q(mu) = 0`` refutes the candidate ``q``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    best = 0.0
    for mu in probes:
        num = seminorm(f, apply_B(B, heat.resolvent(lam, mu))) - eps * tv_norm(mu)
        if num <= 0:
            continue
        den = seminorm(q, mu)
        if den == 0:
            raise DomainError(f"candidate q={q.name} fails: p_q(mu) = 0 with positive slack {num:.3g}")
        best = max(best, num / den)
    return best


def lp_split(psi: np.ndarray, cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """Split samples into an integrable part ``psi > c`` and a bounded part ``psi <= c``."""
    if not cutoff > 0:
        raise ValueError("cutoff must be positive")
    psi = np.asarray(psi, dtype=float)
    big = psi > cutoff
    return np.where(big, psi, 0.0), np.where(big, 0.0, psi)
