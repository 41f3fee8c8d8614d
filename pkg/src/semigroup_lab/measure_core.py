"""Bounded Borel measures on a truncated real line.

A :class:`Measure` is a finite set of atoms plus an optional Lebesgue density
sampled on a symmetric uniform grid.  Integrals against the density use the
composite trapezoid rule; atoms are always integrated exactly at their own
location.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import GridMismatchError, NotPositiveError


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[-half_width, half_width]`` with an odd node count."""

    half_width: float = 20.0
    n: int = 16385

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"n must be odd and >= 3, got {self.n}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    @property
    def center(self) -> int:
        return (self.n - 1) // 2

    @cached_property
    def nodes(self) -> np.ndarray:
        x = -self.half_width + self.h * np.arange(self.n)
        x[self.center] = 0.0
        x.flags.writeable = False
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        """Composite trapezoid weights."""
        w = np.full(self.n, self.h)
        w[0] = w[-1] = 0.5 * self.h
        w.flags.writeable = False
        return w

    def integrate(self, samples: np.ndarray) -> float:
        return float(np.dot(self.weights, samples))

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.abs(x) <= self.half_width))


@dataclass(frozen=True)
class SemigroupParams:
    """Type bound ``M``, growth bound ``omega`` and bi-density constant ``eta``."""

    M: float = 1.0
    omega: float = 0.0
    eta: float = 2.0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not self.eta > 1:
            raise ValueError("eta must be > 1")

    @property
    def smallness_threshold(self) -> float:
        """The ``1/(2 eta)`` bound used by the staged perturbation argument."""
        return 1.0 / (2.0 * self.eta)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Measure:
    """Atoms ``(locations, weights)`` plus an optional density on ``grid``.

    Atoms at coinciding locations are merged on construction, so locations
    are always sorted and pairwise distinct.
    """

    grid: GridSpec
    locations: np.ndarray = field(default_factory=lambda: np.empty(0))
    weights: np.ndarray = field(default_factory=lambda: np.empty(0))
    density: np.ndarray | None = None

    def __post_init__(self):
        loc = np.atleast_1d(np.asarray(self.locations, dtype=float))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if loc.shape != w.shape or loc.ndim != 1:
            raise ValueError("locations and weights must be 1-d arrays of equal length")
        if not np.all(np.isfinite(loc)) or not np.all(np.isfinite(w)):
            raise ValueError("atoms must be finite")
        if not self.grid.contains(loc):
            raise ValueError(f"atom locations must lie in [-{self.grid.half_width}, {self.grid.half_width}]")
        uniq, inv = np.unique(loc, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, w)
        object.__setattr__(self, "locations", _frozen(uniq))
        object.__setattr__(self, "weights", _frozen(merged))
        if self.density is not None:
            d = np.asarray(self.density, dtype=float)
            if d.shape != (self.grid.n,):
                raise GridMismatchError(f"density has shape {d.shape}, grid expects ({self.grid.n},)")
            if not np.all(np.isfinite(d)):
                raise ValueError("density samples must be finite")
            object.__setattr__(self, "density", _frozen(d))

    # constructors

    @classmethod
    def zero(cls, grid: GridSpec) -> "Measure":
        return cls(grid)

    @classmethod
    def dirac(cls, grid: GridSpec, x: float = 0.0, weight: float = 1.0) -> "Measure":
        return cls(grid, [x], [weight])

    @classmethod
    def atomic(cls, grid: GridSpec, atoms: Iterable[tuple[float, float]]) -> "Measure":
        atoms = list(atoms)
        if not atoms:
            return cls(grid)
        loc, w = zip(*atoms)
        return cls(grid, loc, w)

    @classmethod
    def from_density(cls, grid: GridSpec, samples) -> "Measure":
        return cls(grid, density=samples)

    @classmethod
    def from_function(cls, grid: GridSpec, fn: Callable[[np.ndarray], np.ndarray]) -> "Measure":
        return cls(grid, density=np.broadcast_to(fn(grid.nodes), (grid.n,)))

    # structure

    @property
    def has_atoms(self) -> bool:
        return self.locations.size > 0

    @property
    def has_density(self) -> bool:
        return self.density is not None

    def density_or_zeros(self) -> np.ndarray:
        return self.density if self.density is not None else np.zeros(self.grid.n)

    def is_positive(self) -> bool:
        return bool(np.all(self.weights >= 0) and (self.density is None or np.all(self.density >= 0)))

    def min_value(self) -> float:
        """Smallest atom weight or density sample (``inf`` for the empty measure)."""
        vals = [np.inf]
        if self.has_atoms:
            vals.append(self.weights.min())
        if self.density is not None:
            vals.append(self.density.min())
        return float(min(vals))

    def atoms_only(self) -> "Measure":
        return Measure(self.grid, self.locations, self.weights)

    def density_only(self) -> "Measure":
        return Measure(self.grid, density=self.density)

    def _check_grid(self, other: "Measure"):
        if self.grid != other.grid:
            raise GridMismatchError(f"{self.grid} != {other.grid}")

    def __add__(self, other: "Measure") -> "Measure":
        if not isinstance(other, Measure):
            return NotImplemented
        self._check_grid(other)
        if self.density is None and other.density is None:
            dens = None
        else:
            dens = self.density_or_zeros() + other.density_or_zeros()
        return Measure(
            self.grid,
            np.concatenate([self.locations, other.locations]),
            np.concatenate([self.weights, other.weights]),
            dens,
        )

    def __mul__(self, c: float) -> "Measure":
        c = float(c)
        dens = None if self.density is None else c * self.density
        return Measure(self.grid, self.locations, c * self.weights, dens)

    __rmul__ = __mul__

    def __neg__(self) -> "Measure":
        return self * -1.0

    def __sub__(self, other: "Measure") -> "Measure":
        return self + (-other)

    def __repr__(self) -> str:
        dens = "none" if self.density is None else f"{self.grid.n} samples"
        return f"Measure(atoms={self.locations.size}, density={dens}, L={self.grid.half_width}, n={self.grid.n})"


@dataclass(frozen=True, eq=False)
class TestFunction:
    """A named bounded continuous function with a known sup-norm bound."""

    __test__ = False  # keep pytest from collecting this class

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    smoothness: str = "smooth"  # "continuous" | "C2" | "smooth"
    derivative: Callable[[np.ndarray], np.ndarray] | None = None
    second_derivative: Callable[[np.ndarray], np.ndarray] | None = None
    nonnegative: bool = False

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.fn(x), dtype=float), x.shape)

    def sample(self, grid: GridSpec) -> np.ndarray:
        return self(grid.nodes)

    def at(self, x: np.ndarray) -> np.ndarray:
        """Values at arbitrary points (atom locations)."""
        return self(x)

    def d1(self) -> "TestFunction":
        if self.derivative is None:
            raise ValueError(f"{self.name} has no derivative evaluator")
        return TestFunction(f"d_{self.name}", self.derivative, math.inf, "continuous", self.second_derivative)

    def d2(self) -> "TestFunction":
        if self.second_derivative is None:
            raise ValueError(f"{self.name} has no second derivative evaluator")
        return TestFunction(f"dd_{self.name}", self.second_derivative, math.inf, "continuous")

    def positive_part(self) -> "TestFunction":
        return TestFunction(f"{self.name}+", lambda x: np.maximum(self(x), 0.0), self.sup_norm, "continuous", nonnegative=True)

    def negative_part(self) -> "TestFunction":
        return TestFunction(f"{self.name}-", lambda x: np.maximum(-self(x), 0.0), self.sup_norm, "continuous", nonnegative=True)


def _gauss_bump(x):
    return np.exp(-x * x)


def _tanh_d1(x):
    return 1.0 - np.tanh(x) ** 2


def _cos(k):
    return TestFunction(
        f"cos_{k}",
        lambda x: np.cos(k * x),
        1.0,
        derivative=lambda x: -k * np.sin(k * x),
        second_derivative=lambda x: -k * k * np.cos(k * x),
    )


DICTIONARY: dict[str, TestFunction] = {
    f.name: f
    for f in [
        TestFunction("const1", lambda x: np.ones_like(x), 1.0,
                     derivative=np.zeros_like, second_derivative=np.zeros_like, nonnegative=True),
        _cos(1),
        _cos(2),
        TestFunction("sin_1", np.sin, 1.0, derivative=np.cos, second_derivative=lambda x: -np.sin(x)),
        TestFunction("gauss_bump", _gauss_bump, 1.0,
                     derivative=lambda x: -2.0 * x * _gauss_bump(x),
                     second_derivative=lambda x: (4.0 * x * x - 2.0) * _gauss_bump(x),
                     nonnegative=True),
        TestFunction("tanh_1", np.tanh, 1.0, derivative=_tanh_d1,
                     second_derivative=lambda x: -2.0 * np.tanh(x) * _tanh_d1(x)),
        TestFunction("one_plus_cos", lambda x: 1.0 + np.cos(x), 2.0,
                     derivative=lambda x: -np.sin(x), second_derivative=lambda x: -np.cos(x),
                     nonnegative=True),
    ]
}


def test_function(name: str) -> TestFunction:
    try:
        return DICTIONARY[name]
    except KeyError:
        raise KeyError(f"unknown test function {name!r}; known: {sorted(DICTIONARY)}") from None


test_function.__test__ = False  # type: ignore[attr-defined]


def nonnegative_dictionary() -> list[TestFunction]:
    return [f for f in DICTIONARY.values() if f.nonnegative]


# pairing and norms

def pairing(f: TestFunction, mu: Measure) -> float:
    """``∫ f dμ``: exact on atoms, trapezoid on the density."""
    total = float(np.dot(mu.weights, f.at(mu.locations))) if mu.has_atoms else 0.0
    if mu.density is not None:
        total += mu.grid.integrate(f.sample(mu.grid) * mu.density)
    return total


def seminorm(f: TestFunction, mu: Measure) -> float:
    return abs(pairing(f, mu))


def tv_norm(mu: Measure) -> float:
    total = float(np.abs(mu.weights).sum())
    if mu.density is not None:
        total += mu.grid.integrate(np.abs(mu.density))
    return total


def jordan(mu: Measure) -> tuple[Measure, Measure]:
    """Componentwise positive and negative parts, ``mu = plus - minus``."""
    w = mu.weights
    plus_d = minus_d = None
    if mu.density is not None:
        plus_d = np.maximum(mu.density, 0.0)
        minus_d = np.maximum(-mu.density, 0.0)
    plus = Measure(mu.grid, mu.locations, np.maximum(w, 0.0), plus_d)
    minus = Measure(mu.grid, mu.locations, np.maximum(-w, 0.0), minus_d)
    return plus, minus


@dataclass
class ALReport:
    norm_gap: float
    seminorm_gaps: dict[str, float]

    @property
    def max_gap(self) -> float:
        return max([self.norm_gap, *self.seminorm_gaps.values()])


def check_al(mu: Measure, nu: Measure, functions: Iterable[TestFunction] | None = None) -> ALReport:
    """Additivity of the norm and of the seminorms ``p_f`` (``f >= 0``) on positives."""
    if not (mu.is_positive() and nu.is_positive()):
        raise NotPositiveError("AL additivity is only defined for positive measures")
    functions = nonnegative_dictionary() if functions is None else list(functions)
    s = mu + nu
    norm_gap = abs(tv_norm(s) - tv_norm(mu) - tv_norm(nu))
    gaps = {}
    for f in functions:
        if not f.nonnegative:
            raise ValueError(f"{f.name} is not a nonnegative test function")
        gaps[f.name] = abs(seminorm(f, s) - seminorm(f, mu) - seminorm(f, nu))
    return ALReport(norm_gap, gaps)


def split_seminorm_gap(f: TestFunction, mu: Measure) -> float:
    """|p_f(mu) - |<f+, mu> - <f-, mu>||, the positive-part reconstruction of ``p_f``."""
    rebuilt = pairing(f.positive_part(), mu) - pairing(f.negative_part(), mu)
    return abs(seminorm(f, mu) - abs(rebuilt))


def norming_ratio(mu: Measure, functions: Iterable[TestFunction] | None = None) -> float:
    """``sup_f p_f(mu)/||f||_inf`` over a finite dictionary, a lower bound for ``tv_norm``."""
    functions = DICTIONARY.values() if functions is None else functions
    return max((seminorm(f, mu) / f.sup_norm for f in functions), default=0.0)


# serialization

_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("exp", "sqrt", "cos", "sin", "tanh", "abs", "log", "where", "maximum", "minimum", "pi", "heaviside")
}


def eval_density_expr(expr: str, grid: GridSpec) -> np.ndarray:
    """Evaluate a numpy expression in ``x`` on the grid nodes."""
    ns = dict(_EXPR_NAMESPACE, x=grid.nodes.copy())
    vals = eval(expr, {"__builtins__": {}}, ns)  # noqa: S307 - restricted namespace
    return np.broadcast_to(np.asarray(vals, dtype=float), (grid.n,)).copy()


def measure_to_record(mu: Measure, density_file: str | Path | None = None) -> dict:
    rec: dict = {
        "atoms": [[float(x), float(w)] for x, w in zip(mu.locations, mu.weights)],
        "grid": {"L": mu.grid.half_width, "n": mu.grid.n},
    }
    if mu.density is not None:
        if density_file is None:
            raise ValueError("a density_file path is required to serialize a density")
        np.savetxt(density_file, mu.density, fmt="%.17g")
        rec["density_file"] = str(density_file)
    return rec


def measure_from_record(rec: Mapping, grid: GridSpec | None = None, base_dir: str | Path = ".") -> Measure:
    if "grid" in rec:
        g = GridSpec(float(rec["grid"]["L"]), int(rec["grid"]["n"]))
        if grid is not None and g != grid:
            raise GridMismatchError(f"record grid {g} does not match {grid}")
        grid = g
    if grid is None:
        raise ValueError("record has no grid and none was supplied")
    atoms = [(float(x), float(w)) for x, w in rec.get("atoms", [])]
    density = None
    if "density_file" in rec:
        path = Path(base_dir) / rec["density_file"]
        density = np.loadtxt(path, dtype=float).ravel()
    elif "density_expr" in rec:
        density = eval_density_expr(rec["density_expr"], grid)
    loc = [a[0] for a in atoms]
    w = [a[1] for a in atoms]
    return Measure(grid, loc, w, density)


def dumps_measure(mu: Measure, density_file: str | Path | None = None) -> str:
    return json.dumps(measure_to_record(mu, density_file))
