"""Finite-dimensional AL-space oracle: ``R^n`` with the l1 norm.

Metzler generators ``A``, entrywise nonnegative ``B``, exact resolvents by
dense inversion and matrix exponentials by scaling and squaring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, RefusedError

EXPM_TOL = 1e-13
MAX_DIM = 8


def l1_norm(M: np.ndarray) -> float:
    """Induced l1 operator norm (max column sum); plain l1 norm for vectors."""
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        return float(np.abs(M).sum())
    return float(np.abs(M).sum(axis=0).max())


def is_metzler(A: np.ndarray) -> bool:
    A = np.asarray(A, dtype=float)
    off = A[~np.eye(A.shape[0], dtype=bool)]
    return bool(np.all(off >= 0))


@dataclass(frozen=True, eq=False)
class MatrixSystem:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
            raise ValueError("A and B must be square matrices of equal shape")
        if A.shape[0] > MAX_DIM:
            raise ValueError(f"dimension capped at {MAX_DIM}")
        if not is_metzler(A):
            raise ValueError("A must be Metzler (nonnegative off-diagonal)")
        if np.any(B < 0):
            raise ValueError("B must be entrywise nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def random(cls, rng: np.random.Generator, n: int | None = None) -> "MatrixSystem":
        """Off-diagonals U[0,1]; diagonal ``-(row sum) - U[0,1]``; ``B`` entries U[0,1]."""
        n = int(rng.integers(2, MAX_DIM + 1)) if n is None else n
        A = rng.uniform(0.0, 1.0, (n, n))
        np.fill_diagonal(A, 0.0)
        np.fill_diagonal(A, -A.sum(axis=1) - rng.uniform(0.0, 1.0, n))
        B = rng.uniform(0.0, 1.0, (n, n))
        return cls(A, B)


def expm(M: np.ndarray, t: float = 1.0) -> np.ndarray:
    """``exp(tM)`` by scaling and squaring of a truncated Taylor series."""
    if t < 0:
        raise ValueError("t must be >= 0")
    X = t * np.asarray(M, dtype=float)
    n = X.shape[0]
    nrm = l1_norm(X)
    s = max(0, int(math.ceil(math.log2(nrm / 0.5)))) if nrm > 0.5 else 0
    X = X / 2**s
    result = np.eye(n)
    term = np.eye(n)
    xn = l1_norm(X)
    for k in range(1, 60):
        term = term @ X / k
        result = result + term
        # remaining tail is bounded by the next term times a geometric factor
        if l1_norm(term) * xn / (k + 1) / (1 - xn / (k + 2)) < EXPM_TOL * 1e-3:
            break
    for _ in range(s):
        result = result @ result
    return result


def taylor_expm(M: np.ndarray, t: float, K: int) -> np.ndarray:
    """Unscaled partial sum ``sum_{k<=K} (tM)^k / k!`` for cross-checking small ``tM``."""
    X = t * np.asarray(M, dtype=float)
    result = np.eye(X.shape[0])
    term = np.eye(X.shape[0])
    for k in range(1, K + 1):
        term = term @ X / k
        result = result + term
    return result


def resolvent(lam: float, M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    return np.linalg.inv(lam * np.eye(M.shape[0]) - M)


@dataclass
class NeumannCheck:
    difference: float
    ratio: float
    tail_bound: float


def neumann_vs_direct(A, B, lam: float, N: int = 20) -> NeumannCheck:
    """Max-entry gap between ``(lam - A - B)^{-1}`` and its Neumann partial sum."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    RA = resolvent(lam, A)
    BR = B @ RA
    ratio = l1_norm(BR)
    if ratio >= 1:
        raise RefusedError(f"||B R(lam, A)|| = {ratio:.4g} >= 1")
    direct = resolvent(lam, A + B)
    acc = np.eye(A.shape[0])
    power = np.eye(A.shape[0])
    for _ in range(N):
        power = power @ BR
        acc = acc + power
    series = RA @ acc
    tail = l1_norm(RA) * ratio ** (N + 1) / (1 - ratio)
    return NeumannCheck(float(np.abs(direct - series).max()), ratio, tail)


def positive_generation(M: np.ndarray, lam: float, times=(0.1, 1.0, 5.0), tol: float = 1e-12) -> bool:
    """Resolvent at ``lam`` and ``exp(tM)`` at each time are entrywise >= -tol."""
    if np.any(resolvent(lam, M) < -tol):
        return False
    return all(np.all(expm(M, t) >= -tol) for t in times)


def voigt_property_test(trials: int = 200, seed: int = 0) -> int:
    """Random Metzler ``A`` plus nonnegative ``B``: count failures of positive generation."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(trials):
        sysm = MatrixSystem.random(rng)
        lam = l1_norm(sysm.A) + l1_norm(sysm.B) + 1.0
        if not positive_generation(sysm.A + sysm.B, lam):
            failures += 1
    return failures


def resolvent_chain_gap(A, B, lam: float, steps=(0.0, 0.25, 0.5, 0.75, 1.0)) -> float:
    """Largest violation of ``R(lam,A) <= R(lam,A+sB) <= R(lam,A+B)`` along ``steps``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    chain = [resolvent(lam, A + s * B) for s in steps]
    worst = 0.0
    for lo, hi in zip(chain, chain[1:]):
        worst = max(worst, float((lo - hi).max()))
    return max(worst, 0.0)


def dyson_terms(A, B, t: float, N: int, m: int) -> list[np.ndarray]:
    """``U_k(s_i)`` for ``k = 0..N`` on ``m`` uniform nodes of ``[0, t]``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    nodes = np.linspace(0.0, t, m)
    ds = nodes[1] - nodes[0]
    E = np.array([expm(A, l * ds) for l in range(m)])
    level = E.copy()
    out = [level]
    for _ in range(N):
        src = np.einsum("ab,jbc->jac", B, level)
        nxt = np.zeros_like(level)
        for i in range(1, m):
            w = np.full(i + 1, ds)
            w[0] = w[-1] = 0.5 * ds
            nxt[i] = np.einsum("j,jab,jbc->ac", w, E[i - np.arange(i + 1)], src[: i + 1])
        level = nxt
        out.append(level)
    return out


def dyson_vs_expm(A, B, t: float, N: int = 12, m: int = 256, tail_tol: float = 1e-6) -> float:
    """``max |sum_{k<=N} U_k(t) - exp(t(A+B))|``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if t == 0:
        return 0.0
    terms = dyson_terms(A, B, t, N, m)
    tail = l1_norm(terms[-1][-1])
    if tail > tail_tol * max(1.0, l1_norm(terms[0][-1])) and np.any(B):
        raise ConvergenceError(f"Dyson tail {tail:.3g} at N={N}")
    S = sum(level[-1] for level in terms)
    return float(np.abs(S - expm(A + B, t)).max())


def vop_residuals(A, B, t: float, m: int = 256) -> dict[int, float]:
    """Max-entry residual of ``e^{tA} - S(t) - sign int_0^t e^{(t-s)A} B S(s) ds``, ``S = e^{t(A+B)}``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    nodes = np.linspace(0.0, t, m)
    w = np.full(m, nodes[1] - nodes[0])
    w[0] = w[-1] = 0.5 * w[0]
    integral = sum(wi * expm(A, t - s) @ B @ expm(A + B, s) for wi, s in zip(w, nodes))
    base = expm(A, t) - expm(A + B, t)
    return {sgn: float(np.abs(base - sgn * integral).max()) for sgn in (1, -1)}
