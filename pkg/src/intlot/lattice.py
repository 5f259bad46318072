"""Lattice tools: LLL, Schnorr-Euchner closest point, Babai rounding,
an exhaustive oracle, and simultaneous Dirichlet approximation.

Bases are given as rows (one generator per row).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import BudgetExceeded, DependentGenerators, SearchFailed
from .scalar import is_rational, scalar_round, scalar_sign, to_mpf

BRUTE_BUDGET = 10**8


@dataclass
class CVPResult:
    phi: tuple
    point: np.ndarray
    dist2: float
    status: str  # exact-optimal | best-within-radius


def as_basis(B) -> np.ndarray:
    B = np.array([[float(v) for v in row] for row in B], dtype=float)
    if B.ndim != 2 or B.shape[0] == 0:
        raise DependentGenerators("empty generator set")
    return B


def check_independent(B: np.ndarray, rtol: float = 1e-10):
    m, n = B.shape
    if m > n:
        raise DependentGenerators(f"{m} generators in dimension {n}")
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= rtol * max(sv[0], 1.0):
        raise DependentGenerators("generators are linearly dependent")


def gram_schmidt(B: np.ndarray):
    m = B.shape[0]
    Bs = np.zeros_like(B)
    mu = np.eye(m)
    for i in range(m):
        v = B[i].copy()
        for j in range(i):
            mu[i, j] = B[i] @ Bs[j] / (Bs[j] @ Bs[j])
            v -= mu[i, j] * Bs[j]
        Bs[i] = v
    return Bs, mu


def lll_reduce(B, delta: float = 0.99):
    """LLL-reduce the rows of ``B``; returns ``(reduced, U)`` with reduced = U @ B."""
    if not 0.25 < float(delta) < 1:
        raise ValueError("delta must lie in (1/4, 1)")
    delta = float(delta)
    B = as_basis(B)
    check_independent(B)
    m = B.shape[0]
    U = np.eye(m, dtype=np.int64)
    Bs, mu = gram_schmidt(B)
    k = 1
    while k < m:
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                B[k] -= q * B[j]
                U[k] -= q * U[j]
                mu[k, : j + 1] -= q * mu[j, : j + 1]
        nk = Bs[k] @ Bs[k]
        nk1 = Bs[k - 1] @ Bs[k - 1]
        if nk >= (delta - mu[k, k - 1] ** 2) * nk1:
            k += 1
        else:
            B[[k, k - 1]] = B[[k - 1, k]]
            U[[k, k - 1]] = U[[k - 1, k]]
            Bs, mu = gram_schmidt(B)
            k = max(k - 1, 1)
    return B, U


def lovasz_violations(B, delta: float = 0.99, tol: float = 1e-9) -> int:
    """Count size-reduction and Lovasz failures, via a QR factorisation."""
    B = as_basis(B)
    m = B.shape[0]
    _, R = np.linalg.qr(B.T)
    bad = 0
    for i in range(m):
        for j in range(i):
            if abs(R[j, i] / R[j, j]) > 0.5 + tol:
                bad += 1
    for k in range(1, m):
        mu = R[k - 1, k] / R[k - 1, k - 1]
        if R[k, k] ** 2 < (delta - mu**2) * R[k - 1, k - 1] ** 2 * (1 - tol):
            bad += 1
    return bad


def _project(B: np.ndarray, t: np.ndarray):
    coef, *_ = np.linalg.lstsq(B.T, t, rcond=None)
    return coef, B.T @ coef


def _result(B, t, phi, status):
    phi = tuple(int(v) for v in phi)
    point = np.asarray(phi, dtype=float) @ B
    r = t - point
    return CVPResult(phi, point, float(r @ r), status)


def _tie_tol(t: np.ndarray) -> float:
    return 1e-9 * max(1.0, float(t @ t))


def cvp_closest(B, target) -> CVPResult:
    """Closest lattice point (exact enumeration after LLL).

    Ties within a relative 1e-9 are broken by the lexicographically smallest
    coefficient vector in the original basis.
    """
    B = as_basis(B)
    t = np.asarray(target, dtype=float)
    check_independent(B)
    _, tp = _project(B, t)
    Bred, U = lll_reduce(B)
    Q, R = np.linalg.qr(Bred.T)
    y = Q.T @ tp
    m = Bred.shape[0]
    tol = _tie_tol(t)
    best = [math.inf]
    found: list[tuple[float, tuple]] = []
    u = [0] * m

    def visit(k, partial):
        c = (y[k] - sum(R[k, j] * u[j] for j in range(k + 1, m))) / R[k, k]
        u0 = round(c)
        step = 0
        while True:
            if step > 0:
                low = (abs(R[k, k]) * (step - 0.5)) ** 2
                if partial + low > best[0] + tol:
                    return
                cands = (u0 + step, u0 - step) if c >= u0 else (u0 - step, u0 + step)
            else:
                cands = (u0,)
            for v in cands:
                inc = (R[k, k] * (v - c)) ** 2
                tot = partial + inc
                if tot > best[0] + tol:
                    continue
                u[k] = v
                if k == 0:
                    if tot < best[0]:
                        best[0] = tot
                    found.append((tot, tuple(u)))
                else:
                    visit(k - 1, tot)
            step += 1

    visit(m - 1, 0.0)
    ties = [np.array(uu, dtype=np.int64) @ U for d, uu in found if d <= best[0] + tol]
    phi = min(tuple(int(v) for v in p) for p in ties)
    return _result(B, t, phi, "exact-optimal")


def babai_round(B, target) -> CVPResult:
    """Round least-squares coefficients (ties to even)."""
    B = as_basis(B)
    t = np.asarray(target, dtype=float)
    check_independent(B)
    coef, _ = _project(B, t)
    return _result(B, t, np.round(coef), "best-within-radius")


def cvp_bruteforce(B, target, radius: int) -> CVPResult:
    """Exhaustive search over the box ``[-radius, radius]^m``."""
    B = as_basis(B)
    t = np.asarray(target, dtype=float)
    m = B.shape[0]
    if m * (2 * radius + 1) ** m > BRUTE_BUDGET:
        raise BudgetExceeded(f"{(2 * radius + 1) ** m} points exceed the enumeration budget")
    g = np.arange(-radius, radius + 1)
    tol = _tie_tol(t)
    best, cands = math.inf, []
    if m == 1:
        heads = [()]
        tail = g[:, None]
    else:
        heads = list(itertools.product(g, repeat=max(m - 3, 0)))
        k = min(m, 3) if m > 1 else 1
        tail = np.stack(np.meshgrid(*([g] * k), indexing="ij"), -1).reshape(-1, k)
    for h in heads:
        pts = np.hstack([np.tile(np.array(h, dtype=float), (len(tail), 1)), tail]) if h else tail.astype(float)
        r = t - pts @ B
        d = np.einsum("ij,ij->i", r, r)
        lo = d.min()
        if lo <= best + tol:
            if lo < best:
                best = lo
                cands = [c for c in cands if c[0] <= best + tol]
            for i in np.nonzero(d <= best + tol)[0]:
                cands.append((d[i], tuple(int(v) for v in pts[i])))
    phi = min(p for d, p in cands if d <= best + tol)
    return _result(B, t, phi, "best-within-radius")


def _abs_err_ok(err, exponent: int, N: int) -> bool:
    """|err| < N^(-1/exponent), i.e. |err|^exponent * N < 1."""
    if is_rational(err):
        return abs(Fraction(err)) ** exponent * N < 1
    with mpmath.workdps(80):
        return abs(to_mpf(err)) ** exponent * N < 1


def dirichlet_simultaneous(alpha, N: int, dim: int | None = None):
    """Smallest ``q`` in 1..N with ``|alpha_i q - x_i| < N^(-1/dim)`` for all i.

    ``dim`` defaults to ``len(alpha)``; a larger value weakens the bound and
    is still covered by the existence theorem.
    """
    if N < 2:
        raise ValueError("N must be at least 2")
    m = dim or len(alpha)
    if m < len(alpha):
        raise ValueError("dim cannot be below the number of values")
    approx = [float(a) for a in alpha]
    bound = N ** (-1.0 / m)
    for q in range(1, N + 1):
        # cheap float screen, then exact confirmation
        if any(abs(a * q - round(a * q)) > bound + 1e-9 for a in approx):
            continue
        xs = [scalar_round(a * q) for a in alpha]
        if all(_abs_err_ok(a * q - x, m, N) for a, x in zip(alpha, xs)):
            return q, xs
    raise SearchFailed("no admissible q found (numerical pathology)")
