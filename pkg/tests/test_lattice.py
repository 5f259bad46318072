import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intlot import io
from intlot.errors import BudgetExceeded, DependentGenerators
from intlot.lattice import (babai_round, cvp_bruteforce, cvp_closest, dirichlet_simultaneous,
                            gram_schmidt, lll_reduce, lovasz_violations)
from intlot.scalar import lin
from intlot.varhedge import VarHedgeProblem


def table1_lattice(N=1):
    m = io.load_model(io.data_path("models", "table1"))
    C = io.load_claim(io.data_path("claims", "table1"), m)
    P = io.load_measure(io.data_path("measures", "table1"))
    return VarHedgeProblem(m, C, P, N).lattice()


def test_lll_identity():
    R, U = lll_reduce(np.eye(2))
    assert np.allclose(R, np.eye(2)) and np.allclose(U, np.eye(2))


def test_lll_finds_short_vector():
    B = np.array([[1.0, 0.0], [0.999, 0.001]])
    R, U = lll_reduce(B)
    assert lovasz_violations(R) == 0
    assert np.allclose(np.asarray(U, dtype=float) @ B, R)
    assert min(np.linalg.norm(r) for r in R) < 0.002


def test_lll_table1():
    B, _ = table1_lattice()
    R, U = lll_reduce(B)
    assert lovasz_violations(R) == 0
    assert abs(round(np.linalg.det(np.asarray(U, dtype=float)))) == 1


def test_dependent_generators():
    with pytest.raises(DependentGenerators):
        cvp_closest([[1, 2], [2, 4]], [0, 0])


def test_cvp_rounding_region():
    r = cvp_closest(np.eye(2), [0.4, -0.3])
    assert tuple(r.phi) == (0, 0) and abs(r.dist2 - 0.25) < 1e-12
    assert r.status == "exact-optimal"


def test_cvp_lattice_point():
    B = np.array([[2.0, 1.0], [0.0, 3.0]])
    r = cvp_closest(B, np.array([2, -1]) @ B)
    assert tuple(r.phi) == (2, -1) and r.dist2 < 1e-18


def _brute(B, t, R):
    best = None
    for phi in itertools.product(range(-R, R + 1), repeat=B.shape[0]):
        d = float(np.sum((t - np.array(phi) @ B) ** 2))
        if best is None or d < best[0] - 1e-12:
            best = (d, phi)
    return best


@pytest.mark.parametrize("N, size, rmse", [(1, 1, 0.901), (10, 5, 0.419), (20, 11, 0.416)])
def test_cvp_table1(N, size, rmse):
    B, t = table1_lattice(N)
    r = cvp_closest(B, t)
    d, phi = _brute(B, t, 20)
    assert tuple(r.phi) == phi
    assert max(abs(v) for v in r.phi) == size
    assert abs(np.sqrt(r.dist2) / np.linalg.norm(t) - rmse) < 5e-3


def test_bruteforce_table1_n10():
    B, t = table1_lattice(10)
    assert max(abs(v) for v in cvp_bruteforce(B, t, 20).phi) == 5


def test_babai_table1():
    B, t = table1_lattice(1)
    r = babai_round(B, t)
    assert abs(np.sqrt(r.dist2) / np.linalg.norm(t) - 8.352) < 5e-3
    assert r.status == "best-within-radius"


def test_bruteforce_radius_zero():
    r = cvp_bruteforce(np.eye(3), [5.0, 5.0, 5.0], 0)
    assert tuple(r.phi) == (0, 0, 0)


def test_bruteforce_budget():
    with pytest.raises(BudgetExceeded):
        cvp_bruteforce(np.eye(6), np.zeros(6), 100)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3))
@settings(max_examples=50, deadline=None)
def test_orthogonal_babai_is_optimal(t):
    B = np.diag([1.0, 2.0, 0.5])
    a, b = babai_round(B, t), cvp_closest(B, t)
    assert abs(a.dist2 - b.dist2) < 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_babai_never_beats_cvp(seed):
    rng = np.random.default_rng(seed)
    B = rng.integers(-5, 6, size=(2, 3)).astype(float)
    if np.linalg.svd(B, compute_uv=False)[-1] < 0.5:
        return
    t = rng.normal(0, 5, size=3)
    assert cvp_closest(B, t).dist2 <= babai_round(B, t).dist2 + 1e-9


def test_gram_schmidt_orthogonal():
    B = np.array([[3.0, 1.0, 0.0], [1.0, 2.0, 1.0]])
    Bs, mu = gram_schmidt(B)
    assert abs(Bs[0] @ Bs[1]) < 1e-12
    assert np.allclose(mu @ Bs, B)


def _dirichlet_oracle(alpha, N):
    # scan q by hand at high precision
    import mpmath
    with mpmath.workdps(60):
        vals = [mpmath.mpf(a.numerator) / a.denominator if isinstance(a, Fraction) else mpmath.sqrt(2)
                for a in alpha]
        for q in range(1, N + 1):
            xs = [int(mpmath.nint(v * q)) for v in vals]
            if all(abs(v * q - x) < mpmath.mpf(N) ** (-mpmath.mpf(1) / len(vals)) for v, x in zip(vals, xs)):
                return q, xs


@pytest.mark.parametrize("alpha, N, q, x", [
    ([lin(0, sqrt2=1)], 10, 5, [7]),
    ([Fraction(3), Fraction(-2)], 7, 1, [3, -2]),
    ([Fraction(1, 3)], 9, 3, [1]),
])
def test_dirichlet_examples(alpha, N, q, x):
    assert dirichlet_simultaneous(alpha, N) == (q, x)
    assert _dirichlet_oracle(alpha, N) == (q, x)


@pytest.mark.parametrize("N", [2, 17, 100, 999])
def test_dirichlet_matches_scan(N):
    alpha = [lin(0, sqrt2=1), Fraction(2, 7)]
    q, xs = dirichlet_simultaneous(alpha, N)
    assert (q, list(xs)) == _dirichlet_oracle(alpha, N)


def test_dirichlet_rejects_small_n():
    with pytest.raises(ValueError):
        dirichlet_simultaneous([Fraction(1, 2)], 1)
