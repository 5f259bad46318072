import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from randmodels import random_model

from intlot import io
from intlot.errors import DimensionMismatch, InputError, MixedModeError
from intlot.market import (MarketModel, Strategy, bank_leg, clear_denominators, classify,
                           dirichlet_strategy_approx, discounted_gains, gain_matrix, primitive,
                           validate_model, value_process, value_process_rollforward,
                           verify_arbitrage)
from intlot.scalar import lin

F = Fraction
PI = lin(0, pi=1)
R2 = lin(0, sqrt2=1)


def model(name):
    return io.load_model(io.data_path("models", name))


def kinds(m):
    return [v.kind for v in validate_model(m)]


def test_table1_valid():
    assert kinds(model("table1")) == []


def test_adaptedness_violation():
    m = MarketModel(["a", "b"], [[[1, 1], [1, 2], [1, 2]]], filtration=[[[0, 1]], [[0, 1]], [[0], [1]]])
    assert kinds(m) == ["AdaptednessViolation"]


def test_zero_probability():
    m = MarketModel(["a", "b", "c"], [[[1, 1, 1], [2, 1, 0]]], probabilities=[F(1, 2), F(1, 2), 0])
    assert kinds(m) == ["ZeroProbabilityState"]


@pytest.mark.parametrize("kw, kind", [
    (dict(rate=F(-1)), "RateBound"),
    (dict(rate=lin(0, pi=1)), "IrrationalRate"),
    (dict(probabilities=[F(1, 2), F(1, 3)]), "ProbabilitySum"),
    (dict(filtration=[[[0], [1]], [[0], [1]]]), "FiltrationInitial"),
    (dict(filtration=[[[0, 1]], [[0, 1]]]), "FiltrationTerminal"),
])
def test_validation_kinds(kw, kind):
    m = MarketModel(["a", "b"], [[[1, 1], [F(1, 2), 2]]], **kw)
    assert kind in kinds(m)


def test_negative_price():
    assert "NegativePrice" in kinds(MarketModel(["a", "b"], [[[1, 1], [-1, 2]]]))


def test_mixed_mode():
    assert kinds(MarketModel(["a", "b"], [[[1.0, 1.0], [PI, 2]]])) == ["MixedMode"]


def test_gap_gains():
    assert discounted_gains(model("gap")) == [[[F(-1, 2), F(1, 2)]]]


def test_sqrt2_gains():
    assert discounted_gains(model("sqrt2")) == [[[-1, 1, 1]]]


def test_gains_are_discounted():
    m = MarketModel(["a", "b"], [[[1, 1], [F(3, 2), F(1, 2)]]], rate=F(1, 4))
    assert discounted_gains(m) == [[[F(1, 5), F(-3, 5)]]]


def test_bank_growth():
    m = MarketModel(["a", "b"], [[[1, 1], [2, 1], [3, 1]]], rate=F(1, 10),
                    filtration=[[[0, 1]], [[0], [1]], [[0], [1]]])
    s = Strategy.static(m, (0,), V0=F(5))
    V = value_process(m, s).V
    assert V == [[5, 5], [F(11, 2)] * 2, [F(121, 20)] * 2]


def test_table1_value():
    m = model("table1")
    V = value_process(m, Strategy.static(m, (1, 1))).terminal()
    assert V == [1, -8, 4, F(-53, 5)]


@pytest.mark.parametrize("seed", range(25))
def test_value_process_two_ways(seed):
    import random
    rng = random.Random(seed)
    m = random_model(rng, n_max=5, d_max=2, T_max=3)
    x = [F(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(m.n_positions)]
    s = Strategy.from_vector(m, x, F(rng.randint(0, 5)))
    assert value_process(m, s).V == value_process_rollforward(m, s)
    # terminal discounted value equals V0 + G x
    G = gain_matrix(m)
    Vh = value_process(m, s).Vhat[-1]
    assert Vh == [s.V0 + sum(g * v for g, v in zip(row, x)) for row in G]


def test_bank_leg_self_financing():
    m = model("table1")
    s = Strategy.static(m, (1, 2), V0=F(10))
    phi0 = bank_leg(m, s)
    assert phi0 == [[10 - 100 - 400] * 4]


@pytest.mark.parametrize("pos, N, out", [
    ([[(F(1, 2), F(2, 3))]], 6, [[(3, 4)]]),
    ([[(F(2), F(-1))]], 1, [[(2, -1)]]),
])
def test_clear_denominators(pos, N, out):
    n, z = clear_denominators(Strategy(pos))
    assert n == N and z.positions == tuple(tuple(tuple(F(v) for v in ph) for ph in per) for per in out)
    assert z.cls == "integer"


def test_clear_denominators_two_periods():
    n, z = clear_denominators(Strategy([[(F(3, 4),)], [(F(5, 6),)]]))
    assert n == 12 and z.vector() == [9, 10]


def test_clear_denominators_rejects_irrational():
    with pytest.raises(InputError):
        clear_denominators(Strategy([[(R2,)]]))


def test_primitive():
    assert primitive(Strategy([[(F(4), F(-6))]])).vector() == [2, -3]


@pytest.mark.parametrize("vals, cls", [
    ([F(1), F(-2)], "integer"), ([F(1, 2)], "rational"), ([R2], "real"), ([2.0, -1.0], "integer"), ([0.5], "real"),
])
def test_classify(vals, cls):
    assert classify(vals) == cls


def test_integer_strategy_must_be_integral():
    with pytest.raises(InputError):
        Strategy([[(F(1, 2),)]], cls="integer")


def test_shape_and_mode_checks():
    m = model("gap")
    with pytest.raises(DimensionMismatch):
        value_process(m, Strategy([[(1, 2)]]))
    with pytest.raises(MixedModeError):
        value_process(m, Strategy([[(0.5,)]], 0.0))


def test_dense_static_real_arbitrage():
    m = model("dense")
    chk = verify_arbitrage(m, Strategy.static(m, (-PI, F(1))))
    assert chk.is_arbitrage
    assert chk.terminal == [0, 0, 0, 1]


def test_empty_pi_extension_arbitrage():
    m = model("empty_pi")
    X = io.load_extension(io.data_path("extensions", "empty_pi"), m)
    mx = m.with_asset("X", X)
    assert verify_arbitrage(mx, Strategy.static(mx, (0, 0, 1))).is_arbitrage


def test_zero_strategy_no_arbitrage():
    m = model("sqrt2")
    chk = verify_arbitrage(m, Strategy.static(m, (0,)))
    assert not chk.is_arbitrage and chk.reason == "terminal value identically zero"


def test_dirichlet_rational_positions():
    m = model("gap")
    q, psi = dirichlet_strategy_approx(m, Strategy([[(F(1, 3),)]]), F(1, 2))
    assert q % 3 == 0 and psi.vector() == [q // 3]


def _scan_q(eps, k):
    # oracle: smallest q > eps^-k with dist(q sqrt2, Z) < q^(-1/k)
    with mpmath.workdps(60):
        r2 = mpmath.sqrt(2)
        q = math.floor(1 / eps ** k) + 1
        while True:
            if abs(q * r2 - mpmath.nint(q * r2)) < mpmath.mpf(q) ** (-mpmath.mpf(1) / k):
                return q, int(mpmath.nint(q * r2))
            q += 1


def test_dirichlet_sqrt2():
    m = MarketModel(["a", "b"], [[[1, 1], [2, 0]]])
    q, psi = dirichlet_strategy_approx(m, Strategy([[(R2,)]]), F(3, 10))
    assert (q, psi.vector()) == (125, [177])
    assert _scan_q(F(3, 10), 4) == (125, 177)
    assert 125 ** -0.25 < 0.3
    # q = 169 also satisfies both inequalities, it is just not the smallest
    assert abs(169 * math.sqrt(2) - 239) < 169 ** -0.25


@given(st.fractions(min_value=F(1, 20), max_value=F(19, 20), max_denominator=20))
@settings(max_examples=25, deadline=None)
def test_dirichlet_error_bound(eps):
    m = MarketModel(["a", "b"], [[[1, 1], [2, 0]]])
    s = Strategy([[(lin(F(1, 3), sqrt2=1),)]])
    q, psi = dirichlet_strategy_approx(m, s, eps)
    err = abs(float(psi.vector()[0]) - q * (1 / 3 + math.sqrt(2)))
    assert err < q ** -0.25 < eps
