import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from randmodels import random_claim, random_model

from intlot import io
from intlot.arbitrage import nia_check
from intlot.errors import InputError, ModelHasIntegerArbitrage
from intlot.hedging import (check_hedge, copies_scaling, gap_bound, hedge_value, integer_hedge,
                            rational_denominator_superhedge, real_hedge)
from intlot.market import MarketModel, Strategy, value_process
from intlot.scalar import lin, scalar_sign

F = Fraction
R2 = lin(0, sqrt2=1)


def model(name):
    return io.load_model(io.data_path("models", name))


def claim(name, m=None):
    return io.load_claim(io.data_path("claims", name), m)


def nia_model(rng, **kw):
    while True:
        m = random_model(rng, **kw)
        if nia_check(m).verdict == "holds":
            return m


def test_gap_real():
    m = model("gap")
    h = real_hedge(m, claim("gap", m))
    assert h.price == F(1, 4) and h.strategy.vector() == [F(1, 2)]
    assert check_hedge(m, claim("gap", m), h.strategy)


def test_gap_integer():
    m = model("gap")
    h = integer_hedge(m, claim("gap", m))
    assert h.price == F(1, 2) and h.strategy.vector() == [0]


def test_claim_i_real():
    m = model("sqrt2")
    h = real_hedge(m, claim("ci", m))
    assert h.price == 3 * R2 and h.strategy.vector() == [R2]


def _claim_i_oracle():
    # max(2 sqrt2 + phi, -phi, 4 sqrt2 - phi) minimised over integers in [-10, 10]
    with mpmath.workdps(40):
        r2 = mpmath.sqrt(2)
        return min((max(2 * r2 + p, -p, 4 * r2 - p), p) for p in range(-10, 11))


def test_claim_i_integer():
    m = model("sqrt2")
    h = integer_hedge(m, claim("ci", m), radius=10)
    val, phi = _claim_i_oracle()
    assert h.price == 4 * R2 - 1 and h.strategy.vector() == [phi] == [1]
    assert abs(float(h.price) - float(val)) < 1e-12


def test_zero_claim():
    m = model("sqrt2")
    h = real_hedge(m, (F(0),) * 3)
    assert h.price == 0 and h.strategy.vector() == [0]


def test_integer_needs_nia():
    m = MarketModel(["a", "b"], [[[1, 1], [2, 2]]])
    with pytest.raises(ModelHasIntegerArbitrage):
        integer_hedge(m, (F(1), F(1)))


def test_bad_direction():
    m = model("gap")
    with pytest.raises(InputError):
        real_hedge(m, claim("gap", m), "middle")


@pytest.mark.parametrize("seed", range(20))
def test_sandwich(seed):
    rng = random.Random(seed)
    m = nia_model(rng, n_max=4, d_max=2, T_max=2)
    C = random_claim(rng, m)
    sub_z = integer_hedge(m, C, "sub")
    sub_r, sup_r = real_hedge(m, C, "sub"), real_hedge(m, C)
    sup_z = integer_hedge(m, C)
    assert sub_z.price <= sub_r.price <= sup_r.price <= sup_z.price
    for h, d in ((sup_z, "super"), (sup_r, "super"), (sub_z, "sub"), (sub_r, "sub")):
        assert check_hedge(m, C, h.strategy, d)
        assert hedge_value(m, C, h.strategy.vector(), d) == h.price
    # the integer gap never exceeds the bound
    assert sup_z.price - sup_r.price <= gap_bound(m)


@pytest.mark.parametrize("seed", range(10))
def test_integer_optimal_by_enumeration(seed):
    import itertools
    rng = random.Random(50 + seed)
    m = nia_model(rng, n_max=4, d_max=2, T_max=1)
    C = random_claim(rng, m)
    h = integer_hedge(m, C, radius=6)
    best = min(hedge_value(m, C, [F(v) for v in x]) for x in itertools.product(range(-6, 7), repeat=m.n_positions))
    assert h.price == best


def test_gap_bound_values():
    assert gap_bound(model("gap")) == F(1, 4)
    flat = MarketModel(["a", "b"], [[[1, 1], [1, 1]]])
    assert gap_bound(flat) == 0
    b = gap_bound(model("table1"))
    assert abs(b - math.sqrt(2) / 2 * math.hypot(99, -109.6)) < 1e-9


def test_copies_replicable_integer():
    m = model("table1")
    s = Strategy.static(m, (1, -2), V0=F(300))
    C = tuple(value_process(m, s).terminal())
    for N, per, gap in copies_scaling(m, C, [1, 2, 5]):
        assert gap == 0 and per == 300


def test_copies_gap_example():
    m = model("gap")
    rows = copies_scaling(m, claim("gap", m), range(1, 6))
    assert [g for _, _, g in rows] == [F(1, 4), 0, F(1, 12), 0, F(1, 20)]


def test_epsilon_approx():
    m = model("sqrt2")
    C = claim("ci", m)
    h = real_hedge(m, C, eps=F(1, 100))
    assert h.cls == "rational" and h.status.startswith("epsilon-approximate")
    assert check_hedge(m, C, h.strategy)
    assert 0 <= scalar_sign(h.price - 3 * R2) and float(h.price - 3 * R2) < 0.01


def test_epsilon_rational_exact():
    m = model("gap")
    h = real_hedge(m, claim("gap", m), eps=F(1, 10))
    assert h.price == F(1, 4) and h.status == "certified-optimal"


def test_rational_denominator_n10():
    m = model("sqrt2")
    C = claim("ci", m)
    h = rational_denominator_superhedge(m, C, 10)
    assert h.meta["q"] == 1 and h.strategy.vector() == [1]
    assert abs(float(h.meta["buffer"]) - 10 ** (-1 / 6) * math.log(10)) < 1e-11
    assert check_hedge(m, C, h.strategy)


def test_rational_denominator_exact_optimum():
    m = model("gap")
    h = rational_denominator_superhedge(m, claim("gap", m), 4)
    assert h.meta["q"] == 2 and h.strategy.vector() == [F(1, 2)]
    assert h.price == F(1, 4) + h.meta["buffer"]


def test_rational_denominator_values():
    m = model("sqrt2")
    C = claim("ci", m)
    got = [float(rational_denominator_superhedge(m, C, N).price) for N in (10, 100, 1000)]
    assert [round(v, 3) for v in got] == [4.983, 5.552, 6.599]


def test_rational_denominator_trend():
    m = model("sqrt2")
    C = claim("ci", m)
    vals = [rational_denominator_superhedge(m, C, N).price for N in (10**3, 10**6, 10**9)]
    assert scalar_sign(vals[0] - vals[1]) > 0 and scalar_sign(vals[1] - vals[2]) > 0
    assert all(scalar_sign(v - 3 * R2) > 0 for v in vals)
    for N, v in zip((10**3, 10**6, 10**9), vals):
        assert math.lcm(*[F(x).denominator for x in
                          rational_denominator_superhedge(m, C, N).strategy.vector()]) <= N


@given(st.integers(2, 400))
@settings(max_examples=20, deadline=None)
def test_rational_denominator_is_superhedge(N):
    m = model("sqrt2")
    C = claim("ci", m)
    h = rational_denominator_superhedge(m, C, N)
    assert check_hedge(m, C, h.strategy)
    assert all(F(x).denominator <= N for x in h.strategy.vector())
