"""Every bundled example has an expectation file; check each of them."""
import json

import pytest

from intlot import io
from intlot.arbitrage import na_check, nia_check, qmax_membership, zero_gain_space
from intlot.hedging import copies_scaling, gap_bound, integer_hedge, real_hedge
from intlot.market import Strategy, value_process
from intlot.pricing import (classical_price_bounds, extension_nia_check, nia_price_interval,
                            price_membership_T1)
from intlot.scalar import parse_scalar
from intlot.varhedge import var_hedge_report

NAMES = io.bundled("expectations")


def S(v):
    return parse_scalar(v)


def load(name):
    return json.loads(io.data_path("expectations", name).read_text(encoding="utf-8"))


def test_corpus_complete():
    assert set(NAMES) == {"gap", "sqrt2", "empty_pi", "dense", "no_cheapest", "table1", "corollary"}
    assert set(NAMES) <= set(io.bundled("models"))


@pytest.mark.parametrize("name", NAMES)
def test_verdicts(name):
    e = load(name)
    m = io.load_model(io.data_path("models", e["model"]))
    na, nia = na_check(m), nia_check(m)
    assert na.verdict == e["na"] and nia.verdict == e["nia"]
    assert [m.states[l] for l in na.profile.A] == e["A"]


def _gap(m, e):
    C = io.load_claim(io.data_path("claims", e["model"]), m)
    h, z = real_hedge(m, C), integer_hedge(m, C)
    assert h.price == S(e["real_super"]) and h.strategy.vector() == [S(v) for v in e["real_super_positions"]]
    assert z.price == S(e["integer_super"]) and z.strategy.vector() == [S(v) for v in e["integer_super_positions"]]
    assert gap_bound(m) == S(e["gap_bound"])
    rows = copies_scaling(m, C, [int(k) for k in e["copies_gap"]])
    assert {str(N): g for N, _, g in rows} == {k: S(v) for k, v in e["copies_gap"].items()}


def _sqrt2(m, e):
    for cn, x in e["claims"].items():
        C = io.load_claim(io.data_path("claims", cn), m)
        cb, iv = classical_price_bounds(m, C), nia_price_interval(m, C)
        assert [cb.lo, cb.hi] == [S(v) for v in x["classical"]]
        assert [iv.lo, iv.hi] == [S(v) for v in x["envelope"]]
        assert (iv.lo_open, iv.hi_open) == (x["lo_open"], x["hi_open"])
    h = e["hedges"]
    C = io.load_claim(io.data_path("claims", h["claim"]), m)
    sup, zs = real_hedge(m, C), integer_hedge(m, C)
    assert sup.price == S(h["real_super"]) and sup.strategy.vector() == [S(v) for v in h["real_super_positions"]]
    assert zs.price == S(h["integer_super"]) and zs.strategy.vector() == [S(v) for v in h["integer_super_positions"]]
    assert real_hedge(m, C, "sub").price == S(h["real_sub"])
    assert integer_hedge(m, C, "sub").price == S(h["integer_sub"])


def _empty_pi(m, e):
    C = io.load_claim(io.data_path("claims", e["claim"]), m)
    na = na_check(m)
    Q = tuple(S(v) for v in e["witness_measure"])
    assert qmax_membership(m, Q)
    if na.profile.measure_exact:
        assert na.profile.witness_measure == Q
    iv = nia_price_interval(m, C)
    assert [iv.lo, iv.hi] == [S(v) for v in e["envelope"]] and iv.empty == e["envelope_empty"]
    mb = e["membership"]
    r = price_membership_T1(m, C, S(mb["price"]))
    assert r.verdict == mb["verdict"] and list(r.witness) == [S(v) for v in mb["witness"]]
    x = e["extension"]
    X = io.load_extension(io.data_path("extensions", x["file"]), m)
    rep = extension_nia_check(m, C, X)
    assert rep.verdict == x["verdict"] and rep.witness.vector() == [S(v) for v in x["positions"]]


def _dense(m, e):
    C = io.load_claim(io.data_path("claims", e["claim"]), m)
    eta = Strategy.static(m, tuple(S(v) for v in e["eta"]))
    assert value_process(m, eta).V == [[S(v) for v in row] for row in e["eta_values"]]
    for xn, allowed in e["extensions"].items():
        X = io.load_extension(io.data_path("extensions", xn), m)
        assert extension_nia_check(m, C, X).verdict in allowed
    iv = nia_price_interval(m, C)
    assert [iv.lo, iv.hi] == [S(v) for v in e["envelope"]]


def _no_cheapest(m, e):
    C = io.load_claim(io.data_path("claims", e["claim"]), m)
    assert real_hedge(m, C).price == S(e["real_super"])
    for R, v in e["integer_super"].items():
        h = integer_hedge(m, C, radius=int(R))
        assert h.price == S(v) and h.status == e["status"]


def _table1(m, e):
    C = io.load_claim(io.data_path("claims", e["claim"]), m)
    P = io.load_measure(io.data_path("measures", e["measure"]))
    assert value_process(m, Strategy.static(m, (1, 1))).terminal() == [S(v) for v in e["phi_11"]]
    assert abs(float(gap_bound(m)) - e["gap_bound"]) < 1e-9
    rep = var_hedge_report(m, C, P, e["copies"])
    for i, N in enumerate(e["copies"]):
        r = rep[N]
        assert abs(r["classical"].rmse - e["classical_rmse"][i]) < 1e-3
        assert abs(r["cvp"].rmse - e["cvp_rmse"][i]) < 5e-3 and r["cvp"].position_size == e["cvp_size"][i]
        assert abs(r["rounding"].rmse - e["rounding_rmse"][i]) < 5e-3
        assert r["rounding"].position_size == e["rounding_size"][i]


def _corollary(m, e):
    Q = io.load_measure(io.data_path("measures", e["measure"]))
    z = zero_gain_space(m, Q)
    assert z.lattice_status == e["lattice_status"]
    d = [float(S(v)) for v in e["zero_gain_direction"]]
    v = z.basis[0] / z.basis[0][1] * d[1]
    assert max(abs(a - b) for a, b in zip(v, d)) < 1e-9
    assert qmax_membership(m, Q) == e["qmax"]


CHECKS = {"gap": _gap, "sqrt2": _sqrt2, "empty_pi": _empty_pi, "dense": _dense,
          "no_cheapest": _no_cheapest, "table1": _table1, "corollary": _corollary}


@pytest.mark.parametrize("name", NAMES)
def test_expectations(name):
    e = load(name)
    CHECKS[name](io.load_model(io.data_path("models", e["model"])), e)
