"""``intlot`` command line front end."""
from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import io
from .arbitrage import DEFAULT_RADIUS, na_check, nia_check, zero_gain_space
from .errors import IntlotError, InputError
from .hedging import (copies_scaling, gap_bound, integer_hedge, rational_denominator_superhedge,
                      real_hedge)
from .lattice import cvp_closest, lll_reduce, lovasz_violations
from .market import MarketModel, Strategy, value_process, verify_arbitrage
from .pricing import (classical_price_bounds, extension_nia_check, nia_price_interval,
                      price_membership_T1)
from .scalar import LinearExt, default_digits, format_scalar, is_exact, parse_scalar, scalar_to_decimal
from .varhedge import METHODS, render_table, var_hedge_report

SCHEMA = 1
TABLE2_N = (1, 5, 10, 20, 30, 40, 50)
EXIT = {"holds": 0, "fails": 3, "no-witness-within-budget": 4,
        "member": 0, "not-member": 3, "unknown-within-budget": 4}


# ---------------------------------------------------------------- rendering

def txt(x, digits: int = 6) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.{digits}g}"
    if isinstance(x, LinearExt):
        return f"{x} ≈ {scalar_to_decimal(x, digits)}"
    return str(x)


def js(x):
    """JSON form of scalars and nested containers."""
    if isinstance(x, (list, tuple)):
        return [js(v) for v in x]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if x is None or isinstance(x, (bool, str)):
        return x
    if isinstance(x, float):
        return x
    if is_exact(x):
        out = {"exact": format_scalar(x), "decimal": scalar_to_decimal(x, 17)}
        return out if isinstance(x, LinearExt) or Fraction(x).denominator != 1 else int(x)
    if isinstance(x, int):
        return x
    return str(x)


def strategy_js(s: Strategy | None):
    if s is None:
        return None
    return {"class": s.cls, "V0": js(s.V0), "positions": js(s.positions)}


def states_txt(m: MarketModel, A) -> str:
    return "{" + ", ".join(m.states[l] for l in A) + "}"


def emit(args, report: dict, lines: list[str]):
    if getattr(args, "json", False):
        print(json.dumps({"schema": SCHEMA, **report}, indent=2, ensure_ascii=False))
    else:
        print("\n".join(lines))


def parse_literal(raw: str, where: str):
    """Scalar from the command line; accepts the file grammar and YAML maps."""
    s = raw.strip()
    if s.startswith("{"):
        # flow maps typed on a shell often omit the blank YAML wants after ':'
        s = re.sub(r":(?=\S)", ": ", s)
        try:
            obj = yaml.safe_load(s)
        except yaml.YAMLError as e:
            raise InputError(f"{where}: cannot parse {raw!r}: {e}")
        return parse_scalar(obj, where)
    return parse_scalar(s, where)


def int_list(raw: str) -> list[int]:
    try:
        out = [int(v) for v in raw.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}")
    if not out or any(v < 1 for v in out):
        raise argparse.ArgumentTypeError("copies must be positive integers")
    return out


def model_and_claim(args):
    m = io.load_model(io.resolve(args.model, "models"))
    C = io.load_claim(io.resolve(args.claim, "claims"), m) if getattr(args, "claim", None) else None
    return m, C


# ---------------------------------------------------------------- check

def to_mode(args, m, C=None):
    """Binary64 evaluation on request (tolerance 1e-9)."""
    if args.mode != "float":
        return m, C
    return m.to_float(), None if C is None else tuple(float(c) for c in C)


def cmd_check(args) -> int:
    m, _ = to_mode(args, io.load_model(io.resolve(args.model, "models")))
    prop = args.property.upper()
    if prop in ("NA", "NIFL"):
        na = na_check(m)
        verdict, witness, A = na.verdict, na.witness, na.profile.A
        extra = {"exact": na.profile.exact}
        if prop == "NIFL":
            extra["note"] = "decided through its equivalence with NA on finite models"
    else:
        rep = nia_check(m, args.radius)
        verdict, witness, A = rep.verdict, rep.witness, rep.A
        extra = {"path": rep.path, "dependency_test": rep.dependency_test, "radius": rep.radius}
    head = f"{prop} {verdict}"
    if A is not None:
        head += f"; A = {states_txt(m, A)}"
    lines = [head]
    if witness is not None:
        lines.append(f"witness ({witness.cls}): positions {txt_positions(witness)}")
        mm = m.to_float() if witness.cls == "real" and m.mode == "exact" and _floaty(witness) else m
        vt = value_process(mm, witness).V[-1]
        lines.append("terminal values: " + ", ".join(txt(v) for v in vt))
    for k, v in extra.items():
        if v is not None and k != "exact":
            lines.append(f"{k}: {v}")
    report = {"command": "check", "property": prop, "verdict": verdict,
              "A": None if A is None else [m.states[l] for l in A],
              "witness": strategy_js(witness), **extra}
    emit(args, report, lines)
    return EXIT[verdict]


def _floaty(s: Strategy) -> bool:
    return any(isinstance(v, float) for per in s.positions for blk in per for v in blk)


def txt_positions(s: Strategy) -> str:
    return "; ".join("period %d: %s" % (t + 1, " | ".join(
        "(" + ", ".join(txt(v) for v in blk) + ")" for blk in per))
        for t, per in enumerate(s.positions))


# ---------------------------------------------------------------- price

def cmd_price(args) -> int:
    m, C = model_and_claim(args)
    lines, report, code = [], {"command": "price"}, 0
    na = na_check(m)
    if na.verdict == "holds":
        cb = classical_price_bounds(m, C)
        lines.append(f"classical: {{{txt(cb.lo)}}} replicable" if cb.replicable
                     else f"classical: ({txt(cb.lo)}, {txt(cb.hi)}) open")
        report["classical"] = interval_js(cb)
    else:
        lines.append(f"classical: NA fails, A = {states_txt(m, na.profile.A)}")
    iv = nia_price_interval(m, C, args.radius)
    lines.append("integer envelope: " + interval_txt(iv))
    report["nia_envelope"] = interval_js(iv)
    if args.member is not None:
        p = parse_literal(args.member, "--member")
        mem = price_membership_T1(m, C, p, args.radius)
        lines.append(f"price {txt(p)}: {mem.verdict} (path {mem.path})")
        if mem.witness is not None:
            lines.append("witness (bank, assets..., claim): " +
                         "(" + ", ".join(txt(v) for v in mem.witness) + ")")
        report["membership"] = {"price": js(p), "verdict": mem.verdict,
                                "witness": js(mem.witness), "path": mem.path, "exact": mem.exact}
        code = max(code, EXIT[mem.verdict])
    if args.extension is not None:
        X = io.load_extension(io.resolve(args.extension, "extensions"), m)
        rep = extension_nia_check(m, C, X, args.radius)
        lines.append(f"extended market: NIA {rep.verdict}")
        if rep.witness is not None:
            lines.append(f"witness: positions {txt_positions(rep.witness)}")
        if rep.dependency_test:
            lines.append(f"dependency test: {rep.dependency_test}")
        report["extension"] = {"verdict": rep.verdict, "witness": strategy_js(rep.witness),
                               "path": rep.path, "dependency_test": rep.dependency_test}
        code = max(code, EXIT[rep.verdict])
    emit(args, report, lines)
    return code


def interval_txt(iv) -> str:
    if iv.empty:
        return "empty" + (f" (LP face gives [{txt(iv.lo)}, {txt(iv.hi)}])" if iv.lo is not None else "")
    lb = {True: "(", False: "[", "unknown": "["}[iv.lo_open]
    rb = {True: ")", False: "]", "unknown": "]"}[iv.hi_open]
    out = f"{lb}{txt(iv.lo)}, {txt(iv.hi)}{rb}"
    if "unknown" in (iv.lo_open, iv.hi_open):
        out += " (closure; endpoint membership undecided)"
    if iv.flags:
        out += " flags: " + ",".join(iv.flags)
    return out


def interval_js(iv) -> dict:
    return {"lo": js(iv.lo), "hi": js(iv.hi), "lo_open": iv.lo_open, "hi_open": iv.hi_open,
            "empty": iv.empty, "replicable": iv.replicable, "provenance": iv.provenance,
            "exact": iv.exact, "flags": list(iv.flags)}


# ---------------------------------------------------------------- hedge

def cmd_hedge(args) -> int:
    m, C = model_and_claim(args)
    if args.mode == "float" and (args.cls != "real" or args.copies):
        raise InputError("--mode float supports real hedges only")
    m, C = to_mode(args, m, C)
    report = {"command": "hedge", "direction": args.direction}
    lines = []
    if args.copies:
        if args.direction != "super":
            raise InputError("--copies scales the superhedge only")
        rows = copies_scaling(m, C, args.copies, args.radius)
        lines.append(f"{'N':>4} {'sigma_Z(NC)/N':>22} {'gap':>22}")
        for N, per, gap in rows:
            lines.append(f"{N:>4} {txt(per):>22} {txt(gap):>22}")
        lines.append(f"gap bound: {txt(gap_bound(m))}")
        report["copies"] = [{"N": N, "per_copy": js(per), "gap": js(gap)} for N, per, gap in rows]
        report["gap_bound"] = js(gap_bound(m))
        emit(args, report, lines)
        return 0
    if args.cls == "integer":
        h = integer_hedge(m, C, args.direction, args.radius)
    elif args.cls == "rational" and args.denom_bound is not None:
        if args.direction != "super":
            raise InputError("--denom-bound builds superhedges only")
        h = rational_denominator_superhedge(m, C, args.denom_bound)
    elif args.cls == "rational":
        h = real_hedge(m, C, args.direction, eps=parse_literal(args.eps, "--eps"))
    else:
        h = real_hedge(m, C, args.direction)
    lines.append(f"{h.direction}hedge ({h.cls}): price {txt(h.price)}")
    lines.append(f"status: {h.status}")
    if h.strategy is not None:
        lines.append(f"positions: {txt_positions(h.strategy)}")
    for k, v in h.meta.items():
        if k != "positions":
            lines.append(f"{k}: {txt(v) if not isinstance(v, (list, tuple, dict)) else v}")
    report.update({"class": h.cls, "price": js(h.price), "status": h.status,
                   "strategy": strategy_js(h.strategy),
                   "meta": {k: js(v) if not isinstance(v, dict) else v for k, v in h.meta.items()}})
    emit(args, report, lines)
    return 0


# ---------------------------------------------------------------- varhedge

def cmd_varhedge(args) -> int:
    m, C = model_and_claim(args)
    flags = []
    if args.measure:
        P = io.load_measure(io.resolve(args.measure, "measures"), m)
    else:
        na = na_check(m)
        P = na.profile.witness_measure
        if na.verdict != "holds" or P is None:
            raise InputError("no equivalent martingale measure; pass --measure")
        flags.append("measure-from-na-check")
    methods = METHODS if args.method == "all" else (
        "rounding" if args.method == "round" else args.method,)
    Ns = args.copies or [1]
    rep = var_hedge_report(m, C, P, Ns, methods)
    lines = [render_table(rep)] + ([f"flags: {', '.join(flags)}"] if flags else [])
    report = {"command": "varhedge", "flags": flags, "measure": js(P), "rows": [
        {"N": N, "method": k, "positions": list(r.positions), "V0": r.V0, "rmse": r.rmse,
         "position_size": r.position_size, "zero_norm": r.zero_norm}
        for N, per in rep.items() for k, r in per.items()]}
    emit(args, report, lines)
    return 0


# ---------------------------------------------------------------- lattice

def read_matrix(path) -> np.ndarray:
    rows = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}")
    for i, line in enumerate(text.splitlines(), 1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        try:
            rows.append([float(v) for v in line.split()])
        except ValueError:
            raise io.FileError(path, i, None, "expected whitespace-separated decimals")
        if len(rows[-1]) != len(rows[0]):
            raise io.FileError(path, i, None, f"row has {len(rows[-1])} entries, expected {len(rows[0])}")
    if not rows:
        raise io.FileError(path, 1, None, "empty matrix")
    return np.array(rows)


def cmd_lattice(args) -> int:
    B = read_matrix(args.basis)
    if args.op == "lll":
        R, U = lll_reduce(B, args.delta)
        lines = ["reduced basis:"] + ["  " + " ".join(f"{v:.10g}" for v in row) for row in R]
        lines += ["transform:"] + ["  " + " ".join(str(int(v)) for v in row) for row in U]
        lines.append(f"Lovasz violations (delta={args.delta}): {lovasz_violations(R, args.delta)}")
        report = {"command": "lattice lll", "basis": R, "transform": np.asarray(U, dtype=int),
                  "lovasz_violations": lovasz_violations(R, args.delta)}
    else:
        if args.target is None:
            raise InputError("lattice cvp needs a target file")
        t = read_matrix(args.target).ravel()
        r = cvp_closest(B, t)
        lines = [f"phi = ({', '.join(str(int(v)) for v in r.phi)})",
                 "point = " + " ".join(f"{v:.10g}" for v in r.point),
                 f"dist2 = {r.dist2:.10g}", f"status: {r.status}"]
        report = {"command": "lattice cvp", "phi": [int(v) for v in r.phi], "point": r.point,
                  "dist2": r.dist2, "status": r.status}
    emit(args, js_tree(report), lines)
    return 0


def js_tree(d: dict) -> dict:
    return {k: js(v) for k, v in d.items()}


# ---------------------------------------------------------------- examples

def _load(name):
    return io.load_model(io.data_path("models", name))


def _claim(name, m):
    return io.load_claim(io.data_path("claims", name), m)


def ex_table2(args):
    m = _load("table1")
    C, P = _claim("table1", m), io.load_measure(io.data_path("measures", "table1"), m)
    rep = var_hedge_report(m, C, P, TABLE2_N)
    return [render_table(rep)], {"rows": [
        {"N": N, "method": k, "rmse": r.rmse, "position_size": r.position_size,
         "positions": list(r.positions)} for N, per in rep.items() for k, r in per.items()]}


def ex_gap(args):
    m = _load("gap")
    C = _claim("gap", m)
    r, z = real_hedge(m, C), integer_hedge(m, C)
    rows = copies_scaling(m, C, range(1, 11))
    lines = [f"sup Pi(C) = {txt(r.price)}  (real hedge {txt_positions(r.strategy)})",
             f"sigma_Z(C) = {txt(z.price)}  (integer hedge {txt_positions(z.strategy)})",
             f"gap bound = {txt(gap_bound(m))}", "N, per-copy gap:"]
    lines += [f"  {N:>2}  {txt(g)}" for N, _, g in rows]
    return lines, {"sup": js(r.price), "sigma_Z": js(z.price), "gap_bound": js(gap_bound(m)),
                   "copies": [{"N": N, "gap": js(g)} for N, _, g in rows]}


def ex_sqrt2(args):
    m = _load("sqrt2")
    lines, out = [], {}
    for name in ("ci", "cii", "ciii", "civ"):
        C = _claim(name, m)
        cb, iv = classical_price_bounds(m, C), nia_price_interval(m, C)
        lines.append(f"{name:>5}: classical ({txt(cb.lo)}, {txt(cb.hi)}); integer {interval_txt(iv)}")
        out[name] = {"classical": interval_js(cb), "nia_envelope": interval_js(iv)}
    C = _claim("ci", m)
    for d in ("super", "sub"):
        r, z = real_hedge(m, C, d), integer_hedge(m, C, d)
        lines.append(f"claim (i) {d}: real {txt(r.price)}, integer {txt(z.price)}")
        out[f"ci_{d}"] = {"real": js(r.price), "integer": js(z.price)}
    return lines, out


def ex_empty_pi(args):
    m = _load("empty_pi")
    C = _claim("empty_pi", m)
    na, rep = na_check(m), nia_check(m, args.radius)
    iv = nia_price_interval(m, C, args.radius)
    mem = price_membership_T1(m, C, Fraction(0), args.radius)
    X = io.load_extension(io.data_path("extensions", "empty_pi"), m)
    ext = extension_nia_check(m, C, X, args.radius)
    lines = [f"NA {na.verdict}; A = {states_txt(m, na.profile.A)}; real witness "
             f"{txt_positions(na.witness)}",
             f"NIA {rep.verdict} (path {rep.path})",
             f"envelope for 1_{{{m.states[2]}}}: [{txt(iv.lo)}, {txt(iv.hi)}], empty: {iv.empty}",
             f"price 0: {mem.verdict}, witness ({', '.join(txt(v) for v in mem.witness)})",
             f"extended by X: NIA {ext.verdict}, witness {txt_positions(ext.witness)}"]
    return lines, {"na": na.verdict, "A": [m.states[l] for l in na.profile.A],
                   "nia": rep.verdict, "envelope": interval_js(iv),
                   "membership_at_0": {"verdict": mem.verdict, "witness": js(mem.witness)},
                   "extension": ext.verdict}


def ex_dense(args):
    m = _load("dense")
    C = _claim("dense", m)
    na, rep = na_check(m), nia_check(m, args.radius)
    pi = parse_scalar({"terms": {"pi": 1}})
    eta = Strategy.static(m, (-pi, 1))
    ok = verify_arbitrage(m, eta).is_arbitrage
    lines = [f"NA {na.verdict}; A = {states_txt(m, na.profile.A)}",
             f"static eta = (0, -pi, 1) is a real arbitrage: {ok}",
             f"NIA {rep.verdict} (path {rep.path})"]
    out = {"na": na.verdict, "A": [m.states[l] for l in na.profile.A], "eta_arbitrage": ok,
           "nia": rep.verdict, "extensions": {}}
    for name in ("dense_quarter", "dense_sqrt2"):
        X = io.load_extension(io.data_path("extensions", name), m)
        e = extension_nia_check(m, C, X, args.radius)
        w = txt_positions(e.witness) if e.witness else "-"
        lines.append(f"X0 = {txt(X[0][0])}: NIA {e.verdict}; witness {w}")
        out["extensions"][name] = {"verdict": e.verdict, "witness": strategy_js(e.witness),
                                   "dependency_test": e.dependency_test}
    return lines, out


def ex_no_cheapest(args):
    m = _load("no_cheapest")
    C = _claim("no_cheapest", m)
    lines, rows = [], []
    for R in (5, 50, 500):
        h = integer_hedge(m, C, radius=R)
        lines.append(f"radius {R:>3}: value {txt(h.price)} at {txt_positions(h.strategy)}; {h.status}")
        rows.append({"radius": R, "value": js(h.price), "status": h.status})
    return lines, {"rows": rows}


def ex_corollary(args):
    m = _load("corollary")
    Q = io.load_measure(io.data_path("measures", "corollary"), m)
    z = zero_gain_space(m, Q)
    lines = [f"Q = ({', '.join(txt(q) for q in Q)})",
             "real zero-gain basis: " + "; ".join(
                 "(" + ", ".join(f"{v:.6g}" for v in row) + ")" for row in z.basis),
             f"lattice status: {z.lattice_status}"]
    return lines, {"basis": js(z.basis), "lattice_status": z.lattice_status}


EXAMPLES = {"table2": ex_table2, "gap": ex_gap, "sqrt2": ex_sqrt2, "empty-pi": ex_empty_pi,
            "dense": ex_dense, "no-cheapest": ex_no_cheapest, "corollary": ex_corollary}


def cmd_examples(args) -> int:
    if args.name == "list":
        lines = list(EXAMPLES)
        emit(args, {"command": "examples", "names": lines,
                    "models": io.bundled("models")}, lines)
        return 0
    lines, out = EXAMPLES[args.name](args)
    emit(args, {"command": "examples", "name": args.name, **out}, lines)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="intlot", description="Integer-constrained arbitrage, "
                                "pricing and hedging on finite scenario trees.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, radius=True):
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        if radius:
            sp.add_argument("--radius", type=int, default=None)

    c = sub.add_parser("check", help="NA / NIA / NIFL")
    c.add_argument("model")
    c.add_argument("--property", choices=["na", "nia", "nifl"], default="nia")
    c.add_argument("--mode", choices=["exact", "float"], default="exact")
    common(c)

    c = sub.add_parser("price", help="price interval and membership")
    c.add_argument("model")
    c.add_argument("claim")
    c.add_argument("--member", metavar="P", default=None)
    c.add_argument("--extension", metavar="XFILE", default=None)
    common(c)

    c = sub.add_parser("hedge", help="super- and subhedging")
    c.add_argument("model")
    c.add_argument("claim")
    c.add_argument("--direction", choices=["super", "sub"], default="super")
    c.add_argument("--class", dest="cls", choices=["real", "rational", "integer"], default="real")
    c.add_argument("--denom-bound", type=int, default=None)
    c.add_argument("--eps", default="1/100", help="rational approximation tolerance")
    c.add_argument("--copies", type=int_list, default=None)
    c.add_argument("--mode", choices=["exact", "float"], default="exact")
    common(c)

    c = sub.add_parser("varhedge", help="one-period variance-optimal hedging")
    c.add_argument("model")
    c.add_argument("claim")
    c.add_argument("--measure", default=None)
    c.add_argument("--copies", type=int_list, default=None)
    c.add_argument("--method", choices=["all", "classical", "cvp", "round"], default="all")
    common(c, radius=False)

    c = sub.add_parser("lattice", help="LLL reduction and closest vectors")
    c.add_argument("op", choices=["lll", "cvp"])
    c.add_argument("basis")
    c.add_argument("target", nargs="?")
    c.add_argument("--delta", type=float, default=0.99)
    common(c, radius=False)

    c = sub.add_parser("examples", help="reproduce the bundled worked examples")
    c.add_argument("name", nargs="?", default="list", choices=["list", *EXAMPLES])
    common(c)
    return p


COMMANDS = {"check": cmd_check, "price": cmd_price, "hedge": cmd_hedge,
            "varhedge": cmd_varhedge, "lattice": cmd_lattice, "examples": cmd_examples}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "radius", None) is None and args.command in ("check", "price", "examples"):
        args.radius = DEFAULT_RADIUS
    if getattr(args, "radius", None) is not None and args.radius < 0:
        print("intlot: error: --radius must be nonnegative", file=sys.stderr)
        return 2
    try:
        default_digits()  # a bad INTLOT_PRECISION fails before any work
        return COMMANDS[args.command](args)
    except IntlotError as e:
        print(f"intlot: error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:  # pragma: no cover
        print(f"intlot: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 5


def main(argv=None):
    sys.exit(run(argv))
