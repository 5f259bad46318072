"""Numeric tower: rationals, rational combinations of named irrationals, floats.

A scalar is one of

* ``fractions.Fraction`` (ints are accepted and promoted),
* :class:`LinearExt`, an exact value ``q + sum_k c_k * const_k`` with rational
  ``q, c_k`` over declared constants (default ``pi`` and ``sqrt2``),
* ``float``, compared against a zero tolerance.

Only linear arithmetic is exact: sums, and products where at least one
factor is rational.  Declared constants are assumed rationally independent
together with 1, so a LinearExt is zero iff all coefficients vanish; nonzero
signs are resolved by decimal evaluation with escalating precision.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Context, Decimal
from fractions import Fraction
from typing import Union

import mpmath
import yaml

from .errors import (InputError, MixedModeError, NonlinearError,
                     PrecisionExhausted, UnknownConstant)

MAX_DIGITS = 1000
FLOAT_TOL = 1e-9
MIN_CONSTANT_DIGITS = 50


def default_digits() -> int:
    """Starting precision for sign decisions; INTLOT_PRECISION overrides."""
    raw = os.environ.get("INTLOT_PRECISION")
    if not raw:
        return 50
    try:
        v = int(raw)
    except ValueError:
        raise InputError(f"INTLOT_PRECISION must be an integer, got {raw!r}")
    return min(max(v, 15), MAX_DIGITS)


# ---------------------------------------------------------------- constants

_BUILTIN = {
    "pi": lambda: mpmath.pi,
    "sqrt2": lambda: mpmath.sqrt(2),
}
_CONSTANTS: dict[str, str] = {}
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _significant(s: str) -> int:
    digits = s.lstrip("+-").replace(".", "").lstrip("0")
    digits = digits.split("e")[0].split("E")[0]
    return len(digits)


def constant_expansion(name: str) -> str:
    """Decimal expansion of a declared constant."""
    if name not in _CONSTANTS:
        if name not in _BUILTIN:
            raise UnknownConstant(f"constant {name!r} is not declared")
        with mpmath.workdps(MAX_DIGITS + 20):
            s = mpmath.nstr(_BUILTIN[name](), MAX_DIGITS + 5, strip_zeros=False)
        # truncate to MAX_DIGITS significant digits
        head, tail = s.split(".")
        _CONSTANTS[name] = head + "." + tail[: MAX_DIGITS - len(head.lstrip("-"))]
    return _CONSTANTS[name]


def register_constant(name: str, expansion: str) -> None:
    """Declare a constant by its decimal expansion (>= 50 significant digits).

    Re-declaring a known constant is allowed when the expansions agree on
    their common digits.
    """
    if not _NAME.match(name):
        raise InputError(f"bad constant name {name!r}")
    expansion = str(expansion).strip()
    try:
        Decimal(expansion)
    except Exception:
        raise InputError(f"constant {name!r}: {expansion!r} is not a decimal")
    if _significant(expansion) < MIN_CONSTANT_DIGITS:
        raise InputError(f"constant {name!r} needs at least {MIN_CONSTANT_DIGITS} "
                         f"significant digits")
    known = None
    if name in _CONSTANTS or name in _BUILTIN:
        known = constant_expansion(name)
    if known is not None:
        k = min(len(known), len(expansion)) - 2
        if known[:k] != expansion[:k]:
            raise InputError(f"constant {name!r} conflicts with its existing expansion")
        if len(expansion) <= len(known):
            return
    _CONSTANTS[name] = expansion


def declared_constants() -> dict[str, str]:
    for name in _BUILTIN:
        constant_expansion(name)
    return dict(_CONSTANTS)


def _const_relerr(name: str) -> mpmath.mpf:
    return mpmath.mpf(10) ** (1 - _significant(constant_expansion(name)))


_float_cache: dict[str, float] = {}


def _const_float(name: str) -> float:
    if name not in _float_cache:
        _float_cache[name] = float(constant_expansion(name)[:40])
    return _float_cache[name]


# ---------------------------------------------------------------- LinearExt

def _rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected a rational, got {type(x).__name__}")


class LinearExt:
    """Exact value ``q + sum c_k const_k``; build with :func:`lin`."""

    __slots__ = ("q", "_terms")

    def __init__(self, q: Fraction, terms: tuple):
        self.q = q
        self._terms = terms

    @property
    def terms(self) -> dict[str, Fraction]:
        return dict(self._terms)

    # arithmetic
    @staticmethod
    def _split(other):
        if isinstance(other, LinearExt):
            return other.q, other._terms
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return Fraction(other), ()
        if isinstance(other, float):
            raise MixedModeError("cannot combine a float with an exact value")
        return None

    def _combine(self, other, s):
        parts = self._split(other)
        if parts is None:
            return NotImplemented
        q, terms = parts
        acc = dict(self._terms)
        for k, v in terms:
            acc[k] = acc.get(k, 0) + s * v
        return lin(self.q + s * q, acc)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self)._combine(other, 1)

    def __neg__(self):
        return LinearExt(-self.q, tuple((k, -v) for k, v in self._terms))

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, LinearExt):
            raise NonlinearError("product of two irrational linear combinations")
        if isinstance(other, float):
            raise MixedModeError("cannot combine a float with an exact value")
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            c = Fraction(other)
            if c == 0:
                return Fraction(0)
            return LinearExt(self.q * c, tuple((k, v * c) for k, v in self._terms))
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, LinearExt):
            raise NonlinearError("division by an irrational value")
        if isinstance(other, float):
            raise MixedModeError("cannot combine a float with an exact value")
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self * (1 / Fraction(other))
        return NotImplemented

    # comparison
    def __eq__(self, other):
        if isinstance(other, LinearExt):
            return self.q == other.q and self._terms == other._terms
        if isinstance(other, (int, Fraction, float)):
            return False
        return NotImplemented

    def __hash__(self):
        return hash((self.q, self._terms))

    def __lt__(self, other):
        return scalar_sign(self - other) < 0

    def __le__(self, other):
        return scalar_sign(self - other) <= 0

    def __gt__(self, other):
        return scalar_sign(self - other) > 0

    def __ge__(self, other):
        return scalar_sign(self - other) >= 0

    def __abs__(self):
        return -self if scalar_sign(self) < 0 else self

    def __float__(self):
        return float(self.q) + sum(float(v) * _const_float(k) for k, v in self._terms)

    def __repr__(self):
        return f"LinearExt({self})"

    def __str__(self):
        out = []
        if self.q:
            out.append(str(self.q))
        for k, v in self._terms:
            mag = abs(v)
            body = k if mag == 1 else f"{mag}*{k}"
            if not out:
                out.append(("-" if v < 0 else "") + body)
            else:
                out.append(("- " if v < 0 else "+ ") + body)
        return " ".join(out)


Scalar = Union[Fraction, LinearExt, float]


def lin(q=0, terms: dict | None = None, **kw) -> Scalar:
    """Canonical constructor: ``lin(1, sqrt2=2)`` is 1 + 2*sqrt2.

    Returns a plain Fraction when no irrational part survives.
    """
    acc = dict(terms or {})
    acc.update(kw)
    clean = []
    for k, v in acc.items():
        v = _rat(v)
        if v:
            if k not in _CONSTANTS and k not in _BUILTIN:
                raise UnknownConstant(f"constant {k!r} is not declared")
            clean.append((k, v))
    q = _rat(q)
    if not clean:
        return q
    return LinearExt(q, tuple(sorted(clean)))


# ---------------------------------------------------------------- context

@dataclass(frozen=True)
class NumericContext:
    mode: str = "exact"
    tol: float = FLOAT_TOL
    digits: int | None = None
    assume_independent: bool = True

    def __post_init__(self):
        if self.mode not in ("exact", "float"):
            raise InputError(f"unknown numeric mode {self.mode!r}")
        if self.mode == "float" and not self.tol > 0:
            raise InputError("float mode needs a positive zero tolerance")

    @property
    def constants(self) -> dict[str, str]:
        return declared_constants()


DEFAULT_CONTEXT = NumericContext()


# ---------------------------------------------------------------- predicates

def is_rational(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def is_exact(x) -> bool:
    return is_rational(x) or isinstance(x, LinearExt)


def components(x) -> dict[str, Fraction]:
    """Coefficient map with the rational part under key ``"1"``."""
    if isinstance(x, LinearExt):
        out = {"1": x.q}
        out.update(x._terms)
        return out
    return {"1": _rat(x)}


def to_float(x) -> float:
    return float(x)


def to_mpf(x):
    """Evaluate at the current mpmath working precision."""
    if isinstance(x, LinearExt):
        v = mpmath.mpf(x.q.numerator) / x.q.denominator
        for k, c in x._terms:
            v += mpmath.mpf(c.numerator) / c.denominator * mpmath.mpf(constant_expansion(k))
        return v
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


# ---------------------------------------------------------------- sign

def _sign_linear(x: LinearExt, start: int) -> int:
    approx = float(x)
    mag = abs(float(x.q)) + sum(abs(float(v)) * abs(_const_float(k)) for k, v in x._terms)
    if abs(approx) > 1e-12 * mag + 1e-300:
        return 1 if approx > 0 else -1
    digits = start
    floor_err = max(_const_relerr(k) for k, _ in x._terms)
    while True:
        with mpmath.workdps(digits + 10):
            v = to_mpf(x)
            eps = max(mpmath.mpf(10) ** (-digits), floor_err)
            err = 8 * eps * (abs(to_mpf(x.q)) + sum(
                abs(to_mpf(c)) * (abs(mpmath.mpf(constant_expansion(k))) + 1)
                for k, c in x._terms))
            if abs(v) > err:
                return 1 if v > 0 else -1
        if digits >= MAX_DIGITS or mpmath.mpf(10) ** (-digits) < floor_err:
            raise PrecisionExhausted(
                f"cannot separate {x} from zero with {digits} digits")
        digits = min(2 * digits, MAX_DIGITS)


def scalar_sign(x, ctx: NumericContext | None = None) -> int:
    """-1, 0 or 1.  Exact values are decided exactly, floats up to ``ctx.tol``."""
    if isinstance(x, LinearExt):
        start = ctx.digits if ctx and ctx.digits else default_digits()
        return _sign_linear(x, start)
    if is_rational(x):
        return (x > 0) - (x < 0)
    tol = ctx.tol if ctx is not None else FLOAT_TOL
    if abs(x) <= tol:
        return 0
    return 1 if x > 0 else -1


def scalar_cmp(a, b, ctx: NumericContext | None = None) -> int:
    return scalar_sign(a - b, ctx)


def scalar_max(values, ctx=None):
    values = list(values)
    best = values[0]
    for v in values[1:]:
        if scalar_cmp(v, best, ctx) > 0:
            best = v
    return best


def scalar_min(values, ctx=None):
    values = list(values)
    best = values[0]
    for v in values[1:]:
        if scalar_cmp(v, best, ctx) < 0:
            best = v
    return best


def scalar_floor(x) -> int:
    if is_rational(x):
        return math.floor(x)
    if isinstance(x, float):
        return math.floor(x)
    with mpmath.workdps(60):
        guess = int(mpmath.floor(to_mpf(x)))
    # confirm exactly, nudging if the decimal guess sat on a boundary
    while scalar_sign(x - guess) < 0:
        guess -= 1
    while scalar_sign(x - (guess + 1)) >= 0:
        guess += 1
    return guess


def scalar_round(x) -> int:
    """Nearest integer, ties to even (ties only occur for rationals)."""
    if is_rational(x) or isinstance(x, float):
        return round(x)
    return scalar_floor(x + Fraction(1, 2))


def scalar_add_scale(a, c, b):
    """a + c*b with c rational."""
    if not is_rational(c):
        raise NonlinearError("scale factor must be rational")
    fa, fb = isinstance(a, float), isinstance(b, float)
    if fa != fb:
        raise MixedModeError("cannot combine a float with an exact value")
    if fa:
        return a + float(c) * b
    return a + Fraction(c) * b


# ---------------------------------------------------------------- text

_INT = re.compile(r"^[+-]?\d+$")
_FRAC = re.compile(r"^[+-]?\d+\s*/\s*\d+$")
_DEC = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")


def parse_scalar(lit, where: str = "value") -> Scalar:
    """Parse a literal: integer, "p/q", decimal (becomes a float) or a map
    ``{q: 'p/q', terms: {pi: 'u/v'}}``."""
    if isinstance(lit, bool) or lit is None:
        raise InputError(f"{where}: bad scalar literal {lit!r}")
    if isinstance(lit, int):
        return Fraction(lit)
    if isinstance(lit, float):
        return lit
    if isinstance(lit, Fraction) or isinstance(lit, LinearExt):
        return lit
    if isinstance(lit, str):
        s = lit.strip()
        if s.startswith("{"):
            try:
                lit = yaml.safe_load(s)
            except yaml.YAMLError as e:
                raise InputError(f"{where}: cannot parse {lit!r}: {e}")
        elif _INT.match(s) or _FRAC.match(s):
            try:
                return Fraction(s.replace(" ", ""))
            except ZeroDivisionError:
                raise InputError(f"{where}: zero denominator in {lit!r}")
        elif _DEC.match(s):
            return float(s)
        else:
            raise InputError(f"{where}: bad scalar literal {lit!r}")
    if isinstance(lit, dict):
        extra = set(lit) - {"q", "terms"}
        if extra:
            raise InputError(f"{where}: unexpected keys {sorted(extra)}")
        q = parse_scalar(lit.get("q", 0), where + ".q")
        terms = {}
        for k, v in (lit.get("terms") or {}).items():
            c = parse_scalar(v, f"{where}.terms.{k}")
            if not is_rational(c) or not is_rational(q):
                raise InputError(f"{where}: coefficients must be rational")
            terms[str(k)] = c
        try:
            return lin(q, terms)
        except UnknownConstant as e:
            raise InputError(f"{where}: {e}")
    raise InputError(f"{where}: bad scalar literal {lit!r}")


def format_scalar(x):
    """Inverse of :func:`parse_scalar` (JSON-compatible)."""
    if isinstance(x, LinearExt):
        out = {"q": format_scalar(x.q)}
        out["terms"] = {k: format_scalar(v) for k, v in x._terms}
        return out
    if is_rational(x):
        x = Fraction(x)
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return float(x)


def scalar_to_decimal(x, digits: int) -> str:
    """Correctly rounded decimal string with ``digits`` significant digits."""
    if not 0 < digits <= MAX_DIGITS:
        raise InputError("digits must be in 1..1000")
    if isinstance(x, float):
        d = Decimal(repr(x))
    elif is_rational(x):
        x = Fraction(x)
        ctx = Context(prec=digits + 30)
        d = ctx.divide(Decimal(x.numerator), Decimal(x.denominator))
    else:
        for k, _ in x._terms:
            constant_expansion(k)
        with mpmath.workdps(digits + 30):
            d = Decimal(mpmath.nstr(to_mpf(x), digits + 25, strip_zeros=False))
    if d == 0:
        return "0"
    d = Context(prec=digits, rounding=ROUND_HALF_EVEN).plus(d)
    return format(d, "f")


def show(x, digits: int = 6) -> str:
    """Short human rendering."""
    if isinstance(x, float):
        return f"{x:.{digits}g}"
    return str(x)
