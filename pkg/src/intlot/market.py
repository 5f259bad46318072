"""Finite market model, strategies, value processes and arbitrage checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import DimensionMismatch, InputError, MixedModeError, SearchFailed
from .lattice import _abs_err_ok
from .scalar import (FLOAT_TOL, LinearExt, NumericContext, is_exact, is_rational,
                     scalar_round, scalar_sign, show)


def _freeze(x):
    if isinstance(x, (list, tuple)):
        return tuple(_freeze(v) for v in x)
    return x


def _flatten(x):
    if isinstance(x, (list, tuple)):
        for v in x:
            yield from _flatten(v)
    else:
        yield x


def natural_filtration(prices, n: int, T: int):
    """Partitions generated by the price history, with trivial F_0 and
    discrete F_T."""
    parts = [(tuple(range(n)),)]
    for t in range(1, T):
        groups: dict = {}
        for l in range(n):
            key = tuple(prices[j][s][l] for j in range(len(prices)) for s in range(t + 1))
            groups.setdefault(key, []).append(l)
        parts.append(tuple(sorted(tuple(g) for g in groups.values())))
    if T >= 1:
        parts.append(tuple((l,) for l in range(n)))
    return tuple(parts)


@dataclass(frozen=True)
class MarketModel:
    """``prices[j][t][l]``: asset j at time t in state l (bank account excluded)."""

    states: tuple
    prices: tuple
    rate: object = Fraction(0)
    probabilities: tuple | None = None
    filtration: tuple | None = None
    asset_names: tuple | None = None
    constants: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "states", tuple(str(s) for s in self.states))
        set_(self, "prices", _freeze(self.prices))
        if is_rational(self.rate):
            set_(self, "rate", Fraction(self.rate))
        n = len(self.states)
        if self.probabilities is None:
            p = 1.0 / n if self.mode == "float" else Fraction(1, n)
            set_(self, "probabilities", tuple([p] * n))
        else:
            set_(self, "probabilities", _freeze(self.probabilities))
        if self.asset_names is None:
            set_(self, "asset_names", tuple(f"S{j + 1}" for j in range(len(self.prices))))
        else:
            set_(self, "asset_names", tuple(self.asset_names))
        if self.filtration is None:
            try:
                f = natural_filtration(self.prices, n, self.T)
            except (IndexError, TypeError):
                f = ((tuple(range(n)),),)
            set_(self, "filtration", f)
        else:
            set_(self, "filtration", tuple(
                tuple(sorted(tuple(sorted(b)) for b in part)) for part in self.filtration))

    # shape
    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def d(self) -> int:
        return len(self.prices)

    @property
    def T(self) -> int:
        return len(self.prices[0]) - 1 if self.prices else 0

    @property
    def mode(self) -> str:
        vals = list(_flatten(self.prices)) + [self.rate]
        if self.probabilities is not None:
            vals += list(_flatten(self.probabilities))
        return "float" if any(isinstance(v, float) for v in vals) else "exact"

    @property
    def is_rational(self) -> bool:
        return all(is_rational(v) for v in _flatten(self.prices)) and is_rational(self.rate)

    def context(self, tol: float = FLOAT_TOL) -> NumericContext:
        return NumericContext(self.mode, tol)

    def price(self, j, t, l):
        return self.prices[j][t][l]

    def blocks(self, t: int):
        """Blocks of the partition at time t."""
        return self.filtration[t]

    def block_index(self, t: int, l: int) -> int:
        for b, block in enumerate(self.filtration[t]):
            if l in block:
                return b
        raise DimensionMismatch(f"state {l} missing from partition {t}")

    def growth(self, t: int):
        """(1+r)^t."""
        if isinstance(self.rate, float):
            return (1.0 + self.rate) ** t
        return (1 + self.rate) ** t

    @property
    def n_positions(self) -> int:
        return sum(len(self.filtration[t - 1]) for t in range(1, self.T + 1)) * self.d

    def position_slots(self):
        """(t, block index, asset) triples in the canonical flattening order."""
        return [(t, b, j) for t in range(1, self.T + 1)
                for b in range(len(self.filtration[t - 1])) for j in range(self.d)]

    def state_label(self, l: int) -> str:
        return self.states[l]

    def to_float(self) -> "MarketModel":
        f = lambda x: tuple(f(v) for v in x) if isinstance(x, tuple) else float(x)
        return MarketModel(self.states, f(self.prices), float(self.rate),
                           f(self.probabilities), self.filtration, self.asset_names)

    def with_asset(self, name: str, path) -> "MarketModel":
        """Model with one more risky asset (``path[t][l]``)."""
        return MarketModel(self.states, self.prices + (_freeze(path),), self.rate,
                           self.probabilities, self.filtration,
                           self.asset_names + (name,), dict(self.constants))


@dataclass(frozen=True)
class Claim:
    payoff: tuple

    def __post_init__(self):
        object.__setattr__(self, "payoff", tuple(self.payoff))

    def scaled(self, k) -> "Claim":
        return Claim(tuple(k * v for v in self.payoff))


def payoff_of(C) -> tuple:
    return C.payoff if isinstance(C, Claim) else tuple(C)


def discounted_claim(m: MarketModel, C) -> tuple:
    C = payoff_of(C)
    if len(C) != m.n:
        raise DimensionMismatch(f"claim has {len(C)} entries, model has {m.n} states")
    g = m.growth(m.T)
    return tuple(v / g for v in C)


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Violation:
    kind: str
    location: str
    message: str

    def __str__(self):
        return f"{self.kind} at {self.location}: {self.message}"


def validate_model(m: MarketModel) -> list[Violation]:
    out: list[Violation] = []
    add = lambda k, loc, msg: out.append(Violation(k, loc, msg))
    n, T = m.n, m.T
    if n == 0:
        add("ShapeMismatch", "states", "no states")
        return out
    if m.d == 0:
        add("ShapeMismatch", "assets", "no risky assets")
        return out
    if T < 1:
        add("ShapeMismatch", "periods", "horizon must be at least one period")
    for j, path in enumerate(m.prices):
        if len(path) != T + 1:
            add("ShapeMismatch", f"asset {j}", f"{len(path)} price vectors, expected {T + 1}")
            return out
        for t, row in enumerate(path):
            if len(row) != n:
                add("ShapeMismatch", f"asset {j}, time {t}", f"{len(row)} prices, expected {n}")
                return out
    vals = list(_flatten(m.prices)) + list(_flatten(m.probabilities)) + [m.rate]
    if any(isinstance(v, float) for v in vals) and any(isinstance(v, LinearExt) for v in vals):
        add("MixedMode", "model", "floats cannot be mixed with irrational exact values")
        return out
    ctx = m.context()
    # probabilities
    if len(m.probabilities) != n:
        add("ShapeMismatch", "probabilities", f"{len(m.probabilities)} entries, expected {n}")
    else:
        for l, p in enumerate(m.probabilities):
            if scalar_sign(p, ctx) <= 0:
                add("ZeroProbabilityState", f"state {m.states[l]}", f"probability {show(p)}")
        total = sum(m.probabilities)
        if scalar_sign(total - 1, ctx) != 0:
            add("ProbabilitySum", "probabilities", f"sum is {show(total)}")
    if isinstance(m.rate, LinearExt):
        add("IrrationalRate", "rate", "the interest rate must be rational or a float")
    elif scalar_sign(m.rate + 1, ctx) <= 0:
        add("RateBound", "rate", "rate must exceed -1")
    for j in range(m.d):
        for t in range(T + 1):
            for l in range(n):
                if scalar_sign(m.prices[j][t][l], ctx) < 0:
                    add("NegativePrice", f"asset {m.asset_names[j]}, time {t}, state {m.states[l]}",
                        "prices must be nonnegative")
    # filtration
    F = m.filtration
    if len(F) != T + 1:
        add("FiltrationLength", "filtration", f"{len(F)} partitions, expected {T + 1}")
        return out
    for t, part in enumerate(F):
        seen = sorted(l for b in part for l in b)
        if seen != list(range(n)):
            add("FiltrationNotPartition", f"time {t}", "blocks must partition the states")
            return out
    if len(F[0]) != 1:
        add("FiltrationInitial", "time 0", "the initial partition must be trivial")
    if len(F[T]) != n:
        add("FiltrationTerminal", f"time {T}", "the terminal partition must be discrete")
    for t in range(T):
        for b in F[t + 1]:
            if not any(set(b) <= set(a) for a in F[t]):
                add("FiltrationNotRefining", f"time {t + 1}",
                    f"block {[m.states[l] for l in b]} straddles partition {t}")
    for j in range(m.d):
        for t in range(T + 1):
            for bi, b in enumerate(F[t]):
                first = m.prices[j][t][b[0]]
                if any(scalar_sign(m.prices[j][t][l] - first, ctx) != 0 for l in b[1:]):
                    add("AdaptednessViolation",
                        f"asset {m.asset_names[j]}, time {t}, block {bi}",
                        "price differs within a block")
    return out


# ---------------------------------------------------------------- gains

def discounted_prices(m: MarketModel):
    """``Shat[j][t][l] = S[j][t][l] / (1+r)^t``."""
    return [[[m.prices[j][t][l] / m.growth(t) for l in range(m.n)]
             for t in range(m.T + 1)] for j in range(m.d)]


def discounted_gains(m: MarketModel):
    """``dS[j][t-1][l]``: discounted gain of asset j over period t."""
    S = discounted_prices(m)
    return [[[S[j][t][l] - S[j][t - 1][l] for l in range(m.n)]
             for t in range(1, m.T + 1)] for j in range(m.d)]


def gain_vectors(m: MarketModel):
    """Same data as :func:`discounted_gains`, laid out ``[t-1][l] -> tuple over assets``."""
    g = discounted_gains(m)
    return [[tuple(g[j][t][l] for j in range(m.d)) for l in range(m.n)] for t in range(m.T)]


def gain_matrix(m: MarketModel, states=None):
    """Rows: states; columns: position slots.  Row l holds the discounted
    terminal gain per unit position, so ``V_T_hat = V0 + row . x``."""
    G = gain_vectors(m)
    slots = m.position_slots()
    states = range(m.n) if states is None else states
    rows = []
    for l in states:
        row = []
        for t, b, j in slots:
            row.append(G[t - 1][l][j] if m.block_index(t - 1, l) == b else Fraction(0))
        rows.append(row)
    return rows


# ---------------------------------------------------------------- strategies

def classify(values) -> str:
    vals = list(values)
    if all(is_rational(v) for v in vals):
        return "integer" if all(Fraction(v).denominator == 1 for v in vals) else "rational"
    if all(v.is_integer() if isinstance(v, float) else is_rational(v) and Fraction(v).denominator == 1
           for v in vals):
        return "integer"  # float-mode integer positions
    return "real"


@dataclass(frozen=True)
class Strategy:
    """``positions[t-1][b][j]``: units of asset j held over period t on block b
    of the partition at t-1.  The bank leg is implied by V0 and self-financing."""

    positions: tuple
    V0: object = Fraction(0)
    cls: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "positions", _freeze(self.positions))
        vals = list(_flatten(self.positions))
        if is_rational(self.V0) and not isinstance(self.V0, Fraction):
            object.__setattr__(self, "V0", Fraction(self.V0))
        actual = classify(vals)
        if self.cls is None:
            object.__setattr__(self, "cls", actual)
        elif self.cls == "integer" and actual != "integer":
            raise InputError("integer strategy with non-integer positions")
        elif self.cls == "rational" and actual == "real":
            raise InputError("rational strategy with irrational positions")

    def vector(self) -> list:
        return list(_flatten(self.positions))

    @classmethod
    def from_vector(cls, m: MarketModel, x, V0=Fraction(0), kind=None) -> "Strategy":
        x = list(x)
        if len(x) != m.n_positions:
            raise DimensionMismatch(f"{len(x)} positions, model needs {m.n_positions}")
        pos, k = [], 0
        for t in range(1, m.T + 1):
            period = []
            for _ in m.filtration[t - 1]:
                period.append(tuple(x[k:k + m.d]))
                k += m.d
            pos.append(tuple(period))
        return cls(tuple(pos), V0, kind)

    @classmethod
    def static(cls, m: MarketModel, phi, V0=Fraction(0), kind=None) -> "Strategy":
        phi = tuple(phi)
        return cls(tuple(tuple(phi for _ in m.filtration[t - 1]) for t in range(1, m.T + 1)),
                   V0, kind)

    @classmethod
    def one_period(cls, m: MarketModel, t: int, block: int, phi, V0=Fraction(0),
                   kind=None) -> "Strategy":
        zero = tuple(Fraction(0) for _ in range(m.d))
        pos = []
        for s in range(1, m.T + 1):
            pos.append(tuple(tuple(phi) if (s == t and b == block) else zero
                             for b in range(len(m.filtration[s - 1]))))
        return cls(tuple(pos), V0, kind)

    def at(self, m: MarketModel, t: int, l: int) -> tuple:
        return self.positions[t - 1][m.block_index(t - 1, l)]

    def scaled(self, k) -> "Strategy":
        return Strategy(tuple(tuple(tuple(k * v for v in ph) for ph in per)
                              for per in self.positions), k * self.V0)


def _check_shape(m: MarketModel, s: Strategy):
    if len(s.positions) != m.T:
        raise DimensionMismatch(f"strategy has {len(s.positions)} periods, model has {m.T}")
    for t, per in enumerate(s.positions, 1):
        if len(per) != len(m.filtration[t - 1]):
            raise DimensionMismatch(f"period {t}: {len(per)} blocks, expected "
                                    f"{len(m.filtration[t - 1])}")
        for ph in per:
            if len(ph) != m.d:
                raise DimensionMismatch(f"period {t}: {len(ph)} positions, expected {m.d}")
    fl = any(isinstance(v, float) for v in s.vector() + [s.V0])
    if fl and m.mode == "exact":
        raise MixedModeError("float strategy on an exact model; convert with to_float()")


def _dot(a, b):
    acc = 0
    for x, y in zip(a, b):
        if x and y:
            acc = acc + x * y
    return acc


@dataclass
class ValueProcess:
    V: list  # V[t][l]
    Vhat: list  # discounted

    def terminal(self) -> list:
        return self.V[-1]


def value_process(m: MarketModel, s: Strategy) -> ValueProcess:
    """Values from the discounted gain sum ``Vhat_t = V0 + sum_k phi_k dS_k``."""
    _check_shape(m, s)
    G = gain_vectors(m)
    Vhat = [[s.V0] * m.n]
    for t in range(1, m.T + 1):
        Vhat.append([Vhat[-1][l] + _dot(s.at(m, t, l), G[t - 1][l]) for l in range(m.n)])
    V = [[v * m.growth(t) for v in row] for t, row in enumerate(Vhat)]
    return ValueProcess(V, Vhat)


def bank_leg(m: MarketModel, s: Strategy) -> list:
    """``phi0[t-1][l]``: bank units over period t, from the self-financing rule."""
    _check_shape(m, s)
    S = lambda t, l: tuple(m.prices[j][t][l] for j in range(m.d))
    out = []
    V = [s.V0] * m.n
    for t in range(1, m.T + 1):
        g = m.growth(t - 1)
        phi0 = [(V[l] - _dot(s.at(m, t, l), S(t - 1, l))) / g for l in range(m.n)]
        out.append(phi0)
        V = [phi0[l] * m.growth(t) + _dot(s.at(m, t, l), S(t, l)) for l in range(m.n)]
    return out


def value_process_rollforward(m: MarketModel, s: Strategy) -> list:
    """``V[t][l]`` computed from the bank leg and holdings directly."""
    phi0 = bank_leg(m, s)
    V = [[s.V0] * m.n]
    for t in range(1, m.T + 1):
        V.append([phi0[t - 1][l] * m.growth(t)
                  + _dot(s.at(m, t, l), tuple(m.prices[j][t][l] for j in range(m.d)))
                  for l in range(m.n)])
    return V


def clear_denominators(s: Strategy):
    """Least N with N*phi integral; returns ``(N, N*s)``."""
    vals = s.vector()
    if not all(is_rational(v) for v in vals):
        raise InputError("clear_denominators needs rational positions")
    N = 1
    for v in vals:
        N = math.lcm(N, Fraction(v).denominator)
    out = s.scaled(Fraction(N))
    return N, Strategy(out.positions, out.V0, "integer")


def primitive(s: Strategy) -> Strategy:
    """Divide an integer strategy with V0 = 0 by the gcd of its positions."""
    vals = [int(v) for v in s.vector()]
    g = 0
    for v in vals:
        g = math.gcd(g, v)
    if g <= 1 or s.V0 != 0:
        return s
    out = s.scaled(Fraction(1, g))
    return Strategy(out.positions, out.V0, "integer")


@dataclass
class ArbitrageCheck:
    is_arbitrage: bool
    V0: object
    terminal: list
    reason: str = ""


def verify_arbitrage(m: MarketModel, s: Strategy, ctx: NumericContext | None = None
                     ) -> ArbitrageCheck:
    ctx = ctx or m.context()
    vp = value_process(m, s)
    VT = vp.terminal()
    if scalar_sign(s.V0, ctx) > 0:
        return ArbitrageCheck(False, s.V0, VT, "positive initial value")
    signs = [scalar_sign(v, ctx) for v in VT]
    if any(x < 0 for x in signs):
        return ArbitrageCheck(False, s.V0, VT, "negative terminal value")
    if not any(x > 0 for x in signs):
        return ArbitrageCheck(False, s.V0, VT, "terminal value identically zero")
    return ArbitrageCheck(True, s.V0, VT, "")


# ---------------------------------------------------------------- approximation

def _ceil_pow_inv(eps, k: int) -> int:
    """Least integer q with q * eps^k > 1."""
    if is_rational(eps):
        return math.floor(1 / Fraction(eps) ** k) + 1
    with mpmath.workdps(50):
        return int(mpmath.floor(1 / mpmath.mpf(eps) ** k)) + 1


def dirichlet_strategy_approx(m: MarketModel, s: Strategy, eps, cap: int = 10**7):
    """Integer strategy psi and q with ``|psi - q phi| < q^(-1/k) < eps``,
    ``k = n d (T+1)``, and ``V0(psi) = q V0(phi)``.

    q is the smallest admissible value.
    """
    _check_shape(m, s)
    if not 0 < eps < 1:
        raise InputError("eps must lie in (0, 1)")
    k = m.n * m.d * (m.T + 1)
    vals = s.vector()
    distinct = list(dict.fromkeys(vals))
    q0 = _ceil_pow_inv(eps, k)
    if all(is_rational(v) for v in distinct):
        Q0 = 1
        for v in distinct:
            Q0 = math.lcm(Q0, Fraction(v).denominator)
        q = -(-q0 // Q0) * Q0
    else:
        approx = [float(v) for v in distinct]
        q = None
        for cand in range(q0, q0 + cap):
            bound = cand ** (-1.0 / k)
            if any(abs(a * cand - round(a * cand)) > bound + 1e-9 for a in approx):
                continue
            if all(_abs_err_ok(v * cand - scalar_round(v * cand), k, cand) for v in distinct):
                q = cand
                break
        if q is None:
            raise SearchFailed("no admissible q below the search cap")
    ints = {v: Fraction(scalar_round(v * q)) for v in distinct}
    psi = Strategy(tuple(tuple(tuple(ints[v] for v in ph) for ph in per) for per in s.positions),
                   q * s.V0, None)
    return q, psi
