"""Seeded random market models and brute-force oracles shared by the tests."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction

import numpy as np

from intlot.market import MarketModel, gain_vectors, validate_model


def _partition(rng, n):
    k = rng.randint(1, n)
    labels = [rng.randrange(k) for _ in range(n)]
    blocks = {}
    for l, b in enumerate(labels):
        blocks.setdefault(b, []).append(l)
    return sorted(blocks.values())


def random_model(rng: random.Random, n_max=5, d_max=3, T_max=2, arbitrage_bias=0.3,
                 den=4, span=6) -> MarketModel:
    """Adapted rational price tree.  With probability ``arbitrage_bias`` one
    node keeps all successors on one side of the current price."""
    n, d, T = rng.randint(1, n_max), rng.randint(1, d_max), rng.randint(1, T_max)
    F = [[list(range(n))]]
    for t in range(1, T):
        # refine the previous level
        nxt = []
        for b in F[-1]:
            sub = _partition(rng, len(b))
            nxt += [[b[i] for i in s] for s in sub]
        F.append(sorted(nxt))
    F.append([[l] for l in range(n)])
    prices = [[[None] * n for _ in range(T + 1)] for _ in range(d)]
    skew_at = None
    if rng.random() < arbitrage_bias:
        skew_at = (rng.randrange(d), rng.randint(1, T))
    for j in range(d):
        x0 = Fraction(rng.randint(2 * den, 4 * den), den)
        for l in range(n):
            prices[j][0][l] = x0
        for t in range(1, T + 1):
            for parent in F[t - 1]:
                kids = [b for b in F[t] if b[0] in parent]
                base = prices[j][t - 1][parent[0]]
                if len(kids) == 1 and (j, t) != skew_at:
                    steps = [Fraction(0)]
                else:
                    steps = [Fraction(rng.randint(-span, span), den) for _ in kids]
                    if (j, t) == skew_at:
                        steps = [abs(v) for v in steps]
                    elif len(kids) > 1:
                        steps[0] = Fraction(rng.randint(1, span), den)
                        steps[1] = -Fraction(rng.randint(1, span), den)
                        rng.shuffle(steps)
                for b, st in zip(kids, steps):
                    v = max(base + st, Fraction(0))
                    for l in b:
                        prices[j][t][l] = v
    names = [f"s{l + 1}" for l in range(n)]
    m = MarketModel(names, prices, Fraction(rng.choice([0, 0, 1]), 20), None, F)
    assert validate_model(m) == []
    return m


def random_claim(rng, m, hi=8):
    return tuple(Fraction(rng.randint(0, hi * 2), 2) for _ in range(m.n))


def atoms(m):
    """(period, block states) pairs."""
    return [(t, b) for t in range(1, m.T + 1) for b in m.filtration[t - 1]]


def brute_integer_arbitrage(m, radius=10):
    """First one-period integer arbitrage in the box, or None (exact signs)."""
    G = gain_vectors(m)
    for t, block in atoms(m):
        rows = [G[t - 1][l] for l in block]
        for phi in itertools.product(range(-radius, radius + 1), repeat=m.d):
            if not any(phi):
                continue
            vals = [sum(p * g for p, g in zip(phi, row)) for row in rows]
            if all(v >= 0 for v in vals) and any(v > 0 for v in vals):
                return t, block, phi
    return None


def float_gains(m):
    return np.array([[[float(v) for v in row] for row in per] for per in gain_vectors(m)])
