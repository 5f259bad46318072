"""One-period variance-optimal hedging: least squares, closest lattice point
and naive rounding, with an error/position-size report."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NotMartingaleMeasure, NotOnePeriod
from .lattice import as_basis, cvp_closest
from .market import MarketModel, discounted_claim, gain_vectors

TOL = 1e-9
METHODS = ("classical", "cvp", "rounding")


@dataclass
class VarHedgeProblem:
    model: MarketModel
    claim: tuple
    measure: tuple
    copies: int = 1

    def __post_init__(self):
        m = self.model
        if m.T != 1:
            raise NotOnePeriod("variance-optimal hedging is one-period only")
        if self.copies < 1:
            raise InputError("copies must be a positive integer")
        P = np.array([float(p) for p in self.measure])
        if len(P) != m.n:
            raise InputError(f"measure has {len(P)} entries, model has {m.n} states")
        if (P <= 0).any() or abs(P.sum() - 1) > TOL:
            raise NotMartingaleMeasure("pricing measure must be strictly positive and sum to one")
        D = self.gains()
        if np.abs(P @ D).max(initial=0) > TOL * max(1.0, np.abs(D).max(initial=0)):
            raise NotMartingaleMeasure("discounted gains have nonzero expectation")

    def gains(self) -> np.ndarray:
        """n x d matrix of discounted one-period gains."""
        return np.array([[float(v) for v in row] for row in gain_vectors(self.model)[0]])

    def weights(self) -> np.ndarray:
        return np.sqrt(np.array([float(p) for p in self.measure]))

    def centered_claim(self) -> np.ndarray:
        Ch = np.array([float(v) for v in discounted_claim(self.model, self.claim)])
        P = np.array([float(p) for p in self.measure])
        return Ch - P @ Ch

    def lattice(self):
        """Generators (rows) and target of the weighted closest-point problem."""
        w = self.weights()
        B = (self.gains() * w[:, None]).T
        t = self.copies * self.centered_claim() * w
        return B, t

    def initial_value(self) -> float:
        Ch = np.array([float(v) for v in discounted_claim(self.model, self.claim)])
        return float(self.copies * (np.array([float(p) for p in self.measure]) @ Ch))


@dataclass
class VarHedgeResult:
    method: str
    positions: tuple
    V0: float
    residual: float
    rmse: float
    position_size: float
    zero_norm: bool = False


def _result(p: VarHedgeProblem, method, phi) -> VarHedgeResult:
    B, t = p.lattice()
    phi = np.asarray(phi, dtype=float)
    res = float(np.linalg.norm(t - phi @ B))
    norm = float(np.linalg.norm(t))
    zero = norm <= TOL
    return VarHedgeResult(method, tuple(phi.tolist()), p.initial_value(), res,
                          0.0 if zero else res / norm, float(np.abs(phi).max(initial=0)), zero)


def classical_var_hedge(p: VarHedgeProblem) -> VarHedgeResult:
    B, t = p.lattice()
    phi, *_ = np.linalg.lstsq(B.T, t, rcond=None)
    return _result(p, "classical", phi)


def integer_var_hedge(p: VarHedgeProblem) -> VarHedgeResult:
    B, t = p.lattice()
    r = cvp_closest(as_basis(B), t)
    return _result(p, "cvp", r.phi)


def rounded_var_hedge(p: VarHedgeProblem) -> VarHedgeResult:
    phi = np.round(np.asarray(classical_var_hedge(p).positions))  # half to even
    return _result(p, "rounding", phi)


_RUN = {"classical": classical_var_hedge, "cvp": integer_var_hedge, "rounding": rounded_var_hedge}


def var_hedge_report(m: MarketModel, C, measure, Ns, methods=METHODS) -> dict:
    """``{N: {method: VarHedgeResult}}`` in the order of ``Ns``."""
    out = {}
    for N in Ns:
        p = VarHedgeProblem(m, tuple(C), tuple(measure), int(N))
        out[int(N)] = {k: _RUN[k](p) for k in methods}
    return out


def render_table(report: dict, digits: int = 3) -> str:
    Ns = list(report)
    methods = list(next(iter(report.values()))) if report else []
    head = f"{'':<26}" + "".join(f"{'N=' + str(N):>9}" for N in Ns)
    lines = [head]
    for meth in methods:
        for label, key in (("rMSE", "rmse"), ("position size", "position_size")):
            cells = []
            for N in Ns:
                v = getattr(report[N][meth], key)
                if key == "position_size" and meth != "classical":
                    cells.append(f"{int(round(v)):>9d}")
                else:
                    cells.append(f"{v:>9.{digits}f}")
            lines.append(f"{meth + ': ' + label:<26}" + "".join(cells))
    return "\n".join(lines)
