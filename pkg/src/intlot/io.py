"""JSON model, claim, measure and price-process files.

Model::

    {"states": [...], "probabilities": [...]?, "rate": lit, "periods": T,
     "filtration": [[[state, ...], ...], ...]?, "constants": {name: "3.14..."}?,
     "assets": [{"name": str, "prices": [[lit per state] per time 0..T]}]}

Scalar literals follow :func:`intlot.scalar.parse_scalar`.
"""
from __future__ import annotations

import json
import re
from importlib import resources
from pathlib import Path

from .errors import InputError
from .market import MarketModel, validate_model
from .scalar import components, format_scalar, is_exact, parse_scalar, register_constant, scalar_sign

MODEL_KEYS = {"states", "probabilities", "rate", "periods", "filtration", "constants", "assets"}


class FileError(InputError):
    """Malformed input with a file/line position."""

    def __init__(self, path, line, col, msg):
        self.path, self.line, self.col = str(path), line, col
        loc = f"{self.path}:{line}" + (f":{col}" if col else "")
        super().__init__(f"{loc}: {msg}")


def _line_of(text: str, key: str) -> int:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _read(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}")
    try:
        return json.loads(text), text
    except json.JSONDecodeError as e:
        raise FileError(path, e.lineno, e.colno, e.msg)


def _wrap(path, text, key, fn):
    try:
        return fn()
    except FileError:
        raise
    except InputError as e:
        raise FileError(path, _line_of(text, key), None, str(e))


# ---------------------------------------------------------------- models

def model_from_dict(obj: dict, where: str = "model") -> MarketModel:
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected an object")
    extra = set(obj) - MODEL_KEYS
    if extra:
        raise InputError(f"{where}: unknown keys {sorted(extra)}")
    for k in ("states", "assets"):
        if k not in obj:
            raise InputError(f"{where}: missing key {k!r}")
    for name, exp in (obj.get("constants") or {}).items():
        register_constant(name, exp)
    states = [str(s) for s in obj["states"]]
    if len(set(states)) != len(states):
        raise InputError(f"{where}: duplicate state names")
    n = len(states)
    assets = obj["assets"]
    if not isinstance(assets, list) or not assets:
        raise InputError(f"{where}: 'assets' must be a nonempty list")
    T = obj.get("periods")
    names, prices = [], []
    for j, a in enumerate(assets):
        if not isinstance(a, dict) or "prices" not in a:
            raise InputError(f"{where}: assets[{j}] needs 'prices'")
        names.append(str(a.get("name", f"S{j + 1}")))
        rows = a["prices"]
        if T is None:
            T = len(rows) - 1
        if not isinstance(rows, list) or len(rows) != T + 1:
            raise InputError(f"{where}: assets[{j}].prices needs {T + 1} rows (periods = {T})")
        path = []
        for t, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                raise InputError(f"{where}: assets[{j}].prices[{t}] needs {n} entries")
            path.append([parse_scalar(v, f"assets[{j}].prices[{t}][{l}]") for l, v in enumerate(row)])
        prices.append(path)
    if not isinstance(T, int) or T < 1:
        raise InputError(f"{where}: 'periods' must be a positive integer")
    probs = obj.get("probabilities")
    if probs is not None:
        if len(probs) != n:
            raise InputError(f"{where}: probabilities needs {n} entries")
        probs = [parse_scalar(p, f"probabilities[{l}]") for l, p in enumerate(probs)]
    filt = obj.get("filtration")
    if filt is not None:
        filt = [[[_state_index(s, states, where) for s in b] for b in part] for part in filt]
    rate = parse_scalar(obj.get("rate", 0), "rate")
    return MarketModel(states, prices, rate, probs, filt, names)


def _state_index(s, states, where):
    if isinstance(s, str) and s in states:
        return states.index(s)
    if isinstance(s, int) and not isinstance(s, bool) and 1 <= s <= len(states):
        return s - 1
    raise InputError(f"{where}: unknown state {s!r} in filtration")


def model_to_dict(m: MarketModel) -> dict:
    used = set()
    for path in m.prices:
        for row in path:
            for v in row:
                if is_exact(v):
                    used |= set(components(v)) - {"1"}
    out = {
        "states": list(m.states),
        "probabilities": [format_scalar(p) for p in m.probabilities],
        "rate": format_scalar(m.rate),
        "periods": m.T,
        "filtration": [[[m.states[l] for l in b] for b in part] for part in m.filtration],
        "assets": [{"name": nm, "prices": [[format_scalar(v) for v in row] for row in path]}
                   for nm, path in zip(m.asset_names, m.prices)],
    }
    custom = {k: v for k, v in m.constants.items() if k in used}
    if custom:
        out["constants"] = custom
    return out


def load_model(path, validate: bool = True) -> MarketModel:
    obj, text = _read(path)
    m = _wrap(path, text, "assets", lambda: model_from_dict(obj, str(path)))
    if isinstance(obj, dict) and obj.get("constants"):
        object.__setattr__(m, "constants", dict(obj["constants"]))
    if validate:
        bad = validate_model(m)
        if bad:
            key = {"ZeroProbabilityState": "probabilities", "ProbabilitySum": "probabilities",
                   "IrrationalRate": "rate", "RateBound": "rate"}.get(bad[0].kind, "assets")
            if bad[0].kind.startswith("Filtration") or bad[0].kind == "AdaptednessViolation":
                key = "filtration" if "filtration" in obj else "assets"
            msg = "; ".join(str(v) for v in bad)
            raise FileError(path, _line_of(text, key), None, f"invalid model: {msg}")
    return m


def _write(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def dump_model(m: MarketModel, path) -> None:
    _write(path, model_to_dict(m))


# ---------------------------------------------------------------- vectors

def _vector_file(path, key, n=None):
    obj, text = _read(path)
    if not isinstance(obj, dict) or key not in obj:
        raise FileError(path, 1, None, f"expected an object with key {key!r}")
    vals = obj[key]

    def parse():
        if not isinstance(vals, list):
            raise InputError(f"{key!r} must be a list")
        if n is not None and len(vals) != n:
            raise InputError(f"{key!r} has {len(vals)} entries, model has {n} states")
        return tuple(parse_scalar(v, f"{key}[{i}]") for i, v in enumerate(vals))
    return _wrap(path, text, key, parse)


def load_claim(path, m: MarketModel | None = None) -> tuple:
    C = _vector_file(path, "payoff", m.n if m else None)
    if any(scalar_sign(v) < 0 for v in C):
        obj, text = _read(path)
        raise FileError(path, _line_of(text, "payoff"), None, "claims must be nonnegative")
    return C


def load_measure(path, m: MarketModel | None = None) -> tuple:
    return _vector_file(path, "measure", m.n if m else None)


def load_extension(path, m: MarketModel | None = None) -> list:
    obj, text = _read(path)
    if not isinstance(obj, dict) or "prices" not in obj:
        raise FileError(path, 1, None, "expected an object with key 'prices'")

    def parse():
        rows = obj["prices"]
        if m is not None and (not isinstance(rows, list) or len(rows) != m.T + 1):
            raise InputError(f"'prices' needs {m.T + 1} rows")
        return [[parse_scalar(v, f"prices[{t}][{l}]") for l, v in enumerate(row)]
                for t, row in enumerate(rows)]
    return _wrap(path, text, "prices", parse)


def dump_vector(key: str, values, path) -> None:
    _write(path, {key: [format_scalar(v) for v in values]})


# ---------------------------------------------------------------- bundled data

def data_path(kind: str, name: str) -> Path:
    """Path of a bundled example file, e.g. ``data_path("models", "gap")``."""
    base = resources.files("intlot") / "data" / kind
    p = Path(str(base / (name if name.endswith(".json") else name + ".json")))
    if not p.exists():
        raise InputError(f"no bundled {kind[:-1]} named {name!r}")
    return p


def bundled(kind: str) -> list[str]:
    base = Path(str(resources.files("intlot") / "data" / kind))
    return sorted(p.stem for p in base.glob("*.json"))


def resolve(path, kind: str) -> Path:
    """A user path, falling back to the bundled corpus (``models/gap.json`` or ``gap``)."""
    p = Path(path)
    if p.exists():
        return p
    stem = p.stem
    try:
        return data_path(kind, stem)
    except InputError:
        raise InputError(f"{path}: no such file")
