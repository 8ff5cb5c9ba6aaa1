"""Scenario JSON files: parsing with field-named errors and a byte-stable canonical form."""

from __future__ import annotations

import json
import math
from pathlib import Path

from .errors import ScenarioError
from .game import DEFAULT_STRATEGY_BOUNDS, Scenario
from .prospect import (CONVEX_EXPONENTIAL, EXPONENTIAL, IDENTITY, LINEAR_DERIVATIVE, LOG_GAIN,
                       ValueFunction, WeightingFunction)

_TOP = {"players", "randomness", "prices", "value_functions", "weighting"}
_VF_PARAMS = {
    "identity": (),
    "log_gain": (),
    "exponential": ("lambda",),
    "linear_derivative": ("c", "d"),
    "convex_exponential": ("mu",),
}


def _obj(doc, name, allowed, required=()):
    if not isinstance(doc, dict):
        raise ScenarioError("expected an object", name)
    for key in doc:
        if key not in allowed:
            raise ScenarioError(f"unknown key {key!r}", f"{name}.{key}" if name else key)
    for key in required:
        if key not in doc:
            raise ScenarioError("missing required key", f"{name}.{key}" if name else key)
    return doc


def _num(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(f"expected a finite number, got {v!r}", name)
    return float(v)


def _nums(v, name):
    if not isinstance(v, list):
        raise ScenarioError("expected a list of numbers", name)
    return [_num(e, f"{name}[{k}]") for k, e in enumerate(v)]


def _value_function(doc, name) -> ValueFunction:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ScenarioError("expected an object with a 'kind'", name)
    kind = doc["kind"]
    if kind not in _VF_PARAMS:
        raise ScenarioError(f"unknown kind {kind!r}", f"{name}.kind")
    params = _VF_PARAMS[kind]
    _obj(doc, name, {"kind", *params}, params)
    vals = [_num(doc[k], f"{name}.{k}") for k in params]
    try:
        return {
            "identity": ValueFunction.identity,
            "log_gain": ValueFunction.log_gain,
            "exponential": ValueFunction.exponential,
            "linear_derivative": ValueFunction.linear_derivative,
            "convex_exponential": ValueFunction.convex_exponential,
        }[kind](*vals)
    except ValueError as exc:
        raise ScenarioError(str(exc), name) from exc


def _weighting(doc) -> WeightingFunction:
    _obj(doc, "weighting", {"kind", "gamma"}, ("kind",))
    kind = doc["kind"]
    if kind == "identity":
        _obj(doc, "weighting", {"kind"})
        return WeightingFunction.identity()
    if kind == "tk":
        _obj(doc, "weighting", {"kind", "gamma"}, ("gamma",))
        try:
            return WeightingFunction.tversky_kahneman(_num(doc["gamma"], "weighting.gamma"))
        except ValueError as exc:
            raise ScenarioError(str(exc), "weighting.gamma") from exc
    raise ScenarioError(f"unknown kind {kind!r}", "weighting.kind")


def loads_scenario(text: str):
    """Parse a scenario document; returns (Scenario, per-player value functions, weighting)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"malformed JSON: {exc}") from exc
    _obj(doc, "", _TOP, ("players", "randomness", "prices"))
    players = _obj(doc["players"], "players", {"a", "b", "y", "bounds"}, ("a", "b", "y"))
    rand = _obj(doc["randomness"], "randomness", {"support", "probs"}, ("support", "probs"))
    prices = _obj(doc["prices"], "prices", {"min", "max"}, ("min", "max"))
    a = _nums(players["a"], "players.a")
    if "bounds" in players:
        if not isinstance(players["bounds"], list):
            raise ScenarioError("expected a list of [lo, hi] pairs", "players.bounds")
        bounds = [_nums(pair, f"players.bounds[{k}]") for k, pair in enumerate(players["bounds"])]
        if any(len(pair) != 2 for pair in bounds):
            raise ScenarioError("each entry must be a [lo, hi] pair", "players.bounds")
    else:
        bounds = [list(DEFAULT_STRATEGY_BOUNDS)] * len(a)
    scenario = Scenario(
        a=a, b=_nums(players["b"], "players.b"), y=_nums(players["y"], "players.y"),
        support=_nums(rand["support"], "randomness.support"),
        probs=_nums(rand["probs"], "randomness.probs"), bounds=bounds,
        price_bounds=(_num(prices["min"], "prices.min"), _num(prices["max"], "prices.max")))
    vf_docs = doc.get("value_functions", [{"kind": "identity"}])
    if not isinstance(vf_docs, list) or len(vf_docs) not in (1, scenario.n):
        raise ScenarioError(f"expected a list of 1 or {scenario.n} entries", "value_functions")
    vfs = [_value_function(v, f"value_functions[{k}]") for k, v in enumerate(vf_docs)]
    if len(vfs) == 1:
        vfs = vfs * scenario.n
    weighting = _weighting(doc.get("weighting", {"kind": "identity"}))
    return scenario, vfs, weighting


def parse_scenario(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    return loads_scenario(text)


def _vf_doc(vf: ValueFunction) -> dict:
    if vf.kind == IDENTITY:
        return {"kind": "identity"}
    if vf.kind == LOG_GAIN:
        return {"kind": "log_gain"}
    if vf.kind == EXPONENTIAL:
        return {"kind": "exponential", "lambda": vf.p0}
    if vf.kind == LINEAR_DERIVATIVE:
        return {"kind": "linear_derivative", "c": vf.p0, "d": vf.p1}
    if vf.kind == CONVEX_EXPONENTIAL:
        return {"kind": "convex_exponential", "mu": vf.p0}
    raise ValueError(f"unknown value function kind {vf.kind}")


def _render(v) -> str:
    if isinstance(v, dict):
        return "{" + ",".join(f"{json.dumps(k)}:{_render(v[k])}" for k in sorted(v)) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ",".join(_render(e) for e in v) + "]"
    if isinstance(v, str):
        return json.dumps(v)
    return format(float(v), ".17g")


def dumps_scenario(s: Scenario, vfs=None, weighting=None) -> str:
    """Canonical form: sorted keys, no whitespace, floats with 17 significant digits."""
    vfs = list(vfs) if vfs is not None else [ValueFunction.identity()]
    if all(vf == vfs[0] for vf in vfs):
        vfs = vfs[:1]
    weighting = weighting or WeightingFunction.identity()
    w_doc = {"kind": "identity"} if weighting.gamma is None else {"kind": "tk",
                                                                   "gamma": weighting.gamma}
    doc = {
        "players": {"a": list(s.a), "b": list(s.b), "y": list(s.y),
                    "bounds": [list(r) for r in s.bounds]},
        "randomness": {"support": list(s.support), "probs": list(s.probs)},
        "prices": {"min": s.price_bounds[0], "max": s.price_bounds[1]},
        "value_functions": [_vf_doc(vf) for vf in vfs],
        "weighting": w_doc,
    }
    return _render(doc) + "\n"
