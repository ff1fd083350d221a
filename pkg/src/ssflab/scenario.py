"""TOML scenario files.

Top-level keys are the :class:`~ssflab.harness.Scenario` field names;
``h0_spec`` and ``v_spec`` are tables and ``schwartz_specs`` is an array of
tables. Missing keys take the documented defaults.
"""

from __future__ import annotations

import math
import numbers
import sys
from dataclasses import fields
from pathlib import Path
from typing import Sequence, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ScenarioParseError, ScenarioValidationError
from .harness import H0_DEFAULTS, SCHWARTZ_DEFAULTS, V_DEFAULTS, Scenario

__all__ = [
    "parse_scenario",
    "parse_scenario_text",
    "serialize_scenario",
    "scenario_from_dict",
    "validate_scenario",
    "apply_overrides",
]

_FIELDS = {f.name for f in fields(Scenario)}
_REQUIRED = ("seed", "ambient_dim")
_INT_PARAMS = {"rank", "n_samples"}


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioParseError(f"{where}: expected an integer, got {value!r}")
    return int(value)


def _number_list(value, where: str) -> tuple:
    if not isinstance(value, list):
        raise ScenarioParseError(f"{where}: expected an array")
    return tuple(_number(v, where) for v in value)


def _operator_spec(raw, defaults: dict, where: str, default_kind: str) -> dict:
    if not isinstance(raw, dict):
        raise ScenarioParseError(f"{where}: expected a table")
    kind = raw.get("kind", default_kind)
    if kind not in defaults:
        raise ScenarioParseError(f"{where}: unknown kind {kind!r}; expected one of {sorted(defaults)}")
    allowed = defaults[kind]
    out = {"kind": kind}
    for key, value in raw.items():
        if key == "kind":
            continue
        if key not in allowed:
            raise ScenarioParseError(f"unknown key {where}.{key!r} for kind {kind!r}")
    for key, default in allowed.items():
        value = raw.get(key, default)
        out[key] = _integer(value, f"{where}.{key}") if key in _INT_PARAMS else _number(value, f"{where}.{key}")
    return out


def scenario_from_dict(data: dict) -> Scenario:
    """Build and validate a Scenario from parsed TOML data."""
    for key in data:
        if key not in _FIELDS:
            raise ScenarioParseError(f"unknown key {key!r}")
    for key in _REQUIRED:
        if key not in data:
            raise ScenarioParseError(f"missing required key {key!r}")
    kw = {
        "seed": _integer(data["seed"], "seed"),
        "ambient_dim": _integer(data["ambient_dim"], "ambient_dim"),
    }
    if "h0_spec" in data:
        kw["h0_spec"] = _operator_spec(data["h0_spec"], H0_DEFAULTS, "h0_spec", "dense-random")
    if "v_spec" in data:
        kw["v_spec"] = _operator_spec(data["v_spec"], V_DEFAULTS, "v_spec", "dense-random")
    if "schwartz_specs" in data:
        raw = data["schwartz_specs"]
        if not isinstance(raw, list):
            raise ScenarioParseError("schwartz_specs: expected an array of tables")
        kw["schwartz_specs"] = tuple(
            _operator_spec(r, SCHWARTZ_DEFAULTS, f"schwartz_specs[{i}]", "gaussian") for i, r in enumerate(raw)
        )
    for key in ("epsilon_schedule", "t_values"):
        if key in data:
            kw[key] = _number_list(data[key], key)
    if "polynomials" in data:
        raw = data["polynomials"]
        if not isinstance(raw, list):
            raise ScenarioParseError("polynomials: expected an array of coefficient arrays")
        kw["polynomials"] = tuple(_number_list(c, f"polynomials[{i}]") for i, c in enumerate(raw))
    if "T" in data:
        kw["T"] = _number(data["T"], "T")
    for key in ("s_nodes", "t_grid_points"):
        if key in data:
            kw[key] = _integer(data[key], key)
    if "slice_count" in data:
        kw["slice_count"] = _integer(data["slice_count"], "slice_count")
    if "demo_dims" in data:
        raw = data["demo_dims"]
        if not isinstance(raw, list):
            raise ScenarioParseError("demo_dims: expected an array")
        kw["demo_dims"] = tuple(_integer(d, "demo_dims") for d in raw)
    if "name" in data:
        if not isinstance(data["name"], str):
            raise ScenarioParseError("name: expected a string")
        kw["name"] = data["name"]
    sc = Scenario(**kw)
    validate_scenario(sc)
    return sc


def validate_scenario(sc: Scenario) -> None:
    """Raise :class:`ScenarioValidationError` naming the first failed invariant."""
    sched = sc.epsilon_schedule
    if sc.ambient_dim < 2:
        raise ScenarioValidationError("ambient_dim must be >= 2")
    if not sched:
        raise ScenarioValidationError("epsilon_schedule must be nonempty")
    if any(not (e > 0 and math.isfinite(e)) for e in sched):
        raise ScenarioValidationError("epsilon_schedule entries must be positive and finite")
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise ScenarioValidationError("epsilon_schedule must be strictly decreasing")
    if not (sc.T > 0 and math.isfinite(sc.T)):
        raise ScenarioValidationError("T must be positive")
    if any(abs(t) > sc.T for t in sc.t_values):
        raise ScenarioValidationError("t_values must lie within [-T, T]")
    if sc.s_nodes < 1:
        raise ScenarioValidationError("s_nodes must be >= 1")
    if sc.t_grid_points < 2:
        raise ScenarioValidationError("t_grid_points must be >= 2")
    if sc.slice_count is not None and sc.slice_count < 1:
        raise ScenarioValidationError("slice_count must be >= 1")
    if sc.demo_dims and sc.h0_spec["kind"] != "diagonal-formula":
        raise ScenarioValidationError("demo_dims require a diagonal-formula h0_spec")
    if any(d < 2 for d in sc.demo_dims):
        raise ScenarioValidationError("demo_dims entries must be >= 2")
    for p in sc.polynomials:
        if not p:
            raise ScenarioValidationError("polynomial coefficient lists must be nonempty")
    for spec in (sc.h0_spec, sc.v_spec):
        for key, value in spec.items():
            if key != "kind" and not math.isfinite(value):
                raise ScenarioValidationError(f"{key} must be finite")
    if sc.v_spec["hs_norm"] < 0:
        raise ScenarioValidationError("v_spec.hs_norm must be >= 0")
    if sc.v_spec["kind"] == "rank-r" and not 1 <= sc.v_spec["rank"] <= sc.ambient_dim:
        raise ScenarioValidationError("v_spec.rank must lie in [1, ambient_dim]")
    for spec in sc.schwartz_specs:
        if spec["sigma"] <= 0 or spec["t_max"] <= 0 or spec["n_samples"] < 2:
            raise ScenarioValidationError("gaussian specs need sigma > 0, t_max > 0, n_samples >= 2")


def _override_value(raw: str):
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    """Apply ``key=value`` strings; values are TOML literals, dotted keys reach into tables."""
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ScenarioParseError(f"override {item!r} is not of the form key=value")
        *parents, leaf = key.split(".")
        node = data
        for part in parents:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ScenarioParseError(f"override {key!r} does not name a table entry")
        node[leaf] = _override_value(raw.strip())
    return data


def parse_scenario_text(text: str, overrides: Sequence[str] = ()) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(str(exc)) from exc
    return scenario_from_dict(apply_overrides(data, overrides))


def parse_scenario(path: Union[str, Path], overrides: Sequence[str] = ()) -> Scenario:
    """Read and validate a scenario file.

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    ScenarioParseError
        On malformed TOML (the message carries line and column) or unknown keys.
    ScenarioValidationError
        When a Scenario invariant fails.
    """
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"), overrides)


# -- serialization -------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return repr(float(value))
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def _table(spec: dict) -> list:
    return [f"{k} = {_fmt(v)}" for k, v in spec.items()]


def serialize_scenario(sc: Scenario) -> str:
    """TOML text that parses back to an equal Scenario."""
    lines = []
    if sc.name:
        lines.append(f"name = {_fmt(sc.name)}")
    lines += [
        f"seed = {sc.seed}",
        f"ambient_dim = {sc.ambient_dim}",
        f"epsilon_schedule = {_fmt(sc.epsilon_schedule)}",
        f"T = {_fmt(sc.T)}",
        f"t_values = {_fmt(sc.t_values)}",
        f"polynomials = {_fmt(sc.polynomials)}",
        f"s_nodes = {sc.s_nodes}",
        f"t_grid_points = {sc.t_grid_points}",
        f"demo_dims = {_fmt(sc.demo_dims)}",
    ]
    if sc.slice_count is not None:
        lines.append(f"slice_count = {sc.slice_count}")
    lines += ["", "[h0_spec]", *_table(sc.h0_spec), "", "[v_spec]", *_table(sc.v_spec)]
    for spec in sc.schwartz_specs:
        lines += ["", "[[schwartz_specs]]", *_table(spec)]
    if not sc.schwartz_specs:
        lines.insert(lines.index("") if "" in lines else len(lines), "schwartz_specs = []")
    return "\n".join(lines) + "\n"
