"""Scenario files: schema validation, deterministic sampling, device realization.

A scenario lists device specs (fixed numbers or ``{"uniform": [lo, hi]}``
distribution entries, with an optional ``count`` for fleets) plus pipeline
settings.  Sampling is reproducible: devices are expanded in document order,
replica by replica, and within one replica the distributed parameters are
drawn in alphabetical field order from a single generator seeded by the
scenario seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .devices import BatteryParams, InverterParams
from .errors import ScenarioError

_UNIFORM = {
    "type": "object",
    "properties": {"uniform": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}},
    "required": ["uniform"],
    "additionalProperties": False,
}
_NUM = {"oneOf": [{"type": "number"}, _UNIFORM]}


def _device_schema(type_name, fields, required):
    props = {"type": {"const": type_name}, "count": {"type": "integer", "minimum": 1}}
    props.update(fields)
    return {
        "type": "object",
        "properties": props,
        "required": ["type"] + required,
        "additionalProperties": False,
    }


SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "devices": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    _device_schema("pv-inverter", {"S": _NUM, "p_max": _NUM, "theta": _NUM}, ["S", "p_max", "theta"]),
                    _device_schema(
                        "storage-inverter", {"S": _NUM, "p_min": _NUM, "p_max": _NUM}, ["S", "p_min", "p_max"]
                    ),
                    _device_schema("load", {"p_min": _NUM, "p_max": _NUM}, ["p_min", "p_max"]),
                    _device_schema(
                        "battery",
                        {
                            "p_min": _NUM,
                            "p_max": _NUM,
                            "a": _NUM,
                            "gamma": _NUM,
                            "e0": _NUM,
                            "horizon": {"type": "integer", "minimum": 1},
                        },
                        ["p_min", "p_max", "a", "gamma", "e0", "horizon"],
                    ),
                ]
            },
        },
        "settings": {
            "type": "object",
            "properties": {
                "sides": {"type": "integer", "minimum": 4},
                "n_s": {"type": "integer", "minimum": 0},
                "vol_threshold": {"oneOf": [{"type": "number"}, {"type": "null"}]},
                "ratio_mode": {
                    "oneOf": [
                        {"enum": ["none", "first", "largest-area"]},
                        {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                    ]
                },
                "candidate_policy": {"enum": ["stage0-only", "stage01-faces", "full-product"]},
                "mc_samples": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["devices"],
    "additionalProperties": False,
}

_DISTRIBUTED_FIELDS = {
    "pv-inverter": ("S", "p_max", "theta"),
    "storage-inverter": ("S", "p_min", "p_max"),
    "load": ("p_min", "p_max"),
    "battery": ("a", "e0", "gamma", "p_min", "p_max"),
}


@dataclass(frozen=True)
class Settings:
    sides: int = 24
    n_s: int = 1
    vol_threshold: float | None = None
    ratio_mode: str | tuple[float, ...] = "auto"
    candidate_policy: str = "stage01-faces"
    mc_samples: int = 100_000
    seed: int = 0


@dataclass(frozen=True)
class DeviceSpec:
    kind: str
    fields: dict


@dataclass
class Scenario:
    devices: list[DeviceSpec]
    settings: Settings
    uses_distributions: bool = False


@dataclass(frozen=True)
class RealizedDevice:
    """One concrete device: an id, its kind, and resolved parameters."""

    device_id: str
    kind: str
    params: object  # InverterParams | BatteryParams | (p_min, p_max) for loads


def load_scenario(path: str | Path) -> Scenario:
    """Parse and validate a scenario file; unknown fields are rejected."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from exc
    return parse_scenario(raw)


def parse_scenario(raw: dict) -> Scenario:
    try:
        jsonschema.validate(raw, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario schema violation at {path}: {exc.message}") from exc

    devices = []
    uses_dist = False
    for entry in raw["devices"]:
        entry = dict(entry)
        kind = entry.pop("type")
        uses_dist = uses_dist or any(isinstance(v, dict) for v in entry.values())
        devices.append(DeviceSpec(kind, entry))

    settings_raw = dict(raw.get("settings", {}))
    if "ratio_mode" in settings_raw and isinstance(settings_raw["ratio_mode"], list):
        settings_raw["ratio_mode"] = tuple(float(v) for v in settings_raw["ratio_mode"])
    has_seed = "seed" in settings_raw
    settings = Settings(**{k: v for k, v in settings_raw.items()})
    if uses_dist and not has_seed:
        raise ScenarioError("scenario draws from distributions but sets no seed")

    scenario = Scenario(devices=devices, settings=settings, uses_distributions=uses_dist)
    _check_bounds(scenario)
    return scenario


def _check_bounds(scenario: Scenario):
    for i, dev in enumerate(scenario.devices):
        for name, value in dev.fields.items():
            if isinstance(value, dict):
                lo, hi = value["uniform"]
                if lo > hi:
                    raise ScenarioError(f"devices/{i}/{name}: uniform bounds are inverted")


def realize_devices(scenario: Scenario) -> list[RealizedDevice]:
    """Expand counts and draw distribution parameters deterministically.

    One generator (seeded with ``settings.seed``) serves the whole scenario;
    draws happen in document order of devices, replica by replica, and within
    a replica in alphabetical parameter order.  Raises
    :class:`~flexsum.errors.ScenarioError` when resolved parameters are
    invalid for the device type.
    """
    rng = np.random.default_rng(scenario.settings.seed)
    out: list[RealizedDevice] = []
    for spec_idx, spec in enumerate(scenario.devices):
        count = int(spec.fields.get("count", 1))
        dist_order = [f for f in _DISTRIBUTED_FIELDS[spec.kind] if f in spec.fields]
        for replica in range(count):
            resolved = {}
            for name in sorted(dist_order):
                value = spec.fields[name]
                if isinstance(value, dict):
                    lo, hi = value["uniform"]
                    resolved[name] = float(rng.uniform(lo, hi))
                else:
                    resolved[name] = float(value)
            device_id = f"dev{len(out):04d}"
            try:
                params = _build_params(spec.kind, spec.fields, resolved, scenario.settings.sides)
            except ValueError as exc:
                raise ScenarioError(f"devices/{spec_idx} (replica {replica}): {exc}") from exc
            out.append(RealizedDevice(device_id, spec.kind, params))
    return out


def _build_params(kind: str, fields: dict, resolved: dict, sides: int):
    if kind == "pv-inverter":
        return InverterParams(
            S=resolved["S"], p_min=0.0, p_max=resolved["p_max"], theta=resolved["theta"], sides=sides
        )
    if kind == "storage-inverter":
        return InverterParams(
            S=resolved["S"], p_min=resolved["p_min"], p_max=resolved["p_max"], sides=sides
        )
    if kind == "load":
        if resolved["p_min"] > resolved["p_max"]:
            raise ValueError("p_min must not exceed p_max")
        return (resolved["p_min"], resolved["p_max"])
    if kind == "battery":
        return BatteryParams(
            p_min=resolved["p_min"],
            p_max=resolved["p_max"],
            a=resolved["a"],
            gamma=resolved["gamma"],
            e0=resolved["e0"],
            horizon=int(fields["horizon"]),
        )
    raise ValueError(f"unknown device kind {kind!r}")
