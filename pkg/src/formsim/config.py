"""Scenario files: JSON <-> ScenarioConfig.

Structure is checked against ``schema/scenario.schema.json``; invariants
that need arithmetic are checked afterwards so the error names the rule
that was broken. Omitted optional blocks fall back to library defaults.
"""
from __future__ import annotations

import json
from dataclasses import asdict
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from formsim import dynamics as dyn
from formsim._atomic import atomic_write_text
from formsim.control import ControllerGains
from formsim.dynamics import QuadrotorParams
from formsim.engine import ScenarioConfig
from formsim.errors import ParseError, ValidationError
from formsim.topology import BiasSchedule, CircleReference, FormationSpec, PolylineReference

SCHEMA_VERSION = "1.0"


@lru_cache(maxsize=None)
def schema() -> dict:
    text = resources.files("formsim").joinpath("schema/scenario.schema.json").read_text()
    return json.loads(text)


def _field_path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def _bias_table(entry: dict, n: int) -> np.ndarray:
    biases = entry["biases"]
    table = np.empty((n, 2))
    for agent in range(1, n + 1):
        if str(agent) not in biases:
            raise ValidationError(f"bias table at t={entry['t']:g} is missing agent {agent}")
        table[agent - 1] = biases[str(agent)]
    extra = sorted(int(k) for k in biases if not 1 <= int(k) <= n)
    if extra:
        raise ValidationError(f"bias table at t={entry['t']:g} names unknown agents {extra}")
    return table


def _reference(doc: dict):
    if doc["type"] == "circle":
        return CircleReference(float(doc["amplitude"]), float(doc["angular_rate"]))
    knots = doc["knots"]
    return PolylineReference([k[0] for k in knots], [k[1:] for k in knots])


def _initial_states(entries: list, n: int) -> np.ndarray:
    states = np.zeros((n, dyn.STATE_DIM))
    seen = set()
    for entry in entries:
        agent = entry["agent"]
        if not 1 <= agent <= n:
            raise ValidationError(f"initial state for unknown agent {agent}")
        if agent in seen:
            raise ValidationError(f"duplicate initial state for agent {agent}")
        seen.add(agent)
        row = states[agent - 1]
        row[dyn.X:dyn.Z + 1] = entry["position"]
        row[dyn.VX:dyn.VZ + 1] = entry.get("velocity", [0.0, 0.0, 0.0])
        row[dyn.PHI:dyn.PSI + 1] = entry.get("attitude", [0.0, 0.0, 0.0])
        row[dyn.P:dyn.R + 1] = entry.get("rates", [0.0, 0.0, 0.0])
    missing = sorted(set(range(1, n + 1)) - seen)
    if missing:
        raise ValidationError(f"no initial state for agents {missing}")
    return states


def config_from_dict(doc: dict) -> ScenarioConfig:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ValidationError(f"{_field_path(err)}: {err.message}")

    # dataclass constructors raise ValueError for their own invariants
    try:
        form = doc["formation"]
        n = form["n"]
        if n < 2:
            raise ValidationError("formation.n >= 2")
        if not form["leaders"]:
            raise ValidationError("formation.leaders must be non-empty")
        for leader in form["leaders"]:
            if not 1 <= leader <= n:
                raise ValidationError(f"leader {leader} is not an agent id in 1..{n}")
        sched = doc["bias_schedule"]
        tables = [_bias_table(entry, n) for entry in sched]
        schedule = BiasSchedule([entry["t"] for entry in sched], tables)
        formation = FormationSpec(
            n=n,
            leaders={i - 1 for i in form["leaders"]},
            biases=tables[0],
            sensing_radius=float(form["sensing_radius"]),
            altitude=float(form.get("altitude", 5.0)),
            yaw_d=float(form.get("yaw", 0.0)),
        )
        config = ScenarioConfig(
            formation=formation,
            initial_states=_initial_states(doc["initial_states"], n),
            dt=float(doc.get("dt", 0.01)),
            duration=float(doc["duration"]),
            params=QuadrotorParams(**doc.get("params", {})),
            gains=ControllerGains(**doc.get("gains", {})),
            reference=_reference(doc["reference"]),
            bias_schedule=schedule,
            isolated_policy=doc.get("isolated_policy", "hold"),
            neighbor_graph=doc.get("neighbor_graph", "dynamic"),
            name=doc.get("name", "custom"),
            notes=doc.get("notes", ()),
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    return config.validate()


def load_config(path) -> ScenarioConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("top level of a scenario file must be an object")
    return config_from_dict(doc)


def _reference_dict(ref) -> dict:
    if isinstance(ref, CircleReference):
        return {"type": "circle", "amplitude": ref.amplitude, "angular_rate": ref.angular_rate}
    if isinstance(ref, PolylineReference):
        return {"type": "polyline", "knots": [[t, *p] for t, p in zip(ref.times, ref.points)]}
    raise TypeError(f"cannot serialize reference {ref!r}")


def _vec(values) -> list:
    return [float(v) for v in values]


def config_to_dict(config: ScenarioConfig) -> dict:
    form = config.formation
    sched = config.bias_schedule
    return {
        "schema_version": SCHEMA_VERSION,
        "name": config.name,
        "notes": list(config.notes),
        "dt": config.dt,
        "duration": config.duration,
        "isolated_policy": config.isolated_policy,
        "neighbor_graph": config.neighbor_graph,
        "params": asdict(config.params),
        "gains": asdict(config.gains),
        "formation": {
            "n": form.n,
            "leaders": sorted(i + 1 for i in form.leaders),
            "sensing_radius": form.sensing_radius,
            "altitude": form.altitude,
            "yaw": form.yaw_d,
        },
        "reference": _reference_dict(config.reference),
        "bias_schedule": [
            {"t": t, "biases": {str(i + 1): _vec(b) for i, b in enumerate(table)}}
            for t, table in zip(sched.times, sched.tables)
        ],
        "initial_states": [
            {
                "agent": i + 1,
                "position": _vec(s[dyn.X:dyn.Z + 1]),
                "velocity": _vec(s[dyn.VX:dyn.VZ + 1]),
                "attitude": _vec(s[dyn.PHI:dyn.PSI + 1]),
                "rates": _vec(s[dyn.P:dyn.R + 1]),
            }
            for i, s in enumerate(config.initial_states)
        ],
    }


def dump_config(config: ScenarioConfig) -> str:
    return json.dumps(config_to_dict(config), indent=2) + "\n"


def save_config(config: ScenarioConfig, path) -> None:
    atomic_write_text(path, dump_config(config))
