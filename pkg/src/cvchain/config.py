"""Scenario configuration: JSON schema, validation, and object resolution."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import jsonschema
import numpy as np

from .chains import ChainSpec
from .gaussian import TimeGrid
from .krotov import KrotovConfig, TrajectoryPair, pairs_from_squeezing
from .open_system import BathParams

__all__ = ["ConfigError", "CONFIG_SCHEMA", "load_config", "resolve_scenario", "config_hash"]


class ConfigError(Exception):
    """Carries every violation found in a configuration, not just the first."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["chain", "grid", "squeezing", "objective"],
    "properties": {
        "chain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["topology", "n_sites"],
            "properties": {
                "topology": {"enum": ["linear", "x_shaped"]},
                "n_sites": {"type": "integer", "minimum": 2},
                "omega0": {"type": "number"},
                "g0": {"type": "number"},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["horizon", "n_steps"],
            "properties": {
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "n_steps": {"type": "integer", "minimum": 1},
            },
        },
        "bath": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "required": ["xi", "coupling"],
            "properties": {
                "mode": {"enum": ["markov", "non_markov"]},
                "xi": {"type": "number", "exclusiveMinimum": 0},
                "omega_shift": {"type": "number"},
                "coupling": {"type": "number", "minimum": 0},
            },
        },
        "squeezing": {
            "oneOf": [
                {"type": "number", "exclusiveMinimum": 0},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["r_min", "r_max", "n_samples"],
                    "properties": {
                        "r_min": {"type": "number", "exclusiveMinimum": 0},
                        "r_max": {"type": "number", "exclusiveMinimum": 0},
                        "n_samples": {"type": "integer", "minimum": 2},
                    },
                },
            ]
        },
        "objective": {"enum": ["fidelity", "fidelity_negativity", "lse_multi"]},
        "krotov": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lambda_a": {"type": "number", "exclusiveMinimum": 0},
                "clamp_amplitude": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "shape": {"enum": ["blackman", "flat"]},
                "max_iterations": {"type": "integer", "minimum": 0},
                "o_recompute_first": {"type": "integer", "minimum": 0},
                "o_recompute_every": {"type": "integer", "minimum": 1},
                "j_stop": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "delta_j_stop": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "gradient_step": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "controls_file": {"type": "string"},
        "output_dir": {"type": "string"},
        "emit": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                key: {"type": "boolean"}
                for key in ("controls", "dynamics", "spectrum", "wigner", "residuals", "iterations")
            },
        },
        "wigner": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "times": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                "pairs": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 1},
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
                "extent": {"type": "number", "exclusiveMinimum": 0},
                "n_points": {"type": "integer", "minimum": 3},
            },
        },
    },
}

_KROTOV_DEFAULTS = {
    "lambda_a": 2.0,
    "clamp_amplitude": None,
    "shape": "blackman",
    "max_iterations": 100,
    "o_recompute_first": 100,
    "o_recompute_every": 20,
    "j_stop": None,
    "delta_j_stop": None,
    "gradient_step": 1e-6,
}

_EMIT_DEFAULTS = {
    "controls": True,
    "dynamics": True,
    "spectrum": False,
    "wigner": False,
    "residuals": True,
    "iterations": True,
}


def _schema_errors(raw) -> list[str]:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    found = []
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path)):
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        found.append(f"{where}: {err.message}")
    return found


def load_config(path) -> dict:
    """Parse and fully validate a configuration file; raises ConfigError."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from None
    errors = _schema_errors(raw)
    if not errors:
        errors = _semantic_errors(raw)
    if errors:
        raise ConfigError(errors)
    return raw


def _semantic_errors(raw) -> list[str]:
    errors = []
    chain = raw["chain"]
    if chain["topology"] == "x_shaped" and chain["n_sites"] != 7:
        errors.append("chain/n_sites: the X-shaped chain requires exactly 7 sites")
    sq = raw["squeezing"]
    if isinstance(sq, dict):
        if sq["r_min"] >= sq["r_max"]:
            errors.append("squeezing: r_min must be below r_max")
        if raw["objective"] != "lse_multi":
            errors.append("objective: a squeezing range requires the lse_multi objective")
    elif raw["objective"] == "lse_multi":
        errors.append("objective: lse_multi requires a squeezing range")
    for key in ("omega0", "g0"):
        if key in chain and not np.isfinite(chain[key]):
            errors.append(f"chain/{key}: must be finite")
    return errors


@dataclass
class Scenario:
    """Fully resolved configuration ready to run."""

    raw: dict
    chain: ChainSpec
    grid: TimeGrid
    bath: BathParams | None
    krotov: KrotovConfig
    pairs: list[TrajectoryPair]
    r_values: list[float]


def resolve_scenario(raw: dict, iterations_override: int | None = None) -> Scenario:
    """Build the domain objects a validated configuration describes."""
    chain_cfg = raw["chain"]
    chain = ChainSpec(
        topology=chain_cfg["topology"],
        n_sites=chain_cfg["n_sites"],
        omega0=chain_cfg.get("omega0", 1.0),
        g0=chain_cfg.get("g0", 0.4),
    )
    grid = TimeGrid(raw["grid"]["horizon"], raw["grid"]["n_steps"])
    bath_cfg = raw.get("bath")
    bath = None
    if bath_cfg is not None:
        bath = BathParams(
            xi=bath_cfg["xi"],
            omega_shift=bath_cfg.get("omega_shift", 0.0),
            coupling=bath_cfg["coupling"],
            mode=bath_cfg.get("mode", "non_markov"),
        )
    kr = dict(_KROTOV_DEFAULTS)
    kr.update(raw.get("krotov", {}))
    if iterations_override is not None:
        kr["max_iterations"] = iterations_override
    krotov = KrotovConfig(objective=raw["objective"], **kr)
    sq = raw["squeezing"]
    if isinstance(sq, dict):
        r_values = list(np.linspace(sq["r_min"], sq["r_max"], sq["n_samples"]))
    else:
        r_values = [float(sq)]
    pairs = pairs_from_squeezing(chain, r_values)
    return Scenario(
        raw=raw, chain=chain, grid=grid, bath=bath, krotov=krotov,
        pairs=pairs, r_values=r_values,
    )


def resolved_config(scenario: Scenario) -> dict:
    """The configuration with every default filled in, for the run manifest."""
    out = json.loads(json.dumps(scenario.raw))  # deep copy via JSON
    out.setdefault("chain", {}).setdefault("omega0", scenario.chain.omega0)
    out["chain"].setdefault("g0", scenario.chain.g0)
    kr = dict(_KROTOV_DEFAULTS)
    kr.update(out.get("krotov", {}))
    kr["max_iterations"] = scenario.krotov.max_iterations
    out["krotov"] = kr
    emit = dict(_EMIT_DEFAULTS)
    emit.update(out.get("emit", {}))
    out["emit"] = emit
    if "bath" in out and out["bath"] is not None:
        out["bath"].setdefault("mode", "non_markov")
        out["bath"].setdefault("omega_shift", 0.0)
    return out


def config_hash(resolved: dict) -> str:
    """Stable hash of the resolved configuration (canonical JSON, sha256)."""
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
