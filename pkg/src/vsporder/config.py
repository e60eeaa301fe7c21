"""Run configuration files (JSON), validated against a fixed schema."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .mcmc import McmcConfig
from .prior import HyperPriorSpec

_UNIT = {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}
_DIST = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["logit-normal", "beta"]},
        "params": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    },
    "required": ["kind", "params"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "data": {"type": "string"},
        "out": {"type": "string"},
        "model": {"enum": ["qj-u", "qj-d", "qj-b", "qju", "qjd", "qjb"]},
        "parameterization": {"enum": ["bdt", "mdt"]},
        "iterations": {"type": "integer", "minimum": 1},
        "thin": {"type": "integer", "minimum": 1},
        "burn_in": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "lpa": {"type": "integer", "minimum": 1},
        "global_to_local_ratio": {"type": "integer", "minimum": 0},
        "step_q": {"type": "number", "minimum": 0},
        "step_p": {"type": "number", "minimum": 0},
        "step_phi": {"type": "number", "minimum": 0},
        "check_every": {"type": "integer", "minimum": 0},
        "init": {
            "type": "object",
            "properties": {"q": _UNIT, "p": _UNIT, "phi": _UNIT},
            "additionalProperties": False,
        },
        "hyperprior": {
            "type": "object",
            "properties": {
                "eta_mean": {"type": "number"},
                "eta_sd": {"type": "number", "exclusiveMinimum": 0},
                "p_prior": _DIST,
                "phi_prior": _DIST,
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_MCMC_KEYS = (
    "iterations", "thin", "burn_in", "seed", "global_to_local_ratio",
    "step_q", "step_p", "step_phi", "check_every", "init",
)


@dataclass
class RunConfig:
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    priors: HyperPriorSpec = field(default_factory=HyperPriorSpec)
    data: str | None = None
    out: str | None = None
    lpa: int | None = None

    @classmethod
    def from_dict(cls, doc, overrides: dict | None = None) -> "RunConfig":
        """Validate ``doc`` and apply ``overrides`` (e.g. CLI flags; None values ignored)."""
        doc = dict(doc or {})
        for k, v in (overrides or {}).items():
            if v is not None:
                doc[k] = v
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config field {where}: {exc.message}") from None
        kw = {k: doc[k] for k in _MCMC_KEYS if k in doc}
        kw["model"] = doc.get("model", "qju")
        kw["parameterization"] = doc.get("parameterization", "bdt")
        try:
            mcmc = McmcConfig(**kw)
            priors = HyperPriorSpec.from_dict(doc.get("hyperprior", {}))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return cls(mcmc, priors, doc.get("data"), doc.get("out"), doc.get("lpa"))

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.mcmc.to_dict().items() if k != "cache_size"}
        d["hyperprior"] = self.priors.to_dict()
        for k in ("data", "out", "lpa"):
            if getattr(self, k) is not None:
                d[k] = getattr(self, k)
        if d["seed"] is None:
            del d["seed"]
        if d["global_to_local_ratio"] is None:
            del d["global_to_local_ratio"]
        return d


def load_config(path, overrides: dict | None = None) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return RunConfig.from_dict(doc, overrides)
