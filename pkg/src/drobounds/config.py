"""Run configuration: JSON schema, defaults, and construction of model objects."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .core import (
    AggregationSpec,
    DistortionWeight,
    linear_aggregation,
    make_es_gamma,
    make_ier_gamma,
    make_piecewise_gamma,
    quadratic,
    quartic,
)
from .errors import InvalidParameterError
from .expr import compile_expression
from .sampling import Independent, LogNormal, Normal, ReferenceModel, StudentT, Weibull, portfolio_aggregation

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}


def _one_of_keys(variants: dict) -> dict:
    return {
        "oneOf": [
            {"type": "object", "properties": {k: v}, "required": [k], "additionalProperties": False}
            for k, v in variants.items()
        ]
    }


def _obj(props: dict, required=None) -> dict:
    return {"type": "object", "properties": props, "required": list(required or props),
            "additionalProperties": False}


_GENERATOR = {"oneOf": [{"const": "quartic"}, _one_of_keys({"quadratic": _POS})]}
_TOLERANCE = {"epsilon": _NONNEG, "radius": _NONNEG}


def _with_tolerance(props: dict, required=None) -> dict:
    schema = _obj({**props, **_TOLERANCE}, required=list(props) if required is None else required)
    schema["oneOf"] = [{"required": ["epsilon"]}, {"required": ["radius"]}]
    return schema


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "reference": _obj(
            {
                "marginals": {
                    "type": "array",
                    "minItems": 1,
                    "items": _one_of_keys({
                        "normal": _obj({"mu": _NUM, "sigma": _POS}),
                        "weibull": _obj({"lambda": _POS, "k": _POS}),
                        "lognormal": _obj({"mu": _NUM, "sigma": _POS}),
                    }),
                },
                "copula": _one_of_keys({
                    "independent": _obj({}),
                    "student_t": _obj({"df": _POS, "rho": _NUM}),
                }),
            },
            required=["marginals"],
        ),
        "aggregation": _one_of_keys({
            "builtin": {"enum": ["portfolio"]},
            "linear": _obj({"beta": {"type": "array", "items": _NUM, "minItems": 1}}),
            "custom": _obj({"expression": {"type": "string"}, "K": _POS, "L": _NONNEG}, required=["expression", "K"]),
        }),
        "risk": _one_of_keys({
            "es": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "ier": {"type": "number", "exclusiveMinimum": 0.5, "exclusiveMaximum": 1},
            "piecewise": {
                "type": "array",
                "minItems": 1,
                "items": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3},
            },
        }),
        "uncertainty": _one_of_keys({
            "wasserstein": _obj({"epsilon": _NONNEG, "K": _POS, "beta_norm": _NONNEG}, required=["epsilon"]),
            "mahalanobis": _with_tolerance({
                "q_diag": {"type": "array", "items": _POS, "minItems": 1},
                "scaling": {"enum": ["squared", "linear"]},
            }, required=["q_diag"]),
            "separable": _with_tolerance({
                "phis": {"type": "array", "items": _GENERATOR, "minItems": 1},
                "beta": {"type": "array", "items": _NUM, "minItems": 1},
            }),
            "composable": _with_tolerance({"phi": _GENERATOR}),
        }),
        "grid_M": {"type": "integer", "minimum": 2},
        "mc_samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    },
    "required": ["reference", "aggregation", "risk", "uncertainty"],
    "additionalProperties": False,
}

DEFAULTS = {"grid_M": 10_000, "mc_samples": 100_000, "seed": 42}


@dataclass(frozen=True)
class RunConfig:
    raw: dict

    @property
    def grid_M(self) -> int:
        return self.raw["grid_M"]

    @property
    def mc_samples(self) -> int:
        return self.raw["mc_samples"]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    @property
    def uncertainty_kind(self) -> str:
        return next(iter(self.raw["uncertainty"]))

    @property
    def uncertainty(self) -> dict:
        return self.raw["uncertainty"][self.uncertainty_kind]

    def reference_model(self) -> ReferenceModel:
        marginals = []
        for item in self.raw["reference"]["marginals"]:
            (kind, p), = item.items()
            if kind == "normal":
                marginals.append(Normal(p["mu"], p["sigma"]))
            elif kind == "weibull":
                marginals.append(Weibull(p["lambda"], p["k"]))
            else:
                marginals.append(LogNormal(p["mu"], p["sigma"]))
        copula = self.raw["reference"].get("copula", {"independent": {}})
        (kind, p), = copula.items()
        cop = StudentT(p["df"], p["rho"]) if kind == "student_t" else Independent()
        return ReferenceModel(tuple(marginals), cop)

    def aggregation(self) -> AggregationSpec:
        (kind, p), = self.raw["aggregation"].items()
        n = len(self.raw["reference"]["marginals"])
        if kind == "builtin":
            agg = portfolio_aggregation()
        elif kind == "linear":
            agg = linear_aggregation(p["beta"])
        else:
            fn = compile_expression(p["expression"], n)
            agg = AggregationSpec(n=n, m=n, nonlinear=fn, beta=[], K=p["K"], L=p.get("L", p["K"]))
        if agg.n != n:
            raise InvalidParameterError(f"aggregation expects {agg.n} factors but the reference has {n}")
        return agg

    def gamma(self) -> DistortionWeight:
        (kind, p), = self.raw["risk"].items()
        if kind == "es":
            return make_es_gamma(p)
        if kind == "ier":
            return make_ier_gamma(p)
        return make_piecewise_gamma(p)

    def budget(self) -> float:
        """Divergence budget; a ``radius`` entry is squared."""
        u = self.uncertainty
        return u["epsilon"] if "epsilon" in u else u["radius"] ** 2


def generator_from(spec):
    if spec == "quartic":
        return quartic()
    return quadratic(spec["quadratic"])


def parse_config(data: dict, seed=None, grid=None, samples=None) -> RunConfig:
    """Validate against the schema and fill defaults; overrides win over the file."""
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidParameterError(f"config invalid at {where}: {exc.message}") from None
    raw = {**DEFAULTS, **data}
    for key, value in (("seed", seed), ("grid_M", grid), ("mc_samples", samples)):
        if value is not None:
            raw[key] = value
    if raw["grid_M"] < 2 or raw["mc_samples"] < 1:
        raise InvalidParameterError("grid_M must be >= 2 and mc_samples >= 1")
    return RunConfig(raw)


def load_config(path, **overrides) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"config is not valid JSON: {exc}") from None
    return parse_config(data, **overrides)
