"""JSON Schemas (draft 2020-12) for the documents the command line emits."""

_number_or_interval = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

CANDIDATE = {
    "type": "object",
    "required": ["model", "sse", "instability_coefficient", "instability", "cvc", "aic", "eligible"],
    "properties": {
        "model": {"type": "string"},
        "sse": {"type": "number", "minimum": 0},
        "instability_coefficient": _number_or_interval,
        "instability": _number_or_interval,
        "cvc": _number_or_interval,
        "aic": {"type": ["number", "null"]},
        "eligible": {"type": "boolean"},
    },
}

SELECTION = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["sigma_sq", "sigma_sq_source", "n", "chosen", "tied", "candidates"],
    "properties": {
        "sigma_sq": {"type": "number", "minimum": 0},
        "sigma_sq_source": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "chosen": {"type": "string"},
        "tied": {"type": "array", "items": {"type": "string"}},
        "candidates": {"type": "array", "items": CANDIDATE, "minItems": 1},
    },
}

FIT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["model", "n", "parameters", "sse", "norm", "instability_coefficient"],
    "properties": {
        "model": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "parameters": {"type": "object"},
        "sse": {"type": "number", "minimum": 0},
        "norm": {"type": "number", "minimum": 0},
        "instability_coefficient": _number_or_interval,
        "instability": {"oneOf": [_number_or_interval, {"type": "null"}]},
        "sigma_sq": {"type": ["number", "null"]},
    },
}

THEOREM_CHECK = {
    "type": "object",
    "required": ["theorem", "kind", "analytic", "empirical", "standard_error", "trials",
                 "passed", "verdict", "config", "details"],
    "properties": {
        "theorem": {"type": "string"},
        "kind": {"enum": ["equality", "lower_bound", "interval"]},
        "analytic": _number_or_interval,
        "empirical": {"type": "number"},
        "standard_error": {"type": "number", "minimum": 0},
        "trials": {"type": "integer", "minimum": 1},
        "passed": {"type": "boolean"},
        "verdict": {"enum": ["pass", "fail"]},
        "config": {"type": "object"},
        "details": {"type": "object"},
    },
}

VERIFY = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["checks", "all_passed"],
    "properties": {
        "checks": {"type": "array", "items": THEOREM_CHECK},
        "angle": {"type": ["object", "null"]},
        "all_passed": {"type": "boolean"},
    },
}

EXAMPLE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["x", "y", "sigma_sq", "rows"],
    "properties": {
        "x": {"type": "array", "items": {"type": "number"}},
        "y": {"type": "array", "items": {"type": "number"}},
        "sigma_sq": {"type": ["number", "null"]},
        "rows": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["model", "sse", "instability_coefficient", "cvc"],
                "properties": {
                    "model": {"type": "string"},
                    "sse": {"type": "number"},
                    "instability_coefficient": {"type": "number"},
                    "cvc": {"type": ["number", "null"]},
                },
            },
        },
        "curves": {"type": "object"},
    },
}

SIMULATE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["blackbox", "sigma", "distribution", "seed", "X", "y"],
    "properties": {
        "blackbox": {"type": "string"},
        "sigma": {"type": "number", "minimum": 0},
        "distribution": {"type": "string"},
        "seed": {"type": "integer"},
        "X": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "y": {"type": "array", "items": {"type": "number"}},
    },
}

SCHEMAS = {"fit": FIT, "select": SELECTION, "verify": VERIFY, "example": EXAMPLE, "simulate": SIMULATE}
