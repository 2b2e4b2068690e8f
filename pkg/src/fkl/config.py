"""Experiment configuration: a strict YAML document validated before any compute.

Example::

    name: sm-recovery
    seed: 3
    dataset:
      generator: spectral_mixture
    split:
      scheme: dataset_band
    train:
      rounds: 40
      grid_count: 100
      freq_scale: 6.283185307179586
    baselines: [rbf, matern, sm]
"""

import copy
import json

import jsonschema
import yaml

from .errors import ConfigError

GENERATORS = (
    "spectral_mixture",
    "quasi_periodic",
    "sinc",
    "rbf_gp",
    "rbf_product_gp",
    "multi_task_sm",
)

_TRAIN_PROPS = {
    "rounds": {"type": "integer", "minimum": 1},
    "n_optim": {"type": "integer", "minimum": 0},
    "n_ess": {"type": "integer", "minimum": 0},
    "j_samples": {"type": "integer", "minimum": 1},
    "thin": {"type": "integer", "minimum": 1},
    "grid_count": {"type": "integer", "minimum": 2},
    "freq_scale": {"type": "number", "exclusiveMinimum": 0},
    "mode": {"enum": ["single", "multi_input_shared", "multi_input_separate", "multi_task"]},
    "learning_rate": {"type": "number", "exclusiveMinimum": 0},
    "shared_noise": {"type": "boolean"},
    "box_sigma": {"type": ["number", "null"], "exclusiveMinimum": 0},
    "init_mean_width": {"type": ["number", "null"], "exclusiveMinimum": 0},
    "init_lengthscale": {"type": ["number", "null"], "exclusiveMinimum": 0},
    "init_outputscale": {"type": ["number", "null"], "exclusiveMinimum": 0},
    "init_noise": {"type": "number", "exclusiveMinimum": 0},
    "init_latent_jitter": {"type": "number", "exclusiveMinimum": 0},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "FKL experiment",
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "dataset"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "dataset": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "generator": {"enum": list(GENERATORS)},
                "params": {"type": "object"},
                "fixture": {"enum": ["airline", "challenger"]},
                "csv": {"type": "string"},
                "schema": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["inputs", "target"],
                    "properties": {
                        "inputs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                        "target": {"type": "string"},
                        "task": {"type": ["string", "null"]},
                    },
                },
            },
            "oneOf": [
                {"required": ["generator"], "not": {"anyOf": [{"required": ["fixture"]}, {"required": ["csv"]}]}},
                {"required": ["fixture"], "not": {"anyOf": [{"required": ["generator"]}, {"required": ["csv"]}]}},
                {"required": ["csv", "schema"], "not": {"anyOf": [{"required": ["generator"]}, {"required": ["fixture"]}]}},
            ],
        },
        "standardize": {"type": ["boolean", "null"]},
        "split": {
            "type": "object",
            "additionalProperties": False,
            "required": ["scheme"],
            "properties": {
                "scheme": {"enum": ["random_fraction", "extrapolate_tail", "holdout_band", "dataset_band"]},
                "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "k": {"type": "integer", "minimum": 1},
                "lo": {"type": "number"},
                "hi": {"type": "number"},
            },
        },
        "train": {"type": "object", "additionalProperties": False, "properties": _TRAIN_PROPS},
        "baselines": {
            "type": "array",
            "items": {"enum": ["rbf", "matern", "ard", "ard_matern", "sm"]},
            "uniqueItems": True,
        },
        "baseline_options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sm_components": {"type": "integer", "minimum": 1},
                "sm_init": {"enum": ["data", "naive"]},
                "max_iter": {"type": ["integer", "null"], "minimum": 1},
                "restarts": {"type": "integer", "minimum": 1},
            },
        },
        "predict": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "include_noise": {"type": "boolean"},
                "width_std": {"type": "number", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "kernel_points": {"type": "integer", "minimum": 2},
                "curve_points": {"type": "integer", "minimum": 0},
            },
        },
    },
}

DEFAULTS = {
    "seed": 0,
    "standardize": None,
    "split": {"scheme": "dataset_band"},
    "train": {},
    "baselines": [],
    "baseline_options": {"sm_components": 4, "sm_init": "data", "max_iter": None, "restarts": 1},
    "predict": {"include_noise": True, "width_std": 2.0},
    "output": {"dir": "runs", "kernel_points": 200, "curve_points": 0},
}


def validate(config):
    """Check ``config`` against the schema; return it with defaults filled."""
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    split = config.get("split", {})
    needs = {"random_fraction": "p", "extrapolate_tail": "k"}
    key = needs.get(split.get("scheme"))
    if key and key not in split:
        raise ConfigError(f"split: scheme {split['scheme']!r} requires {key!r}")
    if split.get("scheme") == "holdout_band" and not {"lo", "hi"} <= split.keys():
        raise ConfigError("split: holdout_band requires 'lo' and 'hi'")
    out = copy.deepcopy(DEFAULTS)
    for k, v in config.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = {**out[k], **copy.deepcopy(v)}
        else:
            out[k] = copy.deepcopy(v)
    return out


def load(path):
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return validate(raw)


def schema_json():
    return json.dumps(SCHEMA, indent=2, sort_keys=True)
