"""Versioned JSON documents for fitted true models.

Floats are written with ``repr`` precision by :mod:`json`, so a reloaded
model reproduces draws bit-for-bit. Infinite bounds are stored as null.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .classcond import ClassConditionalModel, PointMassMixture
from .kde import Kde1D, KdeMulti
from .pmf import Pmf
from .truth import TrueModel, TruthValue

FORMAT = "ci-workbench/true-model"
VERSION = 1


def _bound_out(v):
    return None if v is None or not math.isfinite(v) else float(v)


def _bound_in(v, default):
    return default if v is None else float(v)


def _list(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def generator_to_dict(gen) -> dict:
    if isinstance(gen, Kde1D):
        return {
            "type": "kde1d",
            "kernel": "epanechnikov",
            "centers": _list(gen.centers),
            "pilot_bandwidth": float(gen.pilot_bandwidth),
            "modifiers": _list(gen.modifiers),
            "trimmed": _list(gen.trimmed),
            "bandwidths": _list(gen.bandwidths),
            "bounds": None if gen.bounds is None else [_bound_out(v) for v in gen.bounds],
        }
    if isinstance(gen, Pmf):
        return {"type": "pmf", "support": _list(gen.support), "probabilities": _list(gen.probabilities)}
    if isinstance(gen, KdeMulti):
        return {
            "type": "kde_multi",
            "kernel": "epanechnikov",
            "centers": _list(gen.centers),
            "pilot_bandwidth": _list(gen.pilot_bandwidth),
            "modifiers": _list(gen.modifiers),
            "trimmed": _list(gen.trimmed),
            "lower": None if gen.lower is None else _list(gen.lower),
            "upper": None if gen.upper is None else _list(gen.upper),
        }
    if isinstance(gen, PointMassMixture):
        return {"type": "point_mass", "rows": _list(gen.rows)}
    if isinstance(gen, ClassConditionalModel):
        return {
            "type": "class_conditional",
            "num_classes": gen.num_classes,
            "class_probs": _list(gen.class_probs),
            "components": [None if c is None else generator_to_dict(c) for c in gen.components],
            "flags": dict(gen.flags),
        }
    raise TypeError(f"cannot serialize {type(gen).__name__}")


def generator_from_dict(d: dict):
    kind = d["type"]
    if kind == "kde1d":
        bounds = d.get("bounds")
        if bounds is not None:
            bounds = (_bound_in(bounds[0], -math.inf), _bound_in(bounds[1], math.inf))
        return Kde1D(d["centers"], d["pilot_bandwidth"], d["modifiers"], d["trimmed"], d["bandwidths"], bounds)
    if kind == "pmf":
        return Pmf(d["support"], d["probabilities"])
    if kind == "kde_multi":
        return KdeMulti(d["centers"], d["pilot_bandwidth"], d["modifiers"], d["trimmed"], d.get("lower"), d.get("upper"))
    if kind == "point_mass":
        return PointMassMixture(d["rows"])
    if kind == "class_conditional":
        comps = tuple(None if c is None else generator_from_dict(c) for c in d["components"])
        return ClassConditionalModel(d["class_probs"], comps, dict(d.get("flags", {})))
    raise ValueError(f"unknown generator type {kind!r}")


def model_to_dict(model: TrueModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "generator": generator_to_dict(model.generator),
        "bounds": None if model.bounds is None else [_bound_out(v) for v in model.bounds],
        "true_values": {k: tv.to_dict() for k, tv in sorted(model.true_values.items())},
    }


def model_from_dict(d: dict) -> TrueModel:
    if d.get("format") != FORMAT:
        raise ValueError(f"not a true-model document (format={d.get('format')!r})")
    if d.get("version") != VERSION:
        raise ValueError(f"unsupported true-model version {d.get('version')!r}")
    bounds = d.get("bounds")
    if bounds is not None:
        bounds = (_bound_in(bounds[0], -math.inf), _bound_in(bounds[1], math.inf))
    truths = {k: TruthValue.from_dict(v) for k, v in d.get("true_values", {}).items()}
    return TrueModel(generator_from_dict(d["generator"]), truths, bounds)


def save_model(model: TrueModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> TrueModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
