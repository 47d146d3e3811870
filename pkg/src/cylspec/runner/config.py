"""Experiment configuration: INI files read with configparser.

Layout::

    [study]
    kind = scaling          ; thresholds | spectrum | accumulation | decay | scaling | guide2d
    seed = 0

    [model]
    type = separable        ; separable | guide | square-well
    ...

    [numeric]
    ...

    [deformation]
    lambda = 0.1j, 0.2j, 0.3j
    ...

Every key a study reads has a default listed in ``SCHEMA``; the resolved
configuration (defaults filled in) is what gets echoed to the outputs.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass

from ..errors import ConfigurationError

SCHEMA_VERSION = "1"
STUDY_KINDS = ("thresholds", "spectrum", "accumulation", "decay", "scaling", "guide2d")
MODEL_TYPES = ("separable", "guide", "square-well")


def _real(text):
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _int(text):
    return int(text)


def _str(text):
    return text.strip()


def _complex(text):
    return complex(text.strip().replace(" ", ""))


def _list(conv):
    def parse(text):
        items = [t for t in (s.strip() for s in text.split(",")) if t]
        return [conv(t) for t in items]
    parse.__name__ = f"list of {conv.__name__.lstrip('_')}"
    return parse


def _opt(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none") else conv(text)
    parse.__name__ = f"optional {conv.__name__.lstrip('_')}"
    return parse


# section -> key -> (parser, default)
SCHEMA = {
    "study": {
        "kind": (_str, None),
        "seed": (_int, 0),
        "schema": (_str, SCHEMA_VERSION),
    },
    "model": {
        "type": (_str, "separable"),
        "n": (_int, 1),
        "delta": (_real, 1.0),
        "c": (_opt(_real), None),
        "amplitude": (_opt(_real), None),
        "cross_section": (_str, "interval-dirichlet"),
        "extent": (_real, 1.0),
        "copies": (_int, 1),
        "depth": (_real, 5.0),
        "half_width": (_real, 2.0),
    },
    "numeric": {
        "count": (_int, 4),
        "k": (_int, 1),
        "k_list": (_list(_int), []),
        "L": (_real, 40.0),
        "L_list": (_list(_real), []),
        "h": (_real, 0.02),
        "grid": (_str, "symmetric"),
        "window_lo": (_opt(_real), None),
        "window_hi": (_real, 0.0),
        "tol": (_opt(_real), None),
        "epsilon": (_real, 0.05),
        "state": (_int, 0),
        "samples": (_int, 400),
        "boundary": (_str, "dirichlet"),
        "lx_list": (_list(_real), [40.0, 80.0]),
        "hx": (_real, 1.0),
        "ny": (_int, 24),
        "n_eig": (_int, 4),
        "oracle_lx": (_real, 3.0),
        "oracle_ny": (_int, 4),
        "similarity_L": (_real, 10.0),
        "similarity_h": (_real, 0.1),
    },
    "deformation": {
        "lambda": (_list(_complex), []),
        "beta": (_list(_real), []),
        "R": (_real, 3.0),
        "ramp_width": (_real, 1.0),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    study: dict
    model: dict
    numeric: dict
    deformation: dict
    source: str = ""

    def echo(self) -> dict:
        """Fully resolved configuration, JSON friendly."""
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, list):
                return [enc(x) for x in v]
            return v
        return {sec: {k: enc(v) for k, v in getattr(self, sec).items()}
                for sec in ("study", "model", "numeric", "deformation")}


def parse_config(text: str, kind: str = None, source: str = "<string>") -> ExperimentConfig:
    """Parse INI text; errors name the offending ``section.key``."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigurationError(f"{source}: unreadable config: {exc}") from None
    resolved = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigurationError(f"{source}: unknown section [{section}]")
    for section, keys in SCHEMA.items():
        values = {}
        given = parser[section] if parser.has_section(section) else {}
        for key in given:
            if key not in keys:
                raise ConfigurationError(f"{source}: unknown key {section}.{key}")
        for key, (conv, default) in keys.items():
            if key in given:
                raw = given[key]
                try:
                    values[key] = conv(raw)
                except (TypeError, ValueError) as exc:
                    raise ConfigurationError(
                        f"{source}: {section}.{key} = {raw!r} is not a valid "
                        f"{conv.__name__.lstrip('_')} ({exc})") from None
            else:
                values[key] = list(default) if isinstance(default, list) else default
        resolved[section] = values
    study = resolved["study"]
    if study["kind"] is None:
        if kind is None:
            raise ConfigurationError(f"{source}: study.kind is required")
        study["kind"] = kind
    elif kind is not None and study["kind"] != kind:
        raise ConfigurationError(
            f"{source}: study.kind = {study['kind']!r} does not match subcommand {kind!r}")
    if study["kind"] not in STUDY_KINDS:
        raise ConfigurationError(f"{source}: study.kind must be one of {STUDY_KINDS}")
    if study["schema"] != SCHEMA_VERSION:
        raise ConfigurationError(f"{source}: study.schema {study['schema']!r} is not "
                                 f"supported (expected {SCHEMA_VERSION!r})")
    _fill_model_defaults(resolved["model"], source)
    _validate(resolved, source)
    return ExperimentConfig(study["kind"], study["seed"], resolved["study"], resolved["model"],
                            resolved["numeric"], resolved["deformation"], source)


def load_config(path, kind: str = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, kind, str(path))


def _fill_model_defaults(model: dict, source: str):
    mtype = model["type"]
    if mtype not in MODEL_TYPES:
        raise ConfigurationError(f"{source}: model.type must be one of {MODEL_TYPES}")
    if model["amplitude"] is None:
        model["amplitude"] = 5.0 if mtype == "guide" else 1.0
    if model["c"] is None:
        model["c"] = 2.0 if mtype == "guide" else 1.0


def _need(cond, key, message, source):
    if not cond:
        raise ConfigurationError(f"{source}: {key}: {message}")


def _validate(cfg: dict, source: str):
    num, dfm, model = cfg["numeric"], cfg["deformation"], cfg["model"]
    _need(num["h"] > 0, "numeric.h", "must be positive", source)
    _need(num["L"] > 0, "numeric.L", "must be positive", source)
    _need(all(L > 0 for L in num["L_list"]), "numeric.L_list", "entries must be positive", source)
    _need(num["count"] >= 1, "numeric.count", "must be >= 1", source)
    _need(num["k"] >= 1, "numeric.k", "must be >= 1", source)
    _need(all(k >= 1 for k in num["k_list"]), "numeric.k_list", "entries must be >= 1", source)
    _need(num["epsilon"] > 0, "numeric.epsilon", "must be positive", source)
    _need(num["tol"] is None or num["tol"] > 0, "numeric.tol", "must be positive", source)
    _need(num["grid"] in ("symmetric", "half-line"), "numeric.grid",
          "must be 'symmetric' or 'half-line'", source)
    _need(num["boundary"] in ("dirichlet", "neumann"), "numeric.boundary",
          "must be 'dirichlet' or 'neumann'", source)
    _need(num["samples"] >= 100, "numeric.samples", "must be >= 100", source)
    _need(num["state"] >= 0, "numeric.state", "must be >= 0", source)
    _need(1 <= num["n_eig"] <= 20, "numeric.n_eig", "must lie in 1..20", source)
    _need(num["ny"] >= 1, "numeric.ny", "must be >= 1", source)
    _need(num["hx"] > 0, "numeric.hx", "must be positive", source)
    _need(all(lx > 0 for lx in num["lx_list"]), "numeric.lx_list",
          "entries must be positive", source)
    _need(dfm["R"] > 0, "deformation.R", "must be positive", source)
    _need(dfm["ramp_width"] > 0, "deformation.ramp_width", "must be positive", source)
    _need(model["n"] >= 1, "model.n", "must be >= 1", source)
    _need(model["extent"] > 0, "model.extent", "must be positive", source)
    _need(model["copies"] >= 1, "model.copies", "must be >= 1", source)
