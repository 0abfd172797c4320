"""Experiment configuration: INI files with [model] and [experiment] sections."""
from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .model import PolymerSpec, SpecError, spec_from_mapping, spec_to_mapping

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


_REQ = object()
_FN = re.compile(r"^\s*(logspace|linspace)\s*\(([^)]*)\)\s*$")


def _float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as a number") from None


def _int(key, text):
    try:
        x = float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as an integer") from None
    if x != int(x):
        raise ConfigError(f"{key}: {text!r} is not an integer")
    return int(x)


def _pos_int(key, text):
    n = _int(key, text)
    if n < 1:
        raise ConfigError(f"{key}: must be >= 1, got {n}")
    return n


def _seed(key, text):
    n = _int(key, text)
    if not 0 <= n < 2 ** 64:
        raise ConfigError(f"{key}: seed must lie in [0, 2^64), got {n}")
    return n


def _floats(key, text):
    """Comma/space separated numbers, or logspace(a, b, n) / linspace(a, b, n)."""
    m = _FN.match(text)
    if m:
        args = [a for a in re.split(r"[,\s]+", m.group(2).strip()) if a]
        if len(args) != 3:
            raise ConfigError(f"{key}: {m.group(1)} takes (start, stop, num)")
        a, b, n = _float(key, args[0]), _float(key, args[1]), _int(key, args[2])
        f = np.logspace if m.group(1) == "logspace" else np.linspace
        return [float(x) for x in f(a, b, n)]
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ConfigError(f"{key}: empty list")
    return [_float(key, p) for p in parts]


def _ints(key, text):
    vals = _floats(key, text)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"{key}: entries must be integers")
    return [int(v) for v in vals]


def _bool(key, text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key}: cannot parse {text!r} as a boolean")


def _choice(*options):
    def parse(key, text):
        t = text.strip()
        if t not in options:
            raise ConfigError(f"{key}: {t!r} not one of {', '.join(options)}")
        return t
    return parse


def _text(key, text):
    return text.strip()


_COMMON = {
    "kind": (_text, None),
    "seed": (_seed, 0),
    "samples": (_pos_int, 16),
    "threads": (_pos_int, None),
    "out": (_text, "."),
}

_SCHEMAS: dict[str, dict[str, tuple[Callable, Any]]] = {
    "critical-scan": {
        "e_min": (_float, None), "e_max": (_float, None),
        "grid_step": (_float, 1e-3), "tol": (_float, 1e-12),
    },
    "lyapunov": {
        "energies": (_floats, None), "e_c": (_float, None), "epsilons": (_floats, None),
        "eta": (_float, 0.0), "N": (_pos_int, _REQ),
        "estimator": (_choice("two_sided", "plain"), "two_sided"), "burn_in": (_float, 0.1),
    },
    "deviation-scan": {
        "event": (_choice("norm_exceeds", "running_max_exceeds", "uniform_bounded",
                          "corollary"), _REQ),
        "energy": (_float, _REQ), "eta": (_float, 0.0), "N_list": (_ints, _REQ),
        "log_threshold": (_float, None), "threshold_scale": (_float, None),
        "threshold_power": (_float, 1.0), "alpha": (_float, 0.25), "c5": (_float, 1.0),
        "n_eps": (_pos_int, 5), "n_delta": (_pos_int, 2),
        "c4_calibrate_N": (_pos_int, None), "c4_quantile": (_float, 0.5),
    },
    "verify-bounds": {
        "bounds": (_text, "cramer, combes_thomas, transfer"), "instances": (_pos_int, 10),
        "energies": (_floats, _REQ), "etas": (_floats, _REQ), "N_list": (_ints, _REQ),
        "window": (_pos_int, None),
    },
    "moments": {
        "q_grid": (_floats, _REQ), "T_grid": (_floats, _REQ),
        "route": (_choice("green", "spectral"), "green"), "window": (_pos_int, None),
        "points_per_width": (_float, 8.0), "tol": (_float, 1e-3),
        "e_lo": (_float, None), "e_hi": (_float, None), "tails": (_bool, True),
    },
    "decomposition-scan": {
        "q": (_float, _REQ), "alpha": (_float, _REQ), "T_grid": (_floats, _REQ),
        "e_c": (_float, None), "eps0": (_float, None),
        "points_per_width": (_float, 8.0), "tol": (_float, 1e-3),
    },
    "ids": {
        "energies": (_floats, _REQ), "window": (_pos_int, 1000), "smoothing": (_float, 0.0),
    },
    "borel": {
        "density_file": (_text, _REQ), "energy": (_float, _REQ), "C": (_float, None),
        "deltas": (_floats, _REQ), "eps0s": (_floats, _REQ), "normalize": (_bool, False),
        "eps_min": (_float, 1e-4),
    },
}
_SCHEMAS["exponents"] = dict(_SCHEMAS["moments"], fit_t_min=(_float, None),
                             fit_t_max=(_float, None))

KINDS = tuple(_SCHEMAS)
_BOUNDS = ("cramer", "combes_thomas", "transfer")


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    spec: PolymerSpec
    params: dict
    seed: int
    samples: int
    threads: int | None
    out: str

    def resolved(self) -> dict:
        """Fully resolved config as plain data (embedded in the manifest)."""
        exp = {"kind": self.kind, "seed": self.seed, "samples": self.samples, "out": self.out}
        if self.threads is not None:
            exp["threads"] = self.threads
        exp.update({k: v for k, v in self.params.items() if v is not None})
        return {"model": spec_to_mapping(self.spec), "experiment": exp}

    def digest(self) -> str:
        """Hash of everything that affects the numbers (threads and out excluded)."""
        r = self.resolved()
        r["experiment"].pop("threads", None)
        r["experiment"].pop("out", None)
        blob = json.dumps(r, sort_keys=True, separators=(",", ":"), default=repr)
        return hashlib.sha256(blob.encode()).hexdigest()


def _flatten(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(repr(float(x)) if isinstance(x, float) else str(x) for x in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _check_params(kind: str, p: dict) -> None:
    if kind == "lyapunov":
        if (p["energies"] is None) == (p["e_c"] is None or p["epsilons"] is None):
            raise ConfigError("energies: give either energies or both e_c and epsilons")
        if not 0.0 <= p["burn_in"] < 1.0:
            raise ConfigError("burn_in: must lie in [0, 1)")
    elif kind == "deviation-scan":
        calibrated = p["event"] == "uniform_bounded" and p["c4_calibrate_N"] is not None
        given = (p["log_threshold"] is not None) + (p["threshold_scale"] is not None) + calibrated
        if p["event"] != "corollary" and given != 1:
            raise ConfigError("log_threshold: give exactly one of log_threshold, threshold_scale"
                              " or (uniform_bounded only) c4_calibrate_N")
        if not 0.0 < p["c4_quantile"] < 1.0:
            raise ConfigError("c4_quantile: must lie in (0, 1)")
        if any(n < 1 for n in p["N_list"]):
            raise ConfigError("N_list: entries must be >= 1")
    elif kind == "verify-bounds":
        names = [b for b in re.split(r"[,\s]+", p["bounds"].strip()) if b]
        bad = [b for b in names if b not in _BOUNDS]
        if bad or not names:
            raise ConfigError(f"bounds: unknown bound kind(s) {bad}; choose from {_BOUNDS}")
        p["bounds"] = ", ".join(names)
        if any(e <= 0 for e in p["etas"]):
            raise ConfigError("etas: imaginary parts must be positive")
        if any(n < 0 for n in p["N_list"]):
            raise ConfigError("N_list: entries must be >= 0")
    elif kind in ("moments", "exponents"):
        if any(q <= 0 for q in p["q_grid"]):
            raise ConfigError("q_grid: entries must be positive")
        if any(T <= 0 for T in p["T_grid"]):
            raise ConfigError("T_grid: entries must be positive")
        if (p["e_lo"] is None) != (p["e_hi"] is None):
            raise ConfigError("e_lo: give both e_lo and e_hi or neither")
        if p["points_per_width"] <= 0 or p["tol"] <= 0:
            raise ConfigError("points_per_width: points_per_width and tol must be positive")
        if p["route"] == "spectral" and p["window"] is None:
            raise ConfigError("window: the spectral route needs a window")
    elif kind == "decomposition-scan":
        if p["q"] <= 0 or not 0 < p["alpha"] < 1:
            raise ConfigError("alpha: need q > 0 and 0 < alpha < 1")
    elif kind == "ids":
        if sorted(p["energies"]) != p["energies"]:
            raise ConfigError("energies: must be sorted")
        if 2 * p["window"] + 1 < 1000:
            raise ConfigError("window: need at least 1000 sites (half-width >= 500)")
    elif kind == "borel":
        if any(d <= 0 for d in p["deltas"]) or any(e <= 0 for e in p["eps0s"]):
            raise ConfigError("deltas: deltas and eps0s must be positive")


def parse_config(model: dict, experiment: dict, kind: str | None = None) -> ExperimentConfig:
    """Validate raw string mappings; every error names the offending key."""
    try:
        spec = spec_from_mapping({k: str(v) for k, v in model.items()})
    except SpecError as e:
        raise ConfigError(str(e)) from None
    exp = {k: str(v) for k, v in experiment.items()}
    given = exp.get("kind", "").strip() or None
    if kind is not None and given is not None and given != kind:
        raise ConfigError(f"kind: config is for {given!r} but subcommand is {kind!r}")
    kind = kind or given
    if kind not in _SCHEMAS:
        raise ConfigError(f"kind: unknown experiment {kind!r}; choose from {', '.join(KINDS)}")
    schema = dict(_COMMON, **_SCHEMAS[kind])
    unknown = sorted(set(exp) - set(schema))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key in [experiment] for {kind}")
    vals = {}
    for key, (parse, default) in schema.items():
        if key in exp:
            vals[key] = parse(key, exp[key])
        elif default is _REQ:
            raise ConfigError(f"{key}: required for {kind}")
        else:
            vals[key] = default
    common = {k: vals.pop(k) for k in _COMMON}
    _check_params(kind, vals)
    return ExperimentConfig(kind, spec, vals, common["seed"], common["samples"],
                            common["threads"], common["out"])


def load_config(path: str | Path, kind: str | None = None) -> ExperimentConfig:
    """Read an INI config, or the ``config`` block of a run manifest (.json)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e.strerror}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(text)["config"]
        except (ValueError, KeyError, TypeError):
            raise ConfigError(f"config: {path} is not a run manifest") from None
        model = {k: _flatten(v) for k, v in data["model"].items()}
        exp = {k: _flatten(v) for k, v in data["experiment"].items()}
        return parse_config(model, exp, kind)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ConfigError(f"config: {e}") from None
    extra = sorted(set(cp.sections()) - {"model", "experiment"})
    if extra:
        raise ConfigError(f"[{extra[0]}]: unknown section")
    for sec in ("model", "experiment"):
        if not cp.has_section(sec):
            raise ConfigError(f"[{sec}]: section missing")
    exp = dict(cp["experiment"])
    if "density_file" in exp:
        # relative to the config file, stored absolute so manifests re-run anywhere
        exp["density_file"] = str((path.parent / exp["density_file"].strip()).resolve())
    return parse_config(dict(cp["model"]), exp, kind)

