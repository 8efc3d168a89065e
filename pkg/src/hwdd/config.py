"""JSON run configuration: schema, defaults and conversion to experiment objects."""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .hamiltonians import CrossKerrMatrix, DephasingSpec, NoiseModel, device_cross_kerr, load_device_rates
from .sequences import BUILDERS
from .simulator import ExperimentConfig, SequenceSpec

CONFIG_VERSION = 1
DEFAULT_SHOTS = 1000
EXPERIMENTS = ("preserve", "crosskerr", "bell", "scaling", "hw-dump", "seq-emit")
SEQUENCE_NAMES = ("none",) + tuple(sorted(BUILDERS))


class ConfigError(ValueError):
    """Configuration could not be loaded or validated."""


_POS = {"type": "number", "exclusiveMinimum": 0}
_DIM = {"type": "integer", "minimum": 2}

_DEPHASING = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "sigma": {"type": "number", "minimum": 0},
        "sigmas": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "qudits": {"type": "array", "items": {"type": "integer", "minimum": 0}},
    },
}

_CROSS_KERR = {
    "type": "object",
    "additionalProperties": False,
    "required": ["qudits"],
    "properties": {
        "qudits": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "pair": {"type": "string"},
        "rates_mhz": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "experiment"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "description": {"type": "string"},
        "d": _DIM,
        "register": {"type": "array", "items": _DIM, "minItems": 1},
        "sequences": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {
                    "name": {"enum": list(SEQUENCE_NAMES)},
                    "reps": {"type": "integer", "minimum": 1},
                    "label": {"type": "string"},
                },
            },
        },
        "times_us": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "time_mode": {"enum": ["scale_tau", "repeat"]},
        "tau_us": _POS,
        "pulse_error": {"type": "number", "exclusiveMinimum": -0.2, "exclusiveMaximum": 0.2},
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dephasing": _DEPHASING,
                "cross_kerr": {"type": "array", "items": _CROSS_KERR},
                "hw_bath": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["qudit", "scale"],
                    "properties": {
                        "qudit": {"type": "integer", "minimum": 0},
                        "scale": {"type": "number", "minimum": 0},
                        "bath_dim": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "shots": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "scaling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dims": {"type": "array", "items": _DIM, "minItems": 1},
                "scale": _POS,
                "bath_dim": {"type": "integer", "minimum": 1},
                "sequences": {"type": "array", "items": {"enum": ["universal", "dxd", "none"]}, "minItems": 1},
                "tau_us": {"type": "array", "items": _POS, "minItems": 4},
                "target": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.1},
                "decades": {"type": "number", "minimum": 1.5},
                "points": {"type": "integer", "minimum": 4},
            },
        },
        "label": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "name": {"enum": sorted(BUILDERS)},
        "reps": {"type": "integer", "minimum": 1},
    },
}

# Experiments that need these keys
_REQUIRED = {
    "preserve": ("d", "sequences", "times_us"),
    "crosskerr": ("d", "sequences", "times_us"),
    "bell": ("sequences", "times_us"),
    "scaling": (),
    "hw-dump": ("d",),
    "seq-emit": ("d", "name", "tau_us"),
}


@dataclass
class RunConfig:
    """Validated configuration with defaults filled in."""

    version: int
    experiment: str
    params: dict
    output_dir: str | None = None
    source: str | None = None
    raw: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.params["d"]

    @property
    def seed(self) -> int:
        return self.params["seed"]

    @property
    def shots(self) -> int:
        return self.params["shots"]

    def echo(self) -> dict:
        """Config as a plain dict, defaults included; enough to re-run the experiment."""
        out = {"version": self.version, "experiment": self.experiment}
        out.update(copy.deepcopy(self.params))
        if self.output_dir is not None:
            out["output_dir"] = self.output_dir
        return out

    def to_experiment_config(self) -> ExperimentConfig:
        if self.experiment not in ("preserve", "crosskerr", "bell"):
            raise ConfigError(f"experiment {self.experiment!r} is not a fidelity run")
        p = self.params
        register = tuple(p["register"])
        try:
            noise = _noise_model(self.experiment, register, p.get("noise", {}))
            return ExperimentConfig(
                experiment=self.experiment,
                d=p["d"],
                register=register,
                sequences=[SequenceSpec(s["name"], s.get("reps", 1), s.get("label")) for s in p["sequences"]],
                times=[float(t) for t in p["times_us"]],
                noise=noise,
                pulse_error=p["pulse_error"],
                time_mode=p["time_mode"],
                tau=p.get("tau_us"),
                shots=p["shots"],
                seed=p["seed"],
                threads=p["threads"],
                echo=self.echo(),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(str(exc).strip("\"'")) from exc


def _default_register(experiment: str, d: int) -> list[int]:
    if experiment == "crosskerr":
        # three-qutrit chain for d=3, the measured ququart pair otherwise
        return [d] * (3 if d == 3 else 2)
    if experiment == "bell":
        return [3, 3]
    return [d]


def _default_cross_kerr(experiment: str, register: tuple[int, ...]) -> list[dict]:
    if experiment == "bell":
        return [{"qudits": [0, 1], "pair": "Q2-Q3"}]
    if experiment == "crosskerr":
        if len(register) == 3:
            return [{"qudits": [0, 1], "pair": "Q1-Q2"}, {"qudits": [1, 2], "pair": "Q2-Q3"}]
        return [{"qudits": [0, 1], "pair": "Q1-Q2"}]
    return []


def _noise_model(experiment: str, register: tuple[int, ...], noise: dict) -> NoiseModel:
    dephasing = {}
    dep = noise.get("dephasing")
    if dep:
        for q in dep.get("qudits", range(len(register))):
            if q >= len(register):
                raise ValueError(f"noise.dephasing.qudits: qudit {q} outside register of {len(register)}")
            sigmas = dep.get("sigmas")
            if sigmas is not None and len(sigmas) != register[q] - 1:
                raise ValueError(f"noise.dephasing.sigmas: need {register[q] - 1} values for d={register[q]}")
            dephasing[q] = DephasingSpec(register[q], dep.get("sigma", 0.0), tuple(sigmas) if sigmas else None)

    entries = noise.get("cross_kerr")
    if entries is None:
        entries = _default_cross_kerr(experiment, register)
    table = load_device_rates() if any("pair" in e for e in entries) else None
    cross_kerr = {}
    for e in entries:
        a, b = e["qudits"]
        if a == b or max(a, b) >= len(register):
            raise ValueError(f"noise.cross_kerr.qudits: invalid pair {e['qudits']} for register {list(register)}")
        if register[a] != register[b]:
            raise ValueError(f"noise.cross_kerr.qudits: pair {e['qudits']} couples different dimensions")
        d = register[a]
        if ("pair" in e) == ("rates_mhz" in e):
            raise ValueError("noise.cross_kerr: give exactly one of 'pair' or 'rates_mhz'")
        if "pair" in e:
            ck = device_cross_kerr(e["pair"], d, table)
        else:
            ck = CrossKerrMatrix.from_mhz(d, e["rates_mhz"])
        cross_kerr[(min(a, b), max(a, b))] = ck

    hw = noise.get("hw_bath")
    kwargs = {}
    if hw:
        if hw["qudit"] >= len(register):
            raise ValueError(f"noise.hw_bath.qudit: {hw['qudit']} outside register")
        kwargs = {"hw_qudit": hw["qudit"], "hw_scale": hw["scale"], "bath_dim": hw.get("bath_dim", 2)}
    return NoiseModel(register, dephasing, cross_kerr, **kwargs)


def _key_path(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        # the offending key is in the message, not the path
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return ".".join(filter(None, [path, ",".join(extra)]))
    if err.validator == "required":
        return ".".join(filter(None, [path, err.message.split("'")[1]]))
    return path or "<root>"


def validate(data: dict, source: str = "<config>") -> RunConfig:
    """Validate a parsed config and fill defaults."""
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(f"{source}: invalid key '{_key_path(err)}': {err.message}")

    experiment = data["experiment"]
    for key in _REQUIRED[experiment]:
        if key not in data:
            raise ConfigError(f"{source}: missing key '{key}' required for experiment {experiment!r}")

    params = {k: copy.deepcopy(v) for k, v in data.items() if k not in ("version", "experiment", "output_dir")}
    if experiment == "bell":
        if params.setdefault("d", 3) != 3:
            raise ConfigError(f"{source}: invalid key 'd': Bell experiment is defined for d=3")
    params.setdefault("shots", DEFAULT_SHOTS)
    params.setdefault("seed", 0)
    params.setdefault("threads", 1)
    params.setdefault("pulse_error", 0.0)
    params.setdefault("time_mode", "scale_tau")
    if "d" in params:
        params.setdefault("register", _default_register(experiment, params["d"]))
    if params.get("time_mode") == "repeat" and "tau_us" not in params:
        raise ConfigError(f"{source}: missing key 'tau_us' required by time_mode 'repeat'")
    times = params.get("times_us")
    if times is not None:
        if not times:
            raise ConfigError(f"{source}: invalid key 'times_us': time grid is empty")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError(f"{source}: invalid key 'times_us': time grid must be strictly increasing")
    if experiment == "scaling":
        sc = params.setdefault("scaling", {})
        sc.setdefault("dims", [2, 3, 4, 5, 6])
        sc.setdefault("scale", 1.0)
        sc.setdefault("bath_dim", 1)
        sc.setdefault("sequences", ["universal", "none"])
        sc.setdefault("target", 1e-4)
        sc.setdefault("decades", 2.0)
        sc.setdefault("points", 9)
    return RunConfig(CONFIG_VERSION, experiment, params, data.get("output_dir"), source, copy.deepcopy(data))


def bundled_config_dir() -> Path:
    return Path(str(resources.files("hwdd") / "configs"))


def resolve_config_path(path: str | os.PathLike) -> Path:
    """``path`` if it exists, else a bundled config of that name (with or without ``configs/``)."""
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_config_dir() / p.name
    if bundled.exists() and (p.parent == Path(".") or p.parent.name == "configs"):
        return bundled
    raise ConfigError(f"config file not found: {path}")


def load_config(path: str | os.PathLike) -> RunConfig:
    """Read, validate and default-fill a JSON run config."""
    p = resolve_config_path(path)
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read: {exc}") from exc
    return validate(data, str(p))


def bundled_configs() -> list[Path]:
    return sorted(bundled_config_dir().glob("*.json"))
