"""Experiment configuration: flat ``key = value`` files merged with CLI flags."""

from __future__ import annotations

import ast
import json
import math
import operator
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

import numpy as np

MODES = ("walk", "revert", "periodic", "spectral", "scan", "crosscheck")
COINS = ("param", "hadamard", "grover", "product", "file")
INTERVENTIONS = ("g", "file")
FORMATS = ("csv", "json")

# per-mode acceptance tolerance when --tol is not given
DEFAULT_TOL = {
    "walk": 1e-10,
    "revert": 1e-10,
    "periodic": 1e-9,
    "spectral": 1e-9,
    "scan": 1e-10,
    "crosscheck": 1e-8,
}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}


def parse_real(text: str) -> float:
    """Evaluate a numeric literal or a simple expression such as ``pi/4``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"unsupported expression {text!r}")

    return ev(ast.parse(str(text).strip(), mode="eval"))


def parse_complex(text: str) -> complex:
    t = str(text).strip().replace(" ", "")
    try:
        return complex(t)
    except ValueError:
        return complex(parse_real(t))


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def load_matrix_json(path: str | Path) -> np.ndarray:
    """Read ``{"re": [[...]], "im": [[...]]}`` (``im`` optional)."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    return re + 1j * im


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    theta: float = math.pi / 4
    phi1: float = 0.0
    phi2: float = 0.0
    g_phi1: float | None = None
    g_phi2: float | None = None
    coin: str = "param"
    factors: str | None = None
    coin_file: str | None = None
    intervention: str = "g"
    intervention_file: str | None = None
    dim: int = 1
    lattice: str | None = None
    coin_state: str = "0"
    site: str = "0"
    state_file: str | None = None
    steps: int | None = None
    l: int | None = None
    t1: int | None = None
    t2: int | None = None
    cycles: int = 4
    schedule: str = ""
    trace: bool = False
    out: str | None = None
    format: str = "json"
    seed: int = 0
    tol: float | None = None
    timing: bool = False

    @property
    def tolerance(self) -> float:
        return self.tol if self.tol is not None else DEFAULT_TOL[self.mode]

    def echo(self) -> dict[str, Any]:
        """Configuration as recorded in the run manifest (output path excluded)."""
        d = asdict(self)
        d.pop("out")
        d.pop("timing")
        d["tol"] = self.tolerance
        return d

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs: dict[str, Any] = {}
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in known:
                raise ConfigError(key, "unknown configuration key")
            kwargs[key] = _coerce(key, raw)
        if "mode" not in kwargs:
            raise ConfigError("mode", "missing")
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}")
        if self.coin not in COINS:
            raise ConfigError("coin", f"must be one of {COINS}")
        if self.intervention not in INTERVENTIONS:
            raise ConfigError("intervention", f"must be one of {INTERVENTIONS}")
        if self.format not in FORMATS:
            raise ConfigError("format", f"must be one of {FORMATS}")
        if self.format == "csv" and not self.out:
            raise ConfigError("out", "csv output needs --out")
        if self.dim < 1:
            raise ConfigError("dim", "must be >= 1")
        if self.coin == "file" and not self.coin_file:
            raise ConfigError("coin_file", "required when coin = file")
        if self.coin == "product" and not self.factors:
            raise ConfigError("factors", "required when coin = product")
        if self.intervention == "file" and not self.intervention_file:
            raise ConfigError("intervention_file", "required when intervention = file")
        if self.mode in ("walk", "scan", "crosscheck"):
            if self.steps is None:
                raise ConfigError("steps", f"required for mode {self.mode}")
            if self.steps < 0:
                raise ConfigError("steps", "must be >= 0")
        if self.mode in ("revert", "periodic", "spectral"):
            if self.l is None:
                raise ConfigError("l", f"required for mode {self.mode}")
            if self.l < 1:
                raise ConfigError("l", "must be >= 1")
        if self.mode == "periodic" and self.cycles < 1:
            raise ConfigError("cycles", "must be >= 1")
        if self.mode in ("revert", "periodic", "scan") and self.dim != 1:
            raise ConfigError("dim", f"mode {self.mode} works on the line (dim = 1)")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("tol", "must be positive")


_INT_KEYS = {"dim", "steps", "l", "t1", "t2", "cycles", "seed"}
_REAL_KEYS = {"theta", "phi1", "phi2", "g_phi1", "g_phi2", "tol"}
_BOOL_KEYS = {"trace", "timing"}


def _coerce(key: str, raw: Any) -> Any:
    try:
        if key in _INT_KEYS:
            if isinstance(raw, int):
                return raw
            v = parse_real(raw)
            if v != int(v):
                raise ValueError(f"not an integer: {raw!r}")
            return int(v)
        if key in _REAL_KEYS:
            return float(raw) if isinstance(raw, (int, float)) else parse_real(raw)
        if key in _BOOL_KEYS:
            return parse_bool(raw)
        return str(raw).strip()
    except (ValueError, SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(key, str(exc)) from None
