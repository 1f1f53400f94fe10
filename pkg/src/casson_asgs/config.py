"""INI run configuration: parsing, validation, serialisation and shipped presets."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .manufactured import SCENARIOS
from .rheology import KINDS

COMMANDS = ("convergence", "cavity", "solve")
METHODS = ("auto", "direct", "gmres")
BACKENDS = ("auto", "numba", "numpy")
OUTDIR_ENV = "CASSON_ASGS_OUTDIR"


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


def _floats(text: str, key: str) -> tuple:
    try:
        vals = tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from exc
    return vals


def _ints(text: str, key: str) -> tuple:
    try:
        vals = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated integers, got {text!r}") from exc
    return vals


def _join(vals) -> str:
    return ",".join(repr(v) if isinstance(v, float) else str(v) for v in vals)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one command.

    ``dt = 0`` means the coupled rule ``dt = 1/n_div``. Physical keys left at
    ``None`` fall back to the scenario defaults.
    """

    command: str = "convergence"
    name: str = "run"
    scenario: str = "weak_const"
    n_div: tuple = (10, 20, 40, 80)
    dt: float = 0.0
    T: float = 1.0
    output_dir: str = "output"
    retain_trajectory: bool = True
    # physics
    rho: float = 1.0
    Re: float = 100.0
    tau_y: float = 0.0
    alpha: float | None = None
    viscosity: str | None = None
    eta: float | None = None
    k0: float | None = None
    k1: float | None = None
    eta0_p: float | None = None
    K: float | None = None
    A: float | None = None
    B: float | None = None
    # stabilisation
    c1: float = 4.0
    c2: float = 2.0
    c3: float = 1.0
    eps_J: float = 1e-10
    stabilization: bool = True
    # solver
    method: str = "auto"
    tol: float = 1e-9
    max_iter: int = 2000
    restart: int = 50
    backend: str = "auto"
    # cavity
    re_list: tuple = (100.0, 400.0, 1000.0)
    grid: int = 64
    pseudo_dt: float = 1.0
    tol_steady: float = 1e-6
    max_steps: int = 500

    def __post_init__(self):
        validate(self)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def dt_for(self, n_div: int) -> float:
        return self.dt if self.dt > 0 else 1.0 / n_div

    def model_overrides(self) -> dict:
        keys = ("k0", "k1", "eta0_p", "K", "A", "B")
        return {k: getattr(self, k) for k in keys if getattr(self, k) is not None}


def validate(cfg: RunConfig) -> None:
    def bad(msg):
        raise ConfigError(msg)

    if cfg.command not in COMMANDS:
        bad(f"run.command must be one of {COMMANDS}, got {cfg.command!r}")
    if cfg.scenario not in SCENARIOS:
        bad(f"run.scenario must be one of {SCENARIOS}, got {cfg.scenario!r}")
    if not cfg.n_div or any(n < 1 for n in cfg.n_div):
        bad(f"run.n_div must be a non-empty list of positive integers, got {cfg.n_div}")
    if cfg.dt < 0:
        bad("run.dt must be >= 0 (0 selects dt = 1/n_div)")
    if not cfg.T > 0:
        bad("run.T must be positive")
    for n in cfg.n_div:
        steps = cfg.T / cfg.dt_for(n)
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            bad(f"T/dt = {steps} is not an integer for n_div={n}")
    if not cfg.output_dir:
        bad("run.output_dir must not be empty")
    if not cfg.rho > 0:
        bad("physics.rho must be positive")
    if not cfg.Re > 0:
        bad("physics.Re must be positive")
    for k in ("tau_y", "alpha", "eta", "k0", "k1", "eta0_p", "K", "A", "B"):
        v = getattr(cfg, k)
        if v is not None and not v >= 0:
            bad(f"physics.{k} must be >= 0, got {v}")
    if cfg.viscosity is not None and cfg.viscosity not in KINDS:
        bad(f"physics.viscosity must be one of {KINDS}, got {cfg.viscosity!r}")
    for k in ("c1", "c2", "c3"):
        if not getattr(cfg, k) > 0:
            bad(f"stabilization.{k} must be positive")
    if not cfg.eps_J >= 0:
        bad("stabilization.eps_J must be >= 0")
    if cfg.method not in METHODS:
        bad(f"solver.method must be one of {METHODS}, got {cfg.method!r}")
    if cfg.backend not in BACKENDS:
        bad(f"solver.backend must be one of {BACKENDS}, got {cfg.backend!r}")
    if not cfg.tol > 0 or cfg.max_iter < 1 or cfg.restart < 1:
        bad("solver.tol, solver.max_iter and solver.restart must be positive")
    if cfg.command == "cavity" and not cfg.re_list:
        bad("cavity.re must list at least one Reynolds number")
    if any(not r > 0 for r in cfg.re_list):
        bad("cavity.re values must be positive")
    if cfg.grid < 1:
        bad("cavity.grid must be a positive integer")
    if not cfg.pseudo_dt > 0 or not cfg.tol_steady > 0 or cfg.max_steps < 1:
        bad("cavity.pseudo_dt, cavity.tol_steady and cavity.max_steps must be positive")


# (section, ini key, attribute, kind)
_SCHEMA = [
    ("run", "command", "command", "str"),
    ("run", "name", "name", "str"),
    ("run", "scenario", "scenario", "str"),
    ("run", "n_div", "n_div", "ints"),
    ("run", "dt", "dt", "float"),
    ("run", "T", "T", "float"),
    ("run", "output_dir", "output_dir", "str"),
    ("run", "retain_trajectory", "retain_trajectory", "bool"),
    ("physics", "rho", "rho", "float"),
    ("physics", "Re", "Re", "float"),
    ("physics", "tau_y", "tau_y", "float"),
    ("physics", "alpha", "alpha", "ofloat"),
    ("physics", "viscosity", "viscosity", "ostr"),
    ("physics", "eta", "eta", "ofloat"),
    ("physics", "k0", "k0", "ofloat"),
    ("physics", "k1", "k1", "ofloat"),
    ("physics", "eta0_p", "eta0_p", "ofloat"),
    ("physics", "K", "K", "ofloat"),
    ("physics", "A", "A", "ofloat"),
    ("physics", "B", "B", "ofloat"),
    ("stabilization", "c1", "c1", "float"),
    ("stabilization", "c2", "c2", "float"),
    ("stabilization", "c3", "c3", "float"),
    ("stabilization", "eps_J", "eps_J", "float"),
    ("stabilization", "enabled", "stabilization", "bool"),
    ("solver", "method", "method", "str"),
    ("solver", "tol", "tol", "float"),
    ("solver", "max_iter", "max_iter", "int"),
    ("solver", "restart", "restart", "int"),
    ("solver", "backend", "backend", "str"),
    ("cavity", "re", "re_list", "floats"),
    ("cavity", "grid", "grid", "int"),
    ("cavity", "pseudo_dt", "pseudo_dt", "float"),
    ("cavity", "tol_steady", "tol_steady", "float"),
    ("cavity", "max_steps", "max_steps", "int"),
]
_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def _parse_value(kind: str, text: str, key: str):
    text = text.strip()
    try:
        if kind == "str":
            return text
        if kind == "ostr":
            return None if text in ("", "default") else text
        if kind == "float":
            return float(text)
        if kind == "ofloat":
            return None if text in ("", "default") else float(text)
        if kind == "int":
            return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.lstrip('o')}") from exc
    if kind == "bool":
        if text.lower() not in _BOOL:
            raise ConfigError(f"{key}: expected a boolean, got {text!r}")
        return _BOOL[text.lower()]
    if kind == "ints":
        return _ints(text, key)
    if kind == "floats":
        return _floats(text, key)
    raise AssertionError(kind)


def _format_value(kind: str, v) -> str:
    if v is None:
        return "default"
    if kind in ("float", "ofloat"):
        return repr(float(v))
    if kind == "bool":
        return "true" if v else "false"
    if kind in ("ints", "floats"):
        return _join(v)
    return str(v)


def loads(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    known = {}
    for sec, key, attr, kind in _SCHEMA:
        known.setdefault(sec, {})[key] = (attr, kind)
    kw = {}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp[sec].items():
            if key not in known[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
            attr, kind = known[sec][key]
            kw[attr] = _parse_value(kind, raw, f"{sec}.{key}")
    return RunConfig(**kw)


def dumps(cfg: RunConfig) -> str:
    out, current = [], None
    for sec, key, attr, kind in _SCHEMA:
        if sec != current:
            if current is not None:
                out.append("")
            out.append(f"[{sec}]")
            current = sec
        out.append(f"{key} = {_format_value(kind, getattr(cfg, attr))}")
    return "\n".join(out) + "\n"


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return loads(text)


def preset_names() -> list:
    return sorted(p.name[:-4] for p in resources.files("casson_asgs.presets").iterdir()
                  if p.name.endswith(".ini"))


def load_preset(name: str) -> RunConfig:
    res = resources.files("casson_asgs.presets") / f"{name}.ini"
    if not res.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return loads(res.read_text())
