"""
Run configuration: an INI-style document with one section per concern.

Example::

    [model]
    d = 3
    gamma = 2.5

    [grid]
    n = 32
    L = 4.0

    [iparams]
    N = 8
    s = 0.6

    [evolve]
    dt = 0.004
    T = 1.0

    [initial]
    family = "gaussian"
    amplitude = 1.0
    width = 2.0

Values are Python literals (numbers, quoted strings, lists); true/false/yes/no
are booleans and other bare words are strings. N is a frequency |xi| on the
lattice xi = 2 pi k / L, so resolving 2N requires 2N < pi n / L. Every violation in a document is collected and
reported at once.
"""

from __future__ import annotations

import ast
import configparser
import math
from dataclasses import asdict, dataclass, field
from typing import Any

from .dynamics import EvolveConfig, ModelParams
from .experiments import SweepSpec
from .grid import Grid, make_grid
from .multipliers import IParams, is_dyadic

KNOWN_PROBES = ("mass", "energy", "modified_energy", "hs_norm", "h1_norm", "morawetz_action", "commutator")

# section -> key -> default (REQUIRED marks keys without a default)
REQUIRED = object()
DERIVED = object()

SCHEMA: dict[str, dict[str, Any]] = {
    "model": {"d": REQUIRED, "gamma": REQUIRED, "dealias": True},
    "grid": {"n": REQUIRED, "L": REQUIRED},
    "iparams": {"N": REQUIRED, "s": REQUIRED},
    "evolve": {
        "dt": DERIVED,
        "T": 1.0,
        "sample_every": 1,
        "integrator": "strang",
        "checkpoint_every": 0,
    },
    "initial": {
        "family": "gaussian",
        "amplitude": 1.0,
        "width": 1.0,
        "roughness": 0.6,
        "noise": 0.5,
        "seed": 0,
        "center": None,
        "momentum": None,
        "centers": None,
        "momenta": None,
    },
    "probes": {"names": ["mass", "energy", "modified_energy", "hs_norm"], "hs": None},
    "output": {"dir": "out", "prefix": "run", "snapshot": False},
    "sweep": {
        "N_list": [4, 8, 16, 32],
        "mode": "fixed",
        "controls": True,
        "K": 1.0,
        "mu": 0.1,
    },
}

# keys that may be written in a different case (configparser lowercases keys)
_CANONICAL = {section: {k.lower(): k for k in keys} for section, keys in SCHEMA.items()}

DT_SAFETY = math.pi


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations: list[str]):
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    grid: Grid
    iparams: IParams
    evolve: EvolveConfig
    initial: dict[str, Any]
    probes: tuple[str, ...]
    hs: float
    output: dict[str, Any]
    sweep: dict[str, Any] = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.initial.get("seed", 0))

    def sweep_spec(self) -> SweepSpec:
        sw = self.sweep
        return SweepSpec(
            N_list=tuple(sw["N_list"]),
            s=self.iparams.s,
            d=self.model.d,
            gamma=self.model.gamma,
            n=self.grid.n,
            L=self.grid.L,
            dt=self.evolve.dt,
            T=self.evolve.T,
            sample_every=self.evolve.sample_every,
            initial=dict(self.initial),
            seed=self.seed,
            mode=sw["mode"],
            dealias=self.model.dealias,
            controls=sw["controls"],
        )

    def to_dict(self) -> dict[str, Any]:
        ev = asdict(self.evolve)
        ev.pop("checkpoint_dir", None)
        return {
            "model": asdict(self.model),
            "grid": {"d": self.grid.d, "n": self.grid.n, "L": self.grid.L},
            "iparams": asdict(self.iparams),
            "evolve": ev,
            "initial": dict(self.initial),
            "probes": {"names": list(self.probes), "hs": self.hs},
            "output": dict(self.output),
            "sweep": dict(self.sweep),
        }


_WORDS = {"true": True, "false": False, "yes": True, "no": False, "none": None}


def _literal(text: str) -> Any:
    if text.strip().lower() in _WORDS:
        return _WORDS[text.strip().lower()]
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text.strip()


def _read(text: str) -> tuple[dict[str, dict[str, Any]], list[str]]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keep case (N vs n)
    problems: list[str] = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        return {}, [f"malformed document: {exc}"]
    raw: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        raw[section] = {}
        for key, value in parser.items(section):
            if key not in SCHEMA[section]:
                hint = _CANONICAL[section].get(key.lower())
                suffix = f" (did you mean {hint!r}?)" if hint else ""
                problems.append(f"unknown key {section}.{key}{suffix}")
                continue
            raw[section][key] = _literal(value)
    return raw, problems


def _num(problems: list[str], where: str, value: Any, kind=float) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{where} must be a number, got {value!r}")
        return None
    if kind is int and not float(value).is_integer():
        problems.append(f"{where} must be an integer, got {value!r}")
        return None
    return kind(value)


def parse_config(text: str) -> RunConfig:
    """Validate ``text`` into a :class:`RunConfig` or raise :class:`ConfigError` listing all violations."""
    raw, problems = _read(text)
    vals: dict[str, dict[str, Any]] = {}
    for section, keys in SCHEMA.items():
        vals[section] = {}
        for key, default in keys.items():
            given = raw.get(section, {})
            if key in given:
                vals[section][key] = given[key]
            elif default is REQUIRED:
                problems.append(f"missing required key {section}.{key}")
                vals[section][key] = None
            else:
                vals[section][key] = default

    m, g, ip, ev = vals["model"], vals["grid"], vals["iparams"], vals["evolve"]
    d = _num(problems, "model.d", m["d"], int) if m["d"] is not None else None
    gamma = _num(problems, "model.gamma", m["gamma"]) if m["gamma"] is not None else None
    n = _num(problems, "grid.n", g["n"], int) if g["n"] is not None else None
    L = _num(problems, "grid.L", g["L"]) if g["L"] is not None else None
    N = _num(problems, "iparams.N", ip["N"]) if ip["N"] is not None else None
    s = _num(problems, "iparams.s", ip["s"]) if ip["s"] is not None else None

    if d is not None and d < 1:
        problems.append(f"model.d must be >= 1, got {d}")
    if gamma is not None and d is not None and not 0 < gamma < d:
        problems.append(f"model.gamma must satisfy 0 < gamma < d = {d}, got {gamma}")
    if not isinstance(m["dealias"], bool):
        problems.append(f"model.dealias must be true/false, got {m['dealias']!r}")
    if n is not None and (n < 4 or n & (n - 1)):
        problems.append(f"grid.n must be a power of two >= 4, got {n}")
    if L is not None and not L > 0:
        problems.append(f"grid.L must be positive, got {L}")
    if N is not None and N < 1:
        problems.append(f"iparams.N must be >= 1, got {N}")
    if s is not None and not 0 < s <= 1:
        problems.append(f"iparams.s must lie in (0, 1], got {s}")

    nyquist = math.pi * n / L if n and L and L > 0 else None
    if N is not None and nyquist is not None and 2 * N >= nyquist:
        problems.append(f"2N = {2 * N:g} must stay below the Nyquist frequency pi n / L = {nyquist:.6g}")

    dx = L / n if n and L and L > 0 else None
    dt = ev["dt"]
    if dt is DERIVED:
        dt = min(0.01, 0.5 * dx * dx / DT_SAFETY) if dx else 0.01
    else:
        dt = _num(problems, "evolve.dt", dt)
    if dt is not None:
        if not dt > 0:
            problems.append(f"evolve.dt must be positive, got {dt}")
        elif dx is not None and dt >= dx * dx / DT_SAFETY:
            problems.append(f"evolve.dt = {dt:g} must be below dx^2 / pi = {dx * dx / DT_SAFETY:.6g}")
    T = _num(problems, "evolve.T", ev["T"])
    if T is not None and T < 0:
        problems.append(f"evolve.T must be nonnegative, got {T}")
    sample_every = _num(problems, "evolve.sample_every", ev["sample_every"], int)
    if sample_every is not None and sample_every < 1:
        problems.append(f"evolve.sample_every must be >= 1, got {sample_every}")
    checkpoint_every = _num(problems, "evolve.checkpoint_every", ev["checkpoint_every"], int)
    if checkpoint_every is not None and checkpoint_every < 0:
        problems.append(f"evolve.checkpoint_every must be >= 0, got {checkpoint_every}")
    if ev["integrator"] not in ("strang", "reference_rk4"):
        problems.append(f"evolve.integrator must be 'strang' or 'reference_rk4', got {ev['integrator']!r}")

    init = {k: v for k, v in vals["initial"].items() if v is not None}
    if init["family"] not in ("gaussian", "multibump", "rough"):
        problems.append(f"initial.family must be gaussian, multibump or rough, got {init['family']!r}")
    if init["family"] == "multibump" and "centers" not in init:
        problems.append("initial.centers is required for the multibump family")
    for key in ("amplitude", "width", "roughness", "noise"):
        _num(problems, f"initial.{key}", init[key])
    if isinstance(init["width"], (int, float)) and not init["width"] > 0:
        problems.append(f"initial.width must be positive, got {init['width']}")
    _num(problems, "initial.seed", init["seed"], int)

    pr = vals["probes"]
    names = pr["names"]
    if isinstance(names, str):
        names = [names]
    if not isinstance(names, (list, tuple)):
        problems.append(f"probes.names must be a list, got {names!r}")
        names = []
    for name in names:
        if name not in KNOWN_PROBES:
            problems.append(f"unknown probe {name!r} (known: {', '.join(KNOWN_PROBES)})")
    if "morawetz_action" in names and d is not None and d < 3:
        problems.append("probe morawetz_action needs d >= 3")
    hs = pr["hs"] if pr["hs"] is not None else s
    if pr["hs"] is not None:
        hs = _num(problems, "probes.hs", pr["hs"])

    sw = dict(vals["sweep"])
    N_list = sw["N_list"]
    if not isinstance(N_list, (list, tuple)) or not N_list:
        problems.append(f"sweep.N_list must be a nonempty list, got {N_list!r}")
    else:
        for Nj in N_list:
            if not isinstance(Nj, (int, float)) or not is_dyadic(Nj):
                problems.append(f"sweep.N_list entry {Nj!r} is not dyadic")
            elif "sweep" in raw and nyquist is not None and sw["mode"] == "fixed" and 2 * Nj >= nyquist:
                problems.append(f"sweep.N_list entry {Nj} has 2N at or above the Nyquist frequency {nyquist:.6g}")
        sw["N_list"] = list(N_list)
    if sw["mode"] not in ("fixed", "rescaled"):
        problems.append(f"sweep.mode must be 'fixed' or 'rescaled', got {sw['mode']!r}")
    for key in ("K", "mu"):
        v = _num(problems, f"sweep.{key}", sw[key])
        if v is not None and not v > 0:
            problems.append(f"sweep.{key} must be positive, got {v}")

    if problems:
        raise ConfigError(problems)

    return RunConfig(
        model=ModelParams(d, gamma, dealias=m["dealias"]),
        grid=make_grid(d, n, L),
        iparams=IParams(N, s),
        evolve=EvolveConfig(dt, T, sample_every, ev["integrator"], checkpoint_every),
        initial=init,
        probes=tuple(names),
        hs=float(hs),
        output=dict(vals["output"]),
        sweep=sw,
    )


def load_config(path: str) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
