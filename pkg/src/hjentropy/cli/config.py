"""Experiment configuration: an INI file, environment overrides and command-line flags.

Sections and keys (all optional)::

    [hamiltonian]  name = quadratic | quartic | cosh, scale, offset
    [class]        support, lipschitz, semiconcavity, variation, horizon, dim
    [grid]         points, half_width, subdivisions
    [run]          seed, threads, times, eps_list, members, preset, targets,
                   cells, lifted, refine, reach_semiconcavity, reach_lipschitz

Any key can be overridden by an environment variable ``HJENTROPY_<SECTION>_<KEY>``,
for example ``HJENTROPY_CLASS_SUPPORT=2``. Flags on the command line win over both.
"""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import dataclass, field

from ..core import ClassParams, HamiltonianSpec, make_hamiltonian
from ..errors import ConfigurationError

ENV_PREFIX = "HJENTROPY_"

_SCHEMA = {
    "hamiltonian": {"name": str, "scale": float, "offset": float},
    "class": {"support": float, "lipschitz": float, "semiconcavity": float,
              "variation": float, "horizon": float, "dim": int},
    "grid": {"points": int, "half_width": float, "subdivisions": int},
    "run": {"seed": int, "threads": int, "times": "floats", "eps_list": "floats",
            "members": int, "preset": str, "targets": int, "cells": int,
            "lifted": bool, "refine": bool, "reach_semiconcavity": "auto",
            "reach_lipschitz": "auto"},
}


class ConfigError(ConfigurationError):
    """A config problem, with the file location when known."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if key:
            where.append(key)
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.key = key


@dataclass
class ExperimentConfig:
    hamiltonian_name: str = "quadratic"
    hamiltonian_options: dict = field(default_factory=dict)
    class_params: ClassParams = field(default_factory=ClassParams)
    points: int | None = None
    half_width: float | None = None
    subdivisions: int = 1
    seed: int = 0
    threads: int = 1
    times: list | None = None
    eps_list: list | None = None
    members: int | None = None
    preset: str = "hat"
    targets: int = 5
    cells: int | None = None
    lifted: bool = True
    refine: bool = True
    reach_semiconcavity: float | None = None
    reach_lipschitz: float | None = None
    source: str = "<defaults>"

    def hamiltonian(self) -> HamiltonianSpec:
        return make_hamiltonian(self.hamiltonian_name, self.class_params.dim,
                                **self.hamiltonian_options)

    def summary(self) -> dict:
        p = self.class_params
        return {
            "hamiltonian": {"name": self.hamiltonian_name, **self.hamiltonian_options},
            "class": {"support": p.support, "lipschitz": p.lipschitz,
                      "semiconcavity": p.semiconcavity, "variation": p.variation,
                      "horizon": p.horizon, "dim": p.dim},
            "grid": {"points": self.points, "half_width": self.half_width,
                     "subdivisions": self.subdivisions},
            "run": {"seed": self.seed, "threads": self.threads, "times": self.times,
                    "eps_list": self.eps_list, "members": self.members, "preset": self.preset,
                    "targets": self.targets, "cells": self.cells, "lifted": self.lifted,
                    "refine": self.refine, "reach_semiconcavity": self.reach_semiconcavity,
                    "reach_lipschitz": self.reach_lipschitz},
        }


def _key_lines(text: str) -> dict:
    """Map ``(section, key)`` to its line number by a plain scan of the file."""
    lines = {}
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        header = re.fullmatch(r"\[([^\]]+)\]", stripped)
        if header:
            section = header.group(1).strip().lower()
            continue
        match = re.match(r"([A-Za-z0-9_\-]+)\s*[=:]", stripped)
        if match and section is not None:
            lines[(section, match.group(1).lower())] = number
    return lines


def _convert(kind, raw: str):
    text = raw.strip()
    if kind is str:
        return text
    if kind is int:
        return int(text)
    if kind is float:
        value = float(text)
        if not math.isfinite(value):
            raise ValueError("not a finite number")
        return value
    if kind is bool:
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected true or false")
    if kind == "floats":
        parts = [p for p in re.split(r"[,\s]+", text) if p]
        if not parts:
            raise ValueError("expected a list of numbers")
        return [float(p) for p in parts]
    if kind == "auto":
        return None if text.lower() == "auto" else float(text)
    raise AssertionError(kind)


def _collect(text: str | None, environ) -> dict:
    """Raw values as ``{section: {key: (value, line)}}`` after environment overrides."""
    values = {name: {} for name in _SCHEMA}
    if text is not None:
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc.message}",
                              getattr(exc, "lineno", None)) from None
        lines = _key_lines(text)
        for section in parser.sections():
            name = section.strip().lower()
            if name not in _SCHEMA:
                raise ConfigError(f"unknown section [{section}]",
                                  key=f"[{section}]")
            for key, raw in parser.items(section):
                if key not in _SCHEMA[name]:
                    raise ConfigError(f"unknown key {key!r}", lines.get((name, key)),
                                      f"[{name}] {key}")
                values[name][key] = (raw, lines.get((name, key)))
    for env_key, raw in environ.items():
        if not env_key.startswith(ENV_PREFIX):
            continue
        rest = env_key[len(ENV_PREFIX):].lower()
        for name, keys in _SCHEMA.items():
            prefix = name + "_"
            if rest.startswith(prefix) and rest[len(prefix):] in keys:
                values[name][rest[len(prefix):]] = (raw, None)
                break
        else:
            raise ConfigError(f"unrecognized environment override {env_key}")
    return values


def load_config(path: str | None = None, environ=None) -> ExperimentConfig:
    """Read ``path`` (when given), apply ``HJENTROPY_*`` overrides from ``environ`` and
    validate. Raises ConfigError with the offending key and line."""
    environ = os.environ if environ is None else environ
    text = None
    source = "<defaults>"
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
        source = str(path)
    raw = _collect(text, environ)

    parsed = {name: {} for name in _SCHEMA}
    for name, entries in raw.items():
        for key, (value, line) in entries.items():
            try:
                parsed[name][key] = _convert(_SCHEMA[name][key], value)
            except ValueError as exc:
                raise ConfigError(f"bad value {value!r}: {exc}", line, f"[{name}] {key}") from None

    def fail(name, key, message):
        line = raw[name].get(key, (None, None))[1]
        raise ConfigError(message, line, f"[{name}] {key}")

    ham = parsed["hamiltonian"]
    name = ham.pop("name", "quadratic")
    try:
        params = ClassParams(**parsed["class"])
    except ConfigurationError as exc:
        bad = next((k for k in parsed["class"] if k in str(exc)), "dim")
        fail("class", bad, str(exc))
    try:
        make_hamiltonian(name, params.dim, **ham)
    except (ConfigurationError, TypeError) as exc:
        fail("hamiltonian", "name" if "name" in raw["hamiltonian"] else "scale", str(exc))

    grid = parsed["grid"]
    if grid.get("points", 3) < 3:
        fail("grid", "points", "need at least 3 grid points per axis")
    if grid.get("half_width", 1.0) <= 0:
        fail("grid", "half_width", "half_width must be positive")
    if grid.get("subdivisions", 1) < 1:
        fail("grid", "subdivisions", "subdivisions must be at least 1")

    run = parsed["run"]
    for key in ("members", "targets", "cells", "threads"):
        if key in run and run[key] < 1:
            fail("run", key, f"{key} must be at least 1")
    if "seed" in run and run["seed"] < 0:
        fail("run", "seed", "seed must be nonnegative")
    for key in ("times", "eps_list"):
        if key in run and any(v <= 0 for v in run[key]):
            fail("run", key, f"{key} entries must be positive")
    if run.get("preset", "hat") not in ("zero", "hat", "bump"):
        fail("run", "preset", "preset must be zero, hat or bump")

    return ExperimentConfig(
        hamiltonian_name=name,
        hamiltonian_options=ham,
        class_params=params,
        points=grid.get("points"),
        half_width=grid.get("half_width"),
        subdivisions=grid.get("subdivisions", 1),
        seed=run.get("seed", 0),
        threads=run.get("threads", 1),
        times=run.get("times"),
        eps_list=run.get("eps_list"),
        members=run.get("members"),
        preset=run.get("preset", "hat"),
        targets=run.get("targets", 5),
        cells=run.get("cells"),
        lifted=run.get("lifted", True),
        refine=run.get("refine", True),
        reach_semiconcavity=run.get("reach_semiconcavity"),
        reach_lipschitz=run.get("reach_lipschitz"),
        source=source,
    )
