"""Run configuration: per-subcommand key=value settings.

Config files are INI-style with one section per subcommand plus an
optional ``[run]`` section (seed, format, workers).  Values given on the
command line as ``key=value`` override the file.  Grids accept

    1.05,1.1,1.2        explicit list
    0.5:1.5:0.01        start:stop:step, stop included
    lin:0:1:11          linearly spaced, n points
    log:1e-4:1e-1:8     logarithmically spaced, n points
"""

from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

WORKERS_ENV = "SPINFLIP_WORKERS"


class ConfigError(ValueError):
    pass


def parse_grid(text: str, ascending: bool = True) -> list[float]:
    text = str(text).strip()
    if not text:
        return []
    parts = text.split(":")
    try:
        if parts[0] in ("lin", "log"):
            if len(parts) != 4:
                raise ConfigError(f"grid {text!r}: expected {parts[0]}:start:stop:n")
            a, b, n = float(parts[1]), float(parts[2]), int(parts[3])
            if n < 1:
                raise ConfigError(f"grid {text!r}: need at least one point")
            if parts[0] == "lin":
                values = np.linspace(a, b, n)
            else:
                if a <= 0 or b <= 0:
                    raise ConfigError(f"grid {text!r}: log grid needs positive bounds")
                values = np.logspace(np.log10(a), np.log10(b), n)
        elif len(parts) == 3:
            a, b, step = (float(x) for x in parts)
            if step <= 0 or b < a:
                raise ConfigError(f"grid {text!r}: need start <= stop and step > 0")
            n = int(np.floor((b - a) / step + 1e-9)) + 1
            values = np.round(a + step * np.arange(n), 12)
        elif len(parts) == 1:
            values = np.array([float(x) for x in text.split(",") if x.strip()])
        else:
            raise ConfigError(f"cannot parse grid {text!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"cannot parse grid {text!r}: {exc}") from exc
    values = [float(v) for v in values]
    if ascending and any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"grid {text!r} must be strictly ascending")
    return values


def parse_param_sets(text: str) -> list[tuple[float, float, float, float]]:
    """'j,k,eps; j,k1,k2,eps; ...' -> list of (j, k1, k2, eps)."""
    sets = []
    for chunk in str(text).split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            vals = [float(x) for x in chunk.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad parameter set {chunk!r}") from exc
        if len(vals) == 3:
            j, k, e = vals
            sets.append((j, k, k, e))
        elif len(vals) == 4:
            sets.append(tuple(vals))
        else:
            raise ConfigError(f"parameter set {chunk!r} needs j,k,eps or j,k1,k2,eps")
    return sets


def parse_bool(text) -> bool:
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _optional(parser):
    def parse(text):
        return None if str(text).strip().lower() in ("", "none", "auto") else parser(text)

    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: str
    help: str = ""


SCHEMAS: dict[str, dict[str, Key]] = {
    "fidelity": {
        "params": Key(parse_param_sets, "5,1.0,1.2", "parameter sets j,k,eps or j,k1,k2,eps separated by ';'"),
        "points": Key(int, "2000", "time samples per set"),
        "tau_max": Key(float, "3.0", "window length in units of t_cl"),
        "t_max": Key(_optional(float), "auto", "fixed window length; auto uses tau_max * t_cl"),
        "threshold": Key(float, "0.1", "minimum fidelity of the first peak"),
    },
    "levels": {
        "j": Key(float, "5"),
        "k1": Key(float, "1.0"),
        "k2": Key(float, "1.0"),
        "eps": Key(parse_grid, "0.5:1.5:0.01", "coupling grid"),
        "threshold": Key(float, "0.1"),
        "spectrum": Key(parse_bool, "false", "dump the full spectrum per row"),
    },
    "stability": {
        "k1": Key(parse_grid, "1.0"),
        "k2": Key(parse_grid, "1.0"),
        "eps": Key(parse_grid, "0:2:0.05"),
        "equilibrium": Key(int, "0", "0 for |+x,-x>, 1 for |-x,+x>"),
    },
    "ensemble": {
        "k1": Key(float, "1.0"),
        "k2": Key(float, "1.0"),
        "eps": Key(parse_grid, "1.05,1.1,1.2"),
        "delta": Key(parse_grid, "log:1e-4:1e-1:8"),
        "count": Key(int, "500"),
        "tol": Key(float, "1e-10"),
    },
    "cherry": {
        "M": Key(int, "10"),
        "Delta": Key(float, "0.02"),
        "mu": Key(parse_grid, "0:0.06:0.005"),
        "fit_M": Key(int, "200", "cluster size used for the localization fit"),
    },
    "sweep": {
        "j": Key(float, "5"),
        "k1": Key(parse_grid, "1.0"),
        "k2": Key(parse_grid, "1.0"),
        "eps": Key(parse_grid, "0.5:1.5:0.1"),
        "quantum": Key(parse_bool, "false", "also compute t_dyn and t_trans"),
        "threshold": Key(float, "0.1"),
    },
}

RUN_KEYS = {"seed", "format", "workers", "out", "timing"}


@dataclass
class RunConfig:
    command: str
    raw: dict[str, str]
    values: dict[str, Any]
    seed: int = 0
    fmt: str = "csv"
    workers: int = 1
    out: str | None = None
    timing: bool = False

    def provenance(self) -> dict[str, Any]:
        """Everything that determines the numbers (worker count excluded)."""
        return {"command": self.command, "settings": dict(sorted(self.raw.items())), "seed": self.seed}

    def digest(self) -> str:
        blob = json.dumps(self.provenance(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer") from exc
        if n < 1:
            raise ConfigError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def read_config_text(text: str, command: str) -> tuple[dict[str, str], dict[str, str]]:
    """Settings for ``command`` and the [run] section from INI text or a result file."""
    stripped = text.lstrip()
    if stripped.startswith("{") or any(line.startswith("# config: {") for line in text.splitlines()):
        from .table import ResultTable

        meta = ResultTable.loads(text).metadata
        prov = meta.get("config", {})
        if prov.get("command") != command:
            raise ConfigError(f"result file was produced by {prov.get('command')!r}, not {command!r}")
        return dict(prov.get("settings", {})), {"seed": str(prov.get("seed", 0))}
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    section = dict(parser[command]) if parser.has_section(command) else {}
    run = dict(parser["run"]) if parser.has_section("run") else {}
    return section, run


def resolve(
    command: str,
    file_text: str | None = None,
    overrides: list[str] | None = None,
    seed: int | None = None,
    fmt: str | None = None,
    workers: int | None = None,
    out: str | None = None,
) -> RunConfig:
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    schema = SCHEMAS[command]
    section, run = read_config_text(file_text, command) if file_text else ({}, {})
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        key = key.strip()
        if key in RUN_KEYS:
            run[key] = value.strip()
        else:
            section[key] = value.strip()
    unknown = set(section) - set(schema)
    if unknown:
        raise ConfigError(f"unknown keys for {command}: {', '.join(sorted(unknown))}")
    raw = {k: section.get(k, key.default) for k, key in schema.items()}
    values = {}
    for k, key in schema.items():
        try:
            values[k] = key.parse(raw[k])
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {k}: {raw[k]!r}") from exc
    try:
        seed_v = int(seed if seed is not None else run.get("seed", 0))
        workers_v = int(workers if workers is not None else run.get("workers", default_workers()))
        timing = parse_bool(run.get("timing", "false"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not 0 <= seed_v < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if workers_v < 1:
        raise ConfigError("workers must be >= 1")
    fmt_v = fmt or run.get("format", "csv")
    if fmt_v not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt_v!r}")
    return RunConfig(command, raw, values, seed_v, fmt_v, workers_v, out or run.get("out"), timing)
