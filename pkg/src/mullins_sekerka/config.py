"""Run configuration: dataclasses, TOML parsing with full error collection,
serialization and the initial-profile presets.

Grammar (TOML; every table and key is optional)::

    seed = 12345

    [grid]
    L = 25.132741228718345      # half-length of the periodized interval
    n = 256                     # power of two, 16 <= n <= 4096

    [initial]
    preset = "gaussian"         # gaussian | cosine_packet | file | zero
    amplitude = 0.1
    wavenumber = 1.0            # cosine_packet only
    path = ""                   # file only: CSV with columns x,f on the grid nodes

    [stepping]
    dt = 0.001
    t_end = 0.1
    snapshot_every = 10

    [tolerances]
    solver_tol = 1e-10
    tail_threshold = 1e-10

    [output]
    directory = "output"
    formats = ["csv", "json"]
"""
from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import asdict, dataclass, field, fields

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigurationError, InvalidData
from .grid import Grid, GridFunction, is_admissible

PRESETS = ("gaussian", "cosine_packet", "file", "zero")
FORMATS = ("csv", "json")
MAX_N = 4096
DEFAULT_SEED = 12345

# cosine packets: flat on |x| <= WINDOW_FLAT * L, zero beyond WINDOW_EDGE * L
WINDOW_FLAT = 0.3
WINDOW_EDGE = 0.8


@dataclass(frozen=True)
class GridConfig:
    L: float = 8 * math.pi
    n: int = 256


@dataclass(frozen=True)
class InitialConfig:
    preset: str = "gaussian"
    amplitude: float = 0.1
    wavenumber: float = 1.0
    path: str = ""


@dataclass(frozen=True)
class SteppingConfig:
    dt: float = 1e-3
    t_end: float = 0.1
    snapshot_every: int = 10


@dataclass(frozen=True)
class ToleranceConfig:
    solver_tol: float = 1e-10
    tail_threshold: float = 1e-10


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "output"
    formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class SimulationConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    stepping: SteppingConfig = field(default_factory=SteppingConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    seed: int = DEFAULT_SEED

    def make_grid(self) -> Grid:
        return Grid(self.grid.L, self.grid.n)

    def with_overrides(self, **sections) -> "SimulationConfig":
        """``cfg.with_overrides(stepping={"dt": 1e-4})``; result is revalidated."""
        data = config_to_dict(self)
        for name, values in sections.items():
            if isinstance(values, dict):
                data[name].update(values)
            else:
                data[name] = values
        return config_from_dict(data)


_SECTIONS = {
    "grid": GridConfig,
    "initial": InitialConfig,
    "stepping": SteppingConfig,
    "tolerances": ToleranceConfig,
    "output": OutputConfig,
}


class ConfigParseError(ConfigurationError):
    """TOML syntax error with 1-based ``line`` and ``column``."""

    def __init__(self, message: str, line: int | None, column: int | None):
        where = f"line {line}, column {column}" if line is not None else "unknown position"
        super().__init__([f"syntax error at {where}: {message}"])
        self.line = line
        self.column = column


# -- validation ---------------------------------------------------------------

def _is_real(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _positive(errors, name, v):
    if not _is_real(v) or v <= 0:
        errors.append(f"{name}: must be a finite real > 0, got {v!r}")


def _validate(cfg: SimulationConfig, errors: list) -> None:
    g, ini, st, tol, out = cfg.grid, cfg.initial, cfg.stepping, cfg.tolerances, cfg.output
    _positive(errors, "grid.L", g.L)
    if not _is_int(g.n) or g.n < 16 or g.n > MAX_N or g.n & (g.n - 1):
        errors.append(f"grid.n: must be a power of two in [16, {MAX_N}], got {g.n!r}")
    if ini.preset not in PRESETS:
        errors.append(f"initial.preset: must be one of {', '.join(PRESETS)}, got {ini.preset!r}")
    if not _is_real(ini.amplitude):
        errors.append(f"initial.amplitude: must be a finite real, got {ini.amplitude!r}")
    if ini.preset == "cosine_packet":
        _positive(errors, "initial.wavenumber", ini.wavenumber)
    elif not _is_real(ini.wavenumber):
        errors.append(f"initial.wavenumber: must be a finite real, got {ini.wavenumber!r}")
    if not isinstance(ini.path, str):
        errors.append(f"initial.path: must be a string, got {ini.path!r}")
    elif ini.preset == "file":
        if not ini.path:
            errors.append("initial.path: required for the file preset")
        elif not (os.path.isfile(ini.path) and os.access(ini.path, os.R_OK)):
            errors.append(f"initial.path: no readable file at {ini.path!r}")
    _positive(errors, "stepping.dt", st.dt)
    _positive(errors, "stepping.t_end", st.t_end)
    if not _is_int(st.snapshot_every) or st.snapshot_every < 1:
        errors.append(f"stepping.snapshot_every: must be an integer >= 1, got {st.snapshot_every!r}")
    _positive(errors, "tolerances.solver_tol", tol.solver_tol)
    _positive(errors, "tolerances.tail_threshold", tol.tail_threshold)
    if not isinstance(out.directory, str) or not out.directory:
        errors.append(f"output.directory: must be a non-empty string, got {out.directory!r}")
    if not isinstance(out.formats, tuple) or any(f not in FORMATS for f in out.formats):
        errors.append(f"output.formats: must be a subset of {list(FORMATS)}, got {list(out.formats)!r}")
    if not _is_int(cfg.seed) or cfg.seed < 0:
        errors.append(f"seed: must be a nonnegative integer, got {cfg.seed!r}")


def config_from_dict(data: dict) -> SimulationConfig:
    """Build and validate a config; every problem is collected before raising."""
    errors: list[str] = []
    sections = {}
    for key in data:
        if key not in _SECTIONS and key != "seed":
            errors.append(f"{key}: unknown key")
    for name, cls in _SECTIONS.items():
        raw = data.get(name, {})
        if not isinstance(raw, dict):
            errors.append(f"{name}: expected a table")
            raw = {}
        known = {f.name for f in fields(cls)}
        for key in raw:
            if key not in known:
                errors.append(f"{name}.{key}: unknown key")
        kwargs = {k: v for k, v in raw.items() if k in known}
        if name == "output" and "formats" in kwargs:
            fm = kwargs["formats"]
            kwargs["formats"] = tuple(fm) if isinstance(fm, (list, tuple)) else fm
        # ints are accepted where reals are expected
        for f in fields(cls):
            if f.type == "float" and _is_int(kwargs.get(f.name)):
                kwargs[f.name] = float(kwargs[f.name])
        sections[name] = cls(**kwargs)
    cfg = SimulationConfig(**sections, seed=data.get("seed", DEFAULT_SEED))
    _validate(cfg, errors)
    if errors:
        raise ConfigurationError(errors)
    return cfg


def config_to_dict(cfg: SimulationConfig) -> dict:
    d = asdict(cfg)
    d["output"]["formats"] = list(cfg.output.formats)
    return d


_POS = re.compile(r"\(at line (\d+), column (\d+)\)")


def parse_config(text: str) -> SimulationConfig:
    """Parse TOML text into a validated :class:`SimulationConfig`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        msg = getattr(exc, "msg", str(exc))
        m = _POS.search(str(exc))
        if line is None and m:
            line, col = int(m.group(1)), int(m.group(2))
        raise ConfigParseError(_POS.sub("", msg).strip(), line, col) from exc
    return config_from_dict(data)


def load_config(path: str) -> SimulationConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {v!r}")


def serialize_config(cfg: SimulationConfig) -> str:
    """TOML text that parses back to an equal config (floats via ``repr``)."""
    d = config_to_dict(cfg)
    lines = [f"seed = {d.pop('seed')}"]
    for name in _SECTIONS:
        lines.append("")
        lines.append(f"[{name}]")
        for key, v in d[name].items():
            lines.append(f"{key} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


# -- initial data -------------------------------------------------------------

def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def window(x: np.ndarray, L: float, flat: float = WINDOW_FLAT, edge: float = WINDOW_EDGE) -> np.ndarray:
    """Smooth bump: 1 on ``|x| <= flat L``, 0 on ``|x| >= edge L``."""
    return 1.0 - smooth_step((np.abs(x) - flat * L) / ((edge - flat) * L))


def read_profile_csv(path: str, grid: Grid) -> GridFunction:
    """Read a two-column ``x,f`` CSV whose ``x`` column matches the grid nodes."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if rows and not _numeric(rows[0][0]):
        rows = rows[1:]
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise InvalidData(f"{path}: expected two numeric columns x,f ({exc})") from exc
    if data.shape != (grid.n, 2):
        raise InvalidData(f"{path}: expected {grid.n} rows, found {len(rows)}")
    if np.max(np.abs(data[:, 0] - grid.nodes)) > 1e-9 * grid.L:
        raise InvalidData(f"{path}: x column does not match the grid nodes")
    return GridFunction(grid, data[:, 1])


def _numeric(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def initial_profile(cfg: SimulationConfig, grid: Grid | None = None) -> GridFunction:
    """Sample the configured preset; rejects profiles that do not decay at the ends."""
    grid = grid or cfg.make_grid()
    ini = cfg.initial
    x = np.asarray(grid.nodes)
    if ini.preset == "zero":
        return grid.zeros()
    if ini.preset == "gaussian":
        f = GridFunction(grid, ini.amplitude * np.exp(-x * x))
    elif ini.preset == "cosine_packet":
        f = GridFunction(grid, ini.amplitude * np.cos(ini.wavenumber * x) * window(x, grid.L))
    else:
        f = read_profile_csv(ini.path, grid)
    if not is_admissible(f, cfg.tolerances.tail_threshold):
        raise InvalidData(
            f"initial profile not decayed: tail exceeds {cfg.tolerances.tail_threshold:g} * max|f| "
            "in the outer 10% of the domain; enlarge grid.L")
    return f


__all__ = [
    "SimulationConfig", "GridConfig", "InitialConfig", "SteppingConfig", "ToleranceConfig",
    "OutputConfig", "ConfigParseError", "parse_config", "load_config", "serialize_config",
    "config_from_dict", "config_to_dict", "initial_profile", "window", "smooth_step",
    "read_profile_csv", "PRESETS", "DEFAULT_SEED",
]
