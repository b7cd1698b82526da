"""TOML scenario and sweep files.

A scenario file::

    [swarm]
    n = 6
    mem_budget = "high"          # "high" = 512 MiB, "low" = 256 MiB, bytes, or a per-UAV list
    compute_rate = 9.5e9         # FLOPS
    compute_window = 1.0         # seconds; compute budget = rate * window
    positions = [[0, 0, 50], [30, 0, 50]]   # optional, else the group-mobility fields below
    leader_start = [0, 0, 50]
    leader_end = [100, 100, 50]
    leader_speed = 5.0
    member_offset_radius = 50.0
    member_deviation_sigma = 0.0

    [radio]                      # any RadioParams field
    [model]
    name = "lenet"               # or path = "my_profile.csv"; head = 4 keeps the first 4 layers
    [requests]
    origins = [1, 1, 2]          # 1-based UAV index per request, in arrival order
    [mobility]
    horizon = 1
    step_duration = 1.0
    seed = 0
    [solver]
    time_limit = 60.0
    interference_mode = "all_others"
    backend = "highs"

Relative paths resolve against the scenario file's directory.  Unknown keys
are rejected with the line they appear on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import tomli

from .channel import INTERFERENCE_MODES, RadioParams, rate_series
from .cnn_profile import BUILTINS, CnnProfile, load_profile
from .errors import ParseError
from .ilp_core import SOLVER_BACKENDS, Scenario, make_scenario
from .mobility import RpgParams, Trajectory, predict

MIB = 2 ** 20
MEMORY_LEVELS = {"high": 512 * MIB, "low": 256 * MIB}

SECTIONS = {
    "swarm": {"n", "mem_budget", "compute_rate", "compute_window", "positions", "leader_start",
              "leader_end", "leader_speed", "member_offset_radius", "member_deviation_sigma"},
    "radio": {f.name for f in fields(RadioParams)},
    "model": {"name", "path", "head"},
    "requests": {"origins"},
    "mobility": {"horizon", "step_duration", "seed"},
    "solver": {"time_limit", "interference_mode", "backend"},
}


def _line_of(text: str, section: str | None, key: str | None = None) -> int | None:
    """Best-effort 1-based line of ``[section]`` or of ``key`` inside it."""
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[\s*([^\]]+?)\s*\]", line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return n
    return None


def parse_toml(text: str) -> dict:
    try:
        return tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ParseError(str(exc).split(" (at line")[0], line=line) from None


def check_keys(data: dict, allowed: dict, text: str) -> None:
    for section, body in data.items():
        if section not in allowed:
            raise ParseError(f"unknown section [{section}]", line=_line_of(text, section))
        if not isinstance(body, dict):
            raise ParseError(f"[{section}] must be a table", line=_line_of(text, None, section))
        for key in body:
            if key not in allowed[section]:
                raise ParseError(f"unknown key '{key}' in [{section}]", line=_line_of(text, section, key))


def memory_value(value, n: int | None = None):
    """Bytes from a level keyword, a number, or a per-UAV list."""
    if isinstance(value, str):
        if value not in MEMORY_LEVELS:
            raise ValueError(f"memory level must be one of {sorted(MEMORY_LEVELS)} or bytes")
        return float(MEMORY_LEVELS[value])
    if isinstance(value, list):
        if n is not None and len(value) != n:
            raise ValueError(f"mem_budget list has {len(value)} entries for {n} UAVs")
        return np.array([memory_value(v) for v in value], dtype=float)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError("mem_budget must be a keyword, a number or a list")
    return float(value)


@dataclass
class ScenarioFile:
    """Parsed scenario file; :meth:`scenario` turns it into a :class:`Scenario`."""

    n: int
    mem_budget: object
    compute_rate: float
    compute_window: float
    origins: tuple[int, ...]                 # 0-based
    profile: CnnProfile
    radio: RadioParams
    positions: np.ndarray | None
    rpg: RpgParams
    horizon: int
    time_limit: float
    interference_mode: str
    backend: str
    source: Path | None = None

    def trajectory(self) -> Trajectory:
        if self.positions is not None:
            return Trajectory(np.repeat(self.positions[None], self.horizon, axis=0))
        return predict(self.n, self.rpg, self.horizon)

    def scenario(self) -> Scenario:
        rates = rate_series(self.trajectory(), self.radio, self.interference_mode)
        return make_scenario(self.profile, rates, self.origins, self.mem_budget,
                             self.compute_rate, self.compute_window)


def _get(body, key, default, kind, text, section):
    if key not in body:
        return default
    value = body[key]
    try:
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError
            return value
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValueError
            return float(value)
        if kind is str:
            if not isinstance(value, str):
                raise ValueError
            return value
        if kind == "point":
            if not (isinstance(value, list) and len(value) == 3):
                raise ValueError
            return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ParseError(f"bad value for '{key}' in [{section}]", line=_line_of(text, section, key)) from None
    return value


def parse_scenario(text: str, base_dir: Path | None = None, source: Path | None = None) -> ScenarioFile:
    data = parse_toml(text)
    check_keys(data, SECTIONS, text)
    base_dir = base_dir or Path(".")

    def fail(section, key, message):
        raise ParseError(message, line=_line_of(text, section, key) if key else _line_of(text, section))

    swarm = data.get("swarm", {})
    if "n" not in swarm:
        fail("swarm", None, "[swarm] needs 'n'")
    n = _get(swarm, "n", None, int, text, "swarm")
    if n < 1:
        fail("swarm", "n", "n must be >= 1")
    try:
        mem = memory_value(swarm.get("mem_budget", "high"), n)
    except ValueError as exc:
        fail("swarm", "mem_budget", str(exc))
    compute_rate = _get(swarm, "compute_rate", 9.5e9, float, text, "swarm")
    compute_window = _get(swarm, "compute_window", 1.0, float, text, "swarm")

    positions = None
    if "positions" in swarm:
        try:
            positions = np.array(swarm["positions"], dtype=float)
        except (TypeError, ValueError):
            fail("swarm", "positions", "positions must be a list of [x, y, h] triples")
        if positions.shape != (n, 3):
            fail("swarm", "positions", f"positions must be {n} triples [x, y, h]")

    mob = data.get("mobility", {})
    horizon = _get(mob, "horizon", 1, int, text, "mobility")
    if horizon < 1:
        fail("mobility", "horizon", "horizon must be >= 1")
    try:
        rpg = RpgParams(
            leader_start=_get(swarm, "leader_start", (0.0, 0.0, 50.0), "point", text, "swarm"),
            leader_end=_get(swarm, "leader_end", (100.0, 100.0, 50.0), "point", text, "swarm"),
            leader_speed=_get(swarm, "leader_speed", 5.0, float, text, "swarm"),
            step_duration=_get(mob, "step_duration", 1.0, float, text, "mobility"),
            member_offset_radius=_get(swarm, "member_offset_radius", 50.0, float, text, "swarm"),
            member_deviation_sigma=_get(swarm, "member_deviation_sigma", 0.0, float, text, "swarm"),
            rng_seed=_get(mob, "seed", 0, int, text, "mobility"),
        )
    except ValueError as exc:
        fail("swarm", None, str(exc))

    try:
        radio = RadioParams(**{k: float(v) for k, v in data.get("radio", {}).items()})
    except (TypeError, ValueError) as exc:
        fail("radio", None, f"bad [radio]: {exc}")

    model = data.get("model", {"name": "lenet"})
    if ("name" in model) == ("path" in model):
        fail("model", None, "[model] needs exactly one of 'name' or 'path'")
    if "name" in model:
        name = _get(model, "name", None, str, text, "model")
        if name not in BUILTINS:
            fail("model", "name", f"unknown model '{name}'; builtins are {sorted(BUILTINS)}")
        profile = BUILTINS[name]()
    else:
        path = Path(_get(model, "path", None, str, text, "model"))
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            fail("model", "path", f"profile file not found: {path}")
        profile = load_profile(path)
    if "head" in model:
        head = _get(model, "head", None, int, text, "model")
        if not 1 <= head <= profile.M:
            fail("model", "head", f"head must be in 1..{profile.M}")
        profile = profile.head(head)

    req = data.get("requests", {})
    if "origins" not in req:
        fail("requests", None, "[requests] needs 'origins'")
    origins = req["origins"]
    if (not isinstance(origins, list) or not origins
            or any(isinstance(o, bool) or not isinstance(o, int) or not 1 <= o <= n for o in origins)):
        fail("requests", "origins", f"origins must be a non-empty list of UAV indices in 1..{n}")

    solver = data.get("solver", {})
    interference = _get(solver, "interference_mode", "all_others", str, text, "solver")
    if interference not in INTERFERENCE_MODES:
        fail("solver", "interference_mode", f"interference_mode must be one of {INTERFERENCE_MODES}")
    backend = _get(solver, "backend", "highs", str, text, "solver")
    if backend not in SOLVER_BACKENDS:
        fail("solver", "backend", f"backend must be one of {SOLVER_BACKENDS}")
    time_limit = _get(solver, "time_limit", 60.0, float, text, "solver")
    if time_limit <= 0:
        fail("solver", "time_limit", "time_limit must be positive")

    return ScenarioFile(n, mem, compute_rate, compute_window, tuple(o - 1 for o in origins), profile,
                        radio, positions, rpg, horizon, time_limit, interference, backend, source)


def load_scenario(path) -> ScenarioFile:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), path.parent, path)


def parse_sweep(text: str, base_dir: Path | None = None):
    """Sweep file: a [sweep] table of SweepSpec fields and an optional [radio] table."""
    from .experiments import SweepSpec

    data = parse_toml(text)
    allowed = {"sweep": {f.name for f in fields(SweepSpec)} - {"radio"},
               "radio": SECTIONS["radio"]}
    check_keys(data, allowed, text)
    body = dict(data.get("sweep", {}))
    if "mem_levels" in body:
        try:
            body["mem_levels"] = tuple(int(memory_value(v)) for v in body["mem_levels"])
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), line=_line_of(text, "sweep", "mem_levels")) from None
    if "model" in body and body["model"] not in BUILTINS and base_dir is not None:
        path = Path(body["model"])
        body["model"] = str(path if path.is_absolute() else base_dir / path)
    if "radio" in data:
        body["radio"] = data["radio"]
    try:
        return SweepSpec.from_dict(body)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad [sweep]: {exc}", line=_line_of(text, "sweep")) from None


def load_sweep(path):
    path = Path(path)
    return parse_sweep(path.read_text(encoding="utf-8"), path.parent)
