"""Run configuration and result files.

Config: INI sections ``[problem]``, ``[geometry]``, ``[solver]``,
``[exterior]``, ``[portrait]``, ``[output]``. Summaries are JSON with
sorted keys; tables are CSV with a fixed header and shortest round-trip
float text (``repr``), so equal runs give byte-identical files.
"""
from __future__ import annotations

import configparser
import csv
import enum
import json
import math
import os
import re
from dataclasses import asdict, dataclass, fields, is_dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .energy import energy_samples
from .ivp import IntegratorConfig, SolutionProfile
from .phase import PhaseTrajectory, StationaryPoint
from .pucci import InvalidParameters, ProblemParams

OUT_ENV = "HENON_PUCCI_OUT"
DEFAULT_OUT = "henon_pucci_out"

PROFILE_COLUMNS = ("r", "u", "uprime", "x", "z", "small_energy", "big_energy")
TRAJECTORY_COLUMNS = ("t", "x", "z", "quadrant")
STATIONARY_COLUMNS = ("name", "x", "z", "classification", "eig1_re", "eig1_im", "eig2_re", "eig2_im")
SWEEP_COLUMNS = ("delta", "rho", "class", "error")


class ConfigError(ValueError):
    """Config problem naming the section, key and (when known) the line."""


@dataclass
class RunConfig:
    operator: str = "plus"
    lam: float = 1.0
    Lam: float = 1.5
    N: int = 4
    p: float = 4.0
    a: float = 0.0
    inner: Optional[float] = None
    outer: Optional[float] = None
    R: Optional[float] = None
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    event_tol: Optional[float] = None
    r_max: Optional[float] = None
    max_steps: int = 5_000_000
    boundary_tol: float = 1e-10
    delta_rtol: float = 1e-12
    mode: str = "fast"
    delta: Optional[float] = None
    sweep_lo: float = 1e-3
    sweep_hi: float = 1e3
    sweep_n: int = 200
    workers: int = 1
    fan: int = 8
    flow_samples: int = 10_000
    seed: int = 0
    negative: bool = False
    out: Optional[str] = None

    def params(self) -> ProblemParams:
        return ProblemParams(self.lam, self.Lam, self.N, self.p, self.a, self.operator)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(rel_tol=self.rel_tol, abs_tol=self.abs_tol, r_max=self.r_max,
                                max_steps=self.max_steps, event_tol=self.event_tol)

    def validate_geometry(self, kind: str):
        """``kind`` is 'annulus', 'exterior' or 'none'."""
        if kind == "annulus":
            if self.R is not None:
                raise ConfigError("geometry: annulus and exterior radius R are mutually exclusive")
            if self.inner is None or self.outer is None:
                raise ConfigError("geometry: annulus needs inner and outer")
        elif kind == "exterior":
            if self.outer is not None:
                raise ConfigError("geometry: exterior run does not take an outer radius")
            if self.R is None:
                self.R = self.inner if self.inner is not None else 1.0

    def to_dict(self) -> dict:
        return asdict(self)


# key in file -> (section, attribute, type)
_KEYS = {
    ("problem", "operator"): ("operator", str),
    ("problem", "lambda"): ("lam", float),
    ("problem", "Lambda"): ("Lam", float),
    ("problem", "N"): ("N", int),
    ("problem", "p"): ("p", float),
    ("problem", "a"): ("a", float),
    ("geometry", "inner"): ("inner", float),
    ("geometry", "outer"): ("outer", float),
    ("geometry", "R"): ("R", float),
    ("solver", "rel_tol"): ("rel_tol", float),
    ("solver", "abs_tol"): ("abs_tol", float),
    ("solver", "event_tol"): ("event_tol", float),
    ("solver", "r_max"): ("r_max", float),
    ("solver", "max_steps"): ("max_steps", int),
    ("solver", "boundary_tol"): ("boundary_tol", float),
    ("solver", "delta_rtol"): ("delta_rtol", float),
    ("solver", "seed"): ("seed", int),
    ("solver", "negative"): ("negative", bool),
    ("exterior", "mode"): ("mode", str),
    ("exterior", "delta"): ("delta", float),
    ("exterior", "sweep_lo"): ("sweep_lo", float),
    ("exterior", "sweep_hi"): ("sweep_hi", float),
    ("exterior", "sweep_n"): ("sweep_n", int),
    ("exterior", "workers"): ("workers", int),
    ("portrait", "fan"): ("fan", int),
    ("portrait", "flow_samples"): ("flow_samples", int),
    ("output", "dir"): ("out", str),
}


def _line_of(text: str, section: str, key: Optional[str] = None) -> Optional[int]:
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
        elif key is not None and cur == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


def _convert(raw: str, typ):
    if typ is bool:
        v = raw.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if typ is int:
        f = float(raw)
        if not f.is_integer():
            raise ValueError(f"not an integer: {raw!r}")
        return int(f)
    return typ(raw.strip())


def parse_config(text: str, base: Optional[RunConfig] = None, source: str = "<config>") -> RunConfig:
    """Parse INI text into a ``RunConfig``.

    Unknown sections or keys are errors; ``;`` and ``#`` start inline comments.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = base or RunConfig()
    known_sections = {s for s, _ in _KEYS}
    for section in cp.sections():
        if section not in known_sections:
            raise ConfigError(f"{source}:{_line_of(text, section) or '?'}: unknown section [{section}]")
        for key, raw in cp.items(section):
            where = f"{source}:{_line_of(text, section, key) or '?'}: [{section}] {key}"
            if (section, key) not in _KEYS:
                raise ConfigError(f"{where}: unknown key")
            attr, typ = _KEYS[(section, key)]
            try:
                setattr(cfg, attr, _convert(raw, typ))
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from None
    return cfg


def load_config(path, base: Optional[RunConfig] = None) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base, str(path))


def dump_config(cfg: RunConfig) -> str:
    """INI text that parses back to ``cfg`` (``None`` fields are omitted)."""
    sections: dict = {}
    for (section, key), (attr, _) in _KEYS.items():
        v = getattr(cfg, attr)
        if v is None:
            continue
        sections.setdefault(section, []).append(f"{key} = {fmt_value(v)}")
    return "".join(f"[{s}]\n" + "\n".join(lines) + "\n\n" for s, lines in sections.items())


def check_params(cfg: RunConfig) -> ProblemParams:
    try:
        return cfg.params()
    except InvalidParameters as exc:
        raise ConfigError(f"[problem]: {exc}") from None


def output_dir(arg: Optional[str] = None) -> Path:
    """``arg``, else ``$HENON_PUCCI_OUT``, else ``./henon_pucci_out``; created if missing."""
    d = Path(arg or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    d.mkdir(parents=True, exist_ok=True)
    return d


# ---------------------------------------------------------------- serialization


def fmt_float(v: float) -> str:
    """Shortest round-trip text; ``nan``, ``inf``, ``-inf`` for non-finite values."""
    return repr(float(v))


def fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def jsonable(obj):
    """Plain JSON tree: enums by value, non-finite floats as strings, tuples as lists."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else fmt_float(f)
    if isinstance(obj, complex):
        return [jsonable(obj.real), jsonable(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if is_dataclass(obj) and hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if is_dataclass(obj):
        return {f.name: jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_value(v) for v in row])
    return path


def read_csv(path):
    """``(header, rows)`` with every cell as text."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------- tables


def profile_rows(profile: SolutionProfile):
    """Rows of ``PROFILE_COLUMNS``; ``x`` is ``nan`` where ``u = 0``."""
    params = profile.params
    es = energy_samples(profile)
    rows = []
    for (r, u, up), e in zip(profile.samples, es):
        if u != 0:
            x = -r * up / u
            z = r ** (2.0 + params.a) * abs(u) ** (params.p - 1.0)
        else:
            x, z = math.nan, 0.0
        rows.append((r, u, up, x, z, e.small_energy, e.big_energy))
    return rows


def trajectory_rows(traj: PhaseTrajectory):
    return [(t, x, z, q) for t, x, z, q in zip(traj.t.tolist(), traj.x.tolist(), traj.z.tolist(),
                                                traj.quadrants)]


def stationary_rows(points):
    rows = []
    for sp in points:
        e1, e2 = (complex(e) for e in sp.eigenvalues)
        rows.append((sp.name, sp.location[0], sp.location[1], sp.classification.value,
                     e1.real, e1.imag, e2.real, e2.imag))
    return rows


def stationary_dict(sp: StationaryPoint) -> dict:
    return {"name": sp.name, "location": sp.location, "classification": sp.classification,
            "eigenvalues": [complex(e) for e in sp.eigenvalues], "directions": sp.directions}
