"""Run configuration: validation, config-file loading, and object builders.

Config files use INI sections with key=value pairs; command-line flags
override file values, which override defaults.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import dataclass, fields, replace

import numpy as np

from .dynamics import Hamiltonian, builtin_hamiltonian
from .errors import ConfigError
from .expressions import expression_hamiltonian
from .frames import EstimationConfig, GaborSystem, default_radius
from .gaussians import GaussianState
from .symplectic import Lattice, separable_lattice

BUILTIN_HAMILTONIANS = ("harmonic", "free", "shear", "anharmonic", "driven")


@dataclass(frozen=True)
class RunConfig:
    """Merged run parameters; seed is always explicit for reproducibility."""

    seed: int = 0
    hbar: float = 1.0 / (2.0 * np.pi)
    dimension: int = 1
    alpha: tuple | None = None
    beta: tuple | None = None
    generator: tuple | None = None
    radius: float | None = None
    window_m: tuple | None = None
    window_center: tuple | None = None
    hamiltonian: str = "harmonic"
    method: str = "auto"
    steps: int | None = None
    t: float = 1.0
    grid_extent: float = 10.0
    grid_points: int = 1024
    family_size: int = 64
    frame_floor: float = 1e-3

    def validate(self) -> "RunConfig":
        if self.hbar <= 0:
            raise ConfigError("hbar", "must be positive")
        if self.dimension < 1:
            raise ConfigError("dimension", "must be >= 1")
        n = self.dimension
        for name in ("alpha", "beta"):
            vec = getattr(self, name)
            if vec is not None:
                if len(vec) not in (1, n):
                    raise ConfigError(name, f"needs 1 or {n} entries")
                if any(v <= 0 for v in vec):
                    raise ConfigError(name, "entries must be positive")
        if self.generator is not None and len(self.generator) != (2 * n) ** 2:
            raise ConfigError("generator", f"needs {(2 * n) ** 2} entries (flattened 2n x 2n)")
        if self.radius is not None and self.radius <= 0:
            raise ConfigError("radius", "must be positive")
        if self.window_m is not None:
            if len(self.window_m) not in (1, n):
                raise ConfigError("window_m", f"needs 1 or {n} diagonal entries")
            if any(complex(v).imag <= 0 for v in self.window_m):
                raise ConfigError("window_m", "imaginary parts must be positive")
        if self.window_center is not None and len(self.window_center) != 2 * n:
            raise ConfigError("window_center", f"needs {2 * n} entries")
        if self.steps is not None and self.steps < 1:
            raise ConfigError("steps", "must be >= 1")
        if not np.isfinite(self.t):
            raise ConfigError("t", "must be finite")
        if self.grid_points < 2:
            raise ConfigError("grid_points", "must be >= 2")
        if self.grid_extent <= 0:
            raise ConfigError("grid_extent", "must be positive")
        if self.family_size < 1:
            raise ConfigError("family_size", "must be >= 1")
        if self.frame_floor <= 0:
            raise ConfigError("frame_floor", "must be positive")
        return self


def _broadcast(vec, n):
    return tuple(vec) * n if len(vec) == 1 and n > 1 else tuple(vec)


def build_lattice(cfg: RunConfig) -> Lattice:
    n = cfg.dimension
    radius = cfg.radius if cfg.radius is not None else default_radius(cfg.hbar)
    if cfg.generator is not None:
        gen = np.array(cfg.generator, dtype=float).reshape(2 * n, 2 * n)
        return Lattice(gen, radius)
    alpha = _broadcast(cfg.alpha or (1.0,), n)
    beta = _broadcast(cfg.beta or (1.0,), n)
    return separable_lattice(alpha, beta, radius)


def build_window(cfg: RunConfig) -> GaussianState:
    n = cfg.dimension
    if cfg.window_m is None:
        M = 1j * np.eye(n)
    else:
        diag = _broadcast(tuple(complex(v) for v in cfg.window_m), n)
        M = np.diag(diag)
    center = np.zeros(2 * n) if cfg.window_center is None else np.array(cfg.window_center, float)
    return GaussianState(M, center, 0.0, cfg.hbar)


def build_system(cfg: RunConfig) -> GaborSystem:
    return GaborSystem(build_window(cfg), build_lattice(cfg), cfg.hbar)


def build_hamiltonian(cfg: RunConfig) -> Hamiltonian:
    name = cfg.hamiltonian.strip()
    if name in BUILTIN_HAMILTONIANS:
        return builtin_hamiltonian(name, cfg.dimension)
    return expression_hamiltonian(name, cfg.dimension)


def estimation_config(cfg: RunConfig) -> EstimationConfig:
    return EstimationConfig(
        grid_extent=cfg.grid_extent,
        grid_points=cfg.grid_points,
        family_size=cfg.family_size,
        seed=cfg.seed,
        frame_floor=cfg.frame_floor,
    )


def config_dict(cfg: RunConfig) -> dict:
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = [str(v) if isinstance(v, complex) else v for v in value]
        out[f.name] = value
    return out


def config_hash(cfg: RunConfig) -> str:
    payload = json.dumps(config_dict(cfg), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Config file (INI sections) and flag merging
# ---------------------------------------------------------------------------

_FILE_FIELDS = {
    ("system", "seed"): ("seed", int),
    ("system", "hbar"): ("hbar", float),
    ("system", "dimension"): ("dimension", int),
    ("lattice", "alpha"): ("alpha", "floats"),
    ("lattice", "beta"): ("beta", "floats"),
    ("lattice", "generator"): ("generator", "floats"),
    ("lattice", "radius"): ("radius", float),
    ("window", "m"): ("window_m", "complexes"),
    ("window", "center"): ("window_center", "floats"),
    ("hamiltonian", "expression"): ("hamiltonian", str),
    ("integrator", "method"): ("method", str),
    ("integrator", "steps"): ("steps", int),
    ("integrator", "t"): ("t", float),
    ("estimation", "grid_extent"): ("grid_extent", float),
    ("estimation", "grid_points"): ("grid_points", int),
    ("estimation", "family_size"): ("family_size", int),
    ("estimation", "frame_floor"): ("frame_floor", float),
}


def parse_float_list(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError("list", f"malformed float list {text!r}") from exc


def parse_complex_list(text: str) -> tuple:
    try:
        return tuple(complex(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError("list", f"malformed complex list {text!r}") from exc


def _convert(kind, raw: str, field: str):
    try:
        if kind == "floats":
            return parse_float_list(raw)
        if kind == "complexes":
            return parse_complex_list(raw)
        return kind(raw)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(field, f"cannot parse {raw!r}") from exc


def load_config_file(path: str) -> dict:
    """Read an INI-style config file into a RunConfig field dict."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError("config", f"cannot read config file {path!r}")
    out = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            spec = _FILE_FIELDS.get((section, key))
            if spec is None:
                raise ConfigError(f"{section}.{key}", "unknown config key")
            field, kind = spec
            out[field] = _convert(kind, raw, field)
    return out


def merge_config(file_values: dict | None, flag_values: dict) -> RunConfig:
    """defaults < config file < explicitly set flags."""
    merged = dict(file_values or {})
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    cfg = replace(RunConfig(), **merged)
    return cfg.validate()
