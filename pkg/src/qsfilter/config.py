"""Declarative scenario configuration.

A scenario is a YAML mapping (or CLI flags overriding it) with operator
specs given either as Pauli coefficient triples, ``{pauli: [lx, ly, lz]}``,
or explicit row-major complex matrices, ``{matrix: [[[re, im], ...], ...]}``.
Every referenced parameter is validated against the target module's
preconditions before any computation starts.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .statespace import pauli

SCENARIO_KINDS = ("diffusive", "jump", "qubit-counting", "qubit-diffusive",
                  "closed-form", "cat", "bell", "spectra", "ito-check")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def parse_vec3(value, name: str) -> list[float]:
    if isinstance(value, str):
        value = [p for p in value.replace(";", ",").split(",") if p != ""]
    try:
        vec = [float(x) for x in value]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: expected three numbers, got {value!r}") from exc
    if len(vec) != 3:
        raise ConfigError(f"{name}: expected three numbers, got {len(vec)}")
    return vec


def parse_complex_entry(entry, name: str) -> complex:
    if isinstance(entry, (int, float)):
        return complex(entry)
    if isinstance(entry, (list, tuple)) and len(entry) == 2:
        return complex(float(entry[0]), float(entry[1]))
    if isinstance(entry, str):
        try:
            return complex(entry.replace(" ", "").replace("i", "j"))
        except ValueError as exc:
            raise ConfigError(f"{name}: cannot parse complex {entry!r}") from exc
    raise ConfigError(f"{name}: complex entries are numbers, [re, im] pairs or strings")


def parse_operator(spec, name: str) -> np.ndarray:
    """Operator spec: {pauli: [x,y,z]} or {matrix: rows of complex entries}."""
    if spec is None:
        raise ConfigError(f"{name}: missing operator spec")
    if isinstance(spec, dict) and "pauli" in spec:
        return pauli(parse_vec3(spec["pauli"], f"{name}.pauli"))
    if isinstance(spec, dict) and "matrix" in spec:
        rows = spec["matrix"]
        mat = np.array([[parse_complex_entry(e, name) for e in row] for row in rows])
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] not in (2, 4):
            raise ConfigError(f"{name}: matrix must be square of dim 2 or 4")
        return mat
    if isinstance(spec, (list, tuple)) and len(spec) == 3 and all(
            isinstance(x, (int, float)) for x in spec):
        return pauli([float(x) for x in spec])
    raise ConfigError(f"{name}: expected {{pauli: [...]}} or {{matrix: [...]}}")


@dataclass
class ScenarioConfig:
    """Declarative description of one run: model, grid, ensemble, outputs."""

    kind: str
    T: float = 1.0
    dt: float = 1e-3
    n_traj: int = 1000
    seed: int = 0
    workers: int = 1
    scheme: str = "euler"
    out_dir: str = "out"
    save_paths: int = 3
    nu: float | None = None
    l: list | None = None
    k: list | None = None
    h: list | None = None
    r0: list | None = None
    psi0: list | None = None
    H: object = None
    L: object = None
    C: object = None
    E: object = None
    embed: bool = False
    posterior: bool = False
    eps: list = field(default_factory=lambda: [0.0, 1.0, 2.0])
    x_min: float = 1e-2
    x_max: float = 50.0
    x_points: int = 200
    n_directions: int = 100
    lambda_probe: float = 0.1
    g: list | None = None
    w_value: float | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}; "
                              f"expected one of {', '.join(SCENARIO_KINDS)}")
        if self.T <= 0 or self.dt <= 0:
            raise ConfigError("T and dt must be positive")
        if self.n_traj < 1:
            raise ConfigError("n_traj must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.scheme not in ("euler", "exponential"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.k is not None and self.h is not None:
            raise ConfigError("give either h or k, never both")
        for name in ("l", "k", "h", "r0"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, parse_vec3(v, name))

    def resolved_k(self, hbar: float = 1.0) -> list[float] | None:
        if self.k is not None:
            return self.k
        if self.h is not None:
            return [2.0 * x / hbar for x in self.h]
        return None

    def state_vector(self, dim: int = 2) -> np.ndarray:
        if self.psi0 is None:
            psi = np.ones(dim, dtype=complex)
        else:
            psi = np.array([parse_complex_entry(e, "psi0") for e in self.psi0])
        if psi.shape != (dim,):
            raise ConfigError(f"psi0 must have {dim} entries")
        n = np.linalg.norm(psi)
        if n == 0:
            raise ConfigError("psi0 must be nonzero")
        return psi / n

    def to_dict(self) -> dict:
        return asdict(self)


def load_config_file(path) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: invalid YAML{line}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def build_config(kind: str, file_path=None, overrides: dict | None = None) -> ScenarioConfig:
    data: dict = {}
    if file_path is not None:
        data.update(load_config_file(file_path))
    data.pop("kind", None)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    known = {f for f in ScenarioConfig.__dataclass_fields__ if f != "kind"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return ScenarioConfig(kind=kind, **data)


def dump_config(cfg: ScenarioConfig) -> str:
    """Canonical YAML serialization; parse(dump(cfg)) round-trips."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)
