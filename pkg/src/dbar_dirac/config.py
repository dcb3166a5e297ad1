"""Run configuration: a flat, versioned YAML document.  Unknown keys are errors."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from pathlib import Path

import yaml

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # phantom
    preset: str = "bump"
    alpha: float = 0.3
    beta: float = 0.2
    centre: tuple = (0.1, 0.05)
    radius: float = 0.8
    power: int = 8
    c: tuple | None = None
    # z-grid
    n: int = 64
    half_width: float = 2.0
    recon_radius: float = 1.0
    # spectral layout
    A: float = 3.0
    k0: tuple | None = None        # None: pick by the exceptional-point scan
    R_max: float = 15.0
    R_rec: float = 6.0
    truncation: float | None = None
    n_radial: int = 32
    n_theta: int = 64
    per_panel: int = 8
    m: int = 128
    n_k: int = 8
    # boundary data route
    path: str = "volumetric"
    m_outer: int = 256
    dtn_N: int = 40
    dtn_n_r: int = 24
    dtn_n_theta: int = 128
    noise: float = 0.0
    seed: int = 0
    # solvers and checks
    tol_mu: float = 1e-12
    tol_w: float = 1e-8
    flag_ratio: float = 1e-6
    k0_margin: float = 1e-3
    scan_n_radial: int = 6
    scan_n_theta: int = 8
    # plumbing
    output: str = "dbar_out"
    workers: int = 1
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version {self.schema_version} not supported (expected {SCHEMA_VERSION})")
        for name in ("n", "n_radial", "n_theta", "per_panel", "m", "n_k", "m_outer", "dtn_N",
                     "dtn_n_r", "dtn_n_theta", "workers", "power", "scan_n_radial",
                     "scan_n_theta"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.A <= 0:
            raise ConfigError("A must be positive")
        if self.R_rec <= self.A:
            raise ConfigError("R_rec must exceed A")
        if self.R_max <= self.A:
            raise ConfigError("R_max must exceed A")
        for name in ("tol_mu", "tol_w", "flag_ratio", "k0_margin"):
            if not 0 < getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.path not in ("volumetric", "dtn"):
            raise ConfigError("path must be 'volumetric' or 'dtn'")
        if self.noise < 0:
            raise ConfigError("noise must be non-negative")
        if self.n_radial % self.per_panel:
            raise ConfigError("n_radial must be a multiple of per_panel")

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = sorted(set(d) - set(cls.keys()))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        d = dict(d)
        for key in ("centre", "c", "k0"):
            if isinstance(d.get(key), list):
                d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        doc = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(doc, dict):
            raise ConfigError("config must be a mapping")
        return cls.from_dict(doc)

    def to_dict(self):
        d = asdict(self)
        for key in ("centre", "c", "k0"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d

    def dump(self, path):
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    def replace(self, **changes) -> "RunConfig":
        d = self.to_dict()
        d.update(changes)
        return RunConfig.from_dict(d)
