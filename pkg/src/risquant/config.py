"""System and experiment configuration, loaded from YAML with strict keys."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .vamp import SolverConfig


class ConfigError(ValueError):
    pass


@dataclass
class PriorOverrides:
    """Optional overrides of the default spike-plus-Gaussian prior.

    ``sparsity`` is the probability of a nonzero angular coefficient; ``var``
    the variance of the nonzero component.  ``components`` > 1 splits the slab
    into a geometric ladder of variances with the same total second moment.
    """

    sparsity: float | None = None
    var: float | None = None
    components: int = 1


@dataclass
class SystemConfig:
    n1: int = 8
    n2: int = 8
    m1: int = 8
    m2: int = 8
    q1: int = 2
    q2: int = 2
    p: int = 128
    t: int | None = None
    l: int = 4
    j: int = 4
    users: int = 1
    bits: list = field(default_factory=lambda: [2, 3, 4, math.inf])
    snr_db: list = field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0])
    trials: int = 20
    seed: int = 0
    spacing_over_wavelength: float = 0.5
    normalize_paths: bool = False
    on_grid: bool = False
    training: str = "zc"
    run_ls: bool = True
    solver: SolverConfig = field(default_factory=SolverConfig)
    prior: PriorOverrides = field(default_factory=PriorOverrides)

    def __post_init__(self):
        if self.t is None:
            self.t = self.q1 * self.q2
        self.bits = [_parse_bits(b) for b in self.bits]
        self.snr_db = [float(s) for s in self.snr_db]
        self.validate()

    def validate(self):
        for name in ("n1", "n2", "m1", "m2", "q1", "q2", "p", "l", "j", "users", "trials"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.p < self.m:
            raise ConfigError(f"p ({self.p}) must be >= m1*m2 ({self.m})")
        if self.t != self.q:
            raise ConfigError("only the identity pilot is supported: t must equal q1*q2")
        if self.training not in ("random", "zc"):
            raise ConfigError(f"unknown training kind {self.training!r}")
        if not self.bits or not self.snr_db:
            raise ConfigError("bits and snr_db must be non-empty")

    n = property(lambda self: self.n1 * self.n2)
    m = property(lambda self: self.m1 * self.m2)
    q = property(lambda self: self.q1 * self.q2)

    def with_(self, **kw) -> "SystemConfig":
        return replace(self, **kw)


def _parse_bits(b):
    if b is None:
        return math.inf
    if isinstance(b, str):
        if b.strip().lower() in ("inf", "infinite", "infinity"):
            return math.inf
        b = int(b)
    if isinstance(b, float) and math.isinf(b):
        return math.inf
    if int(b) != b or not 1 <= int(b) <= 8:
        raise ConfigError(f"bits entries must be 1..8 or inf, got {b!r}")
    return int(b)


def bits_label(b) -> str:
    return "inf" if b is None or (isinstance(b, float) and math.isinf(b)) else str(int(b))


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(data: dict) -> SystemConfig:
    data = dict(data or {})
    solver = _build(SolverConfig, data.pop("solver", {}) or {}, "solver")
    prior = _build(PriorOverrides, data.pop("prior", {}) or {}, "prior")
    data["solver"] = solver
    data["prior"] = prior
    return _build(SystemConfig, data, "config")


def load_config(path: str | Path) -> SystemConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return config_from_dict(data or {})
