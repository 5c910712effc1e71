"""Scenario configuration: dataclasses, TOML loading, seeds and the content hash."""
from __future__ import annotations

import copy
import hashlib
import json
import zlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import tomli

from ..grid import CircleGrid, StateVector
from ..stepper import Dissipativity, Nonlinearity, StepperConfig
from .expr import parse_nonlinearity

SEED_LAWS = ("constant", "fourier", "fourier-sup")


@dataclass(frozen=True)
class SeedSpec:
    """How initial states are drawn.

    constant: ``count`` constants evenly spaced on [-amplitude, amplitude].
    fourier: random cosine sums over ``modes`` modes with 1/(1+k) decay,
    scaled to sup-norm ``amplitude``.  fourier-sup: the same shapes with the
    sup-norm drawn uniformly from [0.1, 1] * amplitude.
    """

    count: int = 0
    law: str = "constant"
    amplitude: float = 1.0
    modes: int = 5

    def __post_init__(self):
        if self.law not in SEED_LAWS:
            raise ValueError(f"unknown seed law {self.law!r}; expected one of {SEED_LAWS}")
        if self.count < 0:
            raise ValueError("seed count must be non-negative")

    def draw(self, grid: CircleGrid, rng: np.random.Generator) -> list[StateVector]:
        if self.law == "constant":
            return [grid.constant(c) for c in np.linspace(-self.amplitude, self.amplitude, self.count)]
        out = []
        x = grid.nodes
        for _ in range(self.count):
            amps = rng.standard_normal(self.modes) / (1.0 + np.arange(self.modes))
            phases = rng.uniform(0.0, 2 * np.pi, self.modes)
            v = sum(a * np.cos(k * x + ph) for k, (a, ph) in enumerate(zip(amps, phases)))
            sup = self.amplitude
            if self.law == "fourier-sup":
                sup *= rng.uniform(0.1, 1.0)
            out.append(StateVector(grid, v / np.max(np.abs(v)) * sup))
        return out


@dataclass(frozen=True)
class AuditSpec:
    name: str
    params: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.params.get(key, default)


@dataclass(frozen=True)
class DissipativitySpec:
    """gamma, delta and eta_bound(r) = eta_scale * (r^eta_power + 1)."""

    gamma: float
    delta: float
    eta_scale: float = 1.0
    eta_power: float = 3.0

    def build(self) -> Dissipativity:
        a, p = self.eta_scale, self.eta_power
        return Dissipativity(self.gamma, lambda r: a * (r ** p + 1.0), self.delta)


@dataclass(frozen=True)
class Scenario:
    name: str
    expression: str
    period_T: float = 1.0
    n_points: int = 64
    dt: float = 0.02
    scheme: str = "etdrk4"
    rng_seed: int = 0
    census_seeds: SeedSpec = SeedSpec(20, "constant", 2.0)
    sample_seeds: SeedSpec = SeedSpec(0, "fourier", 1.0)
    dissipativity: Optional[DissipativitySpec] = None
    audits: tuple = ()
    description: str = ""

    def __post_init__(self):
        from .audits import AUDITS

        unknown = [a.name for a in self.audits if a.name not in AUDITS]
        if unknown:
            raise ValueError(f"unknown audits {unknown}; available: {sorted(AUDITS)}")
        names = [a.name for a in self.audits]
        if len(set(names)) != len(names):
            raise ValueError("each audit may appear only once in the plan")
        if self.n_points < 8 or self.n_points % 2:
            raise ValueError("n_points must be even and at least 8")

    @property
    def grid(self) -> CircleGrid:
        return CircleGrid(self.n_points)

    @property
    def stepper(self) -> StepperConfig:
        return StepperConfig(self.dt, scheme=self.scheme)

    def nonlinearity(self) -> Nonlinearity:
        dis = self.dissipativity.build() if self.dissipativity else None
        return parse_nonlinearity(self.expression, self.period_T, name=self.name, dissipativity=dis)

    def rng(self, *stream) -> np.random.Generator:
        """Independent generator per named stream, fixed by rng_seed."""
        key = [self.rng_seed] + [zlib.crc32(str(s).encode()) for s in stream]
        return np.random.default_rng(np.random.SeedSequence(key))

    def audit(self, name: str) -> Optional[AuditSpec]:
        for a in self.audits:
            if a.name == name:
                return a
        return None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["audits"] = [{"name": a.name, **a.params} for a in self.audits]
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, seed: Optional[int] = None, resolution: Optional[int] = None,
                       audits: Optional[tuple] = None) -> "Scenario":
        changes = {}
        if seed is not None:
            changes["rng_seed"] = int(seed)
        if resolution is not None:
            changes["n_points"] = int(resolution)
        if audits is not None:
            changes["audits"] = tuple(audits)
        return replace(self, **changes)


def _seed_spec(table: dict, default: SeedSpec) -> SeedSpec:
    if not table:
        return default
    return SeedSpec(**{**asdict(default), **table})


def scenario_from_dict(data: dict, base: Optional[Scenario] = None) -> Scenario:
    """Build a scenario from a parsed config table, optionally extending ``base``."""
    data = copy.deepcopy(data)
    data.pop("base", None)
    kw = {} if base is None else {k: getattr(base, k) for k in base.__dataclass_fields__}
    for key in ("name", "expression", "period_T", "description", "rng_seed"):
        if key in data:
            kw[key] = data.pop(key)
    if "period" in data:
        kw["period_T"] = float(data.pop("period"))
    grid = data.pop("grid", {})
    if "n_points" in grid:
        kw["n_points"] = int(grid.pop("n_points"))
    stepper = data.pop("stepper", {})
    for key in ("dt", "scheme"):
        if key in stepper:
            kw[key] = stepper.pop(key)
    if "census_seeds" in data:
        kw["census_seeds"] = _seed_spec(data.pop("census_seeds"), kw.get("census_seeds", SeedSpec()))
    if "sample_seeds" in data:
        kw["sample_seeds"] = _seed_spec(data.pop("sample_seeds"), kw.get("sample_seeds", SeedSpec()))
    if "dissipativity" in data:
        kw["dissipativity"] = DissipativitySpec(**data.pop("dissipativity"))
    if "audits" in data:
        specs = []
        for entry in data.pop("audits"):
            entry = dict(entry)
            specs.append(AuditSpec(entry.pop("name"), entry))
        kw["audits"] = tuple(specs)
    leftovers = [k for k, v in data.items()] + [f"grid.{k}" for k in grid] + [f"stepper.{k}" for k in stepper]
    if leftovers:
        raise ValueError(f"unrecognised config keys: {leftovers}")
    if "name" not in kw or "expression" not in kw:
        raise ValueError("config needs a name and an expression (or a catalog base)")
    return Scenario(**kw)


def load_scenario(ref: str) -> Scenario:
    """Catalog name or path to a TOML config file."""
    from .catalog import CATALOG

    if ref in CATALOG:
        return CATALOG[ref]
    path = Path(ref)
    if not path.exists():
        raise FileNotFoundError(f"{ref!r} is neither a catalog scenario ({sorted(CATALOG)}) nor a file")
    with path.open("rb") as fh:
        data = tomli.load(fh)
    base = None
    if "base" in data:
        if data["base"] not in CATALOG:
            raise ValueError(f"unknown base scenario {data['base']!r}")
        base = CATALOG[data["base"]]
    return scenario_from_dict(data, base)
