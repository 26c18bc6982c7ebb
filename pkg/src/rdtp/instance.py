"""Network and resource data for the co-planning model, plus model settings."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class Load:
    name: str
    bus: str
    peak_mw: float


@dataclass(frozen=True)
class Generator:
    name: str
    bus: str
    a: float  # $/MW^2h, cost is a/2 P^2 + b P
    b: float  # $/MWh
    pmax: float
    ramp: float  # MW/h


@dataclass(frozen=True)
class WindCandidate:
    name: str
    bus: str
    wmax: float
    cost: float  # annualised $/MW


@dataclass(frozen=True)
class StorageCandidate:
    name: str
    bus: str
    emax: float  # MWh
    cmax: float  # MW
    cost_energy: float  # annualised $/MWh
    cost_power: float  # annualised $/MW
    eta_c: float
    eta_d: float
    phi: float  # minimum energy-to-power ratio, h


@dataclass(frozen=True)
class Line:
    name: str
    from_bus: str
    to_bus: str
    susceptance: float
    fmax: float


@dataclass(frozen=True)
class CandidateLine(Line):
    cost_per_km: float = 0.0  # annualised $/km
    length_km: float = 0.0
    big_m: float | None = None


@dataclass(frozen=True)
class PlanningInstance:
    """Buses grouped into areas, with loads, thermal units and candidate investments.

    Incidence convention: each line has +1 at ``from_bus`` and -1 at
    ``to_bus``. The DC flow equations are invariant to the sign of the
    susceptance once angles are symmetric-bounded, so susceptances are given
    as positive numbers.
    """

    name: str
    buses: tuple[str, ...]
    areas: dict[str, tuple[str, ...]]
    loads: tuple[Load, ...] = ()
    generators: tuple[Generator, ...] = ()
    wind: tuple[WindCandidate, ...] = ()
    storage: tuple[StorageCandidate, ...] = ()
    lines: tuple[Line, ...] = ()
    candidate_lines: tuple[CandidateLine, ...] = ()

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if len(set(self.buses)) != len(self.buses):
            raise InstanceError("duplicate bus names")
        seen: dict[str, str] = {}
        for a, buses in self.areas.items():
            for b in buses:
                if b not in self.buses:
                    raise InstanceError(f"area {a!r} lists unknown bus {b!r}")
                if b in seen:
                    raise InstanceError(f"bus {b!r} assigned to areas {seen[b]!r} and {a!r}")
                seen[b] = a
        missing = [b for b in self.buses if b not in seen]
        if missing:
            raise InstanceError(f"buses without an area: {missing}")
        names = set()
        for group in (self.loads, self.generators, self.wind, self.storage):
            for x in group:
                if x.bus not in self.buses:
                    raise InstanceError(f"{x.name!r} attached to unknown bus {x.bus!r}")
                if x.name in names:
                    raise InstanceError(f"duplicate resource name {x.name!r}")
                names.add(x.name)
        for ln in (*self.lines, *self.candidate_lines):
            if ln.from_bus not in self.buses or ln.to_bus not in self.buses:
                raise InstanceError(f"line {ln.name!r} references unknown bus")
            if ln.from_bus == ln.to_bus:
                raise InstanceError(f"line {ln.name!r} is a self-loop")
            if ln.name in names:
                raise InstanceError(f"duplicate name {ln.name!r}")
            names.add(ln.name)
        for s in self.storage:
            if not (0 < s.eta_c <= 1 and 0 < s.eta_d <= 1):
                raise InstanceError(f"storage {s.name!r}: efficiencies must be in (0,1]")
            if not s.phi > 0:
                raise InstanceError(f"storage {s.name!r}: phi must be positive")
        for g in self.generators:
            if g.pmax < 0 or g.ramp < 0 or g.a < 0:
                raise InstanceError(f"generator {g.name!r}: negative pmax/ramp/a")

    @property
    def area_names(self) -> tuple[str, ...]:
        return tuple(self.areas)

    def bus_area(self, bus: str) -> str:
        for a, buses in self.areas.items():
            if bus in buses:
                return a
        raise InstanceError(f"unknown bus {bus!r}")

    def area_peak_load(self, area: str) -> float:
        return sum(l.peak_mw for l in self.loads if self.bus_area(l.bus) == area)

    def area_wind_max(self, area: str) -> float:
        return sum(w.wmax for w in self.wind if self.bus_area(w.bus) == area)

    def big_m(self, line: CandidateLine, theta_bound: float) -> float:
        if line.big_m is not None:
            return line.big_m
        return abs(line.susceptance) * 2 * theta_bound

    # -- JSON --------------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["buses"] = list(self.buses)
        d["areas"] = {a: list(b) for a, b in self.areas.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlanningInstance":
        def build(kind, items):
            allowed = {f.name for f in fields(kind)}
            out = []
            for it in items:
                extra = set(it) - allowed
                if extra:
                    raise InstanceError(f"{kind.__name__}: unknown keys {sorted(extra)}")
                out.append(kind(**it))
            return tuple(out)

        return cls(
            name=d.get("name", "instance"),
            buses=tuple(d["buses"]),
            areas={a: tuple(b) for a, b in d["areas"].items()},
            loads=build(Load, d.get("loads", [])),
            generators=build(Generator, d.get("generators", [])),
            wind=build(WindCandidate, d.get("wind", [])),
            storage=build(StorageCandidate, d.get("storage", [])),
            lines=build(Line, d.get("lines", [])),
            candidate_lines=build(CandidateLine, d.get("candidate_lines", [])),
        )

    @classmethod
    def load(cls, path) -> "PlanningInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


FORMULATIONS = ("PWL", "PWC")
VARIANTS = ("REF", "RD", "RDTP")


@dataclass(frozen=True)
class PlanningConfig:
    voll: float = 10_000.0  # $/MWh
    tangents: int = 5  # K
    tau: float = 1 / 6  # reserve delivery time, h
    reserve_load: float = 0.03
    reserve_wind: float = 0.05
    shed_cap: float = 0.5
    wind_portfolio: float = 0.25
    theta_bound: float = 0.6  # rad
    investment_scale: float = 1.0  # multiplies annualised investment costs (partial-year data)
    formulation: str = "PWL"
    variant: str = "REF"

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1) h")
        if self.tangents < 2:
            raise ValueError("need at least two tangents")
        for k in ("reserve_load", "reserve_wind", "shed_cap", "wind_portfolio"):
            if not 0 <= getattr(self, k) <= 1:
                raise ValueError(f"{k} must lie in [0, 1]")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.voll < 0 or self.theta_bound <= 0 or self.investment_scale <= 0:
            raise ValueError("voll must be >= 0; theta_bound and investment_scale > 0")

    def replace(self, **kw) -> "PlanningConfig":
        return PlanningConfig(**{**asdict(self), **kw})

    def to_dict(self) -> dict:
        return asdict(self)


def toy_instance() -> PlanningInstance:
    """Three buses in two areas: one storage, one wind and one line candidate."""
    return PlanningInstance.from_dict(json.loads(
        (Path(__file__).parent / "data" / "toy3bus" / "instance.json").read_text()))
