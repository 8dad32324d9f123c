"""
Asymmetry models built from named components.

Times are in ns, frequencies in MHz, damping rates in 1/us and lifetimes in ns.
Parameter names are "<component>.<parameter>", e.g. "rabi.nu".
"""
import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from muondemur.spinsys.operators import InvalidArgumentException


class Kind(str, enum.Enum):
    DAMPED_COSINE = "damped_cosine"
    CONSTANT = "constant"
    EXP_DECAY = "exp_decay"


class Damping(str, enum.Enum):
    RATE = "rate"
    LIFETIME = "lifetime"


_PARAMETERS = {
    Kind.DAMPED_COSINE: ("A", "nu", "lam", "phi"),
    Kind.CONSTANT: ("A",),
    Kind.EXP_DECAY: ("A", "lam"),
}


@dataclass(frozen=True)
class Component:
    name: str
    kind: Kind
    damping: Damping = Damping.RATE
    zone: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "damping", Damping(self.damping))
        if not self.name or "." in self.name:
            raise InvalidArgumentException(
                f"Component name {self.name!r} must be non-empty and free of dots"
            )

    @property
    def local_names(self) -> Tuple[str, ...]:
        names = _PARAMETERS[self.kind]
        if self.damping is Damping.LIFETIME:
            names = tuple("tau" if name == "lam" else name for name in names)
        return names

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return tuple(f"{self.name}.{local}" for local in self.local_names)

    def evaluate(self, t_ns: np.ndarray, values: Mapping[str, float]) -> np.ndarray:
        """:param t_ns: time since the start of the component's zone"""
        p = {local: values[f"{self.name}.{local}"] for local in self.local_names}
        if self.kind is Kind.CONSTANT:
            return np.full(t_ns.shape, p["A"], dtype=float)

        envelope = np.exp(-t_ns / p["tau"]) if "tau" in p else np.exp(-p["lam"] * t_ns / 1000.0)
        if self.kind is Kind.EXP_DECAY:
            return p["A"] * envelope
        return p["A"] * envelope * np.cos(2.0 * np.pi * p["nu"] * t_ns / 1000.0 + p["phi"])


@dataclass(frozen=True)
class Zone:
    name: str
    t_from: float
    t_to: float = math.inf


@dataclass(frozen=True)
class ModelSpec:
    """
    Sum of components. shared maps a parameter name onto the name it copies, so
    {"tf.nu": "lf.nu"} fits one frequency for both. Components tied to a zone
    contribute only inside it, with their time origin at the zone start.
    """

    components: Tuple[Component, ...]
    shared: Tuple[Tuple[str, str], ...] = ()
    zones: Tuple[Zone, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "zones", tuple(self.zones))
        if isinstance(self.shared, Mapping):
            object.__setattr__(self, "shared", tuple(self.shared.items()))

        names = [component.name for component in self.components]
        if len(set(names)) != len(names):
            raise InvalidArgumentException(f"Component names must be unique, got {names}")
        if not self.components:
            raise InvalidArgumentException("A model needs at least one component")

        all_names = set(self.all_parameter_names)
        for alias, target in self.shared:
            if alias not in all_names or target not in all_names:
                raise InvalidArgumentException(f"Cannot share {alias!r} with {target!r}")
            if alias == target or alias in dict(self.shared).values():
                raise InvalidArgumentException(f"Shared parameter {alias!r} forms a chain")

        zone_names = [zone.name for zone in self.zones]
        if len(set(zone_names)) != len(zone_names):
            raise InvalidArgumentException(f"Zone names must be unique, got {zone_names}")
        ordered = sorted(self.zones, key=lambda zone: zone.t_from)
        for zone in ordered:
            if zone.t_to <= zone.t_from:
                raise InvalidArgumentException(f"Zone {zone.name!r} is empty")
        for previous, current in zip(ordered, ordered[1:]):
            if current.t_from < previous.t_to:
                raise InvalidArgumentException(
                    f"Zones {previous.name!r} and {current.name!r} overlap"
                )
        for component in self.components:
            if component.zone is not None and component.zone not in zone_names:
                raise InvalidArgumentException(
                    f"Component {component.name!r} refers to unknown zone {component.zone!r}"
                )

    @classmethod
    def single(cls, *kinds: str, damping: str = "rate") -> "ModelSpec":
        """Components named after their kind, numbered when a kind repeats."""
        components = []
        for index, kind in enumerate(kinds):
            repeats = kinds.count(kind) > 1
            name = f"{kind}{index + 1}" if repeats else kind
            components.append(Component(name, Kind(kind), Damping(damping)))
        return cls(tuple(components))

    @property
    def all_parameter_names(self) -> List[str]:
        names = []
        for component in self.components:
            names.extend(component.parameter_names)
        return names

    @property
    def parameter_names(self) -> List[str]:
        aliases = dict(self.shared)
        return [name for name in self.all_parameter_names if name not in aliases]

    def expand(self, values: Mapping[str, float]) -> Dict[str, float]:
        expanded = dict(values)
        for alias, target in self.shared:
            expanded[alias] = expanded[target]
        return expanded

    def with_zones(self, zones: Sequence[Zone]) -> "ModelSpec":
        return ModelSpec(self.components, self.shared, tuple(zones))

    def evaluate(self, t_ns, values: Mapping[str, float]) -> np.ndarray:
        t_ns = np.asarray(t_ns, dtype=float)
        values = self.expand(values)
        zones = {zone.name: zone for zone in self.zones}
        total = np.zeros(t_ns.shape)
        for component in self.components:
            if component.zone is None:
                total = total + component.evaluate(t_ns, values)
                continue
            zone = zones[component.zone]
            inside = (t_ns >= zone.t_from) & (t_ns < zone.t_to)
            if np.any(inside):
                total[inside] = total[inside] + component.evaluate(t_ns[inside] - zone.t_from, values)
        return total


def damped_cosine_model(with_constant: bool = True, damping: str = "rate") -> ModelSpec:
    kinds = ("damped_cosine", "constant") if with_constant else ("damped_cosine",)
    return ModelSpec.single(*kinds, damping=damping)
