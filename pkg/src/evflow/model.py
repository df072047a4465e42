"""Domain types for the EV supply chain world model.

Everything downstream (sampling, emission accounting, mass-flow analysis,
hub optimization) operates on the types defined here. Unit conventions are
fixed globally: distances in km, masses in kg per kWh of battery capacity
(converted to tonnes only inside emission arithmetic), emission factors in
kg e-CO2 per tonne-km, energy in kWh.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import (
    CoverageError,
    EmptyChoiceError,
    MissingMassError,
    NodeReferenceError,
    ProbabilityError,
)

# Probability sums inside this band are renormalized; outside it the table
# is rejected. Tolerates CSV rounding without masking real data errors.
PROB_SUM_BAND = 1e-6

KG_PER_TONNE = 1000.0


class Phase(enum.Enum):
    """The five supply phases, totally ordered E < P < B < V < M."""

    EXTRACTION = "E"
    PROCESSING = "P"
    BATTERY_PRODUCTION = "B"
    VEHICLE_PRODUCTION = "V"
    MARKET = "M"

    @property
    def rank(self) -> int:
        return _PHASE_RANK[self]

    def __lt__(self, other: "Phase") -> bool:
        return self.rank < other.rank

    def __le__(self, other: "Phase") -> bool:
        return self.rank <= other.rank

    def __gt__(self, other: "Phase") -> bool:
        return self.rank > other.rank

    def __ge__(self, other: "Phase") -> bool:
        return self.rank >= other.rank

    @classmethod
    def from_letter(cls, letter: str) -> "Phase":
        try:
            return cls(letter)
        except ValueError:
            raise ValueError(f"unknown phase letter {letter!r}") from None


_PHASE_RANK = {p: i for i, p in enumerate(Phase)}


class Transition(enum.Enum):
    """The four mass-flow legs between consecutive supply phases."""

    EP = "EP"
    PB = "PB"
    BV = "BV"
    VM = "VM"

    @property
    def phases(self) -> tuple[Phase, Phase]:
        return _TRANSITION_PHASES[self]

    @property
    def needs_mineral(self) -> bool:
        """EP and PB carry one cargo per mineral; BV and VM carry one."""
        return self in (Transition.EP, Transition.PB)


_TRANSITION_PHASES = {
    Transition.EP: (Phase.EXTRACTION, Phase.PROCESSING),
    Transition.PB: (Phase.PROCESSING, Phase.BATTERY_PRODUCTION),
    Transition.BV: (Phase.BATTERY_PRODUCTION, Phase.VEHICLE_PRODUCTION),
    Transition.VM: (Phase.VEHICLE_PRODUCTION, Phase.MARKET),
}


class SeaVessel(enum.Enum):
    BULK_CARRIER = "BulkCarrier"
    CONTAINER_SHIP = "ContainerShip"
    VEHICLE_CARRIER = "VehicleCarrier"


class LandVehicle(enum.Enum):
    HEAVY_GOODS_DIESEL = "HeavyGoodsDiesel"
    ARTICULATED_TRANSPORT = "ArticulatedVehicleTransport"


# Vessel used when a missing sea leg is synthesized from great-circle
# distance: raw minerals move on bulk carriers, batteries on container
# ships, finished vehicles on vehicle carriers.
FALLBACK_VESSEL = {
    Transition.EP: SeaVessel.BULK_CARRIER,
    Transition.PB: SeaVessel.BULK_CARRIER,
    Transition.BV: SeaVessel.CONTAINER_SHIP,
    Transition.VM: SeaVessel.VEHICLE_CARRIER,
}


@dataclass(frozen=True)
class Node:
    """A named location that can serve one or more supply phases."""

    id: str
    name: str
    region: str
    lat: float
    lon: float
    roles: frozenset[Phase]

    def __post_init__(self):
        if not self.id:
            raise ValueError("node id must be nonempty")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"node {self.id}: latitude {self.lat} out of range")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"node {self.id}: longitude {self.lon} out of range")


@dataclass(frozen=True)
class Mineral:
    id: str
    name: str


@dataclass(frozen=True)
class BatteryChemistry:
    """Masses moved per kWh of battery capacity for one battery type.

    ``mineral_mass`` is the raw mass leaving extraction, ``processed_mass``
    the mass remaining after refining; refining never adds mass. The
    minerals with a nonzero entry form the chemistry's subset of decisions.
    """

    id: str
    mineral_mass: Mapping[str, float]
    processed_mass: Mapping[str, float]
    battery_mass_per_kwh: float
    vehicle_mass_per_kwh: float

    def __post_init__(self):
        if set(self.mineral_mass) != set(self.processed_mass):
            raise ValueError(
                f"chemistry {self.id}: mineral_mass and processed_mass "
                "must cover the same minerals"
            )
        for mineral, mass in self.mineral_mass.items():
            if not mass > 0:
                raise ValueError(f"chemistry {self.id}: mass for {mineral} must be > 0")
            if self.processed_mass[mineral] > mass:
                raise ValueError(
                    f"chemistry {self.id}: processed mass for {mineral} "
                    "exceeds extracted mass"
                )
            if not self.processed_mass[mineral] > 0:
                raise ValueError(f"chemistry {self.id}: processed mass for {mineral} must be > 0")
        if not 0 < self.battery_mass_per_kwh <= self.vehicle_mass_per_kwh:
            raise ValueError(
                f"chemistry {self.id}: battery mass must be positive and "
                "no larger than vehicle mass"
            )

    @property
    def minerals(self) -> tuple[str, ...]:
        """Mineral ids of the chemistry's subset, in lexicographic order."""
        return tuple(sorted(self.mineral_mass))


def _build_cdf(options: Iterable[tuple[str, float]], label: str) -> tuple[tuple[tuple[str, float], ...], tuple[float, ...]]:
    opts = tuple(options)
    if not opts:
        raise EmptyChoiceError(f"{label}: no options")
    seen = set()
    for node_id, p in opts:
        if p < 0:
            raise ProbabilityError(f"{label}: negative probability {p} for {node_id}")
        if node_id in seen:
            raise ProbabilityError(f"{label}: duplicate option {node_id}")
        seen.add(node_id)
    total = math.fsum(p for _, p in opts)
    if abs(total - 1.0) > PROB_SUM_BAND:
        raise ProbabilityError(f"{label}: probabilities sum to {total:.9g}, not 1")
    normalized = tuple((node_id, p / total) for node_id, p in opts)
    cdf = []
    acc = 0.0
    for _, p in normalized:
        acc += p
        cdf.append(acc)
    cdf[-1] = 1.0  # pin the final value so every uniform in [0,1) lands
    return normalized, tuple(cdf)


@dataclass(frozen=True)
class ChoiceTable:
    """Options and cumulative probabilities for one independent decision.

    ``decision`` is a mineral id for phases E and P, and either the token
    ``"battery"`` or a chemistry id for phase B (a chemistry-specific table
    overrides the shared one).
    """

    phase: Phase
    decision: str
    options: tuple[tuple[str, float], ...]
    cdf: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        options, cdf = _build_cdf(self.options, f"{self.phase.value}/{self.decision}")
        object.__setattr__(self, "options", options)
        object.__setattr__(self, "cdf", cdf)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(node_id for node_id, _ in self.options)


@dataclass(frozen=True)
class ConditionalChoiceTable:
    """Options at phase V or M given the node selected one phase earlier."""

    phase: Phase
    given: str
    options: tuple[tuple[str, float], ...]
    cdf: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        options, cdf = _build_cdf(self.options, f"{self.phase.value}|{self.given}")
        object.__setattr__(self, "options", options)
        object.__setattr__(self, "cdf", cdf)

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(node_id for node_id, _ in self.options)


@dataclass(frozen=True)
class TransportLink:
    """Land and sea legs between two nodes, with their carrier classes."""

    origin: str
    destination: str
    land_km: float
    sea_km: float
    sea_vessel: Optional[SeaVessel] = None
    land_vehicle: Optional[LandVehicle] = None

    def __post_init__(self):
        if self.land_km < 0 or self.sea_km < 0:
            raise ValueError(f"link {self.origin}->{self.destination}: negative distance")
        if self.sea_km > 0 and self.sea_vessel is None:
            raise ValueError(f"link {self.origin}->{self.destination}: sea leg without vessel")
        if self.land_km > 0 and self.land_vehicle is None:
            raise ValueError(f"link {self.origin}->{self.destination}: land leg without vehicle")

    @property
    def total_km(self) -> float:
        return self.land_km + self.sea_km


@dataclass(frozen=True)
class EmissionFactors:
    """kg e-CO2 per tonne-km per carrier class (gamma: sea, beta: land)."""

    gamma1: float  # bulk carrier
    gamma2: float  # container ship
    gamma3: float  # vehicle carrier
    beta1: float  # heavy goods diesel
    beta2: float  # articulated vehicle transport

    def __post_init__(self):
        for name in ("gamma1", "gamma2", "gamma3", "beta1", "beta2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"emission factor {name} must be > 0")

    def sea_factor(self, vessel: SeaVessel) -> float:
        return {
            SeaVessel.BULK_CARRIER: self.gamma1,
            SeaVessel.CONTAINER_SHIP: self.gamma2,
            SeaVessel.VEHICLE_CARRIER: self.gamma3,
        }[vessel]

    def land_factor(self, vehicle: LandVehicle) -> float:
        return {
            LandVehicle.HEAVY_GOODS_DIESEL: self.beta1,
            LandVehicle.ARTICULATED_TRANSPORT: self.beta2,
        }[vehicle]


class ManufacturerKind(enum.Enum):
    BATTERY_MAKER = "BatteryMaker"
    CAR_MAKER = "CarMaker"


@dataclass(frozen=True)
class Manufacturer:
    id: str
    kind: ManufacturerKind
    nodes: frozenset[str]

    def __post_init__(self):
        if not self.nodes:
            raise ValueError(f"manufacturer {self.id}: empty node set")


@dataclass(frozen=True)
class MarketSales:
    """Annual EV sales in one market for one chemistry, in GWh."""

    market: str
    chemistry: str
    gwh: float

    def __post_init__(self):
        if not math.isfinite(self.gwh) or self.gwh < 0:
            raise ValueError(f"sales {self.market}/{self.chemistry}: gwh must be finite and >= 0")


@dataclass(frozen=True)
class FallbackPolicy:
    """What to do when a transport link is missing.

    ``error`` raises; ``great-circle`` synthesizes a sea-only leg from the
    haversine distance scaled by ``detour_factor``.
    """

    kind: str = "great-circle"
    detour_factor: float = 1.2

    def __post_init__(self):
        if self.kind not in ("error", "great-circle"):
            raise ValueError(f"unknown fallback policy {self.kind!r}")
        if self.kind == "great-circle" and self.detour_factor < 1.0:
            raise ValueError("detour factor must be >= 1")


@dataclass
class SupplyNetwork:
    """The validated world model. Treat as immutable once validated."""

    nodes: dict[str, Node]
    minerals: dict[str, Mineral]
    chemistries: dict[str, BatteryChemistry]
    choice_tables: dict[tuple[Phase, str], ChoiceTable]
    conditional_tables: dict[tuple[Phase, str], ConditionalChoiceTable]
    links: dict[tuple[str, str], TransportLink]
    factors: EmissionFactors
    manufacturers: dict[str, Manufacturer] = field(default_factory=dict)
    sales: tuple[MarketSales, ...] = ()
    fallback: FallbackPolicy = field(default_factory=FallbackPolicy)

    # -- lookups -------------------------------------------------------

    def battery_table(self, chemistry_id: str) -> ChoiceTable:
        """Phase-B table for a chemistry: its own if present, else the shared one."""
        table = self.choice_tables.get((Phase.BATTERY_PRODUCTION, chemistry_id))
        if table is None:
            table = self.choice_tables.get((Phase.BATTERY_PRODUCTION, "battery"))
        if table is None:
            raise CoverageError(f"no battery production table for chemistry {chemistry_id}")
        return table

    def mineral_table(self, phase: Phase, mineral_id: str) -> ChoiceTable:
        table = self.choice_tables.get((phase, mineral_id))
        if table is None:
            raise CoverageError(f"no {phase.value} table for mineral {mineral_id}")
        return table

    def conditional_table(self, phase: Phase, given: str) -> ConditionalChoiceTable:
        table = self.conditional_tables.get((phase, given))
        if table is None:
            raise CoverageError(f"no {phase.value} row for upstream node {given}")
        return table

    def region_of(self, node_id: str) -> str:
        return self.nodes[node_id].region

    def node_regions(self) -> dict[str, str]:
        return {node_id: node.region for node_id, node in self.nodes.items()}

    # -- validation ----------------------------------------------------

    def validate(self) -> None:
        """Check referential integrity, role consistency, and conditional coverage."""
        self._check_node_refs()
        self._check_roles()
        self._check_mineral_refs()
        self._check_conditional_coverage()

    def _require_node(self, node_id: str, context: str) -> Node:
        node = self.nodes.get(node_id)
        if node is None:
            raise NodeReferenceError(f"{context}: unknown node {node_id!r}")
        return node

    def _check_node_refs(self):
        for (phase, decision), table in self.choice_tables.items():
            for node_id in table.node_ids:
                self._require_node(node_id, f"choice table {phase.value}/{decision}")
        for (phase, given), table in self.conditional_tables.items():
            self._require_node(given, f"conditional table {phase.value}")
            for node_id in table.node_ids:
                self._require_node(node_id, f"conditional table {phase.value}|{given}")
        for origin, destination in self.links:
            self._require_node(origin, "link origin")
            self._require_node(destination, "link destination")
        for manufacturer in self.manufacturers.values():
            for node_id in manufacturer.nodes:
                self._require_node(node_id, f"manufacturer {manufacturer.id}")
        for sale in self.sales:
            self._require_node(sale.market, "sales market")

    def _check_roles(self):
        for (phase, decision), table in self.choice_tables.items():
            for node_id in table.node_ids:
                if phase not in self.nodes[node_id].roles:
                    raise NodeReferenceError(
                        f"choice table {phase.value}/{decision}: node {node_id} "
                        f"lacks the {phase.value} role"
                    )
        for (phase, given), table in self.conditional_tables.items():
            for node_id in table.node_ids:
                if phase not in self.nodes[node_id].roles:
                    raise NodeReferenceError(
                        f"conditional table {phase.value}|{given}: node {node_id} "
                        f"lacks the {phase.value} role"
                    )
        role_for_kind = {
            ManufacturerKind.BATTERY_MAKER: Phase.BATTERY_PRODUCTION,
            ManufacturerKind.CAR_MAKER: Phase.VEHICLE_PRODUCTION,
        }
        for manufacturer in self.manufacturers.values():
            needed = role_for_kind[manufacturer.kind]
            for node_id in manufacturer.nodes:
                if needed not in self.nodes[node_id].roles:
                    raise NodeReferenceError(
                        f"manufacturer {manufacturer.id}: node {node_id} "
                        f"lacks the {needed.value} role"
                    )
        for sale in self.sales:
            if Phase.MARKET not in self.nodes[sale.market].roles:
                raise NodeReferenceError(f"sales market {sale.market} lacks the M role")

    def _check_mineral_refs(self):
        for chemistry in self.chemistries.values():
            for mineral_id in chemistry.mineral_mass:
                if mineral_id not in self.minerals:
                    raise NodeReferenceError(
                        f"chemistry {chemistry.id}: unknown mineral {mineral_id!r}"
                    )
            for mineral_id in chemistry.minerals:
                self.mineral_table(Phase.EXTRACTION, mineral_id)
                self.mineral_table(Phase.PROCESSING, mineral_id)
        for sale in self.sales:
            if sale.chemistry not in self.chemistries:
                raise NodeReferenceError(f"sales row: unknown chemistry {sale.chemistry!r}")

    def _check_conditional_coverage(self):
        battery_nodes = set()
        for (phase, _decision), table in self.choice_tables.items():
            if phase is Phase.BATTERY_PRODUCTION:
                battery_nodes.update(table.node_ids)
        vehicle_nodes = set()
        for node_id in sorted(battery_nodes):
            if (Phase.VEHICLE_PRODUCTION, node_id) not in self.conditional_tables:
                raise CoverageError(f"no V row for battery node {node_id}")
            vehicle_nodes.update(self.conditional_tables[(Phase.VEHICLE_PRODUCTION, node_id)].node_ids)
        for node_id in sorted(vehicle_nodes):
            if (Phase.MARKET, node_id) not in self.conditional_tables:
                raise CoverageError(f"no M row for vehicle node {node_id}")


def scenario_weight(
    chemistry: BatteryChemistry,
    transition: Transition,
    mineral: Optional[str] = None,
) -> float:
    """Cargo mass in kg per kWh moved on one leg of one scenario.

    EP and PB require a mineral id; BV and VM forbid one.
    """
    if transition.needs_mineral:
        if mineral is None:
            raise ValueError(f"{transition.value} requires a mineral")
        masses = (
            chemistry.mineral_mass if transition is Transition.EP else chemistry.processed_mass
        )
        if mineral not in masses:
            raise MissingMassError(
                f"chemistry {chemistry.id} has no mass for mineral {mineral!r}"
            )
        return masses[mineral]
    if mineral is not None:
        raise ValueError(f"{transition.value} does not take a mineral")
    if transition is Transition.BV:
        return chemistry.battery_mass_per_kwh
    return chemistry.vehicle_mass_per_kwh
