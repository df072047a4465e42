"""Origin-destination mass accounting and resilience analytics.

The ledger accumulates kg moved per kWh on every (origin, destination,
transition) triple over the sampled scenarios and reports averages on a
fixed basis (100 kWh by default). Market shares, regional flow balances,
and domestic fractions all derive from the finalized ledger.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

from .errors import EmptyError
from .model import BatteryChemistry, Phase, SupplyNetwork, Transition
from .sampler import Scenario

DEFAULT_BASIS_KWH = 100.0

# Phase -> (transition whose flows carry that phase's output, endpoint).
# E..V are measured at the origin of their outbound leg; the market phase
# is measured at the destination of the final leg.
_PHASE_VIEW = {
    Phase.EXTRACTION: (Transition.EP, 0),
    Phase.PROCESSING: (Transition.PB, 0),
    Phase.BATTERY_PRODUCTION: (Transition.BV, 0),
    Phase.VEHICLE_PRODUCTION: (Transition.VM, 0),
    Phase.MARKET: (Transition.VM, 1),
}

FlowKey = tuple[str, str, Transition]


@dataclass
class FlowLedger:
    """Accumulated O-D transfers, averaged per iteration at finalize.

    ``raw`` holds kg/kWh summed over iterations; ``entries`` (available
    after finalize) holds kg per ``basis_kwh``.
    """

    regions: Mapping[str, str]
    basis_kwh: float = DEFAULT_BASIS_KWH
    raw: dict[FlowKey, float] = field(default_factory=lambda: defaultdict(float))
    iterations: int = 0
    _entries: dict[FlowKey, float] | None = None

    def add(self, origin: str, destination: str, transition: Transition, kg_per_kwh: float) -> None:
        self.raw[(origin, destination, transition)] += kg_per_kwh
        self._entries = None

    def accumulate(self, scenario: Scenario, chemistry: BatteryChemistry) -> None:
        """Add one scenario's four transfer groups to the ledger."""
        for mineral in chemistry.minerals:
            self.add(scenario.extraction[mineral], scenario.processing[mineral],
                     Transition.EP, chemistry.mineral_mass[mineral])
        for mineral in chemistry.minerals:
            self.add(scenario.processing[mineral], scenario.battery,
                     Transition.PB, chemistry.processed_mass[mineral])
        self.add(scenario.battery, scenario.vehicle, Transition.BV, chemistry.battery_mass_per_kwh)
        self.add(scenario.vehicle, scenario.market, Transition.VM, chemistry.vehicle_mass_per_kwh)
        self.iterations += 1

    def merge_sums(self, sums: Mapping[FlowKey, float], iterations: int) -> None:
        """Fold in pre-summed flows (used by the engine's bulk path)."""
        for key, kg in sums.items():
            self.raw[key] += kg
        self.iterations += iterations
        self._entries = None

    @property
    def entries(self) -> dict[FlowKey, float]:
        """kg per basis, averaged over iterations."""
        if self._entries is None:
            if self.iterations == 0:
                self._entries = {}
            else:
                scale = self.basis_kwh / self.iterations
                self._entries = {k: v * scale for k, v in self.raw.items()}
        return self._entries

    def total_mass(self) -> float:
        return sum(self.entries.values())

    def region_of(self, node_id: str) -> str:
        return self.regions[node_id]


def market_share(ledger: FlowLedger, phase: Phase) -> dict[str, float]:
    """Fraction of one phase's mass attributable to each region.

    Production phases (E, P, B, V) are credited at the origin of their
    outbound transfers; the market phase at the destination of the final
    leg. Fractions over a nonempty ledger sum to 1.
    """
    transition, endpoint = _PHASE_VIEW[phase]
    masses: dict[str, float] = defaultdict(float)
    for (origin, destination, trans), kg in ledger.entries.items():
        if trans is not transition:
            continue
        node = origin if endpoint == 0 else destination
        masses[ledger.region_of(node)] += kg
    total = sum(masses.values())
    if total == 0:
        raise EmptyError(f"no {transition.value} flow recorded")
    return {region: kg / total for region, kg in sorted(masses.items())}


def flow_balance(ledger: FlowLedger) -> dict[str, float]:
    """Per region: mass departing minus mass arriving (exports positive)."""
    if not ledger.entries:
        raise EmptyError("empty ledger")
    balance: dict[str, float] = defaultdict(float)
    for (origin, destination, _), kg in ledger.entries.items():
        balance[ledger.region_of(origin)] += kg
        balance[ledger.region_of(destination)] -= kg
    return dict(sorted(balance.items()))


def domestic_fraction(ledger: FlowLedger) -> dict[str, float]:
    """Per region: mass staying inside it over all mass touching it.

    Regions with no touching mass are omitted.
    """
    if not ledger.entries:
        raise EmptyError("empty ledger")
    touching: dict[str, float] = defaultdict(float)
    domestic: dict[str, float] = defaultdict(float)
    for (origin, destination, _), kg in ledger.entries.items():
        r_o = ledger.region_of(origin)
        r_d = ledger.region_of(destination)
        touching[r_o] += kg
        if r_d != r_o:
            touching[r_d] += kg
        else:
            domestic[r_o] += kg
    return {
        region: domestic.get(region, 0.0) / mass
        for region, mass in sorted(touching.items())
        if mass > 0
    }


@dataclass(frozen=True)
class ResilienceReport:
    """Shares, domestic fractions, and balances derived from one ledger."""

    market_share: dict[tuple[Phase, str], float]
    domestic_fraction: dict[str, float]
    flow_balance: dict[str, float]
    total_mass_per_basis: float
    basis_kwh: float


def resilience_report(ledger: FlowLedger) -> ResilienceReport:
    shares: dict[tuple[Phase, str], float] = {}
    for phase in Phase:
        for region, fraction in market_share(ledger, phase).items():
            shares[(phase, region)] = fraction
    return ResilienceReport(
        market_share=shares,
        domestic_fraction=domestic_fraction(ledger),
        flow_balance=flow_balance(ledger),
        total_mass_per_basis=ledger.total_mass(),
        basis_kwh=ledger.basis_kwh,
    )
