"""Transport emission accounting per scenario.

Every leg contributes weight (tonnes) x distance (km) x factor (kg per
tonne-km). Records decompose by transition leg (EP, PB, BV, VM) and by
mode (land, sea); both decompositions sum back to the total exactly
because the total is accumulated from the same addends in a fixed order.
That accumulation order is shared verbatim with the numpy and compiled
kernels, so a scalar record here is bitwise-comparable to a kernel row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyError, ModeMissingError
from .ingest import resolve_distance
from .model import (
    BatteryChemistry,
    EmissionFactors,
    KG_PER_TONNE,
    LandVehicle,
    SeaVessel,
    SupplyNetwork,
    Transition,
)
from .sampler import Scenario

DEFAULT_BIN_WIDTH = 0.5
DEFAULT_CHECKPOINTS = (1_000, 10_000, 100_000, 1_000_000)

LEG_ORDER = (Transition.EP, Transition.PB, Transition.BV, Transition.VM)


def link_emissions(
    weight_kg: float,
    land_km: float,
    sea_km: float,
    land_vehicle: Optional[LandVehicle],
    sea_vessel: Optional[SeaVessel],
    factors: EmissionFactors,
) -> float:
    """kg e-CO2 for one cargo moved over one land+sea leg."""
    land, sea = _leg_costs(weight_kg / KG_PER_TONNE, land_km, sea_km, land_vehicle, sea_vessel, factors)
    return land + sea


def _leg_costs(
    weight_tonnes: float,
    land_km: float,
    sea_km: float,
    land_vehicle: Optional[LandVehicle],
    sea_vessel: Optional[SeaVessel],
    factors: EmissionFactors,
) -> tuple[float, float]:
    """(land kg, sea kg) with the exact multiply order the kernels use."""
    if not math.isfinite(weight_tonnes) or weight_tonnes < 0 or land_km < 0 or sea_km < 0:
        raise ValueError("weight and distances must be finite and >= 0")
    if land_km > 0:
        if land_vehicle is None:
            raise ModeMissingError("positive land distance without a land vehicle")
        land = weight_tonnes * land_km * factors.land_factor(land_vehicle)
    else:
        land = 0.0
    if sea_km > 0:
        if sea_vessel is None:
            raise ModeMissingError("positive sea distance without a sea vessel")
        sea = weight_tonnes * sea_km * factors.sea_factor(sea_vessel)
    else:
        sea = 0.0
    return land, sea


@dataclass(frozen=True)
class EmissionRecord:
    """Emissions of one scenario in kg e-CO2 per kWh, with decompositions."""

    scenario: Scenario
    by_leg: dict[Transition, float]
    land: float
    sea: float
    total: float

    @property
    def by_mode(self) -> dict[str, float]:
        return {"land": self.land, "sea": self.sea}

    def leg_share(self, leg: Transition) -> float:
        return self.by_leg[leg] / self.total if self.total else 0.0


def scenario_emissions(
    network: SupplyNetwork,
    scenario: Scenario,
    chemistry: Optional[BatteryChemistry] = None,
) -> EmissionRecord:
    """Evaluate one scenario.

    Accumulation order (mirrored by both kernels): per mineral the EP land
    then sea addend, per mineral the PB land then sea addend, then BV and
    VM; the total is ep, then + pb, + bv, + vm.
    """
    if chemistry is None:
        chemistry = network.chemistries[scenario.chemistry]
    factors = network.factors

    ep = 0.0
    pb = 0.0
    land = 0.0
    sea = 0.0
    for mineral in chemistry.minerals:
        leg = resolve_distance(network, scenario.extraction[mineral], scenario.processing[mineral], Transition.EP)
        l, s = _leg_costs(
            chemistry.mineral_mass[mineral] / KG_PER_TONNE,
            leg.land_km, leg.sea_km, leg.land_vehicle, leg.sea_vessel, factors,
        )
        ep += l
        ep += s
        land += l
        sea += s
    for mineral in chemistry.minerals:
        leg = resolve_distance(network, scenario.processing[mineral], scenario.battery, Transition.PB)
        l, s = _leg_costs(
            chemistry.processed_mass[mineral] / KG_PER_TONNE,
            leg.land_km, leg.sea_km, leg.land_vehicle, leg.sea_vessel, factors,
        )
        pb += l
        pb += s
        land += l
        sea += s

    leg = resolve_distance(network, scenario.battery, scenario.vehicle, Transition.BV)
    bv_l, bv_s = _leg_costs(
        chemistry.battery_mass_per_kwh / KG_PER_TONNE,
        leg.land_km, leg.sea_km, leg.land_vehicle, leg.sea_vessel, factors,
    )
    bv = bv_l
    bv += bv_s
    land += bv_l
    sea += bv_s

    leg = resolve_distance(network, scenario.vehicle, scenario.market, Transition.VM)
    vm_l, vm_s = _leg_costs(
        chemistry.vehicle_mass_per_kwh / KG_PER_TONNE,
        leg.land_km, leg.sea_km, leg.land_vehicle, leg.sea_vessel, factors,
    )
    vm = vm_l
    vm += vm_s
    land += vm_l
    sea += vm_s

    total = ep
    total += pb
    total += bv
    total += vm
    return EmissionRecord(
        scenario=scenario,
        by_leg={Transition.EP: ep, Transition.PB: pb, Transition.BV: bv, Transition.VM: vm},
        land=land,
        sea=sea,
        total=total,
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Cumulative average at increasing iteration counts (Fig-2a style)."""

    checkpoints: tuple[tuple[int, float], ...]
    relative_change: tuple[float, ...]

    @property
    def final_mean(self) -> float:
        return self.checkpoints[-1][1]


def cumulative_average(
    totals: Sequence[float] | np.ndarray,
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
) -> ConvergenceReport:
    """Cumulative mean of the record totals at each checkpoint.

    Checkpoints above the available count are capped at it; the final
    count is always reported. Sums use numpy's pairwise reduction so the
    result for a given array is independent of how it was produced.
    """
    arr = np.asarray(totals, dtype=np.float64)
    n = arr.shape[0]
    if n == 0:
        raise EmptyError("no records to average")
    points = sorted({min(int(c), n) for c in checkpoints if int(c) >= 1} | {n})
    means = [(k, float(np.sum(arr[:k]) / k)) for k in points]
    changes = []
    for (_, prev), (_, cur) in zip(means, means[1:]):
        changes.append(abs(cur - prev) / prev if prev != 0 else 0.0)
    return ConvergenceReport(checkpoints=tuple(means), relative_change=tuple(changes))


@dataclass(frozen=True)
class Pmf:
    """Histogram over fixed-width bins, normalized to total mass 1."""

    bin_width: float
    bins: dict[int, float]

    def bin_lower(self, index: int) -> float:
        return index * self.bin_width

    def mass_at(self, value: float) -> float:
        return self.bins.get(math.floor(value / self.bin_width), 0.0)

    def sorted_items(self) -> list[tuple[int, float]]:
        return sorted(self.bins.items())


def build_pmf(values: Sequence[float] | np.ndarray, bin_width: float = DEFAULT_BIN_WIDTH) -> Pmf:
    """Bin values at floor(v / bin_width) and normalize counts to 1."""
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyError("no records to bin")
    indices = np.floor(arr / bin_width).astype(np.int64)
    uniq, counts = np.unique(indices, return_counts=True)
    n = arr.size
    return Pmf(bin_width=bin_width, bins={int(i): int(c) / n for i, c in zip(uniq, counts)})
