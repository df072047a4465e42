"""Deterministic scenario sampling.

Randomness comes from a counter-based generator: every uniform is a pure
function of (master seed, iteration index, draw counter), so any iteration
can be reproduced in isolation and the draw sequence is independent of
chunking or worker count. The mixing function is the splitmix64 finalizer;
the scalar path here, the numpy kernel, and the compiled kernel all
implement the same arithmetic and are tested for bitwise agreement.

Draw order within an iteration, counters 0..2s+2 for a chemistry with s
minerals: one extraction draw per mineral in lexicographic mineral order,
one processing draw per mineral in the same order, then battery, vehicle,
market.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import EmptyChoiceError
from .model import BatteryChemistry, Phase, SupplyNetwork

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer: bijective avalanche mix on 64 bits."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def u01(seed: int, iteration: int, counter: int) -> float:
    """Uniform in [0, 1) for one (seed, iteration, counter) triple.

    Top 53 bits of the mixed state scaled by 2^-53, matching the mantissa
    width of a double so every representable value is equally likely.
    """
    z = mix64(seed & MASK64)
    z = mix64((z + (iteration * GAMMA)) & MASK64)
    z = mix64((z + (counter * GAMMA)) & MASK64)
    return (z >> 11) * INV_2_53


@dataclass
class RandomStream:
    """Positioned view into the counter-based generator.

    The uniform sequence for a given (master_seed, iteration_index) is a
    pure function of those values; the draw counter advances as draws are
    consumed and never depends on other iterations.
    """

    master_seed: int
    iteration_index: int = 0
    draw_counter: int = 0

    def next_uniform(self) -> float:
        u = u01(self.master_seed, self.iteration_index, self.draw_counter)
        self.draw_counter += 1
        return u

    def at(self, iteration_index: int) -> "RandomStream":
        return RandomStream(self.master_seed, iteration_index, 0)


def sample_index(cdf: Sequence[float], u: float) -> int:
    """First index j with u <= cdf[j]. The boundary is inclusive."""
    if len(cdf) == 0:
        raise EmptyChoiceError("empty cdf")
    for j, threshold in enumerate(cdf):
        if u <= threshold:
            return j
    return len(cdf) - 1  # unreachable once the final cdf value is pinned to 1


def sample_conditional_index(network: SupplyNetwork, phase: Phase, given: str, u: float) -> int:
    """First-match index within the option row conditioned on ``given``."""
    row = network.conditional_table(phase, given)
    return sample_index(row.cdf, u)


@dataclass(frozen=True)
class Scenario:
    """One sampled supply chain: a node per decision in every phase."""

    chemistry: str
    extraction: Mapping[str, str]
    processing: Mapping[str, str]
    battery: str
    vehicle: str
    market: str
    iteration_index: int = 0

    def path(self, mineral: str) -> tuple[str, str, str, str, str]:
        """The five nodes one mineral's mass travels through."""
        return (
            self.extraction[mineral],
            self.processing[mineral],
            self.battery,
            self.vehicle,
            self.market,
        )


def draw_count(chemistry: BatteryChemistry) -> int:
    """Uniform draws consumed per iteration: 2s + 3 for s minerals."""
    return 2 * len(chemistry.minerals) + 3


def sample_scenario(
    network: SupplyNetwork,
    chemistry: BatteryChemistry,
    stream: RandomStream,
) -> Scenario:
    """Sample one scenario by walking the decision sequence.

    Independent phases invert their table's cdf directly; vehicle and
    market invert the row conditioned on the previously selected node.
    """
    minerals = chemistry.minerals
    extraction: dict[str, str] = {}
    for mineral in minerals:
        table = network.mineral_table(Phase.EXTRACTION, mineral)
        extraction[mineral] = table.node_ids[sample_index(table.cdf, stream.next_uniform())]
    processing: dict[str, str] = {}
    for mineral in minerals:
        table = network.mineral_table(Phase.PROCESSING, mineral)
        processing[mineral] = table.node_ids[sample_index(table.cdf, stream.next_uniform())]
    b_table = network.battery_table(chemistry.id)
    battery = b_table.node_ids[sample_index(b_table.cdf, stream.next_uniform())]
    v_row = network.conditional_table(Phase.VEHICLE_PRODUCTION, battery)
    vehicle = v_row.node_ids[sample_index(v_row.cdf, stream.next_uniform())]
    m_row = network.conditional_table(Phase.MARKET, vehicle)
    market = m_row.node_ids[sample_index(m_row.cdf, stream.next_uniform())]
    return Scenario(
        chemistry=chemistry.id,
        extraction=extraction,
        processing=processing,
        battery=battery,
        vehicle=vehicle,
        market=market,
        iteration_index=stream.iteration_index,
    )


def sample_scenario_at(
    network: SupplyNetwork,
    chemistry: BatteryChemistry,
    seed: int,
    iteration: int,
) -> Scenario:
    """Sample the scenario of one iteration directly."""
    return sample_scenario(network, chemistry, RandomStream(seed, iteration))
