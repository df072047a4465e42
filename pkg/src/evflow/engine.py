"""Simulation engine: compiles a network+chemistry into flat arrays and
drives the sampling kernels over iteration ranges.

Determinism contract: results depend only on (plan, seed, iteration
count). Work is split into fixed-size chunks regardless of worker count,
each chunk's rows land in a preallocated slice of the master arrays, and
every aggregate (means, histograms, ledgers, breakdowns) is derived from
the assembled arrays on the calling process. Two runs with different
``workers`` values therefore produce identical bytes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .emissions import (
    DEFAULT_BIN_WIDTH,
    DEFAULT_CHECKPOINTS,
    ConvergenceReport,
    Pmf,
    _leg_costs,
    build_pmf,
    cumulative_average,
)
from .ingest import resolve_distance
from .massflow import DEFAULT_BASIS_KWH, FlowLedger, ResilienceReport, resilience_report
from .model import (
    BatteryChemistry,
    KG_PER_TONNE,
    ManufacturerKind,
    Phase,
    SupplyNetwork,
    Transition,
)
from .sampler import Scenario

CHUNK_SIZE = 1 << 16  # fixed so chunk boundaries never depend on worker count


@dataclass(frozen=True)
class KernelPlan:
    """Flat-array form of one (network, chemistry) pair.

    cdf arrays drive index selection; the land/sea cost arrays hold the
    precomputed kg e-CO2 per kWh of every possible leg, so a kernel
    iteration is pure lookups and additions. Conditional phases use a flat
    option space: v_flat enumerates every (battery row, vehicle option)
    pair, m_flat every (v_flat row, market option) pair.
    """

    chemistry_id: str
    n_minerals: int
    minerals: tuple[str, ...]
    e_cdf_flat: np.ndarray
    e_off: np.ndarray
    e_node_ids: tuple[tuple[str, ...], ...]
    p_cdf_flat: np.ndarray
    p_off: np.ndarray
    p_node_ids: tuple[tuple[str, ...], ...]
    p_width: np.ndarray
    b_cdf: np.ndarray
    b_node_ids: tuple[str, ...]
    v_cdf_flat: np.ndarray
    v_off: np.ndarray
    v_flat_nodes: tuple[str, ...]
    v_flat_owner: np.ndarray
    m_cdf_flat: np.ndarray
    m_off: np.ndarray
    m_flat_nodes: tuple[str, ...]
    m_flat_owner: np.ndarray
    ep_land: np.ndarray
    ep_sea: np.ndarray
    ep_mat_off: np.ndarray
    pb_land: np.ndarray
    pb_sea: np.ndarray
    pb_mat_off: np.ndarray
    bv_land: np.ndarray
    bv_sea: np.ndarray
    vm_land: np.ndarray
    vm_sea: np.ndarray
    w_e: tuple[float, ...]
    w_p: tuple[float, ...]
    w_b: float
    w_v: float

    @property
    def draw_columns(self) -> int:
        return 2 * self.n_minerals + 3


def _leg_cost_pair(network: SupplyNetwork, origin: str, destination: str,
                   transition: Transition, weight_kg: float) -> tuple[float, float]:
    leg = resolve_distance(network, origin, destination, transition)
    return _leg_costs(weight_kg / KG_PER_TONNE, leg.land_km, leg.sea_km,
                      leg.land_vehicle, leg.sea_vessel, network.factors)


def compile_plan(network: SupplyNetwork, chemistry: BatteryChemistry) -> KernelPlan:
    """Precompute cdfs and per-leg costs for every reachable option."""
    minerals = chemistry.minerals
    ns = len(minerals)

    e_tables = [network.mineral_table(Phase.EXTRACTION, m) for m in minerals]
    p_tables = [network.mineral_table(Phase.PROCESSING, m) for m in minerals]
    b_table = network.battery_table(chemistry.id)

    def flat_cdf(tables):
        off = np.zeros(len(tables) + 1, dtype=np.int64)
        parts = []
        for i, t in enumerate(tables):
            parts.append(np.asarray(t.cdf, dtype=np.float64))
            off[i + 1] = off[i] + len(t.cdf)
        return np.concatenate(parts) if parts else np.zeros(0), off

    e_cdf_flat, e_off = flat_cdf(e_tables)
    p_cdf_flat, p_off = flat_cdf(p_tables)
    b_cdf = np.asarray(b_table.cdf, dtype=np.float64)
    b_nodes = b_table.node_ids

    v_rows = [network.conditional_table(Phase.VEHICLE_PRODUCTION, b) for b in b_nodes]
    v_cdf_flat, v_off = flat_cdf(v_rows)
    v_flat_nodes: list[str] = []
    v_flat_owner: list[int] = []
    for bi, row in enumerate(v_rows):
        for node in row.node_ids:
            v_flat_nodes.append(node)
            v_flat_owner.append(bi)

    m_rows = [network.conditional_table(Phase.MARKET, v) for v in v_flat_nodes]
    m_cdf_flat, m_off = flat_cdf(m_rows)
    m_flat_nodes: list[str] = []
    m_flat_owner: list[int] = []
    for vi, row in enumerate(m_rows):
        for node in row.node_ids:
            m_flat_nodes.append(node)
            m_flat_owner.append(vi)

    w_e = tuple(chemistry.mineral_mass[m] for m in minerals)
    w_p = tuple(chemistry.processed_mass[m] for m in minerals)

    ep_land_parts, ep_sea_parts = [], []
    ep_mat_off = np.zeros(ns, dtype=np.int64)
    pos = 0
    for i, m in enumerate(minerals):
        ep_mat_off[i] = pos
        land = np.zeros(len(e_tables[i].options) * len(p_tables[i].options))
        sea = np.zeros_like(land)
        k = 0
        for e_node in e_tables[i].node_ids:
            for p_node in p_tables[i].node_ids:
                land[k], sea[k] = _leg_cost_pair(network, e_node, p_node, Transition.EP, w_e[i])
                k += 1
        ep_land_parts.append(land)
        ep_sea_parts.append(sea)
        pos += k

    pb_land_parts, pb_sea_parts = [], []
    pb_mat_off = np.zeros(ns, dtype=np.int64)
    pos = 0
    for i, m in enumerate(minerals):
        pb_mat_off[i] = pos
        land = np.zeros(len(p_tables[i].options) * len(b_nodes))
        sea = np.zeros_like(land)
        k = 0
        for p_node in p_tables[i].node_ids:
            for b_node in b_nodes:
                land[k], sea[k] = _leg_cost_pair(network, p_node, b_node, Transition.PB, w_p[i])
                k += 1
        pb_land_parts.append(land)
        pb_sea_parts.append(sea)
        pos += k

    bv_land = np.zeros(len(v_flat_nodes))
    bv_sea = np.zeros_like(bv_land)
    for vi, v_node in enumerate(v_flat_nodes):
        b_node = b_nodes[v_flat_owner[vi]]
        bv_land[vi], bv_sea[vi] = _leg_cost_pair(
            network, b_node, v_node, Transition.BV, chemistry.battery_mass_per_kwh)

    vm_land = np.zeros(len(m_flat_nodes))
    vm_sea = np.zeros_like(vm_land)
    for mi, m_node in enumerate(m_flat_nodes):
        v_node = v_flat_nodes[m_flat_owner[mi]]
        vm_land[mi], vm_sea[mi] = _leg_cost_pair(
            network, v_node, m_node, Transition.VM, chemistry.vehicle_mass_per_kwh)

    return KernelPlan(
        chemistry_id=chemistry.id,
        n_minerals=ns,
        minerals=minerals,
        e_cdf_flat=e_cdf_flat,
        e_off=e_off,
        e_node_ids=tuple(t.node_ids for t in e_tables),
        p_cdf_flat=p_cdf_flat,
        p_off=p_off,
        p_node_ids=tuple(t.node_ids for t in p_tables),
        p_width=np.array([len(t.options) for t in p_tables], dtype=np.int64),
        b_cdf=b_cdf,
        b_node_ids=b_nodes,
        v_cdf_flat=v_cdf_flat,
        v_off=v_off,
        v_flat_nodes=tuple(v_flat_nodes),
        v_flat_owner=np.array(v_flat_owner, dtype=np.int64),
        m_cdf_flat=m_cdf_flat,
        m_off=m_off,
        m_flat_nodes=tuple(m_flat_nodes),
        m_flat_owner=np.array(m_flat_owner, dtype=np.int64),
        ep_land=np.concatenate(ep_land_parts),
        ep_sea=np.concatenate(ep_sea_parts),
        ep_mat_off=ep_mat_off,
        pb_land=np.concatenate(pb_land_parts),
        pb_sea=np.concatenate(pb_sea_parts),
        pb_mat_off=pb_mat_off,
        bv_land=bv_land,
        bv_sea=bv_sea,
        vm_land=vm_land,
        vm_sea=vm_sea,
        w_e=w_e,
        w_p=w_p,
        w_b=chemistry.battery_mass_per_kwh,
        w_v=chemistry.vehicle_mass_per_kwh,
    )


def _chunk_task(args):
    plan, backend_name, seed, start, count = args
    kernels, _ = _backend.get_backend(backend_name)
    return start, kernels.simulate_chunk(plan, seed, start, count)


@dataclass
class SimulationResult:
    """Assembled per-iteration outputs of one run, plus derived reports."""

    network: SupplyNetwork
    plan: KernelPlan
    seed: int
    iterations: int
    backend: str
    workers: int
    idx: np.ndarray
    ep: np.ndarray
    pb: np.ndarray
    bv: np.ndarray
    vm: np.ndarray
    land: np.ndarray
    sea: np.ndarray
    total: np.ndarray
    _ledger: Optional[FlowLedger] = field(default=None, repr=False)

    @property
    def chemistry_id(self) -> str:
        return self.plan.chemistry_id

    def mean(self) -> float:
        return float(np.sum(self.total) / self.iterations)

    def convergence(self, checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS) -> ConvergenceReport:
        return cumulative_average(self.total, checkpoints)

    def pmf(self, bin_width: float = DEFAULT_BIN_WIDTH, series: str = "total") -> Pmf:
        values = {
            "total": self.total, "EP": self.ep, "PB": self.pb,
            "BV": self.bv, "VM": self.vm,
        }[series]
        return build_pmf(values, bin_width)

    def scenario_at(self, iteration: int) -> Scenario:
        """Reconstruct the sampled scenario of one iteration from indices."""
        plan = self.plan
        row = self.idx[iteration]
        ns = plan.n_minerals
        return Scenario(
            chemistry=plan.chemistry_id,
            extraction={m: plan.e_node_ids[i][row[i]] for i, m in enumerate(plan.minerals)},
            processing={m: plan.p_node_ids[i][row[ns + i]] for i, m in enumerate(plan.minerals)},
            battery=plan.b_node_ids[row[2 * ns]],
            vehicle=plan.v_flat_nodes[row[2 * ns + 1]],
            market=plan.m_flat_nodes[row[2 * ns + 2]],
            iteration_index=iteration,
        )

    # -- mass flow -----------------------------------------------------

    def ledger(self, basis_kwh: float = DEFAULT_BASIS_KWH) -> FlowLedger:
        """O-D ledger rebuilt from the index matrix by exact counting."""
        if self._ledger is not None and self._ledger.basis_kwh == basis_kwh:
            return self._ledger
        plan = self.plan
        ns = plan.n_minerals
        ledger = FlowLedger(regions=self.network.node_regions(), basis_kwh=basis_kwh)
        sums: dict[tuple[str, str, Transition], float] = {}
        for i in range(ns):
            width = int(plan.p_width[i])
            flat = self.idx[:, i].astype(np.int64) * width + self.idx[:, ns + i]
            counts = np.bincount(flat, minlength=len(plan.e_node_ids[i]) * width)
            for k, count in enumerate(counts):
                if count:
                    key = (plan.e_node_ids[i][k // width], plan.p_node_ids[i][k % width], Transition.EP)
                    sums[key] = sums.get(key, 0.0) + int(count) * plan.w_e[i]
        nb = len(plan.b_node_ids)
        for i in range(ns):
            flat = self.idx[:, ns + i].astype(np.int64) * nb + self.idx[:, 2 * ns]
            counts = np.bincount(flat, minlength=int(plan.p_width[i]) * nb)
            for k, count in enumerate(counts):
                if count:
                    key = (plan.p_node_ids[i][k // nb], plan.b_node_ids[k % nb], Transition.PB)
                    sums[key] = sums.get(key, 0.0) + int(count) * plan.w_p[i]
        v_counts = np.bincount(self.idx[:, 2 * ns + 1], minlength=len(plan.v_flat_nodes))
        for vi, count in enumerate(v_counts):
            if count:
                key = (plan.b_node_ids[plan.v_flat_owner[vi]], plan.v_flat_nodes[vi], Transition.BV)
                sums[key] = sums.get(key, 0.0) + int(count) * plan.w_b
        m_counts = np.bincount(self.idx[:, 2 * ns + 2], minlength=len(plan.m_flat_nodes))
        for mi, count in enumerate(m_counts):
            if count:
                key = (plan.v_flat_nodes[plan.m_flat_owner[mi]], plan.m_flat_nodes[mi], Transition.VM)
                sums[key] = sums.get(key, 0.0) + int(count) * plan.w_v
        ledger.merge_sums(sums, self.iterations)
        self._ledger = ledger
        return ledger

    def resilience(self) -> ResilienceReport:
        return resilience_report(self.ledger())

    # -- breakdowns ------------------------------------------------------

    def leg_means(self) -> dict[Transition, float]:
        n = self.iterations
        return {
            Transition.EP: float(np.sum(self.ep) / n),
            Transition.PB: float(np.sum(self.pb) / n),
            Transition.BV: float(np.sum(self.bv) / n),
            Transition.VM: float(np.sum(self.vm) / n),
        }

    def mode_means(self) -> dict[str, float]:
        n = self.iterations
        return {"land": float(np.sum(self.land) / n), "sea": float(np.sum(self.sea) / n)}

    def market_column(self) -> np.ndarray:
        """Market node id index (into sorted market list) per iteration."""
        markets = self.market_ids()
        lookup = {m: i for i, m in enumerate(markets)}
        code = np.array([lookup[node] for node in self.plan.m_flat_nodes], dtype=np.int64)
        return code[self.idx[:, 2 * self.plan.n_minerals + 2]]

    def market_ids(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.plan.m_flat_nodes)))

    def market_means(self) -> dict[str, tuple[int, float]]:
        """Per market: (record count, conditional mean total)."""
        col = self.market_column()
        out: dict[str, tuple[int, float]] = {}
        for i, market in enumerate(self.market_ids()):
            mask = col == i
            count = int(np.sum(mask))
            mean = float(np.sum(self.total[mask]) / count) if count else 0.0
            out[market] = (count, mean)
        return out

    def manufacturer_means(self, kind: ManufacturerKind) -> dict[str, tuple[int, float]]:
        """Per manufacturer of one kind: (record count, conditional mean)."""
        plan = self.plan
        ns = plan.n_minerals
        if kind is ManufacturerKind.BATTERY_MAKER:
            option_nodes: tuple[str, ...] = plan.b_node_ids
            col = self.idx[:, 2 * ns]
        else:
            option_nodes = plan.v_flat_nodes
            col = self.idx[:, 2 * ns + 1]
        out: dict[str, tuple[int, float]] = {}
        for man_id in sorted(self.network.manufacturers):
            man = self.network.manufacturers[man_id]
            if man.kind is not kind:
                continue
            member = np.array([node in man.nodes for node in option_nodes], dtype=bool)
            mask = member[col]
            count = int(np.sum(mask))
            mean = float(np.sum(self.total[mask]) / count) if count else 0.0
            out[man_id] = (count, mean)
        return out


def run_simulation(
    network: SupplyNetwork,
    chemistry: BatteryChemistry | str,
    iterations: int,
    seed: int,
    workers: int = 1,
    backend: Optional[str] = None,
    chunk_size: int = CHUNK_SIZE,
) -> SimulationResult:
    """Run one chemistry for ``iterations`` scenarios.

    ``workers`` > 1 fans chunks out to processes; outputs are identical to
    the single-process run because chunking is fixed and assembly is by
    iteration range.
    """
    if isinstance(chemistry, str):
        chemistry = network.chemistries[chemistry]
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    plan = compile_plan(network, chemistry)
    kernels, backend_name = _backend.get_backend(backend)

    idx = np.empty((iterations, plan.draw_columns), dtype=np.int32)
    vectors = {name: np.empty(iterations, dtype=np.float64)
               for name in ("ep", "pb", "bv", "vm", "land", "sea", "total")}

    starts = list(range(0, iterations, chunk_size))
    tasks = [(plan, backend_name, seed, s, min(chunk_size, iterations - s)) for s in starts]

    def place(start: int, out: dict[str, np.ndarray]) -> None:
        stop = start + out["total"].shape[0]
        idx[start:stop] = out["idx"]
        for name, vec in vectors.items():
            vec[start:stop] = out[name]

    if workers <= 1 or len(tasks) == 1:
        for task in tasks:
            start, out = _chunk_task(task)
            place(start, out)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for start, out in pool.map(_chunk_task, tasks):
                place(start, out)

    return SimulationResult(
        network=network,
        plan=plan,
        seed=seed,
        iterations=iterations,
        backend=backend_name,
        workers=workers,
        idx=idx,
        **vectors,
    )
