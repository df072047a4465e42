"""Production-hub location and mineral sourcing optimization.

The problem: pick exactly p hubs from the candidate set, source one option
per mineral subset for every selected hub, pay the sourcing legs plus each
selected hub's legs to every market in the group. Costs are kg e-CO2 per
kWh with cargo mass folded in, so objectives compare directly to the
simulator's per-kWh averages.

Two solvers cross-check each other: solve_exact exploits that the
objective decomposes per hub once the selection is fixed, solve_bnb runs a
branch-and-bound over hub combinations with partial-sum bounds. All
objective arithmetic goes through one evaluator built on math.fsum
(correctly rounded), so equal solutions produce equal floats.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .engine import SimulationResult, _leg_cost_pair, run_simulation
from .errors import DatasetError, InfeasibleError, ParseError
from .model import Phase, SupplyNetwork, Transition

STRUCTURE_KINDS = ("current", "future", "optimized")


@dataclass(frozen=True)
class HubInstance:
    """Cost data for one market group's hub selection problem.

    ``source_cost[j]`` has shape (n_j, alpha): option i of subset j shipped
    to hub k. ``market_cost`` has shape (alpha, beta): hub k to market m.
    """

    hubs: tuple[str, ...]
    markets: tuple[str, ...]
    subsets: tuple[str, ...]
    options: tuple[tuple[str, ...], ...]
    source_cost: tuple[np.ndarray, ...]
    market_cost: np.ndarray
    p: int

    def __post_init__(self):
        alpha = len(self.hubs)
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if len(self.subsets) != len(self.options) or len(self.subsets) != len(self.source_cost):
            raise ValueError("subsets, options, and source_cost must align")
        for j, (opts, cost) in enumerate(zip(self.options, self.source_cost)):
            if len(opts) < 1:
                raise ValueError(f"subset {self.subsets[j]}: no options")
            if cost.shape != (len(opts), alpha):
                raise ValueError(f"subset {self.subsets[j]}: cost shape {cost.shape}")
            if not np.all(np.isfinite(cost)) or np.any(cost < 0):
                raise ValueError(f"subset {self.subsets[j]}: costs must be finite and >= 0")
        if self.market_cost.shape != (alpha, len(self.markets)):
            raise ValueError(f"market cost shape {self.market_cost.shape}")
        if not np.all(np.isfinite(self.market_cost)) or np.any(self.market_cost < 0):
            raise ValueError("market costs must be finite and >= 0")

    @property
    def alpha(self) -> int:
        return len(self.hubs)


@dataclass(frozen=True)
class HubSolution:
    """A feasible selection: p hubs, one sourcing option per (subset, hub)."""

    selected_hubs: tuple[str, ...]
    sourcing: Mapping[tuple[str, str], str]  # (hub id, subset) -> option node id
    objective: float
    nodes_evaluated: int = 0


def hub_cost(instance: HubInstance, k: int, sourcing_idx: Sequence[int]) -> float:
    """Cost of hub k given one sourcing option index per subset."""
    terms = [float(instance.source_cost[j][sourcing_idx[j], k]) for j in range(len(instance.subsets))]
    terms.extend(float(c) for c in instance.market_cost[k])
    return math.fsum(terms)


def evaluate(instance: HubInstance, hub_indices: Sequence[int],
             sourcing_idx: Mapping[tuple[int, int], int]) -> float:
    """Canonical objective: fsum of per-hub costs, hubs in index order."""
    costs = []
    for k in sorted(hub_indices):
        per_subset = [sourcing_idx[(k, j)] for j in range(len(instance.subsets))]
        costs.append(hub_cost(instance, k, per_subset))
    return math.fsum(costs)


def _argmin_sourcing(instance: HubInstance, k: int) -> list[int]:
    """Lowest-cost option per subset for hub k, lowest index on ties."""
    picks = []
    for j in range(len(instance.subsets)):
        col = instance.source_cost[j][:, k]
        best = 0
        for i in range(1, col.shape[0]):
            if col[i] < col[best]:
                best = i
        picks.append(best)
    return picks


def _hub_scores(instance: HubInstance) -> list[float]:
    """h_k: hub k's cost under its own best sourcing (plus market legs)."""
    return [hub_cost(instance, k, _argmin_sourcing(instance, k)) for k in range(instance.alpha)]


def _solution_from_indices(instance: HubInstance, hub_indices: Sequence[int],
                           nodes_evaluated: int) -> HubSolution:
    selected = sorted(hub_indices)
    sourcing_idx: dict[tuple[int, int], int] = {}
    sourcing_ids: dict[tuple[str, str], str] = {}
    for k in selected:
        picks = _argmin_sourcing(instance, k)
        for j, i in enumerate(picks):
            sourcing_idx[(k, j)] = i
            sourcing_ids[(instance.hubs[k], instance.subsets[j])] = instance.options[j][i]
    return HubSolution(
        selected_hubs=tuple(instance.hubs[k] for k in selected),
        sourcing=sourcing_ids,
        objective=evaluate(instance, selected, sourcing_idx),
        nodes_evaluated=nodes_evaluated,
    )


def solve_exact(instance: HubInstance) -> HubSolution:
    """Optimal solution via the per-hub decomposition.

    With y fixed, each selected hub independently takes its argmin sourcing
    and pays all market legs, so the optimum is the p smallest h_k. Ties
    break toward the lower hub index.
    """
    if instance.alpha < instance.p:
        raise InfeasibleError(f"need {instance.p} hubs, only {instance.alpha} candidates")
    scores = _hub_scores(instance)
    order = sorted(range(instance.alpha), key=lambda k: (scores[k], k))
    return _solution_from_indices(instance, order[:instance.p], nodes_evaluated=instance.alpha)


def solve_bnb(instance: HubInstance) -> HubSolution:
    """Branch-and-bound over hub combinations; cross-checks solve_exact.

    Depth-first in lexicographic order. The bound for a partial selection
    is its hubs' h_k plus the smallest remaining h_k needed to complete it;
    fsum keeps bounds exactly monotone so pruning at bound >= incumbent
    never cuts a strictly better leaf. Telemetry counts evaluated leaves,
    which never exceeds C(alpha, p).
    """
    if instance.alpha < instance.p:
        raise InfeasibleError(f"need {instance.p} hubs, only {instance.alpha} candidates")
    scores = _hub_scores(instance)
    alpha, p = instance.alpha, instance.p

    best_z = math.inf
    best_sel: Optional[list[int]] = None
    leaves = 0

    # suffix_sorted[k] = sorted h scores of hubs with index >= k
    suffix_sorted: list[list[float]] = [[] for _ in range(alpha + 1)]
    for k in range(alpha - 1, -1, -1):
        suffix_sorted[k] = sorted(suffix_sorted[k + 1] + [scores[k]])

    def descend(next_k: int, chosen: list[int]) -> None:
        nonlocal best_z, best_sel, leaves
        if len(chosen) == p:
            leaves += 1
            z = math.fsum(scores[k] for k in chosen)
            if z < best_z:
                best_z = z
                best_sel = list(chosen)
            return
        need = p - len(chosen)
        for k in range(next_k, alpha - need + 1):
            partial = [scores[c] for c in chosen] + [scores[k]]
            rest = suffix_sorted[k + 1][: need - 1]
            bound = math.fsum(partial + rest)
            if bound >= best_z:
                continue
            chosen.append(k)
            descend(k + 1, chosen)
            chosen.pop()

    descend(0, [])
    if best_sel is None:  # all pruned against the inf incumbent is impossible,
        # but a fully degenerate cost of inf would stop here
        raise InfeasibleError("no feasible hub selection found")
    return _solution_from_indices(instance, best_sel, nodes_evaluated=leaves)


def validate_solution(instance: HubInstance, solution: HubSolution) -> None:
    """Independent feasibility check; raises ValueError on any violation."""
    if len(solution.selected_hubs) != instance.p:
        raise ValueError(f"expected {instance.p} hubs, got {len(solution.selected_hubs)}")
    if len(set(solution.selected_hubs)) != len(solution.selected_hubs):
        raise ValueError("duplicate hubs selected")
    hub_index = {h: k for k, h in enumerate(instance.hubs)}
    for h in solution.selected_hubs:
        if h not in hub_index:
            raise ValueError(f"unknown hub {h!r}")
    selected = set(solution.selected_hubs)
    seen: set[tuple[str, str]] = set()
    sourcing_idx: dict[tuple[int, int], int] = {}
    for (hub, subset), option in solution.sourcing.items():
        if hub not in selected:
            raise ValueError(f"sourcing assigned to unselected hub {hub!r}")
        if subset not in instance.subsets:
            raise ValueError(f"unknown subset {subset!r}")
        j = instance.subsets.index(subset)
        if option not in instance.options[j]:
            raise ValueError(f"option {option!r} not available for subset {subset!r}")
        seen.add((hub, subset))
        sourcing_idx[(hub_index[hub], j)] = instance.options[j].index(option)
    for hub in selected:
        for subset in instance.subsets:
            if (hub, subset) not in seen:
                raise ValueError(f"hub {hub!r} missing sourcing for subset {subset!r}")
    recomputed = evaluate(instance, [hub_index[h] for h in selected], sourcing_idx)
    if recomputed != solution.objective:
        raise ValueError(f"objective {solution.objective!r} != recomputed {recomputed!r}")


# -- instance construction from a network ------------------------------------


def _group_weights(network: SupplyNetwork, markets: Sequence[str]) -> tuple[dict[str, float], dict[str, float]]:
    """(chemistry share, market demand share) by sales GWh within the group."""
    market_set = set(markets)
    chem_gwh: dict[str, float] = {}
    market_gwh: dict[str, float] = {m: 0.0 for m in markets}
    for sale in network.sales:
        if sale.market in market_set:
            chem_gwh[sale.chemistry] = chem_gwh.get(sale.chemistry, 0.0) + sale.gwh
            market_gwh[sale.market] += sale.gwh
    total = sum(chem_gwh.values())
    if total <= 0:
        raise InfeasibleError(f"no sales volume in market group {sorted(market_set)}")
    return (
        {chem: g / total for chem, g in sorted(chem_gwh.items())},
        {m: market_gwh[m] / total for m in markets},
    )


def build_instance(
    network: SupplyNetwork,
    markets: Sequence[str],
    candidate_hubs: Sequence[str],
    p: int = 2,
) -> HubInstance:
    """Build the cost matrices for one market group.

    Cargo masses are the group's sales-weighted chemistry mix: subset j is
    a mineral with its weighted processed mass, sourced from that
    mineral's processing locations; the hub-to-market leg carries the
    weighted vehicle mass. Distances resolve exactly like simulation legs.
    """
    if not markets:
        raise ValueError("empty market group")
    if not candidate_hubs:
        raise InfeasibleError("empty candidate hub set")
    for node_id in list(markets) + list(candidate_hubs):
        if node_id not in network.nodes:
            raise DatasetError(f"unknown node {node_id!r} in hub scenario")
    chem_share, _ = _group_weights(network, markets)

    mineral_mass: dict[str, float] = {}
    vehicle_mass = 0.0
    for chem_id, share in chem_share.items():
        chem = network.chemistries[chem_id]
        vehicle_mass += share * chem.vehicle_mass_per_kwh
        for mineral, mass in chem.processed_mass.items():
            mineral_mass[mineral] = mineral_mass.get(mineral, 0.0) + share * mass

    subsets = tuple(sorted(m for m, w in mineral_mass.items() if w > 0))
    options: list[tuple[str, ...]] = []
    source_cost: list[np.ndarray] = []
    hubs = tuple(candidate_hubs)
    for mineral in subsets:
        table = network.mineral_table(Phase.PROCESSING, mineral)
        opts = table.node_ids
        cost = np.zeros((len(opts), len(hubs)))
        for i, src in enumerate(opts):
            for k, hub in enumerate(hubs):
                land, sea = _leg_cost_pair(network, src, hub, Transition.PB, mineral_mass[mineral])
                cost[i, k] = land + sea
        options.append(opts)
        source_cost.append(cost)

    market_cost = np.zeros((len(hubs), len(markets)))
    for k, hub in enumerate(hubs):
        for m, market in enumerate(markets):
            land, sea = _leg_cost_pair(network, hub, market, Transition.VM, vehicle_mass)
            market_cost[k, m] = land + sea

    return HubInstance(
        hubs=hubs,
        markets=tuple(markets),
        subsets=subsets,
        options=tuple(options),
        source_cost=tuple(source_cost),
        market_cost=market_cost,
        p=p,
    )


def optimized_average(instance: HubInstance, solution: HubSolution,
                      demand_share: Mapping[str, float]) -> float:
    """Per-kWh cost of the solved structure.

    Each kWh passes one hub (averaged across the p hubs) and reaches one
    market (weighted by demand share), so the market term here is the
    demand-weighted row rather than the objective's all-markets sum.
    """
    hub_index = {h: k for k, h in enumerate(instance.hubs)}
    per_hub = []
    for hub in solution.selected_hubs:
        k = hub_index[hub]
        terms = []
        for j, subset in enumerate(instance.subsets):
            i = instance.options[j].index(solution.sourcing[(hub, subset)])
            terms.append(float(instance.source_cost[j][i, k]))
        for m, market in enumerate(instance.markets):
            terms.append(demand_share[market] * float(instance.market_cost[k, m]))
        per_hub.append(math.fsum(terms))
    return math.fsum(per_hub) / instance.p


# -- scenario file and structure comparison ----------------------------------


@dataclass(frozen=True)
class HubScenarioSpec:
    """Parsed optimization scenario file."""

    p: int
    market_groups: dict[str, tuple[str, ...]]
    candidates: dict[tuple[str, str], tuple[str, ...]]  # (group, kind) -> hubs
    future_choices: Optional[str]
    future_conditional: Optional[str]

    def group_candidates(self, group: str, kind: str) -> tuple[str, ...]:
        try:
            return self.candidates[(group, kind)]
        except KeyError:
            raise DatasetError(f"no {kind!r} candidate hubs for group {group!r}") from None


def load_hub_scenarios(path: Path | str) -> HubScenarioSpec:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), exc.lineno, exc.msg) from exc
    try:
        p = int(raw.get("p", 2))
        groups = {name: tuple(members) for name, members in raw["market_groups"].items()}
        candidates: dict[tuple[str, str], tuple[str, ...]] = {}
        for group, kinds in raw["candidate_hubs"].items():
            for kind, hubs in kinds.items():
                if kind not in STRUCTURE_KINDS:
                    raise ParseError(str(path), 1, f"unknown structure kind {kind!r}")
                candidates[(group, kind)] = tuple(hubs)
        overrides = raw.get("future_overrides", {})
        return HubScenarioSpec(
            p=p,
            market_groups=groups,
            candidates=candidates,
            future_choices=overrides.get("choices"),
            future_conditional=overrides.get("conditional_choices"),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(str(path), 1, f"bad scenario file: {exc}") from None


@dataclass(frozen=True)
class StructureComparison:
    """Average kg e-CO2 per kWh per market group under each structure."""

    groups: tuple[str, ...]
    averages: dict[tuple[str, str], float]  # (group, kind) -> kg/kWh
    solutions: dict[str, HubSolution]  # optimized solution per group

    def column(self, kind: str) -> dict[str, float]:
        return {g: self.averages[(g, kind)] for g in self.groups}


def _group_mc_average(network: SupplyNetwork, results: Mapping[str, SimulationResult],
                      markets: Sequence[str]) -> float:
    """Sales-weighted conditional mean over the group's (market, chemistry) cells."""
    weighted = 0.0
    volume = 0.0
    market_set = set(markets)
    for sale in network.sales:
        if sale.market not in market_set or sale.gwh <= 0:
            continue
        result = results.get(sale.chemistry)
        if result is None:
            continue
        count, mean = result.market_means().get(sale.market, (0, 0.0))
        if count == 0:
            continue
        weighted += sale.gwh * mean
        volume += sale.gwh
    if volume == 0:
        raise InfeasibleError(f"no sampled demand in market group {sorted(market_set)}")
    return weighted / volume


def compare_structures(
    network: SupplyNetwork,
    future_network: SupplyNetwork,
    spec: HubScenarioSpec,
    iterations: int = 100_000,
    seed: int = 0,
    workers: int = 1,
    backend: Optional[str] = None,
) -> StructureComparison:
    """Current/Future columns from Monte Carlo, Optimized from solve_exact.

    Current and Future run the engine on the respective networks and weight
    conditional market means by sales; Optimized solves the hub instance on
    the group's optimized candidate set and reports its per-kWh average.
    """
    chem_ids = sorted({s.chemistry for s in network.sales if s.gwh > 0})
    current_runs = {c: run_simulation(network, c, iterations, seed, workers, backend)
                    for c in chem_ids}
    future_runs = {c: run_simulation(future_network, c, iterations, seed, workers, backend)
                   for c in chem_ids}

    averages: dict[tuple[str, str], float] = {}
    solutions: dict[str, HubSolution] = {}
    groups = tuple(sorted(spec.market_groups))
    for group in groups:
        markets = spec.market_groups[group]
        averages[(group, "current")] = _group_mc_average(network, current_runs, markets)
        averages[(group, "future")] = _group_mc_average(future_network, future_runs, markets)
        instance = build_instance(network, markets, spec.group_candidates(group, "optimized"), spec.p)
        solution = solve_exact(instance)
        check = solve_bnb(instance)
        if check.objective != solution.objective:
            raise RuntimeError(
                f"solver disagreement on group {group}: {solution.objective} vs {check.objective}"
            )
        validate_solution(instance, solution)
        _, demand_share = _group_weights(network, markets)
        averages[(group, "optimized")] = optimized_average(instance, solution, demand_share)
        solutions[group] = solution
    return StructureComparison(groups=groups, averages=averages, solutions=solutions)


def enumerate_assignments(instance: HubInstance) -> int:
    """Size of the full selection x sourcing space (for telemetry/tests)."""
    per_selection = 1
    for opts in instance.options:
        per_selection *= len(opts) ** instance.p
    return math.comb(instance.alpha, instance.p) * per_selection
