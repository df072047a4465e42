"""Independent reference implementations used to check the fast paths.

Everything here favours clarity over speed: plain nested loops, explicit
probability products, exhaustive enumeration. Tests compare the package
against these.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from evflow.emissions import scenario_emissions
from evflow.hubopt import HubInstance, evaluate, hub_cost
from evflow.model import Phase
from evflow.sampler import Scenario


def enumerate_scenarios(network, chemistry):
    """Yield every (scenario, probability) pair, probabilities from the tables."""
    minerals = chemistry.minerals
    e_tables = [network.mineral_table(Phase.EXTRACTION, m) for m in minerals]
    p_tables = [network.mineral_table(Phase.PROCESSING, m) for m in minerals]
    b_table = network.battery_table(chemistry.id)

    e_choices = [t.options for t in e_tables]
    p_choices = [t.options for t in p_tables]
    for e_pick in itertools.product(*e_choices):
        for p_pick in itertools.product(*p_choices):
            for b_node, b_prob in b_table.options:
                v_row = network.conditional_table(Phase.VEHICLE_PRODUCTION, b_node)
                for v_node, v_prob in v_row.options:
                    m_row = network.conditional_table(Phase.MARKET, v_node)
                    for m_node, m_prob in m_row.options:
                        prob = math.prod(
                            [p for _, p in e_pick] + [p for _, p in p_pick]
                            + [b_prob, v_prob, m_prob]
                        )
                        scenario = Scenario(
                            chemistry=chemistry.id,
                            extraction=dict(zip(minerals, (n for n, _ in e_pick))),
                            processing=dict(zip(minerals, (n for n, _ in p_pick))),
                            battery=b_node,
                            vehicle=v_node,
                            market=m_node,
                        )
                        yield scenario, prob


def exact_expected_total(network, chemistry):
    terms = [prob * scenario_emissions(network, s, chemistry).total
             for s, prob in enumerate_scenarios(network, chemistry)]
    return math.fsum(terms)


def scenario_code(plan, scenario):
    """Mixed-radix integer key for a scenario, consistent with result_codes."""
    digits = []
    bases = []
    for i, mineral in enumerate(plan.minerals):
        digits.append(plan.e_node_ids[i].index(scenario.extraction[mineral]))
        bases.append(len(plan.e_node_ids[i]))
    for i, mineral in enumerate(plan.minerals):
        digits.append(plan.p_node_ids[i].index(scenario.processing[mineral]))
        bases.append(len(plan.p_node_ids[i]))
    b_idx = plan.b_node_ids.index(scenario.battery)
    digits.append(b_idx)
    bases.append(len(plan.b_node_ids))

    v_start = int(plan.v_off[b_idx])
    v_end = int(plan.v_off[b_idx + 1])
    v_flat = v_start + list(plan.v_flat_nodes[v_start:v_end]).index(scenario.vehicle)
    digits.append(v_flat)
    bases.append(len(plan.v_flat_nodes))

    m_start = int(plan.m_off[v_flat])
    m_end = int(plan.m_off[v_flat + 1])
    m_flat = m_start + list(plan.m_flat_nodes[m_start:m_end]).index(scenario.market)
    digits.append(m_flat)
    bases.append(len(plan.m_flat_nodes))

    code = 0
    for digit, base in zip(digits, bases):
        code = code * base + digit
    return code


def result_codes(result):
    """Vectorized mixed-radix key per simulated iteration."""
    plan = result.plan
    s = plan.n_minerals
    bases = ([len(ids) for ids in plan.e_node_ids]
             + [len(ids) for ids in plan.p_node_ids]
             + [len(plan.b_node_ids), len(plan.v_flat_nodes), len(plan.m_flat_nodes)])
    codes = np.zeros(result.idx.shape[0], dtype=np.int64)
    for col, base in enumerate(bases):
        codes *= base
        codes += result.idx[:, col].astype(np.int64)
    assert result.idx.shape[1] == 2 * s + 3
    return codes


def total_variation(result, network, chemistry):
    """TV distance between the empirical scenario law and the exact one."""
    plan = result.plan
    exact = {}
    for scenario, prob in enumerate_scenarios(network, chemistry):
        exact[scenario_code(plan, scenario)] = prob
    codes = result_codes(result)
    n = len(codes)
    observed, counts = np.unique(codes, return_counts=True)
    emp = dict(zip(observed.tolist(), counts.tolist()))
    keys = set(exact) | set(emp)
    return 0.5 * math.fsum(abs(emp.get(k, 0) / n - exact.get(k, 0.0)) for k in keys)


# -- hub problem oracles ----------------------------------------------


def random_instance(rng, alpha_max=6, j_max=4, n_max=4, beta_max=4):
    alpha = int(rng.integers(1, alpha_max + 1))
    n_subsets = int(rng.integers(1, j_max + 1))
    beta = int(rng.integers(1, beta_max + 1))
    p = int(rng.integers(1, alpha + 1))
    subsets = tuple(f"s{j}" for j in range(n_subsets))
    options = tuple(
        tuple(f"s{j}_o{i}" for i in range(int(rng.integers(1, n_max + 1))))
        for j in range(n_subsets)
    )
    source_cost = tuple(
        np.round(rng.uniform(0.0, 10.0, size=(len(opts), alpha)), 6)
        for opts in options
    )
    market_cost = np.round(rng.uniform(0.0, 10.0, size=(alpha, beta)), 6)
    return HubInstance(
        hubs=tuple(f"h{k}" for k in range(alpha)),
        markets=tuple(f"m{b}" for b in range(beta)),
        subsets=subsets,
        options=options,
        source_cost=source_cost,
        market_cost=market_cost,
        p=p,
    )


def best_by_assignment_enumeration(instance):
    """Cheapest objective by trying every sourcing assignment of every hub."""
    per_hub_best = []
    for k in range(instance.alpha):
        best = None
        best_assign = None
        for assign in itertools.product(*(range(len(o)) for o in instance.options)):
            cost = hub_cost(instance, k, assign)
            if best is None or cost < best:
                best, best_assign = cost, assign
        per_hub_best.append((best, best_assign))

    best_z = None
    for selection in itertools.combinations(range(instance.alpha), instance.p):
        sourcing = {}
        for k in selection:
            for j, i in enumerate(per_hub_best[k][1]):
                sourcing[(k, j)] = i
        z = evaluate(instance, selection, sourcing)
        if best_z is None or z < best_z:
            best_z = z
    return best_z


def best_by_full_cartesian(instance, combo_cap=300_000):
    """Joint enumeration over hub selections x all sourcing combinations.

    Takes no shortcuts at all, so it only works on very small instances;
    returns None when the joint space exceeds combo_cap.
    """
    spaces = [list(itertools.product(*(range(len(o)) for o in instance.options)))
              for _ in range(instance.alpha)]
    per_hub = len(spaces[0]) if spaces else 1
    total = math.comb(instance.alpha, instance.p) * per_hub ** instance.p
    if total > combo_cap:
        return None
    best_z = None
    for selection in itertools.combinations(range(instance.alpha), instance.p):
        for joint in itertools.product(*(spaces[k] for k in selection)):
            sourcing = {}
            for k, assign in zip(selection, joint):
                for j, i in enumerate(assign):
                    sourcing[(k, j)] = i
            z = evaluate(instance, selection, sourcing)
            if best_z is None or z < best_z:
                best_z = z
    return best_z
