"""Acceptance suite: the numbered guarantees this package ships with.

Each test checks one guarantee end to end and prints a single verdict line
(visible even under captured output) with the measured value next to its
threshold, so a plain ``pytest tests/test_acceptance.py -v`` run doubles as
a short report.
"""

import dataclasses
import itertools
import json
import math
import time

import numpy as np
import pytest

from evflow.cli import main
from evflow.engine import run_simulation
from evflow.hubopt import (
    compare_structures,
    load_hub_scenarios,
    solve_bnb,
    solve_exact,
    validate_solution,
)
from evflow.ingest import DatasetManifest, bundled_manifest_path, count_scenarios, load_network
from evflow.massflow import resilience_report

import netbuild
import oracles


def _check(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def bundled_nmc_run(bundled_network):
    return run_simulation(bundled_network, "NMC", 10_000, 0)


def test_01_sampled_distribution_matches_enumeration(tiny_network, capsys):
    started = time.monotonic()
    result = run_simulation(tiny_network, "T1", 1_000_000, 42, workers=1)
    tv = oracles.total_variation(result, tiny_network, tiny_network.chemistries["T1"])
    elapsed = time.monotonic() - started
    _check(capsys, "total variation at 1e6 draws",
           tv <= 0.005 and elapsed <= 60.0,
           f"TV={tv:.6f} (limit 0.005), {elapsed:.1f}s (limit 60s)")


def test_02_mean_within_four_sigma_of_exact_expectation(tiny_network, capsys):
    exact = oracles.exact_expected_total(tiny_network, tiny_network.chemistries["T1"])
    result = run_simulation(tiny_network, "T1", 100_000, 42)
    gap = abs(result.mean() - exact)
    bound = 4.0 * float(np.std(result.total, ddof=1)) / math.sqrt(result.iterations)
    _check(capsys, "mean vs enumerated expectation",
           gap <= bound, f"|{result.mean():.8f} - {exact:.8f}| = {gap:.2e} <= {bound:.2e}")


def test_03_bundled_means_stable_from_1e4_to_1e5(bundled_network, capsys):
    started = time.monotonic()
    worst = 0.0
    details = []
    for chem in sorted(bundled_network.chemistries):
        result = run_simulation(bundled_network, chem, 100_000, 0)
        (_, m4), (_, m5) = result.convergence((10_000, 100_000)).checkpoints
        rel = abs(m5 - m4) / m4
        worst = max(worst, rel)
        details.append(f"{chem} {rel:.4f}")
    elapsed = time.monotonic() - started
    _check(capsys, "bundled convergence drift",
           worst <= 0.02 and elapsed <= 300.0,
           f"max rel change {worst:.4f} (limit 0.02) [{', '.join(details)}], {elapsed:.0f}s")


def test_04_leg_and_mode_splits_reconstruct_totals(bundled_nmc_run, capsys):
    r = bundled_nmc_run
    leg_residual = np.max(np.abs((r.ep + r.pb + r.bv + r.vm) - r.total) / r.total)
    mode_residual = np.max(np.abs((r.land + r.sea) - r.total) / r.total)
    worst = max(float(leg_residual), float(mode_residual))
    _check(capsys, "per-record decomposition residual",
           worst <= 1e-12,
           f"legs {float(leg_residual):.2e}, modes {float(mode_residual):.2e} (limit 1e-12)")


def test_05_mass_ledger_conserves_flow(bundled_nmc_run, capsys):
    report = resilience_report(bundled_nmc_run.ledger())
    imbalance = abs(math.fsum(report.flow_balance.values()))
    budget = 1e-6 * report.total_mass_per_basis
    share_gap = max(
        abs(math.fsum(v for (p, _), v in report.market_share.items() if p == phase) - 1.0)
        for phase in {p for p, _ in report.market_share}
    )
    _check(capsys, "mass conservation",
           imbalance <= budget and share_gap <= 1e-9,
           f"net balance {imbalance:.2e} <= {budget:.2e}, share gap {share_gap:.2e} <= 1e-9")


def test_06_hub_solvers_agree_with_enumeration(capsys):
    rng = np.random.default_rng(2024)
    started = time.monotonic()
    for trial in range(100):
        instance = oracles.random_instance(rng)
        exact = solve_exact(instance)
        bnb = solve_bnb(instance)
        oracle_z = oracles.best_by_assignment_enumeration(instance)
        assert exact.objective == bnb.objective == oracle_z, f"trial {trial}"
        assert exact.selected_hubs == bnb.selected_hubs, f"trial {trial}"
        validate_solution(instance, exact)
        validate_solution(instance, bnb)
    elapsed = time.monotonic() - started
    _check(capsys, "hub solver exactness",
           elapsed <= 30.0, f"100/100 instances agree with enumeration, {elapsed:.1f}s (limit 30s)")


def test_07_optimized_hubs_beat_current_structure(bundled_network, capsys):
    manifest = DatasetManifest.from_path(bundled_manifest_path())
    spec = load_hub_scenarios(manifest.root / "hub_scenarios.json")
    future_manifest = dataclasses.replace(
        manifest,
        choices=manifest.root / spec.future_choices,
        conditional_choices=manifest.root / spec.future_conditional,
    )
    comparison = compare_structures(
        bundled_network, load_network(future_manifest), spec, iterations=50_000, seed=0)
    improved = all(
        comparison.averages[(g, "optimized")] <= comparison.averages[(g, "current")]
        for g in comparison.groups
    )
    eu, asia, americas = (comparison.averages[(g, "optimized")]
                          for g in ("EU", "Asia", "Americas"))
    _check(capsys, "optimized structure comparison",
           improved and eu < asia < americas,
           f"optimized<=current for {comparison.groups}; "
           f"EU {eu:.3f} < Asia {asia:.3f} < Americas {americas:.3f}")


def test_08_cli_reports_do_not_depend_on_worker_count(tmp_path, capsys):
    outs = []
    for workers in ("1", "4"):
        out = tmp_path / f"w{workers}"
        rc = main([
            "simulate", "--manifest", str(bundled_manifest_path()),
            "--chemistry", "NMC", "--iterations", "150000", "--seed", "9",
            "--workers", workers, "--out", str(out),
        ])
        assert rc == 0
        outs.append(out)
    csvs = sorted(p.name for p in outs[0].glob("*.csv"))
    identical = all(
        (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes() for name in csvs
    )
    metas = [json.loads((o / "run_meta.json").read_text()) for o in outs]
    for meta in metas:
        meta.pop("created_at")
        meta.pop("workers")
    _check(capsys, "worker-count invariance",
           identical and metas[0] == metas[1],
           f"{len(csvs)} report files byte-identical for 1 vs 4 workers")


def test_09_scenario_counts_match_enumeration(bundled_network, tiny_network, capsys):
    uniform = netbuild.uniform_network(3)
    cases = [
        ("tiny", tiny_network, "T1"),
        ("uniform-3", uniform, "U1"),
        ("bundled-LFP", bundled_network, "LFP"),
    ]
    details = []
    ok = True
    for label, network, chem_id in cases:
        chemistry = network.chemistries[chem_id]
        counted = count_scenarios(network, chemistry).exact
        enumerated = sum(1 for _ in oracles.enumerate_scenarios(network, chemistry))
        ok = ok and counted == enumerated
        details.append(f"{label} {counted}=={enumerated}")
    ok = ok and count_scenarios(uniform, uniform.chemistries["U1"]).exact == 3 ** 7
    _check(capsys, "scenario counting", ok, ", ".join(details))


def test_10_doubling_masses_doubles_totals_bitwise(bundled_network, capsys):
    base_chem = bundled_network.chemistries["NMC"]
    heavy_chem = dataclasses.replace(
        base_chem,
        mineral_mass={m: 2.0 * v for m, v in base_chem.mineral_mass.items()},
        processed_mass={m: 2.0 * v for m, v in base_chem.processed_mass.items()},
        battery_mass_per_kwh=2.0 * base_chem.battery_mass_per_kwh,
        vehicle_mass_per_kwh=2.0 * base_chem.vehicle_mass_per_kwh,
    )
    for seed in range(10):
        base = run_simulation(bundled_network, base_chem, 10_000, seed)
        heavy = run_simulation(bundled_network, heavy_chem, 10_000, seed)
        assert np.array_equal(base.idx, heavy.idx), f"seed {seed}"
        assert (2.0 * base.total).tobytes() == heavy.total.tobytes(), f"seed {seed}"
    _check(capsys, "mass scaling exactness",
           True, "10/10 seeds: doubled masses reproduce choices and exactly double totals")
