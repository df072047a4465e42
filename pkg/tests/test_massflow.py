import math

import pytest

from evflow.errors import EmptyError
from evflow.massflow import (
    FlowLedger,
    domestic_fraction,
    flow_balance,
    market_share,
    resilience_report,
)
from evflow.model import Phase, Transition
from evflow.sampler import sample_scenario_at


def _ledger(regions, basis=100.0):
    return FlowLedger(regions=regions, basis_kwh=basis)


REGIONS = {"e1": "RA", "p1": "RB", "b1": "RB", "v1": "RC", "k1": "RC"}


def _accumulate_line(line_network, iterations=1):
    chem = line_network.chemistries["L1"]
    ledger = _ledger({n: node.region for n, node in line_network.nodes.items()})
    for i in range(iterations):
        ledger.accumulate(sample_scenario_at(line_network, chem, seed=0, iteration=i), chem)
    return ledger


class TestLedger:
    def test_entries_scale_to_basis(self, line_network):
        ledger = _accumulate_line(line_network)
        # single deterministic path: per-100-kWh masses are just 100x kg/kWh
        assert ledger.entries[("e1", "p1", Transition.EP)] == pytest.approx(800.0)
        assert ledger.entries[("p1", "b1", Transition.PB)] == pytest.approx(400.0)
        assert ledger.entries[("b1", "v1", Transition.BV)] == pytest.approx(600.0)
        assert ledger.entries[("v1", "k1", Transition.VM)] == pytest.approx(3000.0)

    def test_average_over_iterations(self, line_network):
        one = _accumulate_line(line_network, iterations=1)
        many = _accumulate_line(line_network, iterations=7)
        for key, kg in one.entries.items():
            assert many.entries[key] == pytest.approx(kg)

    def test_merge_sums_matches_accumulate(self, line_network):
        direct = _accumulate_line(line_network, iterations=3)
        merged = _ledger(direct.regions)
        merged.merge_sums(direct.raw, direct.iterations)
        assert merged.entries == direct.entries

    def test_total_mass(self, line_network):
        ledger = _accumulate_line(line_network)
        assert ledger.total_mass() == pytest.approx(800 + 400 + 600 + 3000)


class TestMarketShare:
    def test_production_phases_credit_origin(self, line_network):
        ledger = _accumulate_line(line_network)
        assert market_share(ledger, Phase.EXTRACTION) == {"RA": 1.0}
        assert market_share(ledger, Phase.PROCESSING) == {"RB": 1.0}
        assert market_share(ledger, Phase.BATTERY_PRODUCTION) == {"RB": 1.0}
        assert market_share(ledger, Phase.VEHICLE_PRODUCTION) == {"RC": 1.0}
        assert market_share(ledger, Phase.MARKET) == {"RC": 1.0}

    def test_shares_sum_to_one(self, tiny_network):
        chem = tiny_network.chemistries["T1"]
        ledger = _ledger(tiny_network.node_regions())
        for i in range(400):
            ledger.accumulate(sample_scenario_at(tiny_network, chem, seed=8, iteration=i), chem)
        for phase in Phase:
            shares = market_share(ledger, phase)
            assert math.fsum(shares.values()) == pytest.approx(1.0, abs=1e-12)
            assert all(0 <= v <= 1 for v in shares.values())

    def test_empty_ledger_raises(self):
        with pytest.raises(EmptyError):
            market_share(_ledger(REGIONS), Phase.EXTRACTION)


class TestFlowBalance:
    def test_hand_values(self):
        ledger = _ledger(REGIONS)
        ledger.add("e1", "p1", Transition.EP, 10.0)
        ledger.add("p1", "b1", Transition.PB, 4.0)  # intra-RB: cancels
        ledger.add("b1", "v1", Transition.BV, 6.0)
        ledger.iterations = 1
        balance = flow_balance(ledger)
        assert balance["RA"] == pytest.approx(1000.0)
        assert balance["RB"] == pytest.approx(-1000.0 + 600.0)
        assert balance["RC"] == pytest.approx(-600.0)

    def test_balances_sum_to_zero(self, tiny_network):
        chem = tiny_network.chemistries["T1"]
        ledger = _ledger(tiny_network.node_regions())
        for i in range(300):
            ledger.accumulate(sample_scenario_at(tiny_network, chem, seed=4, iteration=i), chem)
        balance = flow_balance(ledger)
        assert math.fsum(balance.values()) == pytest.approx(0.0, abs=1e-9)


class TestDomesticFraction:
    def test_self_link_counts_once(self):
        ledger = _ledger(REGIONS)
        ledger.add("p1", "b1", Transition.PB, 5.0)   # RB internal
        ledger.add("b1", "v1", Transition.BV, 5.0)   # RB -> RC
        ledger.iterations = 1
        fractions = domestic_fraction(ledger)
        # RB touches 500 internal + 500 outbound; internal counted once
        assert fractions["RB"] == pytest.approx(0.5)
        assert fractions["RC"] == pytest.approx(0.0)

    def test_fully_domestic_region(self):
        ledger = _ledger(REGIONS)
        ledger.add("p1", "b1", Transition.PB, 5.0)
        ledger.iterations = 1
        assert domestic_fraction(ledger) == {"RB": 1.0}

    def test_fractions_bounded(self, bundled_network):
        from evflow.engine import run_simulation

        result = run_simulation(bundled_network, "NMC", iterations=2000, seed=1)
        fractions = domestic_fraction(result.ledger())
        assert fractions
        assert all(0.0 <= v <= 1.0 for v in fractions.values())


def test_resilience_report_bundles_everything(tiny_network):
    chem = tiny_network.chemistries["T1"]
    ledger = _ledger(tiny_network.node_regions())
    for i in range(100):
        ledger.accumulate(sample_scenario_at(tiny_network, chem, seed=2, iteration=i), chem)
    report = resilience_report(ledger)
    assert report.basis_kwh == 100.0
    assert report.total_mass_per_basis == pytest.approx(ledger.total_mass())
    assert set(report.domestic_fraction) <= {"RA", "RB"}
    for phase in Phase:
        phase_sum = math.fsum(v for (p, _), v in report.market_share.items() if p is phase)
        assert phase_sum == pytest.approx(1.0, abs=1e-12)
