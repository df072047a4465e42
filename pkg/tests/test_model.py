import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from evflow.errors import EmptyChoiceError, MissingMassError, ProbabilityError
from evflow.model import (
    BatteryChemistry,
    ChoiceTable,
    EmissionFactors,
    FallbackPolicy,
    LandVehicle,
    Node,
    Phase,
    SeaVessel,
    Transition,
    TransportLink,
    scenario_weight,
)


def test_phase_ordering_follows_the_chain():
    chain = [Phase.EXTRACTION, Phase.PROCESSING, Phase.BATTERY_PRODUCTION,
             Phase.VEHICLE_PRODUCTION, Phase.MARKET]
    assert sorted(chain[::-1]) == chain
    assert Phase.EXTRACTION < Phase.MARKET
    assert not Phase.MARKET < Phase.MARKET


def test_phase_from_letter():
    assert Phase.from_letter("E") is Phase.EXTRACTION
    assert Phase.from_letter("M") is Phase.MARKET
    with pytest.raises(ValueError):
        Phase.from_letter("Q")


@pytest.mark.parametrize("transition,phases", [
    (Transition.EP, (Phase.EXTRACTION, Phase.PROCESSING)),
    (Transition.PB, (Phase.PROCESSING, Phase.BATTERY_PRODUCTION)),
    (Transition.BV, (Phase.BATTERY_PRODUCTION, Phase.VEHICLE_PRODUCTION)),
    (Transition.VM, (Phase.VEHICLE_PRODUCTION, Phase.MARKET)),
])
def test_transition_endpoints(transition, phases):
    assert transition.phases == phases


def test_only_mineral_transitions_need_a_mineral():
    assert Transition.EP.needs_mineral
    assert Transition.PB.needs_mineral
    assert not Transition.BV.needs_mineral
    assert not Transition.VM.needs_mineral


class TestChoiceTable:
    def test_rejects_bad_sums(self):
        with pytest.raises(ProbabilityError):
            ChoiceTable(phase=Phase.BATTERY_PRODUCTION, decision="battery",
                        options=(("a", 0.5), ("b", 0.4)))

    def test_rejects_negative_probability(self):
        with pytest.raises(ProbabilityError):
            ChoiceTable(phase=Phase.EXTRACTION, decision="m",
                        options=(("a", 1.2), ("b", -0.2)))

    def test_rejects_duplicates_and_empties(self):
        with pytest.raises(ProbabilityError):
            ChoiceTable(phase=Phase.EXTRACTION, decision="m",
                        options=(("a", 0.5), ("a", 0.5)))
        with pytest.raises(EmptyChoiceError):
            ChoiceTable(phase=Phase.EXTRACTION, decision="m", options=())

    def test_cdf_ends_exactly_at_one(self):
        table = ChoiceTable(phase=Phase.EXTRACTION, decision="m",
                            options=(("a", 0.3), ("b", 0.3), ("c", 0.4)))
        assert table.cdf[-1] == 1.0
        assert all(x <= y for x, y in zip(table.cdf, table.cdf[1:]))

    @given(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=1, max_size=12))
    def test_normalization_is_scale_free(self, weights):
        total = sum(weights)
        options = tuple((f"n{i}", w / total) for i, w in enumerate(weights))
        table = ChoiceTable(phase=Phase.EXTRACTION, decision="m", options=options)
        assert table.cdf[-1] == 1.0
        assert math.isclose(math.fsum(p for _, p in table.options), 1.0, abs_tol=1e-12)
        assert all(x <= y for x, y in zip(table.cdf, table.cdf[1:]))


def _chem(**overrides):
    base = dict(
        id="C",
        mineral_mass={"li": 6.0, "ni": 3.0},
        processed_mass={"li": 0.7, "ni": 0.9},
        battery_mass_per_kwh=6.0,
        vehicle_mass_per_kwh=28.0,
    )
    base.update(overrides)
    return BatteryChemistry(**base)


class TestBatteryChemistry:
    def test_minerals_are_sorted(self):
        assert _chem().minerals == ("li", "ni")

    def test_processed_cannot_exceed_mineral(self):
        with pytest.raises(ValueError):
            _chem(processed_mass={"li": 7.0, "ni": 0.9})

    def test_mass_keys_must_match(self):
        with pytest.raises(ValueError):
            _chem(processed_mass={"li": 0.7})

    def test_battery_cannot_exceed_vehicle(self):
        with pytest.raises(ValueError):
            _chem(battery_mass_per_kwh=30.0, vehicle_mass_per_kwh=28.0)

    def test_masses_must_be_positive(self):
        with pytest.raises(ValueError):
            _chem(mineral_mass={"li": 0.0, "ni": 3.0})


def test_scenario_weight_covers_all_transitions():
    chem = _chem()
    assert scenario_weight(chem, Transition.EP, "li") == 6.0
    assert scenario_weight(chem, Transition.PB, "ni") == 0.9
    assert scenario_weight(chem, Transition.BV) == 6.0
    assert scenario_weight(chem, Transition.VM) == 28.0


def test_scenario_weight_argument_errors():
    chem = _chem()
    with pytest.raises(ValueError):
        scenario_weight(chem, Transition.EP)  # mineral required
    with pytest.raises(ValueError):
        scenario_weight(chem, Transition.VM, "li")  # mineral forbidden
    with pytest.raises(MissingMassError):
        scenario_weight(chem, Transition.EP, "xx")


class TestTransportLink:
    def test_sea_distance_requires_vessel(self):
        with pytest.raises(ValueError):
            TransportLink(origin="a", destination="b", land_km=0.0, sea_km=100.0,
                          sea_vessel=None, land_vehicle=None)

    def test_land_distance_requires_vehicle(self):
        with pytest.raises(ValueError):
            TransportLink(origin="a", destination="b", land_km=50.0, sea_km=0.0,
                          sea_vessel=None, land_vehicle=None)

    def test_total(self):
        link = TransportLink(origin="a", destination="b", land_km=50.0, sea_km=100.0,
                             sea_vessel=SeaVessel.BULK_CARRIER,
                             land_vehicle=LandVehicle.HEAVY_GOODS_DIESEL)
        assert link.total_km == 150.0


def test_emission_factor_lookup():
    f = EmissionFactors(gamma1=0.008, gamma2=0.012, gamma3=0.035, beta1=0.09, beta2=0.11)
    assert f.sea_factor(SeaVessel.BULK_CARRIER) == 0.008
    assert f.sea_factor(SeaVessel.CONTAINER_SHIP) == 0.012
    assert f.sea_factor(SeaVessel.VEHICLE_CARRIER) == 0.035
    assert f.land_factor(LandVehicle.HEAVY_GOODS_DIESEL) == 0.09
    assert f.land_factor(LandVehicle.ARTICULATED_TRANSPORT) == 0.11


def test_factors_must_be_positive():
    with pytest.raises(ValueError):
        EmissionFactors(gamma1=0.0, gamma2=0.012, gamma3=0.035, beta1=0.09, beta2=0.11)


def test_node_coordinate_bounds():
    with pytest.raises(ValueError):
        Node(id="x", name="x", region="R", lat=91.0, lon=0.0,
             roles=frozenset({Phase.EXTRACTION}))
    with pytest.raises(ValueError):
        Node(id="x", name="x", region="R", lat=0.0, lon=181.0,
             roles=frozenset({Phase.EXTRACTION}))


def test_fallback_policy_validation():
    assert FallbackPolicy().kind == "great-circle"
    with pytest.raises(ValueError):
        FallbackPolicy(kind="teleport")
    with pytest.raises(ValueError):
        FallbackPolicy(kind="great-circle", detour_factor=0.5)
