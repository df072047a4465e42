#!/usr/bin/env python3
"""Generate the bundled synthetic dataset.

Writes src/evflow/data/synthetic/* deterministically: node coordinates and
probability tables are fixed by hand, link distances derive from great
circles with a small hash-seeded detour so rerunning the script reproduces
identical bytes. The data is invented but shaped like a plausible EV
supply chain (Asia-heavy processing and battery production, vehicle
plants on three continents, demand in six markets).

Run from the repository root after installing the package:
    python tools/gen_synthetic_dataset.py
"""

from __future__ import annotations

import csv
import json
import zlib
from pathlib import Path

from evflow.ingest import haversine_km

OUT = Path(__file__).resolve().parent.parent / "src" / "evflow" / "data" / "synthetic"

# id, name, region, lat, lon, roles
NODES = [
    ("ext_co_cd", "Kolwezi cobalt district", "OTHER", -10.7, 25.5, "E"),
    ("ext_co_au", "Mount Isa cobalt", "AU", -20.7, 139.5, "E"),
    ("ext_gr_cn", "Heilongjiang graphite", "CN", 45.8, 126.5, "E"),
    ("ext_gr_mz", "Balama graphite", "OTHER", -13.3, 38.6, "E"),
    ("ext_fe_au", "Pilbara iron ore", "AU", -22.6, 117.8, "E"),
    ("ext_fe_br", "Carajas iron ore", "SA", -6.0, -50.2, "E"),
    ("ext_li_au", "Greenbushes lithium", "AU", -33.9, 116.1, "E"),
    ("ext_li_sa", "Atacama lithium brine", "SA", -23.5, -68.9, "E"),
    ("ext_li_cn", "Qinghai lithium", "CN", 36.8, 98.5, "E"),
    ("ext_mn_za", "Kalahari manganese", "OTHER", -27.3, 22.9, "E"),
    ("ext_mn_au", "Groote Eylandt manganese", "AU", -13.9, 136.5, "E"),
    ("ext_ni_id", "Morowali nickel", "OTHER", -2.8, 122.2, "E"),
    ("ext_ni_ph", "Surigao nickel", "OTHER", 9.5, 125.7, "E"),
    ("ext_ni_au", "Kalgoorlie nickel", "AU", -30.7, 121.5, "E"),
    ("ext_ph_ma", "Khouribga phosphate", "OTHER", 32.9, -6.9, "E"),
    ("ext_ph_cn", "Yunnan phosphate", "CN", 24.5, 102.7, "E"),
    ("prc_cn_east", "Ningbo refining cluster", "CN", 29.9, 121.6, "P"),
    ("prc_cn_south", "Guangxi refining cluster", "CN", 22.8, 108.3, "P"),
    ("prc_cn_central", "Sichuan lithium refining", "CN", 30.6, 104.1, "P"),
    ("prc_kr", "Gunsan precursor plant", "KR", 35.9, 126.7, "P"),
    ("prc_jp", "Niihama refinery", "JP", 33.9, 133.3, "P"),
    ("prc_eu_fi", "Harjavalta refinery", "EU", 61.3, 22.1, "P"),
    ("prc_na_us", "Bessemer City refinery", "NA", 35.3, -81.3, "P"),
    ("prc_au", "Kwinana refinery", "AU", -32.2, 115.8, "P"),
    ("bat_cn_ningde", "Ningde cell plant", "CN", 26.7, 119.5, "B"),
    ("bat_cn_shenzhen", "Shenzhen cell plant", "CN", 22.5, 114.1, "B"),
    ("bat_kr_ochang", "Ochang cell plant", "KR", 36.7, 127.4, "B"),
    ("bat_jp_kasai", "Kasai cell plant", "JP", 34.9, 134.8, "B"),
    ("bat_eu_pl", "Wroclaw cell plant", "EU", 51.1, 17.0, "B"),
    ("bat_na_nv", "Nevada cell plant", "NA", 39.5, -119.4, "B"),
    ("veh_cn_shanghai", "Shanghai vehicle plant", "CN", 31.0, 121.6, "V"),
    ("veh_cn_xian", "Xian vehicle plant", "CN", 34.3, 108.9, "V"),
    ("veh_eu_de", "Wolfsburg vehicle plant", "EU", 52.4, 10.8, "V"),
    ("veh_na_tx", "Austin vehicle plant", "NA", 30.2, -97.6, "V"),
    ("veh_kr_ulsan", "Ulsan vehicle plant", "KR", 35.5, 129.3, "V"),
    ("veh_jp_toyota", "Toyota City vehicle plant", "JP", 35.1, 137.2, "V"),
    ("mkt_cn", "China market", "CN", 39.9, 116.4, "M"),
    ("mkt_eu", "Europe market", "EU", 50.1, 8.7, "M"),
    ("mkt_na", "North America market", "NA", 41.9, -87.6, "M"),
    ("mkt_jp", "Japan market", "JP", 35.7, 139.7, "M"),
    ("mkt_kr", "Korea market", "KR", 37.6, 127.0, "M"),
    ("mkt_sa", "South America market", "SA", -23.5, -46.6, "M"),
    ("hub_eu_fr", "Paris hub candidate", "EU", 48.8, 2.2, "B|V"),
    ("hub_eu_be", "Antwerp hub candidate", "EU", 51.2, 4.4, "B|V"),
    ("hub_asia_gz", "Guangzhou hub candidate", "CN", 23.1, 113.3, "B|V"),
    ("hub_na_mx", "Monterrey hub candidate", "NA", 25.7, -100.3, "B|V"),
    ("hub_sa_br", "Sao Paulo hub candidate", "SA", -23.5, -46.6, "B|V"),
]

MINERALS = [
    ("cobalt", "Cobalt"),
    ("graphite", "Graphite"),
    ("iron", "Iron"),
    ("lithium", "Lithium"),
    ("manganese", "Manganese"),
    ("nickel", "Nickel"),
    ("phosphate", "Phosphate"),
]

CHEMISTRIES = {
    "NMC": {
        "mineral_mass_kg_per_kwh": {
            "lithium": 6.0, "nickel": 3.0, "cobalt": 0.8, "manganese": 0.6, "graphite": 1.3,
        },
        "processed_mass_kg_per_kwh": {
            "lithium": 0.75, "nickel": 0.9, "cobalt": 0.25, "manganese": 0.3, "graphite": 1.0,
        },
        "battery_mass_kg_per_kwh": 6.2,
        "vehicle_mass_kg_per_kwh": 28.0,
    },
    "LFP": {
        "mineral_mass_kg_per_kwh": {
            "lithium": 5.5, "iron": 1.8, "phosphate": 1.6, "graphite": 1.4,
        },
        "processed_mass_kg_per_kwh": {
            "lithium": 0.7, "iron": 0.9, "phosphate": 0.8, "graphite": 1.1,
        },
        "battery_mass_kg_per_kwh": 7.6,
        "vehicle_mass_kg_per_kwh": 30.0,
    },
    "HighNickel": {
        "mineral_mass_kg_per_kwh": {
            "lithium": 6.2, "nickel": 3.6, "cobalt": 0.3, "graphite": 1.3,
        },
        "processed_mass_kg_per_kwh": {
            "lithium": 0.78, "nickel": 1.1, "cobalt": 0.1, "graphite": 1.0,
        },
        "battery_mass_kg_per_kwh": 5.8,
        "vehicle_mass_kg_per_kwh": 26.0,
    },
}

FACTORS = {"gamma1": 0.008, "gamma2": 0.012, "gamma3": 0.035, "beta1": 0.09, "beta2": 0.11}

E_TABLES = {
    "cobalt": [("ext_co_cd", 0.75), ("ext_co_au", 0.25)],
    "graphite": [("ext_gr_cn", 0.8), ("ext_gr_mz", 0.2)],
    "iron": [("ext_fe_au", 0.55), ("ext_fe_br", 0.45)],
    "lithium": [("ext_li_au", 0.5), ("ext_li_sa", 0.3), ("ext_li_cn", 0.2)],
    "manganese": [("ext_mn_za", 0.6), ("ext_mn_au", 0.4)],
    "nickel": [("ext_ni_id", 0.55), ("ext_ni_ph", 0.2), ("ext_ni_au", 0.25)],
    "phosphate": [("ext_ph_ma", 0.7), ("ext_ph_cn", 0.3)],
}

P_TABLES = {
    "cobalt": [("prc_cn_east", 0.65), ("prc_eu_fi", 0.15), ("prc_jp", 0.2)],
    "graphite": [("prc_cn_east", 0.7), ("prc_cn_south", 0.3)],
    "iron": [("prc_cn_east", 0.5), ("prc_cn_south", 0.2), ("prc_au", 0.3)],
    "lithium": [("prc_cn_central", 0.6), ("prc_au", 0.25), ("prc_cn_east", 0.15)],
    "manganese": [("prc_cn_south", 0.8), ("prc_eu_fi", 0.2)],
    "nickel": [("prc_cn_east", 0.35), ("prc_jp", 0.3), ("prc_au", 0.15), ("prc_eu_fi", 0.2)],
    "phosphate": [("prc_cn_south", 0.75), ("prc_na_us", 0.25)],
}

B_TABLES = {
    "battery": [
        ("bat_cn_ningde", 0.37), ("bat_cn_shenzhen", 0.28), ("bat_kr_ochang", 0.15),
        ("bat_jp_kasai", 0.07), ("bat_eu_pl", 0.08), ("bat_na_nv", 0.05),
    ],
    # LFP production is concentrated in China; its own table overrides the shared one.
    "LFP": [
        ("bat_cn_ningde", 0.45), ("bat_cn_shenzhen", 0.40), ("bat_eu_pl", 0.05),
        ("bat_kr_ochang", 0.05), ("bat_na_nv", 0.05),
    ],
}

V_ROWS = {
    "bat_cn_ningde": [
        ("veh_cn_shanghai", 0.55), ("veh_cn_xian", 0.2), ("veh_eu_de", 0.1),
        ("veh_na_tx", 0.1), ("veh_jp_toyota", 0.05),
    ],
    "bat_cn_shenzhen": [
        ("veh_cn_shanghai", 0.45), ("veh_cn_xian", 0.35), ("veh_eu_de", 0.1), ("veh_na_tx", 0.1),
    ],
    "bat_kr_ochang": [("veh_kr_ulsan", 0.6), ("veh_eu_de", 0.2), ("veh_na_tx", 0.2)],
    "bat_jp_kasai": [("veh_jp_toyota", 0.75), ("veh_na_tx", 0.15), ("veh_cn_shanghai", 0.1)],
    "bat_eu_pl": [("veh_eu_de", 0.85), ("veh_na_tx", 0.15)],
    "bat_na_nv": [("veh_na_tx", 0.9), ("veh_cn_shanghai", 0.1)],
}

M_ROWS = {
    "veh_cn_shanghai": [("mkt_cn", 0.55), ("mkt_eu", 0.25), ("mkt_na", 0.1), ("mkt_sa", 0.1)],
    "veh_cn_xian": [("mkt_cn", 0.7), ("mkt_eu", 0.15), ("mkt_sa", 0.15)],
    "veh_eu_de": [("mkt_eu", 0.8), ("mkt_na", 0.12), ("mkt_cn", 0.08)],
    "veh_na_tx": [("mkt_na", 0.85), ("mkt_eu", 0.1), ("mkt_sa", 0.05)],
    "veh_kr_ulsan": [("mkt_kr", 0.35), ("mkt_na", 0.3), ("mkt_eu", 0.3), ("mkt_cn", 0.05)],
    "veh_jp_toyota": [("mkt_jp", 0.5), ("mkt_na", 0.25), ("mkt_eu", 0.25)],
}

# Future structure: battery and vehicle production concentrate further in
# China and Chinese plants export more.
B_TABLES_FUTURE = {
    "battery": [
        ("bat_cn_ningde", 0.45), ("bat_cn_shenzhen", 0.32), ("bat_kr_ochang", 0.1),
        ("bat_jp_kasai", 0.03), ("bat_eu_pl", 0.05), ("bat_na_nv", 0.05),
    ],
    "LFP": [
        ("bat_cn_ningde", 0.5), ("bat_cn_shenzhen", 0.42), ("bat_eu_pl", 0.03),
        ("bat_kr_ochang", 0.03), ("bat_na_nv", 0.02),
    ],
}

M_ROWS_FUTURE = {
    "veh_cn_shanghai": [("mkt_cn", 0.45), ("mkt_eu", 0.3), ("mkt_na", 0.13), ("mkt_sa", 0.12)],
    "veh_cn_xian": [("mkt_cn", 0.6), ("mkt_eu", 0.2), ("mkt_sa", 0.2)],
    "veh_eu_de": [("mkt_eu", 0.82), ("mkt_na", 0.1), ("mkt_cn", 0.08)],
    "veh_na_tx": [("mkt_na", 0.85), ("mkt_eu", 0.1), ("mkt_sa", 0.05)],
    "veh_kr_ulsan": [("mkt_kr", 0.35), ("mkt_na", 0.3), ("mkt_eu", 0.3), ("mkt_cn", 0.05)],
    "veh_jp_toyota": [("mkt_jp", 0.5), ("mkt_na", 0.25), ("mkt_eu", 0.25)],
}

SALES = [
    ("mkt_cn", "NMC", 120), ("mkt_cn", "LFP", 180), ("mkt_cn", "HighNickel", 40),
    ("mkt_eu", "NMC", 90), ("mkt_eu", "LFP", 30), ("mkt_eu", "HighNickel", 35),
    ("mkt_na", "NMC", 60), ("mkt_na", "LFP", 25), ("mkt_na", "HighNickel", 30),
    ("mkt_jp", "NMC", 20), ("mkt_jp", "LFP", 5), ("mkt_jp", "HighNickel", 12),
    ("mkt_kr", "NMC", 15), ("mkt_kr", "LFP", 4), ("mkt_kr", "HighNickel", 10),
    ("mkt_sa", "NMC", 8), ("mkt_sa", "LFP", 7), ("mkt_sa", "HighNickel", 1),
]

MANUFACTURERS = {
    "catl": {"kind": "BatteryMaker", "nodes": ["bat_cn_ningde"]},
    "byd_findreams": {"kind": "BatteryMaker", "nodes": ["bat_cn_shenzhen"]},
    "lg_energy": {"kind": "BatteryMaker", "nodes": ["bat_kr_ochang", "bat_eu_pl"]},
    "panasonic": {"kind": "BatteryMaker", "nodes": ["bat_jp_kasai", "bat_na_nv"]},
    "tesla": {"kind": "CarMaker", "nodes": ["veh_na_tx", "veh_cn_shanghai"]},
    "byd_auto": {"kind": "CarMaker", "nodes": ["veh_cn_xian"]},
    "volkswagen": {"kind": "CarMaker", "nodes": ["veh_eu_de"]},
    "hyundai": {"kind": "CarMaker", "nodes": ["veh_kr_ulsan"]},
    "toyota": {"kind": "CarMaker", "nodes": ["veh_jp_toyota"]},
}

HUB_SCENARIOS = {
    "p": 2,
    "market_groups": {
        "EU": ["mkt_eu"],
        "Asia": ["mkt_cn", "mkt_jp", "mkt_kr"],
        "Americas": ["mkt_na", "mkt_sa"],
    },
    "candidate_hubs": {
        "EU": {
            "current": ["bat_eu_pl", "veh_eu_de"],
            "future": ["bat_eu_pl", "veh_eu_de", "hub_eu_be"],
            "optimized": ["bat_eu_pl", "veh_eu_de", "hub_eu_fr", "hub_eu_be"],
        },
        "Asia": {
            "current": ["bat_cn_ningde", "veh_cn_shanghai"],
            "future": ["bat_cn_ningde", "veh_cn_shanghai", "hub_asia_gz"],
            "optimized": [
                "bat_cn_ningde", "veh_cn_shanghai", "bat_kr_ochang",
                "veh_cn_xian", "hub_asia_gz",
            ],
        },
        "Americas": {
            "current": ["bat_na_nv", "veh_na_tx"],
            "future": ["bat_na_nv", "veh_na_tx", "hub_na_mx"],
            "optimized": ["bat_na_nv", "veh_na_tx", "hub_na_mx", "hub_sa_br"],
        },
    },
    "future_overrides": {
        "choices": "choices_future.csv",
        "conditional_choices": "conditional_choices_future.csv",
    },
}


def _frac(token: str) -> float:
    """Stable pseudo-random fraction in [0, 1) derived from a string."""
    return zlib.crc32(token.encode("utf-8")) / 2**32


def _port_land_km(node_id: str) -> float:
    """Synthetic inland haul between a node and its seaport."""
    return round(40.0 + 420.0 * _frac("port|" + node_id), 1)


def _build_links() -> list[tuple]:
    coords = {n[0]: (n[3], n[4]) for n in NODES}
    regions = {n[0]: n[2] for n in NODES}

    pairs: dict[tuple[str, str], str] = {}

    def want(origin: str, destination: str, kind: str) -> None:
        if origin != destination:
            pairs.setdefault((origin, destination), kind)

    for mineral, e_opts in E_TABLES.items():
        for e_node, _ in e_opts:
            for p_node, _ in P_TABLES[mineral]:
                want(e_node, p_node, "mineral")
    b_nodes = sorted({node for table in B_TABLES.values() for node, _ in table})
    for p_opts in P_TABLES.values():
        for p_node, _ in p_opts:
            for b_node in b_nodes:
                want(p_node, b_node, "mineral")
    for b_node, row in V_ROWS.items():
        for v_node, _ in row:
            want(b_node, v_node, "battery")
    for v_node, row in M_ROWS.items():
        for m_node, _ in row:
            want(v_node, m_node, "vehicle")
    for v_node, row in M_ROWS_FUTURE.items():
        for m_node, _ in row:
            want(v_node, m_node, "vehicle")

    sea_vessel = {"mineral": "BulkCarrier", "battery": "ContainerShip", "vehicle": "VehicleCarrier"}
    land_vehicle = {"mineral": "HeavyGoodsDiesel", "battery": "HeavyGoodsDiesel",
                    "vehicle": "ArticulatedVehicleTransport"}

    rows = []
    for (origin, destination), kind in sorted(pairs.items()):
        lat1, lon1 = coords[origin]
        lat2, lon2 = coords[destination]
        gc = haversine_km(lat1, lon1, lat2, lon2)
        if regions[origin] == regions[destination]:
            land = round(gc * (1.2 + 0.15 * _frac(f"road|{origin}|{destination}")), 1)
            rows.append((origin, destination, land, 0.0, "", land_vehicle[kind]))
        else:
            sea = round(gc * (1.15 + 0.3 * _frac(f"sea|{origin}|{destination}")), 1)
            land = round(_port_land_km(origin) + _port_land_km(destination), 1)
            rows.append((origin, destination, land, sea, sea_vessel[kind], land_vehicle[kind]))
    return rows


def _write_csv(name: str, header: list[str], rows) -> None:
    with (OUT / name).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(name: str, payload) -> None:
    (OUT / name).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _choices_rows(e_tables, p_tables, b_tables):
    rows = []
    for mineral in sorted(e_tables):
        for node, prob in e_tables[mineral]:
            rows.append(("E", mineral, node, prob))
    for mineral in sorted(p_tables):
        for node, prob in p_tables[mineral]:
            rows.append(("P", mineral, node, prob))
    for decision in sorted(b_tables):
        for node, prob in b_tables[decision]:
            rows.append(("B", decision, node, prob))
    return rows


def _conditional_rows(v_rows, m_rows):
    rows = []
    for given in sorted(v_rows):
        for node, prob in v_rows[given]:
            rows.append(("V", given, node, prob))
    for given in sorted(m_rows):
        for node, prob in m_rows[given]:
            rows.append(("M", given, node, prob))
    return rows


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    _write_csv("nodes.csv", ["id", "name", "region", "lat", "lon", "roles"], NODES)
    _write_csv("minerals.csv", ["id", "name"], MINERALS)
    _write_json("chemistries.json", CHEMISTRIES)
    _write_json("factors.json", FACTORS)
    _write_csv("choices.csv", ["phase", "decision", "node_id", "probability"],
               _choices_rows(E_TABLES, P_TABLES, B_TABLES))
    _write_csv("conditional_choices.csv", ["phase", "given_node_id", "node_id", "probability"],
               _conditional_rows(V_ROWS, M_ROWS))
    _write_csv("choices_future.csv", ["phase", "decision", "node_id", "probability"],
               _choices_rows(E_TABLES, P_TABLES, B_TABLES_FUTURE))
    _write_csv("conditional_choices_future.csv",
               ["phase", "given_node_id", "node_id", "probability"],
               _conditional_rows(V_ROWS, M_ROWS_FUTURE))
    _write_csv("links.csv", ["origin", "destination", "land_km", "sea_km", "sea_vessel",
                             "land_vehicle"], _build_links())
    _write_json("manufacturers.json", MANUFACTURERS)
    _write_csv("sales.csv", ["market", "chemistry", "gwh"], SALES)
    _write_json("hub_scenarios.json", HUB_SCENARIOS)
    _write_json("manifest.json", {
        "nodes": "nodes.csv",
        "minerals": "minerals.csv",
        "chemistries": "chemistries.json",
        "choices": "choices.csv",
        "conditional_choices": "conditional_choices.csv",
        "links": "links.csv",
        "factors": "factors.json",
        "manufacturers": "manufacturers.json",
        "sales": "sales.csv",
        "fallback": {"policy": "great-circle", "detour_factor": 1.2},
    })

    # sanity: the dataset must load, and every leg the simulator can sample
    # must have an explicit link (hubs legitimately rely on the fallback)
    from evflow.engine import compile_plan
    from evflow.ingest import DatasetManifest, count_scenarios, load_network
    from evflow.model import FallbackPolicy

    manifest = DatasetManifest.from_path(OUT / "manifest.json")
    strict = load_network(manifest, fallback=FallbackPolicy(kind="error"))
    for chem_id, chem in sorted(strict.chemistries.items()):
        compile_plan(strict, chem)
        count = count_scenarios(strict, chem)
        print(f"{chem_id}: {count.exact} scenarios (upper bound {count.upper_bound})")
    future = DatasetManifest.from_path(OUT / "manifest.json")
    import dataclasses
    future = dataclasses.replace(
        future,
        choices=OUT / "choices_future.csv",
        conditional_choices=OUT / "conditional_choices_future.csv",
    )
    strict_future = load_network(future, fallback=FallbackPolicy(kind="error"))
    for chem_id, chem in sorted(strict_future.chemistries.items()):
        compile_plan(strict_future, chem)
    print(f"dataset written to {OUT}")


if __name__ == "__main__":
    main()
