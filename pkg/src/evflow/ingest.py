"""Dataset loading and validation.

A dataset is a directory of CSV/JSON files tied together by a manifest.
Loading is strict: malformed rows, dangling references, and probability
tables that fail normalization are rejected with the file and line that
caused the problem.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import DatasetError, MissingLinkError, ParseError, ProbabilityError
from .model import (
    BatteryChemistry,
    ChoiceTable,
    ConditionalChoiceTable,
    EmissionFactors,
    FALLBACK_VESSEL,
    FallbackPolicy,
    LandVehicle,
    Manufacturer,
    ManufacturerKind,
    MarketSales,
    Mineral,
    Node,
    Phase,
    SeaVessel,
    SupplyNetwork,
    Transition,
    TransportLink,
)

EARTH_RADIUS_KM = 6371.0

NODES_HEADER = ["id", "name", "region", "lat", "lon", "roles"]
MINERALS_HEADER = ["id", "name"]
CHOICES_HEADER = ["phase", "decision", "node_id", "probability"]
CONDITIONAL_HEADER = ["phase", "given_node_id", "node_id", "probability"]
LINKS_HEADER = ["origin", "destination", "land_km", "sea_km", "sea_vessel", "land_vehicle"]
SALES_HEADER = ["market", "chemistry", "gwh"]

MANIFEST_FILE_KEYS = (
    "nodes",
    "minerals",
    "chemistries",
    "choices",
    "conditional_choices",
    "links",
    "factors",
)
MANIFEST_OPTIONAL_KEYS = ("manufacturers", "sales")


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in km on a sphere of radius 6371 km."""
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = math.radians(lat2 - lat1)
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(a)))


@dataclass(frozen=True)
class ResolvedLeg:
    """Concrete distances and carriers for one origin->destination move."""

    land_km: float
    sea_km: float
    sea_vessel: Optional[SeaVessel]
    land_vehicle: Optional[LandVehicle]
    synthesized: bool = False


def resolve_distance(
    network: SupplyNetwork,
    origin: str,
    destination: str,
    transition: Transition,
) -> ResolvedLeg:
    """Resolve the leg between two nodes.

    Order: an explicit link wins, a node shipping to itself moves nothing,
    and otherwise the fallback policy decides between an error and a
    synthesized sea-only leg (great-circle distance times the detour
    factor, on the vessel class appropriate to the transition).
    """
    link = network.links.get((origin, destination))
    if link is not None:
        return ResolvedLeg(link.land_km, link.sea_km, link.sea_vessel, link.land_vehicle)
    if origin == destination:
        return ResolvedLeg(0.0, 0.0, None, None)
    if network.fallback.kind == "error":
        raise MissingLinkError(f"no transport link {origin} -> {destination}")
    a = network.nodes[origin]
    b = network.nodes[destination]
    sea_km = haversine_km(a.lat, a.lon, b.lat, b.lon) * network.fallback.detour_factor
    return ResolvedLeg(0.0, sea_km, FALLBACK_VESSEL[transition], None, synthesized=True)


# -- CSV/JSON parsing ------------------------------------------------------


def _read_csv(path: Path, header: list[str]):
    """Yield (line_number, row_dict) after checking the header row exactly."""
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            actual = next(reader)
        except StopIteration:
            raise ParseError(str(path), 1, "empty file") from None
        if actual != header:
            raise ParseError(str(path), 1, f"expected header {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ParseError(str(path), lineno, f"expected {len(header)} fields, got {len(row)}")
            yield lineno, dict(zip(header, row))


def _parse_float(value: str, path: Path, lineno: int, field: str) -> float:
    try:
        out = float(value)
    except ValueError:
        raise ParseError(str(path), lineno, f"bad {field} value {value!r}") from None
    if not math.isfinite(out):
        raise ParseError(str(path), lineno, f"{field} must be finite")
    return out


def _load_json(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(path), exc.lineno, exc.msg) from exc


def load_nodes(path: Path) -> dict[str, Node]:
    nodes: dict[str, Node] = {}
    for lineno, row in _read_csv(path, NODES_HEADER):
        roles = set()
        for letter in row["roles"].split("|"):
            letter = letter.strip()
            if not letter:
                continue
            try:
                roles.add(Phase.from_letter(letter))
            except ValueError:
                raise ParseError(str(path), lineno, f"unknown role {letter!r}") from None
        if not roles:
            raise ParseError(str(path), lineno, "node has no roles")
        try:
            node = Node(
                id=row["id"].strip(),
                name=row["name"].strip(),
                region=row["region"].strip(),
                lat=_parse_float(row["lat"], path, lineno, "lat"),
                lon=_parse_float(row["lon"], path, lineno, "lon"),
                roles=frozenset(roles),
            )
        except ValueError as exc:
            raise ParseError(str(path), lineno, str(exc)) from None
        if node.id in nodes:
            raise ParseError(str(path), lineno, f"duplicate node id {node.id!r}")
        nodes[node.id] = node
    return nodes


def load_minerals(path: Path) -> dict[str, Mineral]:
    minerals: dict[str, Mineral] = {}
    for lineno, row in _read_csv(path, MINERALS_HEADER):
        mineral = Mineral(id=row["id"].strip(), name=row["name"].strip())
        if not mineral.id:
            raise ParseError(str(path), lineno, "empty mineral id")
        if mineral.id in minerals:
            raise ParseError(str(path), lineno, f"duplicate mineral id {mineral.id!r}")
        minerals[mineral.id] = mineral
    return minerals


def load_chemistries(path: Path) -> dict[str, BatteryChemistry]:
    raw = _load_json(path)
    if not isinstance(raw, dict):
        raise ParseError(str(path), 1, "expected an object of chemistry entries")
    chemistries: dict[str, BatteryChemistry] = {}
    for chem_id, entry in raw.items():
        try:
            chem = BatteryChemistry(
                id=chem_id,
                mineral_mass=dict(entry["mineral_mass_kg_per_kwh"]),
                processed_mass=dict(entry["processed_mass_kg_per_kwh"]),
                battery_mass_per_kwh=float(entry["battery_mass_kg_per_kwh"]),
                vehicle_mass_per_kwh=float(entry["vehicle_mass_kg_per_kwh"]),
            )
        except KeyError as exc:
            raise ParseError(str(path), 1, f"chemistry {chem_id}: missing key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ParseError(str(path), 1, f"chemistry {chem_id}: {exc}") from None
        chemistries[chem_id] = chem
    if not chemistries:
        raise ParseError(str(path), 1, "no chemistries defined")
    return chemistries


def load_factors(path: Path) -> EmissionFactors:
    raw = _load_json(path)
    try:
        return EmissionFactors(
            gamma1=float(raw["gamma1"]),
            gamma2=float(raw["gamma2"]),
            gamma3=float(raw["gamma3"]),
            beta1=float(raw["beta1"]),
            beta2=float(raw["beta2"]),
        )
    except KeyError as exc:
        raise ParseError(str(path), 1, f"missing factor {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(path), 1, str(exc)) from None


def load_choices(path: Path) -> dict[tuple[Phase, str], ChoiceTable]:
    grouped: dict[tuple[Phase, str], list[tuple[str, float]]] = {}
    first_line: dict[tuple[Phase, str], int] = {}
    for lineno, row in _read_csv(path, CHOICES_HEADER):
        try:
            phase = Phase.from_letter(row["phase"].strip())
        except ValueError as exc:
            raise ParseError(str(path), lineno, str(exc)) from None
        if phase in (Phase.VEHICLE_PRODUCTION, Phase.MARKET):
            raise ParseError(str(path), lineno, f"phase {phase.value} choices are conditional")
        key = (phase, row["decision"].strip())
        prob = _parse_float(row["probability"], path, lineno, "probability")
        grouped.setdefault(key, []).append((row["node_id"].strip(), prob))
        first_line.setdefault(key, lineno)
    tables: dict[tuple[Phase, str], ChoiceTable] = {}
    for key, options in grouped.items():
        phase, decision = key
        try:
            tables[key] = ChoiceTable(phase=phase, decision=decision, options=tuple(options))
        except ProbabilityError as exc:
            raise ProbabilityError(f"{path}:{first_line[key]}: {exc}") from None
    return tables


def load_conditional_choices(path: Path) -> dict[tuple[Phase, str], ConditionalChoiceTable]:
    grouped: dict[tuple[Phase, str], list[tuple[str, float]]] = {}
    first_line: dict[tuple[Phase, str], int] = {}
    for lineno, row in _read_csv(path, CONDITIONAL_HEADER):
        try:
            phase = Phase.from_letter(row["phase"].strip())
        except ValueError as exc:
            raise ParseError(str(path), lineno, str(exc)) from None
        if phase not in (Phase.VEHICLE_PRODUCTION, Phase.MARKET):
            raise ParseError(str(path), lineno, f"phase {phase.value} choices are unconditional")
        key = (phase, row["given_node_id"].strip())
        prob = _parse_float(row["probability"], path, lineno, "probability")
        grouped.setdefault(key, []).append((row["node_id"].strip(), prob))
        first_line.setdefault(key, lineno)
    tables: dict[tuple[Phase, str], ConditionalChoiceTable] = {}
    for key, options in grouped.items():
        phase, given = key
        try:
            tables[key] = ConditionalChoiceTable(phase=phase, given=given, options=tuple(options))
        except ProbabilityError as exc:
            raise ProbabilityError(f"{path}:{first_line[key]}: {exc}") from None
    return tables


def load_links(path: Path) -> dict[tuple[str, str], TransportLink]:
    links: dict[tuple[str, str], TransportLink] = {}
    for lineno, row in _read_csv(path, LINKS_HEADER):
        vessel_raw = row["sea_vessel"].strip()
        vehicle_raw = row["land_vehicle"].strip()
        try:
            vessel = SeaVessel(vessel_raw) if vessel_raw else None
        except ValueError:
            raise ParseError(str(path), lineno, f"unknown sea vessel {vessel_raw!r}") from None
        try:
            vehicle = LandVehicle(vehicle_raw) if vehicle_raw else None
        except ValueError:
            raise ParseError(str(path), lineno, f"unknown land vehicle {vehicle_raw!r}") from None
        try:
            link = TransportLink(
                origin=row["origin"].strip(),
                destination=row["destination"].strip(),
                land_km=_parse_float(row["land_km"], path, lineno, "land_km"),
                sea_km=_parse_float(row["sea_km"], path, lineno, "sea_km"),
                sea_vessel=vessel,
                land_vehicle=vehicle,
            )
        except ValueError as exc:
            raise ParseError(str(path), lineno, str(exc)) from None
        key = (link.origin, link.destination)
        if key in links:
            raise ParseError(str(path), lineno, f"duplicate link {link.origin}->{link.destination}")
        links[key] = link
    return links


def load_manufacturers(path: Path) -> dict[str, Manufacturer]:
    raw = _load_json(path)
    if not isinstance(raw, dict):
        raise ParseError(str(path), 1, "expected an object of manufacturer entries")
    out: dict[str, Manufacturer] = {}
    for man_id, entry in raw.items():
        try:
            kind = ManufacturerKind(entry["kind"])
            nodes = frozenset(entry["nodes"])
        except KeyError as exc:
            raise ParseError(str(path), 1, f"manufacturer {man_id}: missing key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ParseError(str(path), 1, f"manufacturer {man_id}: {exc}") from None
        try:
            out[man_id] = Manufacturer(id=man_id, kind=kind, nodes=nodes)
        except ValueError as exc:
            raise ParseError(str(path), 1, str(exc)) from None
    return out


def load_sales(path: Path) -> tuple[MarketSales, ...]:
    rows: list[MarketSales] = []
    seen: set[tuple[str, str]] = set()
    for lineno, row in _read_csv(path, SALES_HEADER):
        key = (row["market"].strip(), row["chemistry"].strip())
        if key in seen:
            raise ParseError(str(path), lineno, f"duplicate sales row {key[0]}/{key[1]}")
        seen.add(key)
        try:
            rows.append(
                MarketSales(
                    market=key[0],
                    chemistry=key[1],
                    gwh=_parse_float(row["gwh"], path, lineno, "gwh"),
                )
            )
        except ValueError as exc:
            raise ParseError(str(path), lineno, str(exc)) from None
    return tuple(rows)


# -- manifest --------------------------------------------------------------


@dataclass(frozen=True)
class DatasetManifest:
    """Resolved paths for one dataset plus its fallback policy."""

    root: Path
    nodes: Path
    minerals: Path
    chemistries: Path
    choices: Path
    conditional_choices: Path
    links: Path
    factors: Path
    manufacturers: Optional[Path]
    sales: Optional[Path]
    fallback: FallbackPolicy

    @classmethod
    def from_path(cls, manifest_path: Path | str) -> "DatasetManifest":
        manifest_path = Path(manifest_path)
        raw = _load_json(manifest_path)
        if not isinstance(raw, dict):
            raise ParseError(str(manifest_path), 1, "manifest must be a JSON object")
        root = manifest_path.parent
        paths: dict[str, Path] = {}
        for key in MANIFEST_FILE_KEYS:
            if key not in raw:
                raise ParseError(str(manifest_path), 1, f"manifest missing {key!r}")
            paths[key] = root / raw[key]
        optional: dict[str, Optional[Path]] = {}
        for key in MANIFEST_OPTIONAL_KEYS:
            optional[key] = root / raw[key] if key in raw else None
        fb_raw = raw.get("fallback", {})
        if not isinstance(fb_raw, dict):
            raise ParseError(str(manifest_path), 1, "fallback must be an object")
        try:
            fallback = FallbackPolicy(
                kind=fb_raw.get("policy", "great-circle"),
                detour_factor=float(fb_raw.get("detour_factor", 1.2)),
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(str(manifest_path), 1, str(exc)) from None
        return cls(
            root=root,
            nodes=paths["nodes"],
            minerals=paths["minerals"],
            chemistries=paths["chemistries"],
            choices=paths["choices"],
            conditional_choices=paths["conditional_choices"],
            links=paths["links"],
            factors=paths["factors"],
            manufacturers=optional["manufacturers"],
            sales=optional["sales"],
            fallback=fallback,
        )

    def files(self) -> list[Path]:
        out = [
            self.nodes,
            self.minerals,
            self.chemistries,
            self.choices,
            self.conditional_choices,
            self.links,
            self.factors,
        ]
        if self.manufacturers is not None:
            out.append(self.manufacturers)
        if self.sales is not None:
            out.append(self.sales)
        return out


def load_network(
    manifest: DatasetManifest | Path | str,
    fallback: Optional[FallbackPolicy] = None,
) -> SupplyNetwork:
    """Load, cross-check, and return the network a manifest describes.

    ``fallback`` overrides the manifest's policy (the CLI flag wins).
    """
    if not isinstance(manifest, DatasetManifest):
        manifest = DatasetManifest.from_path(manifest)
    network = SupplyNetwork(
        nodes=load_nodes(manifest.nodes),
        minerals=load_minerals(manifest.minerals),
        chemistries=load_chemistries(manifest.chemistries),
        choice_tables=load_choices(manifest.choices),
        conditional_tables=load_conditional_choices(manifest.conditional_choices),
        links=load_links(manifest.links),
        factors=load_factors(manifest.factors),
        manufacturers=load_manufacturers(manifest.manufacturers) if manifest.manufacturers else {},
        sales=load_sales(manifest.sales) if manifest.sales else (),
        fallback=fallback if fallback is not None else manifest.fallback,
    )
    network.validate()
    return network


def dataset_hash(manifest: DatasetManifest) -> str:
    """SHA-256 over every dataset file, in manifest order, for provenance."""
    digest = hashlib.sha256()
    for path in manifest.files():
        digest.update(path.name.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(path.read_bytes())
        digest.update(b"\x00")
    return digest.hexdigest()


def bundled_manifest_path() -> Path:
    """Path of the synthetic dataset that ships inside the package."""
    return Path(resources.files("evflow").joinpath("data/synthetic/manifest.json"))


# -- scenario counting -----------------------------------------------------


@dataclass(frozen=True)
class ScenarioCount:
    """Exact scenario count (when cheap enough to compute) and an upper bound."""

    upper_bound: int
    exact: Optional[int]

    @property
    def value(self) -> int:
        return self.exact if self.exact is not None else self.upper_bound


def count_scenarios(
    network: SupplyNetwork,
    chemistry: BatteryChemistry,
    exact_cap: int = 10_000_000,
) -> ScenarioCount:
    """Count distinct scenarios for one chemistry.

    Counts listed options whether or not their probability is zero. The
    upper bound multiplies the widest conditional rows through; the exact
    count walks the B -> V -> M tree and is computed whenever the upper
    bound does not exceed ``exact_cap``.
    """
    independent = 1
    for mineral_id in chemistry.minerals:
        independent *= len(network.mineral_table(Phase.EXTRACTION, mineral_id).options)
    for mineral_id in chemistry.minerals:
        independent *= len(network.mineral_table(Phase.PROCESSING, mineral_id).options)

    b_table = network.battery_table(chemistry.id)
    max_v = 0
    max_m = 0
    for b_node in b_table.node_ids:
        v_row = network.conditional_table(Phase.VEHICLE_PRODUCTION, b_node)
        max_v = max(max_v, len(v_row.options))
        for v_node in v_row.node_ids:
            m_row = network.conditional_table(Phase.MARKET, v_node)
            max_m = max(max_m, len(m_row.options))
    upper = independent * len(b_table.options) * max_v * max_m

    if upper > exact_cap:
        return ScenarioCount(upper_bound=upper, exact=None)

    tail = 0
    for b_node in b_table.node_ids:
        v_row = network.conditional_table(Phase.VEHICLE_PRODUCTION, b_node)
        for v_node in v_row.node_ids:
            tail += len(network.conditional_table(Phase.MARKET, v_node).options)
    return ScenarioCount(upper_bound=upper, exact=independent * tail)
