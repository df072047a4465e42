"""evflow: Monte Carlo simulation of EV production supply chains.

Samples full extraction-to-market supply scenarios from probability
tables, accounts transport emissions per kWh of battery capacity, derives
mass-flow and resilience analytics, and solves hub placement exactly.
"""

__version__ = "0.1.0"

from ._backend import DEFAULT_BACKEND, get_backend
from .emissions import (
    ConvergenceReport,
    EmissionRecord,
    Pmf,
    build_pmf,
    cumulative_average,
    link_emissions,
    scenario_emissions,
)
from .engine import KernelPlan, SimulationResult, compile_plan, run_simulation
from .errors import (
    CoverageError,
    DatasetError,
    EmptyChoiceError,
    EmptyError,
    EvflowError,
    InfeasibleError,
    MissingLinkError,
    MissingMassError,
    ModeMissingError,
    NodeReferenceError,
    ParseError,
    ProbabilityError,
)
from .hubopt import (
    HubInstance,
    HubSolution,
    build_instance,
    compare_structures,
    load_hub_scenarios,
    solve_bnb,
    solve_exact,
    validate_solution,
)
from .ingest import (
    DatasetManifest,
    ScenarioCount,
    bundled_manifest_path,
    count_scenarios,
    dataset_hash,
    haversine_km,
    load_network,
    resolve_distance,
)
from .massflow import (
    FlowLedger,
    ResilienceReport,
    domestic_fraction,
    flow_balance,
    market_share,
    resilience_report,
)
from .model import (
    BatteryChemistry,
    ChoiceTable,
    ConditionalChoiceTable,
    EmissionFactors,
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
    scenario_weight,
)
from .sampler import (
    RandomStream,
    Scenario,
    mix64,
    sample_conditional_index,
    sample_index,
    sample_scenario,
    sample_scenario_at,
    u01,
)

__all__ = [
    "__version__",
    "DEFAULT_BACKEND",
    "get_backend",
    "BatteryChemistry",
    "ChoiceTable",
    "ConditionalChoiceTable",
    "EmissionFactors",
    "FallbackPolicy",
    "LandVehicle",
    "Manufacturer",
    "ManufacturerKind",
    "MarketSales",
    "Mineral",
    "Node",
    "Phase",
    "SeaVessel",
    "SupplyNetwork",
    "Transition",
    "TransportLink",
    "scenario_weight",
    "DatasetManifest",
    "ScenarioCount",
    "bundled_manifest_path",
    "count_scenarios",
    "dataset_hash",
    "haversine_km",
    "load_network",
    "resolve_distance",
    "RandomStream",
    "Scenario",
    "mix64",
    "u01",
    "sample_index",
    "sample_conditional_index",
    "sample_scenario",
    "sample_scenario_at",
    "EmissionRecord",
    "ConvergenceReport",
    "Pmf",
    "link_emissions",
    "scenario_emissions",
    "cumulative_average",
    "build_pmf",
    "FlowLedger",
    "ResilienceReport",
    "market_share",
    "flow_balance",
    "domestic_fraction",
    "resilience_report",
    "KernelPlan",
    "SimulationResult",
    "compile_plan",
    "run_simulation",
    "HubInstance",
    "HubSolution",
    "build_instance",
    "solve_exact",
    "solve_bnb",
    "validate_solution",
    "compare_structures",
    "load_hub_scenarios",
    "EvflowError",
    "DatasetError",
    "ParseError",
    "NodeReferenceError",
    "ProbabilityError",
    "CoverageError",
    "MissingLinkError",
    "MissingMassError",
    "ModeMissingError",
    "EmptyChoiceError",
    "EmptyError",
    "InfeasibleError",
]
