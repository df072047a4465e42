"""Command-line interface.

Subcommands: validate (load and summarize a dataset), simulate (run the
Monte Carlo engine and write report tables), optimize (solve the hub
problem and compare market structures), count-scenarios (combinatorics of
the sampled space). Exit codes: 0 success, 2 validation failure, 3 I/O
failure, 4 infeasible optimization, 1 unexpected error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from ._backend import DEFAULT_BACKEND
from .emissions import DEFAULT_BIN_WIDTH, DEFAULT_CHECKPOINTS
from .engine import SimulationResult, compile_plan, run_simulation
from .errors import DatasetError, EvflowError, InfeasibleError
from .hubopt import compare_structures, load_hub_scenarios
from .ingest import DatasetManifest, count_scenarios, dataset_hash, load_network
from .massflow import FlowLedger, resilience_report
from .model import FallbackPolicy, ManufacturerKind, SupplyNetwork, Transition

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4

PMF_SERIES = ("total", "EP", "PB", "BV", "VM")


@dataclass(frozen=True)
class RunConfig:
    """Everything a simulate run depends on (and run_meta records)."""

    manifest: Path
    iterations: int
    seed: int
    chemistries: tuple[str, ...]
    bin_width: float
    checkpoints: tuple[int, ...]
    out_dir: Path
    out_format: str
    workers: int
    fallback: Optional[FallbackPolicy]

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.bin_width <= 0:
            raise ValueError("bin width must be > 0")
        for c in self.checkpoints:
            if not 1 <= c:
                raise ValueError("checkpoints must be >= 1")


def _parse_fallback(text: str) -> FallbackPolicy:
    if text == "error":
        return FallbackPolicy(kind="error")
    if text == "great-circle":
        return FallbackPolicy(kind="great-circle")
    if text.startswith("great-circle:"):
        try:
            return FallbackPolicy(kind="great-circle", detour_factor=float(text.split(":", 1)[1]))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    raise argparse.ArgumentTypeError(
        f"expected 'error' or 'great-circle[:<factor>]', got {text!r}"
    )


def _parse_checkpoints(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if not values:
        raise argparse.ArgumentTypeError("no checkpoints given")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evflow",
        description="EV supply chain emission simulator and hub optimizer",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, runs: bool) -> None:
        p.add_argument("--manifest", required=True, type=Path, help="dataset manifest.json")
        p.add_argument("--chemistry", action="append", default=None,
                       help="chemistry id to include (repeatable; default: all)")
        p.add_argument("--fallback", type=_parse_fallback, default=None,
                       metavar="{error|great-circle:<factor>}",
                       help="missing-link policy override")
        if runs:
            p.add_argument("--iterations", type=int, default=10_000, metavar="N")
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--out", type=Path, default=Path("evflow-out"), help="output directory")
            p.add_argument("--format", choices=("csv", "json"), default="csv",
                           help="table format for report files")

    p_val = sub.add_parser("validate", help="load a dataset and report its shape")
    common(p_val, runs=False)
    p_val.set_defaults(func=cmd_validate)

    p_sim = sub.add_parser("simulate", help="run the Monte Carlo engine")
    common(p_sim, runs=True)
    p_sim.add_argument("--bin-width", type=float, default=DEFAULT_BIN_WIDTH)
    p_sim.add_argument("--checkpoints", type=_parse_checkpoints,
                       default=DEFAULT_CHECKPOINTS, metavar="N1,N2,...")
    p_sim.set_defaults(func=cmd_simulate)

    p_opt = sub.add_parser("optimize", help="solve hub placement and compare structures")
    common(p_opt, runs=True)
    p_opt.add_argument("--scenarios", type=Path, default=None,
                       help="hub scenario JSON (default: hub_scenarios.json beside the manifest)")
    p_opt.set_defaults(func=cmd_optimize)

    p_cnt = sub.add_parser("count-scenarios", help="count the sampled decision space")
    common(p_cnt, runs=False)
    p_cnt.set_defaults(func=cmd_count)

    return parser


# -- output helpers ----------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_table(out_dir: Path, name: str, header: Sequence[str],
                 rows: Sequence[Sequence], fmt: str) -> None:
    if fmt == "csv":
        path = out_dir / f"{name}.csv"
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    else:
        path = out_dir / f"{name}.json"
        payload = [dict(zip(header, row)) for row in rows]
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _select_chemistries(network: SupplyNetwork, requested: Optional[Sequence[str]]) -> tuple[str, ...]:
    if not requested:
        return tuple(sorted(network.chemistries))
    for chem in requested:
        if chem not in network.chemistries:
            raise DatasetError(f"unknown chemistry {chem!r}")
    return tuple(dict.fromkeys(requested))


# -- subcommands -------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args.manifest)
    network = load_network(manifest, fallback=args.fallback)
    chems = _select_chemistries(network, args.chemistry)
    print(f"dataset ok: {args.manifest}")
    print(f"  nodes: {len(network.nodes)}")
    print(f"  minerals: {len(network.minerals)}")
    print(f"  chemistries: {len(network.chemistries)}")
    print(f"  choice tables: {len(network.choice_tables)}")
    print(f"  conditional rows: {len(network.conditional_tables)}")
    print(f"  links: {len(network.links)}")
    print(f"  manufacturers: {len(network.manufacturers)}")
    print(f"  sales rows: {len(network.sales)}")
    print(f"  dataset hash: {dataset_hash(manifest)}")
    for chem in chems:
        compile_plan(network, network.chemistries[chem])  # resolves every samplable leg
        count = count_scenarios(network, network.chemistries[chem])
        label = f"{count.exact} scenarios" if count.exact is not None \
            else f"<= {count.upper_bound} scenarios (upper bound)"
        print(f"  {chem}: {label}")
    return EXIT_OK


def _load_manifest(path: Path) -> DatasetManifest:
    if not path.exists():
        raise DatasetError(f"manifest not found: {path}")
    return DatasetManifest.from_path(path)


def cmd_simulate(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args.manifest)
    network = load_network(manifest, fallback=args.fallback)
    config = RunConfig(
        manifest=args.manifest,
        iterations=args.iterations,
        seed=args.seed,
        chemistries=_select_chemistries(network, args.chemistry),
        bin_width=args.bin_width,
        checkpoints=tuple(args.checkpoints),
        out_dir=args.out,
        out_format=args.format,
        workers=args.workers,
        fallback=args.fallback,
    )

    results: dict[str, SimulationResult] = {}
    for chem in config.chemistries:
        result = run_simulation(network, chem, config.iterations, config.seed,
                                workers=config.workers)
        results[chem] = result
        for n, mean in result.convergence(config.checkpoints).checkpoints:
            print(f"{chem}: N={n} mean={mean:.6f} kg/kWh")

    write_simulation_reports(network, manifest, config, results)
    print(f"reports written to {config.out_dir}")
    return EXIT_OK


def write_simulation_reports(
    network: SupplyNetwork,
    manifest: DatasetManifest,
    config: RunConfig,
    results: dict[str, SimulationResult],
) -> None:
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    fmt = config.out_format

    for chem, result in results.items():
        pmf_rows = []
        for series in PMF_SERIES:
            pmf = result.pmf(config.bin_width, series)
            for index, mass in pmf.sorted_items():
                pmf_rows.append((series, pmf.bin_lower(index), mass))
        _write_table(out, f"pmf_{chem}", ("series", "bin_lower", "probability"), pmf_rows, fmt)

    conv_rows = []
    for chem, result in results.items():
        report = result.convergence(config.checkpoints)
        for i, (n, mean) in enumerate(report.checkpoints):
            change = "" if i == 0 else repr(report.relative_change[i - 1])
            conv_rows.append((chem, n, mean, change))
    _write_table(out, "convergence", ("chemistry", "N", "mean_kg_per_kwh", "relative_change"),
                 conv_rows, fmt)

    phase_rows = []
    mode_rows = []
    for chem, result in results.items():
        leg_means = result.leg_means()
        leg_total = sum(leg_means.values())
        for leg in (Transition.EP, Transition.PB, Transition.BV, Transition.VM):
            share = 100.0 * leg_means[leg] / leg_total if leg_total else 0.0
            phase_rows.append((chem, leg.value, leg_means[leg], share))
        mode_means = result.mode_means()
        mode_total = mode_means["land"] + mode_means["sea"]
        for mode in ("land", "sea"):
            share = 100.0 * mode_means[mode] / mode_total if mode_total else 0.0
            mode_rows.append((chem, mode, mode_means[mode], share))
    _write_table(out, "breakdown_phase",
                 ("chemistry", "leg", "mean_kg_per_kwh", "share_pct"), phase_rows, fmt)
    _write_table(out, "breakdown_mode",
                 ("chemistry", "mode", "mean_kg_per_kwh", "share_pct"), mode_rows, fmt)

    for kind, name in ((ManufacturerKind.BATTERY_MAKER, "breakdown_batterymaker"),
                       (ManufacturerKind.CAR_MAKER, "breakdown_carmaker")):
        rows = []
        for chem, result in results.items():
            for man_id, (count, mean) in result.manufacturer_means(kind).items():
                rows.append((chem, man_id, count, mean))
        _write_table(out, name, ("chemistry", "manufacturer", "records", "mean_kg_per_kwh"),
                     rows, fmt)

    market_rows = []
    for chem, result in results.items():
        for market, (count, mean) in result.market_means().items():
            market_rows.append((chem, market, count, mean))
    _write_table(out, "breakdown_market",
                 ("chemistry", "market", "records", "mean_kg_per_kwh"), market_rows, fmt)

    totals_rows = []
    for sale in sorted(network.sales, key=lambda s: (s.market, s.chemistry)):
        result = results.get(sale.chemistry)
        if result is None:
            continue
        _, mean = result.market_means().get(sale.market, (0, 0.0))
        totals_rows.append((sale.market, sale.chemistry, sale.gwh, mean, mean * sale.gwh * 1000.0))
    _write_table(out, "totals_by_market",
                 ("market", "chemistry", "gwh", "mean_kg_per_kwh", "total_tonnes"),
                 totals_rows, fmt)

    ledgers: dict[str, FlowLedger] = {chem: r.ledger() for chem, r in results.items()}
    pooled = FlowLedger(regions=network.node_regions())
    for result in results.values():
        pooled.merge_sums(result.ledger().raw, result.iterations)
    if len(ledgers) > 1:
        ledgers["all"] = pooled

    flow_rows = []
    for chem, ledger in ledgers.items():
        for (origin, destination, transition), kg in sorted(
            ledger.entries.items(), key=lambda item: (item[0][2].value, item[0][0], item[0][1])
        ):
            flow_rows.append((chem, transition.value, origin, destination, kg))
    _write_table(out, "massflow",
                 ("chemistry", "transition", "origin", "destination", "kg_per_100kwh"),
                 flow_rows, fmt)

    res_rows = []
    for chem, ledger in ledgers.items():
        report = resilience_report(ledger)
        for (phase, region), fraction in sorted(report.market_share.items(),
                                                key=lambda kv: (kv[0][0].rank, kv[0][1])):
            res_rows.append((chem, "market_share", phase.value, region, fraction))
        for region, fraction in report.domestic_fraction.items():
            res_rows.append((chem, "domestic_fraction", "", region, fraction))
        for region, balance in report.flow_balance.items():
            res_rows.append((chem, "flow_balance", "", region, balance))
        res_rows.append((chem, "total_mass_per_basis", "", "", report.total_mass_per_basis))
    _write_table(out, "resilience", ("chemistry", "metric", "phase", "region", "value"),
                 res_rows, fmt)

    meta = {
        "command": "simulate",
        "version": __version__,
        "seed": config.seed,
        "iterations": config.iterations,
        "chemistries": list(config.chemistries),
        "bin_width": config.bin_width,
        "checkpoints": list(config.checkpoints),
        "workers": config.workers,
        "backend": next(iter(results.values())).backend if results else DEFAULT_BACKEND,
        "fallback": dataclasses.asdict(network.fallback),
        "format": config.out_format,
        "dataset_hash": dataset_hash(manifest),
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def cmd_optimize(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args.manifest)
    network = load_network(manifest, fallback=args.fallback)
    scenario_path = args.scenarios or manifest.root / "hub_scenarios.json"
    if not Path(scenario_path).exists():
        raise DatasetError(f"scenario file not found: {scenario_path}")
    spec = load_hub_scenarios(scenario_path)

    if spec.future_choices or spec.future_conditional:
        future_manifest = dataclasses.replace(
            manifest,
            choices=manifest.root / spec.future_choices if spec.future_choices else manifest.choices,
            conditional_choices=manifest.root / spec.future_conditional
            if spec.future_conditional else manifest.conditional_choices,
        )
        future_network = load_network(future_manifest, fallback=args.fallback)
    else:
        future_network = network

    comparison = compare_structures(
        network, future_network, spec,
        iterations=args.iterations, seed=args.seed, workers=args.workers,
    )

    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for group in comparison.groups:
        rows.append((
            group,
            comparison.averages[(group, "current")],
            comparison.averages[(group, "future")],
            comparison.averages[(group, "optimized")],
        ))
        print(f"{group}: current={rows[-1][1]:.4f} future={rows[-1][2]:.4f} "
              f"optimized={rows[-1][3]:.4f} kg/kWh")
    _write_table(out, "comparison",
                 ("market_group", "current_kg_per_kwh", "future_kg_per_kwh",
                  "optimized_kg_per_kwh"), rows, args.format)

    solution_doc = {}
    for group in comparison.groups:
        sol = comparison.solutions[group]
        solution_doc[group] = {
            "selected_hubs": list(sol.selected_hubs),
            "sourcing": [
                {"hub": hub, "subset": subset, "option": option}
                for (hub, subset), option in sorted(sol.sourcing.items())
            ],
            "objective_kg_per_kwh_total": sol.objective,
            "average_kg_per_kwh": comparison.averages[(group, "optimized")],
        }
    (out / "hub_solution.json").write_text(
        json.dumps(solution_doc, indent=2) + "\n", encoding="utf-8")
    print(f"reports written to {out}")
    return EXIT_OK


def cmd_count(args: argparse.Namespace) -> int:
    manifest = _load_manifest(args.manifest)
    network = load_network(manifest, fallback=args.fallback)
    for chem in _select_chemistries(network, args.chemistry):
        count = count_scenarios(network, network.chemistries[chem])
        exact = count.exact if count.exact is not None else "not computed (above cap)"
        print(f"{chem}: exact={exact} upper_bound={count.upper_bound}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except EvflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # pragma: no cover - last-resort diagnostics
        print(f"unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
