"""Single entry point wiring configuration, experiments, and CSV emission."""

from __future__ import annotations

import csv
import logging
import math
import secrets
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import competition as comp
from . import engine, netstats
from . import privacy as priv
from . import profitability as prof
from .graph_state import SimParams
from .ingest import (
    EntityMap,
    ParseError,
    ValidationError,
    convert_gossip_dump,
    load_edge_stream,
    load_entities,
    load_merchants,
    load_snapshots,
    write_snapshot_csv,
)
from .output import write_manifest

logger = logging.getLogger(__name__)


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_inputs(snapshots, merchants, entities, alpha):
    try:
        graphs = load_snapshots(snapshots, alpha=alpha)
        merchant_set = load_merchants(merchants) if merchants else set()
        entity_map = load_entities(entities) if entities else EntityMap()
    except (ParseError, ValidationError, OSError) as exc:
        _fail(str(exc))
    return graphs, merchant_set, entity_map


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = secrets.randbits(63)
        logger.info("no seed given; generated %d", seed)
    return seed


def _params(tau, amount, merchant_ratio, runs, seed, ignore_depletion, count_last_hop_fee) -> SimParams:
    return SimParams(
        tau=tau,
        amount_sat=amount,
        merchant_ratio=merchant_ratio,
        runs=runs,
        seed=_resolve_seed(seed),
        ignore_depletion=ignore_depletion,
        count_last_hop_fee=count_last_hop_fee,
    )


def _params_dict(params: SimParams, **extra) -> dict:
    d = {
        "tau": params.tau,
        "amount": params.amount_sat,
        "merchant_ratio": params.merchant_ratio,
        "runs": params.runs,
        "seed": params.seed,
        "ignore_depletion": params.ignore_depletion,
        "count_last_hop_fee": params.count_last_hop_fee,
        "max_hops": params.max_hops,
    }
    d.update(extra)
    return d


def common_options(fn):
    fn = click.option("--snapshots", required=True, type=click.Path(exists=True), help="Snapshot CSV file or directory.")(fn)
    fn = click.option("--merchants", type=click.Path(exists=True), default=None, help="Merchant labels CSV.")(fn)
    fn = click.option("--entities", type=click.Path(exists=True), default=None, help="Entity labels CSV.")(fn)
    fn = click.option("--alpha-filter", "alpha_filter", type=int, default=None, help="Capacity filter in sat (defaults to --amount).")(fn)
    fn = click.option("--tau", type=int, default=7000, show_default=True, help="Transactions per day.")(fn)
    fn = click.option("--amount", type=int, default=60000, show_default=True, help="Payment amount in sat.")(fn)
    fn = click.option("--merchant-ratio", type=float, default=0.8, show_default=True, help="Merchant share of recipients.")(fn)
    fn = click.option("--runs", type=int, default=10, show_default=True, help="Independent runs per snapshot.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Master seed (generated when omitted).")(fn)
    fn = click.option("--ignore-depletion", is_flag=True, help="Route without balance limits.")(fn)
    fn = click.option("--count-last-hop-fee", is_flag=True, help="Charge the final edge into the recipient.")(fn)
    fn = click.option("--workers", type=int, default=1, show_default=True, help="Parallel cell workers.")(fn)
    fn = click.option("--out", required=True, type=click.Path(), help="Output directory.")(fn)
    return fn


@click.group()
@click.option("--verbose", is_flag=True, help="Debug logging.")
def main(verbose: bool) -> None:
    """Deterministic traffic simulator for payment channel networks."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


@main.command()
@common_options
@click.option("--dump-transactions", is_flag=True, help="Also write the sampled transactions.")
def simulate(snapshots, merchants, entities, alpha_filter, tau, amount, merchant_ratio, runs, seed,
             ignore_depletion, count_last_hop_fee, workers, out, dump_transactions):
    """Simulate daily traffic and write per-node statistics."""
    params = _params(tau, amount, merchant_ratio, runs, seed, ignore_depletion, count_last_hop_fee)
    alpha = alpha_filter if alpha_filter is not None else params.amount_sat
    graphs, merchant_set, entity_map = _load_inputs(snapshots, merchants, entities, alpha)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    aggregate = engine.AggregateResult(params, [], {g.snapshot_id: g.nodes for g in graphs})
    try:
        aggregate = engine.run_experiment(
            graphs, merchant_set, entity_map, params, workers=workers, keep_outcomes=dump_transactions
        )
    except KeyboardInterrupt:
        logger.warning("interrupted; flushing partial results")
    engine.write_node_stats(out_dir / "node_stats.csv", aggregate)
    engine.write_summary(out_dir / "summary.csv", aggregate)
    if dump_transactions and aggregate.cells:
        engine.write_transactions(out_dir / "transactions.csv", aggregate)
    write_manifest(
        out_dir,
        "simulate",
        _params_dict(params, alpha_filter=alpha, workers=workers),
        {"snapshots": snapshots, "merchants": merchants, "entities": entities},
    )
    fraction = aggregate.failure_fraction()
    if fraction is not None:
        click.echo(f"failure fraction: {fraction:.4f}")


def _parse_targets(spec: str, entity_map: EntityMap, ranking: list[str]) -> dict[str, frozenset[str]]:
    kind, _, value = spec.partition(":")
    if kind == "top":
        top = int(value)
        return {label: frozenset(entity_map.members(label)) for label in ranking[:top]}
    if kind == "entity":
        return {value: frozenset(entity_map.members(value))}
    if kind == "node":
        return {value: frozenset({value})}
    raise ValueError(f"bad --targets {spec!r}; use top:N, entity:NAME, or node:ID")


@main.command("fee-competition")
@common_options
@click.option("--targets", default="top:100", show_default=True, help="top:N | entity:NAME | node:ID")
def fee_competition(snapshots, merchants, entities, alpha_filter, tau, amount, merchant_ratio, runs,
                    seed, ignore_depletion, count_last_hop_fee, workers, out, targets):
    """Removal impact, reroute deltas, and optimal base-fee increments."""
    params = _params(tau, amount, merchant_ratio, runs, seed, ignore_depletion, count_last_hop_fee)
    alpha = alpha_filter if alpha_filter is not None else params.amount_sat
    graphs, merchant_set, entity_map = _load_inputs(snapshots, merchants, entities, alpha)
    baseline = engine.run_experiment(
        graphs, merchant_set, entity_map, params, workers=workers, keep_outcomes=True
    )
    means = baseline.mean_node_stats()
    ranking = sorted(means, key=lambda n: (-means[n].routing_income_sat, n))
    entity_means = engine.aggregate_entity_means(baseline, entity_map)
    entity_ranking = sorted(entity_means, key=lambda e: (-entity_means[e].routing_income_sat, e))
    try:
        target_map = _parse_targets(
            targets, entity_map, entity_ranking if targets.startswith("top") else ranking
        )
    except ValueError as exc:
        _fail(str(exc))
    analyses = comp.analyze_targets(graphs, baseline, target_map, params)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    comp.write_removal(out_dir / "removal.csv", analyses)
    comp.write_groups(out_dir / "removal_groups.csv", comp.group_report(analyses, entity_ranking))
    write_manifest(
        out_dir,
        "fee-competition",
        _params_dict(params, alpha_filter=alpha, workers=workers, targets=targets),
        {"snapshots": snapshots, "merchants": merchants, "entities": entities},
    )


@main.command()
@common_options
@click.option("--capacities", type=click.Path(exists=True), default=None,
              help="External entity capacity CSV (entity,capacity_sat).")
@click.option("--fee-weighting", type=click.Choice(["capacity", "uniform"]), default="capacity",
              show_default=True)
@click.option("--target-roi", type=float, default=0.05, show_default=True)
def profitability(snapshots, merchants, entities, alpha_filter, tau, amount, merchant_ratio, runs,
                  seed, ignore_depletion, count_last_hop_fee, workers, out, capacities,
                  fee_weighting, target_roi):
    """RoI, economical fee, and rank table for router entities."""
    params = _params(tau, amount, merchant_ratio, runs, seed, ignore_depletion, count_last_hop_fee)
    alpha = alpha_filter if alpha_filter is not None else params.amount_sat
    graphs, merchant_set, entity_map = _load_inputs(snapshots, merchants, entities, alpha)
    external = None
    if capacities:
        external = {}
        with open(capacities, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["entity", "capacity_sat"]:
                _fail(f"{capacities}:1: expected header entity,capacity_sat")
            for row in reader:
                if row:
                    external[row[0]] = float(row[1])
    aggregate = engine.run_experiment(graphs, merchant_set, entity_map, params, workers=workers)
    reports = prof.entity_report(
        aggregate, entity_map, graphs, params,
        external_capacities=external, fee_weighting=fee_weighting, target_roi=target_roi,
    )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    prof.write_entity_report(out_dir / "entity_report.csv", reports)
    write_manifest(
        out_dir,
        "profitability",
        _params_dict(params, alpha_filter=alpha, workers=workers,
                     fee_weighting=fee_weighting, target_roi=target_roi),
        {"snapshots": snapshots, "merchants": merchants, "entities": entities, "capacities": capacities},
    )


@main.command()
@common_options
@click.option("--axis", type=click.Choice(["alpha", "tau"]), required=True)
@click.option("--values", required=True, help="Comma-separated grid values.")
def sweep(snapshots, merchants, entities, alpha_filter, tau, amount, merchant_ratio, runs, seed,
          ignore_depletion, count_last_hop_fee, workers, out, axis, values):
    """Per-entity income/traffic curves along a tau or amount grid."""
    params = _params(tau, amount, merchant_ratio, runs, seed, ignore_depletion, count_last_hop_fee)
    try:
        grid = [int(v) for v in values.split(",") if v]
    except ValueError:
        _fail(f"bad --values {values!r}; expected comma-separated integers")
    alpha = alpha_filter if alpha_filter is not None else (min(grid) if axis == "alpha" else params.amount_sat)
    graphs, merchant_set, entity_map = _load_inputs(snapshots, merchants, entities, alpha)
    points = prof.sweep(graphs, merchant_set, entity_map, params, axis, grid, workers=workers)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    prof.write_sweep(out_dir / f"sweep_{axis}.csv", points)
    write_manifest(
        out_dir,
        "sweep",
        _params_dict(params, alpha_filter=alpha, workers=workers, axis=axis, values=grid),
        {"snapshots": snapshots, "merchants": merchants, "entities": entities},
    )


@main.command("depletion-ratio")
@common_options
def depletion_ratio_cmd(snapshots, merchants, entities, alpha_filter, tau, amount, merchant_ratio,
                        runs, seed, ignore_depletion, count_last_hop_fee, workers, out):
    """Income with depletion enforced relative to the optimistic income."""
    params = _params(tau, amount, merchant_ratio, runs, seed, ignore_depletion, count_last_hop_fee)
    alpha = alpha_filter if alpha_filter is not None else params.amount_sat
    graphs, merchant_set, entity_map = _load_inputs(snapshots, merchants, entities, alpha)
    ratios = prof.depletion_ratio(graphs, merchant_set, entity_map, params, workers=workers)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    prof.write_depletion(out_dir / "depletion_ratio.csv", ratios)
    write_manifest(
        out_dir,
        "depletion-ratio",
        _params_dict(params, alpha_filter=alpha, workers=workers),
        {"snapshots": snapshots, "merchants": merchants, "entities": entities},
    )


@main.command("entity-removal")
@common_options
@click.option("--targets", default=None,
              help="Comma-separated entity names (default: all entities in the label file).")
def entity_removal(snapshots, merchants, entities, alpha_filter, tau, amount, merchant_ratio, runs,
                   seed, ignore_depletion, count_last_hop_fee, workers, out, targets):
    """Failure fraction after removing each entity, against the baseline."""
    params = _params(tau, amount, merchant_ratio, runs, seed, ignore_depletion, count_last_hop_fee)
    alpha = alpha_filter if alpha_filter is not None else params.amount_sat
    graphs, merchant_set, entity_map = _load_inputs(snapshots, merchants, entities, alpha)
    names = [t for t in targets.split(",") if t] if targets else list(entity_map.entities())
    if not names:
        _fail("no removal targets; pass --targets or a non-empty entity file")
    baseline, fractions = prof.entity_removal_failures(
        graphs, merchant_set, entity_map, params, names, workers=workers
    )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    prof.write_entity_removal(out_dir / "entity_removal.csv", baseline, fractions)
    write_manifest(
        out_dir,
        "entity-removal",
        _params_dict(params, alpha_filter=alpha, workers=workers, targets=names),
        {"snapshots": snapshots, "merchants": merchants, "entities": entities},
    )


@main.command()
@common_options
@click.option("--lengths", default="1,2,3,4,5,6", show_default=True,
              help="Comma-separated target path lengths.")
@click.option("--epsilons", default="0.0,0.5,0.8,1.0", show_default=True,
              help="Merchant ratios for the path-length distribution.")
@click.option("--plausibility-amounts", default="10000,60000,100000,1000000", show_default=True)
@click.option("--max-thresholds", type=int, default=20, show_default=True)
@click.option("--max-payments", type=int, default=200, show_default=True,
              help="Pairs per snapshot evaluated by the hop-injection search.")
def privacy(snapshots, merchants, entities, alpha_filter, tau, amount, merchant_ratio, runs, seed,
            ignore_depletion, count_last_hop_fee, workers, out, lengths, epsilons,
            plausibility_amounts, max_thresholds, max_payments):
    """Exposure metrics and the cost of deliberately longer routes."""
    params = _params(tau, amount, merchant_ratio, runs, seed, ignore_depletion, count_last_hop_fee)
    alpha = alpha_filter if alpha_filter is not None else params.amount_sat
    graphs, merchant_set, entity_map = _load_inputs(snapshots, merchants, entities, alpha)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    eps_rows: list[tuple[float, int, float]] = []
    for eps in [float(e) for e in epsilons.split(",") if e]:
        eps_params = replace(params, merchant_ratio=eps)
        aggregate = engine.run_experiment(graphs, merchant_set, entity_map, eps_params, workers=workers)
        hist = aggregate.hop_histogram()
        total = sum(hist.values())
        for hops in sorted(hist):
            eps_rows.append((eps, hops, hist[hops] / total if total else 0.0))
    priv.write_privacy(out_dir / "privacy.csv", eps_rows)

    thresholds = list(range(max_thresholds + 1))
    curves = []
    for amt in [int(a) for a in plausibility_amounts.split(",") if a]:
        per_threshold = np.zeros(len(thresholds))
        for g in graphs:
            curve = priv.plausibility_curve(g, amt, thresholds)
            per_threshold += np.array([f for _, f in curve.points])
        per_threshold /= len(graphs)
        curves.append(
            priv.PlausibilityCurve(amt, tuple(zip(thresholds, per_threshold.tolist())))
        )
    priv.write_plausibility(out_dir / "plausibility.csv", curves)

    length_grid = [int(v) for v in lengths.split(",") if v]
    rows = priv.cost_vs_length(graphs, merchant_set, params, length_grid, max_payments=max_payments)
    priv.write_cost_vs_length(out_dir / "cost_vs_length.csv", rows)
    write_manifest(
        out_dir,
        "privacy",
        _params_dict(params, alpha_filter=alpha, workers=workers, lengths=length_grid,
                     epsilons=epsilons, max_payments=max_payments),
        {"snapshots": snapshots, "merchants": merchants, "entities": entities},
    )


@main.command("graph-stats")
@click.option("--snapshots", type=click.Path(exists=True), default=None)
@click.option("--edge-stream", type=click.Path(exists=True), default=None)
@click.option("--merchants", type=click.Path(exists=True), default=None)
@click.option("--alpha-filter", type=int, default=60000, show_default=True)
@click.option("--block-window", type=int, default=2016, show_default=True,
              help="Window size in blocks for temporal metrics.")
@click.option("--with-reference", is_flag=True,
              help="Add seeded random-graph baselines for CPD/transitivity.")
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path())
def graph_stats(snapshots, edge_stream, merchants, alpha_filter, block_window, with_reference, seed, out):
    """Descriptive metrics per snapshot and over the temporal edge stream."""
    if not snapshots and not edge_stream:
        _fail("need --snapshots and/or --edge-stream")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = _resolve_seed(seed)
    merchant_set = load_merchants(merchants) if merchants else set()

    if snapshots:
        try:
            graphs = load_snapshots(snapshots, alpha=alpha_filter)
        except (ParseError, ValidationError, OSError) as exc:
            _fail(str(exc))
        rows = []
        for g in graphs:
            und = netstats.undirected_projection(g)
            n, e = und.number_of_nodes(), len(g.channels)
            row = netstats.WindowMetrics(
                window_end=0,
                n_nodes=n,
                n_edges=e,
                avg_degree=(2 * e / n) if n else 0.0,
                eff_diameter=netstats.effective_diameter(g),
                cpd=netstats.cpd(g),
                transitivity=netstats.transitivity(g),
            )
            rows.append((g.snapshot_id, row))
        with open(out_dir / "snapshot_metrics.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ["snapshot_id", "N", "E", "avg_degree", "eff_diameter", "cpd", "transitivity"]
            if with_reference:
                header += ["er_cpd", "er_transitivity", "ba_cpd", "ba_transitivity"]
            writer.writerow(header)
            for sid, w in rows:
                record = [
                    sid, w.n_nodes, w.n_edges, f"{w.avg_degree:.4f}",
                    "" if w.eff_diameter is None else f"{w.eff_diameter:.4f}",
                    "" if w.cpd is None else f"{w.cpd:.6f}",
                    "" if w.transitivity is None else f"{w.transitivity:.6f}",
                ]
                if with_reference:
                    er = netstats.reference_graph(w.n_nodes, w.n_edges, "erdos_renyi", seed)
                    k = max(1, round(w.n_edges / w.n_nodes)) if w.n_nodes else 1
                    ba = netstats.reference_graph(w.n_nodes, min(k, w.n_nodes - 1), "barabasi_albert", seed)
                    for ref in (er, ba):
                        c = netstats.cpd(ref)
                        t = netstats.transitivity(ref)
                        record += ["" if c is None else f"{c:.6f}", "" if t is None else f"{t:.6f}"]
                writer.writerow(record)

    if edge_stream:
        try:
            events = load_edge_stream(edge_stream)
        except (ParseError, ValidationError, OSError) as exc:
            _fail(str(exc))
        windows = netstats.temporal_metrics(events, block_window)
        netstats.write_graph_metrics(out_dir / "graph_metrics.csv", windows)
        fit = None
        series = [(w.n_nodes, w.n_edges) for w in windows]
        if len(series) >= 3:
            fit = netstats.densification_fit(series)
        with open(out_dir / "densification.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("exponent", "intercept", "r_squared"))
            if fit is not None:
                writer.writerow((f"{fit.exponent:.8f}", f"{fit.intercept:.8f}", f"{fit.r_squared:.6f}"))
        netstats.write_locality(out_dir / "locality.csv", netstats.edge_locality(events))
        channels, nodes = netstats.lifetimes(events, merchant_set)
        with open(out_dir / "lifetimes.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("kind", "id", "lifetime_blocks", "censored", "merchant_adjacent"))
            for c in channels:
                writer.writerow(("channel", c.channel_id, c.lifetime_blocks, int(c.censored), int(c.merchant_adjacent)))
            for nl in nodes:
                writer.writerow(("node", nl.node, nl.lifetime_blocks, int(nl.censored), ""))
        with open(out_dir / "attachment.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("degree", "attachments", "exposure", "probability"))
            for d, a, e, p in netstats.attachment_curve(events):
                writer.writerow((d, a, e, "" if p is None else f"{p:.8f}"))

    write_manifest(
        out_dir,
        "graph-stats",
        {"alpha_filter": alpha_filter, "block_window": block_window,
         "with_reference": with_reference, "seed": seed},
        {"snapshots": snapshots, "edge_stream": edge_stream, "merchants": merchants},
    )


@main.command()
@click.option("--results", required=True, type=click.Path(exists=True),
              help="Directory holding node_stats.csv from a simulate run.")
@click.option("--methods", default="spearman,kendall,weighted_kendall", show_default=True)
@click.option("--out", required=True, type=click.Path())
def correlations(results, methods, out):
    """Cross-day and cross-run rank correlations of the four node statistics."""
    stats_path = Path(results) / "node_stats.csv"
    if not stats_path.exists():
        _fail(f"{stats_path}: not found")
    per_cell: dict[tuple[str, int], dict[str, dict[str, float]]] = {}
    with open(stats_path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = set(engine.NODE_STATS_HEADER)
        if reader.fieldnames is None or set(reader.fieldnames) != expected:
            _fail(f"{stats_path}: unexpected header {reader.fieldnames}")
        for row in reader:
            key = (row["snapshot_id"], int(row["run"]))
            cell = per_cell.setdefault(
                key,
                {"routing_income": {}, "routing_traffic": {}, "sender_fee": {}, "sender_traffic": {}},
            )
            node = row["node"]
            cell["routing_income"][node] = float(row["routing_income_sat"])
            cell["routing_traffic"][node] = float(row["routing_traffic"])
            cell["sender_fee"][node] = float(row["sender_fee_sat"])
            cell["sender_traffic"][node] = float(row["sender_traffic"])

    method_list = [m for m in methods.split(",") if m]
    for m in method_list:
        if m not in netstats.METHODS:
            _fail(f"unknown correlation method {m!r}")
    snapshot_ids = sorted({sid for sid, _ in per_cell})
    runs = sorted({run for _, run in per_cell})
    statistics_names = ("routing_income", "routing_traffic", "sender_fee", "sender_traffic")

    rows: list[tuple[str, str, str, str, str, float | None]] = []
    for stat in statistics_names:
        # Cross-day: mean over runs of each day's vector, correlated day pair by day pair.
        day_vectors = []
        for sid in snapshot_ids:
            merged: dict[str, float] = {}
            count = Counter()
            for run in runs:
                for node, v in per_cell[(sid, run)][stat].items():
                    merged[node] = merged.get(node, 0.0) + v
                    count[node] += 1
            day_vectors.append({n: merged[n] / count[n] for n in merged})
        for method in method_list:
            if len(day_vectors) >= 2:
                matrix = netstats.cross_day_correlations(day_vectors, method)
                for i, a in enumerate(snapshot_ids):
                    for j, b in enumerate(snapshot_ids):
                        if i < j:
                            value = matrix[i, j]
                            rows.append(
                                ("cross_day", stat, method, a, b,
                                 None if math.isnan(value) else float(value))
                            )
            if len(runs) >= 2:
                per_day_means = []
                for sid in snapshot_ids:
                    run_vectors = [per_cell[(sid, run)][stat] for run in runs]
                    per_day_means.append(netstats.cross_run_correlations(run_vectors, method))
                valid = [v for v in per_day_means if v is not None]
                rows.append(
                    ("cross_run", stat, method, "", "",
                     sum(valid) / len(valid) if valid else None)
                )
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    netstats.write_correlations(out_dir / "correlations.csv", rows)
    write_manifest(out_dir, "correlations", {"methods": method_list}, {"results": stats_path})


@main.command()
@click.option("--gossip", required=True, type=click.Path(exists=True), help="Gossip dump JSON.")
@click.option("--snapshot-id", default=None, help="Snapshot id for the emitted rows (default: file stem).")
@click.option("--policy-source", type=click.Choice(["src", "trg"]), default="src", show_default=True,
              help="Which endpoint's policy a direction carries.")
@click.option("--out", required=True, type=click.Path(), help="Output CSV path.")
def convert(gossip, snapshot_id, policy_source, out):
    """Convert a node-client gossip dump to the canonical directed-edge CSV."""
    try:
        rows = convert_gossip_dump(gossip, snapshot_id=snapshot_id, policy_source=policy_source)
    except (ParseError, ValidationError) as exc:
        _fail(str(exc))
    out_path = Path(out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_snapshot_csv(rows, out_path)
    click.echo(f"wrote {len(rows)} directed-edge rows to {out_path}")


if __name__ == "__main__":
    main()
