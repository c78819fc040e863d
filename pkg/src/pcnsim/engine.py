"""Experiment orchestration: days x runs, per-node accounting, aggregation."""

from __future__ import annotations

import csv
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .graph_state import SimParams, apply_payment, init_balances
from .ingest import EntityMap, SnapshotGraph
from .router import PaymentOutcome, Router
from .sampler import Transaction, sample_transactions
from .seeds import SeedPath, as_seed_path

logger = logging.getLogger(__name__)

# Per-cell substreams: balances, endpoint sampling, hop-injection search.
BALANCE_STREAM = 0
SAMPLER_STREAM = 1
GA_STREAM = 2

NODE_STATS_HEADER = (
    "snapshot_id",
    "run",
    "node",
    "routing_income_sat",
    "routing_traffic",
    "sender_fee_sat",
    "sender_traffic",
)
SUMMARY_HEADER = ("snapshot_id", "run", "failures", "success", "mean_path_length")
TRANSACTIONS_HEADER = ("run", "snapshot_id", "tx_index", "sender", "recipient", "amount_sat")


def sat(msat: int | float) -> str:
    """Render millisatoshis as satoshis with one decimal (report convention)."""
    return f"{msat / 1000:.1f}"


@dataclass
class NodeDayStats:
    """Accounting for one node over one simulated day."""

    routing_income_msat: int = 0
    routing_traffic: int = 0
    sender_fee_msat: int = 0
    sender_traffic: int = 0

    def add(self, other: "NodeDayStats") -> None:
        self.routing_income_msat += other.routing_income_msat
        self.routing_traffic += other.routing_traffic
        self.sender_fee_msat += other.sender_fee_msat
        self.sender_traffic += other.sender_traffic


@dataclass
class NodeMeanStats:
    """Per-node means over the cells in which the node was present."""

    routing_income_sat: float
    routing_traffic: float
    sender_fee_sat: float
    sender_traffic: float
    presence: int


@dataclass
class DayResult:
    """One (snapshot, run) cell of the experiment grid."""

    snapshot_id: str
    run: int
    stats: dict[str, NodeDayStats]
    failures: int
    successes: int
    hop_hist: Counter
    outcomes: list[PaymentOutcome] | None = None

    @property
    def tau(self) -> int:
        return self.failures + self.successes

    def mean_path_length(self) -> float | None:
        if self.successes == 0:
            return None
        return sum(k * n for k, n in self.hop_hist.items()) / self.successes


def cell_seed(master_seed: int, snapshot_index: int, run: int) -> SeedPath:
    return SeedPath(master_seed).child(snapshot_index, run)


def route_transactions(
    graph: SnapshotGraph,
    transactions: list[Transaction],
    state,
    params: SimParams,
    *,
    snapshot_id: str | None = None,
    run: int = 0,
    keep_outcomes: bool = False,
) -> DayResult:
    """Route a fixed transaction list sequentially, mutating balances.

    The routing core shared by simulate_day and the removal analyses; the
    transaction order is the sample order and is part of the contract since
    it drives depletion.
    """
    router = Router(graph, params.amount_sat, params)
    stats: dict[str, NodeDayStats] = {}
    hop_hist: Counter = Counter()
    failures = successes = 0
    outcomes: list[PaymentOutcome] | None = [] if keep_outcomes else None
    for tx in transactions:
        outcome = router.route(state, tx.sender, tx.recipient, tx)
        if outcome.success:
            apply_payment(state, outcome.edges, params.amount_sat)
            successes += 1
            hop_hist[outcome.hop_count] += 1
            s = stats.setdefault(tx.sender, NodeDayStats())
            s.sender_fee_msat += outcome.total_fee_msat
            s.sender_traffic += 1
            for node, fee in outcome.credits_msat:
                ns = stats.setdefault(node, NodeDayStats())
                ns.routing_income_msat += fee
                ns.routing_traffic += 1
        else:
            failures += 1
        if outcomes is not None:
            outcomes.append(outcome)
    return DayResult(
        snapshot_id=snapshot_id if snapshot_id is not None else graph.snapshot_id,
        run=run,
        stats=stats,
        failures=failures,
        successes=successes,
        hop_hist=hop_hist,
        outcomes=outcomes,
    )


def simulate_day(
    graph: SnapshotGraph,
    merchants: set[str] | frozenset[str],
    params: SimParams,
    seed: SeedPath | int,
    *,
    run: int = 0,
    keep_outcomes: bool = False,
    sample_graph: SnapshotGraph | None = None,
) -> DayResult:
    """Simulate one day: fresh balances, tau sampled payments, sequential routing.

    sample_graph lets removal studies draw endpoints from the intact graph
    while routing on a reduced one; endpoints missing from the routing graph
    fail with no-path.
    """
    seed = as_seed_path(seed)
    state = init_balances(graph, seed, ignore_depletion=params.ignore_depletion)
    rng = seed.child(SAMPLER_STREAM).generator()
    transactions = sample_transactions(sample_graph or graph, merchants, params, rng)
    return route_transactions(
        graph, transactions, state, params, run=run, keep_outcomes=keep_outcomes
    )


@dataclass
class AggregateResult:
    """All cells of one experiment plus presence-aware mean machinery."""

    params: SimParams
    cells: list[DayResult]
    snapshot_nodes: dict[str, frozenset[str]] = field(default_factory=dict)

    def mean_node_stats(self) -> dict[str, NodeMeanStats]:
        """Arithmetic means over the cells where each node was present."""
        presence: Counter = Counter()
        totals: dict[str, NodeDayStats] = {}
        for cell in self.cells:
            members = self.snapshot_nodes.get(cell.snapshot_id)
            if members is None:
                members = frozenset(cell.stats)
            for node in members:
                presence[node] += 1
            for node, s in cell.stats.items():
                totals.setdefault(node, NodeDayStats()).add(s)
        means: dict[str, NodeMeanStats] = {}
        for node, count in presence.items():
            s = totals.get(node, NodeDayStats())
            means[node] = NodeMeanStats(
                routing_income_sat=s.routing_income_msat / 1000 / count,
                routing_traffic=s.routing_traffic / count,
                sender_fee_sat=s.sender_fee_msat / 1000 / count,
                sender_traffic=s.sender_traffic / count,
                presence=count,
            )
        return means

    def failure_fraction(self) -> float | None:
        total = sum(c.tau for c in self.cells)
        if total == 0:
            return None
        return sum(c.failures for c in self.cells) / total

    def hop_histogram(self) -> Counter:
        hist: Counter = Counter()
        for c in self.cells:
            hist.update(c.hop_hist)
        return hist

    def mean_path_length(self) -> float | None:
        successes = sum(c.successes for c in self.cells)
        if successes == 0:
            return None
        weighted = sum(k * n for c in self.cells for k, n in c.hop_hist.items())
        return weighted / successes


def _run_cell(args) -> DayResult:
    graph, sample_graph, merchants, params, snapshot_index, run, keep_outcomes = args
    seed = cell_seed(params.seed, snapshot_index, run)
    return simulate_day(
        graph,
        merchants,
        params,
        seed,
        run=run,
        keep_outcomes=keep_outcomes,
        sample_graph=sample_graph,
    )


def run_experiment(
    snapshots: list[SnapshotGraph],
    merchants: set[str] | frozenset[str],
    entities: EntityMap | None,
    params: SimParams,
    *,
    workers: int = 1,
    keep_outcomes: bool = False,
    sample_graphs: list[SnapshotGraph] | None = None,
) -> AggregateResult:
    """Simulate runs x snapshots independent days with derived seeds.

    Cell seeds depend only on (master seed, snapshot index, run), so any
    worker count produces bit-identical results.
    """
    if not snapshots:
        raise ValueError("need at least one snapshot")
    if sample_graphs is not None and len(sample_graphs) != len(snapshots):
        raise ValueError("sample_graphs must align with snapshots")
    tasks = [
        (
            graph,
            sample_graphs[si] if sample_graphs is not None else None,
            merchants,
            params,
            si,
            run,
            keep_outcomes,
        )
        for si, graph in enumerate(snapshots)
        for run in range(params.runs)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_run_cell, tasks, chunksize=1))
    else:
        cells = [_run_cell(t) for t in tasks]
    snapshot_nodes = {g.snapshot_id: g.nodes for g in snapshots}
    if sample_graphs is not None:
        # Presence follows the sampling universe so baseline/removal vectors align.
        snapshot_nodes = {g.snapshot_id: g.nodes for g in sample_graphs}
    return AggregateResult(params=params, cells=cells, snapshot_nodes=snapshot_nodes)


def aggregate_entities(stats: dict[str, NodeDayStats], entity_map: EntityMap) -> dict[str, NodeDayStats]:
    """Sum member-node day stats per entity."""
    out: dict[str, NodeDayStats] = {}
    for node, s in stats.items():
        out.setdefault(entity_map.entity_of(node), NodeDayStats()).add(s)
    return out


def aggregate_entity_means(
    aggregate: AggregateResult, entity_map: EntityMap
) -> dict[str, NodeMeanStats]:
    """Sum per-node means into per-entity means (income/traffic are additive)."""
    out: dict[str, NodeMeanStats] = {}
    for node, m in aggregate.mean_node_stats().items():
        entity = entity_map.entity_of(node)
        agg = out.get(entity)
        if agg is None:
            out[entity] = NodeMeanStats(
                m.routing_income_sat,
                m.routing_traffic,
                m.sender_fee_sat,
                m.sender_traffic,
                m.presence,
            )
        else:
            agg.routing_income_sat += m.routing_income_sat
            agg.routing_traffic += m.routing_traffic
            agg.sender_fee_sat += m.sender_fee_sat
            agg.sender_traffic += m.sender_traffic
            agg.presence = max(agg.presence, m.presence)
    return out


def path_length_stats(outcomes: list[PaymentOutcome]) -> tuple[Counter, float | None]:
    """Histogram of successful hop counts plus the failure fraction."""
    hist: Counter = Counter()
    failures = 0
    for o in outcomes:
        if o.success:
            hist[o.hop_count] += 1
        else:
            failures += 1
    fraction = failures / len(outcomes) if outcomes else None
    return hist, fraction


def write_node_stats(path: str | Path, aggregate: AggregateResult) -> None:
    """Per-cell, per-node stats; rows cover every node present in the cell's graph."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(NODE_STATS_HEADER)
        for cell in sorted(aggregate.cells, key=lambda c: (c.snapshot_id, c.run)):
            members = aggregate.snapshot_nodes.get(cell.snapshot_id, frozenset(cell.stats))
            empty = NodeDayStats()
            for node in sorted(members):
                s = cell.stats.get(node, empty)
                writer.writerow(
                    (
                        cell.snapshot_id,
                        cell.run,
                        node,
                        sat(s.routing_income_msat),
                        s.routing_traffic,
                        sat(s.sender_fee_msat),
                        s.sender_traffic,
                    )
                )


def write_summary(path: str | Path, aggregate: AggregateResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for cell in sorted(aggregate.cells, key=lambda c: (c.snapshot_id, c.run)):
            mean_len = cell.mean_path_length()
            writer.writerow(
                (
                    cell.snapshot_id,
                    cell.run,
                    cell.failures,
                    cell.successes,
                    "" if mean_len is None else f"{mean_len:.4f}",
                )
            )


def write_transactions(path: str | Path, aggregate: AggregateResult) -> None:
    """Dump sampled transactions; requires the experiment to keep outcomes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRANSACTIONS_HEADER)
        for cell in sorted(aggregate.cells, key=lambda c: (c.snapshot_id, c.run)):
            if cell.outcomes is None:
                raise ValueError("experiment was run without keep_outcomes")
            for idx, outcome in enumerate(cell.outcomes):
                tx = outcome.transaction
                writer.writerow((cell.run, cell.snapshot_id, idx, tx.sender, tx.recipient, tx.amount_sat))
