"""Fee-competition analysis: removal impact, reroute fee deltas, optimal increments."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

from .engine import AggregateResult, sat
from .graph_state import SimParams, init_balances
from .ingest import EntityMap, SnapshotGraph
from .router import PaymentOutcome, Router
from .seeds import SeedPath

logger = logging.getLogger(__name__)

REMOVAL_HEADER = ("target", "tau_x", "phi_x", "failure_ratio", "beta_star_sat", "gain_sat")
GROUPS_HEADER = ("rank_lo", "rank_hi", "nodes", "mean_failure_ratio", "mean_beta_star_sat", "mean_gain_sat")

# Rank bands over the income ordering: top 1-10, 11-20, 21-50, 51-100, 101-.
RANK_BANDS = ((1, 10), (11, 20), (21, 50), (51, 100), (101, None))


@dataclass
class RemovalAnalysis:
    """Traffic through a target and what happens when the target disappears."""

    label: str
    members: tuple[str, ...]
    tau_x: int
    phi_x: int
    deltas_msat: list[int]
    beta_star_msat: int
    gain_msat: int

    @property
    def failure_ratio(self) -> float | None:
        if self.tau_x == 0:
            return None
        return self.phi_x / self.tau_x

    def merge(self, other: "RemovalAnalysis") -> "RemovalAnalysis":
        """Pool another cell's counts and deltas; the increment is re-optimized."""
        deltas = self.deltas_msat + other.deltas_msat
        beta, gain = optimal_base_fee_increment(deltas)
        return RemovalAnalysis(
            label=self.label,
            members=self.members,
            tau_x=self.tau_x + other.tau_x,
            phi_x=self.phi_x + other.phi_x,
            deltas_msat=deltas,
            beta_star_msat=beta,
            gain_msat=gain,
        )


def optimal_base_fee_increment(deltas_msat: list[int]) -> tuple[int, int]:
    """Best flat increment beta* and its take beta* x |{delta >= beta*}|.

    The objective is a step function of beta, so the maximizer lies on a
    distinct delta value; ties go to the smaller increment.
    """
    if any(d < 0 for d in deltas_msat):
        raise ValueError("fee deltas must be non-negative")
    if not deltas_msat:
        return 0, 0
    ordered = sorted(deltas_msat)
    n = len(ordered)
    best_beta, best_gain = 0, 0
    for i, beta in enumerate(ordered):
        if i > 0 and beta == ordered[i - 1]:
            continue
        gain = beta * (n - i)
        if gain > best_gain or (gain == best_gain and beta < best_beta):
            best_beta, best_gain = beta, gain
    return best_beta, best_gain


def removal_impact(
    graph: SnapshotGraph,
    state_seed: SeedPath | int,
    outcomes: list[PaymentOutcome],
    target: set[str] | frozenset[str],
    params: SimParams,
    label: str | None = None,
) -> RemovalAnalysis:
    """Re-route the baseline payments that crossed the target on the reduced graph.

    Both the with-target and without-target routes are costed against a fresh
    balance state built from the same seed, so each delta is a pure
    topology/fee difference and never negative. Payments with no avoiding
    path count as failures.
    """
    members = frozenset(target)
    if not members:
        raise ValueError("target node set must not be empty")
    through = [
        o
        for o in outcomes
        if o.success and any(node in members for node in o.path[1:-1])
    ]
    tau_x = len(through)
    if tau_x == 0:
        return RemovalAnalysis(
            label=label or "+".join(sorted(members)),
            members=tuple(sorted(members)),
            tau_x=0,
            phi_x=0,
            deltas_msat=[],
            beta_star_msat=0,
            gain_msat=0,
        )

    reduced = graph.without_nodes(members)
    base_state = init_balances(graph, state_seed, ignore_depletion=params.ignore_depletion)
    reduced_state = init_balances(reduced, state_seed, ignore_depletion=params.ignore_depletion)
    base_router = Router(graph, params.amount_sat, params)
    reduced_router = Router(reduced, params.amount_sat, params)

    phi = 0
    deltas: list[int] = []
    for o in through:
        tx = o.transaction
        detour = reduced_router.route(reduced_state, tx.sender, tx.recipient, tx)
        if not detour.success:
            phi += 1
            continue
        baseline = base_router.route(base_state, tx.sender, tx.recipient, tx)
        # The reduced graph is a subgraph with identical balances, so the
        # baseline route exists and is no more expensive than the detour.
        deltas.append(detour.total_fee_msat - baseline.total_fee_msat)
    beta, gain = optimal_base_fee_increment(deltas)
    return RemovalAnalysis(
        label=label or "+".join(sorted(members)),
        members=tuple(sorted(members)),
        tau_x=tau_x,
        phi_x=phi,
        deltas_msat=deltas,
        beta_star_msat=beta,
        gain_msat=gain,
    )


@dataclass
class GroupRow:
    rank_lo: int
    rank_hi: int | None
    nodes: int
    mean_failure_ratio: float | None
    mean_beta_star_msat: float
    mean_gain_msat: float


def group_report(
    analyses: dict[str, RemovalAnalysis],
    income_ranking: list[str],
) -> list[GroupRow]:
    """Band-average the removal analyses over the income ranking.

    Targets with no baseline traffic are excluded from the failure-ratio
    mean but still contribute their zero increment and gain.
    """
    rank_of = {label: i + 1 for i, label in enumerate(income_ranking)}
    rows: list[GroupRow] = []
    for lo, hi in RANK_BANDS:
        band = [
            a
            for label, a in analyses.items()
            if label in rank_of and lo <= rank_of[label] and (hi is None or rank_of[label] <= hi)
        ]
        if not band:
            rows.append(GroupRow(lo, hi, 0, None, 0.0, 0.0))
            continue
        ratios = [a.failure_ratio for a in band if a.failure_ratio is not None]
        rows.append(
            GroupRow(
                rank_lo=lo,
                rank_hi=hi,
                nodes=len(band),
                mean_failure_ratio=sum(ratios) / len(ratios) if ratios else None,
                mean_beta_star_msat=sum(a.beta_star_msat for a in band) / len(band),
                mean_gain_msat=sum(a.gain_msat for a in band) / len(band),
            )
        )
    return rows


def analyze_targets(
    snapshots: list[SnapshotGraph],
    baseline: AggregateResult,
    targets: dict[str, frozenset[str]],
    params: SimParams,
) -> dict[str, RemovalAnalysis]:
    """Pool removal analyses for each target over every baseline cell.

    Requires the baseline to have been run with keep_outcomes so the realized
    routes are known.
    """
    from .engine import cell_seed  # local import to avoid a cycle at module load

    by_snapshot = {g.snapshot_id: (si, g) for si, g in enumerate(snapshots)}
    pooled: dict[str, RemovalAnalysis] = {}
    for cell in baseline.cells:
        if cell.outcomes is None:
            raise ValueError("baseline experiment must keep outcomes for removal analysis")
        si, graph = by_snapshot[cell.snapshot_id]
        seed = cell_seed(params.seed, si, cell.run)
        for label, members in targets.items():
            analysis = removal_impact(graph, seed, cell.outcomes, members, params, label=label)
            if label in pooled:
                pooled[label] = pooled[label].merge(analysis)
            else:
                pooled[label] = analysis
    return pooled


def write_removal(path: str | Path, analyses: dict[str, RemovalAnalysis]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REMOVAL_HEADER)
        for label in sorted(analyses):
            a = analyses[label]
            ratio = a.failure_ratio
            writer.writerow(
                (
                    label,
                    a.tau_x,
                    a.phi_x,
                    "" if ratio is None else f"{ratio:.4f}",
                    sat(a.beta_star_msat),
                    sat(a.gain_msat),
                )
            )


def write_groups(path: str | Path, rows: list[GroupRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GROUPS_HEADER)
        for row in rows:
            writer.writerow(
                (
                    row.rank_lo,
                    "" if row.rank_hi is None else row.rank_hi,
                    row.nodes,
                    "" if row.mean_failure_ratio is None else f"{row.mean_failure_ratio:.4f}",
                    sat(row.mean_beta_star_msat),
                    sat(row.mean_gain_msat),
                )
            )
