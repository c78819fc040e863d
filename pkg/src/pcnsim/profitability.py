"""Entity economics: RoI, economical fee, report tables, parameter sweeps."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path

from .engine import (
    AggregateResult,
    aggregate_entity_means,
    run_experiment,
    sat,
)
from .graph_state import SimParams, edge_fee
from .ingest import EntityMap, SnapshotGraph

logger = logging.getLogger(__name__)

DAYS_PER_YEAR = 365
INCOME_FLOOR_SAT = 50.0
TRAFFIC_FLOOR = 10.0
DEFAULT_TARGET_ROI = 0.05

ENTITY_REPORT_HEADER = (
    "entity",
    "capacity_sat",
    "capacity_fraction",
    "advertised_fee_sat",
    "daily_income_sat",
    "daily_traffic",
    "annual_roi",
    "fee_ratio",
    "economical_fee_sat",
    "rank_roi",
    "rank_fee",
    "rank_traffic",
)
SWEEP_HEADER = (
    "value",
    "entity",
    "income_sat",
    "traffic",
    "income_per_tx_sat",
    "failure_fraction",
    "mean_path_len",
)
DEPLETION_HEADER = ("entity", "income_sat", "optimistic_income_sat", "ratio")
ENTITY_REMOVAL_HEADER = ("entity", "failure_fraction", "baseline_fraction")


def annual_roi(daily_income_sat: float, capacity_sat: float) -> float | None:
    """Annualized yield on locked capacity; undefined without capacity."""
    if capacity_sat <= 0:
        return None
    return daily_income_sat * DAYS_PER_YEAR / capacity_sat


def economical_fee(
    advertised_fee_sat: float,
    capacity_sat: float,
    daily_income_sat: float,
    target_roi: float = DEFAULT_TARGET_ROI,
) -> tuple[float, float] | None:
    """Fee level (and scale factor) that would lift income to the target yield.

    The scale is required income over actual income; applying it to the
    advertised fee gives the break-even fee under unchanged traffic.
    """
    if daily_income_sat <= 0:
        return None
    required_daily = target_roi * capacity_sat / DAYS_PER_YEAR
    ratio = required_daily / daily_income_sat
    return advertised_fee_sat * ratio, ratio


@dataclass
class EntityReport:
    """One row of the profitability table."""

    entity: str
    capacity_sat: float | None
    capacity_fraction: float | None
    advertised_fee_sat: float
    daily_income_sat: float
    daily_traffic: float
    annual_roi: float | None
    fee_ratio: float | None
    economical_fee_sat: float | None
    rank_roi: int = 0
    rank_fee: int = 0
    rank_traffic: int = 0


def entity_capacities(snapshots: list[SnapshotGraph], entity_map: EntityMap) -> dict[str, float]:
    """Mean (over snapshots) of satoshis bound in channels adjacent to each entity."""
    totals: dict[str, float] = {}
    for graph in snapshots:
        for cid, (a, b) in graph.channel_endpoints.items():
            cap = graph.channel_capacity[cid]
            ea, eb = entity_map.entity_of(a), entity_map.entity_of(b)
            totals[ea] = totals.get(ea, 0.0) + cap
            if eb != ea:
                totals[eb] = totals.get(eb, 0.0) + cap
    n = len(snapshots)
    return {e: v / n for e, v in totals.items()}


def network_capacity(snapshots: list[SnapshotGraph]) -> float:
    return sum(g.total_capacity for g in snapshots) / len(snapshots)


def advertised_entity_fees(
    snapshots: list[SnapshotGraph],
    entity_map: EntityMap,
    amount_sat: int,
    weighting: str = "capacity",
) -> dict[str, float]:
    """Mean advertised fee (in sat, at the given amount) per entity.

    Averages the fee of the enabled directions departing the entity's nodes,
    weighted by channel capacity or uniformly, then averaged over the
    snapshots in which the entity has any outbound direction.
    """
    if weighting not in ("capacity", "uniform"):
        raise ValueError(f"weighting must be 'capacity' or 'uniform', got {weighting!r}")
    sums: dict[str, float] = {}
    days: dict[str, int] = {}
    for graph in snapshots:
        fee_weight: dict[str, tuple[float, float]] = {}
        for e in graph.edges:
            entity = entity_map.entity_of(e.src)
            w = float(e.capacity_sat) if weighting == "capacity" else 1.0
            f, tot = fee_weight.get(entity, (0.0, 0.0))
            fee_weight[entity] = (f + w * edge_fee(e.policy, amount_sat) / 1000, tot + w)
        for entity, (f, tot) in fee_weight.items():
            if tot > 0:
                sums[entity] = sums.get(entity, 0.0) + f / tot
                days[entity] = days.get(entity, 0) + 1
    return {e: sums[e] / days[e] for e in sums}


def entity_report(
    aggregate: AggregateResult,
    entity_map: EntityMap,
    snapshots: list[SnapshotGraph],
    params: SimParams,
    *,
    external_capacities: dict[str, float] | None = None,
    fee_weighting: str = "capacity",
    target_roi: float = DEFAULT_TARGET_ROI,
) -> list[EntityReport]:
    """Profitability rows for every entity above the income/traffic floors.

    Capacities come from the supplied external table when given (source of
    record for published comparisons), otherwise from the snapshots.
    """
    means = aggregate_entity_means(aggregate, entity_map)
    capacities = external_capacities if external_capacities is not None else entity_capacities(snapshots, entity_map)
    total_capacity = (
        sum(capacities.values()) if external_capacities is not None else network_capacity(snapshots)
    )
    fees = advertised_entity_fees(snapshots, entity_map, params.amount_sat, fee_weighting)

    reports: list[EntityReport] = []
    for entity in sorted(means):
        m = means[entity]
        if m.routing_income_sat < INCOME_FLOOR_SAT or m.routing_traffic < TRAFFIC_FLOOR:
            continue
        capacity = capacities.get(entity)
        if capacity is None or capacity <= 0:
            logger.warning("entity %s qualifies but has no capacity data", entity)
            capacity = None
        advertised = fees.get(entity, 0.0)
        roi = annual_roi(m.routing_income_sat, capacity) if capacity else None
        econ = (
            economical_fee(advertised, capacity, m.routing_income_sat, target_roi)
            if capacity
            else None
        )
        reports.append(
            EntityReport(
                entity=entity,
                capacity_sat=capacity,
                capacity_fraction=(capacity / total_capacity) if capacity and total_capacity else None,
                advertised_fee_sat=advertised,
                daily_income_sat=m.routing_income_sat,
                daily_traffic=m.routing_traffic,
                annual_roi=roi,
                fee_ratio=econ[1] if econ else None,
                economical_fee_sat=econ[0] if econ else None,
            )
        )

    def assign_ranks(key, attr) -> None:
        ordered = sorted(reports, key=lambda r: (-(key(r) if key(r) is not None else float("-inf")), r.entity))
        for rank, report in enumerate(ordered, start=1):
            setattr(report, attr, rank)

    assign_ranks(lambda r: r.annual_roi, "rank_roi")
    assign_ranks(lambda r: r.advertised_fee_sat, "rank_fee")
    assign_ranks(lambda r: r.daily_traffic, "rank_traffic")
    return reports


@dataclass
class SweepPoint:
    """Per-entity outcome at one grid value, with the run's global stats."""

    value: int
    entity: str
    income_sat: float
    traffic: float
    failure_fraction: float | None
    mean_path_len: float | None

    @property
    def income_per_tx_sat(self) -> float | None:
        if self.traffic == 0:
            return None
        return self.income_sat / self.traffic


def sweep(
    snapshots: list[SnapshotGraph],
    merchants: set[str] | frozenset[str],
    entity_map: EntityMap,
    params: SimParams,
    axis: str,
    values: list[int],
    *,
    workers: int = 1,
) -> list[SweepPoint]:
    """One full experiment per grid value of tau or the payment amount."""
    if axis not in ("alpha", "tau"):
        raise ValueError(f"axis must be 'alpha' or 'tau', got {axis!r}")
    if not values:
        raise ValueError("sweep needs at least one value")
    points: list[SweepPoint] = []
    for value in values:
        p = replace(params, amount_sat=value) if axis == "alpha" else replace(params, tau=value)
        aggregate = run_experiment(snapshots, merchants, entity_map, p, workers=workers)
        failure = aggregate.failure_fraction()
        mean_len = aggregate.mean_path_length()
        means = aggregate_entity_means(aggregate, entity_map)
        total_income = sum(m.routing_income_sat for m in means.values())
        total_traffic = sum(m.routing_traffic for m in means.values())
        points.append(
            SweepPoint(value, "ALL", total_income, total_traffic, failure, mean_len)
        )
        for entity in sorted(means):
            m = means[entity]
            if m.routing_income_sat == 0 and m.routing_traffic == 0:
                continue
            points.append(
                SweepPoint(value, entity, m.routing_income_sat, m.routing_traffic, failure, mean_len)
            )
    return points


def depletion_ratio(
    snapshots: list[SnapshotGraph],
    merchants: set[str] | frozenset[str],
    entity_map: EntityMap,
    params: SimParams,
    *,
    workers: int = 1,
) -> dict[str, tuple[float, float, float]]:
    """Per-entity (income, optimistic income, ratio) under paired seeds.

    The optimistic run ignores depletion; entities with zero optimistic
    income are omitted from the ratio map.
    """
    enforced = run_experiment(
        snapshots, merchants, entity_map, replace(params, ignore_depletion=False), workers=workers
    )
    optimistic = run_experiment(
        snapshots, merchants, entity_map, replace(params, ignore_depletion=True), workers=workers
    )
    enforced_means = aggregate_entity_means(enforced, entity_map)
    optimistic_means = aggregate_entity_means(optimistic, entity_map)
    out: dict[str, tuple[float, float, float]] = {}
    for entity, opt in optimistic_means.items():
        if opt.routing_income_sat <= 0:
            continue
        inc = enforced_means.get(entity)
        income = inc.routing_income_sat if inc else 0.0
        out[entity] = (income, opt.routing_income_sat, income / opt.routing_income_sat)
    return out


def entity_removal_failures(
    snapshots: list[SnapshotGraph],
    merchants: set[str] | frozenset[str],
    entity_map: EntityMap,
    params: SimParams,
    targets: list[str],
    *,
    workers: int = 1,
) -> tuple[float | None, dict[str, float | None]]:
    """Failure fraction after removing each entity, with the baseline level.

    The removed-entity runs route the baseline-sampled transactions on the
    reduced graph with the same seeds, so fractions are directly comparable.
    """
    baseline = run_experiment(snapshots, merchants, entity_map, params, workers=workers)
    base_fraction = baseline.failure_fraction()
    fractions: dict[str, float | None] = {}
    for entity in targets:
        members = frozenset(entity_map.members(entity))
        reduced = [g.without_nodes(members) for g in snapshots]
        result = run_experiment(
            reduced,
            merchants,
            entity_map,
            params,
            workers=workers,
            sample_graphs=snapshots,
        )
        fractions[entity] = result.failure_fraction()
    return base_fraction, fractions


def write_entity_report(path: str | Path, reports: list[EntityReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ENTITY_REPORT_HEADER)
        for r in sorted(reports, key=lambda r: r.rank_roi):
            writer.writerow(
                (
                    r.entity,
                    "" if r.capacity_sat is None else f"{r.capacity_sat:.0f}",
                    "" if r.capacity_fraction is None else f"{r.capacity_fraction:.6f}",
                    f"{r.advertised_fee_sat:.1f}",
                    f"{r.daily_income_sat:.1f}",
                    f"{r.daily_traffic:.1f}",
                    "" if r.annual_roi is None else f"{r.annual_roi * 100:.4f}",
                    "" if r.fee_ratio is None else f"{r.fee_ratio:.1f}",
                    "" if r.economical_fee_sat is None else f"{r.economical_fee_sat:.1f}",
                    r.rank_roi,
                    r.rank_fee,
                    r.rank_traffic,
                )
            )


def write_sweep(path: str | Path, points: list[SweepPoint]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for p in points:
            per_tx = p.income_per_tx_sat
            writer.writerow(
                (
                    p.value,
                    p.entity,
                    f"{p.income_sat:.1f}",
                    f"{p.traffic:.1f}",
                    "" if per_tx is None else f"{per_tx:.3f}",
                    "" if p.failure_fraction is None else f"{p.failure_fraction:.4f}",
                    "" if p.mean_path_len is None else f"{p.mean_path_len:.4f}",
                )
            )


def write_depletion(path: str | Path, ratios: dict[str, tuple[float, float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DEPLETION_HEADER)
        for entity in sorted(ratios):
            income, optimistic, ratio = ratios[entity]
            writer.writerow((entity, f"{income:.1f}", f"{optimistic:.1f}", f"{ratio:.4f}"))


def write_entity_removal(
    path: str | Path, baseline: float | None, fractions: dict[str, float | None]
) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ENTITY_REMOVAL_HEADER)
        base = "" if baseline is None else f"{baseline:.4f}"
        for entity in sorted(fractions):
            f = fractions[entity]
            writer.writerow((entity, "" if f is None else f"{f:.4f}", base))
