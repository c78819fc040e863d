"""Privacy exposure metrics and deliberately lengthened low-cost routing."""

from __future__ import annotations

import csv
import logging
import statistics
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .engine import GA_STREAM, SAMPLER_STREAM, cell_seed
from .graph_state import BalanceState, SimParams, init_balances
from .ingest import SnapshotGraph
from .router import NO_PATH, PaymentOutcome, Router, SUCCESS, path_cost
from .sampler import Transaction, sample_transactions
from .seeds import SeedPath

logger = logging.getLogger(__name__)

PRIVACY_HEADER = ("epsilon", "hop_count", "fraction")
PLAUSIBILITY_HEADER = ("amount_sat", "threshold", "fraction")
COST_VS_LENGTH_HEADER = ("L", "mean_cost_sat", "median_cost_sat", "success_rate")


@dataclass(frozen=True)
class GAParams:
    """Hop-injection search budget; the length penalty dwarfs any real fee."""

    target_length: int
    population_size: int = 50
    generations: int = 100
    tournament_size: int = 3
    elite_count: int = 1
    length_penalty_msat: int = 10**9
    seed: int = 0

    def __post_init__(self) -> None:
        if self.target_length < 1:
            raise ValueError("target_length must be at least 1")
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")


@dataclass(frozen=True)
class PlausibilityCurve:
    amount_sat: int
    points: tuple[tuple[int, float], ...]


def single_hop_fraction(outcomes: list[PaymentOutcome], *, routed_only: bool = False) -> float | None:
    """Fraction of payments with exactly one intermediary (two channel hops).

    The denominator counts all successful payments by default; routed_only
    drops direct (single-channel) payments from it.
    """
    successes = [o for o in outcomes if o.success]
    if routed_only:
        successes = [o for o in successes if o.hop_count >= 2]
    if not successes:
        return None
    return sum(1 for o in successes if o.hop_count == 2) / len(successes)


def plausibility_curve(
    graph: SnapshotGraph, amount_sat: int, thresholds: list[int]
) -> PlausibilityCurve:
    """Per degree threshold d: fraction of nodes with more than d channels
    of capacity at least the amount."""
    if list(thresholds) != sorted(thresholds):
        raise ValueError("thresholds must be sorted ascending")
    counts: dict[str, int] = dict.fromkeys(graph.nodes, 0)
    for cid, (a, b) in graph.channel_endpoints.items():
        if graph.channel_capacity[cid] >= amount_sat:
            counts[a] += 1
            counts[b] += 1
    n = len(graph.nodes)
    points = tuple(
        (d, (sum(1 for c in counts.values() if c > d) / n) if n else 0.0) for d in thresholds
    )
    return PlausibilityCurve(amount_sat=amount_sat, points=points)


class _PathSpace:
    """Mutation helpers over the usable-edge structure of a frozen state."""

    def __init__(self, router: Router, state: BalanceState):
        self.router = router
        self.state = state

    def edge_ok(self, u: str, v: str) -> bool:
        return self.router.best_channel(self.state, u, v) is not None

    def detour_candidates(self, u: str, v: str, path: tuple[str, ...]) -> list[str]:
        on_path = set(path)
        out: list[str] = []
        for w in self.router.successors(u):
            if w in on_path:
                continue
            # Both legs of the detour must be usable, not merely present.
            if self.edge_ok(u, w) and self.edge_ok(w, v):
                out.append(w)
        return out

    def insert(self, path: tuple[str, ...], rng: np.random.Generator) -> tuple[str, ...] | None:
        i = int(rng.integers(0, len(path) - 1))
        candidates = self.detour_candidates(path[i], path[i + 1], path)
        if not candidates:
            return None
        w = candidates[int(rng.integers(0, len(candidates)))]
        return path[: i + 1] + (w,) + path[i + 1 :]

    def remove(self, path: tuple[str, ...], rng: np.random.Generator) -> tuple[str, ...] | None:
        if len(path) < 3:
            return None
        i = int(rng.integers(1, len(path) - 1))
        if not self.edge_ok(path[i - 1], path[i + 1]):
            return None
        return path[: i] + path[i + 1 :]

    def mutate(self, path: tuple[str, ...], rng: np.random.Generator, bias_insert: bool) -> tuple[str, ...]:
        if bias_insert or rng.random() < 0.5:
            mutated = self.insert(path, rng)
            if mutated is None:
                mutated = self.remove(path, rng)
        else:
            mutated = self.remove(path, rng)
            if mutated is None:
                mutated = self.insert(path, rng)
        return mutated if mutated is not None else path


def lengthened_path(
    graph: SnapshotGraph,
    state: BalanceState,
    sender: str,
    recipient: str,
    amount_sat: int,
    ga_params: GAParams,
    params: SimParams | None = None,
    *,
    router: Router | None = None,
) -> PaymentOutcome:
    """Lowest-cost simple feasible path with exactly the prescribed hop count.

    Seeds the population with the unconstrained cheapest path (kept verbatim
    by elitism), then evolves detour insertions/removals under a fitness of
    total fee plus a heavy per-hop deviation penalty. Fails if no individual
    of the exact length is found within the generation budget.
    """
    params = params or SimParams(amount_sat=amount_sat)
    router = router or Router(graph, amount_sat, params)
    base = router.route(state, sender, recipient)
    if not base.success:
        return base
    L = ga_params.target_length
    space = _PathSpace(router, state)
    rng = SeedPath(ga_params.seed).generator()

    def cost_of(path: tuple[str, ...]) -> int:
        total, _ = path_cost(graph, path, amount_sat, params, state=state)
        return total

    def fitness(path: tuple[str, ...]) -> int:
        hops = len(path) - 1
        return cost_of(path) + ga_params.length_penalty_msat * abs(hops - L)

    population: list[tuple[str, ...]] = [base.path]
    while len(population) < ga_params.population_size:
        candidate = base.path
        for _ in range(max(1, L - (len(base.path) - 1)) + 1):
            candidate = space.mutate(candidate, rng, bias_insert=len(candidate) - 1 < L)
        population.append(candidate)

    best_exact: tuple[int, tuple[str, ...]] | None = None

    def consider(path: tuple[str, ...]) -> None:
        nonlocal best_exact
        if len(path) - 1 != L:
            return
        key = (cost_of(path), path)
        if best_exact is None or key < best_exact:
            best_exact = key

    for path in population:
        consider(path)

    scored = sorted((fitness(p), p) for p in population)
    for _ in range(ga_params.generations):
        next_gen = [p for _, p in scored[: ga_params.elite_count]]
        while len(next_gen) < ga_params.population_size:
            picks = rng.integers(0, len(scored), size=ga_params.tournament_size)
            winner = min(scored[int(i)] for i in picks)[1]
            child = space.mutate(winner, rng, bias_insert=len(winner) - 1 < L)
            consider(child)
            next_gen.append(child)
        scored = sorted((fitness(p), p) for p in next_gen)

    if best_exact is None:
        return PaymentOutcome(base.transaction, NO_PATH)
    _, path = best_exact
    edges = []
    for u, v in zip(path, path[1:]):
        picked = router.best_channel(state, u, v)
        assert picked is not None
        edges.append(picked[1])
    total, credits = path_cost(graph, path, amount_sat, params, state=state)
    return PaymentOutcome(
        transaction=base.transaction,
        status=SUCCESS,
        path=path,
        edges=tuple(edges),
        total_fee_msat=total,
        credits_msat=credits,
    )


@dataclass
class CostVsLength:
    target_length: int
    mean_cost_sat: float | None
    median_cost_sat: float | None
    success_rate: float


def cost_vs_length(
    snapshots: list[SnapshotGraph],
    merchants: set[str] | frozenset[str],
    params: SimParams,
    lengths: list[int],
    *,
    ga_defaults: GAParams | None = None,
    max_payments: int | None = 200,
) -> list[CostVsLength]:
    """Mean/median sender cost of exact-length routing per target length.

    Pairs come from the day's sample on each snapshot (first run's seed) and
    are evaluated against the fresh initial balances; a target below a
    pair's unconstrained hop count counts as a failure. max_payments bounds
    the evaluated pairs per snapshot to keep the search budget at desk scale.
    """
    jobs: list[tuple[SnapshotGraph, BalanceState, Router, Transaction, SeedPath]] = []
    for si, graph in enumerate(snapshots):
        seed = cell_seed(params.seed, si, 0)
        state = init_balances(graph, seed, ignore_depletion=params.ignore_depletion)
        rng = seed.child(SAMPLER_STREAM).generator()
        transactions = sample_transactions(graph, merchants, params, rng)
        if max_payments is not None:
            transactions = transactions[:max_payments]
        router = Router(graph, params.amount_sat, params)
        ga_seed_root = seed.child(GA_STREAM)
        for idx, tx in enumerate(transactions):
            jobs.append((graph, state, router, tx, ga_seed_root.child(idx)))

    results: list[CostVsLength] = []
    for L in lengths:
        costs: list[float] = []
        attempts = successes = 0
        for graph, state, router, tx, ga_seed in jobs:
            base = router.route(state, tx.sender, tx.recipient, tx)
            if not base.success:
                continue
            attempts += 1
            if L < base.hop_count:
                continue
            pay_seed = int(ga_seed.generator().integers(0, 2**63))
            if ga_defaults is not None:
                ga = replace(ga_defaults, target_length=L, seed=pay_seed)
            else:
                ga = GAParams(target_length=L, seed=pay_seed)
            outcome = lengthened_path(
                graph, state, tx.sender, tx.recipient, params.amount_sat, ga, params, router=router
            )
            if outcome.success:
                successes += 1
                costs.append(outcome.total_fee_msat / 1000)
        results.append(
            CostVsLength(
                target_length=L,
                mean_cost_sat=(sum(costs) / len(costs)) if costs else None,
                median_cost_sat=statistics.median(costs) if costs else None,
                success_rate=(successes / attempts) if attempts else 0.0,
            )
        )
    return results


def write_privacy(path: str | Path, rows: list[tuple[float, int, float]]) -> None:
    """Path-length distribution rows: (epsilon, hop_count, fraction)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PRIVACY_HEADER)
        for eps, hop, fraction in rows:
            writer.writerow((f"{eps:.2f}", hop, f"{fraction:.6f}"))


def write_plausibility(path: str | Path, curves: list[PlausibilityCurve]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PLAUSIBILITY_HEADER)
        for curve in curves:
            for d, fraction in curve.points:
                writer.writerow((curve.amount_sat, d, f"{fraction:.6f}"))


def write_cost_vs_length(path: str | Path, rows: list[CostVsLength]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COST_VS_LENGTH_HEADER)
        for r in rows:
            writer.writerow(
                (
                    r.target_length,
                    "" if r.mean_cost_sat is None else f"{r.mean_cost_sat:.3f}",
                    "" if r.median_cost_sat is None else f"{r.median_cost_sat:.3f}",
                    f"{r.success_rate:.4f}",
                )
            )
