"""Cheapest fee-weighted path search under per-direction capacity constraints."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .graph_state import BalanceState, SimParams, edge_fee
from .ingest import DirectedChannelEdge, SnapshotGraph
from .sampler import Transaction

SUCCESS = "success"
NO_PATH = "no-path"


@dataclass(frozen=True)
class PaymentOutcome:
    """Result of routing one transaction: the path taken or the failure."""

    transaction: Transaction
    status: str
    path: tuple[str, ...] = ()
    edges: tuple[DirectedChannelEdge, ...] = ()
    total_fee_msat: int = 0
    credits_msat: tuple[tuple[str, int], ...] = ()

    @property
    def success(self) -> bool:
        return self.status == SUCCESS

    @property
    def hop_count(self) -> int:
        return len(self.edges)


class Router:
    """Search structure for one (graph, amount) pair, reusable across payments.

    Fees depend only on the payment amount, so per-edge weights and the
    per-pair channel preference order (cheapest fee, then channel id) are
    precomputed once. Searches read balances but never mutate them.
    """

    def __init__(self, graph: SnapshotGraph, amount_sat: int, params: SimParams):
        self.graph = graph
        self.amount_sat = amount_sat
        self.params = params
        by_pair: dict[tuple[str, str], list[tuple[int, DirectedChannelEdge]]] = {}
        for e in graph.edges:
            by_pair.setdefault((e.src, e.trg), []).append((edge_fee(e.policy, amount_sat), e))
        for options in by_pair.values():
            options.sort(key=lambda t: (t[0], t[1].channel_id))
        adj: dict[str, list[tuple[str, tuple[tuple[int, DirectedChannelEdge], ...]]]] = {}
        preds: dict[str, set[str]] = {}
        for (u, v), options in by_pair.items():
            adj.setdefault(u, []).append((v, tuple(options)))
            preds.setdefault(v, set()).add(u)
        for u in adj:
            adj[u].sort(key=lambda t: t[0])
        self._adj = adj
        self._pairs = {pair: tuple(options) for pair, options in by_pair.items()}
        self._preds = {v: tuple(sorted(us)) for v, us in preds.items()}

    def successors(self, u: str) -> tuple[str, ...]:
        return tuple(v for v, _ in self._adj.get(u, ()))

    def predecessors(self, v: str) -> tuple[str, ...]:
        return self._preds.get(v, ())

    def best_channel(
        self, state: BalanceState, u: str, v: str
    ) -> tuple[int, DirectedChannelEdge] | None:
        """Cheapest usable channel from u to v, or None if all are depleted."""
        amount = self.amount_sat
        for fee, e in self._pairs.get((u, v), ()):
            if state.can_send(e, amount):
                return fee, e
        return None

    def route(
        self,
        state: BalanceState,
        sender: str,
        recipient: str,
        transaction: Transaction | None = None,
    ) -> PaymentOutcome:
        """Minimum-total-fee simple path from sender to recipient.

        Ties break by fewer hops, then by the lexicographically smallest node
        sequence; labels are (cost, hops, path) tuples so the heap order is
        total and the search fully deterministic. By default the final edge
        into the recipient costs nothing.
        """
        if sender == recipient:
            raise ValueError("sender and recipient must differ")
        tx = transaction or Transaction(sender, recipient, self.amount_sat)
        if sender not in self.graph.nodes or recipient not in self.graph.nodes:
            return PaymentOutcome(tx, NO_PATH)

        amount = self.amount_sat
        free_last = not self.params.count_last_hop_fee
        max_hops = self.params.max_hops
        adj = self._adj
        settled: set[str] = set()
        heap: list[tuple[int, int, tuple[str, ...]]] = [(0, 0, (sender,))]
        while heap:
            cost, hops, path = heapq.heappop(heap)
            u = path[-1]
            if u in settled:
                continue
            settled.add(u)
            if u == recipient:
                return self._build_outcome(state, tx, path)
            if hops >= max_hops:
                continue
            for v, options in adj.get(u, ()):
                if v in settled:
                    continue
                fee = None
                for f, e in options:
                    if state.can_send(e, amount):
                        fee = f
                        break
                if fee is None:
                    continue
                weight = 0 if (free_last and v == recipient) else fee
                heapq.heappush(heap, (cost + weight, hops + 1, path + (v,)))
        return PaymentOutcome(tx, NO_PATH)

    def _build_outcome(self, state: BalanceState, tx: Transaction, path: tuple[str, ...]) -> PaymentOutcome:
        edges = []
        for u, v in zip(path, path[1:]):
            picked = self.best_channel(state, u, v)
            assert picked is not None  # the search only relaxed usable pairs
            edges.append(picked[1])
        total, credits = path_cost(self.graph, path, self.amount_sat, self.params, state=state)
        return PaymentOutcome(
            transaction=tx,
            status=SUCCESS,
            path=path,
            edges=tuple(edges),
            total_fee_msat=total,
            credits_msat=credits,
        )


def path_cost(
    graph: SnapshotGraph,
    path: tuple[str, ...],
    amount_sat: int,
    params: SimParams,
    state: BalanceState | None = None,
) -> tuple[int, tuple[tuple[str, int], ...]]:
    """Total fee and per-node credit list for a node path.

    The node entered by each edge is credited that edge's fee; the final
    edge into the recipient is free unless count_last_hop_fee is set, in
    which case its fee is credited to the recipient. With multiple channels
    between a pair, the cheapest (usable, when a state is given) is costed.
    """
    if len(path) < 2:
        return 0, ()
    credits: list[tuple[str, int]] = []
    k = len(path) - 1
    for i, (u, v) in enumerate(zip(path, path[1:])):
        candidates = [
            (edge_fee(e.policy, amount_sat), e)
            for e in graph.out_edges.get(u, ())
            if e.trg == v and (state is None or state.can_send(e, amount_sat))
        ]
        if not candidates:
            raise ValueError(f"path uses nonexistent or unusable edge {u}->{v}")
        fee = min(candidates, key=lambda t: (t[0], t[1].channel_id))[0]
        if i < k - 1:
            credits.append((v, fee))
        elif params.count_last_hop_fee:
            credits.append((v, fee))
    total = sum(fee for _, fee in credits)
    return total, tuple(credits)


def cheapest_path(
    graph: SnapshotGraph,
    state: BalanceState,
    sender: str,
    recipient: str,
    amount_sat: int,
    params: SimParams,
) -> PaymentOutcome:
    """One-shot cheapest-path search; builds a fresh Router per call."""
    return Router(graph, amount_sat, params).route(state, sender, recipient)
