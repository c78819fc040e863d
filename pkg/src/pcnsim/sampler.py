"""Daily transaction sampling with merchant-biased recipients."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .graph_state import SimParams
from .ingest import SnapshotGraph

logger = logging.getLogger(__name__)

# Bounded self-pair redraws before falling back to a uniform non-sender draw;
# the merchant pool can consist of the sender alone.
_REDRAW_LIMIT = 100


@dataclass(frozen=True)
class Transaction:
    sender: str
    recipient: str
    amount_sat: int

    def __post_init__(self) -> None:
        if self.sender == self.recipient:
            raise ValueError("sender and recipient must differ")


def sample_transactions(
    graph: SnapshotGraph,
    merchants: set[str] | frozenset[str],
    params: SimParams,
    rng: np.random.Generator,
) -> list[Transaction]:
    """Draw the day's tau (sender, recipient, amount) triples.

    Senders are uniform over all nodes, with replacement. floor(ratio*tau)
    recipients come from merchants present in the graph, proportionally to
    their channel count; the remaining recipients are uniform over all
    nodes. Recipients are shuffled against the sender list; a recipient
    colliding with its sender is redrawn from the pool it came from.

    Senders are drawn before any merchant-dependent choice, so the sender
    multiset for a given seed does not depend on the merchant ratio.
    """
    if params.tau == 0:
        return []
    nodes = graph.sorted_nodes
    if not nodes:
        raise ValueError("cannot sample transactions from an empty graph")
    if len(nodes) < 2:
        raise ValueError("need at least two nodes to pair senders with recipients")

    n = len(nodes)
    sender_idx = rng.integers(0, n, size=params.tau)

    merchant_pool = sorted(m for m in merchants if m in graph.nodes)
    weights = np.array([graph.degree[m] for m in merchant_pool], dtype=float)
    total_weight = float(weights.sum()) if merchant_pool else 0.0
    merchant_count = math.floor(params.merchant_ratio * params.tau)
    use_merchants = merchant_count > 0 and total_weight > 0
    if merchant_count > 0 and not use_merchants:
        logger.warning(
            "snapshot %s: no merchants with positive degree; %d merchant draws fall back to uniform",
            graph.snapshot_id,
            merchant_count,
        )
    probs = weights / total_weight if use_merchants else None

    recipients: list[tuple[str, bool]] = []
    if use_merchants:
        picks = rng.choice(len(merchant_pool), size=merchant_count, p=probs)
        recipients.extend((merchant_pool[int(i)], True) for i in picks)
    uniform_count = params.tau - len(recipients)
    if uniform_count:
        picks = rng.integers(0, n, size=uniform_count)
        recipients.extend((nodes[int(i)], False) for i in picks)

    order = rng.permutation(params.tau)
    transactions: list[Transaction] = []
    for slot in range(params.tau):
        s_idx = int(sender_idx[slot])
        sender = nodes[s_idx]
        recipient, merchant_draw = recipients[int(order[slot])]
        attempts = 0
        while recipient == sender:
            attempts += 1
            if attempts > _REDRAW_LIMIT:
                j = int(rng.integers(0, n - 1))
                recipient = nodes[j if j < s_idx else j + 1]
                logger.debug("redraw limit hit for sender %s; uniform non-sender fallback", sender)
                break
            if merchant_draw:
                recipient = merchant_pool[int(rng.choice(len(merchant_pool), p=probs))]
            else:
                recipient = nodes[int(rng.integers(0, n))]
        transactions.append(Transaction(sender, recipient, params.amount_sat))
    return transactions
