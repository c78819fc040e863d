"""Deterministic traffic simulator for payment channel networks.

Estimates per-node routing income, traffic, fee-competition headroom,
profitability, and payment privacy from public graph snapshots alone.
"""

__version__ = "0.1.0"

from .graph_state import BalanceState, SimParams, apply_payment, edge_fee, init_balances, usable
from .ingest import (
    DirectedChannelEdge,
    EdgeStreamEvent,
    EntityMap,
    FeePolicy,
    SnapshotGraph,
    load_edge_stream,
    load_entities,
    load_merchants,
    load_snapshot,
    load_snapshots,
)
from .router import PaymentOutcome, Router, cheapest_path, path_cost
from .sampler import Transaction, sample_transactions

__all__ = [
    "BalanceState",
    "DirectedChannelEdge",
    "EdgeStreamEvent",
    "EntityMap",
    "FeePolicy",
    "PaymentOutcome",
    "Router",
    "SimParams",
    "SnapshotGraph",
    "Transaction",
    "apply_payment",
    "cheapest_path",
    "edge_fee",
    "init_balances",
    "load_edge_stream",
    "load_entities",
    "load_merchants",
    "load_snapshot",
    "load_snapshots",
    "path_cost",
    "sample_transactions",
    "usable",
]
