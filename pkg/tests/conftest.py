"""Shared fixture builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from pcnsim.graph_state import BalanceState, SimParams
from pcnsim.ingest import DirectedChannelEdge, FeePolicy, SnapshotGraph


def pol(base_msat: int = 0, rate_ppm: int = 0, disabled: bool = False) -> FeePolicy:
    return FeePolicy(base_fee_msat=base_msat, fee_rate_ppm=rate_ppm, disabled=disabled)


def build_graph(channels, snapshot_id: str = "day0") -> SnapshotGraph:
    """Channels are (cid, u, v, capacity, policy_uv, policy_vu | None)."""
    edges = []
    for cid, u, v, cap, p_uv, p_vu in channels:
        if p_uv is not None:
            edges.append(DirectedChannelEdge(cid, u, v, cap, p_uv))
        if p_vu is not None:
            edges.append(DirectedChannelEdge(cid, v, u, cap, p_vu))
    return SnapshotGraph(snapshot_id=snapshot_id, edges=tuple(edges))


def full_state(graph: SnapshotGraph, *, ignore_depletion: bool = False) -> BalanceState:
    """Balances with every direction holding the full capacity on both sides.

    Intentionally violates conservation; handy when a test wants every edge
    usable regardless of direction.
    """
    balances = {}
    for cid, (a, b) in graph.channel_endpoints.items():
        cap = graph.channel_capacity[cid]
        balances[(cid, a)] = cap
        balances[(cid, b)] = cap
    return BalanceState(balances, ignore_depletion)


def split_state(graph: SnapshotGraph, splits: dict[str, int] | None = None) -> BalanceState:
    """Conserving balances; splits maps channel id -> balance on the sorted-first side."""
    splits = splits or {}
    balances = {}
    for cid, (a, b) in graph.channel_endpoints.items():
        cap = graph.channel_capacity[cid]
        fwd = splits.get(cid, cap // 2)
        balances[(cid, a)] = fwd
        balances[(cid, b)] = cap - fwd
    return BalanceState(balances)


def random_snapshot(
    rng: np.random.Generator,
    n_nodes: int,
    edge_prob: float = 0.35,
    max_base_msat: int = 20_000,
    max_rate_ppm: int = 3_000,
    capacity: int = 1_000_000,
    snapshot_id: str = "rnd",
) -> SnapshotGraph:
    """Random channel graph; every sampled pair gets one bidirectional channel."""
    names = [f"n{i:02d}" for i in range(n_nodes)]
    channels = []
    cid = 0
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if rng.random() < edge_prob:
                channels.append(
                    (
                        f"ch{cid:04d}",
                        names[i],
                        names[j],
                        capacity,
                        pol(int(rng.integers(0, max_base_msat)), int(rng.integers(0, max_rate_ppm))),
                        pol(int(rng.integers(0, max_base_msat)), int(rng.integers(0, max_rate_ppm))),
                    )
                )
                cid += 1
    return build_graph(channels, snapshot_id=snapshot_id)


@pytest.fixture
def line_graph() -> SnapshotGraph:
    """a - b - c with a distinctive fee on every direction."""
    return build_graph(
        [
            ("ab", "a", "b", 1_000_000, pol(10_000, 1_000), pol(1_000, 100)),
            ("bc", "b", "c", 1_000_000, pol(5_000, 500), pol(2_000, 200)),
        ]
    )


@pytest.fixture
def diamond_graph() -> SnapshotGraph:
    """s -> a -> t and s -> b -> t; entering a costs 10 sat, entering b 20 sat."""
    return build_graph(
        [
            ("sa", "s", "a", 1_000_000, pol(10_000, 0), pol()),
            ("sb", "s", "b", 1_000_000, pol(20_000, 0), pol()),
            ("at", "a", "t", 1_000_000, pol(7_000, 0), pol()),
            ("bt", "b", "t", 1_000_000, pol(9_000, 0), pol()),
        ]
    )


def default_params(**overrides) -> SimParams:
    base = dict(tau=10, amount_sat=60_000, merchant_ratio=0.8, runs=1, seed=7)
    base.update(overrides)
    return SimParams(**base)


def synthetic_dataset(
    root,
    *,
    seed: int = 12345,
    n_nodes: int = 40,
    n_snapshots: int = 2,
    n_channels: int = 120,
    n_merchants: int = 8,
):
    """Write a small but structured on-disk dataset for CLI and acceptance runs.

    A hub-biased random multigraph: a few well-connected routers plus a
    periphery, stable across snapshots except for per-day fee jitter and a
    handful of churned channels. Returns the four input paths.
    """
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    nodes = [f"node{i:03d}" for i in range(n_nodes)]
    hubs = nodes[:6]

    def pick_pair():
        if rng.random() < 0.7:
            a = hubs[int(rng.integers(0, len(hubs)))]
        else:
            a = nodes[int(rng.integers(0, n_nodes))]
        b = nodes[int(rng.integers(0, n_nodes))]
        while b == a:
            b = nodes[int(rng.integers(0, n_nodes))]
        return a, b

    channels = []
    for cid in range(n_channels):
        a, b = pick_pair()
        cap = int(rng.choice([120_000, 400_000, 1_000_000, 5_000_000]))
        channels.append((f"ch{cid:04d}", a, b, cap))

    snap_dir = root / "snapshots"
    snap_dir.mkdir(exist_ok=True)
    for day in range(n_snapshots):
        lines = ["snapshot_id,channel_id,src,trg,capacity_sat,base_fee_msat,fee_rate_ppm,disabled"]
        sid = f"2019-02-{day + 1:02d}"
        for cid, a, b, cap in channels:
            # A few channels churn per day; fees jitter but stay put per day.
            if rng.random() < 0.05:
                continue
            for src, trg in ((a, b), (b, a)):
                base = int(rng.integers(0, 5_000))
                rate = int(rng.integers(0, 1_500))
                disabled = 1 if rng.random() < 0.04 else 0
                lines.append(f"{sid},{cid},{src},{trg},{cap},{base},{rate},{disabled}")
        (snap_dir / f"{sid}.csv").write_text("\n".join(lines) + "\n")

    merchant_nodes = list(rng.choice(nodes[6:], size=n_merchants, replace=False))
    merchants_path = root / "merchants.csv"
    merchants_path.write_text(
        "pub_key,tag\n" + "".join(f"{m},shop\n" for m in sorted(merchant_nodes))
    )

    entities_path = root / "entities.csv"
    entities_path.write_text(
        "pub_key,entity_name\n"
        + "".join(f"{h},BigRouter\n" for h in hubs[:3])
        + "".join(f"{h},{h}\n" for h in hubs[3:])
    )

    stream_path = root / "edge_stream.csv"
    lines = ["channel_id,src,trg,capacity_sat,open_block,close_block"]
    block = 500_000
    for cid, a, b, cap in channels:
        block += int(rng.integers(1, 40))
        close = "" if rng.random() < 0.6 else str(block + int(rng.integers(100, 5_000)))
        lines.append(f"{cid},{a},{b},{cap},{block},{close}")
    stream_path.write_text("\n".join(lines) + "\n")

    return snap_dir, merchants_path, entities_path, stream_path
