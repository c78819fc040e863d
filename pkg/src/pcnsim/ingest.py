"""Snapshot, label, and edge-stream parsing with capacity/disabled filtering.

The canonical on-disk format is a directed-edge CSV, one row per channel
direction. A separate adapter converts node-client gossip dumps into that
table so the simulator core stays independent of any client's schema.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

logger = logging.getLogger(__name__)

SNAPSHOT_HEADER = (
    "snapshot_id",
    "channel_id",
    "src",
    "trg",
    "capacity_sat",
    "base_fee_msat",
    "fee_rate_ppm",
    "disabled",
)
MERCHANTS_HEADER = ("pub_key", "tag")
ENTITIES_HEADER = ("pub_key", "entity_name")
EDGE_STREAM_HEADER = ("channel_id", "src", "trg", "capacity_sat", "open_block", "close_block")


class ParseError(ValueError):
    """Malformed input row; message names file and line."""


class ValidationError(ValueError):
    """Structurally valid input that breaks a graph invariant."""


@dataclass(frozen=True)
class FeePolicy:
    """Advertised forwarding charge for one channel direction."""

    base_fee_msat: int
    fee_rate_ppm: int
    disabled: bool = False

    def __post_init__(self) -> None:
        if self.base_fee_msat < 0 or self.fee_rate_ppm < 0:
            raise ValidationError("fee policy fields must be non-negative")


@dataclass(frozen=True)
class DirectedChannelEdge:
    """One usable direction of a payment channel."""

    channel_id: str
    src: str
    trg: str
    capacity_sat: int
    policy: FeePolicy

    def __post_init__(self) -> None:
        if self.src == self.trg:
            raise ValidationError(f"channel {self.channel_id}: self-loop {self.src}")
        if self.capacity_sat <= 0:
            raise ValidationError(f"channel {self.channel_id}: capacity must be positive")


@dataclass(frozen=True)
class EdgeStreamEvent:
    """Channel opening (and optional closure) at block heights."""

    channel_id: str
    src: str
    trg: str
    capacity_sat: int
    open_block: int
    close_block: int | None = None

    def __post_init__(self) -> None:
        if self.close_block is not None and self.close_block < self.open_block:
            raise ValidationError(
                f"channel {self.channel_id}: close block {self.close_block} before open {self.open_block}"
            )


@dataclass(frozen=True)
class EntityMap:
    """Node → operator-entity mapping; unmapped nodes are their own entity."""

    mapping: dict[str, str] = field(default_factory=dict)

    def entity_of(self, node: str) -> str:
        return self.mapping.get(node, node)

    def members(self, entity: str) -> tuple[str, ...]:
        explicit = tuple(sorted(n for n, e in self.mapping.items() if e == entity))
        return explicit if explicit else (entity,)

    def entities(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.mapping.values())))


@dataclass(eq=False)
class SnapshotGraph:
    """Directed multigraph of channel halves for one day.

    Treated as immutable after construction; derived indexes are cached.
    """

    snapshot_id: str
    edges: tuple[DirectedChannelEdge, ...]
    extra_nodes: frozenset[str] = frozenset()
    merchants: frozenset[str] = frozenset()

    @cached_property
    def nodes(self) -> frozenset[str]:
        seen = {e.src for e in self.edges} | {e.trg for e in self.edges}
        return frozenset(seen | self.extra_nodes)

    @cached_property
    def sorted_nodes(self) -> tuple[str, ...]:
        return tuple(sorted(self.nodes))

    @cached_property
    def out_edges(self) -> dict[str, tuple[DirectedChannelEdge, ...]]:
        out: dict[str, list[DirectedChannelEdge]] = {}
        for e in self.edges:
            out.setdefault(e.src, []).append(e)
        return {u: tuple(es) for u, es in out.items()}

    @cached_property
    def channels(self) -> dict[str, tuple[DirectedChannelEdge, ...]]:
        by_id: dict[str, list[DirectedChannelEdge]] = {}
        for e in self.edges:
            by_id.setdefault(e.channel_id, []).append(e)
        return {cid: tuple(es) for cid, es in by_id.items()}

    @cached_property
    def channel_capacity(self) -> dict[str, int]:
        return {cid: es[0].capacity_sat for cid, es in self.channels.items()}

    @cached_property
    def channel_endpoints(self) -> dict[str, tuple[str, str]]:
        """Endpoints per channel as a sorted pair (canonical orientation)."""
        ends: dict[str, tuple[str, str]] = {}
        for cid, es in self.channels.items():
            a, b = sorted((es[0].src, es[0].trg))
            ends[cid] = (a, b)
        return ends

    @cached_property
    def degree(self) -> dict[str, int]:
        """Adjacent channel count per node (parallel channels count separately)."""
        deg: dict[str, int] = dict.fromkeys(self.nodes, 0)
        for cid, (a, b) in self.channel_endpoints.items():
            deg[a] += 1
            deg[b] += 1
        return deg

    @cached_property
    def node_capacity(self) -> dict[str, int]:
        """Total satoshis bound in channels adjacent to each node."""
        cap: dict[str, int] = dict.fromkeys(self.nodes, 0)
        for cid, (a, b) in self.channel_endpoints.items():
            c = self.channel_capacity[cid]
            cap[a] += c
            cap[b] += c
        return cap

    @cached_property
    def total_capacity(self) -> int:
        return sum(self.channel_capacity.values())

    def without_nodes(self, removed: set[str] | frozenset[str]) -> "SnapshotGraph":
        """Copy of the graph with the given nodes and their channels dropped."""
        removed = frozenset(removed)
        edges = tuple(e for e in self.edges if e.src not in removed and e.trg not in removed)
        return SnapshotGraph(
            snapshot_id=self.snapshot_id,
            edges=edges,
            extra_nodes=self.extra_nodes - removed,
            merchants=self.merchants - removed,
        )

    def with_merchants(self, merchants: set[str]) -> "SnapshotGraph":
        return SnapshotGraph(
            snapshot_id=self.snapshot_id,
            edges=self.edges,
            extra_nodes=self.extra_nodes,
            merchants=frozenset(merchants) & self.nodes,
        )


def _check_header(row: list[str], expected: tuple[str, ...], path: Path) -> None:
    if [c.strip() for c in row] != list(expected):
        raise ParseError(f"{path}:1: expected header {','.join(expected)!r}, got {','.join(row)!r}")


def _int_field(value: str, name: str, path: Path, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: field {name!r} is not an integer: {value!r}") from None


def _snapshot_rows(path: Path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}:1: empty snapshot file") from None
        _check_header(header, SNAPSHOT_HEADER, path)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SNAPSHOT_HEADER):
                raise ParseError(f"{path}:{lineno}: expected {len(SNAPSHOT_HEADER)} fields, got {len(row)}")
            snapshot_id, channel_id, src, trg, cap, base, rate, disabled = (c.strip() for c in row)
            if disabled not in ("0", "1"):
                raise ParseError(f"{path}:{lineno}: field 'disabled' must be 0 or 1, got {disabled!r}")
            yield lineno, snapshot_id, DirectedChannelEdge(
                channel_id=channel_id,
                src=src,
                trg=trg,
                capacity_sat=_int_field(cap, "capacity_sat", path, lineno),
                policy=FeePolicy(
                    base_fee_msat=_int_field(base, "base_fee_msat", path, lineno),
                    fee_rate_ppm=_int_field(rate, "fee_rate_ppm", path, lineno),
                    disabled=disabled == "1",
                ),
            )


def _build_snapshot(
    snapshot_id: str,
    rows: list[tuple[int, DirectedChannelEdge]],
    alpha: int,
    keep_disabled: bool,
    path: Path,
) -> SnapshotGraph:
    seen_directions: dict[tuple[str, str], int] = {}
    by_channel: dict[str, list[DirectedChannelEdge]] = {}
    for lineno, edge in rows:
        key = (edge.channel_id, edge.src)
        if key in seen_directions:
            raise ValidationError(
                f"{path}:{lineno}: duplicate direction {edge.src}->{edge.trg} for channel"
                f" {edge.channel_id} (first at line {seen_directions[key]})"
            )
        seen_directions[key] = lineno
        by_channel.setdefault(edge.channel_id, []).append(edge)

    for cid, halves in by_channel.items():
        if len(halves) > 2:
            raise ValidationError(f"{path}: channel {cid} has {len(halves)} directions")
        caps = {e.capacity_sat for e in halves}
        ends = {frozenset((e.src, e.trg)) for e in halves}
        if len(caps) > 1:
            raise ValidationError(f"{path}: channel {cid} has mismatched capacities {sorted(caps)}")
        if len(ends) > 1:
            raise ValidationError(f"{path}: channel {cid} connects different node pairs")

    surviving = tuple(
        edge
        for _, edge in rows
        if edge.capacity_sat >= alpha and (keep_disabled or not edge.policy.disabled)
    )
    return SnapshotGraph(snapshot_id=snapshot_id, edges=surviving)


def load_snapshot(path: str | Path, alpha: int = 0, keep_disabled: bool = False) -> SnapshotGraph:
    """Load one snapshot file, dropping disabled directions and edges under alpha."""
    path = Path(path)
    rows: list[tuple[int, DirectedChannelEdge]] = []
    snapshot_id: str | None = None
    for lineno, sid, edge in _snapshot_rows(path):
        if snapshot_id is None:
            snapshot_id = sid
        elif sid != snapshot_id:
            raise ValidationError(
                f"{path}:{lineno}: multiple snapshot ids in one file; use load_snapshots()"
            )
        rows.append((lineno, edge))
    if snapshot_id is None:
        raise ParseError(f"{path}:2: snapshot file has no data rows")
    return _build_snapshot(snapshot_id, rows, alpha, keep_disabled, path)


def load_snapshots(path: str | Path, alpha: int = 0, keep_disabled: bool = False) -> list[SnapshotGraph]:
    """Load snapshots from a directory of CSVs or a single multi-day CSV.

    Snapshots are returned sorted by snapshot_id.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix == ".csv")
        if not files:
            raise ParseError(f"{path}: no .csv snapshot files found")
        graphs = [load_snapshot(p, alpha, keep_disabled) for p in files]
        return sorted(graphs, key=lambda g: g.snapshot_id)

    grouped: dict[str, list[tuple[int, DirectedChannelEdge]]] = {}
    for lineno, sid, edge in _snapshot_rows(path):
        grouped.setdefault(sid, []).append((lineno, edge))
    if not grouped:
        raise ParseError(f"{path}:2: snapshot file has no data rows")
    return [
        _build_snapshot(sid, rows, alpha, keep_disabled, path)
        for sid, rows in sorted(grouped.items())
    ]


def convert_gossip_dump(
    path: str | Path,
    snapshot_id: str | None = None,
    policy_source: str = "src",
) -> list[dict[str, object]]:
    """Convert a node-client gossip dump into canonical directed-edge rows.

    Each channel yields one row per direction. With policy_source="src"
    (gossip semantics) the direction departing node1 carries node1_policy;
    "trg" assigns node1_policy to the direction arriving at node1 instead.
    A direction with no policy object is emitted with disabled=1.
    """
    if policy_source not in ("src", "trg"):
        raise ValueError(f"policy_source must be 'src' or 'trg', got {policy_source!r}")
    path = Path(path)
    with open(path) as fh:
        try:
            dump = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    sid = snapshot_id if snapshot_id is not None else path.stem

    rows: list[dict[str, object]] = []
    for idx, ch in enumerate(dump.get("edges", [])):
        try:
            cid = str(ch["channel_id"])
            n1, n2 = str(ch["node1_pub"]), str(ch["node2_pub"])
            cap = int(ch["capacity"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{path}: edge record {idx}: {exc}") from None
        p1, p2 = ch.get("node1_policy"), ch.get("node2_policy")
        if policy_source == "trg":
            p1, p2 = p2, p1
        for src, trg, pol in ((n1, n2, p1), (n2, n1, p2)):
            if pol is None:
                base, rate, disabled = 0, 0, True
            else:
                base = int(pol.get("fee_base_msat", 0))
                rate = int(pol.get("fee_rate_milli_msat", 0))
                disabled = bool(pol.get("disabled", False))
            rows.append(
                {
                    "snapshot_id": sid,
                    "channel_id": cid,
                    "src": src,
                    "trg": trg,
                    "capacity_sat": cap,
                    "base_fee_msat": base,
                    "fee_rate_ppm": rate,
                    "disabled": 1 if disabled else 0,
                }
            )
    return rows


def write_snapshot_csv(rows: list[dict[str, object]], path: str | Path) -> None:
    """Write canonical directed-edge rows produced by convert_gossip_dump."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SNAPSHOT_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def load_merchants(path: str | Path) -> set[str]:
    """Load the tagged-merchant node set (deduplicated)."""
    path = Path(path)
    merchants: set[str] = set()
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            _check_header(next(reader), MERCHANTS_HEADER, path)
        except StopIteration:
            raise ParseError(f"{path}:1: empty merchants file") from None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            merchants.add(row[0].strip())
    return merchants


def load_entities(path: str | Path) -> EntityMap:
    """Load the node → entity map; conflicting assignments are rejected."""
    path = Path(path)
    mapping: dict[str, str] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            _check_header(next(reader), ENTITIES_HEADER, path)
        except StopIteration:
            raise ParseError(f"{path}:1: empty entities file") from None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            node, entity = row[0].strip(), row[1].strip()
            if node in mapping and mapping[node] != entity:
                raise ValidationError(
                    f"{path}:{lineno}: node {node} mapped to both {mapping[node]!r} and {entity!r}"
                )
            mapping[node] = entity
    return EntityMap(mapping)


def load_edge_stream(path: str | Path) -> list[EdgeStreamEvent]:
    """Load channel open/close events, sorted by open_block (stable)."""
    path = Path(path)
    events: list[EdgeStreamEvent] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            _check_header(next(reader), EDGE_STREAM_HEADER, path)
        except StopIteration:
            raise ParseError(f"{path}:1: empty edge stream file") from None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 6:
                raise ParseError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            cid, src, trg, cap, open_block, close_block = (c.strip() for c in row)
            events.append(
                EdgeStreamEvent(
                    channel_id=cid,
                    src=src,
                    trg=trg,
                    capacity_sat=_int_field(cap, "capacity_sat", path, lineno),
                    open_block=_int_field(open_block, "open_block", path, lineno),
                    close_block=_int_field(close_block, "close_block", path, lineno)
                    if close_block
                    else None,
                )
            )
    events.sort(key=lambda e: e.open_block)
    return events
