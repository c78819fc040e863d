"""Rank-correlation machinery and descriptive graph/temporal metrics."""

from __future__ import annotations

import csv
import logging
import math
import warnings
from collections import Counter, deque
from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np
from scipy import stats as scipy_stats

from .ingest import EdgeStreamEvent, SnapshotGraph

logger = logging.getLogger(__name__)

GRAPH_METRICS_HEADER = ("window", "N", "E", "avg_degree", "eff_diameter", "cpd", "transitivity")
CORRELATIONS_HEADER = ("kind", "statistic", "method", "a", "b", "value")
LOCALITY_HEADER = ("distance", "count")

METHODS = ("spearman", "kendall", "weighted_kendall")


@dataclass(frozen=True)
class RankCorrelation:
    method: str
    value: float | None
    n: int


@dataclass(frozen=True)
class DensificationFit:
    exponent: float
    intercept: float
    r_squared: float


@dataclass(frozen=True)
class CentralityVector:
    measure: str
    values: dict[str, float]

    @property
    def max_value(self) -> float:
        return max(self.values.values()) if self.values else 0.0


def align_vectors(x: dict[str, float], y: dict[str, float]) -> tuple[np.ndarray, np.ndarray]:
    """Union-of-keys alignment with missing entries as zero.

    Day-to-day node sets differ; zero-filling keeps vectors comparable at
    the cost of emphasizing the low-traffic tail.
    """
    keys = sorted(set(x) | set(y))
    xv = np.array([x.get(k, 0.0) for k in keys], dtype=float)
    yv = np.array([y.get(k, 0.0) for k in keys], dtype=float)
    return xv, yv


def _as_arrays(x, y) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(x, dict) or isinstance(y, dict):
        return align_vectors(x, y)
    xv, yv = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if xv.shape != yv.shape:
        raise ValueError("vectors must have equal length")
    return xv, yv


def _wrap(method: str, value: float, n: int) -> RankCorrelation:
    return RankCorrelation(method, None if math.isnan(value) else float(value), n)


def spearman(x, y) -> RankCorrelation:
    xv, yv = _as_arrays(x, y)
    if len(xv) < 2:
        return RankCorrelation("spearman", None, len(xv))
    with warnings.catch_warnings():
        # Constant input yields nan, reported as absent; no need to warn.
        warnings.simplefilter("ignore")
        return _wrap("spearman", scipy_stats.spearmanr(xv, yv).statistic, len(xv))


def kendall(x, y) -> RankCorrelation:
    xv, yv = _as_arrays(x, y)
    if len(xv) < 2:
        return RankCorrelation("kendall", None, len(xv))
    return _wrap("kendall", scipy_stats.kendalltau(xv, yv).statistic, len(xv))


def weighted_kendall(x, y) -> RankCorrelation:
    """Kendall's tau with additive hyperbolic rank weights w(r) = 1/(1+r)."""
    xv, yv = _as_arrays(x, y)
    if len(xv) < 2:
        return RankCorrelation("weighted_kendall", None, len(xv))
    value = scipy_stats.weightedtau(xv, yv, rank=True, additive=True).statistic
    return _wrap("weighted_kendall", value, len(xv))


_CORRELATORS = {"spearman": spearman, "kendall": kendall, "weighted_kendall": weighted_kendall}


def correlate(x, y, method: str) -> RankCorrelation:
    try:
        return _CORRELATORS[method](x, y)
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}") from None


def cross_day_correlations(stat_sequence: list[dict[str, float]], method: str) -> np.ndarray:
    """Symmetric day-pair correlation matrix for one node statistic."""
    if len(stat_sequence) < 2:
        raise ValueError("need at least two days")
    n = len(stat_sequence)
    matrix = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            c = correlate(stat_sequence[i], stat_sequence[j], method)
            v = c.value if c.value is not None else np.nan
            matrix[i, j] = matrix[j, i] = v
    return matrix


def cross_run_correlations(stats: list[dict[str, float]], method: str) -> float | None:
    """Mean pairwise correlation over independent runs of one snapshot."""
    if len(stats) < 2:
        raise ValueError("need at least two runs")
    values = []
    for i in range(len(stats)):
        for j in range(i + 1, len(stats)):
            c = correlate(stats[i], stats[j], method)
            if c.value is not None:
                values.append(c.value)
    if not values:
        return None
    return float(np.mean(values))


def _digraph(graph: SnapshotGraph) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(graph.nodes)
    g.add_edges_from((e.src, e.trg) for e in graph.edges)
    return g


def undirected_projection(graph: SnapshotGraph) -> nx.Graph:
    """Simple undirected channel graph (parallel channels collapse)."""
    g = nx.Graph()
    g.add_nodes_from(graph.nodes)
    for a, b in graph.channel_endpoints.values():
        g.add_edge(a, b)
    return g


def betweenness(graph: SnapshotGraph | nx.Graph | nx.DiGraph) -> CentralityVector:
    """Exact hop-count betweenness; directed when built from a snapshot."""
    g = _digraph(graph) if isinstance(graph, SnapshotGraph) else graph
    if g.number_of_nodes() == 0:
        raise ValueError("graph is empty")
    values = nx.betweenness_centrality(g, normalized=False)
    return CentralityVector("betweenness", {n: float(v) for n, v in values.items()})


def degree_vector(graph: SnapshotGraph) -> CentralityVector:
    return CentralityVector("degree", {n: float(d) for n, d in graph.degree.items()})


def capacity_vector(graph: SnapshotGraph) -> CentralityVector:
    return CentralityVector("capacity", {n: float(c) for n, c in graph.node_capacity.items()})


def centrality_income_correlation(
    mean_income: dict[str, float],
    graph: SnapshotGraph,
    measures: tuple[str, ...] = ("betweenness", "degree", "capacity"),
) -> dict[str, RankCorrelation]:
    """Spearman of mean routing income against structural centralities."""
    vectors = {
        "betweenness": lambda: betweenness(graph).values,
        "degree": lambda: degree_vector(graph).values,
        "capacity": lambda: capacity_vector(graph).values,
    }
    out: dict[str, RankCorrelation] = {}
    for measure in measures:
        if measure not in vectors:
            raise ValueError(f"unknown centrality measure {measure!r}")
        out[measure] = spearman(mean_income, vectors[measure]())
    return out


def cpd(graph: SnapshotGraph | nx.Graph) -> float | None:
    """Central point dominance: mean betweenness gap to the most central node,
    normalized so a star scores 1 and a complete graph 0."""
    g = undirected_projection(graph) if isinstance(graph, SnapshotGraph) else graph
    n = g.number_of_nodes()
    if n < 3:
        return None
    b = nx.betweenness_centrality(g, normalized=True)
    b_max = max(b.values())
    return sum(b_max - v for v in b.values()) / (n - 1)


def transitivity(graph: SnapshotGraph | nx.Graph) -> float | None:
    g = undirected_projection(graph) if isinstance(graph, SnapshotGraph) else graph
    if g.number_of_nodes() < 1:
        return None
    return float(nx.transitivity(g))


def effective_diameter(graph: SnapshotGraph | nx.Graph, quantile: float = 0.9) -> float | None:
    """Interpolated quantile of the finite pairwise distance distribution."""
    g = undirected_projection(graph) if isinstance(graph, SnapshotGraph) else graph
    counts: Counter = Counter()
    for _, dists in nx.all_pairs_shortest_path_length(g):
        for d in dists.values():
            if d > 0:
                counts[d] += 1
    total = sum(counts.values())
    if total == 0:
        return None
    cumulative = 0.0
    prev_fraction = 0.0
    for d in sorted(counts):
        cumulative += counts[d]
        fraction = cumulative / total
        if fraction >= quantile:
            return (d - 1) + (quantile - prev_fraction) / (fraction - prev_fraction)
        prev_fraction = fraction
    return float(max(counts))


def densification_fit(series: list[tuple[int, int]]) -> DensificationFit | None:
    """OLS of log edge count on log node count across temporal snapshots."""
    pts = [(n, e) for n, e in series if n >= 1 and e >= 1]
    if len(pts) < 3:
        raise ValueError("need at least three (N, E) points")
    log_n = np.log([n for n, _ in pts])
    log_e = np.log([e for _, e in pts])
    if np.allclose(log_n, log_n[0]):
        return None
    slope, intercept = np.polyfit(log_n, log_e, 1)
    predicted = slope * log_n + intercept
    ss_res = float(np.sum((log_e - predicted) ** 2))
    ss_tot = float(np.sum((log_e - np.mean(log_e)) ** 2))
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return DensificationFit(exponent=float(slope), intercept=float(intercept), r_squared=r_squared)


def reference_graph(n: int, m: int, model: str, seed: int) -> nx.Graph:
    """Seeded ER G(n, m) or BA graph (m = attachment parameter) for baselines."""
    if model == "erdos_renyi":
        if m > n * (n - 1) // 2:
            raise ValueError(f"{m} edges infeasible for {n} nodes")
        return nx.gnm_random_graph(n, m, seed=seed)
    if model == "barabasi_albert":
        if not 1 <= m < n:
            raise ValueError(f"attachment parameter {m} infeasible for {n} nodes")
        return nx.barabasi_albert_graph(n, m, seed=seed)
    raise ValueError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# Temporal edge-stream analyses


@dataclass(frozen=True)
class WindowMetrics:
    window_end: int
    n_nodes: int
    n_edges: int
    avg_degree: float
    eff_diameter: float | None
    cpd: float | None
    transitivity: float | None


class _AliveGraph:
    """Incrementally maintained multigraph of currently open channels."""

    def __init__(self) -> None:
        self.adj: dict[str, Counter] = {}
        self.degree_hist: Counter = Counter()
        self.seen: set[str] = set()

    def degree(self, node: str) -> int:
        return sum(self.adj.get(node, Counter()).values())

    def _shift_degree(self, node: str, delta: int) -> None:
        d = self.degree(node)
        self.degree_hist[d] -= 1
        if self.degree_hist[d] == 0:
            del self.degree_hist[d]
        self.degree_hist[d + delta] += 1

    def add(self, u: str, v: str) -> None:
        for node in (u, v):
            if node not in self.seen:
                self.seen.add(node)
                self.degree_hist[0] += 1
        self._shift_degree(u, 1)
        if v != u:
            self._shift_degree(v, 1)
        self.adj.setdefault(u, Counter())[v] += 1
        self.adj.setdefault(v, Counter())[u] += 1

    def remove(self, u: str, v: str) -> None:
        self._shift_degree(u, -1)
        if v != u:
            self._shift_degree(v, -1)
        for a, b in ((u, v), (v, u)):
            self.adj[a][b] -= 1
            if self.adj[a][b] == 0:
                del self.adj[a][b]

    def distance(self, src: str, trg: str) -> float:
        if src not in self.adj or trg not in self.adj:
            return math.inf
        visited = {src}
        queue = deque([(src, 0)])
        while queue:
            node, d = queue.popleft()
            if node == trg:
                return d
            for nbr in self.adj.get(node, ()):
                if nbr not in visited:
                    visited.add(nbr)
                    queue.append((nbr, d + 1))
        return math.inf


def _iter_alive(events: list[EdgeStreamEvent]):
    """Yield (event, alive-graph-strictly-before-event) in open order."""
    import heapq

    alive = _AliveGraph()
    closures: list[tuple[int, str, str]] = []
    for event in events:
        while closures and closures[0][0] < event.open_block:
            _, u, v = heapq.heappop(closures)
            alive.remove(u, v)
        yield event, alive
        alive.add(event.src, event.trg)
        if event.close_block is not None:
            heapq.heappush(closures, (event.close_block, event.src, event.trg))


def temporal_metrics(events: list[EdgeStreamEvent], block_window: int) -> list[WindowMetrics]:
    """Graph metrics at the end of each block window of the stream."""
    if not events:
        return []
    if block_window <= 0:
        raise ValueError("block_window must be positive")
    start = events[0].open_block
    end = max(
        max(e.open_block for e in events),
        max((e.close_block for e in events if e.close_block is not None), default=0),
    )
    boundaries = list(range(start + block_window - 1, end + block_window, block_window))
    out: list[WindowMetrics] = []
    for boundary in boundaries:
        g = nx.Graph()
        n_channels = 0
        for e in events:
            if e.open_block <= boundary and (e.close_block is None or e.close_block > boundary):
                g.add_edge(e.src, e.trg)
                n_channels += 1
        n = g.number_of_nodes()
        out.append(
            WindowMetrics(
                window_end=boundary,
                n_nodes=n,
                n_edges=n_channels,
                avg_degree=(2 * n_channels / n) if n else 0.0,
                eff_diameter=effective_diameter(g) if n else None,
                cpd=cpd(g),
                transitivity=transitivity(g) if n else None,
            )
        )
    return out


def edge_locality(events: list[EdgeStreamEvent]) -> Counter:
    """Histogram of endpoint distances just before each channel opens.

    Distance is measured in the graph of channels open strictly before the
    event's block; endpoints in different components (or unseen) count as
    infinity.
    """
    hist: Counter = Counter()
    for event, alive in _iter_alive(events):
        hist[alive.distance(event.src, event.trg)] += 1
    return hist


@dataclass(frozen=True)
class ChannelLifetime:
    channel_id: str
    lifetime_blocks: int
    censored: bool
    merchant_adjacent: bool


@dataclass(frozen=True)
class NodeLifetime:
    node: str
    lifetime_blocks: int
    censored: bool


def lifetimes(
    events: list[EdgeStreamEvent],
    merchants: set[str] | frozenset[str] = frozenset(),
    final_block: int | None = None,
) -> tuple[list[ChannelLifetime], list[NodeLifetime]]:
    """Channel and node lifetimes; still-open spans censor at the last block."""
    if not events:
        return [], []
    horizon = final_block if final_block is not None else max(
        max(e.open_block for e in events),
        max((e.close_block for e in events if e.close_block is not None), default=0),
    )
    channels = [
        ChannelLifetime(
            channel_id=e.channel_id,
            lifetime_blocks=(e.close_block if e.close_block is not None else horizon) - e.open_block,
            censored=e.close_block is None,
            merchant_adjacent=e.src in merchants or e.trg in merchants,
        )
        for e in events
    ]
    first_seen: dict[str, int] = {}
    last_seen: dict[str, int] = {}
    open_ended: set[str] = set()
    for e in events:
        close = e.close_block if e.close_block is not None else horizon
        for node in (e.src, e.trg):
            first_seen[node] = min(first_seen.get(node, e.open_block), e.open_block)
            last_seen[node] = max(last_seen.get(node, close), close)
            if e.close_block is None:
                open_ended.add(node)
    nodes = [
        NodeLifetime(node=n, lifetime_blocks=last_seen[n] - first_seen[n], censored=n in open_ended)
        for n in sorted(first_seen)
    ]
    return channels, nodes


def attachment_curve(events: list[EdgeStreamEvent]) -> list[tuple[int, int, int, float | None]]:
    """Preferential-attachment estimate: (degree, attachments, exposure, probability).

    For every channel opening, each endpoint's degree at creation time is
    binned; exposure counts how many already-seen nodes held that degree at
    the moment, so probability = attachments / exposure.
    """
    attach: Counter = Counter()
    exposure: Counter = Counter()
    for event, alive in _iter_alive(events):
        for node in (event.src, event.trg):
            d = alive.degree(node) if node in alive.seen else 0
            attach[d] += 1
            exposure[d] += alive.degree_hist.get(d, 0)
    out = []
    for d in sorted(attach):
        e = exposure[d]
        out.append((d, attach[d], e, attach[d] / e if e > 0 else None))
    return out


# ---------------------------------------------------------------------------
# CSV interfaces


def write_graph_metrics(path: str | Path, windows: list[WindowMetrics]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GRAPH_METRICS_HEADER)
        for w in windows:
            writer.writerow(
                (
                    w.window_end,
                    w.n_nodes,
                    w.n_edges,
                    f"{w.avg_degree:.4f}",
                    "" if w.eff_diameter is None else f"{w.eff_diameter:.4f}",
                    "" if w.cpd is None else f"{w.cpd:.6f}",
                    "" if w.transitivity is None else f"{w.transitivity:.6f}",
                )
            )


def write_correlations(path: str | Path, rows: list[tuple[str, str, str, str, str, float | None]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CORRELATIONS_HEADER)
        for kind, statistic, method, a, b, value in rows:
            writer.writerow((kind, statistic, method, a, b, "" if value is None else f"{value:.6f}"))


def write_locality(path: str | Path, hist: Counter) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(LOCALITY_HEADER)
        finite = sorted(d for d in hist if d != math.inf)
        for d in finite:
            writer.writerow((int(d), hist[d]))
        if math.inf in hist:
            writer.writerow(("inf", hist[math.inf]))
