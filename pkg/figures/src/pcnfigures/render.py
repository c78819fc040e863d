"""CSV-to-figure rendering for every report the simulator emits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

plt.rcParams.update(
    {
        "figure.figsize": (8, 5),
        "axes.grid": True,
        "grid.alpha": 0.3,
        "svg.hashsalt": "pcnfigures",
    }
)

MAX_LEGEND_SERIES = 10


class MissingColumnError(ValueError):
    """An input CSV lacks a column the figure needs."""


@dataclass(frozen=True)
class FigureSpec:
    """One renderable figure: kind, resolved inputs, output path, axis scale."""

    kind: str
    inputs: tuple[Path, ...]
    output: Path
    log_x: bool = False


def read_table(path: Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for column in required:
            if column not in header:
                raise MissingColumnError(f"{path}: missing column {column!r}")
        return list(reader)


def _floats(rows, column, default=None):
    out = []
    for r in rows:
        value = r.get(column, "")
        out.append(float(value) if value not in ("", None) else default)
    return out


def _series_by(rows, key):
    groups: dict[str, list[dict[str, str]]] = {}
    for r in rows:
        groups.setdefault(r[key], []).append(r)
    return groups


def _fig(nrows=1, ncols=1, **kwargs):
    fig, axes = plt.subplots(nrows, ncols, **kwargs)
    return fig, axes


def _node_stats(spec: FigureSpec):
    rows = read_table(
        spec.inputs[0],
        ("snapshot_id", "run", "node", "routing_income_sat", "routing_traffic",
         "sender_fee_sat", "sender_traffic"),
    )
    fig, ax = _fig()
    traffic = _floats(rows, "routing_traffic", 0.0)
    income = _floats(rows, "routing_income_sat", 0.0)
    pts = [(t, i) for t, i in zip(traffic, income) if t > 0 and i > 0]
    if pts:
        ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=8, alpha=0.4)
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("routing traffic per day")
    ax.set_ylabel("routing income (sat/day)")
    ax.set_title("Per-node routing income vs traffic (all cells)")
    return fig


def _summary(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("snapshot_id", "run", "failures", "success", "mean_path_length"))
    fig, (ax1, ax2) = _fig(1, 2, figsize=(11, 4))
    labels = [f'{r["snapshot_id"]}/{r["run"]}' for r in rows]
    x = range(len(rows))
    failures = _floats(rows, "failures", 0.0)
    success = _floats(rows, "success", 0.0)
    fractions = [f / (f + s) if f + s else 0.0 for f, s in zip(failures, success)]
    ax1.plot(x, fractions, marker="o", ms=3)
    ax1.set_ylabel("failure fraction")
    ax1.set_xlabel("cell")
    lengths = _floats(rows, "mean_path_length")
    ax2.plot(x, lengths, marker="o", ms=3, color="tab:orange")
    ax2.set_ylabel("mean path length (hops)")
    ax2.set_xlabel("cell")
    for ax in (ax1, ax2):
        if len(labels) <= 12:
            ax.set_xticks(list(x))
            ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    fig.suptitle("Per-cell failure fraction and completed path length")
    fig.tight_layout()
    return fig


def _sweep(spec: FigureSpec):
    rows = read_table(
        spec.inputs[0],
        ("value", "entity", "income_sat", "traffic", "income_per_tx_sat",
         "failure_fraction", "mean_path_len"),
    )
    fig, axes = _fig(2, 2, figsize=(11, 8))
    (ax_income, ax_traffic), (ax_eff, ax_fail) = axes
    entities = _series_by([r for r in rows if r["entity"] != "ALL"], "entity")
    ranked = sorted(entities, key=lambda e: -max(_floats(entities[e], "income_sat", 0.0)))
    for entity in ranked[:MAX_LEGEND_SERIES]:
        series = sorted(entities[entity], key=lambda r: float(r["value"]))
        values = _floats(series, "value")
        ax_income.plot(values, _floats(series, "income_sat", 0.0), marker="o", ms=3, label=entity)
        ax_traffic.plot(values, _floats(series, "traffic", 0.0), marker="o", ms=3)
        ax_eff.plot(values, _floats(series, "income_per_tx_sat"), marker="o", ms=3)
    network = sorted((r for r in rows if r["entity"] == "ALL"), key=lambda r: float(r["value"]))
    if network:
        values = _floats(network, "value")
        ax_fail.plot(values, _floats(network, "failure_fraction"), marker="o", ms=3, label="failure fraction")
        twin = ax_fail.twinx()
        twin.plot(values, _floats(network, "mean_path_len"), marker="s", ms=3,
                  color="tab:green", label="mean path length")
        twin.set_ylabel("mean path length")
    for ax, label in ((ax_income, "income (sat/day)"), (ax_traffic, "traffic (tx/day)"),
                      (ax_eff, "income per tx (sat)"), (ax_fail, "failure fraction")):
        ax.set_ylabel(label)
        ax.set_xlabel(spec.kind.removeprefix("sweep_"))
        if spec.log_x:
            ax.set_xscale("log")
    if ranked:
        ax_income.legend(fontsize=7)
    fig.suptitle(f"Parameter sweep over {spec.kind.removeprefix('sweep_')}")
    fig.tight_layout()
    return fig


def _removal(spec: FigureSpec):
    rows = read_table(
        spec.inputs[0],
        ("target", "tau_x", "phi_x", "failure_ratio", "beta_star_sat", "gain_sat"),
    )
    rows = sorted(rows, key=lambda r: -float(r["tau_x"] or 0))[:20]
    fig, (ax1, ax2) = _fig(1, 2, figsize=(12, 4.5))
    targets = [r["target"] for r in rows]
    ax1.bar(targets, _floats(rows, "failure_ratio", 0.0))
    ax1.set_ylabel("failure ratio of own traffic")
    ax2.bar(targets, _floats(rows, "gain_sat", 0.0), color="tab:orange")
    ax2.set_ylabel("optimal increment gain (sat/day)")
    for ax in (ax1, ax2):
        ax.tick_params(axis="x", rotation=60, labelsize=7)
    fig.suptitle("Removal impact and pricing headroom per target")
    fig.tight_layout()
    return fig


def _removal_groups(spec: FigureSpec):
    rows = read_table(
        spec.inputs[0],
        ("rank_lo", "rank_hi", "nodes", "mean_failure_ratio", "mean_beta_star_sat", "mean_gain_sat"),
    )
    fig, (ax1, ax2) = _fig(1, 2, figsize=(11, 4.5))
    labels = [f'{r["rank_lo"]}-{r["rank_hi"] or ""}' for r in rows]
    ax1.bar(labels, _floats(rows, "mean_failure_ratio", 0.0))
    ax1.set_ylabel("mean failure ratio")
    ax1.set_xlabel("income rank band")
    ax2.bar(labels, _floats(rows, "mean_gain_sat", 0.0), color="tab:orange")
    ax2.set_ylabel("mean gain (sat/day)")
    ax2.set_xlabel("income rank band")
    fig.suptitle("Fee competition by income band")
    fig.tight_layout()
    return fig


def _entity_report(spec: FigureSpec):
    rows = read_table(
        spec.inputs[0],
        ("entity", "capacity_sat", "capacity_fraction", "advertised_fee_sat",
         "daily_income_sat", "daily_traffic", "annual_roi", "fee_ratio",
         "economical_fee_sat", "rank_roi", "rank_fee", "rank_traffic"),
    )
    rows = sorted(rows, key=lambda r: int(r["rank_roi"]))
    fig, ax = _fig(figsize=(10, 5))
    entities = [r["entity"] for r in rows]
    ax.bar(entities, _floats(rows, "annual_roi", 0.0))
    ax.axhline(5.0, ls="--", color="tab:red", lw=1, label="5% target")
    ax.set_ylabel("annual RoI (%)")
    ax.set_yscale("symlog", linthresh=0.01)
    ax.tick_params(axis="x", rotation=60, labelsize=7)
    ax.legend()
    ax.set_title("Annual return on locked capacity per entity")
    fig.tight_layout()
    return fig


def _depletion(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("entity", "income_sat", "optimistic_income_sat", "ratio"))
    rows = sorted(rows, key=lambda r: -float(r["optimistic_income_sat"]))[:20]
    fig, ax = _fig(figsize=(10, 5))
    ax.bar([r["entity"] for r in rows], _floats(rows, "ratio", 0.0))
    ax.axhline(1.0, ls="--", color="tab:red", lw=1)
    ax.set_ylabel("income / optimistic income")
    ax.tick_params(axis="x", rotation=60, labelsize=7)
    ax.set_title("Effect of channel depletion on routing income")
    fig.tight_layout()
    return fig


def _entity_removal(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("entity", "failure_fraction", "baseline_fraction"))
    rows = sorted(rows, key=lambda r: -float(r["failure_fraction"] or 0))
    fig, ax = _fig(figsize=(10, 5))
    ax.bar([r["entity"] for r in rows], _floats(rows, "failure_fraction", 0.0))
    baselines = _floats(rows, "baseline_fraction")
    if rows and baselines[0] is not None:
        ax.axhline(baselines[0], ls="--", color="tab:red", lw=1, label="baseline")
        ax.legend()
    ax.set_ylabel("failure fraction after removal")
    ax.tick_params(axis="x", rotation=60, labelsize=7)
    ax.set_title("Payment failures after removing an entity")
    fig.tight_layout()
    return fig


def _privacy(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("epsilon", "hop_count", "fraction"))
    fig, ax = _fig()
    groups = _series_by(rows, "epsilon")
    hop_counts = sorted({int(r["hop_count"]) for r in rows})
    width = 0.8 / max(1, len(groups))
    for offset, eps in enumerate(sorted(groups)):
        series = {int(r["hop_count"]): float(r["fraction"]) for r in groups[eps]}
        xs = [h + offset * width for h in range(len(hop_counts))]
        ax.bar(xs, [series.get(h, 0.0) for h in hop_counts], width=width, label=f"merchant ratio {eps}")
    ax.set_xticks([h + 0.4 - width / 2 for h in range(len(hop_counts))])
    ax.set_xticklabels(hop_counts)
    ax.set_xlabel("path length (channel hops)")
    ax.set_ylabel("fraction of successful payments")
    ax.legend(fontsize=8)
    ax.set_title("Simulated path length distribution")
    fig.tight_layout()
    return fig


def _plausibility(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("amount_sat", "threshold", "fraction"))
    fig, ax = _fig()
    for amount, series in sorted(_series_by(rows, "amount_sat").items(), key=lambda kv: int(kv[0])):
        series = sorted(series, key=lambda r: int(r["threshold"]))
        ax.plot(_floats(series, "threshold"), _floats(series, "fraction"),
                marker="o", ms=3, label=f"{int(amount):,} sat")
    ax.set_xlabel("degree threshold")
    ax.set_ylabel("fraction of nodes above threshold")
    ax.legend(fontsize=8)
    ax.set_title("Channels large enough to hide a payment's origin")
    fig.tight_layout()
    return fig


def _cost_vs_length(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("L", "mean_cost_sat", "median_cost_sat", "success_rate"))
    fig, ax = _fig()
    xs = list(range(len(rows)))
    width = 0.35
    means = _floats(rows, "mean_cost_sat")
    medians = _floats(rows, "median_cost_sat")
    ax.bar([x - width / 2 for x in xs], [m if m is not None else 0 for m in means],
           width=width, label="mean")
    ax.bar([x + width / 2 for x in xs], [m if m is not None else 0 for m in medians],
           width=width, label="median")
    ax.set_xticks(xs)
    ax.set_xticklabels([r["L"] for r in rows])
    ax.set_xlabel("prescribed path length (hops)")
    ax.set_ylabel("sender cost (sat)")
    ax.legend()
    ax.set_title("Cost of deliberately lengthened routes")
    fig.tight_layout()
    return fig


def _correlations(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("kind", "statistic", "method", "a", "b", "value"))
    cross_run = [r for r in rows if r["kind"] == "cross_run" and r["value"] != ""]
    fig, ax = _fig(figsize=(10, 5))
    labels = [f'{r["statistic"]}\n{r["method"]}' for r in cross_run]
    ax.bar(labels, _floats(cross_run, "value", 0.0))
    ax.set_ylabel("mean cross-run correlation")
    ax.set_ylim(-1, 1)
    ax.tick_params(axis="x", labelsize=7)
    ax.set_title("Stability of node statistics across independent runs")
    fig.tight_layout()
    return fig


def _graph_metrics(spec: FigureSpec):
    rows = read_table(
        spec.inputs[0], ("window", "N", "E", "avg_degree", "eff_diameter", "cpd", "transitivity")
    )
    fig, axes = _fig(2, 2, figsize=(11, 8))
    (ax_ne, ax_deg), (ax_diam, ax_struct) = axes
    windows = _floats(rows, "window")
    ax_ne.plot(windows, _floats(rows, "N"), label="nodes")
    ax_ne.plot(windows, _floats(rows, "E"), label="channels")
    ax_ne.set_ylabel("count")
    ax_ne.legend(fontsize=8)
    ax_deg.plot(windows, _floats(rows, "avg_degree"), color="tab:green")
    ax_deg.set_ylabel("average degree")
    ax_diam.plot(windows, _floats(rows, "eff_diameter"), color="tab:red")
    ax_diam.set_ylabel("effective diameter")
    ax_struct.plot(windows, _floats(rows, "cpd"), label="central point dominance")
    ax_struct.plot(windows, _floats(rows, "transitivity"), label="transitivity")
    ax_struct.legend(fontsize=8)
    for ax in (ax_ne, ax_deg, ax_diam, ax_struct):
        ax.set_xlabel("block height")
    fig.suptitle("Temporal graph metrics")
    fig.tight_layout()
    return fig


def _snapshot_metrics(spec: FigureSpec):
    rows = read_table(
        spec.inputs[0],
        ("snapshot_id", "N", "E", "avg_degree", "eff_diameter", "cpd", "transitivity"),
    )
    fig, (ax1, ax2) = _fig(1, 2, figsize=(11, 4.5))
    labels = [r["snapshot_id"] for r in rows]
    x = list(range(len(rows)))
    pairs = [("cpd", ax1), ("transitivity", ax2)]
    header = rows[0].keys() if rows else []
    for column, ax in pairs:
        ax.plot(x, _floats(rows, column), marker="o", ms=3, label="observed")
        for ref in (f"er_{column}", f"ba_{column}"):
            if ref in header:
                ax.plot(x, _floats(rows, ref), marker="s", ms=3, ls="--",
                        label=ref.split("_")[0].upper())
        ax.set_ylabel(column)
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
        ax.legend(fontsize=8)
    fig.suptitle("Snapshot centralization and clustering vs random baselines")
    fig.tight_layout()
    return fig


def _densification(spec: FigureSpec):
    metrics = read_table(spec.inputs[0], ("window", "N", "E"))
    fit_rows = read_table(spec.inputs[1], ("exponent", "intercept", "r_squared"))
    fig, ax = _fig()
    ns = [float(r["N"]) for r in metrics if float(r["N"]) > 0 and float(r["E"]) > 0]
    es = [float(r["E"]) for r in metrics if float(r["N"]) > 0 and float(r["E"]) > 0]
    ax.scatter(ns, es, s=14)
    if fit_rows:
        a = float(fit_rows[0]["exponent"])
        b = float(fit_rows[0]["intercept"])
        r2 = float(fit_rows[0]["r_squared"])
        if ns:
            grid = sorted(ns)
            ax.plot(grid, [math.exp(b) * n**a for n in grid], color="tab:red",
                    label=f"E ~ N^{a:.3f} (R²={r2:.3f})")
            ax.legend()
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("nodes")
    ax.set_ylabel("channels")
    ax.set_title("Densification across the edge stream")
    fig.tight_layout()
    return fig


def _locality(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("distance", "count"))
    fig, ax = _fig()
    ax.bar([r["distance"] for r in rows], _floats(rows, "count", 0.0))
    ax.set_xlabel("distance before channel creation")
    ax.set_ylabel("channels")
    ax.set_title("How far apart endpoints are when a channel opens")
    fig.tight_layout()
    return fig


def _lifetimes(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("kind", "id", "lifetime_blocks", "censored", "merchant_adjacent"))
    channels = [r for r in rows if r["kind"] == "channel"]
    fig, ax = _fig()
    overall = [float(r["lifetime_blocks"]) for r in channels]
    merchant = [float(r["lifetime_blocks"]) for r in channels if r["merchant_adjacent"] == "1"]
    if overall:
        ax.hist(overall, bins=30, alpha=0.6, label=f"all (mean {sum(overall) / len(overall):.0f})")
    if merchant:
        ax.hist(merchant, bins=30, alpha=0.6,
                label=f"merchant-adjacent (mean {sum(merchant) / len(merchant):.0f})")
    ax.set_xlabel("channel lifetime (blocks)")
    ax.set_ylabel("channels")
    ax.legend(fontsize=8)
    ax.set_title("Channel lifetimes")
    fig.tight_layout()
    return fig


def _attachment(spec: FigureSpec):
    rows = read_table(spec.inputs[0], ("degree", "attachments", "exposure", "probability"))
    fig, ax = _fig()
    pts = [(float(r["degree"]), float(r["probability"])) for r in rows if r["probability"]]
    if pts:
        ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=14)
        positive = [p for p in pts if p[0] > 0 and p[1] > 0]
        if len(positive) > 2:
            ax.set_xscale("log")
            ax.set_yscale("log")
    ax.set_xlabel("node degree at channel creation")
    ax.set_ylabel("attachment probability")
    ax.set_title("Preferential attachment")
    fig.tight_layout()
    return fig


# kind -> (input filenames, builder, log_x)
REGISTRY: dict[str, tuple[tuple[str, ...], object, bool]] = {
    "node_stats": (("node_stats.csv",), _node_stats, False),
    "summary": (("summary.csv",), _summary, False),
    "sweep_alpha": (("sweep_alpha.csv",), _sweep, True),
    "sweep_tau": (("sweep_tau.csv",), _sweep, False),
    "removal": (("removal.csv",), _removal, False),
    "removal_groups": (("removal_groups.csv",), _removal_groups, False),
    "entity_report": (("entity_report.csv",), _entity_report, False),
    "depletion_ratio": (("depletion_ratio.csv",), _depletion, False),
    "entity_removal": (("entity_removal.csv",), _entity_removal, False),
    "privacy": (("privacy.csv",), _privacy, False),
    "plausibility": (("plausibility.csv",), _plausibility, False),
    "cost_vs_length": (("cost_vs_length.csv",), _cost_vs_length, False),
    "correlations": (("correlations.csv",), _correlations, False),
    "graph_metrics": (("graph_metrics.csv",), _graph_metrics, False),
    "snapshot_metrics": (("snapshot_metrics.csv",), _snapshot_metrics, False),
    "densification": (("graph_metrics.csv", "densification.csv"), _densification, False),
    "locality": (("locality.csv",), _locality, False),
    "lifetimes": (("lifetimes.csv",), _lifetimes, False),
    "attachment": (("attachment.csv",), _attachment, False),
}


def build_figure(spec: FigureSpec):
    """Build the matplotlib figure for a spec without writing it."""
    try:
        _, builder, _ = REGISTRY[spec.kind]
    except KeyError:
        raise ValueError(f"unknown figure kind {spec.kind!r}") from None
    return builder(spec)


def render(spec: FigureSpec) -> Path:
    """Render one figure to its output path (timestamp-free for rerunnability)."""
    fig = build_figure(spec)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, metadata={"Date": None} if spec.output.suffix == ".svg" else None)
    plt.close(fig)
    return spec.output


def render_all(results_dir: str | Path, out_dir: str | Path, fmt: str = "svg") -> list[Path]:
    """Render every figure whose input CSVs exist; absent analyses are skipped."""
    results_dir, out_dir = Path(results_dir), Path(out_dir)
    written: list[Path] = []
    for kind, (inputs, _, log_x) in REGISTRY.items():
        paths = tuple(results_dir / name for name in inputs)
        if not all(p.exists() for p in paths):
            continue
        spec = FigureSpec(kind=kind, inputs=paths, output=out_dir / f"{kind}.{fmt}", log_x=log_x)
        written.append(render(spec))
    return written
