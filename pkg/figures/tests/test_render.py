"""Figure rendering against hand-written CSV fixtures."""

from __future__ import annotations

import pytest
from click.testing import CliRunner

from pcnfigures.cli import main
from pcnfigures.render import FigureSpec, MissingColumnError, REGISTRY, build_figure, render, render_all

CSV_FIXTURES = {
    "node_stats.csv": (
        "snapshot_id,run,node,routing_income_sat,routing_traffic,sender_fee_sat,sender_traffic\n"
        "d0,0,a,12.5,3,0.0,1\n"
        "d0,0,b,0.0,0,12.5,2\n"
        "d1,0,a,8.0,2,1.0,1\n"
    ),
    "summary.csv": (
        "snapshot_id,run,failures,success,mean_path_length\n"
        "d0,0,30,70,2.5000\nd1,0,25,75,2.4000\n"
    ),
    "sweep_alpha.csv": (
        "value,entity,income_sat,traffic,income_per_tx_sat,failure_fraction,mean_path_len\n"
        "10000,ALL,100.0,50.0,2.000,0.2000,2.1000\n"
        "10000,hub,80.0,40.0,2.000,0.2000,2.1000\n"
        "100000,ALL,900.0,45.0,20.000,0.3000,2.6000\n"
        "100000,hub,700.0,35.0,20.000,0.3000,2.6000\n"
    ),
    "sweep_tau.csv": (
        "value,entity,income_sat,traffic,income_per_tx_sat,failure_fraction,mean_path_len\n"
        "1000,ALL,10.0,5.0,2.000,0.1000,2.0000\n"
        "7000,ALL,70.0,35.0,2.000,0.2000,2.2000\n"
    ),
    "removal.csv": (
        "target,tau_x,phi_x,failure_ratio,beta_star_sat,gain_sat\n"
        "hub,100,40,0.4000,5.0,300.0\nspoke,10,10,1.0000,0.0,0.0\n"
    ),
    "removal_groups.csv": (
        "rank_lo,rank_hi,nodes,mean_failure_ratio,mean_beta_star_sat,mean_gain_sat\n"
        "1,10,10,0.4500,5.0,300.0\n11,20,10,0.3500,2.0,120.0\n101,,5,,0.0,0.0\n"
    ),
    "entity_report.csv": (
        "entity,capacity_sat,capacity_fraction,advertised_fee_sat,daily_income_sat,"
        "daily_traffic,annual_roi,fee_ratio,economical_fee_sat,rank_roi,rank_fee,rank_traffic\n"
        "hub,1000000,0.500000,12.0,120.0,30.0,4.3800,1.1,13.2,1,1,1\n"
        "other,1000000,0.500000,6.0,60.0,15.0,2.1900,2.3,13.8,2,2,2\n"
    ),
    "depletion_ratio.csv": (
        "entity,income_sat,optimistic_income_sat,ratio\nhub,90.0,100.0,0.9000\nalt,30.0,20.0,1.5000\n"
    ),
    "entity_removal.csv": (
        "entity,failure_fraction,baseline_fraction\nhub,0.4500,0.3500\nother,0.3600,0.3500\n"
    ),
    "privacy.csv": (
        "epsilon,hop_count,fraction\n0.00,1,0.400000\n0.00,2,0.600000\n"
        "1.00,1,0.200000\n1.00,2,0.800000\n"
    ),
    "plausibility.csv": (
        "amount_sat,threshold,fraction\n10000,0,0.900000\n10000,5,0.400000\n"
        "60000,0,0.800000\n60000,5,0.200000\n"
    ),
    "cost_vs_length.csv": (
        "L,mean_cost_sat,median_cost_sat,success_rate\n"
        "1,0.000,0.000,0.5000\n2,1.200,1.000,0.9000\n3,1.500,1.100,0.8000\n"
    ),
    "correlations.csv": (
        "kind,statistic,method,a,b,value\n"
        "cross_day,routing_income,kendall,d0,d1,0.350000\n"
        "cross_run,routing_income,kendall,,,0.700000\n"
        "cross_run,sender_fee,kendall,,,0.200000\n"
    ),
    "graph_metrics.csv": (
        "window,N,E,avg_degree,eff_diameter,cpd,transitivity\n"
        "1000,10,20,4.0000,2.5000,0.500000,0.300000\n"
        "2000,20,60,6.0000,2.2000,0.550000,0.280000\n"
    ),
    "densification.csv": "exponent,intercept,r_squared\n1.58496250,0.00000000,1.000000\n",
    "snapshot_metrics.csv": (
        "snapshot_id,N,E,avg_degree,eff_diameter,cpd,transitivity\n"
        "d0,10,20,4.0000,2.5000,0.500000,0.300000\n"
        "d1,11,22,4.0000,2.4000,0.520000,0.310000\n"
    ),
    "locality.csv": "distance,count\n1,5\n2,40\ninf,12\n",
    "lifetimes.csv": (
        "kind,id,lifetime_blocks,censored,merchant_adjacent\n"
        "channel,c1,5474,0,0\nchannel,c2,5198,0,1\nnode,a,6000,1,\n"
    ),
    "attachment.csv": (
        "degree,attachments,exposure,probability\n0,6,0,\n1,3,10,0.30000000\n5,4,4,1.00000000\n"
    ),
}


@pytest.fixture()
def results_dir(tmp_path):
    root = tmp_path / "results"
    root.mkdir()
    for name, content in CSV_FIXTURES.items():
        (root / name).write_text(content)
    return root


def test_render_all_full_set(results_dir, tmp_path):
    out = tmp_path / "figs"
    written = render_all(results_dir, out, fmt="svg")
    assert {p.name for p in written} == {f"{kind}.svg" for kind in REGISTRY}
    assert all(p.exists() and p.stat().st_size > 0 for p in written)


def test_render_all_skips_absent_analyses(results_dir, tmp_path):
    only = tmp_path / "only"
    only.mkdir()
    (only / "node_stats.csv").write_text(CSV_FIXTURES["node_stats.csv"])
    written = render_all(only, tmp_path / "figs2")
    assert [p.name for p in written] == ["node_stats.svg"]


def test_alpha_sweep_uses_log_x(results_dir):
    spec = FigureSpec(
        kind="sweep_alpha",
        inputs=(results_dir / "sweep_alpha.csv",),
        output=results_dir / "unused.svg",
        log_x=True,
    )
    fig = build_figure(spec)
    assert all(ax.get_xscale() == "log" for ax in fig.axes)
    tau_spec = FigureSpec(
        kind="sweep_tau",
        inputs=(results_dir / "sweep_tau.csv",),
        output=results_dir / "unused2.svg",
    )
    tau_fig = build_figure(tau_spec)
    assert tau_fig.axes[0].get_xscale() == "linear"


def test_empty_sweep_renders_empty_axes(tmp_path):
    root = tmp_path / "r"
    root.mkdir()
    header = "value,entity,income_sat,traffic,income_per_tx_sat,failure_fraction,mean_path_len\n"
    (root / "sweep_alpha.csv").write_text(header)
    out = render_all(root, tmp_path / "f")
    assert [p.name for p in out] == ["sweep_alpha.svg"]


def test_missing_column_names_the_column(tmp_path):
    root = tmp_path / "r"
    root.mkdir()
    (root / "privacy.csv").write_text("epsilon,hops\n0.0,1\n")
    with pytest.raises(MissingColumnError, match="hop_count"):
        render_all(root, tmp_path / "f")


def test_rerender_is_byte_identical(results_dir, tmp_path):
    spec = FigureSpec(
        kind="privacy",
        inputs=(results_dir / "privacy.csv",),
        output=tmp_path / "p1.svg",
    )
    render(spec)
    second = FigureSpec(kind="privacy", inputs=spec.inputs, output=tmp_path / "p2.svg")
    render(second)
    assert (tmp_path / "p1.svg").read_bytes() == (tmp_path / "p2.svg").read_bytes()


def test_cli_renders_and_reports(results_dir, tmp_path):
    runner = CliRunner()
    out = tmp_path / "figs"
    result = runner.invoke(main, ["--in", str(results_dir), "--out", str(out), "--format", "png"])
    assert result.exit_code == 0, result.output
    assert (out / "privacy.png").exists()


def test_cli_fails_cleanly_on_missing_column(tmp_path):
    root = tmp_path / "r"
    root.mkdir()
    (root / "summary.csv").write_text("snapshot_id,run\na,0\n")
    runner = CliRunner()
    result = runner.invoke(main, ["--in", str(root), "--out", str(tmp_path / "f")])
    assert result.exit_code == 1
    assert "missing column 'failures'" in result.output


def test_cli_empty_dir_reports_nothing_rendered(tmp_path):
    root = tmp_path / "r"
    root.mkdir()
    runner = CliRunner()
    result = runner.invoke(main, ["--in", str(root), "--out", str(tmp_path / "f")])
    assert result.exit_code == 1
    assert "nothing rendered" in result.output
