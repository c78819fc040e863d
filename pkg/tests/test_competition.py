"""Removal impact, fee deltas, and the optimal base-fee increment."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcnsim.competition import (
    RemovalAnalysis,
    analyze_targets,
    group_report,
    optimal_base_fee_increment,
    removal_impact,
)
from pcnsim.engine import cell_seed, run_experiment, simulate_day
from pcnsim.ingest import EntityMap

from conftest import build_graph, default_params, pol, random_snapshot


def oracle_increment(deltas):
    """Full scan over every candidate increment."""
    best = (0, 0)
    for beta in sorted(set(deltas)):
        gain = beta * sum(1 for d in deltas if d >= beta)
        if gain > best[1] or (gain == best[1] and beta < best[0]):
            best = (beta, gain)
    return best


def test_increment_examples():
    assert optimal_base_fee_increment([100, 100, 50, 10]) == (100, 200)
    assert optimal_base_fee_increment([5, 5, 5]) == (5, 15)
    assert optimal_base_fee_increment([]) == (0, 0)


def test_increment_rejects_negative():
    with pytest.raises(ValueError):
        optimal_base_fee_increment([-1])


def test_increment_matches_oracle_random():
    rng = np.random.default_rng(2)
    for _ in range(300):
        deltas = [int(d) for d in rng.integers(0, 500, size=rng.integers(1, 40))]
        assert optimal_base_fee_increment(deltas) == oracle_increment(deltas)


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=50), st.integers(1, 10**4))
def test_increment_monotone_opportunity(deltas, bump):
    _, gain = optimal_base_fee_increment(deltas)
    _, shifted_gain = optimal_base_fee_increment([d + bump for d in deltas])
    assert shifted_gain >= gain


def test_increment_dominates_every_candidate():
    rng = np.random.default_rng(5)
    deltas = [int(d) for d in rng.integers(0, 1000, size=30)]
    beta_star, gain = optimal_base_fee_increment(deltas)
    for beta in set(deltas):
        assert gain >= beta * sum(1 for d in deltas if d >= beta)


def bridge_fixture():
    # s - x - t with no alternative: removing x kills all through-traffic.
    return build_graph(
        [
            ("sx", "s", "x", 1_000_000, pol(1_000, 0), pol()),
            ("xt", "x", "t", 1_000_000, pol(1_000, 0), pol()),
        ]
    )


def baseline_outcomes(graph, params, merchants=frozenset()):
    day = simulate_day(graph, merchants, params, cell_seed(params.seed, 0, 0), keep_outcomes=True)
    return day.outcomes


def test_bridge_removal_fails_all():
    graph = bridge_fixture()
    params = default_params(tau=0, seed=3, ignore_depletion=True)
    from pcnsim.engine import route_transactions
    from pcnsim.graph_state import init_balances
    from pcnsim.sampler import Transaction

    state = init_balances(graph, cell_seed(3, 0, 0), ignore_depletion=True)
    day = route_transactions(
        graph, [Transaction("s", "t", 60_000)] * 3, state,
        default_params(ignore_depletion=True), keep_outcomes=True,
    )
    analysis = removal_impact(
        graph, cell_seed(3, 0, 0), day.outcomes, {"x"}, default_params(ignore_depletion=True)
    )
    assert analysis.tau_x == 3
    assert analysis.phi_x == 3
    assert analysis.deltas_msat == []


def test_diamond_removal_delta():
    # Route via a costs 10 sat (entering a); the detour via b costs 20 sat.
    graph = build_graph(
        [
            ("sa", "s", "a", 1_000_000, pol(10_000, 0), pol()),
            ("at", "a", "t", 1_000_000, pol(0, 0), pol()),
            ("sb", "s", "b", 1_000_000, pol(20_000, 0), pol()),
            ("bt", "b", "t", 1_000_000, pol(0, 0), pol()),
        ]
    )
    params = default_params(ignore_depletion=True)
    from pcnsim.engine import route_transactions
    from pcnsim.graph_state import init_balances
    from pcnsim.sampler import Transaction

    state = init_balances(graph, cell_seed(7, 0, 0), ignore_depletion=True)
    day = route_transactions(graph, [Transaction("s", "t", 60_000)], state, params, keep_outcomes=True)
    assert day.outcomes[0].path == ("s", "a", "t")
    analysis = removal_impact(graph, cell_seed(7, 0, 0), day.outcomes, {"a"}, params)
    assert analysis.tau_x == 1 and analysis.phi_x == 0
    assert analysis.deltas_msat == [10_000]
    assert analysis.beta_star_msat == 10_000 and analysis.gain_msat == 10_000


def test_zero_traffic_target():
    graph = bridge_fixture()
    params = default_params(ignore_depletion=True)
    outcomes = baseline_outcomes(graph, default_params(tau=5, seed=2, ignore_depletion=True))
    analysis = removal_impact(graph, cell_seed(2, 0, 0), outcomes, {"t"}, params)
    # t is an endpoint, never an intermediary.
    assert analysis.tau_x == 0 and analysis.phi_x == 0
    assert analysis.failure_ratio is None


def test_empty_target_rejected():
    graph = bridge_fixture()
    with pytest.raises(ValueError):
        removal_impact(graph, cell_seed(1, 0, 0), [], set(), default_params())


def test_group_report_bands_and_exclusions():
    analyses = {
        f"n{i}": RemovalAnalysis(
            label=f"n{i}",
            members=(f"n{i}",),
            tau_x=10 if i % 2 == 0 else 0,
            phi_x=10 if i % 2 == 0 else 0,
            deltas_msat=[],
            beta_star_msat=1000 * i,
            gain_msat=2000 * i,
        )
        for i in range(12)
    }
    ranking = [f"n{i}" for i in range(12)]
    rows = group_report(analyses, ranking)
    top = rows[0]
    assert top.rank_lo == 1 and top.rank_hi == 10 and top.nodes == 10
    # Bridges only among even ranks; ratio mean ignores the zero-traffic half.
    assert top.mean_failure_ratio == pytest.approx(1.0)
    second = rows[1]
    assert second.nodes == 2


def test_entity_removal_failure_dominates_members():
    rng = np.random.default_rng(23)
    graph = random_snapshot(rng, 10, edge_prob=0.4)
    params = default_params(tau=60, seed=11)
    outcomes = baseline_outcomes(graph, params, merchants=frozenset({"n03"}))
    seed = cell_seed(params.seed, 0, 0)
    members = {"n02", "n04"}
    entity = removal_impact(graph, seed, outcomes, members, params)
    for node in members:
        single = removal_impact(graph, seed, outcomes, {node}, params)
        assert entity.phi_x >= single.phi_x


def test_analyze_targets_pools_cells():
    rng = np.random.default_rng(29)
    graph = random_snapshot(rng, 10, edge_prob=0.4, snapshot_id="d0")
    params = default_params(tau=40, runs=2, seed=13)
    baseline = run_experiment([graph], {"n03"}, EntityMap(), params, keep_outcomes=True)
    pooled = analyze_targets([graph], baseline, {"n05": frozenset({"n05"})}, params)
    per_cell = []
    for run, cell in enumerate(baseline.cells):
        a = removal_impact(graph, cell_seed(13, 0, run), cell.outcomes, {"n05"}, params)
        per_cell.append(a)
    assert pooled["n05"].tau_x == sum(a.tau_x for a in per_cell)
    assert pooled["n05"].phi_x == sum(a.phi_x for a in per_cell)
