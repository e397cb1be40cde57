import os

import pytest

from periplan.common import ConfigurationError, EPSILON
from periplan.planning.physics import Modulation, make_config
from periplan.planning.planner import (PlannerConfig, PlanningState, check_saturation, plan_period, reconcile,
                                       run_study, simulate, solve_on_paths, upgrade_lightpaths)
from periplan.planning.routing import first_fit
from periplan.planning.traffic import TrafficMatrix, expected_profile


def triangle_state(triangle, **changes):
    return PlanningState(triangle, PlannerConfig(seed=1).copy(**changes))


def test_planner_config_validation():
    for bad in [dict(scheme=3), dict(delta=0), dict(saturation_threshold=1.0), dict(k=0)]:
        with pytest.raises(ConfigurationError):
            PlannerConfig(**bad)


def test_upgrade_shrinks_around_the_central_slot(triangle):
    state = triangle_state(triangle)
    path = state.paths.candidates((1, 2))[0]
    lp = state.commit((1, 2), path, make_config(300, Modulation.QPSK), 0, 10, 2020)
    assert lp.slot_range == (10, 9)
    assert lp.central_slot == 14

    _, theta, count, events = upgrade_lightpaths(state, (1, 2), 500, 2021)
    assert count == 1
    assert theta == 200
    assert lp.config == make_config(600, Modulation.QAM64)
    assert lp.slot_range == (12, 6)
    assert lp.central_slot == 14
    assert lp.upgraded_years == [2021]
    assert (events[0].old_range, events[0].new_range) == ((10, 9), (12, 6))

    occupancy = state.grids[path.link_sequence[0]].occupancy[0]
    assert not occupancy[10:12].any()
    assert occupancy[12:18].all()
    assert not occupancy[18]
    assert reconcile(state) == []


def test_upgrade_keeps_the_slot_block_when_widths_match(triangle):
    state = triangle_state(triangle)
    path = state.paths.candidates((1, 2))[0]
    lp = state.commit((1, 2), path, make_config(200, Modulation.QPSK), 0, 0, 2020)
    _, theta, count, _ = upgrade_lightpaths(state, (1, 2), 100, 2021)
    assert count == 1
    assert lp.slot_range == (0, 6)
    assert lp.config.datarate == 600
    assert theta == -300


def test_no_upgrade_beyond_the_best_config(triangle):
    state = triangle_state(triangle)
    path = state.paths.candidates((1, 2))[0]
    top = make_config(600, Modulation.QAM64)
    state.commit((1, 2), path, top, 0, 0, 2020)
    assert upgrade_lightpaths(state, (1, 2), 300, 2021)[1:3] == (300, 0)


def test_no_upgrade_without_residual(triangle):
    state = triangle_state(triangle)
    path = state.paths.candidates((1, 2))[0]
    lp = state.commit((1, 2), path, make_config(100, Modulation.QPSK), 0, 0, 2020)
    assert upgrade_lightpaths(state, (1, 2), 0, 2021)[2] == 0
    assert lp.config.datarate == 100


def test_saturation_threshold_is_strict(triangle):
    state = triangle_state(triangle)
    state.grids[0].allocate(0, 0, 288)
    assert check_saturation(state, 0.75) == []
    state.grids[0].allocate(0, 288, 1)
    assert check_saturation(state, 0.75) == [0]


def test_auto_physical_upgrade_on_both_directions(triangle):
    state = triangle_state(triangle, auto_physical_upgrade=True, saturation_threshold=0.5)
    state.grids[0].allocate(0, 0, 200)
    first = plan_period(state, TrafficMatrix(2020, {(1, 2): 0.0}))
    assert first.flagged_links == [0]
    second = plan_period(state, TrafficMatrix(2021, {(1, 2): 0.0}))
    assert second.physical_upgrades == [0, 1]
    assert state.grids[1].fiber_pairs == 2
    assert second.occupancy[0] == pytest.approx(first.occupancy[0] / 2)
    assert second.flagged_links == []


def test_flagged_links_stay_without_auto_upgrade(triangle):
    state = triangle_state(triangle, saturation_threshold=0.5)
    state.grids[0].allocate(0, 0, 200)
    plan_period(state, TrafficMatrix(2020, {(1, 2): 0.0}))
    report = plan_period(state, TrafficMatrix(2021, {(1, 2): 0.0}))
    assert report.flagged_links == [0]
    assert report.physical_upgrades == []


def test_reconcile_detects_stray_slots(triangle):
    state = triangle_state(triangle)
    path = state.paths.candidates((1, 3))[0]
    state.commit((1, 3), path, make_config(100, Modulation.QPSK), 0, 0, 2020)
    assert reconcile(state) == []
    state.grids[path.link_sequence[0]].occupancy[0, 50] = True
    assert len(reconcile(state)) == 1


def test_first_period_on_an_empty_network(triangle):
    state = triangle_state(triangle)
    report = plan_period(state, TrafficMatrix(2020, {(1, 2): 430.0, (1, 3): 50.0, (2, 3): 0.0}))
    assert report.lps_added == 2
    assert report.bvt_count == 2
    assert report.carried_tbps == pytest.approx(report.offered_tbps)
    assert report.unmet_tbps == 0
    assert [r.nli_budget for r in report.additions] == [None, None]
    assert sorted(lp.config.datarate for lp in state.lightpaths) == [100, 450]


def test_additions_are_solved_per_candidate_path(germany17):
    state = PlanningState(germany17, PlannerConfig(scheme=2, seed=0))
    pair = (12, 8)
    candidates = state.paths.candidates(pair)
    shortest = candidates[0]
    existing = make_config(450, Modulation.QAM64)
    fiber_pair, start = first_fit(shortest, existing.slot_count, state.grids)
    state.commit(pair, shortest, existing, fiber_pair, start, 2020)
    budget = state.nli_budget(pair)

    path, requested = solve_on_paths(state, [shortest], 110, budget, 100)
    assert path == shortest
    assert [c.name for c in requested] == ["150G-QPSK"]

    path, requested = solve_on_paths(state, list(reversed(candidates)), 110, budget, 100)
    assert requested is not None
    assert sum(state.table(path).eta(c) for c in requested) <= budget

    report = plan_period(state, TrafficMatrix(2021, {pair: 560.0}))
    assert report.infeasible_pairs == 0
    record = report.additions[0]
    assert record.theta == pytest.approx(110)
    assert record.satisfied
    assert record.added_eta <= budget
    assert report.unmet_tbps == 0


def test_upgrade_rolled_back_when_the_residual_fits_no_mix(triangle):
    state = triangle_state(triangle, scheme=1)
    path = state.paths.candidates((1, 2))[0]
    lp = state.commit((1, 2), path, make_config(200, Modulation.QPSK), 0, 0, 2020)

    # upgrading to 600G leaves 50 Gbps, and no 100G or 150G config fits the 64 GBd budget
    report = plan_period(state, TrafficMatrix(2021, {(1, 2): 650.0}))
    assert report.upgrades_performed == 0
    assert report.upgrade_events == []
    assert lp.config == make_config(200, Modulation.QPSK)
    assert lp.slot_range == (0, 6)
    assert lp.upgraded_years == []

    record = report.additions[0]
    assert record.theta == 450
    assert [c.datarate for c in record.requested] == [450]
    assert record.satisfied
    assert record.added_eta <= record.nli_budget
    assert report.carried_tbps == pytest.approx(0.65)
    assert reconcile(state) == []


def test_short_studies_keep_grids_and_ledger_in_sync(germany_short_studies):
    for scheme, (_, reports, violations) in germany_short_studies.items():
        assert violations == []
        assert len(reports) == 4


def test_additions_respect_window_and_nli_budget(germany_short_studies):
    for _, reports, _ in germany_short_studies.values():
        for report in reports:
            for record in report.additions:
                if record.satisfied:
                    assert 0 <= record.added_datarate - record.theta < 100
                if record.nli_budget is not None:
                    assert record.added_eta <= record.nli_budget * (1 + 1e-9)


def test_upgrade_events_are_well_formed(germany_short_studies):
    state, reports, _ = germany_short_studies[1]
    events = [e for r in reports for e in r.upgrade_events]
    for e in events:
        assert e.new_config.datarate > e.old_config.datarate
        assert e.new_range[1] <= e.old_range[1]
        assert e.new_range[0] + (e.new_range[1] - 1) // 2 == e.old_range[0] + (e.old_range[1] - 1) // 2
        assert e.new_config.bandwidth <= e.old_config.bandwidth + EPSILON
    assert sum(r.upgrades_performed for r in reports) == len(events)


def test_scheme_2_never_upgrades(germany_short_studies):
    _, reports, _ = germany_short_studies[2]
    assert all(r.upgrades_performed == 0 and not r.upgrade_events for r in reports)


def test_reports_are_consistent(germany_short_studies):
    for state, reports, _ in germany_short_studies.values():
        counts = [r.bvt_count for r in reports]
        assert counts == sorted(counts)
        assert counts[-1] == len(state.lightpaths)
        for r in reports:
            assert r.carried_tbps <= r.offered_tbps + EPSILON
            assert r.unmet_tbps == pytest.approx(r.offered_tbps - r.carried_tbps, abs=1e-9)
            assert r.lps_added == sum(len(a.placed) for a in r.additions)
            assert r.blocked_additions == sum(len(a.requested) - len(a.placed) for a in r.additions
                                              if not a.infeasible)
            assert r.infeasible_pairs == sum(1 for a in r.additions if a.infeasible)
        first = reports[0]
        if first.blocked_additions == 0 and first.infeasible_pairs == 0:
            assert first.carried_tbps == pytest.approx(first.offered_tbps)


def ledger(state):
    return [(lp.id, lp.pair, lp.path.node_sequence, lp.config, lp.fiber_pair_index, lp.slot_range,
             lp.upgraded_years) for lp in state.lightpaths]


def summary(reports):
    return [(r.year, r.offered_tbps, r.carried_tbps, r.bvt_count, r.upgrades_performed, r.lps_added,
             r.blocked_additions, r.flagged_links) for r in reports]


def test_same_seed_same_plan(abilene12):
    profile = expected_profile(2020, 2022)
    config = PlannerConfig(scheme=1, seed=42, horizon=2022)
    state_a, reports_a = simulate(abilene12, profile, config)
    state_b, reports_b = simulate(abilene12, profile, config)
    assert ledger(state_a) == ledger(state_b)
    assert summary(reports_a) == summary(reports_b)


def test_topology_is_never_mutated(abilene12):
    simulate(abilene12, expected_profile(2020, 2021), PlannerConfig(seed=1, horizon=2021))
    assert all(link.grid.occupied_slots() == 0 for link in abilene12.links)


def test_run_study_single_year_writes_run_files(abilene12, tmp_path):
    reports = run_study(abilene12, expected_profile(2020, 2030), PlannerConfig(seed=3, horizon=2020),
                        str(tmp_path))
    assert len(reports) == 1
    assert sorted(os.listdir(tmp_path)) == ["bvts.csv", "lightpaths.csv", "occupancy.csv", "throughput.csv"]


def first_unmet_year(reports):
    return next((r.year for r in reports if r.unmet_tbps > EPSILON), None)


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("scheme", [1, 2])
@pytest.mark.parametrize("scenario", ["expected", "unexpected"])
def test_full_horizon_invariants(full_study, scenario, scheme, seed):
    _, reports, violations = full_study(scenario, scheme, seed)
    assert len(reports) == 11
    assert violations == []
    counts = [r.bvt_count for r in reports]
    assert counts == sorted(counts)
    for report in reports:
        for record in report.additions:
            if record.satisfied:
                assert 0 <= record.added_datarate - record.theta < 100
            if record.nli_budget is not None:
                assert record.added_eta <= record.nli_budget * (1 + 1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("scenario", ["expected", "unexpected"])
def test_upgrading_first_never_carries_less(full_study, scenario, seed):
    _, upgrading, _ = full_study(scenario, 1, seed)
    _, adding, _ = full_study(scenario, 2, seed)
    for first, second in zip(upgrading, adding):
        assert first.year == second.year
        assert first.carried_tbps >= second.carried_tbps - EPSILON, first.year


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(5))
def test_unexpected_growth_exhausts_additions_first(full_study, seed):
    _, upgrading, _ = full_study("unexpected", 1, seed)
    _, adding, _ = full_study("unexpected", 2, seed)
    assert any(r.unmet_tbps > EPSILON for r in adding if r.year >= 2026)
    first_adding = first_unmet_year(adding)
    first_upgrading = first_unmet_year(upgrading)
    assert first_upgrading is None or first_upgrading >= first_adding


@pytest.mark.slow
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_saturation_before_the_horizon_and_fiber_relief(full_study, seed):
    _, plain, _ = full_study("unexpected", 1, seed)
    _, relieved, _ = full_study("unexpected", 1, seed, auto_physical_upgrade=True)
    assert any(r.flagged_links for r in plain if r.year < 2030)
    assert sum(r.unmet_tbps for r in relieved) < sum(r.unmet_tbps for r in plain)
    assert any(r.physical_upgrades for r in relieved)
