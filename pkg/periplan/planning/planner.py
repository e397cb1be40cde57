from collections import defaultdict
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from periplan.common import ConfigurationError, EPSILON, debug_log, log
from periplan.network.topology import Topology
from periplan.planning.ilp import ConfigOption, solve_additions
from periplan.planning.physics import ChannelConfig, PathConfigTable, PhyConfig, default_phy, generate_configs
from periplan.planning.routing import BLOCKED, CandidatePath, PathCache, choose_path, first_fit, path_free_weight
from periplan.planning.traffic import (GrowthProfile, TrafficMatrix, aggregate_offered, capacity_matrix,
                                       initial_traffic, offered_traffic, residual_traffic)

Pair = Tuple[int, int]


class PlannerConfig:
    def __init__(self, scheme: int = 1, delta: float = 100, saturation_threshold: float = 0.75,
                 auto_physical_upgrade: bool = False, k: int = 3, seed: int = 0, horizon: int = 2030):
        if scheme not in (1, 2):
            raise ConfigurationError(f"scheme must be 1 or 2, got {scheme}")
        if delta <= 0:
            raise ConfigurationError(f"delta must be positive, got {delta}")
        if not 0 < saturation_threshold < 1:
            raise ConfigurationError(f"saturation threshold must lie in (0, 1), got {saturation_threshold}")
        if k < 1:
            raise ConfigurationError(f"k must be at least 1, got {k}")
        self.scheme = scheme
        self.delta = delta
        self.saturation_threshold = saturation_threshold
        self.auto_physical_upgrade = auto_physical_upgrade
        self.k = k
        self.seed = seed
        self.horizon = horizon

    def copy(self, **changes) -> "PlannerConfig":
        values = dict(scheme=self.scheme, delta=self.delta, saturation_threshold=self.saturation_threshold,
                      auto_physical_upgrade=self.auto_physical_upgrade, k=self.k, seed=self.seed,
                      horizon=self.horizon)
        values.update(changes)
        return PlannerConfig(**values)


class Lightpath:
    """ One provisioned BVT: a fixed path, a configuration and a contiguous slot block on one fiber pair.

    :type upgraded_years: list[int]
    """

    def __init__(self, lp_id: int, pair: Pair, path: CandidatePath, config: ChannelConfig, fiber_pair_index: int,
                 slot_range: Tuple[int, int], eta_nli: float, provisioned_year: int):
        self.id = lp_id
        self.pair = pair
        self.path = path
        self.config = config
        self.fiber_pair_index = fiber_pair_index
        self.slot_range = slot_range
        self.eta_nli = eta_nli
        self.provisioned_year = provisioned_year
        self.upgraded_years = []

    @property
    def start(self):
        return self.slot_range[0]

    @property
    def length(self):
        return self.slot_range[1]

    @property
    def central_slot(self):
        return central_slot(*self.slot_range)

    def __repr__(self):
        return f"Lightpath({self.id}, {self.pair}, {self.config.name}, fp={self.fiber_pair_index}, " \
               f"slots={self.slot_range})"


def central_slot(start: int, length: int) -> int:
    return start + (length - 1) // 2


class UpgradeEvent:
    def __init__(self, lightpath_id: int, year: int, old_config: ChannelConfig, new_config: ChannelConfig,
                 old_range: Tuple[int, int], new_range: Tuple[int, int]):
        self.lightpath_id = lightpath_id
        self.year = year
        self.old_config = old_config
        self.new_config = new_config
        self.old_range = old_range
        self.new_range = new_range


class PlacedLightpath(NamedTuple):
    lightpath_id: int
    config: ChannelConfig
    eta_nli: float


class AdditionRecord:
    """ What the addition step asked for and what it managed to place, for one pair in one period. Placements are
      snapshots; later upgrades do not change them.

    :type placed: list[PlacedLightpath]
    """

    def __init__(self, pair: Pair, year: int, theta: float, nli_budget: Optional[float],
                 requested: Optional[List[ChannelConfig]], path: CandidatePath = None):
        self.pair = pair
        self.year = year
        self.theta = theta
        self.nli_budget = nli_budget
        self.requested = requested
        self.path = path
        self.placed = []

    @property
    def infeasible(self):
        return self.requested is None

    @property
    def satisfied(self):
        return self.requested is not None and len(self.placed) == len(self.requested)

    @property
    def added_datarate(self):
        return sum(p.config.datarate for p in self.placed)

    @property
    def added_eta(self):
        return sum(p.eta_nli for p in self.placed)


class PeriodReport:
    """ Outcome of one planning year.

    :type flagged_links: list[int]
    :type occupancy: dict[int, float]
    :type upgrade_events: list[UpgradeEvent]
    :type additions: list[AdditionRecord]
    """

    def __init__(self, year: int, offered_tbps: float, carried_tbps: float, bvt_count: int, upgrades_performed: int,
                 lps_added: int, blocked_additions: int, flagged_links: List[int], occupancy: Dict[int, float],
                 infeasible_pairs: int = 0, upgrade_events=None, additions=None, physical_upgrades=None):
        self.year = year
        self.offered_tbps = offered_tbps
        self.carried_tbps = carried_tbps
        self.unmet_tbps = max(0.0, offered_tbps - carried_tbps)
        self.bvt_count = bvt_count
        self.upgrades_performed = upgrades_performed
        self.lps_added = lps_added
        self.blocked_additions = blocked_additions
        self.flagged_links = list(flagged_links)
        self.occupancy = dict(occupancy)
        self.infeasible_pairs = infeasible_pairs
        self.upgrade_events = list(upgrade_events or [])
        self.additions = list(additions or [])
        self.physical_upgrades = list(physical_upgrades or [])

    def summary_line(self):
        return f"{self.year}: offered {self.offered_tbps:.3f} Tbps, carried {self.carried_tbps:.3f} Tbps, " \
               f"{self.bvt_count} BVTs (+{self.lps_added}, {self.upgrades_performed} upgrades, " \
               f"{self.blocked_additions} blocked), {len(self.flagged_links)} links above threshold"


class PlanningState:
    """ Everything a planning run mutates: its own copy of the slot grids, the lightpath ledger and the RNG.

    :type grids: dict[int, SlotGrid]
    :type lightpaths: list[Lightpath]
    :type by_pair: dict[tuple[int, int], list[Lightpath]]
    :type tables: dict[tuple[int, ...], PathConfigTable]
    """

    def __init__(self, topology: Topology, config: PlannerConfig, phy: PhyConfig = None,
                 catalog: List[ChannelConfig] = None):
        self.topology = topology
        self.config = config
        self.phy = phy or default_phy()
        self.catalog = generate_configs(self.phy) if catalog is None else catalog
        self.grids = {link.id: link.grid.copy() for link in topology.links}
        self.lightpaths = []
        self.by_pair = defaultdict(list)
        self.paths = PathCache(topology, config.k)
        self.tables = {}
        self.rng = np.random.default_rng(config.seed)
        self.pending_upgrades = []
        self.next_id = 1

    @property
    def bvt_count(self):
        return len(self.lightpaths)

    def table(self, path: CandidatePath) -> PathConfigTable:
        if path.link_sequence not in self.tables:
            self.tables[path.link_sequence] = PathConfigTable(path.spans(self.topology), self.catalog, self.phy)
        return self.tables[path.link_sequence]

    def addition_options(self, path: CandidatePath) -> List[ConfigOption]:
        return [ConfigOption(config, eta) for config, eta in self.table(path).options]

    def nli_budget(self, pair: Pair) -> Optional[float]:
        """ Sum of the NLI coefficients of the pair's lightpaths; None for a pair with none yet. """

        existing = self.by_pair[pair]
        return sum(lp.eta_nli for lp in existing) if existing else None

    def commit(self, pair: Pair, path: CandidatePath, config: ChannelConfig, fiber_pair_index: int, start: int,
               year: int) -> Lightpath:
        lp = Lightpath(self.next_id, pair, path, config, fiber_pair_index, (start, config.slot_count),
                       self.table(path).eta(config), year)
        self.occupy(lp, start, config.slot_count)
        self.next_id += 1
        self.lightpaths.append(lp)
        self.by_pair[pair].append(lp)
        return lp

    def occupy(self, lp: Lightpath, start: int, length: int):
        for link_id in lp.path.link_sequence:
            self.grids[link_id].allocate(lp.fiber_pair_index, start, length)

    def release(self, lp: Lightpath, start: int, length: int):
        if length <= 0:
            return
        for link_id in lp.path.link_sequence:
            self.grids[link_id].release(lp.fiber_pair_index, start, length)

    def apply_physical_upgrades(self, link_ids: List[int]) -> List[int]:
        """ Adds a dark fiber pair to both directions of every listed adjacency; returns the upgraded link ids. """

        upgraded = set()
        for link_id in link_ids:
            upgraded.add(link_id)
            reverse = self.topology.reverse_link(link_id)
            if reverse is not None:
                upgraded.add(reverse.id)
        for link_id in sorted(upgraded):
            self.grids[link_id].add_fiber_pair()
        return sorted(upgraded)


def _shrink(lp: Lightpath, new_length: int) -> Tuple[int, int]:
    """ New (start, length) block keeping the central slot index fixed. """

    start, length = lp.slot_range
    released = length - new_length
    low = released // 2
    if released % 2 == 1 and length % 2 == 1:
        low += 1
    return start + low, new_length


def upgrade_lightpaths(state: PlanningState, pair: Pair, theta: float, year: int):
    """ Raises the datarate of provisioned lightpaths in place, never widening their spectrum. Returns the pair's
      lightpaths, the reduced theta, the number of upgrades and the upgrade events. """

    events = []
    for lp in sorted(state.by_pair[pair], key=lambda x: x.id):
        if theta <= 0:
            break
        table = state.table(lp.path)
        rho = [c for c in table.configs
               if c.bandwidth <= lp.config.bandwidth + EPSILON and c.slot_count <= lp.length]
        rho.sort(key=lambda c: (-c.datarate, c.slot_count, c.bandwidth))
        target = next((c for c in rho if c.datarate > lp.config.datarate), None)
        if target is None:
            continue

        old_config, old_range = lp.config, lp.slot_range
        new_start, new_length = _shrink(lp, target.slot_count)
        state.release(lp, old_range[0], new_start - old_range[0])
        state.release(lp, new_start + new_length, old_range[0] + old_range[1] - new_start - new_length)
        lp.config = target
        lp.slot_range = (new_start, new_length)
        lp.eta_nli = table.eta(target)
        lp.upgraded_years.append(year)
        theta -= target.datarate - old_config.datarate
        events.append(UpgradeEvent(lp.id, year, old_config, target, old_range, lp.slot_range))
        debug_log(f"upgraded LP {lp.id} {old_config.name} -> {target.name}, theta now {theta:.1f}")
    return state.by_pair[pair], theta, len(events), events


class _Snapshot(NamedTuple):
    lightpath: Lightpath
    config: ChannelConfig
    slot_range: Tuple[int, int]
    eta_nli: float
    upgrade_count: int


def _snapshot(state: PlanningState, pair: Pair) -> List[_Snapshot]:
    return [_Snapshot(lp, lp.config, lp.slot_range, lp.eta_nli, len(lp.upgraded_years)) for lp in state.by_pair[pair]]


def _restore(state: PlanningState, snapshot: List[_Snapshot]):
    """ Undoes in-place upgrades made since the snapshot. Upgrades only release slots, so the old blocks are free. """

    for lp, config, slot_range, eta, upgrade_count in snapshot:
        if lp.config == config and lp.slot_range == slot_range:
            continue
        state.release(lp, *lp.slot_range)
        lp.config, lp.slot_range, lp.eta_nli = config, slot_range, eta
        del lp.upgraded_years[upgrade_count:]
        state.occupy(lp, *slot_range)


def addition_paths(state: PlanningState, pair: Pair) -> List[CandidatePath]:
    """ Candidate paths with at least one valid configuration: the weighted random pick first, then the others in
      length order. """

    eligible = [p for p in state.paths.candidates(pair) if state.table(p).options]
    if not eligible:
        return []
    weights = [path_free_weight(p, state.grids) for p in eligible]
    chosen = choose_path(eligible, weights, state.rng)
    return [chosen] + [p for p in eligible if p != chosen]


def solve_on_paths(state: PlanningState, paths: List[CandidatePath], theta: float, nli_budget: Optional[float],
                   delta: float) -> Tuple[Optional[CandidatePath], Optional[List[ChannelConfig]]]:
    """ Solves the addition problem with each path's own configurations and NLI coefficients; the first path with a
      feasible mix wins. """

    for path in paths:
        requested = solve_additions(theta, state.addition_options(path), nli_budget, delta)
        if requested is not None:
            return path, requested
    return None, None


def place_lightpath(state: PlanningState, pair: Pair, config: ChannelConfig, year: int,
                    path: CandidatePath) -> Optional[Lightpath]:
    """ First-fit on the planned path, then on the other candidates where the config is valid with no larger NLI
      coefficient than on the planned path. """

    planned_eta = state.table(path).eta(config)
    fallbacks = [p for p in state.paths.candidates(pair) if p != path and state.table(p).is_valid(config)
                 and state.table(p).eta(config) <= planned_eta]
    for candidate in [path] + fallbacks:
        fit = first_fit(candidate, config.slot_count, state.grids)
        if fit != BLOCKED:
            return state.commit(pair, candidate, config, fit[0], fit[1], year)
    return None


def check_saturation(state: PlanningState, threshold: float) -> List[int]:
    return [link_id for link_id, grid in sorted(state.grids.items()) if grid.occupancy_ratio() > threshold]


def carried_tbps(state: PlanningState, traffic: TrafficMatrix) -> float:
    capacity = capacity_matrix(state.lightpaths, traffic.year, traffic.pairs())
    return sum(min(capacity[p], traffic[p]) for p in traffic.pairs()) / 1000


def plan_period(state: PlanningState, traffic: TrafficMatrix, config: PlannerConfig = None) -> PeriodReport:
    config = config or state.config
    year = traffic.year

    physical = []
    if config.auto_physical_upgrade and state.pending_upgrades:
        physical = state.apply_physical_upgrades(state.pending_upgrades)
        log(f"{year}: added a fiber pair on links {physical}")
    state.pending_upgrades = []

    provisioned = capacity_matrix(state.lightpaths, year, traffic.pairs())
    residuals = []
    for pair in traffic.pairs():
        if traffic[pair] <= 0:
            continue
        theta = residual_traffic(traffic, provisioned, pair)
        if theta > 0:
            residuals.append((theta, pair))
    residuals.sort(key=lambda x: (-x[0], x[1]))

    events, additions = [], []
    added = blocked = infeasible = 0
    for offered_theta, pair in residuals:
        theta, pair_events, snapshot = offered_theta, [], None
        if config.scheme == 1 and state.by_pair[pair]:
            snapshot = _snapshot(state, pair)
            _, theta, _, pair_events = upgrade_lightpaths(state, pair, offered_theta, year)
        if theta <= 0:
            events.extend(pair_events)
            continue

        budget = state.nli_budget(pair)
        path, requested = solve_on_paths(state, addition_paths(state, pair), theta, budget, config.delta)
        if requested is None and pair_events:
            # the upgraded residual fits no mix: plan the pair by additions alone if that is feasible
            _restore(state, snapshot)
            plain_budget = state.nli_budget(pair)
            path, requested = solve_on_paths(state, addition_paths(state, pair), offered_theta, plain_budget,
                                             config.delta)
            if requested is None:
                pair_events = upgrade_lightpaths(state, pair, offered_theta, year)[3]
            else:
                debug_log(f"{year} {pair}: upgrades left {theta:.1f} Gbps unplaceable, adding instead")
                theta, budget, pair_events = offered_theta, plain_budget, []
        events.extend(pair_events)

        record = AdditionRecord(pair, year, theta, budget, requested, path)
        additions.append(record)
        if requested is None:
            infeasible += 1
            debug_log(f"{year} {pair}: no configuration mix carries {theta:.1f} Gbps within the NLI budget")
            continue
        for c in requested:
            lp = place_lightpath(state, pair, c, year, path)
            if lp is None:
                blocked += 1
            else:
                record.placed.append(PlacedLightpath(lp.id, lp.config, lp.eta_nli))
                added += 1
        debug_log(f"{year} {pair}: theta {theta:.1f}, requested {[c.name for c in requested]} on {path}, "
                  f"placed {len(record.placed)}")

    flagged = check_saturation(state, config.saturation_threshold)
    if config.auto_physical_upgrade:
        state.pending_upgrades = flagged

    report = PeriodReport(year, aggregate_offered(traffic), carried_tbps(state, traffic), state.bvt_count,
                          len(events), added, blocked, flagged,
                          {link_id: grid.occupancy_ratio() for link_id, grid in sorted(state.grids.items())},
                          infeasible, events, additions, physical)
    log(report.summary_line())
    return report


def reconcile(state: PlanningState) -> List[str]:
    """ Rebuilds the occupancy implied by the lightpath ledger and compares it with the slot grids. """

    violations = []
    expected = {link_id: np.zeros_like(grid.occupancy) for link_id, grid in state.grids.items()}
    for lp in state.lightpaths:
        if lp.length != lp.config.slot_count:
            violations.append(f"LP {lp.id} occupies {lp.length} slots but {lp.config.name} needs "
                              f"{lp.config.slot_count}")
        for link_id in lp.path.link_sequence:
            block = expected[link_id][lp.fiber_pair_index, lp.start:lp.start + lp.length]
            if block.any():
                violations.append(f"LP {lp.id} overlaps another lightpath on link {link_id}")
            block[:] = True
    for link_id, grid in state.grids.items():
        if not np.array_equal(expected[link_id], grid.occupancy):
            violations.append(f"link {link_id}: grid occupancy does not match the lightpath ledger")
    return violations


def simulate(topology: Topology, profile: GrowthProfile, config: PlannerConfig, phy: PhyConfig = None,
             catalog: List[ChannelConfig] = None) -> Tuple[PlanningState, List[PeriodReport]]:
    state = PlanningState(topology, config, phy, catalog)
    tm0 = initial_traffic(topology, profile.base_year)
    horizon = min(config.horizon, profile.horizon_year)
    reports = []
    log(f"Planning {topology.name}: scheme {config.scheme}, {profile.name} growth, seed {config.seed}, "
        f"{profile.base_year}-{horizon}")
    for year in range(profile.base_year, horizon + 1):
        reports.append(plan_period(state, offered_traffic(tm0, profile, year), config))
    return state, reports


def run_study(topology: Topology, profile: GrowthProfile, config: PlannerConfig, output_dir: str = None,
              phy: PhyConfig = None) -> List[PeriodReport]:
    """ Runs every planning year from the profile's base year to the configured horizon and, when output_dir is
      given, writes the per-run CSV files there. """

    from periplan.planning.report import write_run_outputs

    state, reports = simulate(topology, profile, config, phy)
    if output_dir:
        write_run_outputs(output_dir, state, reports)
    return reports
