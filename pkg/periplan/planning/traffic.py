import json
import math
from typing import Dict, Iterable, Optional, Tuple

from periplan.common import ConfigurationError, clean_text
from periplan.network.topology import Node, Topology, avg_node_degree, node_degree

Pair = Tuple[int, int]

BASE_YEAR = 2020
HORIZON_YEAR = 2030
EXPECTED_GROWTH_RATE = 0.25

# Surge of 30-90% over 2023-2026, held flat through 2027 and settling at +30% afterwards.
UNEXPECTED_SURGE = {2023: 1.3, 2024: 1.5, 2025: 1.7, 2026: 1.9, 2027: 1.52, 2028: 1.3, 2029: 1.3, 2030: 1.3}


class TrafficMatrix:
    """ Offered (or provisioned) Gbps per ordered node pair for one planning year.

    :type entries: dict[tuple[int, int], float]
    """

    def __init__(self, year: int, entries: Dict[Pair, float] = None):
        self.year = year
        self.entries = dict(entries or {})

    def __getitem__(self, pair: Pair) -> float:
        return self.entries[pair]

    def __contains__(self, pair: Pair):
        return pair in self.entries

    def __len__(self):
        return len(self.entries)

    def get(self, pair: Pair, default=0.0) -> float:
        return self.entries.get(pair, default)

    def pairs(self):
        return sorted(self.entries)

    def scaled(self, factor: float, year: int) -> "TrafficMatrix":
        return TrafficMatrix(year, {p: v * factor for p, v in self.entries.items()})


class GrowthProfile:
    """ Year-indexed growth multipliers: gamma is the expected growth, the unexpected multiplier scales it further.

    :type gamma: dict[int, float]
    :type unexpected_multiplier: dict[int, float]
    """

    def __init__(self, base_year: int = BASE_YEAR, horizon_year: int = HORIZON_YEAR, gamma: Dict[int, float] = None,
                 unexpected_multiplier: Dict[int, float] = None, name: str = "custom"):
        if horizon_year < base_year:
            raise ConfigurationError(f"horizon year {horizon_year} precedes base year {base_year}")
        self.name = name
        self.base_year = base_year
        self.horizon_year = horizon_year
        self.gamma = {int(y): float(v) for y, v in (gamma or {}).items()}
        self.unexpected_multiplier = {int(y): float(v) for y, v in (unexpected_multiplier or {}).items()}
        self.validate()

    @property
    def years(self):
        return list(range(self.base_year, self.horizon_year + 1))

    def validate(self):
        previous = None
        for year in self.years:
            if year not in self.gamma:
                raise ConfigurationError(f"growth profile {self.name!r} has no gamma for {year}")
            g = self.gamma[year]
            if g < 1:
                raise ConfigurationError(f"gamma for {year} is {g}; must be >= 1")
            if previous is not None and g < previous:
                raise ConfigurationError(f"gamma decreases at {year} ({previous} -> {g})")
            if self.unexpected_multiplier.get(year, 1.0) < 1:
                raise ConfigurationError(f"unexpected multiplier for {year} must be >= 1")
            previous = g
        if abs(self.gamma[self.base_year] - 1.0) > 1e-12:
            raise ConfigurationError(f"gamma of the base year must be 1, got {self.gamma[self.base_year]}")
        return self

    def factor(self, year: int) -> float:
        if not self.base_year <= year <= self.horizon_year:
            raise ConfigurationError(f"year {year} outside profile range {self.base_year}-{self.horizon_year}")
        return self.gamma[year] * self.unexpected_multiplier.get(year, 1.0)

    def truncated(self, horizon_year: int) -> "GrowthProfile":
        return GrowthProfile(self.base_year, horizon_year, self.gamma, self.unexpected_multiplier, self.name)


def expected_profile(base_year: int = BASE_YEAR, horizon_year: int = HORIZON_YEAR,
                     growth_rate: float = EXPECTED_GROWTH_RATE) -> GrowthProfile:
    gamma = {y: (1 + growth_rate) ** (y - base_year) for y in range(base_year, horizon_year + 1)}
    return GrowthProfile(base_year, horizon_year, gamma, {y: 1.0 for y in gamma}, name="expected")


def unexpected_profile(base_year: int = BASE_YEAR, horizon_year: int = HORIZON_YEAR,
                       growth_rate: float = EXPECTED_GROWTH_RATE) -> GrowthProfile:
    profile = expected_profile(base_year, horizon_year, growth_rate)
    surge = {y: UNEXPECTED_SURGE.get(y, 1.0) for y in profile.years}
    return GrowthProfile(base_year, horizon_year, profile.gamma, surge, name="unexpected")


def load_growth_profile(source) -> GrowthProfile:
    """ Reads a JSON document mapping year -> {gamma, unexpected_multiplier}. """

    if isinstance(source, dict):
        data = source
    else:
        try:
            with open(source, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"growth profile {source} is not valid JSON: {e}")
    years = data.get("years", data) if isinstance(data, dict) else None
    if not isinstance(years, dict) or not years:
        raise ConfigurationError("growth profile must map years to {gamma, unexpected_multiplier}")

    gamma, surge = {}, {}
    try:
        for year, entry in years.items():
            gamma[int(year)] = float(entry["gamma"])
            surge[int(year)] = float(entry.get("unexpected_multiplier", 1.0))
    except (KeyError, TypeError, ValueError, AttributeError):
        raise ConfigurationError(f"bad growth profile entry in {source}")
    return GrowthProfile(min(gamma), max(gamma), gamma, surge, name=str(source) if not isinstance(source, dict)
                         else "custom")


def growth_profile_from_name(scenario: str, base_year: Optional[int] = None,
                             horizon_year: int = HORIZON_YEAR) -> GrowthProfile:
    """ Resolves the --scenario flag: 'expected', 'unexpected', 'custom:<path>' or a plain path. A custom profile
      starts at its own first year; an explicit base_year must agree with it. """

    scenario = clean_text(scenario)
    if scenario == "expected":
        return expected_profile(base_year or BASE_YEAR, horizon_year)
    elif scenario == "unexpected":
        return unexpected_profile(base_year or BASE_YEAR, horizon_year)
    path = scenario.split(":", 1)[1] if scenario.startswith("custom:") else scenario
    profile = load_growth_profile(path)
    if base_year is not None and base_year != profile.base_year:
        raise ConfigurationError(f"base year {base_year} does not match {path}, which starts in "
                                 f"{profile.base_year}")
    if horizon_year < profile.horizon_year:
        profile = profile.truncated(horizon_year)
    return profile


def delta(node: Node) -> int:
    return abs(node.dc_count - node.ixp_count)


def pair_traffic(degree_i: int, degree_j: int, delta_i: int, delta_j: int, average_degree: float) -> float:
    """ Initial offered Gbps between two nodes, given node degrees and DC/IXP imbalances. """

    n = degree_i + degree_j
    if n > 2 * average_degree:
        return float(2 * math.comb(n, 2) * delta_i * delta_j)
    return float(n * delta_i * delta_j)


def initial_traffic(topology: Topology, year: int = BASE_YEAR) -> TrafficMatrix:
    average = avg_node_degree(topology)
    degrees = {n.id: node_degree(topology, n.id) for n in topology.nodes}
    entries = {}
    for i in topology.nodes:
        for j in topology.nodes:
            if i.id == j.id:
                continue
            entries[(i.id, j.id)] = pair_traffic(degrees[i.id], degrees[j.id], delta(i), delta(j), average)
    return TrafficMatrix(year, entries)


def offered_traffic(tm0: TrafficMatrix, profile: GrowthProfile, year: int) -> TrafficMatrix:
    return tm0.scaled(profile.factor(year), year)


def aggregate_offered(tm: TrafficMatrix) -> float:
    """ Total Tbps of the matrix. """

    return sum(tm.entries.values()) / 1000


def residual_traffic(tm_t: TrafficMatrix, tm_0: TrafficMatrix, pair: Pair) -> float:
    if pair not in tm_t or pair not in tm_0:
        raise ConfigurationError(f"unknown pair {pair}")
    return tm_t[pair] - tm_0[pair]


def capacity_matrix(lightpaths: Iterable, year: int, pairs: Iterable[Pair]) -> TrafficMatrix:
    """ Provisioned Gbps per pair, covering every requested pair (zero where nothing is provisioned). """

    entries = {p: 0.0 for p in pairs}
    for lp in lightpaths:
        entries[lp.pair] = entries.get(lp.pair, 0.0) + lp.config.datarate
    return TrafficMatrix(year, entries)
