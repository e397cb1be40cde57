import pytest

from periplan.network.topology import load_bundled, load_topology
from periplan.planning.physics import PhyConfig, generate_configs
from periplan.planning.planner import PlannerConfig, PlanningState, plan_period, reconcile
from periplan.planning.traffic import expected_profile, initial_traffic, offered_traffic, unexpected_profile


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-horizon planning studies")


TRIANGLE = {
    "name": "triangle",
    "nodes": [
        {"id": 1, "name": "A", "dc_count": 3, "ixp_count": 1},
        {"id": 2, "name": "B", "dc_count": 2, "ixp_count": 1},
        {"id": 3, "name": "C", "dc_count": 4, "ixp_count": 1},
    ],
    "links": [
        {"id": 1, "from": 1, "to": 2, "spans": [{"length_km": 80}]},
        {"id": 2, "from": 2, "to": 3, "spans": [{"length_km": 80}]},
        {"id": 3, "from": 1, "to": 3, "spans": [{"length_km": 100}, {"length_km": 100}]},
    ]
}


@pytest.fixture(scope="session")
def germany17():
    return load_bundled("germany17")


@pytest.fixture(scope="session")
def abilene12():
    return load_bundled("abilene12")


@pytest.fixture
def triangle_data():
    return {"name": TRIANGLE["name"], "nodes": [dict(n) for n in TRIANGLE["nodes"]],
            "links": [dict(link) for link in TRIANGLE["links"]]}


@pytest.fixture
def triangle(triangle_data):
    return load_topology(triangle_data)


@pytest.fixture(scope="session")
def phy():
    return PhyConfig()


@pytest.fixture(scope="session")
def catalog(phy):
    return generate_configs(phy)


def run_checked_study(topology, config, profile):
    """ Plans year by year and reconciles the grids with the ledger after every period. """

    state = PlanningState(topology, config)
    tm0 = initial_traffic(topology, profile.base_year)
    reports, violations = [], []
    for year in profile.years:
        reports.append(plan_period(state, offered_traffic(tm0, profile, year)))
        violations.extend(f"{year}: {v}" for v in reconcile(state))
    return state, reports, violations


@pytest.fixture(scope="session")
def germany_short_studies(germany17):
    """ 2020-2023 expected-growth studies of both schemes on Germany17, seed 7. """

    profile = expected_profile(2020, 2023)
    return {scheme: run_checked_study(germany17, PlannerConfig(scheme=scheme, seed=7, horizon=2023), profile)
            for scheme in (1, 2)}


@pytest.fixture(scope="session")
def full_study(germany17):
    """ Full-horizon Germany17 studies, each run once per session. """

    cache = {}

    def run(scenario, scheme, seed, auto_physical_upgrade=False):
        key = (scenario, scheme, seed, auto_physical_upgrade)
        if key not in cache:
            profile = expected_profile() if scenario == "expected" else unexpected_profile()
            config = PlannerConfig(scheme=scheme, seed=seed, auto_physical_upgrade=auto_physical_upgrade)
            cache[key] = run_checked_study(germany17, config, profile)
        return cache[key]

    return run
