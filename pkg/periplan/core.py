import os
import sys
from argparse import ArgumentParser
from typing import List

from periplan.common import ConfigurationError, PlanningException, RoutingError, TopologyError, UnknownCommand, \
    configure_logging, error_log, extract_err_msg, log, parse_int_list
from periplan.data.filenames import *
from periplan.network.topology import Topology, resolve_topology
from periplan.planning.physics import PhyConfig
from periplan.planning.planner import PlannerConfig, run_study
from periplan.planning.report import RunResult, emit_figure_data, run_directory, write_summary
from periplan.planning.traffic import BASE_YEAR, HORIZON_YEAR, growth_profile_from_name
from periplan.version_reader import read_version

EXIT_OK = 0
EXIT_BAD_FLAGS = 1
EXIT_IO = 2
EXIT_TOPOLOGY = 3


class CommandParser(ArgumentParser):
    """ Raises UnknownCommand instead of exiting, so run_cli owns every exit code. """

    def error(self, message):
        raise UnknownCommand(message)


def build_parser() -> CommandParser:
    parser = CommandParser(prog="periplan", description="Multi-period planning of elastic optical networks.")
    parser.add_argument("--version", action="store_true", help="print the version and exit")
    commands = parser.add_subparsers(dest="command", parser_class=CommandParser)

    plan = commands.add_parser("plan", help="run a multi-period planning study")
    plan.add_argument("--topology", nargs="+", required=True,
                      help="bundled topology names (germany17, abilene12) or topology file paths")
    plan.add_argument("--scenario", default="expected", help="expected, unexpected or custom:<path>")
    plan.add_argument("--scheme", choices=["1", "2", "both"], default="both")
    plan.add_argument("--k", type=int, default=3, help="candidate paths per node pair")
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--seeds", help="comma-separated seeds; overrides --seed")
    plan.add_argument("--base-year", type=int,
                      help=f"first planning year (default {BASE_YEAR}, or the first year of a custom profile)")
    plan.add_argument("--horizon", type=int, default=HORIZON_YEAR)
    plan.add_argument("--delta", type=float, default=100, help="over-provisioning allowance in Gbps")
    plan.add_argument("--saturation-threshold", type=float, default=0.75)
    plan.add_argument("--margin-db", type=float, help="system margin added to every required SNR")
    plan.add_argument("--auto-physical-upgrade", action="store_true",
                      help="add a fiber pair to links flagged by the saturation check")
    plan.add_argument("--phy-config", help="physical-layer JSON file replacing the bundled one")
    plan.add_argument("--out", default=os.environ.get(OUTPUT_DIR_ENV, "results"), help="output directory")
    plan.add_argument("-v", "--verbose", action="count", default=0)
    return parser


class StudySpec:
    """
    :type topologies: list[str]
    :type schemes: list[int]
    :type seeds: list[int]
    """

    def __init__(self, topologies: List[str], scenario: str, schemes: List[int], seeds: List[int], k: int = 3,
                 base_year: int = None, horizon: int = HORIZON_YEAR, output_dir: str = "results",
                 phy_config_path: str = None, delta: float = 100, saturation_threshold: float = 0.75,
                 margin_db: float = None, auto_physical_upgrade: bool = False):
        if not topologies:
            raise UnknownCommand("at least one topology is required")
        if not seeds:
            raise UnknownCommand("at least one seed is required")
        if not schemes or any(s not in (1, 2) for s in schemes):
            raise UnknownCommand(f"schemes must be 1, 2 or both, got {schemes}")
        self.topologies = topologies
        self.scenario = scenario
        self.schemes = schemes
        self.seeds = seeds
        self.k = k
        self.base_year = base_year
        self.horizon = horizon
        self.output_dir = output_dir
        self.phy_config_path = phy_config_path
        self.delta = delta
        self.saturation_threshold = saturation_threshold
        self.margin_db = margin_db
        self.auto_physical_upgrade = auto_physical_upgrade

    @staticmethod
    def from_args(args) -> "StudySpec":
        schemes = [1, 2] if args.scheme == "both" else [int(args.scheme)]
        seeds = parse_int_list(args.seeds) if args.seeds else [args.seed]
        return StudySpec(args.topology, args.scenario, schemes, seeds, args.k, args.base_year, args.horizon,
                         args.out, args.phy_config, args.delta, args.saturation_threshold, args.margin_db,
                         args.auto_physical_upgrade)

    def planner_config(self, scheme: int, seed: int) -> PlannerConfig:
        return PlannerConfig(scheme=scheme, delta=self.delta, saturation_threshold=self.saturation_threshold,
                             auto_physical_upgrade=self.auto_physical_upgrade, k=self.k, seed=seed,
                             horizon=self.horizon)

    def phy(self) -> PhyConfig:
        phy = PhyConfig.load(self.phy_config_path) if self.phy_config_path else PhyConfig()
        if self.margin_db is not None:
            phy.margin_db = self.margin_db
        return phy


def load_topologies(spec: StudySpec, phy: PhyConfig) -> List[Topology]:
    topologies = []
    for name in spec.topologies:
        topology = resolve_topology(name, slot_count=phy.slot_count, slot_width=phy.slot_width)
        if any(t.name == topology.name for t in topologies):
            raise UnknownCommand(f"topology {topology.name} given twice")
        low, average, high = topology.degree_stats()
        log(f"Loaded {topology.name}: {len(topology.nodes)} nodes, {len(topology.links) // 2} adjacencies, "
            f"degree {low}/{average:.2f}/{high}")
        topologies.append(topology)
    return topologies


def execute(spec: StudySpec) -> List[RunResult]:
    """ Runs every (topology, scheme, seed) study and writes the per-run, figure and summary files. """

    phy = spec.phy()
    profile = growth_profile_from_name(spec.scenario, spec.base_year, spec.horizon)
    results = []
    for topology in load_topologies(spec, phy):
        for scheme in spec.schemes:
            for seed in spec.seeds:
                directory = run_directory(spec.output_dir, topology.name, scheme, seed)
                reports = run_study(topology, profile, spec.planner_config(scheme, seed), directory, phy)
                results.append(RunResult(topology.name, scheme, seed, reports, directory))

    emit_figure_data(results, spec.output_dir)
    write_summary(results, spec.output_dir, read_version())
    log(f"Finished {len(results)} studies; results in {spec.output_dir}")
    return results


def run_cli(argv: List[str] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parser.parse_args(argv)
        if args.version:
            print(f"periplan {read_version()}")
            return EXIT_OK
        if args.command != "plan":
            raise UnknownCommand("missing command; the only command is 'plan'")
        configure_logging(args.verbose)
        spec = StudySpec.from_args(args)
        execute(spec)
        return EXIT_OK
    except (UnknownCommand, ConfigurationError) as e:
        print(parser.format_usage(), file=sys.stderr, end="")
        print(f"periplan: error: {e.message}", file=sys.stderr)
        return EXIT_BAD_FLAGS
    except (TopologyError, RoutingError) as e:
        print(f"periplan: error: {e.message}", file=sys.stderr)
        return EXIT_TOPOLOGY
    except OSError as e:
        print(f"periplan: error: {e}", file=sys.stderr)
        return EXIT_IO
    except PlanningException as e:
        error_log(extract_err_msg(e))
        return EXIT_BAD_FLAGS
