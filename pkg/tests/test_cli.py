import filecmp
import json
import os

import pandas as pd

from periplan.core import EXIT_BAD_FLAGS, EXIT_IO, EXIT_OK, EXIT_TOPOLOGY, StudySpec, build_parser, run_cli
from periplan.data.filenames import OUTPUT_DIR_ENV
from periplan.version_reader import read_version

RUN_FILES = ["bvts.csv", "lightpaths.csv", "occupancy.csv", "throughput.csv"]


def write_triangle(tmp_path, triangle_data):
    path = tmp_path / "triangle.json"
    path.write_text(json.dumps(triangle_data))
    return str(path)


def test_version(capsys):
    assert run_cli(["--version"]) == EXIT_OK
    assert capsys.readouterr().out == f"periplan {read_version()}\n"
    assert read_version() == "1.0.0"


def test_missing_topology_prints_usage(capsys):
    assert run_cli(["plan", "--scenario", "expected"]) == EXIT_BAD_FLAGS
    assert "usage" in capsys.readouterr().err


def test_missing_command():
    assert run_cli([]) == EXIT_BAD_FLAGS


def test_bad_flag_values(tmp_path, triangle_data):
    topology = write_triangle(tmp_path, triangle_data)
    assert run_cli(["plan", "--topology", topology, "--scheme", "3"]) == EXIT_BAD_FLAGS
    assert run_cli(["plan", "--topology", topology, "--seeds", "1,x"]) == EXIT_BAD_FLAGS
    assert run_cli(["plan", "--topology", topology, "--base-year", "2025", "--horizon", "2021",
                    "--out", str(tmp_path / "out")]) == EXIT_BAD_FLAGS
    assert run_cli(["plan", "--topology", topology, "--delta", "0", "--out", str(tmp_path / "out")]) == EXIT_BAD_FLAGS


def test_unknown_topology(tmp_path):
    assert run_cli(["plan", "--topology", "atlantis", "--out", str(tmp_path)]) == EXIT_TOPOLOGY


def test_disconnected_topology(tmp_path, triangle_data):
    triangle_data["nodes"].append({"id": 4, "name": "D"})
    assert run_cli(["plan", "--topology", write_triangle(tmp_path, triangle_data),
                    "--out", str(tmp_path / "out")]) == EXIT_TOPOLOGY


def test_missing_phy_config(tmp_path, triangle_data):
    assert run_cli(["plan", "--topology", write_triangle(tmp_path, triangle_data),
                    "--phy-config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "out")]) == EXIT_IO


def test_both_schemes_and_three_seeds(tmp_path, triangle_data):
    out = tmp_path / "out"
    code = run_cli(["plan", "--topology", write_triangle(tmp_path, triangle_data), "--scenario", "unexpected",
                    "--scheme", "both", "--seeds", "1,2,3", "--horizon", "2021", "--out", str(out)])
    assert code == EXIT_OK
    runs = sorted(os.listdir(out / "triangle"))
    assert runs == [f"scheme{s}_seed{n}" for s in (1, 2) for n in (1, 2, 3)]
    for run in runs:
        assert sorted(os.listdir(out / "triangle" / run)) == RUN_FILES
    assert len(pd.read_csv(out / "fig_throughput.csv")) == 2
    assert len(pd.read_csv(out / "fig_bvt_vs_throughput.csv")) == 12
    assert (out / "summary.txt").read_text().startswith("periplan 1.0.0")


def test_identical_invocations_give_identical_files(tmp_path, triangle_data):
    topology = write_triangle(tmp_path, triangle_data)
    for name in ("a", "b"):
        assert run_cli(["plan", "--topology", topology, "--seed", "9", "--horizon", "2022",
                        "--out", str(tmp_path / name)]) == EXIT_OK
    for scheme in (1, 2):
        run = os.path.join("triangle", f"scheme{scheme}_seed9")
        match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a" / run, tmp_path / "b" / run, RUN_FILES,
                                                   shallow=False)
        assert (mismatch, errors) == ([], [])
    assert filecmp.cmp(tmp_path / "a" / "fig_throughput.csv", tmp_path / "b" / "fig_throughput.csv", shallow=False)


def test_several_topologies_in_one_run(tmp_path, triangle_data):
    out = tmp_path / "out"
    assert run_cli(["plan", "--topology", write_triangle(tmp_path, triangle_data), "abilene12", "--scheme", "2",
                    "--horizon", "2020", "--out", str(out)]) == EXIT_OK
    frame = pd.read_csv(out / "fig_bvt_vs_throughput.csv")
    assert set(frame["topology"]) == {"triangle", "Abilene12"}


def test_output_directory_from_environment(tmp_path, triangle_data, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "env"))
    assert run_cli(["plan", "--topology", write_triangle(tmp_path, triangle_data), "--scheme", "1",
                    "--horizon", "2020"]) == EXIT_OK
    assert (tmp_path / "env" / "summary.txt").exists()


def test_study_settings_from_flags():
    args = build_parser().parse_args(["plan", "--topology", "germany17", "--seeds", "4,5", "--scheme", "1",
                                      "--margin-db", "1.5", "--auto-physical-upgrade"])
    spec = StudySpec.from_args(args)
    assert spec.seeds == [4, 5]
    assert spec.schemes == [1]
    assert spec.phy().margin_db == 1.5
    config = spec.planner_config(1, 4)
    assert config.auto_physical_upgrade and config.k == 3 and config.seed == 4
