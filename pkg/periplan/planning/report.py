import os
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from periplan.common import EPSILON, log
from periplan.planning.physics import path_metrics

FLOAT_FORMAT = "%.3f"

THROUGHPUT_CSV = "throughput.csv"
BVTS_CSV = "bvts.csv"
OCCUPANCY_CSV = "occupancy.csv"
LIGHTPATHS_CSV = "lightpaths.csv"
FIG_THROUGHPUT_CSV = "fig_throughput.csv"
FIG_BVT_CSV = "fig_bvt_vs_throughput.csv"
SUMMARY_FILE = "summary.txt"


class RunResult:
    """ The reports of one (topology, scheme, seed) study.

    :type reports: list[periplan.planning.planner.PeriodReport]
    """

    def __init__(self, topology: str, scheme: int, seed: int, reports: list, output_dir: str = None):
        self.topology = topology
        self.scheme = scheme
        self.seed = seed
        self.reports = reports
        self.output_dir = output_dir

    def first_unmet_year(self) -> Optional[int]:
        return next((r.year for r in self.reports if r.unmet_tbps > EPSILON), None)

    def first_saturation_year(self) -> Optional[int]:
        return next((r.year for r in self.reports if r.flagged_links), None)


def run_directory(output_dir: str, topology: str, scheme: int, seed: int) -> str:
    return os.path.join(output_dir, topology, f"scheme{scheme}_seed{seed}")


def _write(frame: pd.DataFrame, path: str):
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def throughput_frame(reports, scheme: int) -> pd.DataFrame:
    return pd.DataFrame([{"year": r.year, "scheme": scheme, "offered_tbps": r.offered_tbps,
                          "carried_tbps": r.carried_tbps, "unmet_tbps": r.unmet_tbps} for r in reports],
                        columns=["year", "scheme", "offered_tbps", "carried_tbps", "unmet_tbps"])


def bvts_frame(reports) -> pd.DataFrame:
    return pd.DataFrame([{"year": r.year, "bvt_count": r.bvt_count, "upgrades": r.upgrades_performed,
                          "additions": r.lps_added, "blocked": r.blocked_additions,
                          "infeasible_pairs": r.infeasible_pairs} for r in reports],
                        columns=["year", "bvt_count", "upgrades", "additions", "blocked", "infeasible_pairs"])


def occupancy_frame(reports) -> pd.DataFrame:
    rows = []
    for r in reports:
        flagged = set(r.flagged_links)
        for link_id, ratio in sorted(r.occupancy.items()):
            rows.append({"year": r.year, "link_id": link_id, "ratio": ratio, "flagged": link_id in flagged})
    return pd.DataFrame(rows, columns=["year", "link_id", "ratio", "flagged"])


def lightpaths_frame(state) -> pd.DataFrame:
    rows = []
    for lp in state.lightpaths:
        metrics = path_metrics(lp.path.spans(state.topology), lp.config, state.phy)
        rows.append({
            "lp_id": lp.id, "source": lp.pair[0], "target": lp.pair[1], "path": str(lp.path),
            "length_km": lp.path.total_length, "datarate_gbps": lp.config.datarate,
            "modulation": lp.config.modulation.label, "symbol_rate_gbd": lp.config.symbol_rate,
            "bandwidth_ghz": lp.config.bandwidth, "slot_count": lp.config.slot_count,
            "fiber_pair": lp.fiber_pair_index, "start_slot": lp.start, "central_slot": lp.central_slot,
            "eta_nli": lp.eta_nli, "gsnr_db": metrics.gsnr, "provisioned_year": lp.provisioned_year,
            "upgraded_years": " ".join(str(y) for y in lp.upgraded_years),
        })
    columns = ["lp_id", "source", "target", "path", "length_km", "datarate_gbps", "modulation", "symbol_rate_gbd",
               "bandwidth_ghz", "slot_count", "fiber_pair", "start_slot", "central_slot", "eta_nli", "gsnr_db",
               "provisioned_year", "upgraded_years"]
    frame = pd.DataFrame(rows, columns=columns)
    # eta_nli is in 1/W^2 and would round to nothing at 3 decimals
    frame["eta_nli"] = frame["eta_nli"].map(lambda v: f"{v:.6e}")
    return frame


def write_run_outputs(output_dir: str, state, reports) -> List[str]:
    os.makedirs(output_dir, exist_ok=True)
    files = {
        THROUGHPUT_CSV: throughput_frame(reports, state.config.scheme),
        BVTS_CSV: bvts_frame(reports),
        OCCUPANCY_CSV: occupancy_frame(reports),
        LIGHTPATHS_CSV: lightpaths_frame(state),
    }
    written = []
    for name, frame in files.items():
        path = os.path.join(output_dir, name)
        _write(frame, path)
        written.append(path)
    log(f"Wrote {len(written)} files to {output_dir}")
    return written


def results_frame(results: List[RunResult]) -> pd.DataFrame:
    rows = []
    for result in results:
        for r in result.reports:
            rows.append({"topology": result.topology, "scheme": result.scheme, "seed": result.seed, "year": r.year,
                         "offered_tbps": r.offered_tbps, "carried_tbps": r.carried_tbps, "unmet_tbps": r.unmet_tbps,
                         "bvt_count": r.bvt_count, "flagged_links": len(r.flagged_links)})
    return pd.DataFrame(rows, columns=["topology", "scheme", "seed", "year", "offered_tbps", "carried_tbps",
                                       "unmet_tbps", "bvt_count", "flagged_links"])


def emit_figure_data(results: List[RunResult], output_dir: str) -> List[str]:
    """ Writes the plot-ready files: yearly throughput per scheme (seed means) and BVT count against carried
      throughput for every run and year. """

    os.makedirs(output_dir, exist_ok=True)
    frame = results_frame(results)

    keys = ["topology", "year"]
    throughput = frame.groupby(keys)["offered_tbps"].mean().to_frame("offered")
    carried = frame.pivot_table(index=keys, columns="scheme", values="carried_tbps", aggfunc="mean")
    for scheme in (1, 2):
        throughput[f"scheme{scheme}_carried"] = carried[scheme] if scheme in carried.columns else np.nan
    throughput = throughput.reset_index()[["year", "offered", "scheme1_carried", "scheme2_carried", "topology"]]

    bvt = frame[["bvt_count", "carried_tbps", "scheme", "topology", "year", "seed"]]

    paths = [os.path.join(output_dir, FIG_THROUGHPUT_CSV), os.path.join(output_dir, FIG_BVT_CSV)]
    _write(throughput, paths[0])
    _write(bvt, paths[1])
    return paths


def _dominance(frame: pd.DataFrame) -> Dict[tuple, bool]:
    """ (topology, year) -> whether scheme 1 carried at least as much as scheme 2 for every shared seed. """

    result = {}
    one = frame[frame["scheme"] == 1].set_index(["topology", "year", "seed"])["carried_tbps"]
    two = frame[frame["scheme"] == 2].set_index(["topology", "year", "seed"])["carried_tbps"]
    joined = pd.concat([one.rename("s1"), two.rename("s2")], axis=1, join="inner")
    if joined.empty:
        return result
    for (topology, year), group in joined.groupby(level=["topology", "year"]):
        result[(topology, year)] = bool((group["s1"] >= group["s2"] - EPSILON).all())
    return result


def _year_text(year: Optional[int]) -> str:
    return "none" if year is None else str(year)


def build_summary(results: List[RunResult], version: str) -> str:
    frame = results_frame(results)
    lines = [f"periplan {version}", ""]
    if frame.empty:
        return "\n".join(lines + ["no completed studies"]) + "\n"

    stats = frame.groupby(["topology", "scheme", "year"])["carried_tbps"].agg(["mean", "min", "max"])
    offered = frame.groupby(["topology", "year"])["offered_tbps"].mean()
    bvts = frame.groupby(["topology", "scheme", "year"])["bvt_count"].mean()
    dominance = _dominance(frame)

    for topology in sorted(frame["topology"].unique()):
        lines.append(f"== {topology} ==")
        for scheme in sorted(frame[frame["topology"] == topology]["scheme"].unique()):
            runs = [r for r in results if r.topology == topology and r.scheme == scheme]
            seeds = ", ".join(str(r.seed) for r in runs)
            lines.append(f"Scheme {scheme} (seeds {seeds})")
            lines.append("  year  offered  carried_mean  carried_min  carried_max  bvts_mean")
            for year in sorted(frame[(frame["topology"] == topology) & (frame["scheme"] == scheme)]["year"].unique()):
                row = stats.loc[(topology, scheme, year)]
                lines.append(f"  {year}  {offered.loc[(topology, year)]:7.3f}  {row['mean']:12.3f}  "
                             f"{row['min']:11.3f}  {row['max']:11.3f}  {bvts.loc[(topology, scheme, year)]:9.1f}")
            unmet = ", ".join(f"seed {r.seed}: {_year_text(r.first_unmet_year())}" for r in runs)
            saturated = ", ".join(f"seed {r.seed}: {_year_text(r.first_saturation_year())}" for r in runs)
            lines.append(f"  first unmet year: {unmet}")
            lines.append(f"  first saturation year: {saturated}")

        years = sorted(y for t, y in dominance if t == topology)
        if years:
            held = [y for y in years if dominance[(topology, y)]]
            verdict = "every year" if len(held) == len(years) else \
                "not in " + ", ".join(str(y) for y in years if y not in held)
            lines.append(f"Scheme 1 carried >= Scheme 2 for every seed: {verdict}")
        lines.append("")
    return "\n".join(lines)


def write_summary(results: List[RunResult], output_dir: str, version: str) -> str:
    os.makedirs(output_dir, exist_ok=True)
    path = os.path.join(output_dir, SUMMARY_FILE)
    with open(path, "w") as f:
        f.write(build_summary(results, version))
    return path
