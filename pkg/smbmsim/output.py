"""
output.py — Result files for SmbmSim runs.

Every run produces:
  <out>.csv               — one row per SNR point, fixed header (below)
  <out>.csv.manifest.json — config snapshot, version, seed, timestamps, warnings
  <out>.gp (optional)     — gnuplot script drawing the CSV on a log-y axis

CSV contract: header exactly CSV_COLUMNS, "." decimal point, LF line ends,
floats printed with 17 significant digits so they read back bit-exact,
empty fields where a column does not apply to the run's mode. For a fixed
config and seed the file is byte-identical across runs.
"""

import json
import logging
import os
from typing import Iterable, List, Optional, Sequence

import pandas as pd

from smbmsim.engine import SweepRecord

logger = logging.getLogger("smbmsim.output")

CSV_COLUMNS = (
    "snr_db",
    "mse_empirical",
    "mse_analytic",
    "ber",
    "bit_errors",
    "bits_simulated",
    "abep_bound",
    "warning",
)
_INT_COLUMNS = ("bit_errors", "bits_simulated")
_FLOAT_COLUMNS = ("snr_db", "mse_empirical", "mse_analytic", "ber", "abep_bound")


def records_frame(records: Sequence[SweepRecord]) -> pd.DataFrame:
    df = pd.DataFrame([{col: getattr(r, col) for col in CSV_COLUMNS} for r in records], columns=list(CSV_COLUMNS))
    for col in _FLOAT_COLUMNS:
        df[col] = df[col].astype("float64")
    for col in _INT_COLUMNS:
        df[col] = df[col].astype("Int64")
    df["warning"] = df["warning"].fillna("").astype(str)
    return df


def write_csv(records: Sequence[SweepRecord], path: str) -> None:
    if not records:
        raise ValueError("No records to write")
    records_frame(records).to_csv(
        path,
        index=False,
        float_format="%.17g",
        na_rep="",
        lineterminator="\n",
        encoding="utf-8",
    )
    logger.info("Wrote %d rows to %s", len(records), path)


def read_csv(path: str) -> pd.DataFrame:
    """Load a results CSV back; empty fields become NaN / <NA>."""
    df = pd.read_csv(path, dtype={"warning": str}, keep_default_na=False, na_values=[""],
                     float_precision="round_trip")
    df["warning"] = df["warning"].fillna("")
    return df


# ─── Plot Script ───

def _plot_mode(records: Iterable[SweepRecord]) -> str:
    records = list(records)
    if any(r.ber is not None for r in records):
        return "ber"
    if any(r.mse_empirical is not None for r in records):
        return "mse"
    return "abep"


def _column(name: str) -> int:
    return CSV_COLUMNS.index(name) + 1


def emit_plot_script(records: Sequence[SweepRecord], path: str, csv_path: str,
                     mode: Optional[str] = None) -> None:
    """Write a gnuplot script that draws the CSV with a logarithmic y axis."""
    if not records:
        raise ValueError("No records to plot")
    mode = mode or _plot_mode(records)
    script_dir = os.path.dirname(os.path.abspath(path))
    data = os.path.relpath(os.path.abspath(csv_path), script_dir).replace(os.sep, "/")
    snrs = [r.snr_db for r in records]

    if mode == "mse":
        ylabel = "MSE"
        series = [("mse_empirical", "MSE (simulated)", "linespoints pt 7"),
                  ("mse_analytic", "MSE (analytic)", "lines dt 2")]
    elif mode == "ber":
        ylabel = "BER"
        series = [("ber", "BER (simulated)", "linespoints pt 7"),
                  ("abep_bound", "ABEP (union bound)", "lines dt 2")]
    else:
        ylabel = "ABEP"
        series = [("abep_bound", "ABEP (union bound)", "linespoints pt 6")]

    lines: List[str] = [
        "# gnuplot script generated by smbmsim",
        f"# data: {data}",
        'set datafile separator ","',
        "set logscale y",
        "set format y \"10^{%L}\"",
        "set grid",
        'set xlabel "SNR (dB)"',
        f'set ylabel "{ylabel}"',
        f"set xrange [{min(snrs):g}:{max(snrs):g}]",
        "set key top right",
    ]
    plots = [
        f'"{data}" skip 1 using {_column("snr_db")}:{_column(col)} with {style} title "{title}"'
        for col, title, style in series
    ]
    lines.append("plot " + ", \\\n     ".join(plots))
    lines.append("pause mouse close")

    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    logger.info("Wrote %s plot script to %s", mode, path)


# ─── Manifest ───

def build_manifest(version: str, mode: str, config: dict, records: Sequence[SweepRecord],
                   started_at: str, finished_at: str, warnings: Sequence[dict],
                   csv_path: str) -> dict:
    return {
        "tool": "smbmsim",
        "version": version,
        "mode": mode,
        "csv": os.path.basename(csv_path),
        "master_seed": config.get("master_seed"),
        "config": config,
        "started_at": started_at,
        "finished_at": finished_at,
        "records": [r.to_dict() for r in records],
        "warnings": list(warnings),
    }


def write_manifest(manifest: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.info("Wrote run manifest to %s", path)
