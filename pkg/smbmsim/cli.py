"""
cli.py — Command-line entry point for SmbmSim.

    python -m smbmsim --mode ber --csi lmmse --mod qpsk --nt 4 --nr 4 --nrf 2 \\
        --snr -4:2:16 --seed 7 --out run.csv --plot

Modes:
  mse   — estimator MSE vs SNR (LS or LMMSE), no data phase
  ber   — Monte Carlo BER with the ABEP union bound alongside
  abep  — union bound only, no simulation

Exit codes: 0 success, 1 results could not be written, 2 bad arguments or
config, 3 a record carries a warning and --strict was given.
"""

import argparse
import logging
import os
import sys
import time
from datetime import datetime, timezone
from typing import List, Optional, Sequence, Tuple

from smbmsim.config import (
    OutputSettings,
    build_output_settings,
    build_sweep_config,
    load_config_file,
    merge_layers,
)
from smbmsim.engine import SweepConfig, SweepRecord, run_abep_curve, run_mse_sweep, run_sweep
from smbmsim.errors import ConfigError
from smbmsim.log_handler import install_log_handler
from smbmsim.output import build_manifest, emit_plot_script, write_csv, write_manifest

logger = logging.getLogger("smbmsim")

VERSION = "0.1.0"

EXIT_OK = 0
EXIT_WRITE_FAILED = 1
EXIT_WARNINGS = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smbmsim",
        description="Spatial media-based modulation link simulator: channel estimation MSE, "
                    "ML detection BER and union-bound ABEP over an SNR grid.",
    )
    # Every flag defaults to None so unset flags never mask config-file values.
    parser.add_argument("--config", help="flat YAML file of key: value settings")
    parser.add_argument("--mode", choices=("mse", "ber", "abep"), help="what to compute (default ber)")
    parser.add_argument("--csi", help="perfect, ls or lmmse (default lmmse)")
    parser.add_argument("--mod", help="modulation: bpsk, qpsk, 8psk, 16psk, 16qam, ... (default qpsk)")
    parser.add_argument("--es", help="symbol energy E_s (default 1)")
    parser.add_argument("--nt", help="transmit antennas, power of two (default 4)")
    parser.add_argument("--nr", help="receive antennas (default 4)")
    parser.add_argument("--nrf", help="RF mirrors per transmit antenna (default 2)")
    parser.add_argument("--snr", help="SNR grid in dB: start:step:stop, a,b,c or one value (default -4:2:16)")
    parser.add_argument("--seed", help="master seed, 64-bit unsigned (default 0)")
    parser.add_argument("--block-length", dest="block_length", help="data symbols per channel block (default 100)")
    parser.add_argument("--min-errors", dest="min_errors", help="bit errors to collect per SNR point (default 200)")
    parser.add_argument("--max-blocks", dest="max_blocks", help="block cap per SNR point (default 1000000)")
    parser.add_argument("--min-blocks", dest="min_blocks", help="blocks to run at least per SNR point (default 1)")
    parser.add_argument("--mse-blocks", dest="mse_blocks", help="channel draws per point in mse mode (default 10000)")
    parser.add_argument("--workers", help="worker processes (default 1, or SMBMSIM_WORKERS)")
    parser.add_argument("--out", help="CSV output path (default $SMBMSIM_OUTPUT_DIR/smbm_<mode>.csv)")
    parser.add_argument("--plot", action="store_const", const=True, default=None,
                        help="also write a gnuplot script next to the CSV")
    parser.add_argument("--strict", action="store_const", const=True, default=None,
                        help="exit non-zero if any SNR point ends with a warning")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING, ... (default INFO)")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    return parser


def _attach_snr_value(argv: Sequence[str]) -> List[str]:
    """`--snr -4:2:16` → `--snr=-4:2:16`; argparse reads a leading dash as a flag."""
    out: List[str] = []
    args = iter(argv)
    for token in args:
        if token == "--snr":
            value = next(args, None)
            out.append(token if value is None else f"--snr={value}")
        else:
            out.append(token)
    return out


def parse_args(argv: Optional[Sequence[str]] = None) -> Tuple[SweepConfig, OutputSettings]:
    """Flags over config file over environment over defaults. Bad input exits 2."""
    parser = build_parser()
    args = parser.parse_args(_attach_snr_value(sys.argv[1:] if argv is None else argv))
    flag_values = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        values = merge_layers(file_values, flag_values)
        return build_sweep_config(values), build_output_settings(values)
    except ConfigError as e:
        parser.error(str(e))


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def run(sweep: SweepConfig, settings: OutputSettings) -> List[SweepRecord]:
    if settings.mode == "ber":
        return run_sweep(sweep)
    if settings.mode == "mse":
        return run_mse_sweep(sweep, settings.mse_blocks)
    return [SweepRecord(snr_db=snr_db, abep_bound=abep) for snr_db, abep in run_abep_curve(sweep)]


def main(argv: Optional[Sequence[str]] = None) -> int:
    sweep, settings = parse_args(argv)
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    handler = install_log_handler()
    since = time.time()
    started_at = _utc_now()
    logger.info("smbmsim %s: mode=%s out=%s", VERSION, settings.mode, settings.out_path)

    records = run(sweep, settings)
    finished_at = _utc_now()

    try:
        out_dir = os.path.dirname(settings.out_path)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        write_csv(records, settings.out_path)
        if settings.plot_path:
            emit_plot_script(records, settings.plot_path, settings.out_path, settings.mode)
        manifest = build_manifest(
            version=VERSION,
            mode=settings.mode,
            config=sweep.to_dict(),
            records=records,
            started_at=started_at,
            finished_at=finished_at,
            warnings=handler.warnings(since=since),
            csv_path=settings.out_path,
        )
        write_manifest(manifest, settings.manifest_path)
    except OSError as e:
        logger.error("Cannot write results to %s: %s", settings.out_path, e)
        return EXIT_WRITE_FAILED

    flagged = [r for r in records if r.warning]
    if flagged and settings.strict:
        logger.error("%d SNR point(s) ended with warnings (--strict)", len(flagged))
        return EXIT_WARNINGS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
