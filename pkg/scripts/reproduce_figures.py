#!/usr/bin/env python3
"""
Reproduce the three published SMBM result sets.

  mse_<csi>_nrf<N>.csv            — LS and LMMSE estimation MSE, Nt = Nr = 4, Nrf in {1, 2, 4}
  ber_qpsk_8psk_<mod>_<csi>.csv   — BER + ABEP bound, P-CSI and LMMSE I-CSI, Nt = Nr = 4, Nrf = 2
  ber_16psk_16qam_<mod>_<csi>.csv — same for the 16-level constellations

Run: python scripts/reproduce_figures.py [--out-dir results] [--workers 4]
Output: one CSV per curve, each with a gnuplot script next to it.

Full-accuracy runs (200 bit errors per point down to 1e-6) take hours on one
core; --quick trades accuracy for a run of a few minutes.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

SCRIPT_DIR = Path(__file__).parent
PROJECT_ROOT = SCRIPT_DIR.parent
sys.path.insert(0, str(PROJECT_ROOT))

from smbmsim.config import parse_modulation, parse_snr_grid  # noqa: E402
from smbmsim.engine import SweepConfig, run_mirror_sweep, run_sweep, snr_gap_db  # noqa: E402
from smbmsim.estimation import Estimator  # noqa: E402
from smbmsim.mapping import SystemConfig  # noqa: E402
from smbmsim.output import emit_plot_script, write_csv  # noqa: E402

MSE_GRID = "-4:2:16"
BER_GRID = "-4:2:16"
MIRROR_COUNTS = (1, 2, 4)
BER_PAIRS = {
    "ber_qpsk_8psk": ("qpsk", "8psk"),
    "ber_16psk_16qam": ("16psk", "16qam"),
}


def _system(mod: str, n_rf: int = 2) -> SystemConfig:
    return SystemConfig(n_tx=4, n_rx=4, n_rf=n_rf, modulation=parse_modulation(mod))


def mse_vs_mirrors(out_dir: Path, seed: int, workers: int, draws: int) -> None:
    print(f"MSE vs Nrf ({draws} channel draws per point)...")
    for csi in (Estimator.LS, Estimator.LMMSE):
        sweep = SweepConfig(
            system=_system("qpsk"),
            snr_grid_db=parse_snr_grid(MSE_GRID),
            csi_mode=csi,
            master_seed=seed,
            workers=workers,
        )
        for n_rf, records in run_mirror_sweep(sweep, MIRROR_COUNTS, draws).items():
            path = out_dir / f"mse_{csi.value}_nrf{n_rf}.csv"
            write_csv(records, str(path))
            emit_plot_script(records, str(path.with_suffix(".gp")), str(path), mode="mse")
            print(f"  {csi.value:5s} Nrf={n_rf}: {path.name}")


def ber_pair(name: str, mods, out_dir: Path, seed: int, workers: int, min_errors: int, max_blocks: int) -> None:
    print(f"{name}...")
    for mod in mods:
        base = SweepConfig(
            system=_system(mod),
            snr_grid_db=parse_snr_grid(BER_GRID),
            min_bit_errors=min_errors,
            max_blocks=max_blocks,
            master_seed=seed,
            workers=workers,
        )
        curves = {}
        for csi in (Estimator.PERFECT, Estimator.LMMSE):
            records = run_sweep(replace(base, csi_mode=csi))
            path = out_dir / f"{name}_{mod}_{csi.value}.csv"
            write_csv(records, str(path))
            emit_plot_script(records, str(path.with_suffix(".gp")), str(path), mode="ber")
            curves[csi] = records
            flagged = sum(1 for r in records if r.warning)
            print(f"  {mod:6s} {csi.value:7s}: {path.name}" + (f" ({flagged} under-sampled points)" if flagged else ""))

        gap = snr_gap_db(curves[Estimator.PERFECT], curves[Estimator.LMMSE], 1e-3)
        if gap is None:
            print(f"  {mod}: curves do not both reach BER 1e-3 on this grid")
        else:
            print(f"  {mod}: I-CSI needs {gap:.2f} dB more than P-CSI at BER 1e-3")


def main() -> int:
    parser = argparse.ArgumentParser(description="Reproduce the published SMBM MSE and BER results.")
    parser.add_argument("--out-dir", default=str(PROJECT_ROOT / "results"), help="where to write CSVs")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--quick", action="store_true", help="fewer draws and a lower block cap")
    parser.add_argument("--only", choices=("mse", "ber"), help="run one kind of result set")
    args = parser.parse_args()

    logging.basicConfig(level=logging.WARNING, format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    draws = 500 if args.quick else 10_000
    min_errors = 50 if args.quick else 200
    max_blocks = 2_000 if args.quick else 1_000_000

    if args.only in (None, "mse"):
        mse_vs_mirrors(out_dir, args.seed, args.workers, draws)
    if args.only in (None, "ber"):
        for name, mods in BER_PAIRS.items():
            ber_pair(name, mods, out_dir, args.seed, args.workers, min_errors, max_blocks)

    print(f"\nDone. Results in {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
