"""
engine.py — Monte Carlo sweep engine for SmbmSim.

Runs the block-fading protocol over an SNR grid:

  1. draw one channel realization per block
  2. sound + estimate it (skipped under PERFECT CSI)
  3. send B data symbols through the same realization, detect each one with
     the estimate, count bit errors

and pairs every simulated point with the analytic MSE and the ABEP union
bound computed for the same sigma_n^2 / sigma_e^2.

RANDOM STREAMS: every block draws from its own Philox generator keyed by
SeedSequence((master_seed, snr_index, block_id)). A block's result depends
on nothing else, so blocks can run on any number of worker processes.
Tallies are reduced in block-id order and the stopping rule is checked
after each block in that order, so records do not depend on the worker
count.

Stopping rule per SNR point: stop after the first block at which at least
min_bit_errors have been counted (and min_blocks have run), or at
max_blocks. A point that stops on max_blocks carries a warning.
"""

import functools
import logging
import math
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from smbmsim.bounds import abep_union_bound
from smbmsim.channel import draw_channel, noise_variance_for_snr, transmit_batch
from smbmsim.constellation import Constellation, ModulationSpec, build_constellation, popcount
from smbmsim.detection import detect_batch
from smbmsim.errors import ConfigError
from smbmsim.estimation import (
    Estimator,
    PilotSpec,
    analytic_mse,
    empirical_mse,
    estimate_channel,
)
from smbmsim.mapping import SystemConfig, map_words, words_for

logger = logging.getLogger("smbmsim.engine")

# Blocks handed to one worker task at a time.
_BLOCKS_PER_TASK = 16

MAX_BLOCKS_WARNING = "max_blocks reached before min_bit_errors"


@functools.lru_cache(maxsize=None)
def _constellation(spec: ModulationSpec) -> Constellation:
    return build_constellation(spec)


# ─── Data Structures ───

@dataclass(frozen=True)
class SweepConfig:
    """Everything one SNR sweep needs. Immutable and picklable."""
    system: SystemConfig
    snr_grid_db: Tuple[float, ...]
    csi_mode: Estimator = Estimator.LMMSE
    block_length: int = 100             # B data symbols per channel realization
    min_bit_errors: int = 200
    max_blocks: int = 1_000_000
    master_seed: int = 0
    min_blocks: int = 1
    workers: int = 1
    channel_power: float = 1.0          # sigma_h^2
    pilot: PilotSpec = field(default_factory=PilotSpec)

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "csi_mode", Estimator(self.csi_mode))
        grid = self.snr_grid_db
        if not grid:
            raise ConfigError("snr", "SNR grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("snr", "SNR grid must be strictly increasing")
        if self.block_length < 1:
            raise ConfigError("block_length", f"must be >= 1, got {self.block_length}")
        if self.min_bit_errors < 1:
            raise ConfigError("min_errors", f"must be >= 1, got {self.min_bit_errors}")
        if self.max_blocks < 1:
            raise ConfigError("max_blocks", f"must be >= 1, got {self.max_blocks}")
        if not 1 <= self.min_blocks <= self.max_blocks:
            raise ConfigError("min_blocks", f"must be in [1, max_blocks], got {self.min_blocks}")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {self.master_seed}")
        if not self.channel_power > 0:
            raise ConfigError("channel_power", f"must be > 0, got {self.channel_power}")

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "snr_grid_db": list(self.snr_grid_db),
            "csi_mode": self.csi_mode.value,
            "block_length": self.block_length,
            "min_bit_errors": self.min_bit_errors,
            "max_blocks": self.max_blocks,
            "master_seed": self.master_seed,
            "min_blocks": self.min_blocks,
            "workers": self.workers,
            "channel_power": self.channel_power,
            "pilot": [self.pilot.value.real, self.pilot.value.imag],
        }


@dataclass(frozen=True)
class BlockTally:
    bit_errors: int
    bits: int
    mse_sample: float


@dataclass
class SweepRecord:
    """One row of results. Fields that do not apply to a mode stay None."""
    snr_db: float
    mse_empirical: Optional[float] = None
    mse_analytic: Optional[float] = None
    ber: Optional[float] = None
    bit_errors: Optional[int] = None
    bits_simulated: Optional[int] = None
    abep_bound: Optional[float] = None
    blocks: int = 0
    warning: str = ""

    @property
    def ber_std_error(self) -> Optional[float]:
        if not self.bits_simulated:
            return None
        return math.sqrt(self.bit_errors) / self.bits_simulated

    def to_dict(self) -> dict:
        return {
            "snr_db": self.snr_db,
            "mse_empirical": self.mse_empirical,
            "mse_analytic": self.mse_analytic,
            "ber": self.ber,
            "bit_errors": self.bit_errors,
            "bits_simulated": self.bits_simulated,
            "abep_bound": self.abep_bound,
            "blocks": self.blocks,
            "ber_std_error": self.ber_std_error,
            "warning": self.warning,
        }


# ─── Per-Block Work ───

def block_stream(master_seed: int, snr_index: int, block_id: int) -> np.random.Generator:
    """Counter-based stream owned by exactly one (seed, SNR point, block)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, snr_index, block_id])))


def _snr_index(sweep: SweepConfig, snr_db: float) -> int:
    try:
        return sweep.snr_grid_db.index(float(snr_db))
    except ValueError:
        raise ValueError(f"SNR {snr_db} dB is not on the sweep grid") from None


def run_block(block_id: int, snr_db: float, sweep: SweepConfig, snr_index: Optional[int] = None,
              data: bool = True) -> BlockTally:
    """Simulate one fading block. Deterministic in (master_seed, snr_index, block_id).

    With data=False only the estimation phase runs (bit counts are zero).
    """
    if snr_index is None:
        snr_index = _snr_index(sweep, snr_db)
    cfg = sweep.system
    c = _constellation(cfg.modulation)
    rng = block_stream(sweep.master_seed, snr_index, block_id)
    noise_variance = noise_variance_for_snr(snr_db, cfg)

    h = draw_channel(cfg, sweep.channel_power, rng)
    est = estimate_channel(h, sweep.csi_mode, sweep.pilot, noise_variance, rng)
    mse = 0.0 if sweep.csi_mode is Estimator.PERFECT else empirical_mse(est.coefficients, h.coefficients)
    if not data:
        return BlockTally(bit_errors=0, bits=0, mse_sample=mse)

    words = rng.integers(0, 1 << cfg.eta, size=sweep.block_length, dtype=np.int64)
    symbol_idx, coord0 = map_words(words, cfg, c)
    Y = transmit_batch(h.matrix, coord0, c.points[symbol_idx], noise_variance, rng)
    dec_sym, dec_coord, _ = detect_batch(Y, est.matrix(cfg), c.points)
    decided = words_for(dec_sym, dec_coord, cfg, c)
    errors = int(popcount(words ^ decided).sum())
    return BlockTally(bit_errors=errors, bits=sweep.block_length * cfg.eta, mse_sample=mse)


def _run_block_range(args) -> List[BlockTally]:
    """Worker-process entry: a contiguous run of block ids for one SNR point."""
    block_ids, snr_db, snr_index, sweep, data = args
    return [run_block(b, snr_db, sweep, snr_index, data) for b in block_ids]


def _iter_tallies(sweep: SweepConfig, snr_index: int, snr_db: float, limit: int,
                  executor: Optional[Executor], data: bool) -> Iterator[BlockTally]:
    """Yield block tallies in block-id order, computing ahead in chunks."""
    if executor is None:
        for block_id in range(limit):
            yield run_block(block_id, snr_db, sweep, snr_index, data)
        return

    chunk = sweep.workers * _BLOCKS_PER_TASK
    for start in range(0, limit, chunk):
        stop = min(start + chunk, limit)
        tasks = [
            (range(s, min(s + _BLOCKS_PER_TASK, stop)), snr_db, snr_index, sweep, data)
            for s in range(start, stop, _BLOCKS_PER_TASK)
        ]
        for tallies in executor.map(_run_block_range, tasks):
            yield from tallies


def _executor_for(sweep: SweepConfig) -> Optional[ProcessPoolExecutor]:
    return ProcessPoolExecutor(max_workers=sweep.workers) if sweep.workers > 1 else None


# ─── Sweeps ───

def _error_variance(sweep: SweepConfig, noise_variance: float) -> float:
    return analytic_mse(sweep.csi_mode, sweep.pilot, noise_variance, sweep.channel_power)


def _abep(sweep: SweepConfig, noise_variance: float) -> float:
    cfg = sweep.system
    return abep_union_bound(
        cfg,
        _constellation(cfg.modulation),
        noise_variance,
        _error_variance(sweep, noise_variance),
        sweep.channel_power,
    ).abep


def run_sweep(sweep: SweepConfig) -> List[SweepRecord]:
    """Simulated BER + MSE + ABEP bound per SNR point."""
    cfg = sweep.system
    logger.info(
        "BER sweep: %s Nt=%d Nr=%d Nrf=%d (eta=%d) csi=%s, %d SNR points, seed=%d, workers=%d",
        cfg.modulation.name, cfg.n_tx, cfg.n_rx, cfg.n_rf, cfg.eta,
        sweep.csi_mode.value, len(sweep.snr_grid_db), sweep.master_seed, sweep.workers,
    )
    records: List[SweepRecord] = []
    executor = _executor_for(sweep)
    try:
        for snr_index, snr_db in enumerate(sweep.snr_grid_db):
            noise_variance = noise_variance_for_snr(snr_db, cfg)
            errors = bits = blocks = 0
            mse_sum = 0.0
            for tally in _iter_tallies(sweep, snr_index, snr_db, sweep.max_blocks, executor, data=True):
                errors += tally.bit_errors
                bits += tally.bits
                mse_sum += tally.mse_sample
                blocks += 1
                if errors >= sweep.min_bit_errors and blocks >= sweep.min_blocks:
                    break

            record = SweepRecord(
                snr_db=snr_db,
                mse_empirical=mse_sum / blocks,
                mse_analytic=_error_variance(sweep, noise_variance),
                ber=errors / bits,
                bit_errors=errors,
                bits_simulated=bits,
                abep_bound=_abep(sweep, noise_variance),
                blocks=blocks,
            )
            if errors < sweep.min_bit_errors:
                record.warning = MAX_BLOCKS_WARNING
                logger.warning(
                    "SNR %.2f dB: only %d bit errors after %d blocks (wanted %d)",
                    snr_db, errors, blocks, sweep.min_bit_errors,
                )
            logger.info(
                "SNR %6.2f dB: BER %.3e (%d/%d bits, %d blocks), ABEP %.3e",
                snr_db, record.ber, errors, bits, blocks, record.abep_bound,
            )
            records.append(record)
    finally:
        if executor is not None:
            executor.shutdown()
    return records


def run_mse_sweep(sweep: SweepConfig, n_blocks: int) -> List[SweepRecord]:
    """Estimator-only sweep: n_blocks channel draws per SNR point, no data phase."""
    if n_blocks < 1:
        raise ConfigError("mse_blocks", f"must be >= 1, got {n_blocks}")
    cfg = sweep.system
    logger.info(
        "MSE sweep: Nt=%d Nr=%d Nrf=%d csi=%s, %d draws per point",
        cfg.n_tx, cfg.n_rx, cfg.n_rf, sweep.csi_mode.value, n_blocks,
    )
    records: List[SweepRecord] = []
    executor = _executor_for(sweep)
    try:
        for snr_index, snr_db in enumerate(sweep.snr_grid_db):
            noise_variance = noise_variance_for_snr(snr_db, cfg)
            samples = [t.mse_sample for t in _iter_tallies(sweep, snr_index, snr_db, n_blocks, executor, data=False)]
            record = SweepRecord(
                snr_db=snr_db,
                mse_empirical=float(np.mean(samples)),
                mse_analytic=_error_variance(sweep, noise_variance),
                blocks=n_blocks,
            )
            logger.info("SNR %6.2f dB: MSE %.4e (analytic %.4e)", snr_db, record.mse_empirical, record.mse_analytic)
            records.append(record)
    finally:
        if executor is not None:
            executor.shutdown()
    return records


def run_abep_curve(sweep: SweepConfig) -> List[Tuple[float, float]]:
    """(snr_db, ABEP) per grid point. Purely analytic."""
    return [
        (snr_db, _abep(sweep, noise_variance_for_snr(snr_db, sweep.system)))
        for snr_db in sweep.snr_grid_db
    ]


def run_mirror_sweep(sweep: SweepConfig, n_rf_values: Sequence[int], n_blocks: int) -> Dict[int, List[SweepRecord]]:
    """MSE curves for several mirror counts with everything else fixed."""
    out: Dict[int, List[SweepRecord]] = {}
    for n_rf in n_rf_values:
        system = replace(sweep.system, n_rf=int(n_rf))
        out[int(n_rf)] = run_mse_sweep(replace(sweep, system=system), n_blocks)
    return out


# ─── Curve Helpers ───

def snr_at_ber(snr_db: Sequence[float], ber: Sequence[float], target: float) -> Optional[float]:
    """SNR where a decreasing BER curve crosses `target`, log-linear interpolation.

    Returns None when no pair of adjacent points brackets the target.
    """
    for (s0, b0), (s1, b1) in zip(zip(snr_db, ber), zip(snr_db[1:], ber[1:])):
        if b0 >= target >= b1 and b0 > 0 and b1 > 0:
            if b0 == b1:
                return s0
            frac = (math.log10(b0) - math.log10(target)) / (math.log10(b0) - math.log10(b1))
            return s0 + frac * (s1 - s0)
    return None


def snr_gap_db(reference: Sequence[SweepRecord], other: Sequence[SweepRecord], target: float) -> Optional[float]:
    """Horizontal distance (other - reference) between two BER curves at `target`."""
    ref = snr_at_ber([r.snr_db for r in reference], [r.ber for r in reference], target)
    oth = snr_at_ber([r.snr_db for r in other], [r.ber for r in other], target)
    if ref is None or oth is None:
        return None
    return oth - ref
