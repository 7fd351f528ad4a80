"""
detection.py — Joint ML detection for SmbmSim.

The receiver decides the data symbol, the active transmit antenna and the
mirror state together by minimizing ||y - d * h_hat_j^k||^2 over all
M * Nt * 2^Nrf hypotheses. It always detects with the estimate it was given
(the true channel under PERFECT); the metric is plain Euclidean distance
with no correction for estimation error.

Ties go to the lexicographically smallest (k, j, l). With 0-based storage
that is the smallest flat index (m - 1) * M + l, which is what argmin
returns.

Three entry points:
  detect_reference — one vector, explicit triple loop. The oracle.
  detect_fast      — one vector, through the batched path below.
  detect_batch     — B vectors against one estimate, vectorized. Used by the
                     Monte Carlo engine. Per column it keeps the best symbol,
                     then takes the best column, so it matches the reference
                     decision and metric exactly.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from smbmsim.constellation import Constellation
from smbmsim.estimation import ChannelEstimate
from smbmsim.mapping import SmbmSymbol, SystemConfig, indices_of, word_of

logger = logging.getLogger("smbmsim.detection")

# Upper bound on complex entries materialized per detect_batch chunk.
_CHUNK_ENTRIES = 1 << 21


@dataclass(frozen=True)
class Decision:
    """Detector output. Indices follow SmbmSymbol conventions."""
    symbol_index: int   # l_hat, 0-based
    antenna_index: int  # j_hat, 1-based
    state_index: int    # k_hat, 1-based
    metric: float       # squared Euclidean distance of the winner

    def as_symbol(self, cfg: SystemConfig) -> SmbmSymbol:
        return SmbmSymbol.from_indices(self.symbol_index, self.antenna_index, self.state_index, cfg)


def _check_y(y: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.shape != (cfg.n_rx,):
        raise ValueError(f"Received vector must have Nr={cfg.n_rx} entries, got shape {y.shape}")
    return y


def detect_reference(y: np.ndarray, est: ChannelEstimate, c: Constellation, cfg: SystemConfig) -> Decision:
    """Exhaustive ML search, one hypothesis at a time."""
    y = _check_y(y, cfg)
    g_hat = est.matrix(cfg)
    best = None
    for k in range(1, cfg.n_states + 1):
        for j in range(1, cfg.n_tx + 1):
            h = g_hat[:, (k - 1) * cfg.n_tx + j - 1]
            for ell in range(c.order):
                diff = y - c.points[ell] * h
                metric = float(np.sum(diff.real ** 2 + diff.imag ** 2))
                if best is None or metric < best.metric:
                    best = Decision(symbol_index=ell, antenna_index=j, state_index=k, metric=metric)
    return best


def detect_batch(Y: np.ndarray, g_hat: np.ndarray, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Detect every row of Y (B, Nr) against G_hat (Nr, L).

    Returns (symbol indices, 0-based coordinates, metrics), each of length B.
    """
    Y = np.atleast_2d(Y)
    n_rx, n_coords = g_hat.shape
    order = len(points)
    # candidates[l, s, :] = points[s] * column l
    candidates = points[None, :, None] * g_hat.T[:, None, :]

    n = Y.shape[0]
    symbol_idx = np.empty(n, dtype=np.int64)
    coord0 = np.empty(n, dtype=np.int64)
    metric = np.empty(n, dtype=float)

    chunk = max(1, _CHUNK_ENTRIES // (n_coords * order * n_rx))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = Y[start:stop, None, None, :] - candidates[None]
        dist = (diff.real ** 2 + diff.imag ** 2).sum(axis=-1)      # (b, L, M)
        best_sym = np.argmin(dist, axis=2)                           # per column
        col_metric = np.take_along_axis(dist, best_sym[..., None], axis=2)[..., 0]
        best_col = np.argmin(col_metric, axis=1)
        rows = np.arange(stop - start)
        coord0[start:stop] = best_col
        symbol_idx[start:stop] = best_sym[rows, best_col]
        metric[start:stop] = col_metric[rows, best_col]
    return symbol_idx, coord0, metric


def detect_fast(y: np.ndarray, est: ChannelEstimate, c: Constellation, cfg: SystemConfig) -> Decision:
    """Same decision and metric as detect_reference, via detect_batch."""
    y = _check_y(y, cfg)
    sym, coord0, metric = detect_batch(y[None, :], est.matrix(cfg), c.points)
    j, k = indices_of(int(coord0[0]) + 1, cfg)
    return Decision(symbol_index=int(sym[0]), antenna_index=j, state_index=k, metric=float(metric[0]))


def count_bit_errors(truth: SmbmSymbol, decision: Decision, cfg: SystemConfig, c: Constellation) -> int:
    """Hamming distance between the transmitted and decided eta-bit words."""
    decided = decision.as_symbol(cfg) if isinstance(decision, Decision) else decision
    return (word_of(truth, cfg, c) ^ word_of(decided, cfg, c)).bit_count()
