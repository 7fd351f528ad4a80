"""
mapping.py — SMBM bit mapping for SmbmSim.

One channel use carries eta = log2(M) + log2(Nt) + Nrf bits, laid out as

    q = [ symbol bits (log2 M) | antenna bits (log2 Nt) | mirror bits (Nrf) ]

The symbol field picks a constellation point through its Gray label. The
antenna and mirror fields are natural binary: j = 1 + value(antenna bits),
k = 1 + value(mirror bits). The data symbol d then sits at coordinate
m = (k - 1) * Nt + j of an otherwise all-zero transmit vector of length
Nt * 2^Nrf.

j, k and m are 1-based in the domain types. Array storage is 0-based:
coordinate m lives at index m - 1.

Scalar operations (split_bits, map_source, unmap_decision) work on one word
at a time and are what the tests reason about. The vectorized helpers
(map_words, words_for) do the same thing on integer arrays for the Monte
Carlo engine and the union bound.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from smbmsim.constellation import (
    Constellation,
    ModulationSpec,
    bits_to_int,
    bits_to_point_index,
    int_to_bits,
)
from smbmsim.errors import ConfigError

logger = logging.getLogger("smbmsim.mapping")


def _log2_exact(n: int) -> int:
    return int(n).bit_length() - 1


# ─── Data Structures ───

@dataclass(frozen=True)
class SystemConfig:
    """Antenna counts, mirror count and modulation of one SMBM link."""
    n_tx: int                   # Nt, power of two
    n_rx: int                   # Nr
    n_rf: int                   # Nrf, RF mirrors per transmit antenna
    modulation: ModulationSpec

    def __post_init__(self):
        if not isinstance(self.n_tx, (int, np.integer)) or self.n_tx < 1 or (self.n_tx & (self.n_tx - 1)):
            raise ConfigError("n_tx", f"Nt must be a power of two >= 1, got {self.n_tx}")
        if not isinstance(self.n_rx, (int, np.integer)) or self.n_rx < 1:
            raise ConfigError("n_rx", f"Nr must be an integer >= 1, got {self.n_rx}")
        if not isinstance(self.n_rf, (int, np.integer)) or self.n_rf < 0:
            raise ConfigError("n_rf", f"Nrf must be an integer >= 0, got {self.n_rf}")

    @property
    def symbol_bits(self) -> int:
        return self.modulation.bits_per_symbol

    @property
    def antenna_bits(self) -> int:
        return _log2_exact(self.n_tx)

    @property
    def eta(self) -> int:
        """Bits per channel use."""
        return self.symbol_bits + self.antenna_bits + self.n_rf

    @property
    def n_states(self) -> int:
        return 1 << self.n_rf

    @property
    def n_coords(self) -> int:
        """Transmit-vector length Nt * 2^Nrf."""
        return self.n_tx * self.n_states

    @property
    def n_coefficients(self) -> int:
        return self.n_coords * self.n_rx

    @property
    def n_hypotheses(self) -> int:
        return self.modulation.order * self.n_coords

    def to_dict(self) -> dict:
        return {
            "n_tx": int(self.n_tx),
            "n_rx": int(self.n_rx),
            "n_rf": int(self.n_rf),
            "modulation": self.modulation.to_dict(),
            "eta": self.eta,
        }


@dataclass(frozen=True)
class SmbmSymbol:
    """One transmit hypothesis: (symbol, antenna, state) and its coordinate."""
    symbol_index: int   # l, 0-based constellation index
    antenna_index: int  # j, 1-based
    state_index: int    # k, 1-based
    coordinate: int     # m = (k - 1) * Nt + j, 1-based

    @classmethod
    def from_indices(cls, symbol_index: int, antenna_index: int, state_index: int,
                     cfg: SystemConfig) -> "SmbmSymbol":
        if not 0 <= symbol_index < cfg.modulation.order:
            raise IndexError(f"symbol index {symbol_index} out of range [0, {cfg.modulation.order})")
        if not 1 <= antenna_index <= cfg.n_tx:
            raise IndexError(f"antenna index {antenna_index} out of range [1, {cfg.n_tx}]")
        if not 1 <= state_index <= cfg.n_states:
            raise IndexError(f"state index {state_index} out of range [1, {cfg.n_states}]")
        return cls(
            symbol_index=int(symbol_index),
            antenna_index=int(antenna_index),
            state_index=int(state_index),
            coordinate=coordinate_of(antenna_index, state_index, cfg),
        )

    @classmethod
    def from_coordinate(cls, symbol_index: int, coordinate: int, cfg: SystemConfig) -> "SmbmSymbol":
        j, k = indices_of(coordinate, cfg)
        return cls.from_indices(symbol_index, j, k, cfg)


@dataclass(frozen=True, eq=False)
class TransmitVector:
    """Sparse x: one nonzero value d at coordinate m."""
    length: int
    coordinate: int   # m, 1-based
    value: complex    # d

    def dense(self) -> np.ndarray:
        x = np.zeros(self.length, dtype=complex)
        x[self.coordinate - 1] = self.value
        return x


# ─── Coordinates ───

def coordinate_of(antenna_index: int, state_index: int, cfg: SystemConfig) -> int:
    return (int(state_index) - 1) * cfg.n_tx + int(antenna_index)


def indices_of(coordinate: int, cfg: SystemConfig) -> Tuple[int, int]:
    """Inverse of coordinate_of: m → (j, k)."""
    if not 1 <= coordinate <= cfg.n_coords:
        raise IndexError(f"coordinate {coordinate} out of range [1, {cfg.n_coords}]")
    k, j0 = divmod(int(coordinate) - 1, cfg.n_tx)
    return j0 + 1, k + 1


# ─── Scalar Mapping ───

def spectral_efficiency(cfg: SystemConfig) -> int:
    return cfg.eta


def split_bits(q: Sequence[int], cfg: SystemConfig) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split an eta-bit word into (symbol bits, antenna bits, mirror bits)."""
    if len(q) != cfg.eta:
        raise ValueError(f"Source word must have eta={cfg.eta} bits, got {len(q)}")
    q = np.asarray(q, dtype=np.uint8)
    a = cfg.symbol_bits
    b = a + cfg.antenna_bits
    return q[:a], q[a:b], q[b:]


def map_source(q: Sequence[int], cfg: SystemConfig, c: Constellation) -> Tuple[SmbmSymbol, TransmitVector]:
    """Map one source word to its SMBM symbol and sparse transmit vector."""
    symbol_bits, antenna_bits, mirror_bits = split_bits(q, cfg)
    ell = bits_to_point_index(c, symbol_bits)
    j = 1 + bits_to_int(antenna_bits)
    k = 1 + bits_to_int(mirror_bits)
    sym = SmbmSymbol.from_indices(ell, j, k, cfg)
    x = TransmitVector(length=cfg.n_coords, coordinate=sym.coordinate, value=complex(c.points[ell]))
    return sym, x


def word_of(sym: SmbmSymbol, cfg: SystemConfig, c: Constellation) -> int:
    """Integer value of the eta-bit word that maps to `sym`."""
    label = int(c.bit_labels[sym.symbol_index])
    return (
        (label << (cfg.antenna_bits + cfg.n_rf))
        | ((sym.antenna_index - 1) << cfg.n_rf)
        | (sym.state_index - 1)
    )


def unmap_decision(sym: SmbmSymbol, cfg: SystemConfig, c: Constellation) -> np.ndarray:
    """Recover the eta-bit source word of a (decided) symbol."""
    return int_to_bits(word_of(sym, cfg, c), cfg.eta)


# ─── Vectorized Mapping ───

def map_words(words: np.ndarray, cfg: SystemConfig, c: Constellation) -> Tuple[np.ndarray, np.ndarray]:
    """Integer source words → (constellation indices, 0-based coordinates)."""
    words = np.asarray(words, dtype=np.int64)
    state0 = words & (cfg.n_states - 1)
    antenna0 = (words >> cfg.n_rf) & (cfg.n_tx - 1)
    label = words >> (cfg.antenna_bits + cfg.n_rf)
    symbol_idx = c.index_of_label[label]
    coord0 = state0 * cfg.n_tx + antenna0
    return symbol_idx, coord0


def words_for(symbol_idx: np.ndarray, coord0: np.ndarray, cfg: SystemConfig, c: Constellation) -> np.ndarray:
    """Inverse of map_words."""
    coord0 = np.asarray(coord0, dtype=np.int64)
    state0, antenna0 = np.divmod(coord0, cfg.n_tx)
    label = c.bit_labels[np.asarray(symbol_idx, dtype=np.int64)]
    return (label << (cfg.antenna_bits + cfg.n_rf)) | (antenna0 << cfg.n_rf) | state0
