"""
constellation.py — Gray-labeled M-PSK / M-QAM constellations for SmbmSim.

Builds the data-symbol alphabet that carries the first log2(M) bits of every
SMBM source word. Two families:

  PSK — M points on a circle of radius sqrt(E_s), point n at angle 2*pi*n/M.
        QPSK is rotated by pi/4 so it coincides with 4-QAM.
  QAM — square sqrt(M) x sqrt(M) grid, levels {-(L-1), ..., -1, +1, ..., L-1}
        on each axis, scaled to average energy E_s.

Labels are Gray codes: PSK point n carries gray(n), so angular neighbours
(including the wrap-around pair) differ in one bit. QAM points carry
gray(I level) followed by gray(Q level), so grid neighbours differ in one bit.

Bit words are MSB-first sequences of 0/1. Everywhere in SmbmSim a word is
also handled as the integer it spells, which is what the vectorized paths use.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from smbmsim.errors import ConfigError


class ModulationKind(str, Enum):
    PSK = "psk"
    QAM = "qam"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def gray_code(n):
    """Binary-reflected Gray code. Works on ints and integer arrays."""
    return n ^ (n >> 1)


def bits_to_int(bits: Sequence[int]) -> int:
    """MSB-first bit word → integer."""
    value = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"Bit words contain only 0/1, got {b!r}")
        value = (value << 1) | int(b)
    return value


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Integer → MSB-first bit word of the given width."""
    if width == 0:
        return np.zeros(0, dtype=np.uint8)
    shifts = np.arange(width - 1, -1, -1)
    return ((int(value) >> shifts) & 1).astype(np.uint8)


def popcount(values: np.ndarray) -> np.ndarray:
    """Per-element count of set bits for non-negative integer arrays."""
    v = np.asarray(values, dtype=np.uint64)
    count = np.zeros(v.shape, dtype=np.int64)
    while np.any(v):
        count += (v & np.uint64(1)).astype(np.int64)
        v = v >> np.uint64(1)
    return count


# ─── Data Structures ───

@dataclass(frozen=True)
class ModulationSpec:
    """Modulation family, order and symbol energy."""
    kind: ModulationKind
    order: int                  # M, a power of two >= 2
    symbol_energy: float = 1.0  # E_s

    def __post_init__(self):
        object.__setattr__(self, "kind", ModulationKind(self.kind))
        if not isinstance(self.order, (int, np.integer)) or self.order < 2 or not _is_power_of_two(int(self.order)):
            raise ConfigError("modulation", f"order must be a power of two >= 2, got {self.order}")
        if self.kind is ModulationKind.QAM:
            side = math.isqrt(int(self.order))
            if side * side != self.order:
                raise ConfigError(
                    "modulation",
                    f"QAM order must be a perfect square (4, 16, 64, ...), got {self.order}",
                )
        if not self.symbol_energy > 0:
            raise ConfigError("symbol_energy", f"must be > 0, got {self.symbol_energy}")

    @property
    def bits_per_symbol(self) -> int:
        return int(self.order).bit_length() - 1

    @property
    def name(self) -> str:
        if self.kind is ModulationKind.PSK:
            return {2: "bpsk", 4: "qpsk"}.get(self.order, f"{self.order}psk")
        return f"{self.order}qam"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "order": int(self.order),
            "symbol_energy": self.symbol_energy,
        }


@dataclass(frozen=True, eq=False)
class Constellation:
    """Normalized points and their Gray labels.

    points[i] carries the bit word whose integer value is bit_labels[i].
    """
    spec: ModulationSpec
    points: np.ndarray       # (M,) complex
    bit_labels: np.ndarray   # (M,) int, a permutation of range(M)
    index_of_label: np.ndarray = field(repr=False)  # inverse permutation

    @property
    def order(self) -> int:
        return int(self.spec.order)

    @property
    def bits_per_symbol(self) -> int:
        return self.spec.bits_per_symbol

    @property
    def average_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    def label_bits(self, point_index: int) -> np.ndarray:
        return int_to_bits(int(self.bit_labels[point_index]), self.bits_per_symbol)


# ─── Construction ───

def _psk_points(order: int) -> np.ndarray:
    n = np.arange(order)
    offset = math.pi / 4 if order == 4 else 0.0
    return np.exp(1j * (2 * math.pi * n / order + offset))


def _qam_points_and_labels(order: int):
    side = math.isqrt(order)
    half_bits = (side.bit_length() - 1)
    levels = 2 * np.arange(side) - side + 1
    i_idx, q_idx = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    i_idx = i_idx.ravel()
    q_idx = q_idx.ravel()
    points = levels[i_idx] + 1j * levels[q_idx]
    labels = (gray_code(i_idx) << half_bits) | gray_code(q_idx)
    return points.astype(complex), labels.astype(np.int64)


def build_constellation(spec: ModulationSpec) -> Constellation:
    """Build the normalized, Gray-labeled constellation for `spec`."""
    order = int(spec.order)
    if spec.kind is ModulationKind.PSK:
        raw = _psk_points(order)
        labels = gray_code(np.arange(order, dtype=np.int64))
    else:
        raw, labels = _qam_points_and_labels(order)

    scale = math.sqrt(spec.symbol_energy / float(np.mean(np.abs(raw) ** 2)))
    points = raw * scale
    if order == 2:
        # Exact BPSK on the real axis.
        points = np.array([1.0, -1.0], dtype=complex) * math.sqrt(spec.symbol_energy)

    inverse = np.empty(order, dtype=np.int64)
    inverse[labels] = np.arange(order)
    points.setflags(write=False)
    labels.setflags(write=False)
    inverse.setflags(write=False)
    return Constellation(spec=spec, points=points, bit_labels=labels, index_of_label=inverse)


# ─── Bit ↔ Symbol ───

def bits_to_point_index(c: Constellation, bits: Sequence[int]) -> int:
    if len(bits) != c.bits_per_symbol:
        raise ValueError(
            f"Expected a {c.bits_per_symbol}-bit word for {c.spec.name}, got {len(bits)} bits"
        )
    return int(c.index_of_label[bits_to_int(bits)])


def map_bits_to_symbol(c: Constellation, bits: Sequence[int]) -> complex:
    """Return the point whose label equals `bits`."""
    return complex(c.points[bits_to_point_index(c, bits)])


def symbol_to_bits(c: Constellation, point_index: int) -> np.ndarray:
    """Return the bit word carried by points[point_index]."""
    if not 0 <= point_index < c.order:
        raise IndexError(f"Point index {point_index} out of range for M={c.order}")
    return c.label_bits(point_index)
