"""
channel.py — Block-fading Rayleigh channel for SmbmSim.

One realization holds every coefficient h_{i,j}^k the receiver could ever
see: Nr receive antennas x 2^Nrf mirror states x Nt transmit antennas. The
flat vector is ordered receive antenna slowest, then state, then transmit
antenna:

    h = [h_{1,1}^1 .. h_{1,Nt}^1, h_{1,1}^2 .. h_{1,Nt}^{2^Nrf}, h_{2,1}^1 .. ]

which is exactly the row-major flattening of the Nr x (Nt * 2^Nrf) matrix
G = [G^1, G^2, ..., G^{2^Nrf}]. So G is a reshape view of h, G^k is a column
slice of G, and h_j^k is column m - 1 of G. No copies, no reindexing.

Randomness always comes in through an explicit numpy Generator owned by the
caller. Nothing in this module touches global random state.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from smbmsim.errors import ConfigError
from smbmsim.mapping import SmbmSymbol, SystemConfig, coordinate_of

logger = logging.getLogger("smbmsim.channel")


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with total variance `variance`."""
    scale = math.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


# ─── Data Structures ───

@dataclass(frozen=True)
class NoiseSpec:
    """AWGN with total complex variance sigma_n^2 per sample."""
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ConfigError("noise_variance", f"must be > 0, got {self.variance}")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """All 2^Nrf * Nt * Nr coefficients of one fading block."""
    cfg: SystemConfig
    coefficients: np.ndarray     # flat h, length Nr * Nt * 2^Nrf
    channel_power: float = 1.0   # sigma_h^2

    def __post_init__(self):
        if self.coefficients.shape != (self.cfg.n_coefficients,):
            raise ValueError(
                f"Expected {self.cfg.n_coefficients} coefficients, got shape {self.coefficients.shape}"
            )

    @property
    def matrix(self) -> np.ndarray:
        """G, shape (Nr, Nt * 2^Nrf)."""
        return self.coefficients.reshape(self.cfg.n_rx, self.cfg.n_coords)

    def sub_matrix(self, k: int) -> np.ndarray:
        """G^k, shape (Nr, Nt)."""
        if not 1 <= k <= self.cfg.n_states:
            raise IndexError(f"state index {k} out of range [1, {self.cfg.n_states}]")
        start = (k - 1) * self.cfg.n_tx
        return self.matrix[:, start:start + self.cfg.n_tx]

    def coefficient(self, i: int, j: int, k: int) -> complex:
        """h_{i,j}^k with 1-based indices."""
        return complex(self.sub_matrix(k)[i - 1, j - 1])


# ─── Operations ───

def draw_channel(cfg: SystemConfig, channel_power: float, rng: np.random.Generator) -> ChannelRealization:
    """i.i.d. CN(0, sigma_h^2) coefficients for one block."""
    if not channel_power > 0:
        raise ConfigError("channel_power", f"must be > 0, got {channel_power}")
    h = complex_gaussian(rng, cfg.n_coefficients, channel_power)
    h.setflags(write=False)
    return ChannelRealization(cfg=cfg, coefficients=h, channel_power=channel_power)


def column(h: ChannelRealization, j: int, k: int, cfg: SystemConfig) -> np.ndarray:
    """h_j^k = [h_{1,j}^k, ..., h_{Nr,j}^k]."""
    if not 1 <= j <= cfg.n_tx:
        raise IndexError(f"antenna index {j} out of range [1, {cfg.n_tx}]")
    if not 1 <= k <= cfg.n_states:
        raise IndexError(f"state index {k} out of range [1, {cfg.n_states}]")
    return h.matrix[:, coordinate_of(j, k, cfg) - 1]


def transmit(h: ChannelRealization, sym: SmbmSymbol, d: complex, noise: NoiseSpec,
             rng: np.random.Generator) -> np.ndarray:
    """y = d * h_j^k + w for one channel use."""
    w = complex_gaussian(rng, h.cfg.n_rx, noise.variance)
    return d * column(h, sym.antenna_index, sym.state_index, h.cfg) + w


def transmit_batch(matrix: np.ndarray, coord0: np.ndarray, values: np.ndarray, noise_variance: float,
                   rng: np.random.Generator) -> np.ndarray:
    """B channel uses through one block: rows of the result are y vectors.

    matrix is G (Nr, L); coord0 holds 0-based coordinates, values the data
    symbols. Returns shape (B, Nr).
    """
    n_rx = matrix.shape[0]
    w = complex_gaussian(rng, (len(coord0), n_rx), noise_variance)
    return values[:, None] * matrix.T[coord0] + w


def noise_variance_for_snr(snr_db: float, cfg: SystemConfig) -> float:
    """sigma_n^2 = E_b / SNR with E_b = E_s / eta."""
    return cfg.modulation.symbol_energy / (cfg.eta * 10.0 ** (snr_db / 10.0))
