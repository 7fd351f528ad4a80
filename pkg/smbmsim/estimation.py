"""
estimation.py — Reference-signal channel estimation for SmbmSim.

Before data flows in a block, the transmitter sounds every (antenna, mirror
state) pair once with a known unit-energy pilot p. All Nr receive antennas
listen to each use, so a block spends Nt * 2^Nrf channel uses on sounding and
ends up with one noisy observation per coefficient:

    r = P h + n,   P = p * I

Because P is diagonal, the LS and LMMSE estimators collapse to scalar
per-coefficient operations:

    LS:     h_hat = r / p                            MSE = sigma_n^2 / |p|^2
    LMMSE:  h_hat = p* r / (|p|^2 + sigma_n^2/sigma_h^2)
                                                     MSE = sigma_h^2 sigma_n^2 / (sigma_h^2 |p|^2 + sigma_n^2)

The matrix forms are kept as `ls_matrix_oracle` / `lmmse_matrix_oracle` so
the closed forms can be checked against an explicit (P^H P)^-1 evaluation.
They are only meant for small sizes.

Pilot energy is not charged to E_b; the SNR axis counts data energy only.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from smbmsim.channel import ChannelRealization, complex_gaussian
from smbmsim.errors import ConfigError
from smbmsim.mapping import SystemConfig

logger = logging.getLogger("smbmsim.estimation")


class Estimator(str, Enum):
    LS = "ls"
    LMMSE = "lmmse"
    PERFECT = "perfect"


# ─── Data Structures ───

@dataclass(frozen=True)
class PilotSpec:
    """Unit-energy reference symbol."""
    value: complex = 1.0 + 0.0j

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))
        if abs(abs(self.value) ** 2 - 1.0) > 1e-12:
            raise ConfigError("pilot", f"pilot must have unit energy, |p|^2 = {abs(self.value) ** 2}")

    @property
    def energy(self) -> float:
        return abs(self.value) ** 2


@dataclass(frozen=True, eq=False)
class ChannelEstimate:
    """Estimated coefficients in the same layout as ChannelRealization."""
    coefficients: np.ndarray
    estimator: Estimator
    error_variance: float   # sigma_e^2, analytic MSE at the operating noise level

    def __post_init__(self):
        if self.estimator is Estimator.PERFECT and self.error_variance != 0:
            raise ValueError("A perfect estimate carries zero error variance")
        if self.error_variance < 0:
            raise ValueError(f"error variance must be >= 0, got {self.error_variance}")

    def matrix(self, cfg: SystemConfig) -> np.ndarray:
        """G_hat, shape (Nr, Nt * 2^Nrf)."""
        return self.coefficients.reshape(cfg.n_rx, cfg.n_coords)


# ─── Sounding ───

def sound_channel(h: ChannelRealization, pilot: PilotSpec, noise_variance: float,
                  rng: np.random.Generator) -> np.ndarray:
    """r_i = p h_i + n_i, one observation per coefficient."""
    n = complex_gaussian(rng, h.coefficients.shape, noise_variance)
    return pilot.value * h.coefficients + n


def sounding_overhead(cfg: SystemConfig) -> int:
    """Channel uses spent on pilots per block."""
    return cfg.n_coords


# ─── Estimators ───

def analytic_mse(estimator: Estimator, pilot: PilotSpec, noise_variance: float,
                 channel_power: float = 1.0) -> float:
    """Closed-form per-coefficient MSE of each estimator."""
    estimator = Estimator(estimator)
    if estimator is Estimator.PERFECT:
        return 0.0
    if estimator is Estimator.LS:
        return noise_variance / pilot.energy
    return channel_power * noise_variance / (channel_power * pilot.energy + noise_variance)


def estimate_ls(r: np.ndarray, pilot: PilotSpec, noise_variance: float) -> ChannelEstimate:
    h_hat = r / pilot.value
    return ChannelEstimate(
        coefficients=h_hat,
        estimator=Estimator.LS,
        error_variance=analytic_mse(Estimator.LS, pilot, noise_variance),
    )


def estimate_lmmse(r: np.ndarray, pilot: PilotSpec, noise_variance: float,
                   channel_power: float = 1.0) -> ChannelEstimate:
    if not noise_variance > 0 or not channel_power > 0:
        raise ValueError("LMMSE needs positive noise variance and channel power")
    gain = np.conj(pilot.value) / (pilot.energy + noise_variance / channel_power)
    return ChannelEstimate(
        coefficients=gain * r,
        estimator=Estimator.LMMSE,
        error_variance=analytic_mse(Estimator.LMMSE, pilot, noise_variance, channel_power),
    )


def perfect_estimate(h: ChannelRealization) -> ChannelEstimate:
    return ChannelEstimate(coefficients=h.coefficients, estimator=Estimator.PERFECT, error_variance=0.0)


def estimate_channel(h: ChannelRealization, estimator: Estimator, pilot: PilotSpec,
                     noise_variance: float, rng: Optional[np.random.Generator]) -> ChannelEstimate:
    """Sound and estimate in one step. PERFECT skips sounding and draws nothing."""
    estimator = Estimator(estimator)
    if estimator is Estimator.PERFECT:
        return perfect_estimate(h)
    r = sound_channel(h, pilot, noise_variance, rng)
    if estimator is Estimator.LS:
        return estimate_ls(r, pilot, noise_variance)
    return estimate_lmmse(r, pilot, noise_variance, h.channel_power)


def empirical_mse(h_hat: np.ndarray, h: np.ndarray, cfg: Optional[SystemConfig] = None) -> float:
    """Mean |h_hat_i - h_i|^2 over all coefficients of one realization."""
    h_hat = np.asarray(h_hat)
    h = np.asarray(h)
    if h_hat.shape != h.shape:
        raise ValueError(f"Length mismatch: estimate {h_hat.shape} vs channel {h.shape}")
    if cfg is not None and h.size != cfg.n_coefficients:
        raise ValueError(f"Length mismatch: {h.size} coefficients, expected {cfg.n_coefficients}")
    err = h_hat - h
    return float(np.mean(err.real ** 2 + err.imag ** 2))


# ─── Matrix-Form Oracles ───

def pilot_matrix(pilot: PilotSpec, n_coefficients: int) -> np.ndarray:
    return pilot.value * np.eye(n_coefficients, dtype=complex)


def ls_matrix_oracle(r: np.ndarray, P: np.ndarray) -> np.ndarray:
    """(P^H P)^-1 P^H r by explicit inversion."""
    PH = P.conj().T
    return np.linalg.inv(PH @ P) @ PH @ r


def lmmse_matrix_oracle(r: np.ndarray, P: np.ndarray, noise_variance: float, R_h: np.ndarray) -> np.ndarray:
    """(P^H P + sigma_n^2 R_h^-1)^-1 P^H r by explicit inversion."""
    PH = P.conj().T
    return np.linalg.inv(PH @ P + noise_variance * np.linalg.inv(R_h)) @ PH @ r
