"""
bounds.py — Union-bound ABEP for SmbmSim.

Theory side of the simulator. For every ordered pair of hypotheses
(l, s_l) -> (l~, s_l~), where l runs over the Nt * 2^Nrf (antenna, state)
combinations and s over the constellation, the pairwise error probability
in Rayleigh fading with estimation-error variance sigma_e^2 is

    gamma_bar = E_s sigma_h^2 (1 + sigma_e^2) / (2 (sigma_n^2 + sigma_e^2 |s_l|^2))
                x ( |s_l - s_l~|^2          if l~ == l
                    |s_l~|^2 + |s_l|^2      otherwise )

    PEP_1  = 1/2 (1 - sqrt((gamma_bar/2) / (1 + gamma_bar/2)))
    PEP_Nr = PEP_1^Nr * sum_{i<Nr} C(Nr-1+i, i) (1 - PEP_1)^i

and the bound is

    ABEP = 1/(eta 2^eta) * sum_pairs PEP_Nr * e(pair)

with e(.) the Hamming distance between the two eta-bit labels. The double sum
is evaluated exactly as a 2^eta x 2^eta matrix; eta <= 10 stays well under
a few tens of MB.

The quadrature oracles integrate the same expectations numerically with
scipy so the closed forms can be checked independently.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

from smbmsim.constellation import Constellation, popcount
from smbmsim.errors import QuadratureError
from smbmsim.mapping import SmbmSymbol, SystemConfig, map_words, word_of

logger = logging.getLogger("smbmsim.bounds")


def q_function(x):
    """Gaussian tail Q(x) = erfc(x / sqrt(2)) / 2."""
    return 0.5 * special.erfc(np.asarray(x) / math.sqrt(2.0))


# ─── Data Structures ───

@dataclass(frozen=True)
class PepParams:
    symbol_energy: float            # E_s
    channel_power: float            # sigma_h^2
    noise_variance: float           # sigma_n^2
    estimation_error_variance: float  # sigma_e^2
    s_true: complex                 # s_l
    s_alt: complex                  # s_l~
    same_channel_index: bool        # l~ == l

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError(f"noise variance must be > 0, got {self.noise_variance}")
        if self.channel_power < 0 or self.estimation_error_variance < 0 or self.symbol_energy < 0:
            raise ValueError("variances and energies must be >= 0")


@dataclass(frozen=True, eq=False)
class BoundResult:
    abep: float
    contributions: np.ndarray   # (2^eta, 2^eta): PEP * e per ordered word pair
    eta: int


# ─── Pairwise Error Probability ───

def gamma_bar(p: PepParams) -> float:
    scale = (
        p.symbol_energy * p.channel_power * (1.0 + p.estimation_error_variance)
        / (2.0 * (p.noise_variance + p.estimation_error_variance * abs(p.s_true) ** 2))
    )
    if p.same_channel_index:
        distance = abs(p.s_true - p.s_alt) ** 2
    else:
        distance = abs(p.s_alt) ** 2 + abs(p.s_true) ** 2
    if distance == 0:
        return 0.0
    return scale * distance


def pep_sra(gbar):
    """Average PEP for one receive antenna. Scalars in, float out; arrays in, array out."""
    g = np.asarray(gbar, dtype=float)
    if np.any(g < 0):
        raise ValueError("gamma_bar must be >= 0")
    a = g / 2.0
    # 1 - sqrt(a/(1+a)) rewritten without cancellation; tends to 0 as a -> inf
    with np.errstate(invalid="ignore"):
        pep = 0.5 / ((1.0 + a) * (1.0 + np.sqrt(a / (1.0 + a))))
    pep = np.where(np.isinf(a), 0.0, pep)
    return float(pep) if pep.ndim == 0 else pep


def pep_mra(pep_1, n_rx: int):
    """Average PEP for Nr receive antennas from the single-antenna PEP."""
    if n_rx < 1:
        raise ValueError(f"n_rx must be >= 1, got {n_rx}")
    p = np.asarray(pep_1, dtype=float)
    series = np.zeros_like(p)
    for i in range(n_rx):
        series = series + special.comb(n_rx - 1 + i, i, exact=True) * (1.0 - p) ** i
    out = p ** n_rx * series
    return float(out) if out.ndim == 0 else out


def _quad_half_line(integrand) -> float:
    out = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-12, epsrel=1e-10, limit=200, full_output=1)
    if len(out) > 3:
        raise QuadratureError(f"quadrature did not converge: {out[3]}")
    return float(out[0])


def pep_numeric_oracle(gbar: float) -> float:
    """Integrate Q(sqrt(rho)) against the exponential density of mean gamma_bar.

    Substituting rho = gamma_bar * u^2 removes the square-root kink at the
    origin: the integrand becomes Q(sqrt(gamma_bar) u) * 2u exp(-u^2).
    """
    if gbar < 0:
        raise ValueError("gamma_bar must be >= 0")
    root = math.sqrt(gbar)
    return _quad_half_line(lambda u: float(q_function(root * u)) * 2.0 * u * math.exp(-u * u))


def pep_mra_numeric_oracle(gbar: float, n_rx: int) -> float:
    """Integrate Q(sqrt(gamma)) against the Gamma(Nr, gamma_bar) density.

    The sum of Nr independent exponential branch SNRs is chi-square with 2Nr
    degrees of freedom. Same u-substitution as pep_numeric_oracle.
    """
    if gbar < 0:
        raise ValueError("gamma_bar must be >= 0")
    root = math.sqrt(gbar)
    return _quad_half_line(
        lambda u: float(q_function(root * u)) * float(stats.gamma.pdf(u * u, n_rx)) * 2.0 * u
    )


# ─── Union Bound ───

def e_bits(hyp_a: SmbmSymbol, hyp_b: SmbmSymbol, cfg: SystemConfig, c: Constellation) -> int:
    """Number of bits in error when hyp_a is sent and hyp_b decided."""
    return (word_of(hyp_a, cfg, c) ^ word_of(hyp_b, cfg, c)).bit_count()


def abep_union_bound(cfg: SystemConfig, c: Constellation, noise_variance: float,
                     error_variance: float = 0.0, channel_power: float = 1.0) -> BoundResult:
    """Exact double sum over all 2^eta x 2^eta ordered hypothesis pairs."""
    if not noise_variance > 0:
        raise ValueError(f"noise variance must be > 0, got {noise_variance}")
    n_words = 1 << cfg.eta
    words = np.arange(n_words, dtype=np.int64)
    symbol_idx, coord0 = map_words(words, cfg, c)
    s = c.points[symbol_idx]
    energy = np.abs(s) ** 2

    same = coord0[:, None] == coord0[None, :]
    distance = np.where(
        same,
        np.abs(s[:, None] - s[None, :]) ** 2,
        energy[:, None] + energy[None, :],
    )
    with np.errstate(over="ignore", invalid="ignore"):
        scale = (
            cfg.modulation.symbol_energy * channel_power * (1.0 + error_variance)
            / (2.0 * (noise_variance + error_variance * energy))
        )
        # Zero-distance pairs (the diagonal) stay at gamma_bar = 0 even when scale overflows.
        gbar = np.where(distance > 0, scale[:, None] * distance, 0.0)

    pep = pep_mra(pep_sra(gbar), cfg.n_rx)
    errors = popcount(words[:, None] ^ words[None, :])
    contributions = pep * errors
    abep = float(contributions.sum()) / (cfg.eta * n_words)
    logger.debug(
        "ABEP eta=%d sigma_n^2=%.3e sigma_e^2=%.3e -> %.3e",
        cfg.eta, noise_variance, error_variance, abep,
    )
    return BoundResult(abep=abep, contributions=contributions, eta=cfg.eta)
