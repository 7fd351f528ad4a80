"""
Shared test fixtures for the SmbmSim test suite.

Small link configurations, seeded generators and sweep builders used across
the per-module test files. Import nothing from here directly; request the
fixtures by name.
"""

import logging

import numpy as np
import pytest

from smbmsim.constellation import ModulationKind, ModulationSpec, build_constellation
from smbmsim.engine import SweepConfig
from smbmsim.estimation import Estimator
from smbmsim.mapping import SystemConfig


# ─── Environment Isolation ───

@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    """Keep SMBMSIM_* settings from the developer's shell out of every test."""
    for name in ("SMBMSIM_OUTPUT_DIR", "SMBMSIM_WORKERS", "SMBMSIM_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture(autouse=True)
def _detach_log_handler():
    """The CLI installs the memory handler on the root logger; take it off again."""
    yield
    from smbmsim.log_handler import get_log_handler
    handler = get_log_handler()
    handler.clear()
    root = logging.getLogger()
    if handler in root.handlers:
        root.removeHandler(handler)


# ─── Link Configurations ───

def _psk(order, symbol_energy=1.0):
    return ModulationSpec(kind=ModulationKind.PSK, order=order, symbol_energy=symbol_energy)


@pytest.fixture
def make_system():
    """
    Build a SystemConfig.

    Returns a function: make_system(n_tx=4, n_rx=4, n_rf=2, kind="psk", order=4, es=1.0)
    """
    def _make(n_tx=4, n_rx=4, n_rf=2, kind="psk", order=4, es=1.0):
        modulation = ModulationSpec(kind=ModulationKind(kind), order=order, symbol_energy=es)
        return SystemConfig(n_tx=n_tx, n_rx=n_rx, n_rf=n_rf, modulation=modulation)
    return _make


@pytest.fixture
def qpsk_442():
    """The default published scenario: QPSK, Nt = Nr = 4, Nrf = 2 (eta = 6)."""
    return SystemConfig(n_tx=4, n_rx=4, n_rf=2, modulation=_psk(4))


@pytest.fixture
def small_system():
    """QPSK, Nt = 2, Nrf = 1, Nr = 2 (eta = 4): small enough for exhaustive loops."""
    return SystemConfig(n_tx=2, n_rx=2, n_rf=1, modulation=_psk(4))


@pytest.fixture
def qpsk():
    return build_constellation(_psk(4))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


# ─── Sweeps ───

@pytest.fixture
def make_sweep(qpsk_442):
    """
    Build a SweepConfig around the default scenario.

    Returns a function: make_sweep(snr=(0.0,), system=None, **overrides)
    """
    def _make(snr=(0.0,), system=None, **overrides):
        params = {
            "csi_mode": Estimator.LMMSE,
            "block_length": 20,
            "min_bit_errors": 50,
            "max_blocks": 200,
            "master_seed": 7,
        }
        params.update(overrides)
        return SweepConfig(system=system or qpsk_442, snr_grid_db=tuple(snr), **params)
    return _make
