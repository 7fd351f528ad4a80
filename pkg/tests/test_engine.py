"""Tests for the Monte Carlo sweep engine: per-block streams, stopping rule, sweeps and curve helpers."""

import logging
import math

import numpy as np
import pytest

from smbmsim.channel import NoiseSpec, draw_channel, noise_variance_for_snr, transmit
from smbmsim.constellation import build_constellation, int_to_bits
from smbmsim.detection import count_bit_errors, detect_fast
from smbmsim.engine import (
    MAX_BLOCKS_WARNING,
    SweepConfig,
    SweepRecord,
    block_stream,
    run_abep_curve,
    run_block,
    run_mirror_sweep,
    run_mse_sweep,
    run_sweep,
    snr_at_ber,
    snr_gap_db,
)
from smbmsim.errors import ConfigError
from smbmsim.estimation import Estimator, PilotSpec, estimate_channel
from smbmsim.mapping import map_source


class TestSweepConfig:
    @pytest.mark.parametrize("overrides,field", [
        ({"block_length": 0}, "block_length"),
        ({"min_bit_errors": 0}, "min_errors"),
        ({"max_blocks": 0}, "max_blocks"),
        ({"min_blocks": 500}, "min_blocks"),
        ({"workers": 0}, "workers"),
        ({"master_seed": -1}, "seed"),
        ({"master_seed": 2 ** 64}, "seed"),
        ({"channel_power": 0.0}, "channel_power"),
    ])
    def test_invalid_fields_named(self, make_sweep, overrides, field):
        with pytest.raises(ConfigError) as exc:
            make_sweep(**overrides)
        assert exc.value.field == field

    def test_grid_must_be_non_empty(self, make_sweep):
        with pytest.raises(ConfigError, match="empty"):
            make_sweep(snr=())

    def test_grid_must_increase(self, make_sweep):
        with pytest.raises(ConfigError, match="strictly increasing"):
            make_sweep(snr=(0.0, 4.0, 4.0))

    def test_csi_mode_from_string(self, make_sweep):
        assert make_sweep(csi_mode="ls").csi_mode is Estimator.LS

    def test_to_dict(self, make_sweep):
        d = make_sweep(snr=(0, 2)).to_dict()
        assert d["snr_grid_db"] == [0.0, 2.0]
        assert d["csi_mode"] == "lmmse"
        assert d["system"]["eta"] == 6


class TestBlockStream:
    def test_same_key_same_stream(self):
        a = block_stream(7, 2, 41).standard_normal(8)
        b = block_stream(7, 2, 41).standard_normal(8)
        assert np.array_equal(a, b)

    def test_keys_are_independent(self):
        base = block_stream(7, 2, 41).standard_normal(8)
        for key in [(8, 2, 41), (7, 3, 41), (7, 2, 42)]:
            assert not np.array_equal(base, block_stream(*key).standard_normal(8))


class TestRunBlock:
    def test_deterministic(self, make_sweep):
        sweep = make_sweep(snr=(0.0, 4.0))
        assert run_block(3, 4.0, sweep) == run_block(3, 4.0, sweep)

    def test_tally_shape(self, make_sweep):
        sweep = make_sweep(snr=(0.0,))
        tally = run_block(0, 0.0, sweep)
        assert tally.bits == 20 * 6
        assert 0 <= tally.bit_errors <= tally.bits
        assert tally.mse_sample > 0

    def test_perfect_csi_at_huge_snr_is_error_free(self, make_sweep):
        sweep = make_sweep(snr=(200.0,), csi_mode=Estimator.PERFECT, block_length=200)
        for block_id in range(5):
            tally = run_block(block_id, 200.0, sweep)
            assert tally.bit_errors == 0
            assert tally.mse_sample == 0.0

    def test_estimation_only(self, make_sweep):
        sweep = make_sweep(snr=(0.0,))
        tally = run_block(0, 0.0, sweep, data=False)
        assert (tally.bit_errors, tally.bits) == (0, 0)
        assert tally.mse_sample == run_block(0, 0.0, sweep).mse_sample, "estimation phase comes first in the stream"

    def test_snr_off_grid(self, make_sweep):
        with pytest.raises(ValueError, match="not on the sweep grid"):
            run_block(0, 3.0, make_sweep(snr=(0.0, 4.0)))

    def test_explicit_snr_index(self, make_sweep):
        sweep = make_sweep(snr=(0.0, 4.0))
        assert run_block(1, 4.0, sweep, snr_index=1) == run_block(1, 4.0, sweep)


class TestRunSweep:
    def test_error_free_point_warns(self, make_sweep, caplog):
        sweep = make_sweep(snr=(200.0,), csi_mode=Estimator.PERFECT, max_blocks=3)
        with caplog.at_level(logging.WARNING, logger="smbmsim.engine"):
            (record,) = run_sweep(sweep)
        assert record.ber == 0.0
        assert record.abep_bound < 1e-12
        assert record.blocks == 3
        assert record.warning == MAX_BLOCKS_WARNING
        assert "only 0 bit errors" in caplog.text

    def test_stops_once_enough_errors(self, make_sweep):
        sweep = make_sweep(snr=(-4.0,), min_bit_errors=1, block_length=100)
        (record,) = run_sweep(sweep)
        assert record.blocks == 1, "a -4 dB block of 600 bits always has an error"
        assert record.warning == ""

    def test_min_blocks_respected(self, make_sweep):
        (record,) = run_sweep(make_sweep(snr=(-4.0,), min_bit_errors=1, min_blocks=3))
        assert record.blocks == 3

    def test_record_invariants(self, make_sweep):
        records = run_sweep(make_sweep(snr=(0.0, 4.0, 8.0)))
        for r in records:
            assert r.ber == r.bit_errors / r.bits_simulated
            assert r.bits_simulated == r.blocks * 20 * 6
            assert r.bit_errors >= 50 or r.warning
            assert r.mse_analytic > 0 and r.mse_empirical > 0
            if not r.warning:
                assert r.ber_std_error <= r.ber / math.sqrt(50) + 1e-15
        assert [r.snr_db for r in records] == [0.0, 4.0, 8.0]

    def test_abep_matches_curve(self, make_sweep):
        sweep = make_sweep(snr=(0.0, 6.0))
        assert [r.abep_bound for r in run_sweep(sweep)] == [a for _, a in run_abep_curve(sweep)]

    def test_same_seed_same_records(self, make_sweep):
        sweep = make_sweep(snr=(0.0, 4.0))
        assert [r.to_dict() for r in run_sweep(sweep)] == [r.to_dict() for r in run_sweep(sweep)]

    def test_different_seed_different_records(self, make_sweep):
        a = run_sweep(make_sweep(snr=(0.0,), master_seed=1))
        b = run_sweep(make_sweep(snr=(0.0,), master_seed=2))
        assert a[0].to_dict() != b[0].to_dict()

    def test_independent_of_worker_count(self, make_sweep):
        serial = run_sweep(make_sweep(snr=(0.0, 4.0), workers=1))
        parallel = run_sweep(make_sweep(snr=(0.0, 4.0), workers=2))
        assert [r.to_dict() for r in serial] == [r.to_dict() for r in parallel]


class TestMseSweep:
    def test_no_ber_fields(self, make_sweep):
        (record,) = run_mse_sweep(make_sweep(snr=(0.0,)), n_blocks=10)
        assert record.ber is None and record.bit_errors is None and record.abep_bound is None
        assert record.blocks == 10

    def test_rejects_zero_blocks(self, make_sweep):
        with pytest.raises(ConfigError):
            run_mse_sweep(make_sweep(), n_blocks=0)

    @pytest.mark.parametrize("csi", [Estimator.LS, Estimator.LMMSE])
    def test_empirical_close_to_analytic(self, make_sweep, csi):
        for r in run_mse_sweep(make_sweep(snr=(-4.0, 0.0, 8.0), csi_mode=csi), n_blocks=2000):
            assert abs(r.mse_empirical / r.mse_analytic - 1.0) < 0.02, f"{csi.value} at {r.snr_db} dB"

    def test_lmmse_below_ls_at_low_snr(self, make_sweep):
        grid = (-4.0, -2.0, 0.0, 2.0, 4.0)
        ls = run_mse_sweep(make_sweep(snr=grid, csi_mode=Estimator.LS), n_blocks=500)
        lmmse = run_mse_sweep(make_sweep(snr=grid, csi_mode=Estimator.LMMSE), n_blocks=500)
        for a, b in zip(ls, lmmse):
            assert b.mse_empirical < a.mse_empirical
            assert b.mse_analytic < a.mse_analytic

    def test_curves_merge_at_twelve_db(self, make_sweep):
        (ls,) = run_mse_sweep(make_sweep(snr=(12.0,), csi_mode=Estimator.LS), n_blocks=2000)
        (lmmse,) = run_mse_sweep(make_sweep(snr=(12.0,), csi_mode=Estimator.LMMSE), n_blocks=2000)
        assert abs(10 * math.log10(ls.mse_empirical / lmmse.mse_empirical)) < 0.2

    def test_perfect_csi_has_zero_mse(self, make_sweep):
        (record,) = run_mse_sweep(make_sweep(csi_mode=Estimator.PERFECT), n_blocks=5)
        assert record.mse_empirical == 0.0 == record.mse_analytic

    @pytest.mark.slow
    def test_ten_thousand_draws_within_two_percent(self, make_sweep):
        for csi in (Estimator.LS, Estimator.LMMSE):
            for r in run_mse_sweep(make_sweep(snr=tuple(range(-4, 17, 2)), csi_mode=csi), n_blocks=10_000):
                assert abs(r.mse_empirical / r.mse_analytic - 1.0) < 0.02


class TestMirrorSweep:
    def test_more_mirrors_lower_mse(self, make_sweep):
        curves = run_mirror_sweep(make_sweep(snr=(0.0, 8.0)), n_rf_values=(1, 2, 4), n_blocks=500)
        assert sorted(curves) == [1, 2, 4]
        for i in range(2):
            mse = [curves[n][i].mse_empirical for n in (1, 2, 4)]
            assert mse[0] > mse[1] > mse[2], f"MSE should fall with Nrf at point {i}: {mse}"


class TestCurveHelpers:
    def test_log_linear_interpolation(self):
        assert snr_at_ber([0.0, 10.0], [1e-1, 1e-3], 1e-2) == pytest.approx(5.0)

    def test_exact_grid_hit(self):
        assert snr_at_ber([0.0, 2.0, 4.0], [1e-1, 1e-2, 1e-3], 1e-2) == pytest.approx(2.0)

    def test_not_bracketed(self):
        assert snr_at_ber([0.0, 2.0], [1e-1, 1e-2], 1e-4) is None

    def test_zero_ber_points_skipped(self):
        assert snr_at_ber([0.0, 2.0], [1e-1, 0.0], 1e-3) is None

    def test_gap_between_curves(self):
        ref = [SweepRecord(snr_db=s, ber=b) for s, b in [(0.0, 1e-1), (10.0, 1e-3)]]
        other = [SweepRecord(snr_db=s, ber=b) for s, b in [(3.0, 1e-1), (13.0, 1e-3)]]
        assert snr_gap_db(ref, other, 1e-2) == pytest.approx(3.0)
        assert snr_gap_db(ref, other, 1e-6) is None

    def test_std_error_property(self):
        r = SweepRecord(snr_db=0.0, ber=0.01, bit_errors=100, bits_simulated=10_000)
        assert r.ber_std_error == pytest.approx(0.001)
        assert SweepRecord(snr_db=0.0).ber_std_error is None


# ─── Acceptance Sweeps ───

def _ber_sweep(make_system, kind, order, csi, grid, seed, max_blocks, min_errors=200):
    return SweepConfig(
        system=make_system(kind=kind, order=order),
        snr_grid_db=grid,
        csi_mode=csi,
        block_length=100,
        min_bit_errors=min_errors,
        max_blocks=max_blocks,
        master_seed=seed,
    )


def _straight_line_errors(cfg, snr_db, n_symbols, seed):
    """Per-symbol bit errors with a fresh channel and a fresh LMMSE estimate for every symbol."""
    rng = np.random.default_rng(seed)
    c = build_constellation(cfg.modulation)
    noise = noise_variance_for_snr(snr_db, cfg)
    errors = np.zeros(n_symbols)
    for i in range(n_symbols):
        sym, x = map_source(int_to_bits(int(rng.integers(1 << cfg.eta)), cfg.eta), cfg, c)
        h = draw_channel(cfg, 1.0, rng)
        est = estimate_channel(h, Estimator.LMMSE, PilotSpec(), noise, rng)
        y = transmit(h, sym, x.value, NoiseSpec(noise), rng)
        errors[i] = count_bit_errors(sym, detect_fast(y, est, c, cfg), cfg, c)
    return errors


def _ci95(samples, bits_per_sample):
    """(BER, half-width) from independent per-sample error counts."""
    rates = np.asarray(samples) / bits_per_sample
    return float(rates.mean()), 1.96 * float(rates.std(ddof=1)) / math.sqrt(len(rates))


class TestStraightLineAgreement:
    """Block tallies against a simulator with no block structure at all."""

    @pytest.mark.parametrize("snr_db", [0.0, 4.0])
    def test_confidence_intervals_overlap(self, make_sweep, qpsk_442, snr_db):
        sweep = make_sweep(snr=(snr_db,), block_length=100)
        blocks = [run_block(b, snr_db, sweep).bit_errors for b in range(150)]
        block_ber, block_hw = _ci95(blocks, 100 * qpsk_442.eta)

        straight = _straight_line_errors(qpsk_442, snr_db, 15_000, seed=1000 + int(snr_db))
        straight_ber, straight_hw = _ci95(straight, qpsk_442.eta)

        assert block_ber > 0 and straight_ber > 0
        assert abs(block_ber - straight_ber) <= block_hw + straight_hw, (
            f"block {block_ber:.4e} +/- {block_hw:.1e} vs straight-line {straight_ber:.4e} +/- {straight_hw:.1e}"
        )


@pytest.mark.slow
class TestAcceptance:
    """Long Monte Carlo checks of the published trends. Run with `pytest -m slow`."""

    def test_simulation_under_bound_at_medium_high_snr(self, make_system):
        """Same stopping rule as run_sweep, with per-block tallies kept for a between-block error bar.

        Errors cluster inside deep-fade blocks, so the spread is taken over blocks, not bits.
        """
        grid = (8.0, 10.0)
        sweep = _ber_sweep(make_system, "psk", 4, Estimator.PERFECT, grid, 11, 1_000_000, min_errors=1000)
        bits_per_block = sweep.block_length * sweep.system.eta
        for snr_index, (snr_db, bound) in enumerate(run_abep_curve(sweep)):
            per_block, total = [], 0
            while total < sweep.min_bit_errors and len(per_block) < sweep.max_blocks:
                per_block.append(run_block(len(per_block), snr_db, sweep, snr_index).bit_errors)
                total += per_block[-1]
            assert total >= 1000, f"only {total} errors at {snr_db} dB"
            ber, half_width = _ci95(per_block, bits_per_block)
            # The bound sits within ~10% of the true BER here.
            assert ber - half_width <= bound, f"BER {ber:.3e} +/- {half_width:.1e} above bound {bound:.3e} at {snr_db} dB"
            assert bound / ber <= 3, f"bound/BER {bound / ber:.2f} at {snr_db} dB"

    @pytest.mark.parametrize("kind,order,expected,top", [("psk", 4, 3.0, 10), ("psk", 16, 2.5, 16)])
    def test_imperfect_csi_gap(self, make_system, kind, order, expected, top):
        grid = tuple(float(s) for s in range(0, top + 1))
        perfect = run_sweep(_ber_sweep(make_system, kind, order, Estimator.PERFECT, grid, 21, 20_000))
        lmmse = run_sweep(_ber_sweep(make_system, kind, order, Estimator.LMMSE, grid, 22, 20_000))
        gap = snr_gap_db(perfect, lmmse, 1e-3)
        assert gap is not None
        assert abs(gap - expected) <= 1.0, f"gap {gap:.2f} dB"

    def test_modulation_ordering(self, make_system):
        grid = (8.0, 10.0)
        runs = {
            (kind, order): run_sweep(_ber_sweep(make_system, kind, order, Estimator.LMMSE, grid, 31, 50_000))
            for kind, order in [("psk", 4), ("psk", 8), ("psk", 16), ("qam", 16)]
        }
        for i in range(len(grid)):
            assert runs[("qam", 16)][i].ber < runs[("psk", 16)][i].ber
            assert runs[("psk", 8)][i].ber > runs[("psk", 4)][i].ber
