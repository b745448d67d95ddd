"""Coherent reference path tests, including cross-checks against the
direct-detection estimates on the same transmitter realization."""

import numpy as np
import pytest

from skewcal import (
    DetConfig,
    TxConfig,
    coherent_receive,
    cohd_trial,
    run_trial,
    transmit,
)


@pytest.fixture(scope="module")
def tx():
    return TxConfig(n_symbols=4096, added_skew_s=3e-12, intrinsic_skew_s=0.0)


@pytest.fixture(scope="module")
def realization(tx):
    return transmit(tx)


class TestCoherentReceive:
    def test_transparent_by_default(self, realization):
        _, field = realization
        out = coherent_receive(field)
        np.testing.assert_array_equal(out.samples, field.samples)

    def test_lo_offset_is_exact_frequency_shift(self, realization):
        _, field = realization
        out = coherent_receive(field, lo_offset_hz=1e8)
        want = field.samples * np.exp(-2j * np.pi * 1e8 * field.times())
        np.testing.assert_allclose(out.samples, want, atol=1e-12)

    def test_noise_power_matches_snr(self, realization):
        _, field = realization
        out = coherent_receive(field, snr_db=20.0, seed=5)
        p = np.mean(np.abs(field.samples) ** 2)
        snr = 10 * np.log10(p / np.var(out.samples - field.samples))
        assert snr == pytest.approx(20.0, abs=0.1)

    def test_noise_is_seeded(self, realization):
        _, field = realization
        a = coherent_receive(field, snr_db=20.0, seed=5)
        b = coherent_receive(field, snr_db=20.0, seed=5)
        np.testing.assert_array_equal(a.samples, b.samples)
        c = coherent_receive(field, snr_db=20.0, seed=6)
        assert not np.array_equal(a.samples, c.samples)


class TestCohdTrial:
    def test_reads_added_skew(self, tx, realization):
        frame, field = realization
        metrics = cohd_trial(field, frame, tx)
        assert metrics.skew_ps == pytest.approx(3.0, abs=0.01)
        assert metrics.method == "cohd"
        assert metrics.ber == 0.0

    def test_estimate_survives_lo_offset(self, tx, realization):
        frame, field = realization
        base = cohd_trial(field, frame, tx)
        offset = cohd_trial(field, frame, tx, lo_offset_hz=1e8)
        assert abs(offset.skew_ps - base.skew_ps) <= 0.05
        # the receiver downconverts with the LO, so the residual carrier
        # sits at minus the LO offset
        assert offset.estimate.foe_hz == pytest.approx(-1e8, abs=2e6)

    def test_skew_shows_in_reported_evm(self, realization):
        # the metrics filter is strictly complex, so 3 ps of skew must
        # leave a clear EVM signature even on a clean field
        frame, field = realization
        tx0 = TxConfig(n_symbols=4096, added_skew_s=0.0, intrinsic_skew_s=0.0)
        frame0, field0 = transmit(tx0)
        with_skew = cohd_trial(field, frame, TxConfig(n_symbols=4096,
                                                      added_skew_s=3e-12,
                                                      intrinsic_skew_s=0.0))
        without = cohd_trial(field0, frame0, tx0)
        assert with_skew.estimate.evm_pct > 5.0
        assert without.estimate.evm_pct < 0.5


class TestMethodAgreement:
    def test_direct_detection_agrees_with_coherent(self, tx):
        det = DetConfig(adc_bits=None, snr_db=None)
        res = run_trial(tx, det)
        assert set(res) == {"hilbert", "kk", "cohd"}
        ref = res["cohd"].skew_ps
        for m in ("hilbert", "kk"):
            assert abs(res[m].skew_ps - ref) <= 0.05

    def test_unknown_method_rejected(self, tx):
        with pytest.raises(ValueError, match="unknown"):
            run_trial(tx, DetConfig(), methods=("kk", "homodyne"))
