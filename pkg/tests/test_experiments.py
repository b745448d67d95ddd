"""Experiment runner and artifact emitter tests.

Noise is disabled in most runs so the expected fits are known tightly;
the Monte-Carlo spread bounds reflect the per-method data-dependent
reconstruction error that remains without any noise at all.
"""

import csv
import io
import json

import numpy as np
import pytest

from skewcal import (
    DetConfig,
    DspError,
    TxConfig,
    config_payload,
    mc_to_csv,
    mc_to_json,
    osnr_from_esn0,
    osnr_to_csv,
    osnr_to_json,
    run_monte_carlo,
    run_osnr_penalty,
    run_sweep,
    sweep_to_csv,
    sweep_to_json,
)


@pytest.fixture(scope="module")
def tx():
    return TxConfig(n_symbols=4096, intrinsic_skew_s=0.0)


@pytest.fixture(scope="module")
def det():
    return DetConfig(adc_bits=None, snr_db=None)


@pytest.fixture(scope="module")
def sweep(tx, det):
    return run_sweep(tx, det, [2e-12, -4e-12, 0.0], methods=("hilbert", "kk"))


@pytest.fixture(scope="module")
def mc(det):
    tx = TxConfig(n_symbols=4096, added_skew_s=2e-12, intrinsic_skew_s=0.0)
    return run_monte_carlo(tx, det, 8, methods=("hilbert", "kk"))


@pytest.fixture(scope="module")
def osnr(tx):
    return run_osnr_penalty(tx, [0.0, 0.5e-12, -0.5e-12], 1e-2)


class TestRunSweep:
    def test_rows_sorted_by_skew(self, sweep):
        got = [r.added_skew_s for r in sweep.rows]
        assert got == sorted(got)
        assert got == [-4e-12, 0.0, 2e-12]

    def test_fits_are_near_identity(self, sweep):
        for m in ("hilbert", "kk"):
            assert sweep.fit_slope[m] == pytest.approx(1.0, abs=0.02)
            assert abs(sweep.fit_intercept_s[m]) < 0.05e-12
            assert sweep.max_fit_error_s[m] < 0.01e-12
        assert sweep.n_failures == 0

    def test_intrinsic_skew_becomes_intercept(self, det):
        tx = TxConfig(n_symbols=4096, intrinsic_skew_s=-3e-12)
        res = run_sweep(tx, det, [0.0, 2e-12], methods=("kk",))
        assert res.fit_intercept_s["kk"] == pytest.approx(-3e-12, abs=0.05e-12)

    def test_failed_point_becomes_error_row(self, tx, det):
        # 20 ps exceeds the transmitter skew bound at 34 GBd
        res = run_sweep(tx, det, [0.0, 2e-12, 20e-12], methods=("kk",))
        assert res.n_failures == 1
        bad = res.rows[-1]
        assert bad.added_skew_s == 20e-12
        assert bad.outcomes == {}
        assert "half a symbol period" in bad.error
        # the fit still exists, computed from the two good rows
        assert res.fit_slope["kk"] == pytest.approx(1.0, abs=0.02)

    def test_rejects_empty_grid(self, tx, det):
        with pytest.raises(ValueError):
            run_sweep(tx, det, [])


class TestRunMonteCarlo:
    def test_summary_statistics(self, mc):
        for m, bound_ps in (("hilbert", 0.06), ("kk", 0.02)):
            s = mc[m]
            assert s.n == 8
            assert s.n_failures == 0
            assert s.mean_s == pytest.approx(2e-12, abs=0.05e-12)
            assert s.stddev_s < bound_ps * 1e-12
            assert s.min_s <= s.mean_s <= s.max_s
            assert sum(s.counts) == s.n
            assert len(s.bin_edges_s) == len(s.counts) + 1

    def test_trials_differ(self, mc):
        # per-trial reseeding must actually change the data
        vals = mc["kk"].estimates_s
        assert len(set(vals)) == len(vals)

    def test_rejects_tiny_run(self, tx, det):
        with pytest.raises(ValueError):
            run_monte_carlo(tx, det, 1)

    def test_hopeless_configuration_aborts(self, tx):
        # without a usable carrier every trial fails phase retrieval
        weak = DetConfig(cspr_db=-30.0, adc_bits=None, snr_db=None)
        with pytest.raises(DspError, match="trials failed"):
            run_monte_carlo(tx, weak, 4, methods=("kk",))


class TestRunOsnrPenalty:
    def test_baseline_row_is_exact_zero(self, osnr):
        zero = next(r for r in osnr.rows if r.skew_s == 0.0)
        assert zero.penalty_db == 0.0
        assert zero.attainable
        assert zero.required_osnr_db == osnr.baseline_osnr_db

    def test_rows_sorted_and_attainable(self, osnr):
        got = [r.skew_s for r in osnr.rows]
        assert got == sorted(got)
        assert all(r.attainable for r in osnr.rows)
        for r in osnr.rows:
            assert r.ber_achieved == pytest.approx(1e-2, rel=0.5)
            assert r.required_osnr_db == pytest.approx(
                osnr_from_esn0(r.required_esn0_db, 34e9), abs=1e-9
            )

    def test_rejects_grid_without_zero(self, tx):
        with pytest.raises(ValueError, match="include 0"):
            run_osnr_penalty(tx, [0.5e-12], 1e-2)

    def test_rejects_bad_target(self, tx):
        with pytest.raises(ValueError):
            run_osnr_penalty(tx, [0.0], 0.7)

    def test_reference_bandwidth_conversion(self):
        # 34 GBd against the 12.5 GHz reference: +4.35 dB
        assert osnr_from_esn0(10.0, 34e9) == pytest.approx(14.346, abs=0.01)


class TestEmitters:
    def test_sweep_csv_round_trip(self, sweep):
        text = sweep_to_csv(sweep)
        rows = list(csv.reader(io.StringIO(text)))
        header, data = rows[0], rows[1:]
        assert header[0] == "added_skew_ps"
        assert "est_skew_kk_ps" in header
        assert header[-1] == "error"
        assert len(data) == len(sweep.rows)
        k = header.index("est_skew_kk_ps")
        got = [float(r[k]) for r in data]
        want = [r.outcomes["kk"].skew_s * 1e12 for r in sweep.rows]
        np.testing.assert_allclose(got, want, rtol=0, atol=0)  # repr round trip

    def test_sweep_csv_error_row_cells_empty(self, tx, det):
        res = run_sweep(tx, det, [0.0, 20e-12], methods=("kk",))
        rows = list(csv.reader(io.StringIO(sweep_to_csv(res))))
        bad = rows[-1]
        assert bad[1] == ""  # no estimate
        assert "half a symbol period" in bad[-1]

    def test_sweep_json_schema(self, sweep):
        doc = json.loads(sweep_to_json(sweep, config_payload()))
        assert doc["methods"] == ["hilbert", "kk"]
        assert doc["n_failures"] == 0
        assert len(doc["rows"]) == 3
        fit = doc["fit"]["kk"]
        assert set(fit) == {"slope", "intercept_ps", "max_error_ps"}
        assert "version" in doc["config"]

    def test_sweep_json_is_deterministic(self, tx, det):
        a = run_sweep(tx, det, [0.0, 2e-12], methods=("kk",))
        b = run_sweep(tx, det, [0.0, 2e-12], methods=("kk",))
        assert sweep_to_json(a) == sweep_to_json(b)
        assert sweep_to_csv(a) == sweep_to_csv(b)

    def test_mc_emitters(self, det):
        tx = TxConfig(n_symbols=4096, added_skew_s=2e-12, intrinsic_skew_s=0.0)
        mc = run_monte_carlo(tx, det, 4, methods=("kk",))
        rows = list(csv.reader(io.StringIO(mc_to_csv(mc))))
        assert rows[0] == ["trial", "est_skew_kk_ps"]
        assert len(rows) == 5
        doc = json.loads(mc_to_json(mc, config_payload(tx=tx, det=det)))
        block = doc["methods"]["kk"]
        assert block["n"] == 4
        assert len(block["bin_edges_ps"]) == len(block["counts"]) + 1
        assert doc["config"]["tx"]["n_symbols"] == 4096

    def test_osnr_emitters(self, tx):
        res = run_osnr_penalty(tx, [0.0], 1e-2)
        rows = list(csv.reader(io.StringIO(osnr_to_csv(res))))
        assert rows[0][0] == "skew_ps"
        assert rows[1][-1] == "true"
        doc = json.loads(osnr_to_json(res))
        assert doc["target_ber"] == 1e-2
        assert doc["reference_bandwidth_ghz"] == 12.5
        assert doc["rows"][0]["penalty_db"] == 0.0

    def test_config_payload_contents(self, tx, det):
        payload = config_payload(tx=tx, det=det, extra_field=7)
        assert payload["tx"]["baud_hz"] == 34e9
        assert payload["det"]["cspr_db"] == 13.5
        assert payload["extra_field"] == 7
        assert isinstance(payload["version"], str)
