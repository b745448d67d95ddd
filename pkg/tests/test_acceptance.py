"""End-to-end accuracy gate for the calibration chain.

Every test prints one PASS/FAIL line with its measured numbers (run with
-s to see them live; on a failure they appear in the captured output), so
a run of this file reads as a calibration report. The heavy sweeps live in
module fixtures shared between tests; the whole file targets about five
minutes on one core.
"""

import json
import time

import numpy as np
import pytest

from skewcal import (
    ComplexSignal,
    DetConfig,
    GUARD_SYMBOLS,
    RealSignal,
    TxConfig,
    ber,
    brickwall_lowpass,
    demodulate,
    detect,
    estimate_foe,
    evm,
    fit_band_fraction,
    fractional_delay,
    frequency_shift,
    generate_symbols,
    group_delay,
    hilbert_analytic,
    reconstruct_kk,
    resample,
    run_monte_carlo,
    run_osnr_penalty,
    run_sweep,
    shaped_waveform,
    theoretical_ber_qam,
    transmit,
)
from skewcal.cli import main as cli_main

DD = ("hilbert", "kk")
GRID = [k * 1e-12 for k in range(-8, 10)]  # -8 .. +9 ps, 1 ps step
INTRINSIC_S = -3.0e-12


def report(label: str, ok: bool, detail: str) -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    return ok


@pytest.fixture(scope="module")
def clean_sweep():
    """Full-length noiseless sweep; the accuracy reference."""
    tx = TxConfig(n_symbols=32768)
    det = DetConfig(adc_bits=None, snr_db=None)
    return run_sweep(tx, det, GRID, methods=DD)


@pytest.fixture(scope="module")
def noisy_sweep():
    tx = TxConfig(n_symbols=8192)
    det = DetConfig(snr_db=25.0)
    return run_sweep(tx, det, GRID, methods=DD + ("cohd",))


@pytest.fixture(scope="module")
def sweep_54g():
    tx = TxConfig(baud_hz=54.8e9, rolloff=0.1, n_symbols=8192)
    det = DetConfig(pd_bandwidth_hz=60e9, adc_bits=None, snr_db=None)
    return run_sweep(tx, det, GRID, methods=DD)


@pytest.fixture(scope="module")
def ber_sweep():
    tx = TxConfig(n_symbols=8192)
    det = DetConfig(snr_db=11.0)
    return run_sweep(tx, det, GRID, methods=DD)


@pytest.fixture(scope="module")
def mc_summaries():
    tx = TxConfig(n_symbols=8192)
    det = DetConfig(snr_db=25.0)
    return run_monte_carlo(tx, det, 300, methods=DD)


@pytest.fixture(scope="module")
def osnr_result():
    tx = TxConfig(baud_hz=138e9, intrinsic_skew_s=0.0, n_symbols=32768)
    skews = [k * 0.2e-12 for k in range(-5, 6)]
    return run_osnr_penalty(tx, skews, target_ber=1e-2)


def test_sweep_is_linear_and_accurate(clean_sweep):
    worst = 0.0
    for r in clean_sweep.rows:
        true = r.added_skew_s + INTRINSIC_S
        for m in DD:
            worst = max(worst, abs(r.outcomes[m].skew_s - true))
    details = []
    ok = clean_sweep.n_failures == 0
    for m in DD:
        slope = clean_sweep.fit_slope[m]
        icpt = clean_sweep.fit_intercept_s[m]
        ok = ok and 0.98 <= slope <= 1.02 and -3.1e-12 <= icpt <= -2.9e-12
        details.append(f"{m} slope {slope:.4f} intercept {icpt * 1e12:+.3f} ps")
    ok = ok and worst <= 0.2e-12
    assert report("sweep linearity", ok,
                  ", ".join(details) + f", worst error {worst * 1e12:.3f} ps")


def test_reconstruction_methods_agree(clean_sweep):
    worst = max(abs(r.outcomes["hilbert"].skew_s - r.outcomes["kk"].skew_s)
                for r in clean_sweep.rows)
    assert report("method agreement", worst <= 0.05e-12,
                  f"max |hilbert - kk| {worst * 1e12:.4f} ps")


def test_dd_matches_coherent_reference(noisy_sweep):
    worst = 0.0
    for r in noisy_sweep.rows:
        co = r.outcomes["cohd"].skew_s
        for m in DD:
            worst = max(worst, abs(r.outcomes[m].skew_s - co))
    assert report("coherent cross-check", worst <= 0.2e-12,
                  f"max |dd - cohd| {worst * 1e12:.4f} ps over {len(GRID)} points")


def test_evm_minimum_marks_the_intrinsic_skew(clean_sweep, sweep_54g):
    details = []
    ok = True
    ranges = {}
    for label, res in (("34G", clean_sweep), ("54.8G", sweep_54g)):
        for m in DD:
            added = np.array([r.added_skew_s for r in res.rows])
            evms = np.array([r.outcomes[m].evm_pct for r in res.rows])
            at = added[int(np.argmin(evms))]
            ok = ok and at == pytest.approx(3e-12, abs=1e-15)
            ranges[label, m] = evms.max() - evms.min()
        details.append(f"{label} min at {at * 1e12:+.1f} ps")
    for m in DD:
        ok = ok and ranges["54.8G", m] > ranges["34G", m]
        details.append(f"{m} range {ranges['34G', m]:.1f} -> "
                       f"{ranges['54.8G', m]:.1f}%")
    assert report("EVM minimum", ok, ", ".join(details))


def test_ber_minimum_under_noise_loading(ber_sweep):
    details = []
    ok = True
    step = 1e-12
    for m in DD:
        added = np.array([r.added_skew_s for r in ber_sweep.rows])
        bers = np.array([r.outcomes[m].ber for r in ber_sweep.rows])
        at = added[int(np.argmin(bers))]
        ok = ok and abs(at - 3e-12) <= step + 1e-15
        ok = ok and 1e-3 < bers.min() < 5e-2
        details.append(f"{m} min {bers.min():.2e} at {at * 1e12:+.1f} ps")
    assert report("BER minimum", ok, ", ".join(details))


def test_monte_carlo_spread(mc_summaries):
    details = []
    ok = True
    for m in DD:
        s = mc_summaries[m]
        est = np.array(s.estimates_s)
        ok = ok and s.n == 300 and s.n_failures == 0
        ok = ok and est.min() >= -3.2e-12 and est.max() <= -2.8e-12
        ok = ok and abs(s.mean_s + 3e-12) <= 0.1e-12
        ok = ok and s.stddev_s <= 0.1e-12
        details.append(f"{m} mean {s.mean_s * 1e12:+.3f} ps "
                       f"std {s.stddev_s * 1e12:.3f} ps "
                       f"span [{est.min() * 1e12:+.3f}, {est.max() * 1e12:+.3f}]")
    assert report("repeatability", ok, ", ".join(details))


def _crossing_ps(skews_ps, penalties, level_db):
    """|skew| where the penalty first crosses level_db, linear interpolation."""
    for k in range(1, len(penalties)):
        if penalties[k - 1] < level_db <= penalties[k]:
            frac = (level_db - penalties[k - 1]) / (penalties[k] - penalties[k - 1])
            return skews_ps[k - 1] + frac * (skews_ps[k] - skews_ps[k - 1])
    return None


def test_osnr_penalty_curve(osnr_result):
    rows = {round(r.skew_s * 1e12, 3): r for r in osnr_result.rows}
    ok = all(r.attainable for r in osnr_result.rows)
    ok = ok and rows[0.0].penalty_db == 0.0
    asym = max(abs(rows[s].penalty_db - rows[-s].penalty_db)
               for s in (0.2, 0.4, 0.6, 0.8, 1.0))
    ok = ok and asym <= 0.1
    crossings = []
    for sign in (+1, -1):
        mags = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        pens = [rows[sign * s].penalty_db for s in mags]
        # nondecreasing within the 0.02 dB resolution of the OSNR search
        ok = ok and all(b - a >= -0.02 for a, b in zip(pens, pens[1:]))
        cross = _crossing_ps(mags, pens, 0.5)
        ok = ok and cross is not None and 0.3 <= cross <= 0.8
        crossings.append(cross)
    assert report(
        "OSNR penalty", ok,
        f"baseline {osnr_result.baseline_osnr_db:.2f} dB, asym {asym:.3f} dB, "
        f"0.5 dB at +{crossings[0]:.2f} / -{crossings[1]:.2f} ps")


def test_invariant_battery_stays_fast():
    t0 = time.monotonic()
    rng = np.random.default_rng(11)
    ok = True

    # analytic signal kills the negative-frequency half
    x = RealSignal(rng.normal(size=4096), 1.0)
    spec = np.fft.fft(hilbert_analytic(x).samples)
    f = np.fft.fftfreq(4096)
    neg = np.max(np.abs(spec[(f < 0) & ~np.isclose(f, -0.5)]))
    ok = ok and neg <= 1e-9 * np.max(np.abs(spec))

    # two fractional delays compose into their sum
    z = rng.normal(size=4096) + 1j * rng.normal(size=4096)
    sig = brickwall_lowpass(ComplexSignal(z, 1.0), 0.4)
    twice = fractional_delay(fractional_delay(sig, 0.31), 1.94)
    once = fractional_delay(sig, 2.25)
    ok = ok and np.max(np.abs(twice.samples - once.samples)) <= 1e-9

    # group delay reads an injected delay to well under a sample
    t = np.arange(256.0)
    pulse = lambda tau: (np.exp(-0.5 * ((t - 120 - tau) / 2.5) ** 2)
                         + 0.3 * np.exp(-0.5 * ((t - 124 - tau) / 2.5) ** 2))
    gd_err = abs(group_delay(pulse(1.7), 1.0, 0.4)
                 - group_delay(pulse(0.0), 1.0, 0.4) - 1.7)
    ok = ok and gd_err <= 0.01

    # the skew readout shrugs off receive gain and carrier phase
    tx = TxConfig(n_symbols=8192, added_skew_s=2e-12, intrinsic_skew_s=0.0)
    frame, field = transmit(tx)
    current, f_tone = detect(field, DetConfig(adc_bits=None, snr_db=None))
    rec, _ = reconstruct_kk(resample(current, 8 * tx.baud_hz), f_tone,
                            tx.baud_hz, tx.rolloff)
    rx = resample(rec, 2 * tx.baud_hz)
    bf = fit_band_fraction(tx.rolloff)
    base = demodulate(rx, frame, "kk", band_fraction=bf).estimate.skew_s
    drift = 0.0
    for factor in (3.7, np.exp(0.7j), 2.2 * np.exp(-1.1j)):
        mod = ComplexSignal(rx.samples * factor, rx.sample_rate_hz)
        got = demodulate(mod, frame, "kk", band_fraction=bf).estimate.skew_s
        drift = max(drift, abs(got - base))
    ok = ok and drift <= 0.005e-12

    # frequency-offset search lands within half a megahertz
    cfg = TxConfig(n_symbols=4096, intrinsic_skew_s=0.0, prbs_seed=1)
    sig = shaped_waveform(generate_symbols(cfg), cfg.rolloff, cfg.sps_dac,
                          cfg.baud_hz)
    foe_err = abs(estimate_foe(frequency_shift(sig, -500e6), 460e6, 17e9)
                  - 500e6)
    ok = ok and foe_err <= 0.5e6

    # EVM under AWGN equals the noise fraction; BER tracks the closed form
    small = generate_symbols(TxConfig(n_symbols=4096, intrinsic_skew_s=0.0))
    sigma = 10 ** (-20 / 20)
    noise = sigma / np.sqrt(2) * (rng.normal(size=len(small))
                                  + 1j * rng.normal(size=len(small)))
    evm_err = abs(evm(small.symbols + noise, small) - 10.0)
    ok = ok and evm_err <= 0.3
    sigma = np.sqrt(0.5 / 10 ** 1.4)
    noisy = small.symbols + sigma * (rng.normal(size=len(small))
                                     + 1j * rng.normal(size=len(small)))
    ratio = ber(noisy, small) / theoretical_ber_qam(16, 14.0)
    ok = ok and 1 / 1.3 < ratio < 1.3

    elapsed = time.monotonic() - t0
    ok = ok and elapsed <= 300.0
    assert report(
        "invariants", ok,
        f"neg-bin {neg:.1e}, gd err {gd_err:.1e} samp, gain/phase drift "
        f"{drift * 1e12:.4f} ps, foe err {foe_err / 1e6:.3f} MHz, evm err "
        f"{evm_err:.2f} pp, ber ratio {ratio:.2f}, {elapsed:.0f} s")


def test_capture_file_round_trip(tmp_path_factory):
    root = tmp_path_factory.mktemp("loopback")
    cfg = root / "config.yaml"
    cfg.write_text(
        "tx:\n  n_symbols: 4096\n  added_skew_ps: 1.5\n"
        "det:\n  adc_bits: null\n  snr_db: null\n"
        "run:\n  figures: false\n",
        encoding="utf-8",
    )
    prefix = root / "cap" / "record"
    assert cli_main(["simulate", "-c", str(cfg), "--out-dir", str(root / "sim"),
                     "--capture-out", str(prefix)]) == 0
    assert cli_main(["calibrate", f"{prefix}.f64", f"{prefix}.json",
                     "--out-dir", str(root / "cal")]) == 0
    sim = json.loads((root / "sim" / "estimate.json").read_text())["estimates"]
    cal = json.loads((root / "cal" / "estimate.json").read_text())["estimates"]
    worst = max(abs(cal[m]["skew_ps"] - sim[m]["skew_ps"]) for m in DD)
    same = all(cal[m][k] == sim[m][k]
               for m in DD for k in ("skew_ps", "evm_pct", "ber", "foe_ghz"))
    assert report("capture round trip", same and worst == 0.0,
                  f"max skew difference {worst:.3e} ps, fields identical: {same}")
