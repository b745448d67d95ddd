"""Calibration experiments: skew sweeps, Monte-Carlo statistics, OSNR penalty.

Each runner is a deterministic batch over pipeline trials, returning plain
result records; CSV and JSON emitters live here too so every artifact
carries its full configuration. Times cross the serialization boundary in
picoseconds and frequencies in gigahertz; everything in memory stays in
seconds and hertz.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from ._version import __version__
from .channel import DetConfig
from .cohd import coherent_receive
from .pipeline import DD_METHODS, run_trial, transmit
from .rxdsp import ber, carrier_recover, synchronize, wiener_equalize_complex
from .txsim import TxConfig
from .waveform import DspError, resample

__all__ = [
    "MethodOutcome",
    "SweepRow",
    "SweepResult",
    "McSummary",
    "OsnrRow",
    "OsnrResult",
    "run_sweep",
    "run_monte_carlo",
    "run_osnr_penalty",
    "osnr_from_esn0",
    "sweep_to_csv",
    "sweep_to_json",
    "mc_to_csv",
    "mc_to_json",
    "osnr_to_csv",
    "osnr_to_json",
    "config_payload",
]

OSNR_REF_BANDWIDTH_HZ = 12.5e9
_HIST_BINS = 20


@dataclass(frozen=True)
class MethodOutcome:
    skew_s: float
    evm_pct: float
    ber: float
    foe_hz: float
    residual_error: float


@dataclass(frozen=True)
class SweepRow:
    added_skew_s: float
    outcomes: dict[str, MethodOutcome]
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    """Estimate-versus-added-skew sweep with per-method OLS line fits."""

    methods: tuple[str, ...]
    rows: tuple[SweepRow, ...]
    fit_slope: dict[str, float | None]
    fit_intercept_s: dict[str, float | None]
    max_fit_error_s: dict[str, float | None]
    n_failures: int


@dataclass(frozen=True)
class McSummary:
    """Distribution of repeated skew estimates for one method."""

    method: str
    n: int
    mean_s: float
    stddev_s: float
    min_s: float
    max_s: float
    bin_edges_s: tuple[float, ...]
    counts: tuple[int, ...]
    estimates_s: tuple[float, ...]
    n_failures: int


@dataclass(frozen=True)
class OsnrRow:
    skew_s: float
    required_esn0_db: float
    required_osnr_db: float
    penalty_db: float
    ber_achieved: float
    attainable: bool


@dataclass(frozen=True)
class OsnrResult:
    rows: tuple[OsnrRow, ...]
    target_ber: float
    baseline_osnr_db: float


def _fit_line(pairs: list[tuple[float, float]]):
    if len(pairs) < 2:
        return None, None, None
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    err = np.max(np.abs(y - (slope * x + intercept)))
    return float(slope), float(intercept), float(err)


def run_sweep(tx: TxConfig, det: DetConfig, skews,
              methods: tuple[str, ...] = ("hilbert", "kk", "cohd"),
              cohd_esn0_db: float | None = None, n_taps: int = 65,
              band_fraction: float | None = None, block_len: int = 256,
              progress: Callable[[str], None] | None = None) -> SweepResult:
    """One trial per added-skew value, plus per-method line fits.

    A failed trial becomes a row with its error message and drops out of
    the fits; it never aborts the sweep. Rows come back sorted by added
    skew regardless of input order.
    """
    skews = sorted(float(s) for s in skews)
    if not skews:
        raise ValueError("skew list must not be empty")
    rows: list[SweepRow] = []
    for idx, skew in enumerate(skews):
        if progress is not None:
            progress(f"sweep point {idx + 1}/{len(skews)}: "
                     f"added skew {skew * 1e12:+.2f} ps")
        try:
            tx_row = replace(tx, added_skew_s=skew)
            trial = run_trial(tx_row, det, methods, cohd_esn0_db=cohd_esn0_db,
                              n_taps=n_taps, band_fraction=band_fraction,
                              block_len=block_len)
        except (DspError, ValueError) as exc:
            rows.append(SweepRow(skew, {}, error=str(exc)))
            continue
        outcomes = {
            m: MethodOutcome(
                skew_s=t.estimate.skew_s,
                evm_pct=t.estimate.evm_pct,
                ber=t.ber,
                foe_hz=t.estimate.foe_hz,
                residual_error=t.estimate.residual_error,
            )
            for m, t in trial.items()
        }
        rows.append(SweepRow(skew, outcomes))

    slope: dict[str, float | None] = {}
    intercept: dict[str, float | None] = {}
    max_err: dict[str, float | None] = {}
    for m in methods:
        pairs = [(r.added_skew_s, r.outcomes[m].skew_s)
                 for r in rows if m in r.outcomes]
        slope[m], intercept[m], max_err[m] = _fit_line(pairs)
    return SweepResult(
        methods=tuple(methods),
        rows=tuple(rows),
        fit_slope=slope,
        fit_intercept_s=intercept,
        max_fit_error_s=max_err,
        n_failures=sum(1 for r in rows if r.error is not None),
    )


def run_monte_carlo(tx: TxConfig, det: DetConfig, n_trials: int,
                    methods: tuple[str, ...] = DD_METHODS, n_taps: int = 65,
                    band_fraction: float | None = None, block_len: int = 256,
                    progress: Callable[[str], None] | None = None,
                    ) -> dict[str, McSummary]:
    """Repeated estimation at the configured skew under fresh noise and data.

    Trial t uses prbs_seed + t and rng_seed + t, so both the symbol pattern
    and every noise source differ between trials while the whole batch
    stays reproducible. A trial that fails is dropped from all methods;
    more than 5 percent failures abort the run.
    """
    if n_trials < 2:
        raise ValueError("n_trials must be at least 2")
    estimates: dict[str, list[float]] = {m: [] for m in methods}
    failures = 0
    for t in range(n_trials):
        if progress is not None and t % 25 == 0:
            progress(f"trial {t + 1}/{n_trials}")
        tx_t = replace(tx, prbs_seed=tx.prbs_seed + t)
        det_t = replace(det, rng_seed=det.rng_seed + t)
        try:
            trial = run_trial(tx_t, det_t, methods, n_taps=n_taps,
                              band_fraction=band_fraction, block_len=block_len)
        except (DspError, ValueError):
            failures += 1
            continue
        for m in methods:
            estimates[m].append(trial[m].estimate.skew_s)
    if failures > 0.05 * n_trials:
        raise DspError(
            f"{failures} of {n_trials} trials failed; the configuration "
            "does not support reliable estimation"
        )
    summaries: dict[str, McSummary] = {}
    for m in methods:
        vals = np.array(estimates[m])
        counts, edges = np.histogram(vals, bins=_HIST_BINS)
        summaries[m] = McSummary(
            method=m,
            n=len(vals),
            mean_s=float(vals.mean()),
            stddev_s=float(vals.std(ddof=1)),
            min_s=float(vals.min()),
            max_s=float(vals.max()),
            bin_edges_s=tuple(float(e) for e in edges),
            counts=tuple(int(c) for c in counts),
            estimates_s=tuple(float(v) for v in vals),
            n_failures=failures,
        )
    return summaries


def _cohd_ber(field, frame, baud_hz: float, esn0_db: float, seed: int,
              n_taps: int, block_len: int) -> float:
    """BER through the ideal coherent path at a given symbol SNR."""
    sps = field.sample_rate_hz / baud_hz
    rx = coherent_receive(field, 0.0, esn0_db - 10.0 * np.log10(sps), seed)
    rx = resample(rx, 2.0 * baud_hz)
    aligned, _, _ = synchronize(rx, frame)
    clean = carrier_recover(aligned, frame, block_len)
    _, eq = wiener_equalize_complex(clean, frame, n_taps)
    return ber(eq, frame)


def osnr_from_esn0(esn0_db: float, baud_hz: float) -> float:
    """Symbol SNR to OSNR in the 12.5 GHz reference bandwidth, single pol."""
    return esn0_db + 10.0 * np.log10(baud_hz / OSNR_REF_BANDWIDTH_HZ)


def run_osnr_penalty(tx: TxConfig, skews, target_ber: float,
                     esn0_lo_db: float = 6.0, esn0_hi_db: float = 26.0,
                     tol_db: float = 0.02, n_taps: int = 65,
                     block_len: int = 256,
                     progress: Callable[[str], None] | None = None,
                     ) -> OsnrResult:
    """Required OSNR versus transmitter skew at a target BER.

    For each skew the symbol SNR hitting target_ber on the coherent path
    is bisected; the identical noise sequence (same seed, scaled) is used
    for every evaluation, so the curve is smooth in SNR and symmetric
    skews see identical noise. The penalty is referenced to the skew-0 row,
    which therefore must be on the grid.
    """
    skews = sorted(float(s) for s in skews)
    if not any(s == 0.0 for s in skews):
        raise ValueError("the skew grid must include 0 for the penalty baseline")
    if not 0 < target_ber < 0.5:
        raise ValueError("target_ber must be in (0, 0.5)")

    def solve(skew: float):
        tx_row = replace(tx, added_skew_s=skew)
        frame, field = transmit(tx_row)

        def f(esn0: float) -> float:
            return _cohd_ber(field, frame, tx.baud_hz, esn0, det_seed,
                             n_taps, block_len)

        lo, hi = esn0_lo_db, esn0_hi_db
        if f(lo) < target_ber or f(hi) > target_ber:
            return None
        while hi - lo > tol_db:
            mid = 0.5 * (lo + hi)
            if f(mid) > target_ber:
                lo = mid
            else:
                hi = mid
        esn0 = 0.5 * (lo + hi)
        return esn0, f(esn0)

    det_seed = 0
    baseline = solve(0.0)
    if baseline is None:
        raise ValueError(
            "target BER is not reachable inside the SNR bracket at zero skew"
        )
    baseline_osnr = osnr_from_esn0(baseline[0], tx.baud_hz)
    rows: list[OsnrRow] = []
    for idx, skew in enumerate(skews):
        if progress is not None:
            progress(f"skew point {idx + 1}/{len(skews)}: {skew * 1e12:+.2f} ps")
        solved = baseline if skew == 0.0 else solve(skew)
        if solved is None:
            rows.append(OsnrRow(skew, float("nan"), float("nan"),
                                float("nan"), float("nan"), False))
            continue
        esn0, achieved = solved
        osnr = osnr_from_esn0(esn0, tx.baud_hz)
        rows.append(OsnrRow(skew, esn0, osnr, osnr - baseline_osnr,
                            achieved, True))
    return OsnrResult(tuple(rows), target_ber, baseline_osnr)


# ---------------------------------------------------------------- emitters

def config_payload(tx: TxConfig | None = None, det: DetConfig | None = None,
                   **extra) -> dict:
    """Resolved-configuration block embedded in every artifact."""
    payload: dict = {"version": __version__}
    if tx is not None:
        payload["tx"] = asdict(tx)
    if det is not None:
        payload["det"] = asdict(det)
    payload.update(extra)
    return payload


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    return repr(float(x))


def sweep_to_csv(result: SweepResult) -> str:
    header = ["added_skew_ps"]
    for m in result.methods:
        header += [f"est_skew_{m}_ps", f"evm_{m}_pct", f"ber_{m}",
                   f"foe_{m}_ghz", f"residual_{m}"]
    header.append("error")
    rows = []
    for r in result.rows:
        row = [_num(r.added_skew_s * 1e12)]
        for m in result.methods:
            o = r.outcomes.get(m)
            if o is None:
                row += [""] * 5
            else:
                row += [_num(o.skew_s * 1e12), _num(o.evm_pct), _num(o.ber),
                        _num(o.foe_hz / 1e9), _num(o.residual_error)]
        row.append(r.error or "")
        rows.append(row)
    return _csv_text(header, rows)


def sweep_to_json(result: SweepResult, config: dict | None = None) -> str:
    def fit_block(m: str):
        if result.fit_slope[m] is None:
            return None
        return {
            "slope": result.fit_slope[m],
            "intercept_ps": result.fit_intercept_s[m] * 1e12,
            "max_error_ps": result.max_fit_error_s[m] * 1e12,
        }

    doc = {
        "config": config or {},
        "methods": list(result.methods),
        "fit": {m: fit_block(m) for m in result.methods},
        "n_failures": result.n_failures,
        "rows": [
            {
                "added_skew_ps": r.added_skew_s * 1e12,
                "outcomes": {
                    m: {
                        "est_skew_ps": o.skew_s * 1e12,
                        "evm_pct": o.evm_pct,
                        "ber": o.ber,
                        "foe_ghz": o.foe_hz / 1e9,
                        "residual": o.residual_error,
                    }
                    for m, o in r.outcomes.items()
                },
                "error": r.error,
            }
            for r in result.rows
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def mc_to_csv(summaries: dict[str, McSummary]) -> str:
    methods = list(summaries)
    header = ["trial"] + [f"est_skew_{m}_ps" for m in methods]
    n = max(s.n for s in summaries.values())
    rows = []
    for t in range(n):
        row: list = [t]
        for m in methods:
            est = summaries[m].estimates_s
            row.append(_num(est[t] * 1e12) if t < len(est) else "")
        rows.append(row)
    return _csv_text(header, rows)


def mc_to_json(summaries: dict[str, McSummary],
               config: dict | None = None) -> str:
    doc = {
        "config": config or {},
        "methods": {
            m: {
                "n": s.n,
                "mean_ps": s.mean_s * 1e12,
                "stddev_ps": s.stddev_s * 1e12,
                "min_ps": s.min_s * 1e12,
                "max_ps": s.max_s * 1e12,
                "bin_edges_ps": [e * 1e12 for e in s.bin_edges_s],
                "counts": list(s.counts),
                "n_failures": s.n_failures,
            }
            for m, s in summaries.items()
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def osnr_to_csv(result: OsnrResult) -> str:
    header = ["skew_ps", "required_esn0_db", "required_osnr_db",
              "penalty_db", "ber_achieved", "attainable"]
    rows = []
    for r in result.rows:
        if r.attainable:
            rows.append([_num(r.skew_s * 1e12), _num(r.required_esn0_db),
                         _num(r.required_osnr_db), _num(r.penalty_db),
                         _num(r.ber_achieved), "true"])
        else:
            rows.append([_num(r.skew_s * 1e12), "", "", "", "", "false"])
    return _csv_text(header, rows)


def osnr_to_json(result: OsnrResult, config: dict | None = None) -> str:
    doc = {
        "config": config or {},
        "target_ber": result.target_ber,
        "reference_bandwidth_ghz": OSNR_REF_BANDWIDTH_HZ / 1e9,
        "baseline_osnr_db": result.baseline_osnr_db,
        "rows": [
            {
                "skew_ps": r.skew_s * 1e12,
                "required_esn0_db": r.required_esn0_db if r.attainable else None,
                "required_osnr_db": r.required_osnr_db if r.attainable else None,
                "penalty_db": r.penalty_db if r.attainable else None,
                "ber_achieved": r.ber_achieved if r.attainable else None,
                "attainable": r.attainable,
            }
            for r in result.rows
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)
