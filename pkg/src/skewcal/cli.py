"""Command-line front end.

Subcommands wrap the experiment runners and the single-trial pipeline.
Configuration is a YAML document with three flat sections, tx / det / run,
whose keys mirror the config dataclasses but carry user-facing units in
their names (ps, GHz, dB); values convert to seconds and hertz at this
boundary and nowhere else. `--set section.key=value` overrides file
values, dedicated flags override both.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 DSP failure
(synchronization or frequency estimation), 5 internal error. Failures
print a machine-readable JSON object to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from ._version import __version__
from .channel import DetConfig
from .experiments import (
    config_payload,
    mc_to_csv,
    mc_to_json,
    osnr_to_csv,
    osnr_to_json,
    run_monte_carlo,
    run_osnr_penalty,
    run_sweep,
    sweep_to_csv,
    sweep_to_json,
)
from .pipeline import DD_METHODS, cohd_trial, detect, estimate_from_capture, transmit
from .txsim import TxConfig, generate_symbols
from .waveform import DspError, RealSignal

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DSP = 4
EXIT_INTERNAL = 5

_ALL_METHODS = ("hilbert", "kk", "cohd")
_SWEEP_DEFAULT_PS = tuple(float(s) for s in range(-8, 10))
_OSNR_DEFAULT_PS = (0.0, 0.2, -0.2, 0.4, -0.4, 0.6, -0.6, 0.8, -0.8, 1.0, -1.0)

_SIDECAR_REQUIRED = ("sample_rate_hz", "baud_hz", "tone_offset_hz_coarse",
                     "rolloff", "mod_order", "prbs_seed")


class ConfigError(Exception):
    """Invalid configuration; carries every problem found, not just the first."""

    def __init__(self, messages: list[str]):
        super().__init__("; ".join(messages))
        self.messages = messages


class IngestError(Exception):
    """Unreadable or structurally broken input file."""


@dataclass(frozen=True)
class RunConfig:
    methods: tuple[str, ...]
    n_taps: int
    band_fraction: float | None
    block_len: int
    skews_ps: tuple[float, ...]
    n_trials: int
    target_ber: float
    cohd_esn0_db: float | None
    lo_offset_mhz: float
    out_dir: str
    figures: bool


def _field(section: dict, sec_name: str, name: str, errors: list[str], *,
           default, nullable: bool = False, integer: bool = False,
           boolean: bool = False, minimum=None, maximum=None,
           choices=None, exclusive_min: bool = False):
    if name not in section:
        return default
    val = section.pop(name)
    where = f"{sec_name}.{name}"
    if val is None:
        if nullable:
            return None
        errors.append(f"{where}: must not be null")
        return default
    if boolean:
        if not isinstance(val, bool):
            errors.append(f"{where}: must be true or false")
            return default
        return val
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        errors.append(f"{where}: must be a number")
        return default
    if integer and not isinstance(val, int):
        errors.append(f"{where}: must be an integer")
        return default
    if choices is not None and val not in choices:
        errors.append(f"{where}: must be one of {sorted(choices)}")
        return default
    if minimum is not None and (val <= minimum if exclusive_min else val < minimum):
        bound = "greater than" if exclusive_min else "at least"
        errors.append(f"{where}: must be {bound} {minimum}")
        return default
    if maximum is not None and val > maximum:
        errors.append(f"{where}: must be at most {maximum}")
        return default
    return val


def _leftover_keys(section: dict, sec_name: str, errors: list[str]) -> None:
    for key in section:
        errors.append(f"{sec_name}.{key}: unknown key")


def _parse_tx(section: dict, errors: list[str]) -> dict:
    sec = dict(section)
    out = {}
    baud_ghz = _field(sec, "tx", "baud_ghz", errors, default=34.0,
                      minimum=0, exclusive_min=True)
    out["baud_hz"] = baud_ghz * 1e9
    out["mod_order"] = _field(sec, "tx", "mod_order", errors, default=16,
                              integer=True, choices={4, 16, 64})
    out["rolloff"] = _field(sec, "tx", "rolloff", errors, default=0.2,
                            minimum=0, maximum=1)
    out["sps_dac"] = _field(sec, "tx", "sps_dac", errors, default=8,
                            integer=True, minimum=4)
    half_period_ps = 500.0 / baud_ghz
    added_ps = _field(sec, "tx", "added_skew_ps", errors, default=0.0)
    intrinsic_ps = _field(sec, "tx", "intrinsic_skew_ps", errors, default=-3.0)
    for label, val in (("added_skew_ps", added_ps),
                       ("intrinsic_skew_ps", intrinsic_ps)):
        if abs(val) >= half_period_ps:
            errors.append(f"tx.{label}: magnitude must stay below half a "
                          f"symbol period ({half_period_ps:.3f} ps)")
    out["added_skew_s"] = added_ps * 1e-12
    out["intrinsic_skew_s"] = intrinsic_ps * 1e-12
    out["quad_phase_err_rad"] = np.deg2rad(
        _field(sec, "tx", "quad_phase_err_deg", errors, default=0.0))
    out["n_symbols"] = _field(sec, "tx", "n_symbols", errors, default=32768,
                              integer=True, minimum=4096)
    out["prbs_seed"] = _field(sec, "tx", "prbs_seed", errors, default=1234,
                              integer=True, minimum=0)
    _leftover_keys(sec, "tx", errors)
    return out


def _parse_det(section: dict, errors: list[str]) -> dict:
    sec = dict(section)
    out = {}
    tone_ghz = _field(sec, "det", "tone_offset_ghz", errors, default=None,
                      nullable=True, minimum=0, exclusive_min=True)
    out["tone_offset_hz"] = None if tone_ghz is None else tone_ghz * 1e9
    out["cspr_db"] = _field(sec, "det", "cspr_db", errors, default=13.5)
    out["pd_bandwidth_hz"] = _field(sec, "det", "pd_bandwidth_ghz", errors,
                                    default=37.0, minimum=0,
                                    exclusive_min=True) * 1e9
    out["adc_rate_hz"] = _field(sec, "det", "adc_rate_gsa", errors,
                                default=160.0, minimum=0,
                                exclusive_min=True) * 1e9
    out["adc_bits"] = _field(sec, "det", "adc_bits", errors, default=8,
                             nullable=True, integer=True, minimum=2, maximum=16)
    out["snr_db"] = _field(sec, "det", "snr_db", errors, default=None,
                           nullable=True)
    out["tone_linewidth_hz"] = _field(sec, "det", "tone_linewidth_mhz", errors,
                                      default=0.0, minimum=0) * 1e6
    out["rng_seed"] = _field(sec, "det", "rng_seed", errors, default=1,
                             integer=True, minimum=0)
    _leftover_keys(sec, "det", errors)
    return out


def _parse_run(section: dict, errors: list[str], *,
               methods_default: tuple[str, ...],
               skews_default: tuple[float, ...]) -> dict:
    sec = dict(section)
    out = {}

    methods = sec.pop("methods", list(methods_default))
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    if (not isinstance(methods, list) or not methods
            or any(m not in _ALL_METHODS for m in methods)):
        errors.append(f"run.methods: must be a non-empty list drawn from "
                      f"{list(_ALL_METHODS)}")
        methods = list(methods_default)
    out["methods"] = tuple(methods)

    n_taps = _field(sec, "run", "n_taps", errors, default=65,
                    integer=True, minimum=5)
    if n_taps % 2 == 0:
        errors.append("run.n_taps: must be odd")
    out["n_taps"] = n_taps
    out["band_fraction"] = _field(sec, "run", "band_fraction", errors,
                                  default=None, nullable=True, minimum=0,
                                  maximum=0.5, exclusive_min=True)
    out["block_len"] = _field(sec, "run", "block_len", errors, default=256,
                              integer=True, minimum=1)

    skews = sec.pop("skews_ps", list(skews_default))
    if (not isinstance(skews, list)
            or any(isinstance(s, bool) or not isinstance(s, (int, float))
                   for s in skews)):
        errors.append("run.skews_ps: must be a list of numbers")
        skews = list(skews_default)
    out["skews_ps"] = tuple(float(s) for s in skews)

    out["n_trials"] = _field(sec, "run", "n_trials", errors, default=300,
                             integer=True, minimum=2)
    out["target_ber"] = _field(sec, "run", "target_ber", errors, default=1e-2,
                               minimum=0, exclusive_min=True, maximum=0.4999)
    out["cohd_esn0_db"] = _field(sec, "run", "cohd_esn0_db", errors,
                                 default=None, nullable=True)
    out["lo_offset_mhz"] = _field(sec, "run", "lo_offset_mhz", errors,
                                  default=0.0)
    out_dir = sec.pop("out_dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        errors.append("run.out_dir: must be a non-empty string")
        out_dir = "out"
    out["out_dir"] = out_dir
    out["figures"] = _field(sec, "run", "figures", errors, default=True,
                            boolean=True)
    _leftover_keys(sec, "run", errors)
    return out


def _load_doc(args) -> dict:
    doc: dict = {}
    if getattr(args, "config", None):
        text = Path(args.config).read_text(encoding="utf-8")
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise IngestError(f"config file is not valid YAML: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(["config root must be a mapping of sections"])
        doc = loaded
    errors = []
    for sec_name, sec in doc.items():
        if sec is not None and not isinstance(sec, dict):
            errors.append(f"{sec_name}: section must be a mapping")
    if errors:
        raise ConfigError(errors)
    for item in getattr(args, "overrides", None) or []:
        key, eq, raw = item.partition("=")
        if not eq or "." not in key:
            raise ConfigError(
                [f"--set expects SECTION.KEY=VALUE, got {item!r}"])
        sec_name, _, name = key.partition(".")
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        section = doc.setdefault(sec_name, {}) or {}
        section[name] = value
        doc[sec_name] = section
    return doc


def _resolve(args, *, methods_default: tuple[str, ...] = _ALL_METHODS,
             skews_default: tuple[float, ...] = _SWEEP_DEFAULT_PS,
             ) -> tuple[TxConfig, DetConfig, RunConfig]:
    doc = _load_doc(args)
    errors: list[str] = []
    known = {"tx", "det", "run"}
    for sec_name in doc:
        if sec_name not in known:
            errors.append(f"{sec_name}: unknown section")
    tx_kwargs = _parse_tx(doc.get("tx") or {}, errors)
    det_kwargs = _parse_det(doc.get("det") or {}, errors)
    run_kwargs = _parse_run(doc.get("run") or {}, errors,
                            methods_default=methods_default,
                            skews_default=skews_default)

    if getattr(args, "seed", None) is not None:
        det_kwargs["rng_seed"] = args.seed
    if getattr(args, "out_dir", None):
        run_kwargs["out_dir"] = args.out_dir
    if getattr(args, "methods", None):
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        if not methods or any(m not in _ALL_METHODS for m in methods):
            errors.append(f"--methods: must be a comma list drawn from "
                          f"{list(_ALL_METHODS)}")
        else:
            run_kwargs["methods"] = methods
    if getattr(args, "n_trials", None) is not None:
        if args.n_trials < 2:
            errors.append("--n: must be at least 2")
        else:
            run_kwargs["n_trials"] = args.n_trials
    if getattr(args, "no_figures", False):
        run_kwargs["figures"] = False

    if errors:
        raise ConfigError(errors)
    try:
        tx = TxConfig(**tx_kwargs)
    except ValueError as exc:
        errors.append(f"tx: {exc}")
    try:
        det = DetConfig(**det_kwargs)
    except ValueError as exc:
        errors.append(f"det: {exc}")
    if errors:
        raise ConfigError(errors)
    return tx, det, RunConfig(**run_kwargs)


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _emit_error(code: int, kind: str, messages: list[str]) -> None:
    doc = {"error": {"code": code, "kind": kind, "messages": messages}}
    print(json.dumps(doc, indent=2, sort_keys=True))


def _out_dir(run: RunConfig) -> Path:
    path = Path(run.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _run_payload(run: RunConfig) -> dict:
    return {
        "methods": list(run.methods),
        "n_taps": run.n_taps,
        "band_fraction": run.band_fraction,
        "block_len": run.block_len,
        "skews_ps": list(run.skews_ps),
        "n_trials": run.n_trials,
        "target_ber": run.target_ber,
        "cohd_esn0_db": run.cohd_esn0_db,
        "lo_offset_mhz": run.lo_offset_mhz,
        "out_dir": run.out_dir,
        "figures": run.figures,
    }


def _estimates_payload(results: dict) -> dict:
    return {
        m: {
            "skew_ps": float(t.estimate.skew_s * 1e12),
            "evm_pct": float(t.estimate.evm_pct),
            "ber": float(t.ber),
            "foe_ghz": float(t.estimate.foe_hz / 1e9),
            "residual": float(t.estimate.residual_error),
            "lag_symbols": int(t.lag_symbols),
            "rotation": int(t.rotation),
        }
        for m, t in results.items()
    }


def _constellation_csv(frame, results: dict, methods) -> str:
    import csv as _csv
    import io

    cols = [m for m in methods if m in results]
    buf = io.StringIO()
    writer = _csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["index", "ref_re", "ref_im"]
                    + [f"{m}_{part}" for m in cols for part in ("re", "im")])
    for k, ref in enumerate(frame.symbols):
        row = [k, repr(float(ref.real)), repr(float(ref.imag))]
        for m in cols:
            s = results[m].symbols[k]
            row += [repr(float(s.real)), repr(float(s.imag))]
        writer.writerow(row)
    return buf.getvalue()


def _print_estimates(results: dict) -> None:
    for m, t in results.items():
        print(f"{m}: skew {t.estimate.skew_s * 1e12:+.3f} ps, "
              f"EVM {t.estimate.evm_pct:.2f}%, BER {t.ber:.2e}")


def cmd_simulate(args) -> int:
    tx, det, run = _resolve(args)
    frame, field = transmit(tx)
    results = {}
    tone_hz = None
    dd = tuple(m for m in run.methods if m in DD_METHODS)
    if dd:
        current, tone_hz = detect(field, det)
        if args.capture_out:
            base = Path(args.capture_out)
            base.parent.mkdir(parents=True, exist_ok=True)
            current.samples.astype("<f8").tofile(f"{base}.f64")
            sidecar = {
                "sample_rate_hz": float(current.sample_rate_hz),
                "baud_hz": float(tx.baud_hz),
                "tone_offset_hz_coarse": float(tone_hz),
                "rolloff": float(tx.rolloff),
                "mod_order": int(tx.mod_order),
                "prbs_seed": int(tx.prbs_seed),
                "n_symbols": int(tx.n_symbols),
            }
            _write_text(Path(f"{base}.json"),
                        json.dumps(sidecar, indent=2, sort_keys=True))
        results.update(estimate_from_capture(
            current, frame, tx.baud_hz, tx.rolloff, tone_hz, dd,
            added_skew_s=tx.added_skew_s, n_taps=run.n_taps,
            band_fraction=run.band_fraction, block_len=run.block_len))
    if "cohd" in run.methods:
        results["cohd"] = cohd_trial(
            field, frame, tx, lo_offset_hz=run.lo_offset_mhz * 1e6,
            esn0_db=run.cohd_esn0_db, seed=det.rng_seed, n_taps=run.n_taps,
            band_fraction=run.band_fraction, block_len=run.block_len)

    out = _out_dir(run)
    payload = {
        "config": config_payload(tx, det, run=_run_payload(run)),
        "tone_offset_ghz": None if tone_hz is None else float(tone_hz / 1e9),
        "estimates": _estimates_payload(results),
    }
    _write_text(out / "estimate.json",
                json.dumps(payload, indent=2, sort_keys=True))
    _write_text(out / "constellation.csv",
                _constellation_csv(frame, results, run.methods))
    if run.figures:
        from .plots import plot_constellation

        plot_constellation({m: results[m].symbols for m in run.methods
                            if m in results}, str(out / "constellation.png"))
    _print_estimates(results)
    print(f"artifacts written to {out}")
    return EXIT_OK


def _read_capture(path: str) -> np.ndarray:
    p = Path(path)
    size = p.stat().st_size
    if size == 0 or size % 8 != 0:
        raise IngestError(
            f"{path}: size {size} is not a whole number of float64 samples")
    samples = np.fromfile(p, dtype="<f8")
    if len(samples) < 2:
        raise IngestError(f"{path}: fewer than 2 samples")
    if not np.all(np.isfinite(samples)):
        raise IngestError(f"{path}: contains non-finite samples")
    return samples


def _read_sidecar(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError([f"{path}: sidecar must be a JSON object"])
    missing = [k for k in _SIDECAR_REQUIRED if k not in doc]
    if missing:
        raise ConfigError([f"sidecar field missing: {k}" for k in missing])
    return doc


def cmd_calibrate(args) -> int:
    methods = tuple((args.methods or "hilbert,kk").split(","))
    bad = [m for m in methods if m not in DD_METHODS]
    if bad:
        raise ConfigError(
            [f"--methods: {m!r} is not a reconstruction method" for m in bad])
    samples = _read_capture(args.waveform)
    sidecar = _read_sidecar(args.sidecar)

    baud_hz = sidecar["baud_hz"]
    rate_hz = sidecar["sample_rate_hz"]
    n_symbols = sidecar.get("n_symbols")
    if n_symbols is None:
        n_symbols = int(round(len(samples) * baud_hz / rate_hz))
    try:
        frame_cfg = TxConfig(
            baud_hz=baud_hz,
            mod_order=sidecar["mod_order"],
            rolloff=sidecar["rolloff"],
            n_symbols=n_symbols,
            prbs_seed=sidecar["prbs_seed"],
            added_skew_s=0.0,
            intrinsic_skew_s=0.0,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"sidecar: {exc}"]) from exc
    frame = generate_symbols(frame_cfg)
    current = RealSignal(samples, rate_hz)
    results = estimate_from_capture(
        current, frame, baud_hz, frame_cfg.rolloff,
        sidecar["tone_offset_hz_coarse"], methods,
        n_taps=args.n_taps, band_fraction=args.band_fraction,
        block_len=args.block_len)

    payload = {
        "config": config_payload(sidecar=sidecar, run={
            "methods": list(methods), "n_taps": args.n_taps,
            "band_fraction": args.band_fraction, "block_len": args.block_len,
        }),
        "estimates": _estimates_payload(results),
    }
    out = Path(args.out_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    _write_text(out / "estimate.json",
                json.dumps(payload, indent=2, sort_keys=True))
    _print_estimates(results)
    print(f"artifacts written to {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    tx, det, run = _resolve(args)
    if not run.skews_ps:
        raise ConfigError(["run.skews_ps: sweep needs at least one skew value"])
    result = run_sweep(tx, det, [s * 1e-12 for s in run.skews_ps],
                       methods=run.methods, cohd_esn0_db=run.cohd_esn0_db,
                       n_taps=run.n_taps, band_fraction=run.band_fraction,
                       block_len=run.block_len, progress=_progress)
    out = _out_dir(run)
    config = config_payload(tx, det, run=_run_payload(run))
    _write_text(out / "sweep.csv", sweep_to_csv(result))
    _write_text(out / "sweep.json", sweep_to_json(result, config))
    if run.figures:
        from .plots import plot_sweep

        plot_sweep(result, str(out / "sweep.png"))
    for m in result.methods:
        if result.fit_slope[m] is None:
            print(f"{m}: no fit (too few successful points)")
        else:
            print(f"{m}: slope {result.fit_slope[m]:.4f}, intercept "
                  f"{result.fit_intercept_s[m] * 1e12:+.3f} ps, max error "
                  f"{result.max_fit_error_s[m] * 1e12:.3f} ps")
    if result.n_failures:
        print(f"{result.n_failures} point(s) failed; see artifacts")
    print(f"artifacts written to {out}")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    tx, det, run = _resolve(args, methods_default=DD_METHODS)
    summaries = run_monte_carlo(tx, det, run.n_trials, methods=run.methods,
                                n_taps=run.n_taps,
                                band_fraction=run.band_fraction,
                                block_len=run.block_len, progress=_progress)
    out = _out_dir(run)
    config = config_payload(tx, det, run=_run_payload(run))
    _write_text(out / "montecarlo.csv", mc_to_csv(summaries))
    _write_text(out / "montecarlo.json", mc_to_json(summaries, config))
    if run.figures:
        from .plots import plot_montecarlo

        plot_montecarlo(summaries, str(out / "montecarlo.png"))
    for m, s in summaries.items():
        print(f"{m}: n {s.n}, mean {s.mean_s * 1e12:+.4f} ps, "
              f"std {s.stddev_s * 1e12:.4f} ps, range "
              f"[{s.min_s * 1e12:+.3f}, {s.max_s * 1e12:+.3f}] ps")
    print(f"artifacts written to {out}")
    return EXIT_OK


def cmd_osnr(args) -> int:
    tx, det, run = _resolve(args, skews_default=_OSNR_DEFAULT_PS)
    if not run.skews_ps:
        raise ConfigError(["run.skews_ps: OSNR scan needs a skew grid"])
    result = run_osnr_penalty(tx, [s * 1e-12 for s in run.skews_ps],
                              run.target_ber, n_taps=run.n_taps,
                              block_len=run.block_len, progress=_progress)
    out = _out_dir(run)
    config = config_payload(tx, det, run=_run_payload(run))
    _write_text(out / "osnr.csv", osnr_to_csv(result))
    _write_text(out / "osnr.json", osnr_to_json(result, config))
    if run.figures:
        from .plots import plot_osnr

        plot_osnr(result, str(out / "osnr.png"))
    print(f"baseline OSNR {result.baseline_osnr_db:.2f} dB at BER "
          f"{result.target_ber:g}")
    for r in result.rows:
        state = f"penalty {r.penalty_db:+.3f} dB" if r.attainable \
            else "unattainable"
        print(f"skew {r.skew_s * 1e12:+.2f} ps: {state}")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _add_config_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", help="YAML config file")
    p.add_argument("--set", action="append", dest="overrides",
                   metavar="SEC.KEY=VAL",
                   help="override a config value (repeatable)")
    p.add_argument("--seed", type=int, help="override det.rng_seed")
    p.add_argument("--methods", help="comma list: hilbert,kk,cohd")
    p.add_argument("--out-dir", help="artifact directory (default: out)")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewcal",
        description="Transmitter IQ-skew calibration by heterodyne "
                    "direct detection, simulated end to end.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one end-to-end trial")
    _add_config_options(p)
    p.add_argument("--capture-out", metavar="PREFIX",
                   help="also write the photocurrent as PREFIX.f64 with a "
                        "PREFIX.json sidecar")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate",
                       help="estimate skew from a captured photocurrent")
    p.add_argument("waveform", help="raw little-endian float64 samples")
    p.add_argument("sidecar", help="JSON sidecar describing the capture")
    p.add_argument("--methods", help="comma list: hilbert,kk")
    p.add_argument("--out-dir", help="artifact directory (default: out)")
    p.add_argument("--n-taps", type=int, default=65)
    p.add_argument("--band-fraction", type=float, default=None,
                   help="group-delay fit band as a fraction of the tap "
                        "rate (default: from the rolloff)")
    p.add_argument("--block-len", type=int, default=256)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("sweep", help="skew sweep with line fits")
    _add_config_options(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("montecarlo", help="repeated-trial statistics")
    _add_config_options(p)
    p.add_argument("--n", dest="n_trials", type=int,
                   help="number of trials (default 300)")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("osnr", help="OSNR penalty versus skew")
    _add_config_options(p)
    p.set_defaults(func=cmd_osnr)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        _emit_error(EXIT_CONFIG, "config", exc.messages)
        return EXIT_CONFIG
    except IngestError as exc:
        _emit_error(EXIT_IO, "io", [str(exc)])
        return EXIT_IO
    except OSError as exc:
        _emit_error(EXIT_IO, "io", [str(exc)])
        return EXIT_IO
    except DspError as exc:
        _emit_error(EXIT_DSP, "dsp", [f"{type(exc).__name__}: {exc}"])
        return EXIT_DSP
    except ValueError as exc:
        _emit_error(EXIT_CONFIG, "config", [str(exc)])
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - last resort
        _emit_error(EXIT_INTERNAL, "internal",
                    [f"{type(exc).__name__}: {exc}"])
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
