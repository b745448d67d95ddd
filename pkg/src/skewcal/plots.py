"""Figure rendering for the CLI report path.

Each function draws one experiment artifact to a file next to the CSV and
JSON outputs. matplotlib is imported lazily with the Agg backend so the
library itself never needs a display and never pays the import cost unless
figures were asked for.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "plot_sweep",
    "plot_montecarlo",
    "plot_osnr",
    "plot_constellation",
]

_MAX_SCATTER = 4096


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_sweep(result, path: str) -> None:
    """Estimated skew and EVM against added skew, one line per method."""
    plt = _pyplot()
    fig, (ax_skew, ax_evm) = plt.subplots(1, 2, figsize=(9.5, 4.0))
    for m in result.methods:
        pts = [(r.added_skew_s * 1e12, r.outcomes[m])
               for r in result.rows if m in r.outcomes]
        if not pts:
            continue
        x = [p[0] for p in pts]
        ax_skew.plot(x, [p[1].skew_s * 1e12 for p in pts], "o-",
                     ms=4, label=m)
        ax_evm.plot(x, [p[1].evm_pct for p in pts], "s-", ms=4, label=m)
        if result.fit_slope[m] is not None:
            xs = np.array([min(x), max(x)])
            ax_skew.plot(xs, result.fit_slope[m] * xs
                         + result.fit_intercept_s[m] * 1e12,
                         "--", lw=0.8, color="gray")
    ax_skew.set_xlabel("added skew (ps)")
    ax_skew.set_ylabel("estimated skew (ps)")
    ax_skew.legend()
    ax_skew.grid(alpha=0.3)
    ax_evm.set_xlabel("added skew (ps)")
    ax_evm.set_ylabel("EVM (%)")
    ax_evm.legend()
    ax_evm.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_montecarlo(summaries: dict, path: str) -> None:
    """Histogram of estimates per method."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(summaries), figsize=(4.5 * len(summaries), 3.6),
                             squeeze=False)
    for ax, (m, s) in zip(axes[0], summaries.items()):
        edges = np.array(s.bin_edges_s) * 1e12
        ax.stairs(s.counts, edges, fill=True, alpha=0.7)
        ax.axvline(s.mean_s * 1e12, color="k", lw=1.0, ls="--")
        ax.set_title(f"{m}: mean {s.mean_s * 1e12:.3f} ps, "
                     f"std {s.stddev_s * 1e12:.3f} ps")
        ax.set_xlabel("estimated skew (ps)")
        ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_osnr(result, path: str) -> None:
    """OSNR penalty against transmitter skew."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ok = [r for r in result.rows if r.attainable]
    ax.plot([r.skew_s * 1e12 for r in ok], [r.penalty_db for r in ok], "o-")
    ax.axhline(0.5, color="gray", lw=0.8, ls="--")
    ax.set_xlabel("Tx IQ skew (ps)")
    ax.set_ylabel(f"OSNR penalty (dB) at BER {result.target_ber:g}")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_constellation(recovered: dict[str, np.ndarray], path: str) -> None:
    """Scatter of recovered symbols, one panel per method, decimated."""
    plt = _pyplot()
    fig, axes = plt.subplots(1, len(recovered),
                             figsize=(3.8 * len(recovered), 3.8), squeeze=False)
    for ax, (m, symbols) in zip(axes[0], recovered.items()):
        pts = np.asarray(symbols)
        if len(pts) > _MAX_SCATTER:
            step = len(pts) // _MAX_SCATTER
            pts = pts[::step]
        ax.scatter(pts.real, pts.imag, s=2, alpha=0.4, linewidths=0)
        ax.set_title(m)
        ax.set_aspect("equal")
        ax.set_xlabel("I")
        ax.set_ylabel("Q")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
