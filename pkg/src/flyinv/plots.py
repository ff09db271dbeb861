"""Static vector plots rendered from the exported data tables.

Each renderer takes a table file written by the CLI (trace, spectrum,
sweep, filter response), validates it, and writes a self-contained SVG.
Rendering is deterministic: a fixed hash salt replaces matplotlib's
randomised element ids and no timestamps are embedded.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from .errors import MalformedTable
from .simulator import TRACE_COLUMNS, read_table

matplotlib.rcParams["svg.hashsalt"] = "flyinv"

# Cap on rendered points per curve; the trace tables run to millions of rows
# and an unthinned vector file would be enormous.
_MAX_POINTS = 20000

_SPECTRUM_COLUMNS = ("h", "f_hz", "v_rms")
_RESPONSE_COLUMNS = ("f_hz", "gain")
_SWEEP_METRICS = ("thd", "v_rms", "p_out_avg", "p_in_avg", "efficiency")


def _save(fig, out_path) -> None:
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _thin(n: int) -> slice:
    stride = max(1, n // _MAX_POINTS)
    return slice(0, n, stride)


def render_waveform(table_path, out_path) -> None:
    """Load-voltage and load-current waveforms against time."""
    frame = read_table(table_path, TRACE_COLUMNS)
    sel = _thin(len(frame))
    t = frame["t"].to_numpy()[sel]
    fig, (ax_v, ax_i) = plt.subplots(2, 1, sharex=True, figsize=(8, 5))
    ax_v.plot(t, frame["v_load"].to_numpy()[sel], lw=0.8)
    ax_v.set_ylabel("load voltage (V)")
    ax_v.grid(True, alpha=0.3)
    ax_i.plot(t, frame["i_load"].to_numpy()[sel], lw=0.8, color="tab:orange")
    ax_i.set_ylabel("load current (A)")
    ax_i.set_xlabel("time (s)")
    ax_i.grid(True, alpha=0.3)
    fig.suptitle("output waveforms")
    _save(fig, out_path)


def render_spectrum(table_path, out_path) -> None:
    """Harmonic bar spectrum with the magnitudes on a log scale."""
    frame = read_table(table_path, _SPECTRUM_COLUMNS)
    f = frame["f_hz"].to_numpy()
    v = frame["v_rms"].to_numpy()
    fig, ax = plt.subplots(figsize=(8, 4))
    floor = max(v.max(), 1e-12) * 1e-8
    width = 0.6 * (f[1] - f[0]) if len(f) > 1 else 1.0
    ax.bar(f, np.maximum(v, floor), width=width)
    ax.set_yscale("log")
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("harmonic magnitude (V rms)")
    ax.set_title("harmonic spectrum")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, out_path)


def render_response(table_path, out_path) -> None:
    """Filter gain magnitude over frequency."""
    frame = read_table(table_path, _RESPONSE_COLUMNS)
    f = frame["f_hz"].to_numpy()
    fig, ax = plt.subplots(figsize=(8, 4))
    positive = f > 0
    ax.loglog(f[positive], frame["gain"].to_numpy()[positive], lw=1.2)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("|gain|")
    ax.set_title("filter transfer magnitude")
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, out_path)


def render_sweep(table_path, out_path) -> None:
    """Efficiency against the first axis, one curve per second-axis value."""
    frame = read_table_sweep(table_path)
    axes = [c for c in frame.columns
            if c not in _SWEEP_METRICS and c != "error"]
    x_name = axes[0]
    fig, ax = plt.subplots(figsize=(8, 4))
    ok = frame["error"].isna() | (frame["error"].astype(str).str.len() == 0)
    good = frame[ok]
    if len(axes) == 1:
        ax.plot(good[x_name], good["efficiency"], marker="o", lw=1.2)
    else:
        series_name = axes[1]
        for value, group in good.groupby(series_name, sort=True):
            ax.plot(group[x_name], group["efficiency"], marker="o", lw=1.2,
                    label=f"{series_name} = {value:g}")
        ax.legend()
    ax.set_xlabel(x_name)
    ax.set_ylabel("efficiency")
    ax.set_title("sweep results")
    ax.grid(True, alpha=0.3)
    _save(fig, out_path)


def read_table_sweep(table_path) -> pd.DataFrame:
    """Read a sweep table; metric cells may be NaN only on rows with errors."""
    try:
        frame = pd.read_csv(table_path)
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise MalformedTable(table_path, f"unreadable as CSV: {exc}") from exc
    for col in _SWEEP_METRICS + ("error",):
        if col not in frame.columns:
            raise MalformedTable(table_path, "missing column", column=col)
    if len(frame) == 0:
        raise MalformedTable(table_path, "table has no data rows")
    failed = ~(frame["error"].isna()
               | (frame["error"].astype(str).str.len() == 0))
    for col in _SWEEP_METRICS:
        values = pd.to_numeric(frame[col], errors="coerce").to_numpy()
        bad = np.flatnonzero(~np.isfinite(values) & ~failed.to_numpy())
        if bad.size:
            raise MalformedTable(table_path, "non-numeric cell on an "
                                 "error-free row", row=int(bad[0]) + 2,
                                 column=col)
    return frame
