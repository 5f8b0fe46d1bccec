"""Matplotlib rendering of the per-run figure data."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

FIGSIZE = (8, 4.5)

_LABELS = {
    "ab": ("α", "alpha"),
    "dq": ("d", "d"),
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_tracking(path, t, vref, v, iref, i, frame):
    sym = _LABELS[frame][0]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(FIGSIZE[0], 6), sharex=True)
    ax1.plot(t, vref, "k--", lw=1, label=f"v{sym} ref")
    ax1.plot(t, v, lw=1, label=f"v{sym}")
    ax1.set_ylabel("voltage (V)")
    ax1.legend(loc="lower right")
    ax2.plot(t, iref, "k--", lw=1, label=f"i{sym} ref")
    ax2.plot(t, i, lw=1, label=f"i{sym}")
    ax2.set_ylabel("current (A)")
    ax2.set_xlabel("time (s)")
    ax2.legend(loc="lower right")
    ax1.set_title(f"Voltage and current tracking ({frame} frame)")
    _save(fig, path)


def plot_voltage(path, t, va, frame):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(t, va, lw=1)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("phase A voltage (V)")
    ax.set_title(f"Output voltage phase A ({frame} frame)")
    _save(fig, path)


def plot_power(path, t, p_inst, p_filt, frame):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(t, p_inst, lw=0.6, alpha=0.6, label="instantaneous")
    ax.plot(t, p_filt, lw=1.5, label="filtered")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("active power (W)")
    ax.legend(loc="lower right")
    ax.set_title(f"Active power ({frame} frame)")
    _save(fig, path)


def plot_spectrum(path, freqs, mags, thd_pct, frame):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    fund = mags.max()
    ax.bar(freqs, 100 * mags / fund, width=freqs[1] - freqs[0])
    ax.set_yscale("log")
    ax.set_ylim(1e-4, 150)
    ax.set_xlabel("frequency (Hz)")
    ax.set_ylabel("magnitude (% of fundamental)")
    ax.set_title(f"Output voltage spectrum ({frame} frame), THD = {thd_pct:.2f} %")
    _save(fig, path)
