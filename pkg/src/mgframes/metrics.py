"""
Post-processing of run traces: fundamental extraction, THD, tracking metrics.

Harmonic amplitudes are single-bin DFTs with a rectangular window spanning an
integer number of fundamental cycles. Simulated traces run at the droop
frequency, which in general does not give an integer number of samples per
cycle, so their trailing window is first resampled (cubic spline) onto a grid
synchronous with the measured fundamental.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
import math
import warnings

import numpy as np
from scipy.interpolate import CubicSpline

from mgframes.engine import TimeSeries


class WindowError(ValueError):
    pass


class DegenerateError(ValueError):
    pass


class UnsettledError(UserWarning):
    """The amplitude envelope never stays inside the settling band."""


@dataclass(frozen=True)
class RunMetrics:
    thd_pct: float
    v1_amp: float
    ss_error_pct: float
    overshoot_pct: float
    settling_time: float
    p_mean: float
    q_mean: float
    delta_omega: float
    settled: bool = True
    f1: float = 50.0
    e_cmd: float = 0.0
    vd_mean: float = 0.0
    vd_error_pct: float = 0.0
    i1_amp: float = 0.0
    iref_amp: float = 0.0
    i_tracking_pct: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def _window_len(f1, fs, n_cycles, size):
    n = n_cycles * fs / f1
    if abs(n - round(n)) > 1e-9 * max(n, 1.0):
        raise WindowError(
            f"{n_cycles} cycles at {f1} Hz is {n} samples at fs={fs} Hz, not an integer")
    n = int(round(n))
    if n < 1 or n > size:
        raise WindowError(f"window of {n} samples does not fit a {size}-sample record")
    return n


def harmonic_phasors(waveform, f1, fs, n_cycles, orders):
    """Complex peak-amplitude phasors at `orders` * f1 over the trailing window."""
    x = np.asarray(waveform, dtype=float)
    n = _window_len(f1, fs, n_cycles, x.size)
    w = x[-n:]
    k = np.arange(n)
    return np.array([2.0 / n * (np.exp(-2j * np.pi * h * f1 / fs * k) @ w)
                     for h in np.atleast_1d(orders)])


def fundamental(waveform, f1, fs, n_cycles):
    """
    Peak amplitude and phase of the `f1` component over the trailing window.

    The phase refers to a cosine starting at the first window sample.
    """
    x = harmonic_phasors(waveform, f1, fs, n_cycles, [1])[0]
    return abs(x), math.atan2(x.imag, x.real)


def thd(waveform, f1, fs, n_cycles=10, h_max=50):
    """Total harmonic distortion in percent of the fundamental, orders 2..h_max."""
    if h_max < 2:
        raise ValueError("h_max must be at least 2")
    if h_max * f1 >= fs / 2:
        raise WindowError(f"harmonic {h_max} at {h_max * f1} Hz exceeds Nyquist {fs / 2} Hz")
    x = np.asarray(waveform, dtype=float)
    mags = np.abs(harmonic_phasors(x, f1, fs, n_cycles, np.arange(1, h_max + 1)))
    n = _window_len(f1, fs, n_cycles, x.size)
    rms = math.sqrt(np.mean(x[-n:] ** 2))
    if mags[0] < 1e-9 * rms or mags[0] == 0:
        raise DegenerateError("fundamental is negligible; THD undefined")
    return 100.0 * math.sqrt(np.sum(mags[1:] ** 2)) / mags[0]


def resample_synchronous(waveform, fs, f1, n_cycles, per_cycle):
    """
    Resample the trailing `n_cycles` periods onto `per_cycle` points per period.

    Returns the resampled window; its sampling rate is f1*per_cycle.
    """
    x = np.asarray(waveform, dtype=float)
    t = np.arange(x.size) / fs
    span = n_cycles / f1
    if span > t[-1]:
        raise WindowError("record shorter than the requested window")
    n = int(n_cycles * per_cycle)
    grid = t[-1] - span + (np.arange(n) + 1) * (span / n)
    lo = max(int(np.searchsorted(t, grid[0])) - 8, 0)
    spline = CubicSpline(t[lo:], x[lo:])
    return spline(grid)


def samples_per_cycle(fs, f1, h_max):
    return max(int(round(fs / f1)), 2 * h_max + 2)


def measured_frequency(series: TimeSeries, n_cycles: int) -> float:
    """Mean reference frequency (Hz) over roughly the trailing `n_cycles`."""
    omega = series.data["omega"]
    n = int(round(n_cycles * series.fs * 2 * math.pi / series.config.droop.omega_nom))
    return float(np.mean(omega[-n:])) / (2 * math.pi)


def spectrum(waveform, fs, f1, n_cycles=10, h_max=50):
    """(frequency, peak magnitude) pairs from DC up to h_max*f1."""
    per = samples_per_cycle(fs, f1, h_max)
    y = resample_synchronous(waveform, fs, f1, n_cycles, per)
    mag = 2.0 * np.abs(np.fft.rfft(y)) / y.size
    mag[0] /= 2
    nbins = h_max * n_cycles + 1
    freqs = np.arange(nbins) * f1 / n_cycles
    return freqs, mag[:nbins]


def signal_of(series: TimeSeries, signal: str = "capacitor") -> np.ndarray:
    """Phase-a voltage at the capacitor or at the load terminal."""
    if signal == "capacitor":
        return series.data["vc_a"]
    if signal == "load":
        return series.config.plant.r_load * series.data["il2_a"]
    raise ValueError(f"unknown signal {signal!r}")


def run_thd(series: TimeSeries, n_cycles=10, h_max=50, signal="capacitor") -> float:
    f1 = measured_frequency(series, n_cycles)
    per = samples_per_cycle(series.fs, f1, h_max)
    y = resample_synchronous(signal_of(series, signal), series.fs, f1, n_cycles, per)
    return thd(y, f1, f1 * per, n_cycles, h_max)


def amplitude_envelope(waveform, fs, f1, per_cycle=200):
    """
    Fundamental amplitude of each whole cycle counted from the record start.

    Returns (start time of each cycle, amplitude).
    """
    x = np.asarray(waveform, dtype=float)
    t = np.arange(x.size) / fs
    n_cycles = int(math.floor(t[-1] * f1))
    grid = np.arange(n_cycles * per_cycle) / (f1 * per_cycle)
    cycles = CubicSpline(t, x)(grid).reshape(n_cycles, per_cycle)
    basis = np.exp(-2j * np.pi * np.arange(per_cycle) / per_cycle)
    amps = 2.0 / per_cycle * np.abs(cycles @ basis)
    return np.arange(n_cycles) / f1, amps


def tracking_metrics(series: TimeSeries, n_cycles=10, h_max=50,
                     signal="capacitor", band=0.02) -> RunMetrics:
    """
    Steady-state and transient figures of merit of one run.

    Steady-state quantities are taken over the trailing `n_cycles`
    fundamental periods. Overshoot and settling use the cycle-by-cycle
    fundamental-amplitude envelope of the phase-a voltage.
    """
    d = series.data
    fs = series.fs
    f1 = measured_frequency(series, n_cycles)
    per = samples_per_cycle(fs, f1, h_max)
    fs_sync = f1 * per
    nwin = int(round(n_cycles * fs / f1))

    v = signal_of(series, signal)
    y = resample_synchronous(v, fs, f1, n_cycles, per)
    v1_amp, _ = fundamental(y, f1, fs_sync, n_cycles)
    thd_pct = thd(y, f1, fs_sync, n_cycles, h_max)
    e_cmd = float(np.mean(d["e"][-nwin:]))
    ss_error = 100.0 * abs(v1_amp - e_cmd) / e_cmd

    vd_mean = float(np.mean(d["vc_d"][-nwin:]))
    i1 = fundamental(resample_synchronous(d["il1_alpha"], fs, f1, n_cycles, per),
                     f1, fs_sync, n_cycles)[0]
    iref = fundamental(resample_synchronous(d["iref_alpha"], fs, f1, n_cycles, per),
                       f1, fs_sync, n_cycles)[0]

    t_env, env = amplitude_envelope(v, fs, f1, per)
    overshoot = max(0.0, 100.0 * (env.max() - v1_amp) / v1_amp)
    inside = np.abs(env - v1_amp) <= band * v1_amp
    settled = bool(inside[-1])
    if settled:
        outside = np.flatnonzero(~inside)
        first = outside[-1] + 1 if outside.size else 0
        settling_time = float(t_env[first])
    else:
        settling_time = float("nan")
        warnings.warn(UnsettledError(
            f"{series.frame.value}: envelope not within ±{band:.0%} of final value"))

    return RunMetrics(
        thd_pct=thd_pct, v1_amp=v1_amp, ss_error_pct=ss_error,
        overshoot_pct=overshoot, settling_time=settling_time,
        p_mean=float(np.mean(d["p_filt"][-nwin:])),
        q_mean=float(np.mean(d["q_filt"][-nwin:])),
        delta_omega=2 * math.pi * f1 - series.config.droop.omega_nom,
        settled=settled, f1=f1, e_cmd=e_cmd,
        vd_mean=vd_mean, vd_error_pct=100.0 * abs(vd_mean - e_cmd) / e_cmd,
        i1_amp=i1, iref_amp=iref, i_tracking_pct=100.0 * abs(i1 - iref) / iref)
