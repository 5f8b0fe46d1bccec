"""
Command-line front end.

    mgframes run [--config FILE] [--frame ab|dq] [--out DIR] [--fsw HZ] [--t-end S]
    mgframes compare [--config FILE] [--out DIR] [--fsw HZ] [--t-end S]
    mgframes print-defaults

Exit status: 0 success, 1 configuration or I/O error, 2 numerical divergence.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys

import numpy as np

from mgframes import metrics
from mgframes.config import Settings, format_config, load_config
from mgframes.engine import ConfigError, Frame, NumericalDivergence, TimeSeries, run_pair, run_scenario

log = logging.getLogger("mgframes")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


def timeseries_columns(series: TimeSeries):
    rec = series.recorded
    ref = ("vref_alpha", "vref_beta") if series.frame is Frame.AB else ("vref_d", "vref_q")
    names = ["t", "va", "vb", "vc_phase", *ref,
             "il1_a", "il1_b", "il1_c", "il2_a", "il2_b", "il2_c",
             "p_inst", "q_inst", "p_filt", "q_filt", "omega", "e"]
    source = {"va": "vc_a", "vb": "vc_b", "vc_phase": "vc_c"}
    return names, [rec[source.get(n, n)] for n in names]


def write_run(out_dir, series: TimeSeries, m: metrics.RunMetrics, settings: Settings,
              figures=True):
    os.makedirs(out_dir, exist_ok=True)
    d = series.data
    frame = series.frame.value
    names, cols = timeseries_columns(series)
    write_csv(os.path.join(out_dir, "timeseries.csv"), names, cols)

    with open(os.path.join(out_dir, "metrics.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"frame: {frame}\n")
        for key, value in m.as_dict().items():
            fh.write(f"{key}: {value if isinstance(value, bool) else _fmt(value)}\n")

    x = "alpha" if series.frame is Frame.AB else "d"
    trk = [d["t"], d[f"vref_{x}"], d[f"vc_{x}"], d[f"iref_{x}"], d[f"il1_{x}"]]
    write_csv(os.path.join(out_dir, "fig_tracking.csv"),
              ["t", f"vref_{x}", f"v_{x}", f"iref_{x}", f"il1_{x}"], trk)
    write_csv(os.path.join(out_dir, "fig_voltage.csv"), ["t", "va", "vb", "vc_phase"],
              [d["t"], d["vc_a"], d["vc_b"], d["vc_c"]])
    write_csv(os.path.join(out_dir, "fig_power.csv"), ["t", "p_inst", "p_filt", "q_filt"],
              [d["t"], d["p_inst"], d["p_filt"], d["q_filt"]])
    freqs, mags = metrics.spectrum(metrics.signal_of(series, settings.thd_signal),
                                   series.fs, m.f1, settings.n_cycles, settings.h_max)
    write_csv(os.path.join(out_dir, "fig_spectrum.csv"), ["frequency", "magnitude"],
              [freqs, mags])

    if figures:
        from mgframes import plotting
        plotting.plot_tracking(os.path.join(out_dir, "fig_tracking.png"), *trk, frame)
        plotting.plot_voltage(os.path.join(out_dir, "fig_voltage.png"), d["t"], d["vc_a"], frame)
        plotting.plot_power(os.path.join(out_dir, "fig_power.png"), d["t"], d["p_inst"],
                            d["p_filt"], frame)
        plotting.plot_spectrum(os.path.join(out_dir, "fig_spectrum.png"), freqs, mags,
                               m.thd_pct, frame)


def evaluate(series: TimeSeries, settings: Settings) -> metrics.RunMetrics:
    return metrics.tracking_metrics(series, settings.n_cycles, settings.h_max,
                                    settings.thd_signal)


def comparison_text(m_ab: metrics.RunMetrics, m_dq: metrics.RunMetrics, fsw: float) -> str:
    if fsw == 0:
        verdict = "not meaningful (averaged modulator, no switching harmonics)"
    elif m_ab.thd_pct > m_dq.thd_pct:
        verdict = "THD_ab > THD_dq"
    else:
        verdict = "THD_ab <= THD_dq"
    rows = [
        ("thd_ab_pct", _fmt(m_ab.thd_pct)), ("thd_dq_pct", _fmt(m_dq.thd_pct)),
        ("thd_ordering", verdict),
        ("ss_error_ab_pct", _fmt(m_ab.ss_error_pct)),
        ("ss_error_dq_pct", _fmt(m_dq.ss_error_pct)),
        ("vd_error_dq_pct", _fmt(m_dq.vd_error_pct)),
        ("i_tracking_ab_pct", _fmt(m_ab.i_tracking_pct)),
        ("i_tracking_dq_pct", _fmt(m_dq.i_tracking_pct)),
        ("p_mean_ab", _fmt(m_ab.p_mean)), ("p_mean_dq", _fmt(m_dq.p_mean)),
        ("delta_omega_ab", _fmt(m_ab.delta_omega)),
        ("delta_omega_dq", _fmt(m_dq.delta_omega)),
    ]
    return "".join(f"{k}: {v}\n" for k, v in rows)


def _settings(args) -> Settings:
    s = load_config(args.config) if args.config else Settings()
    changes = {}
    if getattr(args, "fsw", None) is not None:
        changes["fsw"] = float(args.fsw)
    if getattr(args, "t_end", None) is not None:
        changes["t_end"] = float(args.t_end)
    if getattr(args, "frame", None):
        changes["frame"] = args.frame
    s = dataclasses.replace(s, **changes)
    # droop lowers the frequency slightly, so keep a spare cycle
    if s.t_end < (s.n_cycles + 2) / s.f_nom:
        raise ConfigError(f"t_end = {s.t_end} s is too short for a {s.n_cycles}-cycle "
                          f"analysis window")
    return s


def _prepare_out(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as err:
        raise ConfigError(f"cannot create output directory {out_dir}: {err}") from err
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"output directory {out_dir} is not writable")


def cmd_run(args) -> int:
    settings = _settings(args)
    cfg = settings.scenario()
    _prepare_out(args.out)
    series = run_scenario(cfg)
    m = evaluate(series, settings)
    write_run(args.out, series, m, settings, figures=not args.no_figures)
    log.info("%s run: THD %.3f %%, P %.1f W", cfg.frame.value, m.thd_pct, m.p_mean)
    return 0


def cmd_compare(args) -> int:
    settings = _settings(args)
    cfg_ab, cfg_dq = settings.scenario("ab"), settings.scenario("dq")
    _prepare_out(args.out)
    s_ab, s_dq = run_pair(cfg_ab, cfg_dq)
    m_ab, m_dq = evaluate(s_ab, settings), evaluate(s_dq, settings)
    for series, m in ((s_ab, m_ab), (s_dq, m_dq)):
        write_run(os.path.join(args.out, series.frame.value), series, m, settings,
                  figures=not args.no_figures)
    with open(os.path.join(args.out, "comparison.txt"), "w", encoding="utf-8") as fh:
        fh.write(comparison_text(m_ab, m_dq, settings.fsw))
    return 0


def cmd_print_defaults(args) -> int:
    sys.stdout.write(format_config(Settings()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgframes",
        description="Islanded inverter simulator: PR control in the αβ frame "
                    "versus PI control in the dq frame under droop references.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="configuration file (defaults if omitted)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--fsw", type=float, help="carrier frequency in Hz, 0 = averaged")
        p.add_argument("--t-end", type=float, help="simulated duration in s")
        p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    p = sub.add_parser("run", help="run a single scenario")
    common(p)
    p.add_argument("--frame", choices=["ab", "dq"])
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("compare", help="run both frames and compare")
    common(p)
    p.set_defaults(func=cmd_compare)
    p = sub.add_parser("print-defaults", help="print the default configuration")
    p.set_defaults(func=cmd_print_defaults)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"mgframes: config error: {err}", file=sys.stderr)
        return 1
    except NumericalDivergence as err:
        print(f"mgframes: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"mgframes: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
