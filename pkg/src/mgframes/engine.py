"""
Dual-rate scenario executor.

Every control period the engine samples the plant, updates the power filter,
droop law and reference, runs the voltage then current loop of the selected
frame and latches the modulator command. Between control instants the plant
is advanced in fixed RK4 sub-steps with the modulator evaluated at each
sub-step midpoint.

Because the plant is linear and the command is held over a control period,
the sub-steps of one control period are applied as a single precomputed
product of RK4 step matrices; `tests/test_engine.py` checks this against
stepping `pwm_stage` and `rk4_step` one sub-step at a time.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
import math

import numpy as np

from mgframes import control, droop
from mgframes.control import HarmonicCompParams, PiParams, PrParams
from mgframes.droop import DroopParams, PowerMeasurement, ReferenceState
from mgframes.plant import PlantParams, pwm_stage, rk4_propagator
from mgframes.transforms import AlphaBeta, Dq, clarke, inv_clarke, inv_park, park

DIVERGENCE_LIMIT = 1e9


class ConfigError(ValueError):
    pass


class NumericalDivergence(RuntimeError):
    def __init__(self, t: float, frame: str | None = None):
        self.t = t
        self.frame = frame
        label = f"[{frame}] " if frame else ""
        super().__init__(f"{label}numerical divergence at t = {t:.6g} s")


class Frame(str, Enum):
    AB = "ab"
    DQ = "dq"


def _default_droop():
    return DroopParams()


def table1_gains(frame: Frame, omega_nom=2 * math.pi * 50, wc_ratio=0.03):
    """Default (voltage, current) compensator gains for a frame."""
    if Frame(frame) is Frame.AB:
        wc = wc_ratio * omega_nom
        return (PrParams(0.2, 100.0, omega_nom, wc),
                PrParams(5.0, 400.0, omega_nom, wc))
    return PiParams(0.1, 3.0), PiParams(20.0, 1000.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Full parameterization of one run.

    `ab_feedforward` adds the measured capacitor voltage, rotated forward by
    half a control period, to the stationary-frame current-loop output. `ramp_cycles` is the length of the linear
    start-up ramp of the reference amplitude in nominal cycles (0 disables).
    """
    frame: Frame = Frame.AB
    plant: PlantParams = field(default_factory=PlantParams)
    droop: DroopParams = field(default_factory=_default_droop)
    voltage_gains: PrParams | PiParams | None = None
    current_gains: PrParams | PiParams | None = None
    harmonic_comp: HarmonicCompParams | None = None
    ts_control: float = 1e-4
    h_plant: float = 1e-6
    t_end: float = 0.5
    record_decimation: int = 10
    ramp_cycles: float = 2.0
    ab_feedforward: bool = True

    def __post_init__(self):
        object.__setattr__(self, "frame", Frame(self.frame))
        if self.voltage_gains is None or self.current_gains is None:
            v, i = table1_gains(self.frame, self.droop.omega_nom)
            if self.voltage_gains is None:
                object.__setattr__(self, "voltage_gains", v)
            if self.current_gains is None:
                object.__setattr__(self, "current_gains", i)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.ts_control))

    @property
    def substeps(self) -> int:
        return int(round(self.ts_control / self.h_plant))

    def validate(self):
        want = PrParams if self.frame is Frame.AB else PiParams
        for g in (self.voltage_gains, self.current_gains):
            if not isinstance(g, want):
                raise ConfigError(
                    f"{self.frame.value} frame needs {want.__name__} gains, got {g!r}")
        if self.harmonic_comp is not None and self.frame is Frame.DQ \
                and self.harmonic_comp.harmonics:
            raise ConfigError("harmonic compensator is only available in the ab frame")
        if not (self.ts_control > 0 and self.h_plant > 0):
            raise ConfigError("ts_control and h_plant must be positive")
        if self.h_plant > self.ts_control * (1 + 1e-12):
            raise ConfigError("h_plant must not exceed ts_control")
        m = self.ts_control / self.h_plant
        if abs(m - round(m)) > 1e-12 * m:
            raise ConfigError("ts_control must be an integer multiple of h_plant")
        if not self.t_end > 0 or self.n_steps < 1:
            raise ConfigError(f"t_end = {self.t_end} gives no control steps")
        if self.record_decimation < 1 or int(self.record_decimation) != self.record_decimation:
            raise ConfigError("record_decimation must be an integer >= 1")
        if not 0 < self.droop.wf * self.ts_control < 1:
            raise ConfigError("power filter needs 0 < wf*ts_control < 1")
        if self.ramp_cycles < 0:
            raise ConfigError("ramp_cycles must be non-negative")
        if self.frame is Frame.AB:
            try:
                control.discretize_resonator(self.voltage_gains, self.ts_control)
                control.discretize_resonator(self.current_gains, self.ts_control)
                if self.harmonic_comp is not None:
                    self.harmonic_comp.check_nyquist(self.voltage_gains.w0, self.ts_control)
            except ValueError as err:
                raise ConfigError(str(err)) from err


@dataclass(frozen=True)
class SampleRecord:
    t: float
    vref: tuple
    vc: tuple
    il1: tuple
    il2: tuple
    p_inst: float
    q_inst: float
    p_filt: float
    q_filt: float
    omega: float
    e: float


# Channels kept at the control rate. Frame vectors are stored per component.
CHANNELS = (
    "t", "theta",
    "vref_alpha", "vref_beta", "vref_d", "vref_q",
    "vc_a", "vc_b", "vc_c", "il1_a", "il1_b", "il1_c", "il2_a", "il2_b", "il2_c",
    "vc_alpha", "vc_beta", "vc_d", "vc_q",
    "il1_alpha", "il1_beta", "il1_d", "il1_q",
    "iref_alpha", "iref_beta", "iref_d", "iref_q",
    "vcmd_a", "vcmd_b", "vcmd_c",
    "p_inst", "q_inst", "p_filt", "q_filt", "omega", "e",
)


@dataclass
class TimeSeries:
    """
    Result of one run.

    `data` holds every channel at the control rate; `recorded` and `records`
    give the decimated view at spacing ts_control*record_decimation.
    """
    config: ScenarioConfig
    data: dict[str, np.ndarray]

    @property
    def frame(self) -> Frame:
        return self.config.frame

    @property
    def fs(self) -> float:
        return 1.0 / self.config.ts_control

    def __len__(self):
        return len(self.recorded["t"])

    @property
    def recorded(self) -> dict[str, np.ndarray]:
        k = self.config.record_decimation
        return {name: arr[::k] for name, arr in self.data.items()}

    def records(self):
        rec = self.recorded
        dq = self.frame is Frame.DQ
        for j in range(len(rec["t"])):
            vref = ((rec["vref_d"][j], rec["vref_q"][j]) if dq
                    else (rec["vref_alpha"][j], rec["vref_beta"][j]))
            yield SampleRecord(
                t=rec["t"][j], vref=vref,
                vc=tuple(rec[f"vc_{x}"][j] for x in "abc"),
                il1=tuple(rec[f"il1_{x}"][j] for x in "abc"),
                il2=tuple(rec[f"il2_{x}"][j] for x in "abc"),
                p_inst=rec["p_inst"][j], q_inst=rec["q_inst"][j],
                p_filt=rec["p_filt"][j], q_filt=rec["q_filt"][j],
                omega=rec["omega"][j], e=rec["e"][j])


class _PlantAdvance:
    """Applies the RK4 sub-steps of one control period at once."""

    def __init__(self, p: PlantParams, ts: float, m: int):
        self.p = p
        self.m = m
        self.h = ts / m
        phi, gamma = rk4_propagator(p, self.h)
        # cols[:, k] = phi^(m-1-k) gamma, the effect of sub-step k's input
        cols = np.empty((3, m))
        v = gamma.copy()
        for k in range(m - 1, -1, -1):
            cols[:, k] = v
            v = phi @ v
        self.cols = cols
        self.gamma_sum = cols.sum(axis=1)
        self.phi_m = np.linalg.matrix_power(phi, m)
        self.offsets = np.arange(m) + 0.5

    def __call__(self, x: np.ndarray, v_cmd: np.ndarray, step: int) -> np.ndarray:
        if self.p.fsw == 0:
            v = pwm_stage(v_cmd, self.p, 0.0)
            return self.phi_m @ x + np.outer(self.gamma_sum, v)
        t_mid = (step * self.m + self.offsets) * self.h
        u = pwm_stage(v_cmd, self.p, t_mid)
        return self.phi_m @ x + self.cols @ u


def run_scenario(cfg: ScenarioConfig) -> TimeSeries:
    """Run one scenario from rest and return the control-rate trace."""
    cfg.validate()
    ts = cfg.ts_control
    n = cfg.n_steps
    pp, dp = cfg.plant, cfg.droop
    advance = _PlantAdvance(pp, ts, cfg.substeps)
    is_ab = cfg.frame is Frame.AB
    states = control.AbLoopStates() if is_ab else control.DqLoopStates()
    t_ramp = cfg.ramp_cycles * 2 * math.pi / dp.omega_nom

    out = {name: np.empty(n) for name in CHANNELS}
    x = np.zeros((3, 3))  # rows il1, vc, il2; columns phases
    meas = PowerMeasurement()
    ref = ReferenceState(0.0, 0.0)

    for k in range(n):
        t = k * ts
        if not np.all(np.abs(x) < DIVERGENCE_LIMIT):
            raise NumericalDivergence(t, cfg.frame.value)
        vc_ab = clarke(x[1])
        il1_ab = clarke(x[0])
        io_ab = clarke(x[2])
        if is_ab:
            p_inst, q_inst = droop.power_ab(vc_ab, io_ab)
        else:
            p_inst, q_inst = droop.power_dq(park(vc_ab, ref.theta), park(io_ab, ref.theta))
        meas = droop.power_filter_step(meas, p_inst, q_inst, dp.wf, ts)
        omega, e = droop.droop_law(meas.p_filt, meas.q_filt, dp)
        if t_ramp > 0:
            e *= min(1.0, (k + 1) * ts / t_ramp)
        ref, vref_ab = droop.reference_step(ref, omega, e, ts)
        theta = ref.theta
        vc_dq = park(vc_ab, theta)
        il1_dq = park(il1_ab, theta)

        if is_ab:
            iref_ab = control.voltage_loop_ab(vref_ab, vc_ab, states, cfg.voltage_gains,
                                              ts, cfg.harmonic_comp)
            vc_ff = None
            if cfg.ab_feedforward:
                # advance by half a period to offset the hold delay
                vc_ff = inv_park(vc_ab, 0.5 * omega * ts)
            vcmd_ab = control.current_loop_ab(iref_ab, il1_ab, states, cfg.current_gains,
                                              ts, vc_ff)
            iref_dq = park(iref_ab, theta)
        else:
            io_dq = park(io_ab, theta)
            iref_dq = control.voltage_loop_dq(Dq(e, 0.0), vc_dq, io_dq, states,
                                              cfg.voltage_gains, ts, omega, pp.c)
            vcmd_dq = control.current_loop_dq(iref_dq, il1_dq, vc_dq, states,
                                              cfg.current_gains, ts, omega, pp.l1)
            vcmd_ab = inv_park(vcmd_dq, theta)
            iref_ab = inv_park(iref_dq, theta)
        v_cmd = np.array(inv_clarke(vcmd_ab))
        if not (np.all(np.abs(v_cmd) < DIVERGENCE_LIMIT)
                and abs(iref_ab.alpha) + abs(iref_ab.beta) < DIVERGENCE_LIMIT):
            raise NumericalDivergence(t, cfg.frame.value)

        row = (t, theta, vref_ab.alpha, vref_ab.beta, e, 0.0,
               *x[1], *x[0], *x[2],
               vc_ab.alpha, vc_ab.beta, vc_dq.d, vc_dq.q,
               il1_ab.alpha, il1_ab.beta, il1_dq.d, il1_dq.q,
               iref_ab.alpha, iref_ab.beta, iref_dq.d, iref_dq.q,
               *v_cmd, p_inst, q_inst, meas.p_filt, meas.q_filt, omega, e)
        for name, value in zip(CHANNELS, row):
            out[name][k] = value

        x = advance(x, v_cmd, k)

    if not np.all(np.isfinite(x)) or not np.all(np.abs(x) < DIVERGENCE_LIMIT):
        raise NumericalDivergence(n * ts, cfg.frame.value)
    return TimeSeries(cfg, out)


def run_pair(cfg_a: ScenarioConfig, cfg_b: ScenarioConfig,
             parallel: bool = True) -> tuple[TimeSeries, TimeSeries]:
    """
    Run two scenarios that share plant and droop parameters.

    The results come back in argument order; use `TimeSeries.frame` to tell
    them apart.
    """
    if cfg_a.plant != cfg_b.plant or cfg_a.droop != cfg_b.droop:
        raise ConfigError("paired scenarios must share plant and droop parameters")

    def run(cfg):
        try:
            return run_scenario(cfg)
        except ConfigError as err:
            raise ConfigError(f"[{cfg.frame.value}] {err}") from err

    if not parallel:
        return run(cfg_a), run(cfg_b)
    with ThreadPoolExecutor(max_workers=2) as pool:
        fa, fb = pool.submit(run, cfg_a), pool.submit(run, cfg_b)
        return fa.result(), fb.result()


def with_frame(cfg: ScenarioConfig, frame: Frame, **changes) -> ScenarioConfig:
    """Copy of `cfg` for another frame, with that frame's default gains."""
    frame = Frame(frame)
    if frame is cfg.frame:
        return replace(cfg, **changes)
    v, i = table1_gains(frame, cfg.droop.omega_nom)
    return replace(cfg, frame=frame, voltage_gains=v, current_gains=i, **changes)
