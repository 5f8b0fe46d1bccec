"""
Discrete-time compensators and the two cascaded inner-loop assemblies.

Stationary frame: quasi-resonant PR compensators per axis,

    G(s) = kp + ki*s / (s^2 + 2*wc*s + w0^2),

optionally paralleled with resonant harmonic sections. Synchronous frame: PI
compensators with capacitor/inductor cross-coupling decoupling and
voltage/current feedforward.

Resonant sections are discretized with the bilinear transform prewarped at the
section's own resonant frequency and realized in transposed direct form II.
PI integrators use trapezoidal integration. No anti-windup is applied here;
actuator limits belong to the modulator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

from mgframes.transforms import AlphaBeta, Dq


@dataclass(frozen=True)
class PrParams:
    """
    Quasi-resonant PR compensator parameters.

    Parameters
    ----------
    kp : float
        Proportional gain.
    ki : float
        Resonant gain. The peak resonant gain is ki/(2*wc).
    w0 : float
        Resonant frequency (rad/s).
    wc : float
        Damping cut-off (rad/s), 0 < wc < w0.

    """
    kp: float
    ki: float
    w0: float
    wc: float

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ValueError("PR gains must be non-negative")
        if not (self.w0 > 0 and 0 < self.wc < self.w0):
            raise ValueError(f"need 0 < wc < w0, got wc={self.wc}, w0={self.w0}")


@dataclass(frozen=True)
class PiParams:
    kp: float
    ki: float

    def __post_init__(self):
        if self.kp < 0 or self.ki < 0:
            raise ValueError("PI gains must be non-negative")


@dataclass(frozen=True)
class HarmonicCompParams:
    """
    Resonant harmonic compensator, sum over h of kih*s/(s^2 + 2*wc*s + (h*w0)^2).

    `harmonics` is a tuple of (order, gain) pairs. `wc` is the damping applied
    to every section.
    """
    harmonics: tuple[tuple[int, float], ...] = ()
    wc: float = 0.03 * 2 * math.pi * 50

    def __post_init__(self):
        orders = [h for h, _ in self.harmonics]
        if len(set(orders)) != len(orders):
            raise ValueError("harmonic orders must be distinct")
        for h, k in self.harmonics:
            if int(h) != h or h <= 1:
                raise ValueError(f"harmonic order must be an integer > 1, got {h}")
            if k < 0:
                raise ValueError("harmonic gains must be non-negative")
        if self.wc <= 0:
            raise ValueError("wc must be positive")

    def check_nyquist(self, w0: float, ts: float):
        for h, _ in self.harmonics:
            if h * w0 >= math.pi / ts:
                raise ValueError(
                    f"harmonic {h} at {h * w0:.1f} rad/s aliases at ts={ts}")


@dataclass
class ResonatorState:
    x1: float = 0.0
    x2: float = 0.0

    def reset(self):
        self.x1 = self.x2 = 0.0


@dataclass
class IntegratorState:
    """Trapezoidal integrator state; `e_prev` is the previous input sample."""
    acc: float = 0.0
    e_prev: float = 0.0

    def reset(self):
        self.acc = self.e_prev = 0.0


@lru_cache(maxsize=256)
def _sos(ki: float, w0: float, wc: float, ts: float) -> tuple[float, ...]:
    if ts <= 0:
        raise ValueError("sampling period must be positive")
    if w0 >= math.pi / ts:
        raise ValueError(
            f"resonant frequency {w0:.1f} rad/s is at or above Nyquist "
            f"{math.pi / ts:.1f} rad/s")
    k = w0 / math.tan(w0 * ts / 2)  # prewarped bilinear constant
    a0 = k * k + 2 * wc * k + w0 * w0
    a1 = 2 * (w0 * w0 - k * k)
    a2 = k * k - 2 * wc * k + w0 * w0
    b0 = ki * k
    return (b0 / a0, 0.0, -b0 / a0, a1 / a0, a2 / a0)


def discretize_resonator(p: PrParams, ts: float) -> tuple[float, ...]:
    """
    Discretize the resonant part ki*s/(s^2 + 2*wc*s + w0^2).

    Returns
    -------
    tuple
        Normalized second-order-section coefficients (b0, b1, b2, a1, a2) of
        H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2).

    """
    return _sos(p.ki, p.w0, p.wc, ts)


def sos_response(coeffs, w, ts):
    """Frequency response of a section at angular frequency `w` (rad/s)."""
    b0, b1, b2, a1, a2 = coeffs
    z1 = complex(math.cos(w * ts), -math.sin(w * ts))
    return (b0 + b1 * z1 + b2 * z1 * z1) / (1 + a1 * z1 + a2 * z1 * z1)


def resonator_response(ki, w0, wc, w):
    """Continuous response ki*s/(s^2 + 2*wc*s + w0^2) at s = j*w."""
    s = 1j * w
    return ki * s / (s * s + 2 * wc * s + w0 * w0)


def _sos_step(state: ResonatorState, e: float, coeffs) -> float:
    b0, b1, b2, a1, a2 = coeffs
    y = b0 * e + state.x1
    state.x1 = b1 * e - a1 * y + state.x2
    state.x2 = b2 * e - a2 * y
    return y


def pr_step(state: ResonatorState, error: float, p: PrParams, ts: float) -> float:
    """Advance one PR compensator by one sample and return its output."""
    return p.kp * error + _sos_step(state, error, discretize_resonator(p, ts))


def harmonic_comp_step(states: list[ResonatorState], error: float,
                       p: HarmonicCompParams, w0: float, ts: float) -> float:
    p.check_nyquist(w0, ts)
    out = 0.0
    for state, (h, kih) in zip(states, p.harmonics):
        out += _sos_step(state, error, _sos(kih, h * w0, p.wc, ts))
    return out


def pi_step(state: IntegratorState, error: float, p: PiParams, ts: float) -> float:
    if ts <= 0:
        raise ValueError("sampling period must be positive")
    state.acc += 0.5 * ts * (state.e_prev + error)
    state.e_prev = error
    return p.kp * error + p.ki * state.acc


@dataclass
class AbLoopStates:
    """Compensator states of the stationary-frame cascade, one set per axis."""
    v: list[ResonatorState] = field(
        default_factory=lambda: [ResonatorState(), ResonatorState()])
    i: list[ResonatorState] = field(
        default_factory=lambda: [ResonatorState(), ResonatorState()])
    # harmonic sections of the voltage loop, per axis
    vh: list[list[ResonatorState]] = field(default_factory=lambda: [[], []])


@dataclass
class DqLoopStates:
    v: list[IntegratorState] = field(
        default_factory=lambda: [IntegratorState(), IntegratorState()])
    i: list[IntegratorState] = field(
        default_factory=lambda: [IntegratorState(), IntegratorState()])


def voltage_loop_ab(vref: AlphaBeta, vc: AlphaBeta, states: AbLoopStates,
                    gains: PrParams, ts: float,
                    harmonic: HarmonicCompParams | None = None) -> AlphaBeta:
    """Capacitor-voltage PR loop; returns the inverter-current reference."""
    out = []
    for axis in range(2):
        err = vref[axis] - vc[axis]
        y = pr_step(states.v[axis], err, gains, ts)
        if harmonic is not None and harmonic.harmonics:
            hs = states.vh[axis]
            while len(hs) < len(harmonic.harmonics):
                hs.append(ResonatorState())
            y += harmonic_comp_step(hs, err, harmonic, gains.w0, ts)
        out.append(y)
    return AlphaBeta(*out)


def current_loop_ab(iref: AlphaBeta, il1: AlphaBeta, states: AbLoopStates,
                    gains: PrParams, ts: float,
                    vc: AlphaBeta | None = None) -> AlphaBeta:
    """
    Inverter-current PR loop; returns the inverter voltage command.

    When `vc` is given, the measured capacitor voltage is added to the command
    as feedforward.
    """
    out = []
    for axis in range(2):
        y = pr_step(states.i[axis], iref[axis] - il1[axis], gains, ts)
        if vc is not None:
            y += vc[axis]
        out.append(y)
    return AlphaBeta(*out)


def voltage_loop_dq(vref: Dq, vc: Dq, io: Dq, states: DqLoopStates,
                    gains: PiParams, ts: float, omega: float, c_f: float) -> Dq:
    """Voltage PI loop with capacitor decoupling and output-current feedforward."""
    ud = pi_step(states.v[0], vref.d - vc.d, gains, ts)
    uq = pi_step(states.v[1], vref.q - vc.q, gains, ts)
    return Dq(ud - omega * c_f * vc.q + io.d,
              uq + omega * c_f * vc.d + io.q)


def current_loop_dq(iref: Dq, il1: Dq, vc: Dq, states: DqLoopStates,
                    gains: PiParams, ts: float, omega: float, l1: float) -> Dq:
    """Current PI loop with inductor decoupling and capacitor-voltage feedforward."""
    ud = pi_step(states.i[0], iref.d - il1.d, gains, ts)
    uq = pi_step(states.i[1], iref.q - il1.q, gains, ts)
    return Dq(ud - omega * l1 * il1.q + vc.d,
              uq + omega * l1 * il1.d + vc.q)
