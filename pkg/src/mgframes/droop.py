"""
Power measurement, power filtering, P-w / Q-V droop and reference generation.

Instantaneous powers carry a 3/2 factor because the Clarke transform in
`mgframes.transforms` is amplitude invariant.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

from mgframes.transforms import AlphaBeta, Dq

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DroopParams:
    """
    Droop law parameters.

    Parameters
    ----------
    kw : float
        Frequency droop slope, (rad/s)/W.
    kv : float
        Amplitude droop slope, V/var.
    omega_nom : float
        Nominal angular frequency (rad/s).
    e_nom : float
        Nominal phase peak voltage (V).
    wf : float
        Cut-off of the first-order power filter (rad/s).

    """
    kw: float = 0.0003
    kv: float = 0.004
    omega_nom: float = TWO_PI * 50
    e_nom: float = 220 * math.sqrt(2)
    wf: float = TWO_PI * 5

    def __post_init__(self):
        if self.kw < 0 or self.kv < 0:
            raise ValueError("droop slopes must be non-negative")
        if self.omega_nom <= 0 or self.e_nom <= 0 or self.wf <= 0:
            raise ValueError("omega_nom, e_nom and wf must be positive")


@dataclass(frozen=True)
class PowerMeasurement:
    p_inst: float = 0.0
    q_inst: float = 0.0
    p_filt: float = 0.0
    q_filt: float = 0.0


@dataclass(frozen=True)
class ReferenceState:
    theta: float = 0.0
    e: float = 0.0


def power_ab(v: AlphaBeta, i: AlphaBeta) -> tuple[float, float]:
    p = 1.5 * (v.alpha * i.alpha + v.beta * i.beta)
    q = 1.5 * (v.beta * i.alpha - v.alpha * i.beta)
    return p, q


def power_dq(v: Dq, i: Dq) -> tuple[float, float]:
    p = 1.5 * (v.d * i.d + v.q * i.q)
    # sign chosen so that q agrees with power_ab under any rotation
    q = 1.5 * (v.q * i.d - v.d * i.q)
    return p, q


def power_filter_step(m: PowerMeasurement, p_inst: float, q_inst: float,
                      wf: float, ts: float) -> PowerMeasurement:
    """Forward-Euler first-order low-pass on both power channels."""
    g = wf * ts
    if not 0 < g < 1:
        raise ValueError(f"power filter requires 0 < wf*ts < 1, got {g}")
    return PowerMeasurement(p_inst, q_inst,
                            m.p_filt + g * (p_inst - m.p_filt),
                            m.q_filt + g * (q_inst - m.q_filt))


def droop_law(p_filt: float, q_filt: float, d: DroopParams) -> tuple[float, float]:
    return d.omega_nom - d.kw * p_filt, d.e_nom - d.kv * q_filt


def wrap_angle(theta: float) -> float:
    theta = math.fmod(theta, TWO_PI)
    if theta < 0:
        theta += TWO_PI
    # fmod of a tiny negative value can round up to exactly 2*pi
    return 0.0 if theta >= TWO_PI else theta


def reference_step(s: ReferenceState, omega: float, e: float,
                   ts: float) -> tuple[ReferenceState, AlphaBeta]:
    """Advance the reference angle and return the stationary-frame reference."""
    if ts <= 0:
        raise ValueError("ts must be positive")
    theta = wrap_angle(s.theta + omega * ts)
    return ReferenceState(theta, e), AlphaBeta(e * math.cos(theta),
                                               e * math.sin(theta))
