"""
Inverter bridge, LCL filter and wye-connected resistive load.

Per phase k the circuit obeys

    L1 d(il1)/dt = v_inv - vc
    C  d(vc)/dt  = il1 - il2
    L2 d(il2)/dt = vc - R*il2

with the load neutral floating. The bridge is either averaged (clamped
command) or switched against a symmetric triangular carrier.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np


@dataclass(frozen=True)
class PlantParams:
    """
    Circuit parameters.

    Parameters
    ----------
    l1 : float
        Inverter-side inductance (H).
    c : float
        Filter capacitance (F).
    l2 : float
        Load-side inductance (H).
    r_load : float
        Per-phase load resistance (Ω).
    vdc : float
        DC-link voltage (V).
    fsw : float
        Carrier frequency (Hz); 0 selects the averaged bridge.

    """
    l1: float = 0.003
    c: float = 4.8162e-6
    l2: float = 0.001
    r_load: float = 145.2
    vdc: float = 800.0
    fsw: float = 10e3

    def __post_init__(self):
        if min(self.l1, self.c, self.l2, self.r_load) <= 0:
            raise ValueError("l1, c, l2 and r_load must be positive")
        if self.fsw < 0:
            raise ValueError("fsw must be non-negative")
        if self.vdc <= 0:
            raise ValueError("vdc must be positive")

    @property
    def f_res(self) -> float:
        """LCL resonance with the load terminal shorted (Hz)."""
        return math.sqrt((self.l1 + self.l2) / (self.l1 * self.l2 * self.c)) / (2 * math.pi)

    def system_matrices(self):
        """Per-phase state-space matrices for the state (il1, vc, il2)."""
        a = np.array([[0.0, -1.0 / self.l1, 0.0],
                      [1.0 / self.c, 0.0, -1.0 / self.c],
                      [0.0, 1.0 / self.l2, -self.r_load / self.l2]])
        b = np.array([1.0 / self.l1, 0.0, 0.0])
        return a, b


@dataclass
class PlantState:
    il1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    il2: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def as_array(self) -> np.ndarray:
        """Rows (il1, vc, il2), columns phases a, b, c."""
        return np.array([self.il1, self.vc, self.il2], dtype=float)

    @classmethod
    def from_array(cls, x) -> PlantState:
        x = np.asarray(x, dtype=float)
        return cls(x[0].copy(), x[1].copy(), x[2].copy())

    def energy(self, p: PlantParams) -> float:
        return 0.5 * (p.l1 * np.sum(self.il1 ** 2) + p.c * np.sum(self.vc ** 2)
                      + p.l2 * np.sum(self.il2 ** 2))


def plant_derivatives(s: PlantState, v_inv, p: PlantParams) -> PlantState:
    v_inv = np.asarray(v_inv, dtype=float)
    return PlantState((v_inv - s.vc) / p.l1,
                      (s.il1 - s.il2) / p.c,
                      (s.vc - p.r_load * s.il2) / p.l2)


def rk4_step(s: PlantState, v_inv, p: PlantParams, h: float) -> PlantState:
    """Classical RK4 step with `v_inv` held over the step."""
    x = s.as_array()

    def f(y):
        return plant_derivatives(PlantState.from_array(y), v_inv, p).as_array()

    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return PlantState.from_array(x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def rk4_propagator(p: PlantParams, h: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Closed form of one RK4 step on the linear per-phase plant.

    RK4 applied to x' = A x + B u with u held constant is exactly
    x+ = Phi x + Gamma u, with Phi and Gamma the degree-4 truncations of the
    exponential series. Returns (Phi, Gamma) for the per-phase state
    (il1, vc, il2).
    """
    a, b = p.system_matrices()
    ha = h * a
    eye = np.eye(3)
    ha2 = ha @ ha
    ha3 = ha2 @ ha
    phi = eye + ha + ha2 / 2 + ha3 / 6 + ha3 @ ha / 24
    gamma = h * (eye + ha / 2 + ha2 / 6 + ha3 / 24) @ b
    return phi, gamma


def carrier(t, fsw: float):
    """Symmetric triangle in [-1, 1], -1 at the start of each period."""
    phase = np.mod(np.asarray(t, dtype=float) * fsw, 1.0)
    return 1.0 - 4.0 * np.abs(phase - 0.5)


def pwm_stage(v_cmd, p: PlantParams, t) -> np.ndarray:
    """
    Bridge output phase voltages for command `v_cmd` at time(s) `t`.

    With an array `t` of shape (n,), the result has shape (n, 3).
    """
    half = 0.5 * p.vdc
    v_cmd = np.asarray(v_cmd, dtype=float)
    if p.fsw == 0:
        v = np.clip(v_cmd, -half, half)
        return np.broadcast_to(v, np.shape(t) + (3,)).copy() if np.ndim(t) else v
    m = v_cmd / half
    cr = carrier(t, p.fsw)
    if np.ndim(t):
        return np.where(m[None, :] >= cr[:, None], half, -half)
    return np.where(m >= cr, half, -half)
