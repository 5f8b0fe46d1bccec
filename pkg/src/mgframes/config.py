"""
Plain-text scenario configuration.

INI-style document with sections [plant], [droop], [control], [control.ab],
[control.dq] and [sim]. All values are SI. The defaults reproduce the
reference microgrid: 220 V rms / 50 Hz, 145.2 Ω load, LCL filter
3 mH / 4.8162 µF / 1 mH and the published droop and compensator gains.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
import math
import re

from mgframes.control import HarmonicCompParams, PiParams, PrParams
from mgframes.droop import DroopParams
from mgframes.engine import ConfigError, Frame, ScenarioConfig
from mgframes.plant import PlantParams

# section -> keys, in output order
LAYOUT = {
    "plant": ("l1", "c", "l2", "r_load", "vdc", "fsw"),
    "droop": ("v_nom_rms", "f_nom", "kw", "kv", "wf"),
    "control": ("frame", "wc_ratio", "ab_feedforward", "harmonics"),
    "control.ab": ("kp_v_ab", "ki_v_ab", "kp_i_ab", "ki_i_ab"),
    "control.dq": ("kp_v_dq", "ki_v_dq", "kp_i_dq", "ki_i_dq"),
    "sim": ("ts_control", "h_plant", "t_end", "record_decimation", "ramp_cycles",
            "n_cycles", "h_max", "thd_signal"),
}
# keys in the frame sections drop the frame suffix in the file
_SUFFIXED = ("control.ab", "control.dq")


@dataclass(frozen=True)
class Settings:
    """Flat view of a configuration document."""
    l1: float = 0.003
    c: float = 4.8162e-6
    l2: float = 0.001
    r_load: float = 145.2
    vdc: float = 800.0
    fsw: float = 10000.0
    v_nom_rms: float = 220.0
    f_nom: float = 50.0
    kw: float = 0.0003
    kv: float = 0.004
    wf: float = 2 * math.pi * 5
    frame: str = "ab"
    wc_ratio: float = 0.03
    ab_feedforward: bool = True
    harmonics: str = ""
    kp_v_ab: float = 0.2
    ki_v_ab: float = 100.0
    kp_i_ab: float = 5.0
    ki_i_ab: float = 400.0
    kp_v_dq: float = 0.1
    ki_v_dq: float = 3.0
    kp_i_dq: float = 20.0
    ki_i_dq: float = 1000.0
    ts_control: float = 1e-4
    h_plant: float = 1e-6
    t_end: float = 0.5
    record_decimation: int = 10
    ramp_cycles: float = 2.0
    n_cycles: int = 10
    h_max: int = 50
    thd_signal: str = "capacitor"

    def harmonic_list(self) -> tuple[tuple[int, float], ...]:
        """Parse `harmonics`, e.g. "5:20, 7:10" (order:gain pairs)."""
        out = []
        for item in filter(None, (s.strip() for s in self.harmonics.split(","))):
            try:
                h, k = item.split(":")
                out.append((int(h), float(k)))
            except ValueError as err:
                raise ConfigError(f"bad harmonic entry {item!r}, expected order:gain") from err
        return tuple(out)

    def scenario(self, frame: str | Frame | None = None) -> ScenarioConfig:
        frame = Frame(frame or self.frame)
        try:
            omega_nom = 2 * math.pi * self.f_nom
            plant = PlantParams(self.l1, self.c, self.l2, self.r_load, self.vdc, self.fsw)
            droop = DroopParams(self.kw, self.kv, omega_nom,
                                self.v_nom_rms * math.sqrt(2), self.wf)
            harmonic = None
            if frame is Frame.AB:
                wc = self.wc_ratio * omega_nom
                vg = PrParams(self.kp_v_ab, self.ki_v_ab, omega_nom, wc)
                cg = PrParams(self.kp_i_ab, self.ki_i_ab, omega_nom, wc)
                if self.harmonics.strip():
                    harmonic = HarmonicCompParams(self.harmonic_list(), wc)
            else:
                vg = PiParams(self.kp_v_dq, self.ki_v_dq)
                cg = PiParams(self.kp_i_dq, self.ki_i_dq)
            cfg = ScenarioConfig(frame, plant, droop, vg, cg, harmonic, self.ts_control,
                                 self.h_plant, self.t_end, self.record_decimation,
                                 self.ramp_cycles, self.ab_feedforward)
        except ConfigError:
            raise
        except ValueError as err:
            raise ConfigError(str(err)) from err
        cfg.validate()
        return cfg


_TYPES = {f.name: type(f.default) for f in fields(Settings)}


def _file_key(section, key):
    return key.rsplit("_", 1)[0] if section in _SUFFIXED else key


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if value.is_integer() and abs(value) < 1e15:
            return str(int(value))
        return re.sub(r"e([+-])0*(\d)", r"e\1\2", repr(value))
    return str(value)


def format_config(s: Settings) -> str:
    lines = []
    for section, keys in LAYOUT.items():
        lines.append(f"[{section}]")
        for key in keys:
            lines.append(f"{_file_key(section, key)} = {format_value(getattr(s, key))}".rstrip())
        lines.append("")
    return "\n".join(lines)


def _convert(name, raw):
    kind = _TYPES[name]
    raw = raw.strip()
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "yes", "1", "on")
        if kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError(raw)
            return int(value)
        if kind is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
            return value
    except ValueError as err:
        raise ConfigError(f"{name}: cannot read {raw!r} as {kind.__name__}") from err
    return raw


def parse_config(text: str, base: Settings | None = None) -> Settings:
    """Parse a document; keys not given keep their value from `base`."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError(f"malformed config: {err}") from err
    changes = {}
    for section in parser.sections():
        if section not in LAYOUT:
            raise ConfigError(f"unknown section [{section}]")
        allowed = {_file_key(section, k): k for k in LAYOUT[section]}
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            name = allowed[key]
            changes[name] = _convert(name, raw)
    settings = replace(base or Settings(), **changes)
    if settings.frame not in ("ab", "dq"):
        raise ConfigError(f"frame must be 'ab' or 'dq', got {settings.frame!r}")
    if settings.thd_signal not in ("capacitor", "load"):
        raise ConfigError("thd_signal must be 'capacitor' or 'load'")
    return settings


def load_config(path) -> Settings:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror or err}") from err
    return parse_config(text)
