"""Scenario files: a sectioned `key = value` text format mapped onto typed settings."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .cco import CcoSettings
from .mobility import HYSTERESIS_GRID, TTT_GRID, HandoverParams, RlfModel
from .mro import MroGrids, MroWeights
from .power import PowerConstraints
from .radio import RadioParams, SonThresholds
from .topology import Deployment


class ScenarioError(ValueError):
    """Invalid scenario content (exit code 2 on the command line)."""


class ScenarioParseError(ScenarioError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class UnknownParameter(ScenarioError, KeyError):
    def __str__(self):
        return self.args[0]


@dataclass
class MroSettings:
    w_ping_pong: float = 1.0
    w_continue: float = 1.0
    w_late: float = 1.0
    w_early: float = 1.0
    w_wrong: float = 1.0
    hysteresis: float = 2.0
    ttt: float = 0.256
    hysteresis_grid: tuple = HYSTERESIS_GRID
    ttt_grid: tuple = TTT_GRID

    def weights(self) -> MroWeights:
        return MroWeights(self.w_ping_pong, self.w_continue, self.w_late, self.w_early, self.w_wrong)

    def grids(self) -> MroGrids:
        return MroGrids(tuple(self.hysteresis_grid), tuple(self.ttt_grid))

    def initial(self) -> HandoverParams:
        return HandoverParams(self.hysteresis, self.ttt)

    def validate(self) -> None:
        self.weights().validate()
        self.grids().validate()
        if self.hysteresis not in self.hysteresis_grid:
            raise ValueError("mro.hysteresis must lie on mro.hysteresis_grid")
        if self.ttt not in self.ttt_grid:
            raise ValueError("mro.ttt must lie on mro.ttt_grid")


@dataclass
class AnrSettings:
    detection_threshold: float = -100.0
    ttl: float = 300.0
    removal_period: float = 10.0

    def validate(self) -> None:
        if self.ttl <= 0:
            raise ValueError("anr.ttl must be positive")
        if self.removal_period <= 0:
            raise ValueError("anr.removal_period must be positive")


@dataclass
class SimSettings:
    dt: float = 0.1
    duration: float = 600.0
    seed: int = 1
    epoch_length: float = 60.0
    stationary_epochs: bool = False

    def validate(self) -> None:
        if not self.dt > 0:
            raise ValueError("sim.dt must be positive")
        if not self.duration >= self.dt:
            raise ValueError("sim.duration must be at least sim.dt")
        if not self.epoch_length >= self.dt:
            raise ValueError("sim.epoch_length must be at least sim.dt")


@dataclass
class Features:
    power_selfconfig: bool = True
    pci: str = "proposed"
    anr: str = "detection"
    mro: bool = False
    cco: bool = False

    def validate(self) -> None:
        if self.pci not in ("proposed", "random"):
            raise ValueError("features.pci must be proposed or random")
        if self.anr not in ("detection", "full"):
            raise ValueError("features.anr must be detection or full")


SECTIONS = {
    "deployment": Deployment,
    "radio": RadioParams,
    "thresholds": SonThresholds,
    "power": PowerConstraints,
    "rlf": RlfModel,
    "mro": MroSettings,
    "anr": AnrSettings,
    "cco": CcoSettings,
    "sim": SimSettings,
    "features": Features,
}


@dataclass
class ScenarioConfig:
    deployment: Deployment = field(default_factory=Deployment)
    radio: RadioParams = field(default_factory=RadioParams)
    thresholds: SonThresholds = field(default_factory=SonThresholds)
    power: PowerConstraints = field(default_factory=PowerConstraints)
    rlf: RlfModel = field(default_factory=RlfModel)
    mro: MroSettings = field(default_factory=MroSettings)
    anr: AnrSettings = field(default_factory=AnrSettings)
    cco: CcoSettings = field(default_factory=CcoSettings)
    sim: SimSettings = field(default_factory=SimSettings)
    features: Features = field(default_factory=Features)

    def validate(self) -> "ScenarioConfig":
        for name in SECTIONS:
            try:
                getattr(self, name).validate()
            except ValueError as exc:
                raise ScenarioError(str(exc)) from None
        return self

    def digest(self) -> str:
        return hashlib.sha256(dumps(self, comments=False).encode()).hexdigest()[:16]


DOCS = {
    "deployment.area_width": "simulation area width (m)",
    "deployment.area_height": "simulation area height (m)",
    "deployment.macro_x": "macro eNB x position (m)",
    "deployment.macro_y": "macro eNB y position (m)",
    "deployment.macro_power": "macro eNB transmit power (dBm)",
    "deployment.henb_count": "number of HeNBs, one per apartment",
    "deployment.mue_count": "macro users",
    "deployment.fue_count": "femto users, assigned round-robin to apartments",
    "deployment.apartment_radius": "apartment radius assumed by self-configuration (m)",
    "deployment.apartment_radius_spread": "true radii are uniform in radius*(1 +- spread)",
    "deployment.placement_seed": "mixed with sim.seed for placement and shadowing",
    "deployment.backhaul": "terrestrial | satellite (recorded only)",
    "deployment.mue_speed_min": "MUE speed lower bound (m/s)",
    "deployment.mue_speed_max": "MUE speed upper bound (m/s)",
    "deployment.fue_speed_min": "FUE speed lower bound (m/s); 0 with max 0 pins FUEs",
    "deployment.fue_speed_max": "FUE speed upper bound (m/s)",
    "deployment.fue_outdoor_prob": "chance an FUE waypoint lies outside its apartment",
    "deployment.fue_excursion": "outdoor FUE waypoints stay within this multiple of the radius",
    "radio.macro_pl_intercept": "macro loss at 1 km (dB)",
    "radio.macro_pl_slope": "macro loss per decade of km (dB)",
    "radio.femto_pl_intercept": "femto loss at 1 km (dB)",
    "radio.femto_pl_slope": "femto loss per decade of km (dB)",
    "radio.wall_loss": "penetration loss per apartment wall (dB)",
    "radio.noise_power": "noise over the system bandwidth (dBm)",
    "radio.shadowing_sigma": "log-normal shadowing deviation (dB)",
    "radio.shadowing_grid": "shadowing grid node spacing (m)",
    "radio.min_coupling_loss": "floor on total coupling loss (dB)",
    "thresholds.fue_cover_sinr": "FUE counts as HeNB-covered above this SINR (dB)",
    "thresholds.mue_cover_sinr": "MUE counts as macro-covered above this SINR (dB)",
    "thresholds.boundary_offset": "HeNB boundary lies this far in loss beyond the apartment edge (dB)",
    "thresholds.pci_space_size": "fixed at 504",
    "thresholds.pci_group_count": "fixed at 168",
    "thresholds.henb_pci_count": "HeNBs draw PCIs from [0, henb_pci_count)",
    "power.p_min": "lowest HeNB power (dBm)",
    "power.p_max": "highest HeNB power (dBm)",
    "power.scan_noise_sigma": "Gaussian error on downlink scan RSRP (dB)",
    "power.power_on_interval": "spacing of HeNB power-on events (s)",
    "rlf.q_out": "out-of-sync SINR threshold (dB)",
    "rlf.t_rlf": "time below q_out before an RLF (s)",
    "rlf.t_window": "window for ping-pong/continue/early/wrong and re-establishment (s)",
    "rlf.interruption": "post-handover interval without RLF timing (s)",
    "rlf.measurement_period": "A3 measurement period (s)",
    "mro.w_ping_pong": "cost weight",
    "mro.w_continue": "cost weight",
    "mro.w_late": "cost weight",
    "mro.w_early": "cost weight",
    "mro.w_wrong": "cost weight",
    "mro.hysteresis": "initial and baseline hysteresis (dB)",
    "mro.ttt": "initial and baseline time-to-trigger (s)",
    "mro.hysteresis_grid": "allowed hysteresis values (dB)",
    "mro.ttt_grid": "allowed time-to-trigger values (s)",
    "anr.detection_threshold": "neighbor detection RSRP threshold (dBm)",
    "anr.ttl": "idle time before a relation is stale (s)",
    "anr.removal_period": "how often stale relations are swept (s)",
    "cco.jump_threshold": "RSRP step marking a wall crossing (dB)",
    "cco.period": "time between CCO runs (s)",
    "sim.dt": "time step (s)",
    "sim.duration": "simulated time after power-on (s)",
    "sim.seed": "master seed",
    "sim.epoch_length": "metrics/MRO epoch (s)",
    "sim.stationary_epochs": "replay identical UE trajectories every epoch",
    "features.power_selfconfig": "false keeps every HeNB at p_max",
    "features.pci": "proposed | random",
    "features.anr": "detection | full",
    "features.mro": "enable MRO",
    "features.cco": "enable CCO",
}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _coerce(default, text: str):
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(float(v) for v in text.split(",") if v.strip())
    return text


def dumps(config: ScenarioConfig, comments: bool = True) -> str:
    lines = []
    if comments:
        lines.append("# Scenario file: one [section] per settings group, `key = value` per line.")
        lines.append("# Every key is optional; omitted keys take the values shown here.")
    for name in SECTIONS:
        if lines:
            lines.append("")
        lines.append(f"[{name}]")
        section = getattr(config, name)
        for f in dataclasses.fields(section):
            if comments and f"{name}.{f.name}" in DOCS:
                lines.append(f"# {DOCS[name + '.' + f.name]}")
            lines.append(f"{f.name} = {_format(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"


def save_scenario(config: ScenarioConfig, path, comments: bool = True) -> None:
    Path(path).write_text(dumps(config, comments))


def loads(text: str) -> ScenarioConfig:
    values: dict[str, dict[str, object]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioParseError(lineno, f"malformed section header {line!r}")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ScenarioParseError(lineno, f"unknown section [{section}]")
            values.setdefault(section, {})
            continue
        if section is None:
            raise ScenarioParseError(lineno, "key outside of any section")
        if "=" not in line:
            raise ScenarioParseError(lineno, f"expected `key = value`, got {line!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        defaults = SECTIONS[section]()
        if not hasattr(defaults, key) or key not in {f.name for f in dataclasses.fields(defaults)}:
            raise ScenarioParseError(lineno, f"unknown key {section}.{key}")
        if key in values[section]:
            raise ScenarioParseError(lineno, f"duplicate key {section}.{key}")
        try:
            values[section][key] = _coerce(getattr(defaults, key), val)
        except ValueError as exc:
            raise ScenarioParseError(lineno, f"{section}.{key}: {exc}") from None
    cfg = ScenarioConfig(**{name: SECTIONS[name](**values.get(name, {})) for name in SECTIONS})
    return cfg.validate()


def load_scenario(path) -> ScenarioConfig:
    return loads(Path(path).read_text())


def resolve(config: ScenarioConfig, dotted: str):
    section, _, key = dotted.partition(".")
    if section not in SECTIONS or key not in {f.name for f in dataclasses.fields(SECTIONS[section])}:
        raise UnknownParameter(f"unknown parameter {dotted!r}")
    return getattr(getattr(config, section), key)


def with_param(config: ScenarioConfig, dotted: str, value) -> ScenarioConfig:
    """Copy of `config` with one dotted key replaced; strings are parsed like file values."""
    current = resolve(config, dotted)
    section, _, key = dotted.partition(".")
    if isinstance(value, str) and not isinstance(current, str):
        try:
            value = _coerce(current, value)
        except ValueError as exc:
            raise ScenarioError(f"{dotted}: {exc}") from None
    elif isinstance(current, float) and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    new_section = dataclasses.replace(getattr(config, section), **{key: value})
    return dataclasses.replace(config, **{section: new_section}).validate()


def reference_scenario() -> ScenarioConfig:
    return ScenarioConfig()
