"""Strict YAML run configuration.

Every key carries its unit in its name. Frequencies are given relative to the
model's natural scale (Omega for the Lambda system, E for coupled qubits,
omega for the bosonic mode) and angles in radians. Unknown keys are errors.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import yaml

from .errors import ConfigError

COMMANDS = ("compile", "simulate", "lindblad", "scan", "bound", "ramp", "figure")
MODEL_KINDS = ("lambda", "bosonic", "coupled_qubits")
FIGURES = ("fig2c", "fig2d", "fig3b", "fig3c", "fig3d")


def _strict(cls, data: Any, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    try:
        obj = cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    obj.check(where)
    return obj


def _finite(where: str, name: str, value, positive: bool = False, nonneg: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{where}.{name}: expected a finite number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"{where}.{name}: must be > 0, got {value!r}")
    if nonneg and value < 0:
        raise ConfigError(f"{where}.{name}: must be >= 0, got {value!r}")


def _int(where: str, name: str, value, minimum: int):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{where}.{name}: expected an integer >= {minimum}, got {value!r}")


@dataclass
class ModelBlock:
    kind: str = "lambda"
    # Lambda system
    k2: int = 0
    k3: int = 0
    t_p_per_pi: float = 1.0          # pulse length in units of pi (time units)
    phi_rad: float = 0.0
    # bosonic mode
    truncation_levels: int = 40
    omega: float = 1.0
    alpha_re: float = 1.0
    alpha_im: float = 0.0
    # coupled qubits
    E: float = 1.0
    beta_mix_rad: float = math.pi / 4
    xi_mix_rad: float = 0.0
    interpolation: str = "trig"

    def check(self, where: str):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"{where}.kind: must be one of {MODEL_KINDS}, got {self.kind!r}")
        _int(where, "k2", self.k2, 0)
        _int(where, "k3", self.k3, 0)
        _int(where, "truncation_levels", self.truncation_levels, 4)
        _finite(where, "t_p_per_pi", self.t_p_per_pi, positive=True)
        _finite(where, "omega", self.omega, positive=True)
        for name in ("phi_rad", "alpha_re", "alpha_im", "beta_mix_rad", "xi_mix_rad"):
            _finite(where, name, getattr(self, name))
        _finite(where, "E", self.E)
        if self.E == 0:
            raise ConfigError(f"{where}.E: must be nonzero")
        if self.interpolation not in ("trig", "cot"):
            raise ConfigError(f"{where}.interpolation: must be 'trig' or 'cot'")


@dataclass
class ScheduleBlock:
    N: int = 1
    theta_N_rad: float | None = None   # model default when omitted
    spacing: str = "equal"
    lambda_points_rad: list | None = None

    def check(self, where: str):
        _int(where, "N", self.N, 1)
        if self.theta_N_rad is not None:
            _finite(where, "theta_N_rad", self.theta_N_rad, nonneg=True)
        if self.spacing not in ("equal", "custom"):
            raise ConfigError(f"{where}.spacing: must be 'equal' or 'custom'")
        if self.spacing == "custom":
            pts = self.lambda_points_rad
            if not isinstance(pts, list) or len(pts) != self.N:
                raise ConfigError(f"{where}.lambda_points_rad: custom spacing needs N path points")
            for k, x in enumerate(pts):
                _finite(where, f"lambda_points_rad[{k}]", x)
        elif self.lambda_points_rad is not None:
            raise ConfigError(f"{where}.lambda_points_rad: only allowed with spacing 'custom'")


@dataclass
class ChannelBlock:
    kind: str = "amplitude_relative"
    magnitude_rel: float = 0.0          # amplitude_relative, phase_relative
    magnitude_per_scale: float = 0.0    # detuning_additive, local_pauli
    site: int = 0
    axis: str = "x"
    variance_per_scale_sq: float = 0.0  # stochastic_drift
    correlation_time_times_scale: float | None = None
    offset_per_scale: float = 0.0
    samples_per_pulse: int = 100
    seed: int | None = None

    def check(self, where: str):
        from .robustness import CHANNEL_KINDS
        if self.kind not in CHANNEL_KINDS:
            raise ConfigError(f"{where}.kind: must be one of {CHANNEL_KINDS}, got {self.kind!r}")
        for name in ("magnitude_rel", "magnitude_per_scale", "offset_per_scale"):
            _finite(where, name, getattr(self, name))
        _finite(where, "variance_per_scale_sq", self.variance_per_scale_sq, nonneg=True)
        if self.correlation_time_times_scale is not None:
            _finite(where, "correlation_time_times_scale", self.correlation_time_times_scale, positive=True)
        _int(where, "site", self.site, 0)
        _int(where, "samples_per_pulse", self.samples_per_pulse, 1)
        if self.axis not in ("x", "y", "z"):
            raise ConfigError(f"{where}.axis: must be x, y or z")
        if self.seed is not None:
            _int(where, "seed", self.seed, 0)


@dataclass
class NoiseBlock:
    gamma_e_per_omega: float = 1.5 / (2 * math.pi)
    gamma_dep_per_omega: float = 0.05 / (2 * math.pi)
    branching_to_1: float = 0.5

    def check(self, where: str):
        _finite(where, "gamma_e_per_omega", self.gamma_e_per_omega, nonneg=True)
        _finite(where, "gamma_dep_per_omega", self.gamma_dep_per_omega, nonneg=True)
        _finite(where, "branching_to_1", self.branching_to_1, nonneg=True)
        if self.branching_to_1 > 1:
            raise ConfigError(f"{where}.branching_to_1: must lie in [0, 1]")


@dataclass
class RampBlock:
    ET: float = 100.0
    eps_x_per_E: float = 0.0
    tol_state: float = 1e-7
    max_doublings: int = 10

    def check(self, where: str):
        _finite(where, "ET", self.ET, positive=True)
        _finite(where, "eps_x_per_E", self.eps_x_per_E)
        _finite(where, "tol_state", self.tol_state, positive=True)
        _int(where, "max_doublings", self.max_doublings, 0)


@dataclass
class AxisBlock:
    name: str = ""
    start: float = 0.0
    stop: float = 0.0
    points: int = 1

    def check(self, where: str):
        from .robustness import CHANNEL_AXES, MODEL_AXES, NOISE_AXES, RAMP_AXES
        known = CHANNEL_AXES + MODEL_AXES + NOISE_AXES + RAMP_AXES
        if self.name not in known:
            raise ConfigError(f"{where}.name: must be one of {known}, got {self.name!r}")
        _finite(where, "start", self.start)
        _finite(where, "stop", self.stop)
        _int(where, "points", self.points, 1)


@dataclass
class ScanBlock:
    merit: str = "transfer"
    axes: list = field(default_factory=list)
    N_list: list = field(default_factory=lambda: [1])
    workers: int = 1

    def check(self, where: str):
        from .robustness import MERITS
        if self.merit not in MERITS:
            raise ConfigError(f"{where}.merit: must be one of {MERITS}, got {self.merit!r}")
        if not isinstance(self.axes, list) or not self.axes:
            raise ConfigError(f"{where}.axes: need at least one axis")
        self.axes = [a if isinstance(a, AxisBlock) else _strict(AxisBlock, a, f"{where}.axes[{k}]")
                     for k, a in enumerate(self.axes)]
        if len({a.name for a in self.axes}) != len(self.axes):
            raise ConfigError(f"{where}.axes: duplicate axis names")
        if not isinstance(self.N_list, list) or not self.N_list:
            raise ConfigError(f"{where}.N_list: need at least one N")
        for k, n in enumerate(self.N_list):
            _int(where, f"N_list[{k}]", n, 1)
        _int(where, "workers", self.workers, 1)


@dataclass
class BoundBlock:
    trials: int = 1000
    points_per_interval: int = 256
    lambda_rad: float | None = None   # evaluate the model sequence at this path value instead

    def check(self, where: str):
        _int(where, "trials", self.trials, 1)
        _int(where, "points_per_interval", self.points_per_interval, 1)
        if self.lambda_rad is not None:
            _finite(where, "lambda_rad", self.lambda_rad, nonneg=True)


@dataclass
class FigureBlock:
    name: str = "fig3b"

    def check(self, where: str):
        if self.name not in FIGURES:
            raise ConfigError(f"{where}.name: must be one of {FIGURES}, got {self.name!r}")


_BLOCKS = {"model": ModelBlock, "schedule": ScheduleBlock, "noise": NoiseBlock, "ramp": RampBlock,
           "scan": ScanBlock, "bound": BoundBlock, "figure": FigureBlock}


@dataclass
class RunConfig:
    command: str = "simulate"
    seed: int = 0
    out_dir: str = "stamkit_out"
    grid_scale: float = 1.0
    model: ModelBlock = field(default_factory=ModelBlock)
    schedule: ScheduleBlock = field(default_factory=ScheduleBlock)
    channels: list = field(default_factory=list)
    noise: NoiseBlock = field(default_factory=NoiseBlock)
    ramp: RampBlock = field(default_factory=RampBlock)
    scan: ScanBlock | None = None
    bound: BoundBlock = field(default_factory=BoundBlock)
    figure: FigureBlock = field(default_factory=FigureBlock)

    def check(self, where: str = "config"):
        if self.command not in COMMANDS:
            raise ConfigError(f"{where}.command: must be one of {COMMANDS}, got {self.command!r}")
        _int(where, "seed", self.seed, 0)
        if self.seed >= 2 ** 64:
            raise ConfigError(f"{where}.seed: must fit in 64 bits")
        if not isinstance(self.out_dir, str) or not self.out_dir:
            raise ConfigError(f"{where}.out_dir: expected a non-empty path")
        _finite(where, "grid_scale", self.grid_scale, positive=True)
        for name, cls in _BLOCKS.items():
            val = getattr(self, name)
            if val is None or isinstance(val, cls):
                continue
            setattr(self, name, _strict(cls, val, f"{where}.{name}"))
        if not isinstance(self.channels, list):
            raise ConfigError(f"{where}.channels: expected a list")
        self.channels = [c if isinstance(c, ChannelBlock) else _strict(ChannelBlock, c, f"{where}.channels[{k}]")
                         for k, c in enumerate(self.channels)]
        if self.command == "scan" and self.scan is None:
            raise ConfigError(f"{where}.scan: the scan command needs a scan block")

    def to_dict(self) -> dict:
        return asdict(self)


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    return config_from_dict(data)


def config_from_dict(data: Any) -> RunConfig:
    return _strict(RunConfig, data, "config")


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=False)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
