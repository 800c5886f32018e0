"""Error channels, figures of merit and deterministic parameter sweeps.

Channels perturb a compiled :class:`~stamkit.protocol.PulseSequence`:

``amplitude_relative``
    scale the coupling part of every pulse by (1 + magnitude); the coupling
    part is the Hamiltonian minus its component along the model's detuning
    operator.
``detuning_additive``
    add magnitude * D, with D the model's detuning operator (|e><e| for the
    Lambda system).
``phase_relative``
    stretch every duration by (1 + magnitude), so each coupled pair picks up
    a phase flip of pi (1 + magnitude).
``local_pauli``
    add magnitude * sigma_axis on one qubit during every pulse.
``stochastic_drift``
    add beta(t) D, where beta is an Ornstein-Uhlenbeck drift (plus optional
    static offset) held piecewise constant on slices of each pulse.
"""
from __future__ import annotations

import concurrent.futures
import csv
import functools
import io
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import dynamics, qla
from ._kernels import ou_area_increments
from .errors import ChannelNotApplicable, InvalidArgument
from .models import (
    KET0,
    KET1,
    KETE,
    PSI_PLUS,
    SIGMA,
    BosonicModel,
    CoupledQubitModel,
    LambdaModel,
    build_bosonic,
    build_coupled_qubits,
    build_lambda,
    coherent_state,
    embed,
    h0_h1,
    lambda_target_gate,
    leakage,
    product_state,
)
from .protocol import Pulse, PulseSequence, compile_sequence, make_schedule

CHANNEL_KINDS = ("amplitude_relative", "detuning_additive", "phase_relative", "local_pauli", "stochastic_drift")


@dataclass(frozen=True)
class ErrorChannel:
    kind: str
    magnitude: float = 0.0
    site: int = 0
    axis: str = "x"
    correlation_time: float = math.inf
    variance: float = 0.0
    offset: float = 0.0
    seed: int = 0
    samples_per_pulse: int = 100

    def __post_init__(self):
        if self.kind not in CHANNEL_KINDS:
            raise InvalidArgument(f"unknown channel kind {self.kind!r}")
        if not math.isfinite(self.magnitude) or not math.isfinite(self.offset):
            raise InvalidArgument("channel magnitude must be finite")
        if not (self.variance >= 0 and math.isfinite(self.variance)):
            raise InvalidArgument("drift variance must be finite and >= 0")
        if not self.correlation_time > 0:
            raise InvalidArgument("correlation time must be positive")
        if self.axis not in SIGMA:
            raise InvalidArgument(f"unknown Pauli axis {self.axis!r}")

    @property
    def is_null(self) -> bool:
        if self.kind == "stochastic_drift":
            return self.variance == 0 and self.offset == 0
        return self.magnitude == 0


# ---------------------------------------------------------------- stochastic drift


def ou_coefficients(dt: float, tau_c: float, variance: float):
    """(a, gain, l11, l21, l22) for exact OU sampling on slices of length ``dt``."""
    if math.isinf(tau_c):
        return 1.0, dt, 0.0, 0.0, 0.0
    x = dt / tau_c
    a = math.exp(-x)
    one_minus_a = -math.expm1(-x)
    var_b = variance * -math.expm1(-2 * x)
    if x < 1e-2:
        f = x ** 3 / 3 - x ** 4 / 4 + 7 * x ** 5 / 60 - x ** 6 / 24
    else:
        f = x + 2 * math.expm1(-x) - 0.5 * math.expm1(-2 * x)
    var_i = 2 * variance * tau_c ** 2 * f
    cov = variance * tau_c * one_minus_a ** 2
    l11 = math.sqrt(var_b)
    l21 = cov / l11 if l11 > 0 else 0.0
    l22 = math.sqrt(max(var_i - l21 ** 2, 0.0))
    return a, tau_c * one_minus_a, l11, l21, l22


def drift_slices(ch: ErrorChannel, durations: Sequence[float], rng: np.random.Generator) -> list[np.ndarray]:
    """Slice-averaged drift values for consecutive pulses of the given durations."""
    sd = math.sqrt(ch.variance)
    beta = np.array([rng.normal() * sd if not math.isinf(ch.correlation_time) or sd else 0.0])
    out = []
    for tau in durations:
        dt = tau / ch.samples_per_pulse
        z = rng.normal(size=(1, ch.samples_per_pulse, 2))
        inc, beta = ou_area_increments(z, beta, *ou_coefficients(dt, ch.correlation_time, ch.variance))
        out.append(inc[0] / dt + ch.offset)
    return out


def pulse_area_statistics(ch: ErrorChannel, tau_p: float, trials: int = 10_000, steps: int = 100,
                          seed: int | None = None) -> tuple[float, float]:
    """Sample mean and variance of the pulse-area error delta = int_0^tau_p beta dt.

    The drift starts in its stationary distribution; slice integrals are
    sampled exactly, so ``steps`` only affects how the path is resolved.
    """
    if trials < 100:
        raise InvalidArgument("need at least 100 trials")
    if ch.kind != "stochastic_drift":
        raise ChannelNotApplicable("pulse-area statistics need a stochastic_drift channel")
    if ch.variance == 0:
        delta = ch.offset * tau_p
        return delta, 0.0
    rng = np.random.default_rng(ch.seed if seed is None else seed)
    sd = math.sqrt(ch.variance)
    beta0 = rng.normal(size=trials) * sd
    z = rng.normal(size=(trials, steps, 2))
    inc, _ = ou_area_increments(z, beta0, *ou_coefficients(tau_p / steps, ch.correlation_time, ch.variance))
    delta = inc.sum(axis=1) + ch.offset * tau_p
    return float(delta.mean()), float(delta.var(ddof=1))


def ou_area_variance(tau_c: float, variance: float, tau_p: float) -> float:
    """Closed-form variance of the stationary OU integral over ``tau_p``."""
    x = tau_p / tau_c
    return 2 * variance * tau_c ** 2 * (x - 1 + math.exp(-x))


# ---------------------------------------------------------------- channel injection


def _coupling_part(h: np.ndarray, d: np.ndarray | None) -> np.ndarray:
    if d is None:
        return h
    return h - (np.vdot(d, h) / np.vdot(d, d)) * d


def apply_channel(seq: PulseSequence, ch: ErrorChannel) -> PulseSequence:
    if ch.is_null:
        return seq
    m = ch.magnitude
    kind = ch.kind
    d = seq.detuning_op
    if kind == "phase_relative":
        return seq.replace_pulses(replace(p, duration=p.duration * (1 + m)) for p in seq.pulses)
    if kind == "amplitude_relative":
        return seq.replace_pulses(replace(p, hamiltonian=p.hamiltonian + m * _coupling_part(p.hamiltonian, d))
                                  for p in seq.pulses)
    if kind == "detuning_additive":
        if d is None:
            raise ChannelNotApplicable(f"model {seq.model!r} declares no detuning operator")
        return seq.replace_pulses(replace(p, hamiltonian=p.hamiltonian + m * d) for p in seq.pulses)
    if kind == "local_pauli":
        if not seq.n_qubits or not 0 <= ch.site < seq.n_qubits:
            raise ChannelNotApplicable(f"model {seq.model!r} has no qubit {ch.site}")
        extra = m * embed(SIGMA[ch.axis], ch.site, seq.n_qubits)
        return seq.replace_pulses(replace(p, hamiltonian=p.hamiltonian + extra) for p in seq.pulses)
    # stochastic drift
    if d is None:
        raise ChannelNotApplicable(f"model {seq.model!r} declares no detuning operator")
    rng = np.random.default_rng(ch.seed)
    pulses = []
    for p, betas in zip(seq.pulses, drift_slices(ch, [p.duration for p in seq.pulses], rng)):
        dt = p.duration / len(betas)
        pulses.extend(Pulse(p.lam, p.hamiltonian + b * d, dt, p.energies) for b in betas)
    return seq.replace_pulses(pulses)


def apply_channels(seq: PulseSequence, channels: Sequence[ErrorChannel]) -> PulseSequence:
    for ch in channels:
        seq = apply_channel(seq, ch)
    return seq


# ---------------------------------------------------------------- figures of merit

SIX_STATES = tuple(np.array(v, dtype=np.complex128) / np.linalg.norm(v)
                   for v in ([1, 0], [0, 1], [1, 1], [1, -1], [1, 1j], [1, -1j]))


@functools.lru_cache(maxsize=256)
def lambda_sequence(model: LambdaModel, N: int, theta_N: float = math.pi / 2) -> PulseSequence:
    return compile_sequence(build_lambda(model), make_schedule(N, theta_N))


@functools.lru_cache(maxsize=64)
def coupled_sequence(model: CoupledQubitModel, N: int = 1) -> PulseSequence:
    return compile_sequence(build_coupled_qubits(model), make_schedule(N, math.pi / 4))


def transfer_efficiency(model: LambdaModel, N: int, channels: Sequence[ErrorChannel] = (),
                        theta_N: float = math.pi / 2) -> float:
    """|<0|U|1>|^2 after the (perturbed) Lambda sequence."""
    seq = apply_channels(lambda_sequence(model, N, theta_N), channels)
    psi = dynamics.propagate_unitary(seq, qla.basis_state(3, KET1))
    return float(abs(psi[KET0]) ** 2)


def six_state_gate_fidelity(model: LambdaModel, N: int, noise: dynamics.LindbladModel,
                            channels: Sequence[ErrorChannel] = (), theta_N: float = math.pi / 2) -> float:
    """Average fidelity over the six qubit axis states against the ideal target gate."""
    seq = apply_channels(lambda_sequence(model, N, theta_N), channels)
    sup = dynamics.lindblad_map(seq, noise)
    target = lambda_target_gate(N, theta_N, model.phi)
    total = 0.0
    for v in SIX_STATES:
        psi_in = np.zeros(3, dtype=np.complex128)
        psi_in[[KET1, KET0]] = v
        psi_t = np.zeros(3, dtype=np.complex128)
        psi_t[[KET1, KET0]] = target @ v
        rho = dynamics.apply_map(sup, qla.density_from_state(psi_in))
        total += qla.fidelity_to_state(rho, psi_t)
    return total / len(SIX_STATES)


def coupled_stam_fidelity(model: CoupledQubitModel, N: int = 1, channels: Sequence[ErrorChannel] = ()) -> float:
    """Fidelity to |psi_+> after the compiled sequence ending at Theta_N = pi/4."""
    seq = apply_channels(coupled_sequence(model, N), channels)
    return qla.state_fidelity(PSI_PLUS, dynamics.propagate_unitary(seq, product_state("11")))


def coupled_ramp_family(model: CoupledQubitModel, eps_x: float = 0.0) -> dynamics.HamiltonianFamily:
    h0, h1 = h0_h1(model.E)
    return dynamics.HamiltonianFamily([
        (lambda s: 1 - s, h0),
        (lambda s: s, h1),
        (lambda s: eps_x, embed(SIGMA["x"], 0, 2)),
    ])


def coupled_ramp_fidelity(model: CoupledQubitModel, total_time: float, eps_x: float = 0.0,
                          tol: float = 1e-7) -> float:
    """Linear ramp s = t/T from |11>; the local field acts during the whole ramp."""
    ramp = dynamics.RampSpec(total_time, energy_scale=model.E)
    psi = dynamics.propagate_ramp(ramp, coupled_ramp_family(model, eps_x), product_state("11"), tol=tol)
    return qla.state_fidelity(PSI_PLUS, psi)


def coherent_fidelity(model: BosonicModel, N: int = 1, theta_N: float = 1.0) -> tuple[float, float]:
    """(fidelity to |theta_N alpha>, top-two-level leakage) for the bosonic sequence."""
    seq = compile_sequence(build_bosonic(model), make_schedule(N, theta_N))
    psi = dynamics.propagate_unitary(seq, qla.basis_state(model.truncation, 0))
    ref = coherent_state(theta_N * complex(model.alpha), model.truncation)
    return qla.state_fidelity(ref, psi), leakage(psi)


# ---------------------------------------------------------------- sweeps


@dataclass
class ScanResult:
    axes: dict                     # name -> 1-D array, in grid order
    values: np.ndarray             # shape (len(n_values), *axis lengths)
    n_values: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (len(self.n_values),) + tuple(len(v) for v in self.axes.values())
        if self.values.shape != shape:
            raise InvalidArgument(f"values shape {self.values.shape} does not match axes {shape}")

    def for_n(self, n: int) -> np.ndarray:
        return self.values[list(self.n_values).index(n)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.axes)
        w.writerow(names + ["merit", "model", "N", "seed"])
        model = self.metadata.get("model", "")
        seed = self.metadata.get("seed", 0)
        for i, n in enumerate(self.n_values):
            for idx in itertools.product(*(range(len(v)) for v in self.axes.values())):
                coords = [f"{self.axes[k][j]:.12g}" for k, j in zip(names, idx)]
                w.writerow(coords + [f"{self.values[(i,) + idx]:.12g}", model, n, seed])
        return buf.getvalue()


MERITS = ("transfer", "gate", "stam_target", "ramp_target", "coherent")
MODEL_AXES = ("Delta_per_omega",)
NOISE_AXES = ("gamma_e_per_omega", "gamma_dep_per_omega")
RAMP_AXES = ("ET",)
CHANNEL_AXES = ("amplitude_relative", "detuning_additive", "phase_relative", "local_pauli")


def _evaluate_point(model, merit: str, N: int, point: dict, base_channels, noise_rates, seed_seq) -> float:
    if "Delta_per_omega" in point:
        model, _ = LambdaModel.from_omega_delta(model.Omega, point["Delta_per_omega"] * model.Omega, model.phi)
    unit = model.Omega if isinstance(model, LambdaModel) else getattr(model, "E", 1.0)
    channels = list(base_channels)
    for kind in CHANNEL_AXES:
        if kind in point:
            mag = point[kind] * (unit if kind in ("detuning_additive", "local_pauli") else 1.0)
            channels.append(ErrorChannel(kind, mag))
    # stochastic channels get a child seed derived from (master seed, grid index)
    child = int(seed_seq.generate_state(1)[0])
    channels = [replace(c, seed=child) if c.kind == "stochastic_drift" else c for c in channels]
    if merit == "transfer":
        return transfer_efficiency(model, N, channels)
    if merit == "gate":
        ge = point.get("gamma_e_per_omega", noise_rates.get("gamma_e_per_omega", 0.0)) * model.Omega
        gd = point.get("gamma_dep_per_omega", noise_rates.get("gamma_dep_per_omega", 0.0)) * model.Omega
        return six_state_gate_fidelity(model, N, dynamics.lambda_noise(ge, gd), channels)
    if merit == "stam_target":
        return coupled_stam_fidelity(model, N, channels)
    if merit == "ramp_target":
        eps = point.get("local_pauli", 0.0) * model.E
        return coupled_ramp_fidelity(model, point["ET"] / model.E, eps)
    if merit == "coherent":
        return coherent_fidelity(model, N)[0]
    raise InvalidArgument(f"unknown merit {merit!r}")


def sweep(model, merit: str, axes: dict, n_list: Sequence[int] = (1,), seed: int = 0,
          channels: Sequence[ErrorChannel] = (), noise_rates: dict | None = None,
          workers: int = 1) -> ScanResult:
    """Evaluate ``merit`` on the Cartesian grid of ``axes`` for every N in ``n_list``.

    Axis names are channel kinds (magnitudes in units of Omega or E for the
    additive kinds), ``Delta_per_omega`` (Lambda model), noise rates
    ``gamma_e_per_omega`` / ``gamma_dep_per_omega`` and ``ET`` for ramps.
    """
    if merit not in MERITS:
        raise InvalidArgument(f"unknown merit {merit!r}")
    if not axes:
        raise InvalidArgument("sweep needs at least one axis")
    known = set(CHANNEL_AXES + MODEL_AXES + NOISE_AXES + RAMP_AXES)
    for name, vals in axes.items():
        if name not in known:
            raise InvalidArgument(f"unknown sweep axis {name!r}")
        if len(vals) == 0:
            raise InvalidArgument(f"axis {name!r} is empty")
    axes = {k: np.asarray(v, dtype=float) for k, v in axes.items()}
    names = list(axes)
    shape = tuple(len(v) for v in axes.values())
    jobs = []
    for i, n in enumerate(n_list):
        for flat, idx in enumerate(itertools.product(*(range(s) for s in shape))):
            point = {k: float(axes[k][j]) for k, j in zip(names, idx)}
            ss = np.random.SeedSequence([seed, i, flat])
            jobs.append((model, merit, n, point, tuple(channels), noise_rates or {}, ss))
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(lambda a: _evaluate_point(*a), jobs))
    else:
        vals = [_evaluate_point(*a) for a in jobs]
    values = np.array(vals, dtype=float).reshape((len(n_list),) + shape)
    meta = {"model": getattr(model, "__class__").__name__, "merit": merit, "seed": seed,
            "channels": [c.kind for c in channels] + [k for k in names if k in CHANNEL_AXES]}
    return ScanResult(axes, values, tuple(int(n) for n in n_list), meta)


def lambda_delta_ladder(delta_max_per_omega: float = 5.0, k2: int = 0) -> list[int]:
    """k3 values whose Delta/Omega = 2(k3-k2)/sqrt((2k2+1)(2k3+1)) lies in [0, max]."""
    out, k3 = [], k2
    while True:
        r = 2 * (k3 - k2) / math.sqrt((2 * k2 + 1) * (2 * k3 + 1))
        if r > delta_max_per_omega + 1e-12:
            return out
        out.append(k3)
        k3 += 1


def gate_merit_vs_delta(gamma_e_per_omega: float, gamma_dep_per_omega: float, Omega: float = 1.0,
                        delta_max_per_omega: float = 5.0, N: int = 1, phi: float = 0.0) -> ScanResult:
    """Six-state gate merit along the quantized detuning ladder at fixed Omega."""
    deltas, vals = [], []
    for k3 in lambda_delta_ladder(delta_max_per_omega):
        t_p = math.pi * math.sqrt(2 * k3 + 1) / Omega
        m = LambdaModel(0, k3, t_p, phi)
        noise = dynamics.lambda_noise(gamma_e_per_omega * Omega, gamma_dep_per_omega * Omega)
        deltas.append(m.Delta / Omega)
        vals.append(six_state_gate_fidelity(m, N, noise))
    return ScanResult({"Delta_per_omega": np.array(deltas)}, np.array([vals]), (N,),
                      {"model": "LambdaModel", "merit": "gate", "seed": 0,
                       "gamma_e_per_omega": gamma_e_per_omega, "gamma_dep_per_omega": gamma_dep_per_omega})


# ---------------------------------------------------------------- canned figure scans

DEFAULT_ERROR_GRID = np.linspace(-0.5, 0.5, 51)


def _points(n: int, grid_scale: float) -> int:
    return max(2, int(round(n * grid_scale)))


def dissipation_tradeoff_scan(gamma_e_per_omega: float = 1.5 / (2 * math.pi),
                              gamma_dep_per_omega: float = 0.05 / (2 * math.pi),
                              delta_max_per_omega: float = 5.0, N: int = 1) -> ScanResult:
    """Gate merit versus Delta with and without qubit dephasing (rows: dephasing on, off)."""
    on = gate_merit_vs_delta(gamma_e_per_omega, gamma_dep_per_omega, delta_max_per_omega=delta_max_per_omega, N=N)
    off = gate_merit_vs_delta(gamma_e_per_omega, 0.0, delta_max_per_omega=delta_max_per_omega, N=N)
    axes = {"gamma_dep_per_omega": np.array([gamma_dep_per_omega, 0.0]),
            "Delta_per_omega": on.axes["Delta_per_omega"]}
    values = np.stack([on.values[0], off.values[0]])[None]
    return ScanResult(axes, values, (N,), {"model": "LambdaModel", "merit": "gate", "seed": 0,
                                           "gamma_e_per_omega": gamma_e_per_omega})


def amplitude_detuning_scan(grid: np.ndarray = DEFAULT_ERROR_GRID, n_list=(1, 2, 3, 4),
                            model: LambdaModel | None = None, seed: int = 0) -> ScanResult:
    """Transfer efficiency over (amplitude error, detuning error / Omega) for each N."""
    return sweep(model or LambdaModel(), "transfer",
                 {"amplitude_relative": grid, "detuning_additive": grid}, n_list, seed)


def ramp_time_scan(et_values: np.ndarray, eps_x_per_E: float = 0.0,
                   model: CoupledQubitModel | None = None) -> list[tuple]:
    """Rows (protocol, ET, eps_x_per_E, fidelity): the linear ramp at each E T, then STAM N=1."""
    model = model or CoupledQubitModel()
    rows = [("ramp", float(et), eps_x_per_E, coupled_ramp_fidelity(model, et / abs(model.E), eps_x_per_E * model.E))
            for et in et_values]
    stam = coupled_stam_fidelity(model, 1, [ErrorChannel("local_pauli", eps_x_per_E * model.E)])
    rows.append(("stam", coupled_sequence(model, 1).total_time * abs(model.E), eps_x_per_E, stam))
    return rows


def local_field_scan(eps_values: np.ndarray, et_ramp: float = 100.0,
                     model: CoupledQubitModel | None = None) -> list[tuple]:
    """Rows (eps_x_per_E, ramp fidelity at E T = et_ramp, STAM N=1 fidelity)."""
    model = model or CoupledQubitModel()
    rows = []
    for eps in eps_values:
        ramp = coupled_ramp_fidelity(model, et_ramp / abs(model.E), eps * model.E)
        stam = coupled_stam_fidelity(model, 1, [ErrorChannel("local_pauli", eps * model.E)])
        rows.append((float(eps), ramp, stam))
    return rows
