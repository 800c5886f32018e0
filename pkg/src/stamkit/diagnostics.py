"""Verification quantities: the deviation operator, eps_ave and the deviation bound.

The physical evolution at a path value ``lam`` is the product of all pulses
with ``lam_j <= lam`` (between path points the Hamiltonian jumps suddenly).
The deviation operator is then ``U_D(lam) = U_adia(lam)^dagger U(lam)``,
which equals the path-ordered exponential of the modulated gauge coupling
``W(lam) = sum e^{i(phi_n - phi_m)} g_nm |n_0><m_0|``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from . import qla
from .dynamics import propagator_of
from .errors import OutOfPath
from .protocol import GaugeSpec, PulseSequence, adiabatic_propagator, alternating_thetas, dynamic_phases

POINTS_PER_INTERVAL = 2048

BOUND_COLUMNS = ("lambda", "g_max", "g_prime_max", "eps_ave", "L_dim", "bound", "infidelity")


def path_length(seq: PulseSequence) -> float:
    """Final checkpoint Theta_N of the sequence."""
    return float(alternating_thetas(np.array([p.lam for p in seq.pulses]))[-1])


def pulses_before(seq: PulseSequence, lam: float) -> int:
    return int(np.searchsorted([p.lam for p in seq.pulses], lam, side="right"))


def u_deviation(seq: PulseSequence, spec: GaugeSpec, lam: float) -> np.ndarray:
    theta_n = path_length(seq)
    if lam < 0 or lam > theta_n * (1 + 1e-12):
        raise OutOfPath(f"lambda={lam!r} outside [0, {theta_n!r}]")
    j = pulses_before(seq, lam)
    if j == 0:
        u = np.eye(spec.dim, dtype=np.complex128)
        phases = np.zeros(spec.dim)
    else:
        u = propagator_of(seq, j)
        phases = dynamic_phases(seq)[j - 1]
    return adiabatic_propagator(spec, lam, phases).conj().T @ u


# ---------------------------------------------------------------- eps_ave


def running_integral(phase: Callable[[np.ndarray], np.ndarray], lam: float,
                     breakpoints: Sequence[float] = (), points_per_interval: int = POINTS_PER_INTERVAL):
    """Nodes and values of int_0^x exp(i phase(y)) dy on a breakpoint-aligned grid.

    Each interval between consecutive breakpoints gets ``points_per_interval``
    cells integrated with two-point Gauss-Legendre quadrature; both nodes lie
    inside the cell, so piecewise-constant phases are integrated exactly.
    """
    cuts = np.unique(np.concatenate([[0.0, lam], [b for b in breakpoints if 0 < b < lam]]))
    nodes = [np.array([0.0])]
    for a, b in zip(cuts[:-1], cuts[1:]):
        nodes.append(np.linspace(a, b, points_per_interval + 1)[1:])
    x = np.concatenate(nodes)
    mids = 0.5 * (x[1:] + x[:-1])
    half = 0.5 * np.diff(x) / math.sqrt(3)
    vals = 0.5 * np.diff(x) * (np.exp(1j * np.asarray(phase(mids - half), dtype=float))
                               + np.exp(1j * np.asarray(phase(mids + half), dtype=float)))
    return x, np.concatenate([[0.0], np.cumsum(vals)])


def eps_ave(phase: Callable[[np.ndarray], np.ndarray], lam: float, breakpoints: Sequence[float] = (),
            points_per_interval: int = POINTS_PER_INTERVAL) -> float:
    """sup over x in (0, lam] of |int_0^x exp(i phase(y)) dy|."""
    if lam <= 0:
        return 0.0
    _, s = running_integral(phase, lam, breakpoints, points_per_interval)
    return float(np.max(np.abs(s)))


def square_wave_phase(lambdas: Sequence[float], delta_e: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """j pi (1 + delta_e) on [lam_j, lam_{j+1}); zero before lam_1."""
    pts = np.asarray(lambdas, dtype=float)

    def phase(x):
        return np.searchsorted(pts, x, side="right") * math.pi * (1 + delta_e)
    return phase


def sequence_phase(seq: PulseSequence, n: int, m: int) -> Callable[[np.ndarray], np.ndarray]:
    """phi_n - phi_m as a step function of the path value."""
    pts = np.array([p.lam for p in seq.pulses])
    steps = np.concatenate([[0.0], np.cumsum([(p.energies[n] - p.energies[m]) * p.duration for p in seq.pulses])])

    def phase(x):
        return steps[np.searchsorted(pts, x, side="right")]
    return phase


def ideal_eps_ave(N: int, theta_N: float, delta_e: float = 0.0,
                  points_per_interval: int = POINTS_PER_INTERVAL) -> float:
    lam = theta_N * (2 * np.arange(1, N + 1) - 1) / (2 * N)
    return eps_ave(square_wave_phase(lam, delta_e), theta_N, lam, points_per_interval)


def fit_eps_expansion(N: int, theta_N: float, deltas: Sequence[float], degree: int = 2,
                      points_per_interval: int = 64) -> np.ndarray:
    """Regress eps_ave / (Theta_N / 2N) - 1 on |delta_e|; coefficients in ascending order."""
    d = np.abs(np.asarray(deltas, dtype=float))
    rel = np.array([ideal_eps_ave(N, theta_N, x, points_per_interval) for x in d]) / (theta_N / (2 * N)) - 1
    return np.polynomial.polynomial.polyfit(d, rel, degree)


# ---------------------------------------------------------------- bound


def bound_value(lam: float, g_max: float, g_prime_max: float, eps: float, L: int) -> float:
    return 2 * lam * L * math.sqrt(eps * (g_max ** 2 * L + g_prime_max) * g_max)


@dataclass(frozen=True)
class BoundReport:
    lam: float
    g_max: float
    g_prime_max: float
    eps_ave: float
    L_dim: int
    bound_value: float
    actual_infidelity: float

    @property
    def vacuous(self) -> bool:
        return self.bound_value > 1

    @property
    def holds(self) -> bool:
        return self.vacuous or self.actual_infidelity <= self.bound_value

    def row(self) -> list:
        return [self.lam, self.g_max, self.g_prime_max, self.eps_ave, self.L_dim,
                self.bound_value, self.actual_infidelity]

    def to_csv_row(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow(
            [f"{v:.12g}" if isinstance(v, float) else v for v in self.row()])
        return buf.getvalue()

    def asdict(self) -> dict:
        return asdict(self)


def bound_report(spec: GaugeSpec, seq: PulseSequence, lam: float,
                 points_per_interval: int = POINTS_PER_INTERVAL) -> BoundReport:
    gm = spec.gauge_matrix()
    pairs = sorted(spec.connected_pairs)
    g_max = max((abs(gm[n, m]) for n, m in pairs), default=0.0)
    # constant generator: the gauge couplings do not depend on lambda
    g_prime_max = 0.0
    cuts = [p.lam for p in seq.pulses]
    eps = max((eps_ave(sequence_phase(seq, n, m), lam, cuts, points_per_interval) for n, m in pairs),
              default=0.0)
    ud = u_deviation(seq, spec, lam)
    infid = max(0.0, 1.0 - abs(np.trace(ud)) / spec.dim)
    return BoundReport(float(lam), float(g_max), g_prime_max, eps, spec.dim,
                       bound_value(lam, g_max, g_prime_max, eps, spec.dim), float(infid))


def random_bound_instance(rng: np.random.Generator, max_dim: int = 6):
    """A random constant-generator spec, a pulse sequence for it and a path cut.

    Half of the instances are jittered STAM sequences (bipartite couplings,
    near-odd-pi phase flips); the rest use arbitrary energies and durations.
    """
    from .protocol import GaugeSpec as _Spec, Pulse, hamiltonian_at

    dim = int(rng.integers(2, max_dim + 1))
    near_stam = bool(rng.random() < 0.5)
    # random unitary initial basis
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    basis, _ = np.linalg.qr(z)
    g = np.zeros((dim, dim), dtype=np.complex128)
    side = rng.integers(0, 2, size=dim)
    side[0], side[-1] = 0, 1
    for a in range(dim):
        for b in range(a + 1, dim):
            if near_stam and side[a] == side[b]:
                continue
            if rng.random() < 0.7:
                g[a, b] = rng.normal() + 1j * rng.normal()
    if not np.any(g):
        g[0, dim - 1] = 1.0
    g = g + g.conj().T
    scale = math.exp(rng.uniform(math.log(1e-3), math.log(2.0)))
    g *= scale / np.linalg.norm(g, 2)
    gen = basis @ g @ basis.conj().T
    gen = 0.5 * (gen + gen.conj().T)
    if near_stam:
        # A levels on even, B levels on odd multiples of the unit gap, plus jitter
        energies = (2 * rng.integers(0, 3, size=dim) + side) * 1.0 + rng.normal(scale=0.02, size=dim)
    else:
        energies = rng.uniform(-3, 3, size=dim)
    spec = _Spec(gen, basis, energies, name="random")
    N = int(rng.integers(1, 9))
    theta_N = float(rng.uniform(0.05, 1.5))
    lam_pts = theta_N * (2 * np.arange(1, N + 1) - 1) / (2 * N)
    pulses = []
    for j, lam in enumerate(lam_pts):
        tau = math.pi * (1 + rng.normal(scale=0.02)) if near_stam else float(rng.uniform(0.1, 4.0))
        pulses.append(Pulse(float(lam), hamiltonian_at(spec, lam, j), tau, spec.energies_at(j, lam)))
    seq = PulseSequence(tuple(pulses), spec.connected_pairs, "random")
    cut = float(rng.uniform(0.0, path_length(seq)))
    return spec, seq, cut


def bound_soundness(trials: int = 1000, seed: int = 0, points_per_interval: int = 256):
    """Run seeded random trials; returns (reports, violations)."""
    reports, violations = [], 0
    for k in range(trials):
        rng = np.random.default_rng([seed, k])
        spec, seq, cut = random_bound_instance(rng)
        rep = bound_report(spec, seq, cut, points_per_interval)
        reports.append(rep)
        violations += not rep.holds
    return reports, violations


def checkpoint_fidelities(seq: PulseSequence, spec: GaugeSpec) -> np.ndarray:
    """op_fidelity(U after j pulses, U_adia(Theta_j)) for every checkpoint j."""
    thetas = alternating_thetas(np.array([p.lam for p in seq.pulses]))
    phases = dynamic_phases(seq)
    out = []
    u = np.eye(seq.dim, dtype=np.complex128)
    for j, p in enumerate(seq.pulses):
        u = qla.expm(p.hamiltonian, -1j * p.duration, hermitian=True) @ u
        out.append(qla.op_fidelity(adiabatic_propagator(spec, thetas[j], phases[j]), u))
    return np.array(out)
