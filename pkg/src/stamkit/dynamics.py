"""Propagation of pulse sequences and continuous ramps.

Pulse sequences are piecewise constant, so every segment is exponentiated
exactly: ``exp(-i H tau)`` for closed systems and ``exp(L tau)`` of the
vectorized Lindblad generator for open systems. Continuous baselines (the
linear interpolation ``s = t/T``) use midpoint slicing with a step-doubling
convergence check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import qla
from ._kernels import apply_spectral_steps
from .errors import ConvergenceNotReached, DimensionMismatch, InvalidArgument, NonPhysicalState
from .protocol import PulseSequence

# ---------------------------------------------------------------- closed system


def pulse_propagators(seq: PulseSequence) -> list[np.ndarray]:
    return [qla.expm(p.hamiltonian, -1j * p.duration, hermitian=True) for p in seq.pulses]


def propagator_of(seq: PulseSequence, upto: int | None = None) -> np.ndarray:
    """Ordered product of the first ``upto`` pulse exponentials (all by default)."""
    pulses = seq.pulses if upto is None else seq.pulses[:upto]
    if not seq.pulses:
        raise InvalidArgument("empty sequence has no defined dimension")
    u = np.eye(seq.dim, dtype=np.complex128)
    for p in pulses:
        u = qla.expm(p.hamiltonian, -1j * p.duration, hermitian=True) @ u
    return u


def propagate_unitary(seq: PulseSequence, psi0: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi0, dtype=np.complex128)
    for p in seq.pulses:
        if p.hamiltonian.shape[0] != psi.size:
            raise DimensionMismatch(f"pulse dim {p.hamiltonian.shape[0]} vs state dim {psi.size}")
        psi = qla.expm(p.hamiltonian, -1j * p.duration, hermitian=True) @ psi
    return psi


# ---------------------------------------------------------------- ramps


class HamiltonianFamily:
    """H(s) = sum_k f_k(s) A_k with vectorizable coefficient functions.

    Batch evaluation over many ``s`` values is a single tensor contraction,
    which keeps fine ramp discretizations cheap.
    """

    def __init__(self, terms: Sequence[tuple[Callable, np.ndarray]]):
        self.coeffs = [c for c, _ in terms]
        self.ops = np.array([np.asarray(a, dtype=np.complex128) for _, a in terms])

    def __call__(self, s: float) -> np.ndarray:
        return self.batch(np.array([s]))[0]

    def batch(self, s: np.ndarray) -> np.ndarray:
        c = np.array([np.broadcast_to(np.asarray(f(s), dtype=float), s.shape) for f in self.coeffs])
        return np.einsum("ks,kij->sij", c, self.ops)


def _batch(h_of_s, s: np.ndarray) -> np.ndarray:
    if isinstance(h_of_s, HamiltonianFamily):
        return h_of_s.batch(s)
    return np.array([h_of_s(x) for x in s])


@dataclass(frozen=True)
class RampSpec:
    """A continuous sweep of s from 0 to 1 over ``total_time``.

    ``interpolation`` is ``"linear_s"`` (s = t/T) or ``"table"``, in which
    case ``table`` holds s values on a uniform time grid (linear interpolation).
    ``steps_per_unit_time`` defaults to 100 steps per 2 pi / energy_scale.
    """

    total_time: float
    interpolation: str = "linear_s"
    steps_per_unit_time: float | None = None
    energy_scale: float = 1.0
    table: tuple = field(default=())

    def __post_init__(self):
        if not (self.total_time > 0 and math.isfinite(self.total_time)):
            raise InvalidArgument(f"ramp time must be positive, got {self.total_time!r}")
        if self.interpolation not in ("linear_s", "table"):
            raise InvalidArgument(f"unknown interpolation {self.interpolation!r}")
        if self.interpolation == "table" and len(self.table) < 2:
            raise InvalidArgument("table interpolation needs at least two s values")

    def base_steps(self) -> int:
        rate = self.steps_per_unit_time or 100 * abs(self.energy_scale) / (2 * math.pi)
        return max(1, math.ceil(rate * self.total_time))

    def s_of_fraction(self, x: np.ndarray) -> np.ndarray:
        if self.interpolation == "linear_s":
            return x
        grid = np.linspace(0.0, 1.0, len(self.table))
        return np.interp(x, grid, np.asarray(self.table, dtype=float))

    def midpoints(self, steps: int) -> np.ndarray:
        return self.s_of_fraction((np.arange(steps) + 0.5) / steps)


def ramp_fixed_steps(ramp: RampSpec, h_of_s, psi0: np.ndarray, steps: int) -> np.ndarray:
    """Midpoint-rule product of ``steps`` slice exponentials."""
    dt = ramp.total_time / steps
    h = _batch(h_of_s, ramp.midpoints(steps))
    w, v = np.linalg.eigh(h)
    return apply_spectral_steps(w, np.ascontiguousarray(v), dt, np.asarray(psi0, dtype=np.complex128))


@dataclass(frozen=True)
class RampResult:
    state: np.ndarray
    steps: int
    doubling_change: float


def propagate_ramp(ramp: RampSpec, h_of_s, psi0: np.ndarray, tol: float = 1e-7,
                   max_doublings: int = 10, full: bool = False):
    """Integrate the ramp, doubling the step count until the state moves by < ``tol``."""
    steps = ramp.base_steps()
    prev = ramp_fixed_steps(ramp, h_of_s, psi0, steps)
    change = math.inf
    for _ in range(max_doublings):
        steps *= 2
        cur = ramp_fixed_steps(ramp, h_of_s, psi0, steps)
        change = float(np.linalg.norm(cur - prev))
        if change < tol:
            return RampResult(cur, steps, change) if full else cur
        prev = cur
    raise ConvergenceNotReached(f"state still moves by {change:.3e} at {steps} steps")


# ---------------------------------------------------------------- open system


@dataclass(frozen=True)
class LindbladModel:
    """Collapse operators with their rates (same frequency units as H)."""

    collapse_ops: tuple = ()

    def __post_init__(self):
        for op, rate in self.collapse_ops:
            if not (math.isfinite(rate) and rate >= 0):
                raise InvalidArgument(f"collapse rate must be finite and >= 0, got {rate!r}")

    @property
    def is_trivial(self) -> bool:
        return all(rate == 0 for _, rate in self.collapse_ops)


def lambda_noise(gamma_e: float, gamma_dep: float, branching: float = 0.5) -> LindbladModel:
    """|e> decays into |1> and |0> (fractions ``branching`` and 1 - branching);
    qubit dephasing via |1><1| - |0><0|."""
    d1 = np.zeros((3, 3), dtype=np.complex128)
    d1[0, 2] = 1.0
    d0 = np.zeros((3, 3), dtype=np.complex128)
    d0[1, 2] = 1.0
    dep = np.diag([1.0, -1.0, 0.0]).astype(np.complex128)
    return LindbladModel(((d1, gamma_e * branching), (d0, gamma_e * (1 - branching)), (dep, gamma_dep)))


def liouvillian(h: np.ndarray, noise: LindbladModel) -> np.ndarray:
    """Generator acting on row-major vec(rho)."""
    d = h.shape[0]
    eye = np.eye(d)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in noise.collapse_ops:
        if rate == 0:
            continue
        ld = op.conj().T @ op
        gen += rate * (np.kron(op, op.conj()) - 0.5 * np.kron(ld, eye) - 0.5 * np.kron(eye, ld.T))
    return gen


def segments_of(target, steps: int | None = None):
    """(H, duration) pairs for a pulse sequence or a ``(RampSpec, h_of_s)`` pair."""
    if isinstance(target, PulseSequence):
        return [(p.hamiltonian, p.duration) for p in target.pulses]
    ramp, h_of_s = target
    n = steps or ramp.base_steps()
    dt = ramp.total_time / n
    return [(h, dt) for h in _batch(h_of_s, ramp.midpoints(n))]


def lindblad_map(target, noise: LindbladModel, steps: int | None = None) -> np.ndarray:
    """Superoperator of the whole evolution on row-major vec(rho)."""
    segs = segments_of(target, steps)
    d = segs[0][0].shape[0]
    m = np.eye(d * d, dtype=np.complex128)
    for h, dt in segs:
        m = qla.expm(liouvillian(h, noise), dt, hermitian=False) @ m
    return m


def apply_map(m: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return (m @ rho.reshape(-1)).reshape(d, d)


def propagate_lindblad(target, rho0: np.ndarray, noise: LindbladModel, steps: int | None = None,
                       tol: float = qla.TOL_PHYSICS) -> np.ndarray:
    """Evolve rho0 segment by segment, checking trace and Hermiticity at each boundary."""
    rho = qla.check_density(rho0, tol)
    for h, dt in segments_of(target, steps):
        if h.shape != rho.shape:
            raise DimensionMismatch(f"segment dim {h.shape} vs rho {rho.shape}")
        rho = apply_map(qla.expm(liouvillian(h, noise), dt, hermitian=False), rho)
        if abs(np.trace(rho).real - 1.0) > tol or not qla.is_hermitian(rho, tol):
            raise NonPhysicalState("Lindblad step broke trace or Hermiticity")
    return qla.check_density(rho, tol)
