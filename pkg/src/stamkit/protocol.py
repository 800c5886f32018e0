"""Compile a gauge specification into a discrete pulse sequence.

A :class:`GaugeSpec` fixes a constant Hermitian generator ``G`` and an initial
eigenbasis ``|n_0>``; the instantaneous eigenstates are ``exp(-i G lam)|n_0>``
and the Hamiltonian at path point ``lam`` is ``sum_n E_n |n_lam><n_lam|``.
The compiler picks path points ``lam_1 < ... < lam_N`` and, for every pulse,
a duration that flips the dynamic phase difference of each coupled level
pair by an odd multiple of pi. The exact propagator then coincides with the
adiabatic one at the checkpoints ``Theta_j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import networkx as nx
import numpy as np

from . import qla
from .errors import (
    IncommensurateEnergies,
    InconsistentPairs,
    IndexOutOfRange,
    InvalidArgument,
    MissingEnergy,
    NonHermitianInput,
    NotBipartite,
)

COUPLING_TOL = 1e-12
PHASE_TOL = 1e-9
DEFAULT_MAX_MULTIPLIER = 9

EnergySource = Union[np.ndarray, Callable[[float], np.ndarray]]


def _pair(n: int, m: int) -> tuple[int, int]:
    return (n, m) if n < m else (m, n)


@dataclass(frozen=True, eq=False)
class GaugeSpec:
    """The STAM program: generator, initial eigenbasis and level energies.

    ``energies`` is one of

    * a length-``dim`` array (the same energies for every pulse),
    * a ``(pulses, dim)`` table indexed by pulse number,
    * a callable ``lam -> array`` for path-dependent spectra.

    ``connected_pairs`` lists the level pairs with a nonzero gauge coupling
    ``<n_0|G|m_0>``; when omitted it is read off the generator.
    """

    generator: np.ndarray
    initial_basis: np.ndarray
    energies: EnergySource
    connected_pairs: frozenset | None = None
    name: str = "custom"
    detuning_op: np.ndarray | None = None
    n_qubits: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = qla.as_operator(self.generator)
        if not qla.is_hermitian(g, qla.TOL_CONSTRUCT):
            raise NonHermitianInput(f"generator deviates from Hermitian by {qla.hermitian_defect(g):.3e}")
        basis = np.asarray(self.initial_basis, dtype=np.complex128)
        if basis.shape != g.shape:
            raise InvalidArgument(f"initial basis shape {basis.shape} does not match generator {g.shape}")
        if not qla.is_unitary(basis, qla.TOL_PROPAGATE):
            raise InvalidArgument("initial basis is not orthonormal")
        gm = basis.conj().T @ g @ basis
        if np.max(np.abs(np.diag(gm))) > COUPLING_TOL:
            raise InvalidArgument("generator has diagonal gauge elements; Born-Fock gauge requires g_nn = 0")
        object.__setattr__(self, "generator", g)
        object.__setattr__(self, "initial_basis", basis)
        if not callable(self.energies):
            e = np.asarray(self.energies, dtype=float)
            if e.shape[-1] != g.shape[0] or e.ndim not in (1, 2):
                raise InvalidArgument(f"energy table shape {e.shape} incompatible with dim {g.shape[0]}")
            object.__setattr__(self, "energies", e)
        if self.connected_pairs is None:
            object.__setattr__(self, "connected_pairs", numeric_pairs(gm))
        else:
            object.__setattr__(self, "connected_pairs", frozenset(_pair(*p) for p in self.connected_pairs))

    @property
    def dim(self) -> int:
        return self.generator.shape[0]

    def gauge_matrix(self) -> np.ndarray:
        """g_{n,m} = <n_0|G|m_0>."""
        return self.initial_basis.conj().T @ self.generator @ self.initial_basis

    def energies_at(self, j: int, lam: float) -> np.ndarray:
        if callable(self.energies):
            e = np.asarray(self.energies(lam), dtype=float)
        elif self.energies.ndim == 1:
            e = self.energies
        else:
            if not 0 <= j < self.energies.shape[0]:
                raise MissingEnergy(f"no energies tabulated for pulse {j}")
            e = self.energies[j]
        if e.shape != (self.dim,) or not np.all(np.isfinite(e)):
            raise MissingEnergy(f"energies for pulse {j} at lambda={lam!r} are incomplete")
        return e

    def rotation(self, lam: float) -> np.ndarray:
        """exp(-i G lam)."""
        return qla.expm(self.generator, -1j * lam, hermitian=True)

    def tabulate(self, sched: "Schedule") -> "GaugeSpec":
        """Copy with energies frozen into a per-pulse table for ``sched``."""
        table = np.array([self.energies_at(j, lam) for j, lam in enumerate(sched.lambda_points)])
        return GaugeSpec(self.generator, self.initial_basis, table, self.connected_pairs,
                         self.name, self.detuning_op, self.n_qubits, dict(self.meta))


def numeric_pairs(gm: np.ndarray, tol: float = COUPLING_TOL) -> frozenset:
    n = gm.shape[0]
    return frozenset((a, b) for a in range(n) for b in range(a + 1, n) if abs(gm[a, b]) > tol)


@dataclass(frozen=True)
class Schedule:
    N: int
    theta_N: float
    lambda_points: np.ndarray
    theta_points: np.ndarray
    spacing: str = "equal"


@dataclass(frozen=True, eq=False)
class Pulse:
    lam: float
    hamiltonian: np.ndarray
    duration: float
    energies: np.ndarray  # nominal E_n(lam) used to fix the duration


@dataclass(frozen=True, eq=False)
class PulseSequence:
    pulses: tuple
    connected_pairs: frozenset = frozenset()
    model: str = "custom"
    detuning_op: np.ndarray | None = None
    n_qubits: int | None = None

    @property
    def total_time(self) -> float:
        return float(sum(p.duration for p in self.pulses))

    @property
    def dim(self) -> int:
        return self.pulses[0].hamiltonian.shape[0]

    def __len__(self):
        return len(self.pulses)

    def replace_pulses(self, pulses) -> "PulseSequence":
        return PulseSequence(tuple(pulses), self.connected_pairs, self.model, self.detuning_op, self.n_qubits)


@dataclass(frozen=True)
class ClusterPartition:
    clusters: list          # sorted tuples of levels, one per connected component
    colors: dict            # level -> 0 (A) or 1 (B); singletons are absent

    def side(self, cluster: Sequence[int], color: int) -> tuple:
        return tuple(n for n in cluster if self.colors.get(n) == color)


def eigenstate_at(spec: GaugeSpec, lam: float, n: int) -> np.ndarray:
    if not 0 <= n < spec.dim:
        raise IndexOutOfRange(f"level {n} outside 0..{spec.dim - 1}")
    if lam == 0:
        return spec.initial_basis[:, n].copy()
    return spec.rotation(lam) @ spec.initial_basis[:, n]


def hamiltonian_at(spec: GaugeSpec, lam: float, j: int = 0) -> np.ndarray:
    """H(lam) = sum_n E_n(lam_j) |n_lam><n_lam| for pulse ``j``."""
    e = spec.energies_at(j, lam)
    frame = spec.rotation(lam) @ spec.initial_basis
    h = (frame * e) @ frame.conj().T
    return 0.5 * (h + h.conj().T)


def validate_clusters(spec: GaugeSpec) -> ClusterPartition:
    """Two-color every connected component of the coupling graph."""
    found = numeric_pairs(spec.gauge_matrix())
    if found != spec.connected_pairs:
        raise InconsistentPairs(
            f"declared pairs {sorted(spec.connected_pairs)} disagree with generator pairs {sorted(found)}")
    graph = nx.Graph()
    graph.add_nodes_from(range(spec.dim))
    graph.add_edges_from(found)
    clusters, colors = [], {}
    for comp in nx.connected_components(graph):
        sub = graph.subgraph(comp)
        clusters.append(tuple(sorted(comp)))
        if len(comp) == 1:
            continue
        try:
            coloring = nx.bipartite.color(sub)
        except nx.NetworkXError as exc:
            raise NotBipartite(f"coupling cluster {sorted(comp)} contains an odd cycle") from exc
        # level with the smallest index is always type A
        flip = coloring[min(comp)]
        colors.update({n: c ^ flip for n, c in coloring.items()})
    clusters.sort()
    return ClusterPartition(clusters, colors)


def alternating_thetas(lambdas: np.ndarray) -> np.ndarray:
    """Theta_j = 2 sum_{k<=j} (-1)^(j+k) lam_k."""
    out = np.empty(len(lambdas))
    acc = 0.0
    for j, lam in enumerate(lambdas):
        acc = 2.0 * lam - acc
        out[j] = acc
    return out


def make_schedule(N: int, theta_N: float = 0.0, spacing: str = "equal",
                  lambdas: Sequence[float] | None = None) -> Schedule:
    if spacing == "equal":
        if not isinstance(N, (int, np.integer)) or N < 1:
            raise InvalidArgument(f"N must be a positive integer, got {N!r}")
        if not (math.isfinite(theta_N) and theta_N > 0):
            raise InvalidArgument(f"Theta_N must be positive, got {theta_N!r}")
        j = np.arange(1, N + 1)
        lam = theta_N * (2 * j - 1) / (2 * N)
        theta = j * theta_N / N
        return Schedule(int(N), float(theta_N), lam, theta, "equal")
    if spacing == "custom":
        if lambdas is None or len(lambdas) < 1:
            raise InvalidArgument("custom spacing needs explicit lambda points")
        lam = np.asarray(lambdas, dtype=float)
        if not np.all(np.isfinite(lam)) or np.any(np.diff(lam) <= 0) or lam[0] <= 0:
            raise InvalidArgument("custom lambda points must be positive and strictly increasing")
        theta = alternating_thetas(lam)
        return Schedule(len(lam), float(theta[-1]), lam, theta, "custom")
    raise InvalidArgument(f"unknown spacing mode {spacing!r}")


def solve_duration(energies: np.ndarray, pairs, max_multiplier: int = DEFAULT_MAX_MULTIPLIER,
                   tol: float = PHASE_TOL) -> float:
    """Smallest tau > 0 with (E_n - E_m) tau an odd multiple of pi for every pair.

    The scan runs over odd multipliers 1, 3, ..., ``max_multiplier`` of the
    smallest gap; the other pairs must then land on odd multiples as well.
    """
    pairs = sorted(pairs)
    if not pairs:
        raise InvalidArgument("no coupled level pairs: pulse durations are undetermined")
    gaps = np.array([abs(energies[n] - energies[m]) for n, m in pairs])
    if np.any(gaps <= COUPLING_TOL):
        raise IncommensurateEnergies("a coupled level pair is degenerate")
    ref = gaps.min()
    for mult in range(1, max_multiplier + 1, 2):
        tau = mult * math.pi / ref
        if all(phase_error(g * tau) <= tol for g in gaps):
            return tau
    raise IncommensurateEnergies(
        f"no common duration for gaps {gaps} with reference multiplier <= {max_multiplier}")


def phase_error(phase: float) -> float:
    """Distance of ``phase`` from the nearest odd multiple of pi."""
    r = math.fmod(abs(phase), 2 * math.pi)
    return abs(r - math.pi)


def compile_sequence(spec: GaugeSpec, sched: Schedule, max_multiplier: int = DEFAULT_MAX_MULTIPLIER) -> PulseSequence:
    validate_clusters(spec)
    pulses = []
    for j, lam in enumerate(sched.lambda_points):
        e = spec.energies_at(j, lam)
        tau = solve_duration(e, spec.connected_pairs, max_multiplier)
        pulses.append(Pulse(float(lam), hamiltonian_at(spec, lam, j), tau, e.copy()))
    return PulseSequence(tuple(pulses), spec.connected_pairs, spec.name, spec.detuning_op, spec.n_qubits)


# ``compile`` is the public name; the alias avoids shadowing the builtin at import sites
compile = compile_sequence


def phase_condition_defects(seq: PulseSequence) -> np.ndarray:
    """|(E_n - E_m) tau mod 2 pi - pi| for every pulse and coupled pair."""
    out = [phase_error((p.energies[n] - p.energies[m]) * p.duration)
           for p in seq.pulses for n, m in sorted(seq.connected_pairs)]
    return np.array(out)


def dynamic_phases(seq: PulseSequence) -> np.ndarray:
    """Cumulative phi_n after each pulse, shape (pulses, dim)."""
    return np.cumsum([p.energies * p.duration for p in seq.pulses], axis=0)


def adiabatic_propagator(spec: GaugeSpec, theta: float, phases: np.ndarray | None = None) -> np.ndarray:
    """U_adia = sum_n exp(-i phi_n) |n_theta><n_0|."""
    phases = np.zeros(spec.dim) if phases is None else np.asarray(phases, dtype=float)
    b = spec.initial_basis
    return spec.rotation(theta) @ (b * np.exp(-1j * phases)) @ b.conj().T


def explicit_g_spec(targets: Sequence[complex], dim: int | None = None, energy: float = 1.0) -> GaugeSpec:
    """G = sum_{n>=1} g_n |n_0><0_0| + h.c. with E_0 = 0 and E_n = ``energy``.

    ``targets`` are the couplings g_{n,0} for n = 1..dim-1 (computational basis
    serves as the initial eigenbasis).
    """
    g = np.asarray(targets, dtype=np.complex128)
    dim = g.size + 1 if dim is None else dim
    if g.size != dim - 1:
        raise InvalidArgument(f"expected {dim - 1} couplings, got {g.size}")
    if not np.any(np.abs(g) > COUPLING_TOL):
        raise InvalidArgument("at least one coupling must be nonzero")
    if energy == 0 or not math.isfinite(energy):
        raise InvalidArgument("excited energy must be finite and nonzero")
    gen = np.zeros((dim, dim), dtype=np.complex128)
    gen[1:, 0] = g
    gen[0, 1:] = g.conj()
    e = np.full(dim, float(energy))
    e[0] = 0.0
    return GaugeSpec(gen, np.eye(dim, dtype=np.complex128), e, name="explicit_g")


def explicit_g_final_state(targets: Sequence[complex], theta: float) -> np.ndarray:
    """exp(-i G theta)|0_0> for the explicit generator: cos(g theta)|0> - i sin(g theta) sum_n (g_n/g)|n>."""
    t = np.asarray(targets, dtype=np.complex128)
    g = float(np.sqrt(np.sum(np.abs(t) ** 2)))
    out = np.empty(t.size + 1, dtype=np.complex128)
    out[0] = math.cos(g * theta)
    out[1:] = -1j * math.sin(g * theta) * t / g
    return out
