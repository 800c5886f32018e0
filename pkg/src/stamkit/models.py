"""Built-in physical systems: a bosonic mode, a Lambda system and two coupled qubits.

Each builder returns a :class:`~stamkit.protocol.GaugeSpec`; the module also
provides the analytic reference objects (coherent states, the Lambda-system
target gate, the coupled-qubit Hamiltonians and target states).

Level conventions
-----------------
Lambda system: computational basis ``(|1>, |0>, |e>)``; gauge levels
``0 = dark``, ``1`` and ``2`` the two bright/excited mixtures.

Coupled qubits: basis ``|00>, |01>, |10>, |11>`` with ``sigma_z|0> = +|0>``.
With ``E > 0`` the path state ``|11>`` is the top level of ``H0``; flipping the
sign of ``E`` mirrors the spectrum without changing any fidelity.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import qla
from .errors import InconsistentAngles, InvalidArgument, InvalidTruncation, SingularPoint
from .protocol import GaugeSpec, eigenstate_at

# ---------------------------------------------------------------- bosonic mode


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(np.complex128)


def number_op(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(np.complex128)


def coherent_state(alpha: complex, dim: int) -> np.ndarray:
    """Truncated series exp(-|a|^2/2) a^n / sqrt(n!)."""
    n = np.arange(dim)
    log_fact = np.array([math.lgamma(k + 1) for k in n])
    mag = np.exp(-abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * log_fact) if alpha != 0 else (n == 0) * 1.0
    return mag * np.exp(1j * np.angle(alpha) * n)


def leakage(psi: np.ndarray, top: int = 2) -> float:
    """Population in the highest ``top`` Fock levels."""
    return float(np.sum(np.abs(psi[-top:]) ** 2))


@dataclass(frozen=True)
class BosonicModel:
    truncation: int = 40
    omega: float = 1.0
    alpha: complex = 1.0

    def __post_init__(self):
        if self.truncation < 8 * (1 + abs(self.alpha) ** 2):
            warnings.warn(f"truncation {self.truncation} may be too small for |alpha|={abs(self.alpha):.3g}",
                          RuntimeWarning, stacklevel=3)


def build_bosonic(m: BosonicModel) -> GaugeSpec:
    if m.truncation < 4:
        raise InvalidTruncation(f"truncation must be >= 4, got {m.truncation}")
    a = annihilation(m.truncation)
    alpha = complex(m.alpha)
    gen = 1j * alpha * a.conj().T - 1j * alpha.conjugate() * a
    energies = m.omega * np.arange(m.truncation, dtype=float)
    return GaugeSpec(gen, np.eye(m.truncation, dtype=np.complex128), energies, name="bosonic",
                     meta={"omega": m.omega, "alpha": [alpha.real, alpha.imag], "truncation": m.truncation})


def bosonic_hamiltonian(m: BosonicModel, lam: float) -> np.ndarray:
    """omega a^dag a - lam omega (alpha a^dag + alpha^* a) + omega |lam alpha|^2 (truncated)."""
    a = annihilation(m.truncation)
    alpha = complex(m.alpha)
    return m.omega * (a.conj().T @ a - lam * (alpha * a.conj().T + alpha.conjugate() * a)
                      + abs(lam * alpha) ** 2 * np.eye(m.truncation))


# ---------------------------------------------------------------- Lambda system

KET1, KET0, KETE = 0, 1, 2


@dataclass(frozen=True)
class LambdaModel:
    """Lambda system parametrized by the quantization integers and the pulse length.

    E2 = -(2 k2 + 1) pi / t_p and E3 = (2 k3 + 1) pi / t_p fix the detuning
    Delta = E2 + E3 and the coupling Omega = sqrt(-E2 E3).
    """

    k2: int = 0
    k3: int = 0
    t_p: float = math.pi
    phi: float = 0.0
    xi: float | None = None

    def __post_init__(self):
        if self.k2 < 0 or self.k3 < 0 or int(self.k2) != self.k2 or int(self.k3) != self.k3:
            raise InvalidArgument("k2 and k3 must be non-negative integers")
        if not (self.t_p > 0 and math.isfinite(self.t_p)):
            raise InvalidArgument(f"t_p must be positive, got {self.t_p!r}")

    @property
    def E2(self) -> float:
        return -(2 * self.k2 + 1) * math.pi / self.t_p

    @property
    def E3(self) -> float:
        return (2 * self.k3 + 1) * math.pi / self.t_p

    @property
    def Delta(self) -> float:
        return self.E2 + self.E3

    @property
    def Omega(self) -> float:
        return math.sqrt(-self.E2 * self.E3)

    @property
    def mixing_angle(self) -> float:
        """xi solving (E3 - E2) cos(2 xi) = E3 + E2, in (0, pi/2)."""
        return 0.5 * math.acos((self.E3 + self.E2) / (self.E3 - self.E2))

    @classmethod
    def from_omega_delta(cls, Omega: float, Delta: float, phi: float = 0.0, max_k: int = 50):
        """Nearest quantized model to a requested (Omega, Delta).

        Returns ``(model, mismatch)`` where ``mismatch`` is the relative error of
        the achieved Delta/Omega ratio. Among equally good pairs the shortest
        pulse wins.
        """
        if Omega <= 0:
            raise InvalidArgument("Omega must be positive")
        target = Delta / Omega
        best = None
        for k2 in range(max_k + 1):
            for k3 in range(max_k + 1):
                r = 2 * (k3 - k2) / math.sqrt((2 * k2 + 1) * (2 * k3 + 1))
                key = (abs(r - target), (2 * k2 + 1) * (2 * k3 + 1))
                if best is None or key < best[0]:
                    best = (key, k2, k3)
        (err, _), k2, k3 = best
        t_p = math.pi * math.sqrt((2 * k2 + 1) * (2 * k3 + 1)) / Omega
        return cls(k2, k3, t_p, phi), err / max(abs(target), 1.0)

    def envelopes(self, lam: float) -> tuple[float, float]:
        """(Stokes, pump) amplitudes 2 Omega cos(lam), 2 Omega sin(lam)."""
        return 2 * self.Omega * math.cos(lam), 2 * self.Omega * math.sin(lam)


def bright_state(lam: float, phi: float) -> np.ndarray:
    return np.array([math.sin(lam), np.exp(1j * phi) * math.cos(lam), 0.0], dtype=np.complex128)


def dark_state(lam: float, phi: float) -> np.ndarray:
    return np.array([math.cos(lam), -np.exp(1j * phi) * math.sin(lam), 0.0], dtype=np.complex128)


def lambda_hamiltonian(Omega: float, Delta: float, phi: float, lam: float) -> np.ndarray:
    """Omega (|B_lam><e| + h.c.) + Delta |e><e|."""
    b = bright_state(lam, phi)
    e = np.zeros(3, dtype=np.complex128)
    e[KETE] = 1.0
    return Omega * (np.outer(b, e) + np.outer(e, b.conj())) + Delta * np.outer(e, e)


def excited_projector() -> np.ndarray:
    p = np.zeros((3, 3), dtype=np.complex128)
    p[KETE, KETE] = 1.0
    return p


def build_lambda(m: LambdaModel) -> GaugeSpec:
    xi = m.mixing_angle
    if m.xi is not None and abs((m.E3 - m.E2) * math.cos(2 * m.xi) - (m.E3 + m.E2)) > 1e-10:
        raise InconsistentAngles(f"xi={m.xi!r} violates (E3-E2) cos(2 xi) = E3 + E2")
    if m.xi is not None:
        xi = m.xi
    c, s, ph = math.cos(xi), math.sin(xi), np.exp(1j * m.phi)
    basis = np.zeros((3, 3), dtype=np.complex128)
    basis[KET1, 0] = 1.0
    basis[KET0, 1], basis[KETE, 1] = c * ph, -s
    basis[KET0, 2], basis[KETE, 2] = s * ph, c
    g = np.array([[0, 1j * c, 1j * s], [-1j * c, 0, 0], [-1j * s, 0, 0]], dtype=np.complex128)
    gen = basis @ g @ basis.conj().T
    return GaugeSpec(gen, basis, np.array([0.0, m.E2, m.E3]), name="lambda",
                     detuning_op=excited_projector(),
                     meta={"k2": m.k2, "k3": m.k3, "t_p": m.t_p, "phi": m.phi,
                           "Omega": m.Omega, "Delta": m.Delta, "xi": xi})


def lambda_target_gate(N: int, theta_N: float, phi: float = 0.0) -> np.ndarray:
    """Target gate on span{|1>, |0>} after N pulses."""
    c, s, sgn = math.cos(theta_N), math.sin(theta_N), (-1) ** N
    return np.array([[c, sgn * np.exp(-1j * phi) * s],
                     [-np.exp(1j * phi) * s, sgn * c]], dtype=np.complex128)


# ---------------------------------------------------------------- coupled qubits

SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def embed(op: np.ndarray, site: int, n_qubits: int) -> np.ndarray:
    """Place a single-qubit operator on ``site`` (0 = leftmost factor)."""
    out = np.eye(1, dtype=np.complex128)
    for k in range(n_qubits):
        out = np.kron(out, op if k == site else np.eye(2))
    return out


def product_state(bits: str) -> np.ndarray:
    psi = np.zeros(2 ** len(bits), dtype=np.complex128)
    psi[int(bits, 2)] = 1.0
    return psi


def h0_h1(E: float) -> tuple[np.ndarray, np.ndarray]:
    h0 = -E / 2 * (embed(SIGMA["z"], 0, 2) + embed(SIGMA["z"], 1, 2))
    h1 = -E * np.kron(SIGMA["x"], SIGMA["x"])
    return h0, h1


def parity_op() -> np.ndarray:
    return np.kron(SIGMA["z"], SIGMA["z"])


PSI_PLUS = (product_state("00") - product_state("11")) / math.sqrt(2)
PSI_MINUS = (product_state("01") - product_state("10")) / math.sqrt(2)


@dataclass(frozen=True)
class CoupledQubitModel:
    E: float = 1.0
    beta_mix: float = math.pi / 4
    xi_mix: float = 0.0
    interpolation: str = "trig"

    def __post_init__(self):
        if self.interpolation not in ("trig", "cot"):
            raise InvalidArgument(f"interpolation must be 'trig' or 'cot', got {self.interpolation!r}")
        if self.E == 0 or not math.isfinite(self.E):
            raise InvalidArgument("E must be finite and nonzero")


def coupled_raw_hamiltonian(m: CoupledQubitModel, lam: float) -> np.ndarray:
    """cos(2 lam) H0 + sin(2 lam) H1 (trig) or cot(2 lam) H0 + H1 (cot)."""
    h0, h1 = h0_h1(m.E)
    if m.interpolation == "trig":
        return math.cos(2 * lam) * h0 + math.sin(2 * lam) * h1
    s2 = math.sin(2 * lam)
    if abs(s2) < 1e-12:
        raise SingularPoint(f"cot(2 lam) diverges at lam={lam!r}")
    return math.cos(2 * lam) / s2 * h0 + h1


def linear_ramp_hamiltonian(m: CoupledQubitModel, s: float, eps_x: float = 0.0) -> np.ndarray:
    """(1 - s) H0 + s H1 + eps_x sigma_x on the first qubit."""
    h0, h1 = h0_h1(m.E)
    return (1 - s) * h0 + s * h1 + eps_x * embed(SIGMA["x"], 0, 2)


def build_coupled_qubits(m: CoupledQubitModel) -> GaugeSpec:
    cb, sb, ph = math.cos(m.beta_mix), math.sin(m.beta_mix), np.exp(1j * m.xi_mix)
    basis = np.column_stack([
        product_state("11"),
        1j * product_state("00"),
        cb * ph * product_state("01") - sb * product_state("10"),
        sb * ph * product_state("01") + cb * product_state("10"),
    ])
    g = np.zeros((4, 4), dtype=np.complex128)
    g[0, 1] = g[1, 0] = -1.0
    gen = basis @ g @ basis.conj().T
    E = m.E
    if m.interpolation == "trig":
        def energies(lam):
            s2 = math.sin(2 * lam)
            return np.array([E, -E, E * s2, -E * s2])
    else:
        spec_probe = GaugeSpec(gen, basis, np.zeros(4))

        def energies(lam):
            h = coupled_raw_hamiltonian(m, lam)
            levels = np.column_stack([eigenstate_at(spec_probe, lam, n) for n in range(4)])
            e = np.real(np.einsum("in,ij,jn->n", levels.conj(), h, levels))
            spectrum = qla.eig_hermitian(h)[0]
            if (np.max(np.abs(h @ levels - levels * e)) > 1e-9
                    or np.max(np.abs(np.sort(e) - spectrum)) > 1e-9):
                raise InconsistentAngles("cot-mode Hamiltonian is not diagonal in the gauge frame")
            return e
    h0, _ = h0_h1(1.0)
    return GaugeSpec(gen, basis, energies, name="coupled_qubits", detuning_op=h0, n_qubits=2,
                     meta={"E": E, "beta_mix": m.beta_mix, "xi_mix": m.xi_mix,
                           "interpolation": m.interpolation})
