"""Dense complex linear algebra used throughout stamkit.

States, operators and density matrices are plain numpy arrays (``complex128``).
The helpers here validate them and provide the spectral primitives: Hermitian
eigendecomposition, matrix exponentials and fidelity measures.

Tolerance ladder (used consistently by the other modules):

* ``TOL_CONSTRUCT`` (1e-12) for structural checks at construction,
* ``TOL_PROPAGATE`` (1e-10) for propagation results,
* ``TOL_PHYSICS`` (1e-8) for physics-level assertions.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, InvalidArgument, NonFinite, NonHermitianInput, NonPhysicalState

TOL_CONSTRUCT = 1e-12
TOL_PROPAGATE = 1e-10
TOL_PHYSICS = 1e-8

MAX_DIM = 256


def _check_dim(dim: int) -> None:
    if dim < 2:
        raise InvalidArgument(f"dimension must be >= 2, got {dim}")
    if dim > MAX_DIM:
        raise InvalidArgument(f"dimension {dim} exceeds the configured cap {MAX_DIM}")


def as_state(amplitudes, normalize: bool = False) -> np.ndarray:
    psi = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    _check_dim(psi.size)
    if not np.all(np.isfinite(psi)):
        raise NonFinite("state has non-finite amplitudes")
    return normalize_state(psi) if normalize else psi


def normalize_state(psi: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(psi)
    if nrm == 0.0:
        raise InvalidArgument("cannot normalize the zero vector")
    return psi / nrm


def basis_state(dim: int, index: int) -> np.ndarray:
    _check_dim(dim)
    psi = np.zeros(dim, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def as_operator(entries, hermitian: bool = False, tol: float = TOL_CONSTRUCT) -> np.ndarray:
    a = np.asarray(entries, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {a.shape}")
    _check_dim(a.shape[0])
    if hermitian and not is_hermitian(a, tol):
        raise NonHermitianInput(f"operator deviates from Hermitian by {hermitian_defect(a):.3e}")
    return a


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hermitian_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def is_hermitian(a: np.ndarray, tol: float = TOL_CONSTRUCT) -> bool:
    return hermitian_defect(a) <= tol


def is_unitary(u: np.ndarray, tol: float = TOL_PROPAGATE) -> bool:
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))) <= tol


def eig_hermitian(op: np.ndarray, tol: float = TOL_CONSTRUCT):
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a Hermitian matrix.

    Raises NonHermitianInput when ``op`` is not Hermitian within ``tol``.
    """
    op = np.asarray(op, dtype=np.complex128)
    if not is_hermitian(op, tol):
        raise NonHermitianInput(f"operator deviates from Hermitian by {hermitian_defect(op):.3e}")
    # symmetrize so LAPACK sees exactly Hermitian input
    return np.linalg.eigh(0.5 * (op + op.conj().T))


def expm(op: np.ndarray, scale: complex = 1.0, hermitian: bool | None = None) -> np.ndarray:
    """Return exp(scale * op).

    Hermitian inputs go through the eigendecomposition, which keeps
    exp(-i t H) unitary to machine precision. Everything else (e.g. Lindblad
    generators) uses scaling and squaring with a Pade approximant.
    """
    op = np.asarray(op, dtype=np.complex128)
    if not np.all(np.isfinite(op)):
        raise NonFinite("matrix has non-finite entries")
    if hermitian is None:
        hermitian = is_hermitian(op, TOL_CONSTRUCT)
    if hermitian:
        w, v = eig_hermitian(op)
        out = (v * np.exp(scale * w)) @ v.conj().T
    else:
        out = scipy.linalg.expm(scale * op)
    if not np.all(np.isfinite(out)):
        raise NonFinite("matrix exponential overflowed")
    return out


def op_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|Tr(u^dagger v)| / dim, the normalized gate overlap."""
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    return float(min(1.0, abs(np.vdot(u, v)) / u.shape[0]))


def state_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


def density_from_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray, tol: float = TOL_PHYSICS) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity; return ``rho`` unchanged."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionMismatch(f"density matrix must be square, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise NonPhysicalState(f"density matrix not Hermitian ({hermitian_defect(rho):.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise NonPhysicalState(f"trace {tr!r} differs from 1")
    wmin = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if wmin < -tol:
        raise NonPhysicalState(f"negative eigenvalue {wmin:.3e}")
    return rho


def fidelity_to_state(rho: np.ndarray, psi: np.ndarray) -> float:
    return float(np.real(np.vdot(psi, rho @ psi)))
