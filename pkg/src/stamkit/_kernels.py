"""Hot inner loops, numba-compiled when available.

Set ``STAMKIT_DISABLE_NUMBA=1`` to force the pure-numpy path (useful for
debugging and for the benchmark in ``benchmarks/``). Both paths consume the
same precomputed inputs, so results agree to rounding.

apply_spectral_steps(evals, evecs, dt, psi)
    Apply prod_k V_k exp(-i dt e_k) V_k^dagger to ``psi`` in step order, with
    ``evals`` of shape (steps, d) and ``evecs`` (steps, d, d), eigenvectors as
    columns (the output of a batched ``numpy.linalg.eigh``).

ou_area_increments(z, beta0, a, gain, l11, l21, l22) -> (increments, beta_final)
    Per-slice integrals of an Ornstein-Uhlenbeck drift. ``z`` holds standard
    normals of shape (trials, steps, 2); (l11, l21, l22) is the Cholesky factor
    of the exact joint covariance of the next sample and the slice integral,
    conditioned on the current sample.
"""
import os

import numpy as np

_DISABLED = os.environ.get("STAMKIT_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError("numba disabled by STAMKIT_DISABLE_NUMBA")
    from numba import njit
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def _apply_spectral_steps_py(evals, evecs, dt, psi):
    out = psi.astype(np.complex128).copy()
    for k in range(evals.shape[0]):
        v = evecs[k]
        out = v @ (np.exp(-1j * dt * evals[k]) * (v.conj().T @ out))
    return out


def _ou_area_increments_py(z, beta0, a, gain, l11, l21, l22):
    trials, steps = z.shape[0], z.shape[1]
    inc = np.empty((trials, steps))
    beta = beta0.copy()
    for k in range(steps):
        z1 = z[:, k, 0]
        z2 = z[:, k, 1]
        inc[:, k] = gain * beta + l21 * z1 + l22 * z2
        beta = a * beta + l11 * z1
    return inc, beta


if HAS_NUMBA:

    @njit(cache=True)
    def _apply_spectral_steps_nb(evals, evecs, dt, psi):
        n, d = evals.shape
        out = psi.astype(np.complex128).copy()
        tmp = np.empty(d, dtype=np.complex128)
        for k in range(n):
            for i in range(d):
                acc = 0j
                for m in range(d):
                    acc += np.conj(evecs[k, m, i]) * out[m]
                tmp[i] = np.exp(-1j * dt * evals[k, i]) * acc
            for i in range(d):
                acc = 0j
                for m in range(d):
                    acc += evecs[k, i, m] * tmp[m]
                out[i] = acc
        return out

    @njit(cache=True)
    def _ou_area_increments_nb(z, beta0, a, gain, l11, l21, l22):
        trials, steps = z.shape[0], z.shape[1]
        inc = np.empty((trials, steps))
        beta_out = np.empty(trials)
        for t in range(trials):
            beta = beta0[t]
            for k in range(steps):
                z1 = z[t, k, 0]
                inc[t, k] = gain * beta + l21 * z1 + l22 * z[t, k, 1]
                beta = a * beta + l11 * z1
            beta_out[t] = beta
        return inc, beta_out

    apply_spectral_steps = _apply_spectral_steps_nb
    ou_area_increments = _ou_area_increments_nb
else:
    apply_spectral_steps = _apply_spectral_steps_py
    ou_area_increments = _ou_area_increments_py
