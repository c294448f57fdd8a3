"""Dense Hermitian linear algebra: spectra, trace norm and distances.

The reference eigensolver is a cyclic complex Jacobi method. It is slow
compared with LAPACK but short enough to audit, deterministic, and accurate
to machine precision for the small matrices handled here (dim <= 64).
"""

from __future__ import annotations

import math

import numpy as np

from .tolerances import TOL

__all__ = [
    "ValidationError",
    "as_hermitian",
    "as_probability_vector",
    "check_state",
    "eig_hermitian",
    "eigvalsh",
    "trace_norm",
    "trace_distance",
    "statistical_distance",
]

MAX_DIM = 64


class ValidationError(ValueError):
    """Raised when an input violates a documented invariant."""


def as_hermitian(m, atol=TOL.hermitian_atol):
    """Return ``m`` as a complex square array, checking that it is Hermitian.

    Raises
    ------
    ValidationError
        If the array is not square, or if some entry ``(i, j)`` differs from
        the conjugate of entry ``(j, i)`` by more than ``atol``. The message
        names the first offending pair.
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {a.shape}")
    diff = np.abs(a - a.conj().T)
    if diff.max() > atol:
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        i, j = (int(i), int(j)) if i <= j else (int(j), int(i))
        raise ValidationError(
            f"matrix is not Hermitian: entry ({i}, {j}) = {a[i, j]!r} is not the "
            f"conjugate of entry ({j}, {i}) = {a[j, i]!r}"
        )
    return a


def as_probability_vector(p, atol=TOL.prob_sum_atol):
    """Return ``p`` as a float array after checking non-negativity and normalization."""
    v = np.asarray(p, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError(f"expected a non-empty 1-d probability vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("probability vector contains non-finite values")
    if v.min() < 0:
        raise ValidationError(f"negative probability {v.min()!r} at index {int(np.argmin(v))}")
    if abs(v.sum() - 1.0) > atol:
        raise ValidationError(f"probabilities sum to {v.sum()!r}, not 1")
    return v


def eigvalsh(m):
    """LAPACK eigenvalues, ascending; used on hot paths and for validation."""
    return np.linalg.eigvalsh(m)


def check_state(rho, atol=TOL.state_atol, name="state"):
    """Validate a density operator (Hermitian, PSD, unit trace) and return it."""
    a = as_hermitian(rho)
    tr = np.trace(a).real
    if abs(tr - 1.0) > atol:
        raise ValidationError(f"{name} has trace {tr!r}, expected 1")
    lmin = eigvalsh(a)[0]
    if lmin < -atol:
        raise ValidationError(f"{name} is not positive semidefinite (min eigenvalue {lmin!r})")
    return a


def _jacobi_rotate(a, v, p, q):
    apq = a[p, q]
    mag = abs(apq)
    phase = apq / mag
    app = a[p, p].real
    aqq = a[q, q].real
    tau = (aqq - app) / (2.0 * mag)
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    # Phase-shift column q so that a[p, q] is real, then apply a real rotation.
    j = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]], dtype=complex)
    idx = [p, q]
    a[:, idx] = a[:, idx] @ j
    a[idx, :] = j.conj().T @ a[idx, :]
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    v[:, idx] = v[:, idx] @ j


def eig_hermitian(m, *, max_sweeps=TOL.jacobi_max_sweeps, offdiag_tol=TOL.jacobi_offdiag):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : array_like
        Hermitian matrix of dimension at most 64.
    max_sweeps : int
        Hard cap on the number of full sweeps over the upper triangle.
    offdiag_tol : float
        Convergence threshold on every off-diagonal magnitude, relative to
        ``max(1, ||m||_F)``.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real eigenvalues sorted in descending order.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal eigenvectors as columns, ``eigenvectors[:, k]`` pairing
        with ``eigenvalues[k]``.
    """
    a = as_hermitian(m).copy()
    n = a.shape[0]
    if n > MAX_DIM:
        raise ValidationError(f"dimension {n} exceeds the supported maximum {MAX_DIM}")
    v = np.eye(n, dtype=complex)
    thresh = offdiag_tol * max(1.0, float(np.linalg.norm(a)))
    a = 0.5 * (a + a.conj().T)
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diag(a)))
        if off.max(initial=0.0) < thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) >= thresh:
                    _jacobi_rotate(a, v, p, q)
    w = np.diag(a).real.copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def trace_norm(m):
    """Sum of the absolute eigenvalues of a Hermitian matrix."""
    w, _ = eig_hermitian(m)
    return float(np.abs(w).sum())


def trace_distance(rho, sigma):
    """Half the trace norm of ``rho - sigma`` for two density operators."""
    a = check_state(rho, name="rho")
    b = check_state(sigma, name="sigma")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return min(1.0, 0.5 * trace_norm(a - b))


def statistical_distance(p, q):
    """Total variation distance ``1/2 sum_i |p_i - q_i|`` between two distributions."""
    p = as_probability_vector(p)
    q = as_probability_vector(q)
    if p.shape != q.shape:
        raise ValidationError(f"length mismatch: {p.size} vs {q.size}")
    return float(0.5 * np.abs(p - q).sum())
