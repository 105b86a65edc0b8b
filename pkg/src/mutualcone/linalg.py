"""Dense decomposition kernels used by the rest of the package."""

import numpy as np
import scipy.linalg

from .errors import ContractError, DecompositionError, DefinitenessError

SYMMETRY_RTOL = 1e-10


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-D float array or raise :class:`ContractError`."""
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise ContractError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ContractError(f"{name} contains NaN or Inf")
    return a


def symmetrize(m, name="matrix"):
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise ContractError(f"{name} must be square, got shape {a.shape}")
    scale = max(1.0, np.linalg.norm(a))
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_RTOL * scale:
        raise ContractError(f"{name} is not symmetric")
    return 0.5 * (a + a.T)


def svd(m):
    """Thin SVD ``m = U @ diag(s) @ V.T`` with singular values descending.

    Returns ``(U, s, V)``; note ``V`` (not ``V.T``).
    """
    a = as_matrix(m)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        try:
            u, s, vt = scipy.linalg.svd(a, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError:
            raise DecompositionError(f"SVD did not converge: {exc}") from exc
    return u, s, vt.T


def sym_eig(m):
    """Eigen-decomposition of a symmetric matrix, eigenvalues descending."""
    a = symmetrize(m)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise DecompositionError(f"eigh did not converge: {exc}") from exc
    return w[::-1].copy(), v[:, ::-1].copy()


def gen_sym_eig(a, b):
    """Solve ``a @ phi = gamma * b @ phi`` for symmetric ``a`` and SPD ``b``.

    Uses the Cholesky reduction ``L^-1 a L^-T``.  Eigenvalues are returned
    descending; eigenvectors are ``b``-orthonormal.
    """
    a = symmetrize(a, "a")
    b = symmetrize(b, "b")
    if a.shape != b.shape:
        raise ContractError(f"shape mismatch: {a.shape} vs {b.shape}")
    try:
        low = scipy.linalg.cholesky(b, lower=True)
    except np.linalg.LinAlgError as exc:
        raise DefinitenessError("b is not positive definite") from exc
    c = scipy.linalg.solve_triangular(low, a, lower=True)
    c = scipy.linalg.solve_triangular(low, c.T, lower=True)
    w, z = sym_eig(0.5 * (c + c.T))
    phi = scipy.linalg.solve_triangular(low.T, z, lower=False)
    return w, phi


def orthonormal_columns(m, tol=1e-10):
    """Orthonormal basis of the column span of ``m``, order-preserving.

    Columns whose residual after Gram-Schmidt falls below ``tol`` (relative to
    their own norm, floored at 1) are dropped.
    """
    a = as_matrix(m)
    out = []
    for j in range(a.shape[1]):
        v = a[:, j].copy()
        scale = max(1.0, np.linalg.norm(v))
        for _ in range(2):
            for q in out:
                v -= (q @ v) * q
        n = np.linalg.norm(v)
        if n > tol * scale:
            out.append(v / n)
    if not out:
        return np.zeros((a.shape[0], 0))
    return np.column_stack(out)
