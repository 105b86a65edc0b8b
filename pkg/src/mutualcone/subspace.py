"""Linear-subspace baselines: MSM similarity and GDS projection for CMSM."""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import ContractError, DegenerateProjectionError

ORTHO_TOL = 1e-9
EIG_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace held as an orthonormal basis (``d x n``)."""

    basis: np.ndarray

    def __post_init__(self):
        b = np.array(self.basis, dtype=float, order="C")
        if b.ndim == 1:
            b = b[:, None]
        if b.ndim != 2 or b.shape[1] < 1:
            raise ContractError(f"basis must be a non-empty d x n matrix, got {b.shape}")
        if np.max(np.abs(b.T @ b - np.eye(b.shape[1]))) > ORTHO_TOL:
            raise ContractError("basis columns are not orthonormal")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @classmethod
    def span(cls, vectors):
        """Subspace spanned by arbitrary (possibly dependent) column vectors."""
        q = linalg.orthonormal_columns(vectors)
        if q.shape[1] == 0:
            raise ContractError("vectors span only the zero subspace")
        return cls(q)

    @property
    def ambient_dim(self):
        return self.basis.shape[0]

    @property
    def dim(self):
        return self.basis.shape[1]

    @property
    def projector(self):
        return self.basis @ self.basis.T


@dataclass(frozen=True)
class CanonicalSpectrum:
    angles: tuple
    canonical_pairs: tuple


def from_features(features, dim):
    """PCA without centering: top-``dim`` left singular vectors of ``features``."""
    f = linalg.as_matrix(features, "features")
    d, n = f.shape
    if not 1 <= dim <= min(d, n):
        raise ContractError(f"subspace dimension {dim} must lie in [1, min(d, N) = {min(d, n)}]")
    u, s, _ = linalg.svd(f)
    if s[dim - 1] <= EIG_FLOOR * max(s[0], 1.0):
        raise ContractError(f"features have numerical rank below {dim}")
    return Subspace(u[:, :dim])


def canonical_angles(s1, s2):
    """Canonical angles from the SVD of ``basis1^T basis2``.

    Angles below ``pi/4`` are taken from the sine (the norm of
    ``v_i - cos(theta_i) u_i``) to keep them accurate near zero.
    """
    if s1.ambient_dim != s2.ambient_dim:
        raise ContractError(f"ambient dimension mismatch: {s1.ambient_dim} vs {s2.ambient_dim}")
    swap = s1.dim > s2.dim
    a, b = (s2, s1) if swap else (s1, s2)
    u, s, v = linalg.svd(a.basis.T @ b.basis)
    cos = np.clip(s[: a.dim], 0.0, 1.0)
    us = a.basis @ u[:, : a.dim]
    vs = b.basis @ v[:, : a.dim]
    # arccos loses half the digits near 0; there the residual v - cos u gives sin
    sin = np.clip(np.linalg.norm(vs - us * cos, axis=0), 0.0, 1.0)
    angles = np.where(cos ** 2 > 0.5, np.arcsin(sin), np.arccos(cos))
    if swap:
        us, vs = vs, us
    pairs = tuple((us[:, i].copy(), vs[:, i].copy()) for i in range(cos.size))
    return CanonicalSpectrum(tuple(angles.tolist()), pairs)


def similarity(spectrum):
    """Mean squared cosine of the canonical angles."""
    angles = spectrum.angles if isinstance(spectrum, CanonicalSpectrum) else spectrum
    angles = np.asarray(angles, dtype=float)
    if angles.size == 0:
        raise ContractError("similarity of an empty spectrum is undefined")
    return float(np.mean(np.cos(angles) ** 2))


def gds(class_subspaces, gds_dim):
    """Generalized difference subspace of a set of class subspaces.

    Eigen-decomposes the sum of class projectors ``G``.  Directions with
    eigenvalue equal to the number of classes are shared by every class and
    carry no difference; among the remaining non-zero eigenvalues, the
    eigenvectors of the ``gds_dim`` smallest span the GDS.
    """
    if len(class_subspaces) < 2:
        raise ContractError("GDS needs at least two class subspaces")
    d = class_subspaces[0].ambient_dim
    if any(s.ambient_dim != d for s in class_subspaces):
        raise ContractError("class subspaces live in different ambient dimensions")
    if not 1 <= gds_dim <= d:
        raise ContractError(f"gds_dim {gds_dim} must lie in [1, {d}]")
    c = len(class_subspaces)
    g = sum(s.projector for s in class_subspaces)
    w, v = linalg.sym_eig(g)
    usable = np.flatnonzero((w > EIG_FLOOR) & (w < c - EIG_FLOOR * c))
    if usable.size < gds_dim:
        raise ContractError(
            f"gds_dim {gds_dim} exceeds the {usable.size} available difference directions"
        )
    chosen = usable[::-1][:gds_dim]  # ascending eigenvalue
    return Subspace(v[:, chosen])


def project_subspace(gds_space, s, tol=1e-10):
    """Orthogonally project ``s`` onto ``gds_space`` and re-orthonormalize."""
    if gds_space.ambient_dim != s.ambient_dim:
        raise ContractError(
            f"ambient dimension mismatch: {gds_space.ambient_dim} vs {s.ambient_dim}"
        )
    g = gds_space.basis
    q = linalg.orthonormal_columns(g @ (g.T @ s.basis), tol=tol)
    if q.shape[1] == 0:
        raise DegenerateProjectionError("subspace is orthogonal to the GDS")
    return Subspace(q)
