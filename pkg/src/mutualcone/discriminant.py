"""Discriminant space for a family of class cones.

Pipeline: find matched unit vectors across all class cones (a non-negative
analogue of generalized CCA), take pairwise gaps between them as the
between-class scatter, take generator deviations from the class mean as the
within-class scatter, and keep the leading generalized eigenvectors.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .cone import AlsConfig, ConvexCone, _deflate, consensus_search, polish
from .errors import ContractError, DegenerateProjectionError

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class CommonVectorSet:
    """Matched vectors ``vectors[j][c]`` for step ``j`` and class ``c``.

    ``truncated`` is set when the search stopped early because every restart
    collapsed into a cone's apex or a deflated cone vanished.
    """

    vectors: tuple
    consensus: tuple
    truncated: bool = False

    @property
    def steps(self):
        return len(self.vectors)


@dataclass(frozen=True)
class ScatterPair:
    s_b: np.ndarray
    s_w: np.ndarray


@dataclass(frozen=True, eq=False)
class DiscriminantSpace:
    """Leading generalized eigenvectors of ``(S_b, S_w + eps I)``.

    ``eigenvectors`` holds the unit-length ``phi_i`` in eigenvalue order;
    ``basis`` is an orthonormal basis of their span, used for projection.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    regularization: float
    basis: np.ndarray

    def __post_init__(self):
        # fixed memory layout keeps BLAS results identical after a reload
        for name in ("eigenvectors", "eigenvalues", "basis"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float, order="C"))

    @property
    def ambient_dim(self):
        return self.eigenvectors.shape[0]

    @property
    def dim(self):
        return self.eigenvectors.shape[1]


def _check_cones(cones):
    if len(cones) < 2:
        raise ContractError("at least two class cones are required")
    d = cones[0].ambient_dim
    if any(c.ambient_dim != d for c in cones):
        raise ContractError("class cones live in different ambient dimensions")
    return d


def common_vectors(cones, config=AlsConfig()):
    """Sequentially find matched unit vectors across all cones.

    Step ``j`` runs the project-normalize-average iteration on the cones
    deflated against the consensus vectors of steps ``1..j-1``.  The restart
    with the largest sum of pairwise correlations wins and is refined to
    machine precision.  ``min_c N_c`` steps are taken, ``N_c`` being the
    dimension of the span of cone ``c``'s generators.
    """
    d = _check_cones(cones)
    rng = np.random.default_rng(config.seed)
    steps = min(c.span_rank for c in cones)
    found = np.zeros((d, 0))
    vectors, consensus = [], []
    truncated = False
    current = list(cones)
    for j in range(steps):
        if j:
            current = [_deflate(c.generators, found) for c in cones]
            if any(c is None for c in current):
                truncated = True
                break
        wits, ys = consensus_search(current, config, rng)
        if wits.shape[2] == 0:
            truncated = True
            break
        total = wits.sum(axis=0)
        # sum_{c != c'} p^c . p^c' = ||sum_c p^c||^2 - C
        score = np.einsum("ij,ij->j", total, total)
        best = int(np.argmax(score))
        units, y = wits[:, :, best].copy(), ys[:, best].copy()
        refined = polish(current, y)
        if refined is not None:
            units, y = refined
        vectors.append(tuple(units[c].copy() for c in range(len(cones))))
        consensus.append(y)
        found = linalg.orthonormal_columns(np.column_stack([found, y]))
    return CommonVectorSet(tuple(vectors), tuple(consensus), truncated)


def scatter(cones, cv):
    """Between-class (gap) and within-class (generator) scatter matrices."""
    d = _check_cones(cones)
    s_b = np.zeros((d, d))
    for step in cv.vectors:
        if len(step) != len(cones):
            raise ContractError("common vectors were computed for a different set of cones")
        for c1 in range(len(cones) - 1):
            for c2 in range(c1 + 1, len(cones)):
                gap = step[c1] - step[c2]
                s_b += np.outer(gap, gap)
    s_w = np.zeros((d, d))
    for cone in cones:
        dev = cone.generators - cone.generators.mean(axis=1, keepdims=True)
        s_w += dev @ dev.T
    return ScatterPair(0.5 * (s_b + s_b.T), 0.5 * (s_w + s_w.T))


def default_regularization(s_w):
    d = s_w.shape[0]
    return max(float(np.trace(s_w)) / d, 1e-8)


def solve_space(pair, n_d, epsilon=None):
    """Top ``n_d`` eigenvectors of ``S_b phi = gamma (S_w + eps I) phi``."""
    d = pair.s_b.shape[0]
    if not 1 <= n_d <= d:
        raise ContractError(f"n_d {n_d} must lie in [1, {d}]")
    eps = default_regularization(pair.s_w) if epsilon is None else float(epsilon)
    if not eps > 0:
        raise ContractError(f"epsilon must be > 0, got {epsilon}")
    sb_eig = np.linalg.eigvalsh(pair.s_b)
    top = float(sb_eig[-1]) if sb_eig.size else 0.0
    if top <= 0.0:
        raise ContractError("between-class scatter is zero: the class cones do not differ")
    rank = int(np.sum(sb_eig > RANK_RTOL * top))
    if n_d > rank:
        raise ContractError(f"n_d {n_d} exceeds the rank {rank} of the between-class scatter")
    gammas, phis = linalg.gen_sym_eig(pair.s_b, pair.s_w + eps * np.eye(d))
    phis = phis[:, :n_d]
    phis = phis / np.linalg.norm(phis, axis=0)
    # deterministic sign: largest-magnitude entry positive
    signs = np.sign(phis[np.argmax(np.abs(phis), axis=0), np.arange(n_d)])
    phis = phis * np.where(signs == 0, 1.0, signs)
    basis = linalg.orthonormal_columns(phis, tol=1e-12)
    if basis.shape[1] != n_d:
        raise ContractError("discriminant eigenvectors are numerically dependent")
    return DiscriminantSpace(phis, gammas[:n_d].copy(), eps, basis)


def build(cones, n_d, epsilon=None, config=AlsConfig()):
    """Discriminant space from class cones (common vectors, scatter, eigenproblem)."""
    cv = common_vectors(cones, config)
    return solve_space(scatter(cones, cv), n_d, epsilon)


def project_cone(space, cone):
    """Project generators onto the space (in its coordinates) and renormalize.

    Generators that vanish are dropped.  The result is a cone in
    ``space.dim`` dimensions whose generators may have negative entries.
    """
    if cone.ambient_dim != space.ambient_dim:
        raise ContractError(
            f"ambient dimension mismatch: cone in R^{cone.ambient_dim}, space in R^{space.ambient_dim}"
        )
    coords = space.basis.T @ cone.generators
    norms = np.linalg.norm(coords, axis=0)
    keep = norms >= 1e-10
    if not keep.any():
        raise DegenerateProjectionError("every generator vanishes on the discriminant space")
    return ConvexCone(coords[:, keep] / norms[keep], nonnegative=False)
