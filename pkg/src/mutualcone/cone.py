"""Convex cones, projection onto them, and angles between two cones.

A cone is stored by its generator matrix ``B`` (``d x r``, unit columns) and
stands for ``{B w : w >= 0}``.  Angles between two cones are found one at a
time: alternating least squares locates the most correlated pair of unit
vectors ``(p, q)``, then both cones are projected onto the orthogonal
complement of every witness vector found so far and the search repeats.
"""

from dataclasses import dataclass, field

import numpy as np

from . import nnls
from .errors import ContractError
from .linalg import orthonormal_columns

UNIT_TOL = 1e-10
DEAD_GENERATOR = 1e-10
APEX_NORM = 1e-12
POLISH_RADIUS = 1e-4  # refined point must stay near the ALS iterate


@dataclass(frozen=True, eq=False)
class ConvexCone:
    """Cone spanned by non-negative combinations of unit generators.

    Use :meth:`from_generators` to build one from raw (unnormalized) vectors.
    ``nonnegative=False`` marks cones living in a projected space, whose
    generators may carry negative entries.
    """

    generators: np.ndarray
    nonnegative: bool = True
    gram: np.ndarray = field(init=False, repr=False)
    span_rank: int = field(init=False, repr=False, compare=False)
    _cache: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        g = np.array(self.generators, dtype=float, order="C")
        if g.ndim == 1:
            g = g[:, None]
        if g.ndim != 2 or g.shape[1] < 1 or g.shape[0] < 1:
            raise ContractError(f"generators must be a non-empty d x r matrix, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ContractError("generators contain NaN or Inf")
        if self.nonnegative and np.any(g < 0):
            raise ContractError("generators of a feature-space cone must be non-negative")
        norms = np.linalg.norm(g, axis=0)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise ContractError("generators must have unit norm; use ConvexCone.from_generators")
        g.setflags(write=False)
        gram = g.T @ g
        gram.setflags(write=False)
        object.__setattr__(self, "generators", g)
        object.__setattr__(self, "gram", gram)
        # dimension of the span; equals rank for independent generators
        object.__setattr__(self, "span_rank", int(np.linalg.matrix_rank(g, tol=DEAD_GENERATOR)))
        object.__setattr__(self, "_cache", {})

    @classmethod
    def from_generators(cls, vectors, nonnegative=True):
        """Normalize columns to unit length, dropping (near-)zero columns."""
        g = np.array(vectors, dtype=float)
        if g.ndim == 1:
            g = g[:, None]
        norms = np.linalg.norm(g, axis=0)
        keep = norms > DEAD_GENERATOR
        if not keep.any():
            raise ContractError("every generator is zero")
        return cls(g[:, keep] / norms[keep], nonnegative=nonnegative)

    @property
    def ambient_dim(self):
        return self.generators.shape[0]

    @property
    def rank(self):
        return self.generators.shape[1]


    def project_many(self, ys, init=None):
        """Project the columns of ``ys`` onto the cone; returns ``(P, W)``."""
        w = nnls.solve_normal(self.gram, self.generators.T @ ys, init=init, cache=self._cache)
        return self.generators @ w, w


@dataclass(frozen=True)
class AlsConfig:
    max_iterations: int = 500
    tolerance: float = 1e-8
    restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1 or self.restarts < 1:
            raise ContractError("max_iterations and restarts must be >= 1")
        if not self.tolerance > 0:
            raise ContractError("tolerance must be > 0")


@dataclass(frozen=True)
class AngleSpectrum:
    """Ascending angles between two cones with their witness pairs.

    ``degenerate`` is set when a deflated cone vanished (or every ALS restart
    collapsed to the apex) before ``count`` angles were found; the missing
    angles are reported as ``pi / 2``.  ``discovery_order[k]`` is the index
    into ``angles`` of the ``k``-th angle the search found, so
    ``angles[discovery_order[0]]`` is the minimal angle between the
    undeflated cones.
    """

    angles: tuple
    pairs: tuple
    degenerate: bool = False
    discovery_order: tuple = ()

    @property
    def first(self):
        """Angle of the first (undeflated) search."""
        return self.angles[self.discovery_order[0]] if self.discovery_order else self.angles[0]

    @property
    def count(self):
        return len(self.angles)

    def __len__(self):
        return len(self.angles)


def _check_vector(cone, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != cone.ambient_dim:
        raise ContractError(
            f"dimension mismatch: cone lives in R^{cone.ambient_dim}, vector has shape {x.shape}"
        )
    return x


def project(cone, x):
    """Project ``x`` onto the cone by NNLS; returns ``(projection, coefficients)``."""
    x = _check_vector(cone, x)
    sol = nnls.solve(cone.generators, x)
    return cone.generators @ sol.coefficients, sol.coefficients


def angle_to_vector(cone, x):
    """Angle between ``x`` and its projection onto the cone (``pi/2`` at the apex)."""
    x = _check_vector(cone, x)
    xn = np.linalg.norm(x)
    if xn == 0:
        raise ContractError("angle to the zero vector is undefined")
    proj, _ = project(cone, x)
    pn = np.linalg.norm(proj)
    if pn < APEX_NORM * xn:
        return np.pi / 2
    return float(np.arccos(np.clip(x @ proj / (xn * pn), 0.0, 1.0)))


def _random_members(gens, rng, k):
    pts = gens @ (1.0 - rng.random((gens.shape[1], k)))
    return pts / np.linalg.norm(pts, axis=0)


def _unit_columns(m):
    n = np.linalg.norm(m, axis=0)
    ok = n >= APEX_NORM
    out = np.zeros_like(m)
    out[:, ok] = m[:, ok] / n[ok]
    return out, ok


def consensus_search(cones, config, rng, initial=None):
    """Batched project-normalize-average iteration over several cones.

    Every column of the working matrix is one restart.  Returns
    ``(witnesses, consensus)`` where ``witnesses`` has shape
    ``(n_cones, d, n_ok)`` and ``consensus`` ``(d, n_ok)``; restarts that fell
    into a cone's apex more often than the redraw budget allows are dropped.
    """
    c = len(cones)
    d = cones[0].ambient_dim
    k = config.restarts

    def draw(m):
        return sum(_random_members(cn.generators, rng, m) for cn in cones) / c

    y = draw(k) if initial is None else np.array(initial, dtype=float)
    wits = np.zeros((c, d, k))
    alive = np.ones(k, dtype=bool)
    active = np.ones(k, dtype=bool)
    passive = [None] * c
    redraws = k
    for _ in range(config.max_iterations):
        cols = np.flatnonzero(active)
        if cols.size == 0:
            break
        ok = np.ones(cols.size, dtype=bool)
        units = []
        for i, cn in enumerate(cones):
            init = None if passive[i] is None else passive[i][:, cols]
            proj, w = cn.project_many(y[:, cols], init=init)
            if passive[i] is None:
                passive[i] = np.zeros((cn.rank, k), dtype=bool)
            passive[i][:, cols] = w > 0.0
            u, good = _unit_columns(proj)
            units.append(u)
            ok &= good
        for i in range(c):
            wits[i][:, cols] = units[i]
        y_hat = sum(units) / c
        step = np.linalg.norm(y_hat - y[:, cols], axis=0)
        y[:, cols] = y_hat
        done = ok & (step < config.tolerance)
        active[cols[done]] = False
        apex = cols[~ok]
        if apex.size:
            # normalization is undefined at the apex: redraw while budget lasts
            n_new = min(apex.size, redraws)
            redraws -= n_new
            if n_new:
                y[:, apex[:n_new]] = draw(n_new)
                for p in passive:
                    p[:, apex[:n_new]] = False
            alive[apex[n_new:]] = False
            active[apex[n_new:]] = False
    return wits[:, :, alive], y[:, alive]


def polish(cones, y, max_steps=8):
    """Refine a converged consensus ``y`` to machine precision.

    ALS stops about ``tolerance`` away from its fixed point, and the rest
    of the pipeline (deflation, restart choice) is first-order sensitive to
    that residue.  With each cone's passive face held fixed, the fixed point
    solves ``mean_c P_c y / ||P_c y|| = y`` for the orthogonal projectors
    ``P_c`` onto the faces; Newton's method on that equation converges
    in a few steps.  The result is accepted only if projecting onto the
    true cones reproduces it; otherwise ``None`` is returned and the ALS
    iterate should be kept.

    Returns ``(units, y)`` with ``units`` of shape ``(n_cones, d)``.
    """
    faces = []
    for cn in cones:
        _, w = cn.project_many(y[:, None])
        keep = w[:, 0] > 0.0
        if not keep.any():
            return None
        faces.append(orthonormal_columns(cn.generators[:, keep]))
    z = orthonormal_columns(np.hstack(faces))
    grams = [(q.T @ z).T @ (q.T @ z) for q in faces]
    a = z.T @ y
    eye = np.eye(a.size)
    for _ in range(max_steps):
        ga = [g @ a for g in grams]
        norms = [np.sqrt(a @ v) for v in ga]
        if min(norms) < APEX_NORM:
            return None
        f = sum(v / n for v, n in zip(ga, norms)) / len(cones) - a
        if np.linalg.norm(f) <= 1e-15:
            break
        jac = sum(g / n - np.outer(v, v) / n ** 3 for g, v, n in zip(grams, ga, norms))
        jac = jac / len(cones) - eye
        # minimum-norm step: fixed points form a continuum when faces meet
        step = np.linalg.lstsq(jac, f, rcond=1e-10)[0]
        a = a - step
    y_new = z @ a
    if not np.linalg.norm(y_new - y) <= POLISH_RADIUS:
        return None
    units = []
    for cn in cones:
        proj, _ = cn.project_many(y_new[:, None])
        u, ok = _unit_columns(proj)
        if not ok[0]:
            return None
        units.append(u[:, 0])
    units = np.array(units)
    if np.linalg.norm(units.mean(axis=0) - y_new) > 1e-12:
        return None
    return units, y_new


def _deflate(gens, basis):
    if basis.shape[1]:
        gens = gens - basis @ (basis.T @ gens)
    norms = np.linalg.norm(gens, axis=0)
    keep = norms >= DEAD_GENERATOR
    if not keep.any():
        return None
    return ConvexCone(gens[:, keep] / norms[keep], nonnegative=False)


def angles_between(c1, c2, config=AlsConfig()):
    """Sequential angles between two cones, smallest first.

    For each angle, ``config.restarts`` ALS runs start from random
    points of the two (deflated) cones; the run with the largest
    correlation ``p^T q`` wins and is refined by :func:`polish`.
    Correlations are clamped to ``[0, 1]`` so angles stay in ``[0, pi/2]``.
    The spectrum has ``min(c1.span_rank, c2.span_rank)`` angles: dependent
    generators add no directions for deflation to find.
    """
    if c1.ambient_dim != c2.ambient_dim:
        raise ContractError(
            f"ambient dimension mismatch: {c1.ambient_dim} vs {c2.ambient_dim}"
        )
    n = min(c1.span_rank, c2.span_rank)
    rng = np.random.default_rng(config.seed)
    d = c1.ambient_dim
    found = np.zeros((d, 0))
    cur1, cur2 = c1, c2
    angles, pairs = [], []
    degenerate = False
    for k in range(n):
        if k:
            cur1 = _deflate(c1.generators, found)
            cur2 = _deflate(c2.generators, found)
            if cur1 is None or cur2 is None:
                degenerate = True
                break
        wits, ys = consensus_search([cur1, cur2], config, rng)
        if wits.shape[2] == 0:
            degenerate = True
            break
        corr = np.einsum("ij,ij->j", wits[0], wits[1])
        best = int(np.argmax(corr))
        p, q = wits[0][:, best].copy(), wits[1][:, best].copy()
        refined = polish([cur1, cur2], ys[:, best])
        if refined is not None and refined[0][0] @ refined[0][1] >= corr[best] - 1e-12:
            p, q = refined[0]
        angles.append(float(np.arccos(np.clip(p @ q, 0.0, 1.0))))
        pairs.append((p, q))
        found = orthonormal_columns(np.column_stack([found, p, q]))
    # deflated cones are projections, not subsets, so later angles can be smaller
    order = np.argsort(angles, kind="stable")
    found = tuple(int(i) for i in np.argsort(order, kind="stable"))
    angles = [angles[i] for i in order]
    pairs = [pairs[i] for i in order]
    if degenerate:
        angles.extend([np.pi / 2] * (n - len(angles)))
    return AngleSpectrum(tuple(angles), tuple(pairs), degenerate, found)


def similarity(spectrum):
    """Mean squared cosine of the angles."""
    angles = spectrum.angles if isinstance(spectrum, AngleSpectrum) else spectrum
    angles = np.asarray(angles, dtype=float)
    if angles.size == 0:
        raise ContractError("similarity of an empty angle spectrum is undefined")
    return float(np.mean(np.cos(angles) ** 2))
