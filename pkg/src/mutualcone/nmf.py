"""NMF by alternating non-negativity constrained least squares (ANLS).

Each half-step is an exact NNLS solve (all columns of ``W`` given ``B``, then
all rows of ``B`` given ``W``), so the objective never increases.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .nnls import solve_normal


@dataclass(frozen=True)
class NmfConfig:
    rank: int
    max_outer_iterations: int = 300
    tolerance: float = 1e-6
    restarts: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ContractError(f"rank must be >= 1, got {self.rank}")
        if self.restarts < 1:
            raise ContractError(f"restarts must be >= 1, got {self.restarts}")
        if not self.tolerance > 0:
            raise ContractError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_outer_iterations < 1:
            raise ContractError("max_outer_iterations must be >= 1")


@dataclass(frozen=True)
class NmfResult:
    basis: np.ndarray
    weights: np.ndarray
    objective: float
    trace: tuple = field(default=(), repr=False)
    restart: int = 0
    # one objective trace per restart actually run
    all_traces: tuple = field(default=(), repr=False)


def _objective(f, b, w):
    return float(np.linalg.norm(f - b @ w))


def _init_basis(rng, d, r):
    # uniform on (0, 1]
    return 1.0 - rng.random((d, r))


def _revive_dead_columns(rng, b, w):
    dead = ~np.any(b > 0.0, axis=0) | ~np.any(w > 0.0, axis=1)
    if dead.any():
        b[:, dead] = 1.0 - rng.random((b.shape[0], int(dead.sum())))
        w[dead, :] = 0.0
    return b, w


def _run(f, rank, rng, max_iter, tol, f_norm):
    d, n = f.shape
    b = _init_basis(rng, d, rank)
    w = solve_normal(b.T @ b, b.T @ f)
    obj = _objective(f, b, w)
    trace = [obj]
    floor = 1e-14 * max(f_norm, 1.0)
    for _ in range(max_iter):
        if obj <= floor:
            break
        b_new = solve_normal(w @ w.T, w @ f.T, init=(b > 0.0).T).T
        w_new = w.copy()
        b_new, w_new = _revive_dead_columns(rng, b_new, w_new)
        w_new = solve_normal(b_new.T @ b_new, b_new.T @ f, init=w_new > 0.0)
        new = _objective(f, b_new, w_new)
        if new > obj:
            # round-off in the normal equations; keep the better iterate
            break
        b, w = b_new, w_new
        decrease = obj - new
        obj = new
        trace.append(obj)
        if decrease <= tol * max(trace[-2], floor):
            break
    return b, w, obj, trace


def _normalize(b, w):
    norms = np.linalg.norm(b, axis=0)
    keep = norms > 0.0
    b = b.copy()
    w = w.copy()
    b[:, keep] /= norms[keep]
    w[keep, :] *= norms[keep][:, None]
    return b, w


def factorize(features, config):
    """Factorize a non-negative ``d x N`` matrix as ``B @ W``.

    Restarts use sub-seeds spawned from ``config.seed``; the restart with the
    lowest objective wins (ties to the earliest).  Remaining restarts are
    skipped once one reaches an exact factorization.  Basis columns are returned
    with unit Euclidean norm and the weights rescaled so ``B @ W`` is
    unchanged.
    """
    f = np.asarray(features, dtype=float)
    if f.ndim != 2:
        raise ContractError(f"features must be 2-D, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise ContractError("features contain NaN or Inf")
    if np.any(f < 0):
        i, j = np.argwhere(f < 0)[0]
        raise ContractError(f"negative feature entry {f[i, j]!r} at row {i}, column {j}")
    d, n = f.shape
    if config.rank > n:
        raise ContractError(f"rank {config.rank} exceeds number of samples {n}")

    f_norm = float(np.linalg.norm(f))
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)
    best = None
    traces = []
    for k, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        b, w, obj, trace = _run(f, config.rank, rng, config.max_outer_iterations,
                                config.tolerance, f_norm)
        traces.append(tuple(trace))
        if best is None or obj < best[2]:
            best = (b, w, obj, trace, k)
        if best[2] <= 1e-14 * max(f_norm, 1.0):
            # exact to round-off; later restarts cannot do better
            break
    b, w, _, trace, k = best
    b, w = _normalize(b, w)
    return NmfResult(b, w, _objective(f, b, w), tuple(trace), k, tuple(traces))
