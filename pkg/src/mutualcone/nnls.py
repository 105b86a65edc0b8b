"""Non-negative least squares.

Two solvers share one contract (global minimiser of ``||x - B w||`` with
``w >= 0``):

* :func:`solve` -- Lawson-Hanson active set on the basis itself, one target.
  This is the reference path; it works on ``B`` directly so it keeps full
  accuracy on ill-conditioned or rank-deficient bases.
* :func:`solve_normal` -- block principal pivoting on the normal equations
  ``(B^T B, B^T X)`` for many targets at once.  Columns sharing a passive set
  are solved together, which is what makes NMF and the cone-angle iterations
  affordable in numpy.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ConvergenceError

DUAL_TOL = 1e-10


@dataclass(frozen=True)
class NnlsSolution:
    coefficients: np.ndarray
    residual_norm: float
    iterations: int


def _check_problem(basis, target):
    b = np.asarray(basis, dtype=float)
    x = np.asarray(target, dtype=float)
    if b.ndim != 2 or x.ndim != 1:
        raise ContractError(f"expected 2-D basis and 1-D target, got {b.shape} and {x.shape}")
    d, r = b.shape
    if d < 1 or r < 1:
        raise ContractError(f"basis must be non-empty, got shape {b.shape}")
    if x.shape[0] != d:
        raise ContractError(f"dimension mismatch: basis has {d} rows, target has {x.shape[0]}")
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(x))):
        raise ContractError("basis and target must be finite")
    if not np.any(b):
        raise ContractError("basis columns are all zero")
    return b, x


def _passive_lstsq(b, x, passive):
    z = np.zeros(b.shape[1])
    if passive.any():
        z[passive] = np.linalg.lstsq(b[:, passive], x, rcond=None)[0]
    return z


def solve(basis, target, max_iter=None, tol=DUAL_TOL):
    """Lawson-Hanson NNLS for a single target vector.

    Parameters
    ----------
    basis : array_like, shape (d, r)
    target : array_like, shape (d,)
    max_iter : int, optional
        Cap on outer passes (columns entering the passive set).  Defaults to
        ``10 * r``.
    tol : float
        Dual-feasibility tolerance, scaled by ``max(1, ||B||_F ||x||)``.

    Returns
    -------
    NnlsSolution

    Raises
    ------
    ConvergenceError
        If the pass cap is hit; ``exc.best`` holds the last feasible iterate.
    """
    b, x = _check_problem(basis, target)
    r = b.shape[1]
    if max_iter is None:
        max_iter = 10 * r
    gtol = tol * max(1.0, np.linalg.norm(b) * np.linalg.norm(x))

    w = np.zeros(r)
    passive = np.zeros(r, dtype=bool)
    blocked = np.zeros(r, dtype=bool)
    grad = b.T @ x
    it = 0
    while True:
        cand = ~passive & ~blocked & (grad > gtol)
        if not cand.any():
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"NNLS exceeded {max_iter} passes", best=_solution(b, x, w, it)
            )
        it += 1
        # argmax returns the lowest index among ties
        j = int(np.argmax(np.where(cand, grad, -np.inf)))
        passive[j] = True
        z = _passive_lstsq(b, x, passive)
        if z[j] <= 0.0:
            # entering column is numerically dependent on the passive set
            passive[j] = False
            blocked[j] = True
            continue
        for _ in range(r + 1):
            bad = passive & (z <= 0.0)
            if not bad.any():
                break
            ratios = w[bad] / (w[bad] - z[bad])
            alpha = np.min(ratios)
            w = w + alpha * (z - w)
            drop = passive & (w <= 1e-15 * max(1.0, np.max(np.abs(w))))
            drop[np.flatnonzero(bad)[np.argmin(ratios)]] = True
            passive &= ~drop
            w[~passive] = 0.0
            z = _passive_lstsq(b, x, passive)
        w = np.where(passive, z, 0.0)
        grad = b.T @ (x - b @ w)
        blocked[:] = False
    return _solution(b, x, w, it)


def _solution(b, x, w, it):
    w = np.maximum(w, 0.0)
    return NnlsSolution(w, float(np.linalg.norm(x - b @ w)), it)


def _lawson_hanson_gram(gram, rhs, tol):
    """Per-column Lawson-Hanson through a square factor ``F`` with ``F^T F = G``."""
    w, v = np.linalg.eigh(0.5 * (gram + gram.T))
    keep = w > 1e-13 * max(1.0, float(w.max(initial=0.0)))
    root = np.sqrt(w[keep])
    factor = root[:, None] * v[:, keep].T
    targets = (v[:, keep].T @ rhs) / root[:, None]
    out = np.zeros(rhs.shape)
    for j in range(rhs.shape[1]):
        try:
            out[:, j] = solve(factor, targets[:, j], tol=tol).coefficients
        except ConvergenceError as exc:
            out[:, j] = exc.best.coefficients
    return out


def _pattern_codes(passive):
    n = passive.shape[0]
    if n <= 62:
        weights = np.left_shift(np.int64(1), np.arange(n, dtype=np.int64))
        return weights @ passive.astype(np.int64)
    return np.unique(passive.T, axis=0, return_inverse=True)[1].ravel()


def _solve_block(gram, rhs, pat, code, cache):
    if cache is not None:
        inv = cache.get(code)
        if inv is None:
            inv = np.linalg.pinv(gram[pat][:, pat], hermitian=True)
            cache[code] = inv
        return inv @ rhs[pat]
    sub = gram[pat][:, pat]
    try:
        return np.linalg.solve(sub, rhs[pat])
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(sub, rhs[pat], rcond=None)[0]


def _solve_passive(gram, rhs, passive, out, cache=None):
    """Fill ``out`` with the unconstrained solutions on each column's passive set."""
    n, k = passive.shape
    out[:] = 0.0
    if k == 0:
        return
    codes = _pattern_codes(passive)
    if np.all(codes == codes[0]):
        pat = passive[:, 0]
        if pat.any():
            out[pat] = _solve_block(gram, rhs, pat, int(codes[0]), cache)
        return
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    bounds = np.flatnonzero(sorted_codes[1:] != sorted_codes[:-1]) + 1
    for cols in np.split(order, bounds):
        pat = passive[:, cols[0]]
        if pat.any():
            out[np.ix_(pat, cols)] = _solve_block(gram, rhs[:, cols], pat,
                                                  int(codes[cols[0]]), cache)


def solve_normal(gram, rhs, max_iter=None, tol=DUAL_TOL, init=None, cache=None):
    """Batched NNLS from normal equations by block principal pivoting.

    Solves ``min_w 0.5 w^T G w - h^T w`` subject to ``w >= 0`` independently
    for every column ``h`` of ``rhs``.

    Parameters
    ----------
    gram : ndarray, shape (r, r)
        ``B^T B``.
    rhs : ndarray, shape (r, k)
        ``B^T X``.
    init : ndarray of bool, shape (r, k), optional
        Initial passive set guess, typically ``previous_solution > 0``.
    cache : dict, optional
        Memo of pseudo-inverses of passive sub-grams keyed by passive-set
        code.  Only valid while ``gram`` stays fixed and ``r <= 62``.

    Returns
    -------
    ndarray, shape (r, k)
        Non-negative coefficients, one column per target.
    """
    gram = np.asarray(gram, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    squeeze = rhs.ndim == 1
    if squeeze:
        rhs = rhs[:, None]
    n, k = rhs.shape
    if gram.shape != (n, n):
        raise ContractError(f"gram shape {gram.shape} does not match rhs {rhs.shape}")
    if max_iter is None:
        max_iter = 10 * n + 10
    scale = max(1.0, float(np.max(np.abs(gram), initial=0.0)),
                float(np.max(np.abs(rhs), initial=0.0)))
    ytol = tol * scale

    if n > 62:
        cache = None
    x = np.zeros((n, k))
    if init is None:
        passive = np.zeros((n, k), dtype=bool)
        y = -rhs.copy()
    else:
        passive = np.array(init, dtype=bool).reshape(n, k)
        _solve_passive(gram, rhs, passive, x, cache)
        y = gram @ x - rhs
        y[passive] = 0.0
    alpha = np.full(k, 3)
    beta = np.full(k, n + 1)

    def infeasible(x, y):
        return (passive & (x < 0.0)) | (~passive & (y < -ytol))

    bad = infeasible(x, y)
    n_bad = bad.sum(axis=0)
    todo = n_bad > 0
    it = 0
    while todo.any():
        it += 1
        if it > max_iter:
            # cycling from round-off on an ill-conditioned gram
            cols = np.flatnonzero(todo)
            x[:, cols] = _lawson_hanson_gram(gram, rhs[:, cols], tol)
            passive[:, cols] = x[:, cols] > 0.0
            break
        improved = todo & (n_bad < beta)
        stalled = todo & ~improved & (alpha >= 1)
        backup = todo & ~improved & (alpha < 1)
        beta[improved] = n_bad[improved]
        alpha[improved] = 3
        alpha[stalled] -= 1
        flip = bad & (improved | stalled)[None, :]
        if backup.any():
            cols = np.flatnonzero(backup)
            rows = n - 1 - np.argmax(bad[::-1, cols], axis=0)
            flip[rows, cols] = True
        passive ^= flip

        cols = np.flatnonzero(todo)
        xs = np.empty((n, cols.size))
        _solve_passive(gram, rhs[:, cols], passive[:, cols], xs, cache)
        x[:, cols] = xs
        y[:, cols] = gram @ xs - rhs[:, cols]
        y[passive] = 0.0  # numerical noise on passive coordinates

        bad = infeasible(x, y)
        n_bad = bad.sum(axis=0)
        todo = n_bad > 0
    x = np.maximum(np.where(passive, x, 0.0), 0.0)
    return x[:, 0] if squeeze else x
