"""Sparse coding within a fixed dictionary.

Orthogonal matching pursuit is the evaluation encoder; utilities expose
the squared-l2 objective that the selectors maximize:

    u(y, x) = 0.5*||y||^2 - 0.5*||y - x||^2

so that f(Z) = u(y, A w) with w the least-squares fit on support Z.  The
0.5 scaling makes the curvature constants of u equal to restricted
squared singular values of the atom matrix; argmax decisions are
invariant to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient
from .linalg import atom_matrix, empty_factorization, factor_insert

_RESIDUAL_STOP = 1e-10


@dataclass
class SparseCode:
    """Support, coefficients on it, and the squared residual of the fit."""

    support: list[int]
    coefficients: np.ndarray
    residual_sq: float


def omp_encode(dictionary, y: np.ndarray, s: int, mask=None) -> SparseCode:
    """Greedy sparse code of ``y`` with at most ``s`` atoms of ``dictionary``.

    Each step adds the atom most correlated with the current residual and
    re-solves least squares on the support.  Stops early once the residual
    norm falls below 1e-10 (to avoid fitting floating-point noise) or no
    atom correlates with the residual.  Numerically dependent candidates
    are skipped.  An optional boolean ``mask`` restricts the inner
    products, the least squares, and the reported residual to the observed
    coordinates.
    """
    d = atom_matrix(dictionary)
    if d.ndim != 2:
        raise ValueError("dictionary must be a (d, m) array")
    if s < 0:
        raise ValueError("sparsity must be nonnegative")
    y = np.asarray(y, dtype=float)
    if mask is not None:
        obs = np.asarray(mask, dtype=bool)
        d = d[obs]
        y = y[obs]
    fact = empty_factorization(d.shape[0])
    dead: set[int] = set()
    resid = y.copy()
    while fact.m < s and fact.m + len(dead) < d.shape[1]:
        rnorm = float(np.linalg.norm(resid))
        if rnorm <= _RESIDUAL_STOP:
            break
        corr = np.abs(d.T @ resid)
        if fact.m:
            corr[list(fact.columns)] = 0.0
        if dead:
            corr[list(dead)] = 0.0
        best = int(np.argmax(corr))
        if corr[best] <= 1e-12 * max(rnorm, 1.0):
            break
        try:
            fact = factor_insert(fact, d, best)
        except RankDeficient:
            dead.add(best)
            continue
        resid = fact.residual(y)
    return SparseCode(
        support=list(fact.columns),
        coefficients=fact.solve(y),
        residual_sq=float(resid @ resid),
    )


def utility(y: np.ndarray, w: np.ndarray, ground_set) -> float:
    """0.5*||y||^2 - 0.5*||y - A w||^2 for a full-length coefficient vector."""
    a = atom_matrix(ground_set)
    y = np.asarray(y, dtype=float)
    diff = y - a @ np.asarray(w, dtype=float)
    return 0.5 * float(y @ y) - 0.5 * float(diff @ diff)


def utility_gradient(y: np.ndarray, w: np.ndarray, ground_set) -> np.ndarray:
    """Gradient A^T (y - A w) of the utility at coefficients ``w``.

    At a least-squares solution the entries on the solved support vanish.
    """
    a = atom_matrix(ground_set)
    return a.T @ (np.asarray(y, dtype=float) - a @ np.asarray(w, dtype=float))
