"""Dense linear-algebra kernels for support-restricted least squares.

Selectors keep one thin orthogonal factorization per data point so that
adding or removing a single atom from a support costs O(d*m) instead of a
full refactorization.  The module also provides the ground-set
conditioning measures used to set smoothness parameters: coherence and
restricted extremal singular values.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import InvalidGroundSet, RankDeficient, TooLarge

# Columns whose projection residual falls below this norm are treated as
# linearly dependent and rejected.
RANK_TOL = 1e-10

_ENUMERATION_GUARD = 10**6


def atom_matrix(ground_set) -> np.ndarray:
    """Return the (d, n) atom matrix behind a GroundSet or a plain array."""
    mat = getattr(ground_set, "matrix", ground_set)
    return np.asarray(mat, dtype=float)


@dataclass
class SupportFactorization:
    """Thin QR factorization of the atom columns listed in ``columns``.

    ``q`` is (d, m) with orthonormal columns and ``q @ r`` reconstructs the
    support submatrix in ``columns`` order.  Instances are values: the
    update functions below return new factorizations and never mutate
    their input, so independent copies may be used from parallel workers.
    """

    columns: tuple[int, ...]
    q: np.ndarray
    r: np.ndarray

    @property
    def m(self) -> int:
        return len(self.columns)

    def solve(self, y: np.ndarray) -> np.ndarray:
        """Least-squares coefficients on the support, in ``columns`` order."""
        if self.m == 0:
            return np.zeros(0)
        return solve_triangular(self.r, self.q.T @ y, lower=False)

    def residual(self, y: np.ndarray) -> np.ndarray:
        """Residual of the least-squares fit of ``y`` on the support."""
        if self.m == 0:
            return np.asarray(y, dtype=float).copy()
        return y - self.q @ (self.q.T @ y)


def empty_factorization(d: int) -> SupportFactorization:
    return SupportFactorization((), np.zeros((d, 0)), np.zeros((0, 0)))


def factor_insert(state: SupportFactorization, ground_set, atom_index: int) -> SupportFactorization:
    """Append one atom column to the factorization.

    Raises RankDeficient when the new column is numerically dependent on
    the current support (projection residual norm below RANK_TOL).
    """
    a = atom_matrix(ground_set)[:, atom_index]
    if atom_index in state.columns:
        raise ValueError(f"atom {atom_index} already in support")
    v = state.q.T @ a
    u = a - state.q @ v
    # One reorthogonalization pass keeps Q orthonormal over long update chains.
    if state.m:
        w = state.q.T @ u
        u = u - state.q @ w
        v = v + w
    rho = float(np.linalg.norm(u))
    if rho < RANK_TOL:
        raise RankDeficient(f"atom {atom_index} is dependent on the current support")
    m = state.m
    q = np.empty((state.q.shape[0], m + 1))
    q[:, :m] = state.q
    q[:, m] = u / rho
    r = np.zeros((m + 1, m + 1))
    r[:m, :m] = state.r
    r[:m, m] = v
    r[m, m] = rho
    return SupportFactorization(state.columns + (atom_index,), q, r)


def factor_remove(state: SupportFactorization, position: int) -> SupportFactorization:
    """Delete the atom at ``position`` and retriangularize with Givens rotations."""
    m = state.m
    if not 0 <= position < m:
        raise IndexError(f"position {position} out of range for support of size {m}")
    cols = state.columns[:position] + state.columns[position + 1 :]
    q = state.q.copy()
    r = np.delete(state.r, position, axis=1)
    # Deleting a column leaves a subdiagonal in rows position..m-2; rotate
    # it away pairwise, accumulating the transposed rotations into q.
    for i in range(position, m - 1):
        a, b = r[i, i], r[i + 1, i]
        rad = math.hypot(a, b)
        if rad == 0.0:
            c, s = 1.0, 0.0
        else:
            c, s = a / rad, b / rad
        rot = np.array([[c, s], [-s, c]])
        r[i : i + 2, i:] = rot @ r[i : i + 2, i:]
        q[:, i : i + 2] = q[:, i : i + 2] @ rot.T
    return SupportFactorization(
        cols,
        np.ascontiguousarray(q[:, : m - 1]),
        np.ascontiguousarray(r[: m - 1, :]),
    )


def ls_solve(ground_set, support, y: np.ndarray) -> np.ndarray:
    """Least-squares coefficients of ``y`` on a support, as a full n-vector.

    Entries outside the support are zero.  Raises RankDeficient when the
    support columns are numerically dependent.
    """
    a = atom_matrix(ground_set)
    y = np.asarray(y, dtype=float)
    fact = empty_factorization(a.shape[0])
    for idx in support:
        fact = factor_insert(fact, a, int(idx))
    w = np.zeros(a.shape[1])
    if fact.m:
        w[list(fact.columns)] = fact.solve(y)
    return w


def coherence(ground_set) -> float:
    """Maximum absolute inner product between distinct atoms, in [0, 1].

    Requires unit-norm columns (to 1e-8); the value is cached on GroundSet
    instances.
    """
    cached = getattr(ground_set, "mu_cache", None)
    if cached is not None:
        return cached
    a = atom_matrix(ground_set)
    norms = np.linalg.norm(a, axis=0)
    if np.any(np.abs(norms - 1.0) > 1e-8):
        worst = int(np.argmax(np.abs(norms - 1.0)))
        raise InvalidGroundSet(f"column {worst} has norm {norms[worst]:.12g}, expected 1")
    if a.shape[1] < 2:
        mu = 0.0
    else:
        gram = a.T @ a
        np.fill_diagonal(gram, 0.0)
        # Clip the tiny floating-point overshoot duplicates can produce.
        mu = min(float(np.abs(gram).max()), 1.0)
    if hasattr(ground_set, "mu_cache"):
        ground_set.mu_cache = mu
    return mu


@dataclass
class RestrictedSpectrum:
    """Extremal squared singular values over supports of a fixed size.

    ``exact`` records whether the values came from subset enumeration or
    from the closed-form fast path available for sizes 1 and 2.
    """

    size: int
    sigma_max_sq: float
    sigma_min_sq: float
    exact: bool


def restricted_spectrum(ground_set, size: int, exact: bool | None = None) -> RestrictedSpectrum:
    """Largest and smallest squared singular values over all supports of ``size`` atoms.

    With ``exact=None`` sizes 1 and 2 use the closed form (size 2 equals
    1 +/- coherence, the eigenvalues of the worst 2x2 unit-diagonal Gram
    matrix) and larger sizes enumerate subsets.  Enumeration refuses to
    touch more than 10**6 subsets and raises TooLarge instead.
    """
    a = atom_matrix(ground_set)
    n = a.shape[1]
    if size < 1:
        raise ValueError("size must be at least 1")
    if exact is None:
        exact = size > 2
    if not exact:
        if size == 1:
            norms_sq = np.sum(a * a, axis=0)
            return RestrictedSpectrum(1, float(norms_sq.max()), float(norms_sq.min()), False)
        if size == 2:
            mu = coherence(ground_set)
            return RestrictedSpectrum(2, 1.0 + mu, 1.0 - mu, False)
        raise TooLarge(f"no fast path for size {size}; request exact enumeration")
    k = min(size, n)
    if math.comb(n, k) > _ENUMERATION_GUARD:
        raise TooLarge(f"C({n}, {k}) subsets exceed the enumeration guard")
    d = a.shape[0]
    hi = 0.0
    lo = math.inf
    for combo in itertools.combinations(range(n), k):
        svals = np.linalg.svd(a[:, combo], compute_uv=False)
        hi = max(hi, float(svals[0]))
        # A d x k submatrix with k > d always has a zero singular value.
        lo = min(lo, 0.0 if k > d else float(svals[-1]))
    return RestrictedSpectrum(size, hi * hi, lo * lo, True)
