import numpy as np
import pytest

from dictsel import (
    assemble,
    coherence,
    dct2_basis,
    empty_factorization,
    factor_insert,
    factor_remove,
    haar2_basis,
    ls_solve,
    restricted_spectrum,
)
from dictsel.errors import InvalidGroundSet, RankDeficient, TooLarge

from conftest import random_unit_atoms
from oracles import lstsq_fit


def factorization_defects(fact, atoms):
    qtq = np.abs(fact.q.T @ fact.q - np.eye(fact.m)).max() if fact.m else 0.0
    recon = np.abs(fact.q @ fact.r - atoms[:, list(fact.columns)]).max() if fact.m else 0.0
    return qtq, recon


def test_ls_solve_empty_support():
    a = random_unit_atoms(np.random.default_rng(0), 6, 4)
    y = np.random.default_rng(1).standard_normal(6)
    assert np.array_equal(ls_solve(a, [], y), np.zeros(4))


def test_ls_solve_orthonormal_pair():
    a = dct2_basis(4)
    y = np.random.default_rng(2).standard_normal(16)
    w = ls_solve(a, [3, 7], y)
    assert w[3] == pytest.approx(a[:, 3] @ y, abs=1e-12)
    assert w[7] == pytest.approx(a[:, 7] @ y, abs=1e-12)
    assert np.count_nonzero(w) == 2


def test_ls_solve_matches_normal_equations():
    rng = np.random.default_rng(3)
    a = random_unit_atoms(rng, 8, 3)
    y = rng.standard_normal(8)
    w = ls_solve(a, [0, 1, 2], y)
    w_ref = np.linalg.solve(a.T @ a, a.T @ y)
    assert np.abs(w[:3] - w_ref).max() < 1e-8


def test_ls_solve_rank_deficient():
    a = np.zeros((4, 2))
    a[:, 0] = [1, 0, 0, 0]
    a[:, 1] = [1, 0, 0, 0]
    with pytest.raises(RankDeficient):
        ls_solve(a, [0, 1], np.ones(4))


def test_insert_into_empty():
    rng = np.random.default_rng(4)
    a = random_unit_atoms(rng, 5, 3)
    fact = factor_insert(empty_factorization(5), a, 1)
    assert fact.columns == (1,)
    assert np.allclose(fact.q[:, 0], a[:, 1], atol=1e-12)
    assert fact.r[0, 0] == pytest.approx(1.0, abs=1e-12)


def test_insert_then_remove_is_identity():
    rng = np.random.default_rng(5)
    a = random_unit_atoms(rng, 10, 6)
    y = rng.standard_normal(10)
    fact = empty_factorization(10)
    for idx in (0, 2, 4):
        fact = factor_insert(fact, a, idx)
    before = fact.solve(y)
    fact2 = factor_remove(factor_insert(fact, a, 5), 3)
    assert fact2.columns == fact.columns
    assert np.abs(fact2.solve(y) - before).max() < 1e-10


def test_insert_duplicate_raises():
    a = random_unit_atoms(np.random.default_rng(6), 5, 3)
    fact = factor_insert(empty_factorization(5), a, 0)
    with pytest.raises(ValueError):
        factor_insert(fact, a, 0)


def test_random_walk_matches_refactorization():
    rng = np.random.default_rng(7)
    a = random_unit_atoms(rng, 16, 24)
    y = rng.standard_normal(16)
    fact = empty_factorization(16)
    for _ in range(20):
        if fact.m and (fact.m >= 12 or rng.random() < 0.4):
            fact = factor_remove(fact, int(rng.integers(fact.m)))
        else:
            absent = [j for j in range(24) if j not in fact.columns]
            fact = factor_insert(fact, a, int(rng.choice(absent)))
        qtq, recon = factorization_defects(fact, a)
        assert qtq <= 1e-10
        assert recon <= 1e-9 * max(np.abs(a).max(), 1.0)
        w_ref, _ = lstsq_fit(a, fact.columns, y)
        w = np.zeros(24)
        if fact.m:
            w[list(fact.columns)] = fact.solve(y)
        assert np.abs(w - w_ref).max() < 1e-8


def test_residual_orthogonal_to_support():
    rng = np.random.default_rng(8)
    a = random_unit_atoms(rng, 12, 20)
    y = rng.standard_normal(12)
    support = [1, 5, 9, 13]
    w = ls_solve(a, support, y)
    resid = y - a @ w
    for j in support:
        assert abs(a[:, j] @ resid) <= 1e-8 * np.linalg.norm(y)


def test_coherence_orthonormal_basis():
    assert coherence(dct2_basis(4)) == pytest.approx(0.0, abs=1e-12)


def test_coherence_duplicate_column():
    a = random_unit_atoms(np.random.default_rng(9), 6, 3)
    a = np.column_stack([a, a[:, 0]])
    assert coherence(a) == pytest.approx(1.0, abs=1e-12)


def test_coherence_matches_pairwise_scan():
    gs = assemble([("dct2", dct2_basis(8)), ("haar2", haar2_basis(8))])
    mu = coherence(gs)
    a = gs.matrix
    scan = max(
        abs(float(a[:, i] @ a[:, j]))
        for i in range(gs.n)
        for j in range(i + 1, gs.n)
    )
    assert mu == pytest.approx(min(scan, 1.0), abs=1e-12)
    assert gs.mu_cache == mu


def test_coherence_validates_norms():
    a = np.eye(4)
    a = a * 1.5
    with pytest.raises(InvalidGroundSet):
        coherence(a)


def test_coherence_invariances():
    rng = np.random.default_rng(10)
    a = random_unit_atoms(rng, 9, 7)
    mu = coherence(a)
    perm = rng.permutation(7)
    signs = rng.choice([-1.0, 1.0], size=7)
    assert coherence(a[:, perm] * signs) == pytest.approx(mu, abs=1e-12)


def test_restricted_spectrum_orthonormal():
    sp = restricted_spectrum(dct2_basis(4), 2)
    assert sp.sigma_max_sq == pytest.approx(1.0, abs=1e-12)
    assert sp.sigma_min_sq == pytest.approx(1.0, abs=1e-12)


def test_restricted_spectrum_known_pair():
    # Two unit atoms with inner product 0.5: Gram eigenvalues 1 +/- 0.5.
    a = np.array([[1.0, 0.5], [0.0, np.sqrt(0.75)]])
    sp = restricted_spectrum(a, 2)
    assert sp.sigma_max_sq == pytest.approx(1.5, abs=1e-12)
    assert sp.sigma_min_sq == pytest.approx(0.5, abs=1e-12)


def test_restricted_spectrum_exact_matches_subset_svd():
    rng = np.random.default_rng(11)
    a = random_unit_atoms(rng, 8, 12)
    sp = restricted_spectrum(a, 3)
    assert sp.exact
    import itertools

    hi = max(
        np.linalg.svd(a[:, list(c)], compute_uv=False)[0] ** 2
        for c in itertools.combinations(range(12), 3)
    )
    lo = min(
        np.linalg.svd(a[:, list(c)], compute_uv=False)[-1] ** 2
        for c in itertools.combinations(range(12), 3)
    )
    assert sp.sigma_max_sq == pytest.approx(hi, rel=1e-12)
    assert sp.sigma_min_sq == pytest.approx(lo, rel=1e-12)


def test_restricted_spectrum_fast_path_equals_enumeration():
    rng = np.random.default_rng(12)
    for _ in range(5):
        a = random_unit_atoms(rng, 6, 9)
        fast = restricted_spectrum(a, 2)
        slow = restricted_spectrum(a, 2, exact=True)
        assert not fast.exact and slow.exact
        assert abs(fast.sigma_max_sq - slow.sigma_max_sq) <= 1e-10
        assert abs(fast.sigma_min_sq - slow.sigma_min_sq) <= 1e-10


def test_restricted_spectrum_guard():
    a = random_unit_atoms(np.random.default_rng(13), 8, 64)
    with pytest.raises(TooLarge):
        restricted_spectrum(a, 6)
    with pytest.raises(TooLarge):
        restricted_spectrum(a, 6, exact=False)
