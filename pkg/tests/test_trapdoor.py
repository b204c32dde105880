import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from tpbs.core import get_preset, make_rng, mat_mul_mod
from tpbs.sigcrypt import signing_width
from tpbs.trapdoor import (WidthError, ext_basis, gram_schmidt, gram_schmidt_exact,
                           gs_sqnorms_exact, make_basis, sample_d, smoothing_factor, trap_gen)

SEED = b"trapdoor".ljust(32, b"\0")


def exact_sq(rows):
    return [sum(x * x for x in r) for r in rows]


def test_gram_schmidt_examples():
    # columns are basis vectors
    assert gram_schmidt_exact(np.eye(3, dtype=np.int64)) == [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    rows = gram_schmidt_exact(np.array([[2, 1], [0, 1]]))  # vectors (2,0) and (1,1)
    assert rows == [[2, 0], [0, 1]]
    P = np.array([[0, 3, 0], [0, 0, -2], [5, 0, 0]])
    assert gram_schmidt_exact(P) == [[0, 0, 5], [3, 0, 0], [0, -2, 0]]


def test_float_gram_schmidt_matches_exact(rng):
    S = rng.integers(-4, 5, size=(8, 8))
    while round(abs(np.linalg.det(S))) == 0:
        S = rng.integers(-4, 5, size=(8, 8))
    rows, sq = gram_schmidt(S)
    ex = gram_schmidt_exact(S)
    assert np.allclose(rows, np.array([[float(x) for x in r] for r in ex]), rtol=1e-9, atol=1e-9)
    assert [Fraction(x) for x in exact_sq(ex)] == gs_sqnorms_exact(S)
    assert np.allclose(rows[0], S[:, 0], rtol=1e-9)
    G = rows @ rows.T
    off = G - np.diag(np.diag(G))
    assert np.abs(off).max() <= 1e-9 * np.abs(np.diag(G)).max()


@pytest.fixture(scope="module")
def toy_traps():
    p = get_preset("toy")
    return [trap_gen(p.n, p.m, p.q, make_rng(SEED, f"gen{i}")) for i in range(100)]


def test_trap_gen_kernel_and_quality(toy_traps):
    p = get_preset("toy")
    measured_scale = 20 * math.sqrt(p.n * math.log2(p.q))
    for td in toy_traps:
        assert not mat_mul_mod(td.A, td.S, p.q).any()
        assert td.basis.gs_norm <= td.quality_bound <= measured_scale


def test_trap_gen_basis_is_full_rank(toy_traps):
    for td in toy_traps[:3]:
        assert all(x > 0 for x in gs_sqnorms_exact(td.S))


def test_trap_gen_matrix_looks_uniform():
    p = get_preset("compact")
    entries = np.concatenate([trap_gen(p.n, p.m, p.q, make_rng(SEED, f"u{i}")).A.ravel()
                              for i in range(35)])
    assert entries.size >= 100_000
    counts = np.bincount((entries * 20 // p.q).astype(np.int64), minlength=20)
    assert stats.chisquare(counts).pvalue > 0.001


def test_trap_gen_requires_wide_matrix():
    with pytest.raises(ValueError):
        trap_gen(4, 40, 257, make_rng(SEED))


@pytest.fixture(scope="module")
def small():
    # 2 x 20 over Z_17: small enough for exact rational checks
    return trap_gen(2, 20, 17, make_rng(SEED, "small")).basis


def test_ext_basis_identity_extension(small):
    same = ext_basis(small, small.A)
    assert np.array_equal(same.S, small.S)


def test_ext_basis_preserves_gram_schmidt_exactly(small):
    rng = make_rng(SEED, "ext")
    plus = rng.integers(0, 17, size=(2, 10))
    ext = ext_basis(small, np.concatenate([small.A, plus], axis=1))
    assert not mat_mul_mod(ext.A, ext.S, 17).any()
    assert max(gs_sqnorms_exact(ext.S)) == max(gs_sqnorms_exact(small.S))
    assert ext.gs_norm == small.gs_norm


def test_ext_basis_composes(small):
    rng = make_rng(SEED, "compose")
    X, Y = rng.integers(0, 17, size=(2, 6)), rng.integers(0, 17, size=(2, 4))
    once = ext_basis(small, np.concatenate([small.A, X], axis=1))
    twice = ext_basis(once, np.concatenate([small.A, X, Y], axis=1))
    assert not mat_mul_mod(twice.A, twice.S, 17).any()
    assert max(gs_sqnorms_exact(twice.S)) == max(gs_sqnorms_exact(small.S))


def test_ext_basis_rejects_foreign_prefix(small):
    other = np.mod(small.A + 1, 17)
    with pytest.raises(ValueError):
        ext_basis(small, np.concatenate([other, other], axis=1))


def test_sample_d_membership_and_norm(toy_traps):
    p = get_preset("toy")
    basis = toy_traps[0].basis
    s = signing_width(basis.gs_norm, p.m)
    rng = make_rng(SEED, "coset")
    bound = math.ceil(s * math.log2(p.n))
    small = 0
    for _ in range(300):
        y = rng.integers(-3, 4, size=p.m)
        u = mat_mul_mod(basis.A, y, p.q)
        x = sample_d(basis, u, s, rng)
        assert np.array_equal(mat_mul_mod(basis.A, x, p.q), u)
        small += np.abs(x).max() <= bound
    assert small / 300 >= 0.99
    zero = sample_d(basis, np.zeros(p.n, dtype=np.int64), s, rng)
    assert not mat_mul_mod(basis.A, zero, p.q).any()


def test_sample_d_is_centered(toy_traps):
    p = get_preset("toy")
    basis = toy_traps[1].basis
    s = signing_width(basis.gs_norm, p.m)
    rng = make_rng(SEED, "bias")
    xs = np.stack([sample_d(basis, np.zeros(p.n, dtype=np.int64), s, rng) for _ in range(10_000)])
    assert np.abs(xs.mean(axis=0) / s).max() < 0.1
    pos, neg = (xs > 0).mean(axis=0), (xs < 0).mean(axis=0)
    assert np.abs(pos - neg).max() < 0.05


def test_sample_d_refuses_narrow_width(toy_traps):
    basis = toy_traps[2].basis
    too_small = 0.9 * basis.gs_norm * smoothing_factor(basis.dim)
    with pytest.raises(WidthError):
        sample_d(basis, np.zeros(basis.A.shape[0], dtype=np.int64), too_small, make_rng(SEED))


def test_make_basis_from_explicit_kernel():
    q = 7
    A = np.array([[1, 2, 3]])
    # columns span {x : x1 + 2 x2 + 3 x3 = 0 mod 7}
    S = np.array([[-2, -3, 7], [1, 0, 0], [0, 1, 0]])
    basis = make_basis(A, S, q)
    assert not mat_mul_mod(A, S, q).any()
    x = basis.preimage(np.array([5]))
    assert mat_mul_mod(A, x, q).tolist() == [5]
