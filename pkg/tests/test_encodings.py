import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tpbs.encodings import (apply_perm, dec2, dec3, dec_ext, enc2, enc3, ext, ext_mix, idec,
                            invert_perm, perm2, perm3, perm6, perm_mix, vdec, vrec)

BITS = (0, 1)
TRITS = (-1, 0, 1)


def c3(x):
    return (x + 1) % 3 - 1


def test_idec_examples():
    assert idec(5, 7).tolist() == [1, 0, 1]
    assert idec(0, 7).tolist() == [0, 0, 0]
    assert idec(7, 7).tolist() == [1, 1, 1]
    with pytest.raises(ValueError):
        idec(8, 7)


def test_vdec_examples():
    assert vdec(np.array([-5, 3]), 7).tolist() == [-1, 0, -1, 0, 1, 1]
    assert not vdec(np.zeros(4, dtype=np.int64), 7).any()
    grid = np.array(list(itertools.product(range(-7, 8), repeat=2)))
    assert np.array_equal(vrec(vdec(grid, 7), 7), grid)


def test_enc_examples():
    assert enc2(np.array([0])).tolist() == [1, 0]
    assert enc2(np.array([1, 0])).tolist() == [0, 1, 1, 0]
    assert enc3(np.array([0])).tolist() == [1, 0, -1]
    assert enc3(np.array([1])).tolist() == [-1, 1, 0]
    assert ext(1, 0).tolist() == [0, 1, 0, 0, 0, -1]
    assert ext(0, 1).tolist() == [-1, 0, 1, 0, 0, 0]
    assert ext(0, 0).tolist() == [1, 0, 0, 0, -1, 0]


@given(st.lists(st.integers(0, 1), max_size=30))
def test_enc2_pairs_sum_to_one(z):
    v = enc2(np.array(z, dtype=np.int8)).reshape(-1, 2)
    assert np.all(v.sum(axis=1) == 1)
    assert dec2(v.reshape(-1)).tolist() == z


@given(st.lists(st.integers(-1, 1), max_size=30))
def test_enc3_middle_is_value(z):
    v = enc3(np.array(z)).reshape(-1, 3)
    assert v[:, 1].tolist() == z
    assert dec3(v.reshape(-1)).tolist() == z


def test_phi_examples():
    v = enc2(np.array([0]))
    assert apply_perm(perm2(np.array([0])), v).tolist() == v.tolist()
    assert apply_perm(perm2(np.array([1])), v).tolist() == [0, 1]
    for b in itertools.product(BITS, repeat=3):
        idx = perm2(np.array(b))
        assert np.array_equal(idx[idx], np.arange(6))  # involution


def test_equivalence_bits_exhaustive():
    # v = enc2(z)  <=>  phi_b(v) = enc2(z xor b)
    for k in (1, 2):
        for z in itertools.product(BITS, repeat=k):
            for b in itertools.product(BITS, repeat=k):
                got = apply_perm(perm2(np.array(b)), enc2(np.array(z)))
                assert got.tolist() == enc2(np.array(z) ^ np.array(b)).tolist()


def test_equivalence_trits_exhaustive():
    for z, b in itertools.product(TRITS, repeat=2):
        got = apply_perm(perm3(np.array([b])), enc3(np.array([z])))
        assert got.tolist() == enc3(np.array([c3(z + b)])).tolist()


def test_equivalence_ext_exhaustive():
    cases = 0
    for t, z, b, e in itertools.product(BITS, TRITS, BITS, TRITS):
        got = apply_perm(perm6(b, e), ext(t, z))
        assert got.tolist() == ext(t ^ b, c3(z + e)).tolist()
        cases += 1
    assert cases == 36


def test_equivalence_mix_exhaustive_composed_blocks():
    for t in itertools.product(BITS, repeat=2):
        for z in itertools.product(TRITS, repeat=2):
            v = ext_mix(np.array(t), np.array(z))
            for b in itertools.product(BITS, repeat=2):
                for e in itertools.product(TRITS, repeat=2):
                    want = ext_mix(np.array(t) ^ np.array(b), c3(np.array(z) + np.array(e)))
                    assert np.array_equal(apply_perm(perm_mix(np.array(b), np.array(e)), v), want)


def test_mix_permutation_factors_into_blocks():
    b, e = np.array([1, 0]), np.array([-1, 1])
    idx = perm_mix(b, e).reshape(2, 2, 6)
    for i in range(2):
        for k in range(2):
            assert np.array_equal(idx[i, k] - 6 * (2 * i + k), perm6(int(b[i]), int(e[k])))


def test_invalid_encodings_rejected_everywhere():
    assert dec2(np.array([1, 1])) is None
    assert dec3(np.array([1, 1, 0])) is None
    v = ext_mix(np.array([1, 0]), np.array([0, 1])).astype(np.int64)
    assert dec_ext(v, 2, 2)[0].tolist() == [1, 0]
    v[3] = -v[3] if v[3] else 1
    assert dec_ext(v, 2, 2) is None


@given(st.lists(st.integers(0, 1), min_size=1, max_size=8),
       st.lists(st.integers(-1, 1), min_size=1, max_size=8))
def test_permutations_are_bijections(b, e):
    for idx in (perm2(np.array(b)), perm3(np.array(e)), perm_mix(np.array(b), np.array(e))):
        assert sorted(idx.tolist()) == list(range(idx.size))
        inv = invert_perm(idx)
        assert np.array_equal(idx[inv], np.arange(idx.size))


@given(st.integers(2, 64), st.lists(st.integers(-64, 64), min_size=1, max_size=5))
def test_vdec_is_a_signed_digit_expansion(B, a):
    a = np.clip(np.array(a), -B, B)
    y = vdec(a, B)
    assert set(np.unique(y).tolist()) <= {-1, 0, 1}
    assert np.array_equal(vrec(y, B), a)
