import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tpbs.core import (PRESETS, DimensionError, ParameterError, Params, bits_to_hex,
                       embed_with_zero_columns, gadget_matrix, gadget_weights, get_preset,
                       hex_to_bits, horiz_concat, is_prime, make_rng, mat_mul_mod, mat_vec_mul,
                       parse_seed, rank_mod, row_reduce_solve, vert_concat)
from tpbs.encodings import vdec


def _big_int_matmul(M, x, q):
    # arbitrary-precision reference
    return [sum(int(a) * int(b) for a, b in zip(row, x)) % q for row in M.tolist()]


def test_mat_vec_mul_examples():
    x = np.array([3, 5, 7])
    assert mat_vec_mul(np.eye(3, dtype=np.int64), x, 17).tolist() == [3, 5, 7]
    assert mat_vec_mul(np.array([[4, 2, 1]]), np.array([1, 0, 1]), 17).tolist() == [5]
    assert not mat_vec_mul(np.zeros((2, 3), dtype=np.int64), x, 17).any()


def test_mat_vec_mul_rejects_mismatch():
    with pytest.raises((DimensionError, ValueError)):
        mat_vec_mul(np.zeros((2, 3), dtype=np.int64), np.zeros(4, dtype=np.int64), 17)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 2**40), st.integers(1, 6), st.integers(1, 40), st.integers(0, 2**32))
def test_mat_mul_mod_matches_big_integers(q, rows, cols, seed):
    rng = np.random.default_rng(seed)
    M = rng.integers(0, q, size=(rows, cols), dtype=np.int64)
    x = rng.integers(-q, q, size=cols, dtype=np.int64)
    assert mat_mul_mod(M, x, q).tolist() == _big_int_matmul(M, x, q)


def test_gadget_matrix_examples():
    assert gadget_matrix(1, 7).tolist() == [[4, 2, 1]]
    assert gadget_matrix(1, 2).tolist() == [[1, 1]]
    assert gadget_matrix(2, 7).tolist() == [[4, 2, 1, 0, 0, 0], [0, 0, 0, 4, 2, 1]]
    with pytest.raises(ValueError):
        gadget_matrix(1, 1)


@given(st.integers(2, 4096))
def test_gadget_weights_sum_to_bound(B):
    w = gadget_weights(B)
    assert w.sum() == B
    assert w.size == B.bit_length()  # floor(log2 B) + 1


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 300), st.lists(st.integers(-300, 300), min_size=1, max_size=6))
def test_gadget_inverts_decomposition(B, coords):
    a = np.clip(np.array(coords), -B, B)
    assert (gadget_matrix(a.size, B) @ vdec(a, B)).tolist() == a.tolist()


def test_concat_and_embed():
    A = np.arange(6).reshape(2, 3)
    assert np.array_equal(horiz_concat(A, np.zeros((2, 0), dtype=np.int64)), A)
    assert np.array_equal(vert_concat(A, np.zeros((0, 3), dtype=np.int64)), A)
    assert embed_with_zero_columns(np.array([[9]]), 4, np.array([2])).tolist() == [[0, 0, 9, 0]]
    with pytest.raises((DimensionError, ValueError)):
        horiz_concat(A, np.zeros((3, 1), dtype=np.int64))


def test_embedding_preserves_products(rng):
    q = 97
    M_hat = rng.integers(0, q, size=(3, 4))
    w_hat = rng.integers(-1, 2, size=4)
    positions = np.array([1, 4, 5, 8])
    M = embed_with_zero_columns(M_hat, 10, positions)
    w = rng.integers(-1, 2, size=10)
    w[positions] = w_hat
    assert np.array_equal(mat_vec_mul(M_hat, w_hat, q), mat_vec_mul(M, w, q))


def test_is_prime_against_trial_division():
    def slow(n):
        return n >= 2 and all(n % d for d in range(2, int(n ** 0.5) + 1))
    assert all(is_prime(n) == slow(n) for n in range(3000))
    assert is_prime(33554393) and is_prime(8388593) and not is_prime(33554393 * 3)


def test_params_validation():
    base = get_preset("toy")
    for bad in ({"q": 256}, {"m": 10}, {"d": 1, "l2": 1}, {"kappa": 0}, {"B": 1},
                {"ck_seed": b"short"}):
        with pytest.raises(ParameterError):
            Params(**{**base.__dict__, **bad})


def test_derived_lengths():
    p = get_preset("toy").with_widths(10.0, 10.0)
    assert p.l == p.l1 + p.l2
    assert p.beta == int(np.ceil(10.0 * np.log2(p.n)))
    assert p.delta_beta == p.beta.bit_length()
    assert p.delta_B == int(np.floor(np.log2(p.B))) + 1


def test_open_bound_check_raises_or_warns():
    strict = Params(**{**get_preset("toy").__dict__, "enforce_open_bound": True}).with_widths(30.0, 30.0)
    with pytest.raises(ParameterError, match=r"ceil\(q/5\)"):
        strict.check_open_bound()
    with pytest.warns(UserWarning, match="mis-decrypt"):
        get_preset("toy").with_widths(30.0, 30.0).check_open_bound()


def test_presets_meet_static_constraints():
    for p in PRESETS.values():
        assert is_prime(p.q) and p.l2 + p.d > p.n and p.m >= 2 * p.n * (p.q - 1).bit_length()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 8), st.integers(1, 10), st.sampled_from([2, 3, 257]))
def test_row_reduce_solve_finds_solutions(seed, rows, cols, q):
    rng = np.random.default_rng(seed)
    M = rng.integers(0, q, size=(rows, cols))
    x0 = rng.integers(0, q, size=cols)
    u = mat_vec_mul(M, x0, q)
    x, piv = row_reduce_solve(M, u, q)
    assert np.array_equal(mat_vec_mul(M, x, q), u)
    assert piv.size == rank_mod(M, q)


def test_rank_against_brute_force_mod_2():
    # rank = log2 of the image size over GF(2)
    rng = np.random.default_rng(5)
    for _ in range(20):
        M = rng.integers(0, 2, size=(3, 4))
        image = {tuple(np.mod(M @ np.array(x), 2)) for x in itertools.product((0, 1), repeat=4)}
        assert 2 ** rank_mod(M, 2) == len(image)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=40))
def test_hex_bits_roundtrip(bits):
    assert hex_to_bits(bits_to_hex(bits), len(bits)).tolist() == bits


def test_hex_to_bits_is_msb_first():
    assert hex_to_bits("a", 4).tolist() == [1, 0, 1, 0]
    assert hex_to_bits("8", 2).tolist() == [1, 0]
    with pytest.raises(ValueError):
        hex_to_bits("1", 2)  # a set bit beyond the requested length
    with pytest.raises(ValueError):
        hex_to_bits("zz", 4)


def test_seed_parsing_and_rng_determinism():
    seed = parse_seed("ab" * 32)
    assert make_rng(seed, "x").integers(0, 2**62) == make_rng(seed, "x").integers(0, 2**62)
    assert make_rng(seed, "x").integers(0, 2**62) != make_rng(seed, "y").integers(0, 2**62)
    with pytest.raises(ValueError):
        parse_seed("ab")
