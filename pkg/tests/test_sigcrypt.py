import hashlib
import math

import numpy as np
import pytest
from scipy import stats

from tpbs.core import DimensionError, make_rng, mat_mul_mod
from tpbs.sigcrypt import (Ciphertext, boyen_message_matrix, boyen_sign, boyen_verify,
                           commitment_key, gpv_encrypt, h1, h2, ibe_decrypt, ibe_extract,
                           ots_keygen, ots_sign, ots_verify, round_to_bits)
from tpbs.trapdoor import ext_basis

SEED = b"sigcrypt".ljust(32, b"\0")


def reference_h2(data: bytes, kappa: int) -> list[int]:
    stream = hashlib.shake_256(b"TPBS-H2" + data).digest(64 * kappa + 64)
    return [b % 3 + 1 for b in stream if b < 252][:kappa]


def reference_h1(ovk: bytes, n: int, l1: int, q: int) -> np.ndarray:
    width = (q - 1).bit_length()
    nbytes = (width + 7) // 8
    out = []
    stream = hashlib.shake_256(b"TPBS-H1" + ovk).digest(nbytes * (4 * n * l1 + 64))
    for i in range(0, len(stream), nbytes):
        v = int.from_bytes(stream[i:i + nbytes], "little") & ((1 << width) - 1)
        if v < q:
            out.append(v)
    return np.array(out[:n * l1]).reshape(n, l1)


# ------------------------------------------------------------------ Boyen

def test_message_matrix_examples(toy):
    pp = toy[0]
    key, q, l = pp.boyen_key, pp.params.q, pp.params.l
    zero = boyen_message_matrix(key, np.zeros(l, dtype=np.int64))
    assert np.array_equal(zero, np.concatenate([pp.A, pp.A_msg[0]], axis=1))
    e1 = np.eye(l, dtype=np.int64)[0]
    assert np.array_equal(boyen_message_matrix(key, e1)[:, pp.params.m:],
                          np.mod(pp.A_msg[0] + pp.A_msg[1], q))
    ones = boyen_message_matrix(key, np.ones(l, dtype=np.int64))
    assert np.array_equal(ones[:, pp.params.m:], np.mod(sum(pp.A_msg), q))
    with pytest.raises(DimensionError):
        boyen_message_matrix(key, np.zeros(l + 1, dtype=np.int64))


def test_boyen_sign_verify(toy):
    pp, msk = toy[0], toy[1]
    p = pp.params
    rng = make_rng(SEED, "boyen")
    msg = rng.integers(0, 2, p.l)
    v1 = boyen_sign(pp.boyen_key, msk.basis, msg, p.s, p.beta, rng)
    v2 = boyen_sign(pp.boyen_key, msk.basis, msg, p.s, p.beta, rng)
    assert boyen_verify(pp.boyen_key, msg, v1, p.beta)
    assert not np.array_equal(v1, v2)
    bumped = v1.copy()
    bumped[0] = p.beta + 1
    assert not boyen_verify(pp.boyen_key, msg, bumped, p.beta)
    assert not boyen_verify(pp.boyen_key, 1 - msg, v1, p.beta)


def test_boyen_accepts_any_short_coset_member(toy):
    pp, msk = toy[0], toy[1]
    p = pp.params
    rng = make_rng(SEED, "coset")
    msg = rng.integers(0, 2, p.l)
    v = boyen_sign(pp.boyen_key, msk.basis, msg, p.s, p.beta, rng)
    ext = ext_basis(msk.basis, boyen_message_matrix(pp.boyen_key, msg))
    shortest = min(range(ext.dim), key=lambda j: np.abs(ext.S[:, j]).max())
    shifted = v + ext.S[:, shortest]
    assert np.abs(shifted).max() <= p.beta
    assert boyen_verify(pp.boyen_key, msg, shifted, p.beta)


def test_boyen_norm_bound_rate(toy):
    # count raw sampler outputs that already fit the bound (the signer resamples the rest)
    from tpbs.trapdoor import sample_d
    pp, msk = toy[0], toy[1]
    p = pp.params
    rng = make_rng(SEED, "rate")
    msg = rng.integers(0, 2, p.l)
    ext = ext_basis(msk.basis, boyen_message_matrix(pp.boyen_key, msg))
    fits = sum(np.abs(sample_d(ext, pp.u, p.s, rng)).max() <= p.beta for _ in range(1000))
    assert fits >= 990


# ------------------------------------------------------------------- H1/H2

def test_h1_matches_reference_and_separates_keys():
    n, l1, q = 8, 4, 8388593
    assert np.array_equal(h1(b"ovk", n, l1, q), reference_h1(b"ovk", n, l1, q))
    assert np.array_equal(h1(b"", n, l1, q), reference_h1(b"", n, l1, q))
    assert all(not np.array_equal(h1(b"a%d" % i, n, l1, q), h1(b"b%d" % i, n, l1, q))
               for i in range(100))


def test_h2_matches_reference_and_is_uniform():
    for data in (b"", b"x", bytes(range(200))):
        assert h2(data, 50).tolist() == reference_h2(data, 50)
    symbols = np.concatenate([h2(i.to_bytes(4, "little"), 1000) for i in range(100)])
    counts = np.bincount(symbols, minlength=4)[1:]
    assert stats.chisquare(counts).pvalue > 0.001
    assert not np.array_equal(h2(b"one", 32), h2(b"two", 32))


# --------------------------------------------------------------------- IBE

def test_round_to_bits_examples():
    assert round_to_bits(np.array([130, 10, 0]), 257).tolist() == [1, 0, 0]
    # 64 is equally far from 0 and 128: ties go to 1; 193 is one step closer to 0
    assert round_to_bits(np.array([64, 193]), 257).tolist() == [1, 0]


def test_encrypt_structure(compact):
    pp = compact[0]
    p = pp.params
    rng = make_rng(SEED, "enc")
    G = h1(b"k", p.n, p.l1, p.q)
    ident = np.array([1, 0, 1, 1])
    ct, noise = gpv_encrypt(pp.B, G, ident, p.B, p.q, rng)
    assert max(np.abs(x).max() for x in (noise.s, noise.e1, noise.e2)) <= p.B
    assert np.array_equal(ct.c1, np.mod(mat_mul_mod(pp.B.T, noise.s, p.q) + noise.e1, p.q))
    expect_c2 = np.mod(mat_mul_mod(G.T, noise.s, p.q) + noise.e2 + ident * (p.q // 2), p.q)
    assert np.array_equal(ct.c2, expect_c2)
    # zero identity with zero noise is just G^T s
    zero_c2 = np.mod(mat_mul_mod(G.T, noise.s, p.q), p.q)
    assert np.array_equal(np.mod(ct.c2 - noise.e2 - ident * (p.q // 2), p.q), zero_c2)


def test_decrypt_roundtrip_and_noise_certificate(compact):
    pp, mdk = compact[0], compact[2]
    p = pp.params
    rng = make_rng(SEED, "roundtrip")
    bound = p.open_noise_bound()
    for k in range(10):
        G = h1(b"ovk-%d" % k, p.n, p.l1, p.q)
        F = ibe_extract(mdk.basis, G, p.s1, rng)
        assert np.array_equal(mat_mul_mod(pp.B, F, p.q), G)
        for _ in range(100):
            ident = rng.integers(0, 2, p.l1)
            ct, noise = gpv_encrypt(pp.B, G, ident, p.B, p.q, rng)
            assert np.array_equal(ibe_decrypt(F, ct, p.q), ident)
            assert np.abs(noise.e2 - F.T @ noise.e1).max() <= bound <= p.open_threshold()


def test_extract_norm_and_determinism(compact):
    pp, mdk = compact[0], compact[2]
    p = pp.params
    G = h1(b"det", p.n, p.l1, p.q)
    F1 = ibe_extract(mdk.basis, G, p.s1, make_rng(SEED, "x"))
    F2 = ibe_extract(mdk.basis, G, p.s1, make_rng(SEED, "x"))
    assert np.array_equal(F1, F2)
    rng = make_rng(SEED, "norms")
    cap = math.ceil(p.s1 * math.log2(p.m))
    fits = sum(np.abs(ibe_extract(mdk.basis, G, p.s1, rng)).max() <= cap for _ in range(100))
    assert fits >= 99


def test_flipping_an_identity_bit_shifts_one_component(compact):
    pp = compact[0]
    p = pp.params
    G = h1(b"lin", p.n, p.l1, p.q)
    a, _ = gpv_encrypt(pp.B, G, np.array([0, 0, 0, 0]), p.B, p.q, make_rng(SEED, "lin"))
    b, _ = gpv_encrypt(pp.B, G, np.array([0, 1, 0, 0]), p.B, p.q, make_rng(SEED, "lin"))
    assert np.array_equal(a.c1, b.c1)
    assert np.mod(b.c2 - a.c2, p.q).tolist() == [0, p.q // 2, 0, 0]
    assert isinstance(a, Ciphertext)


# --------------------------------------------------------------------- OTS

def test_ots():
    kp = ots_keygen(make_rng(SEED, "ots"))
    sig = ots_sign(kp.osk, b"message")
    assert ots_verify(kp.ovk, b"message", sig)
    assert not ots_verify(kp.ovk, b"messagf", sig)
    bad = bytearray(sig)
    bad[100] ^= 1
    assert not ots_verify(kp.ovk, b"message", bytes(bad))
    assert not ots_verify(kp.ovk, b"message", sig[:-1])


# -------------------------------------------------------------- commitment

def test_commitment_determinism_and_hiding():
    ck = commitment_key(8, 368, 8388593, b"\x07" * 32)
    rng = make_rng(SEED, "com")
    rho = ck.random_rho(rng)
    assert np.array_equal(ck.commit(b"x", rho), ck.commit(b"x", rho))
    assert not np.array_equal(ck.commit(b"x", rho), ck.commit(b"y", rho))
    assert ck.commit(b"x", rho).shape == (8,)
    vals = np.concatenate([ck.commit(b"fixed", ck.random_rho(rng)) for _ in range(1000)])
    counts = np.bincount(vals * 10 // ck.q, minlength=10)
    assert stats.chisquare(counts).pvalue > 0.001
    with pytest.raises(DimensionError):
        ck.commit(b"x", rho[:-1])
