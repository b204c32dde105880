"""Building blocks: Boyen signatures, GPV identity-based encryption, a Lamport
one-time signature, a lattice commitment and the hash oracles H1/H2."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import DimensionError, mat_mul_mod, readonly, xof_residues
from .gauss import chi_vec
from .trapdoor import LatticeBasis, ext_basis, sample_d

H1_TAG = b"TPBS-H1"
H2_TAG = b"TPBS-H2"
COM_TAG = b"TPBS-COM"
OTS_TAG = b"TPBS-OTS"


class SignatureOverflow(RuntimeError):
    """Preimage sampling kept producing vectors above the norm bound."""


# ------------------------------------------------------------------ Boyen

@dataclass(frozen=True, eq=False)
class BoyenKey:
    """Verification data: A, the message matrices A_0..A_l and the target u."""

    A: np.ndarray
    A_msg: tuple[np.ndarray, ...]
    u: np.ndarray
    q: int

    @property
    def msg_len(self) -> int:
        return len(self.A_msg) - 1


def boyen_message_matrix(key: BoyenKey, msg: np.ndarray) -> np.ndarray:
    """[A | A_0 + sum_j msg_j A_j] mod q."""
    msg = np.asarray(msg, dtype=np.int64)
    if msg.shape != (key.msg_len,):
        raise DimensionError(f"message must have {key.msg_len} bits")
    right = key.A_msg[0] + np.tensordot(msg, np.stack(key.A_msg[1:]), axes=1)
    return np.concatenate([key.A, np.mod(right, key.q)], axis=1)


def boyen_sign(key: BoyenKey, basis: LatticeBasis, msg: np.ndarray, s: float, beta: int,
               rng: np.random.Generator, max_attempts: int = 64) -> np.ndarray:
    A_m = boyen_message_matrix(key, msg)
    ext = ext_basis(basis, A_m)
    for _ in range(max_attempts):
        v = sample_d(ext, key.u, s, rng)
        if np.abs(v).max() <= beta:
            return v
    raise SignatureOverflow(f"no preimage with infinity norm <= {beta} in {max_attempts} tries")


def boyen_verify(key: BoyenKey, msg: np.ndarray, v: np.ndarray, beta: int) -> bool:
    v = np.asarray(v, dtype=np.int64)
    if v.shape != (2 * key.A.shape[1],) or np.abs(v).max(initial=0) > beta:
        return False
    return bool(np.array_equal(mat_mul_mod(boyen_message_matrix(key, msg), v, key.q),
                               np.mod(key.u, key.q)))


# -------------------------------------------------------------------- GPV

def h1(ovk: bytes, n: int, l1: int, q: int) -> np.ndarray:
    """Hash a verification key to an n x l1 matrix mod q."""
    M = xof_residues(H1_TAG + ovk, n * l1, q).reshape(n, l1)
    M.flags.writeable = False
    return M


@dataclass(frozen=True)
class Ciphertext:
    c1: np.ndarray
    c2: np.ndarray


@dataclass(frozen=True)
class EncryptionNoise:
    s: np.ndarray
    e1: np.ndarray
    e2: np.ndarray


def gpv_encrypt(B: np.ndarray, G: np.ndarray, ident: np.ndarray, noise_bound: int, q: int,
                rng: np.random.Generator) -> tuple[Ciphertext, EncryptionNoise]:
    """c1 = B^T s + e1, c2 = G^T s + e2 + ident * floor(q/2), with s, e1, e2 drawn from chi."""
    n, m = B.shape
    l1 = G.shape[1]
    ident = np.asarray(ident, dtype=np.int64)
    if ident.shape != (l1,):
        raise DimensionError(f"identity must have {l1} bits")
    s = chi_vec(noise_bound, n, rng)
    e1 = chi_vec(noise_bound, m, rng)
    e2 = chi_vec(noise_bound, l1, rng)
    c1 = np.mod(mat_mul_mod(B.T, s, q) + e1, q)
    c2 = np.mod(mat_mul_mod(G.T, s, q) + e2 + ident * (q // 2), q)
    readonly(c1, c2, s, e1, e2)
    return Ciphertext(c1, c2), EncryptionNoise(s, e1, e2)


def ibe_extract(basis: LatticeBasis, G: np.ndarray, s1: float, rng: np.random.Generator) -> np.ndarray:
    """Short F with B F = G mod q, one preimage per column."""
    return np.stack([sample_d(basis, G[:, j], s1, rng) for j in range(G.shape[1])], axis=1)


def round_to_bits(y: np.ndarray, q: int) -> np.ndarray:
    """Nearest of {0, floor(q/2)} for each residue; ties go to 1."""
    y = np.mod(np.asarray(y, dtype=np.int64), q)
    half = q // 2
    d0 = np.minimum(y, q - y)
    diff = np.abs(y - half)
    d1 = np.minimum(diff, q - diff)
    return (d1 <= d0).astype(np.uint8)


def ibe_decrypt(F: np.ndarray, ct: Ciphertext, q: int) -> np.ndarray:
    y = np.mod(ct.c2 - mat_mul_mod(np.asarray(F).T, ct.c1, q), q)
    return round_to_bits(y, q)


# -------------------------------------------------------------------- OTS

OTS_BITS = 256
OTS_LEN = 32


def _ots_hash(x: bytes) -> bytes:
    return hashlib.shake_256(OTS_TAG + x).digest(OTS_LEN)


def _ots_digest_bits(msg: bytes) -> np.ndarray:
    d = hashlib.shake_256(OTS_TAG + b"-MSG" + msg).digest(OTS_BITS // 8)
    return np.unpackbits(np.frombuffer(d, dtype=np.uint8))


@dataclass(frozen=True)
class OtsKeyPair:
    osk: bytes
    ovk: bytes


def ots_keygen(rng: np.random.Generator) -> OtsKeyPair:
    osk = rng.bytes(2 * OTS_BITS * OTS_LEN)
    ovk = b"".join(_ots_hash(osk[i:i + OTS_LEN]) for i in range(0, len(osk), OTS_LEN))
    return OtsKeyPair(osk, ovk)


def ots_sign(osk: bytes, msg: bytes) -> bytes:
    bits = _ots_digest_bits(msg)
    out = []
    for i, b in enumerate(bits):
        off = (2 * i + int(b)) * OTS_LEN
        out.append(osk[off:off + OTS_LEN])
    return b"".join(out)


def ots_verify(ovk: bytes, msg: bytes, sig: bytes) -> bool:
    if len(ovk) != 2 * OTS_BITS * OTS_LEN or len(sig) != OTS_BITS * OTS_LEN:
        return False
    bits = _ots_digest_bits(msg)
    for i, b in enumerate(bits):
        off = (2 * i + int(b)) * OTS_LEN
        if _ots_hash(sig[i * OTS_LEN:(i + 1) * OTS_LEN]) != ovk[off:off + OTS_LEN]:
            return False
    return True


# ------------------------------------------------------------- commitment

@dataclass(frozen=True, eq=False)
class CommitmentKey:
    """COM(x; rho) = C0 rho + C1 digest(x) mod q with digest(x) in {0,1}^m."""

    n: int
    m: int
    q: int
    C0: np.ndarray
    C1: np.ndarray

    def digest(self, data: bytes) -> np.ndarray:
        raw = hashlib.shake_256(COM_TAG + data).digest(-(-self.m // 8))
        return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:self.m].astype(np.int64)

    def commit(self, data: bytes, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=np.int64)
        if rho.shape != (self.m,):
            raise DimensionError("commitment randomness has the wrong length")
        return np.mod(mat_mul_mod(self.C0, rho, self.q)
                      + mat_mul_mod(self.C1, self.digest(data), self.q), self.q)

    def random_rho(self, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, 2, size=self.m, dtype=np.int64)


@lru_cache(maxsize=8)
def commitment_key(n: int, m: int, q: int, seed: bytes) -> CommitmentKey:
    stream = xof_residues(COM_TAG + b"-KEY" + seed, 2 * n * m, q)
    C0 = stream[:n * m].reshape(n, m)
    C1 = stream[n * m:].reshape(n, m)
    readonly(C0, C1)
    return CommitmentKey(n, m, q, C0, C1)


# ------------------------------------------------------------------- H2

def h2(data: bytes, kappa: int) -> np.ndarray:
    """Challenge string in {1,2,3}^kappa."""
    out: list[int] = []
    length = 2 * kappa + 8
    while len(out) < kappa:
        stream = hashlib.shake_256(H2_TAG + data).digest(length)
        out = [b % 3 + 1 for b in stream if b < 252]
        length *= 2
    return np.array(out[:kappa], dtype=np.int8)


def length_prefixed(*parts: bytes) -> bytes:
    return b"".join(len(p).to_bytes(8, "little") + p for p in parts)


def signing_width(gs_norm: float, m: int) -> float:
    """Width for message-bound preimages over [A | A_msg]."""
    return gs_norm * math.sqrt(math.log(2 * m)) * 2.0


def extraction_width(gs_norm: float, m: int) -> float:
    return gs_norm * math.sqrt(2.0 * math.log(2 * m))
