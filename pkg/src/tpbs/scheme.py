"""Policy-based signatures with traceable signers.

A user key certifies (identity, policy) pairs with Boyen signatures.  A
signature encrypts the signer's identity under an identity-based key derived
from a fresh one-time verification key, and proves in zero knowledge that
the signer holds a certified pair whose policy admits the message and that
the ciphertext encrypts the certified identity.  The opener decrypts the
identity with the master decryption key.

Refusals are returned as ``None``; exceptions signal malformed input or
internal failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import (DimensionError, ParameterError, Params, gadget_expand, gadget_matrix,
                   mat_mul_mod, rank_mod, readonly, uniform_matrix)
from .encodings import dec2, dec3, dec_ext, enc2, enc3, ext_mix, perm2, perm3, perm_mix, vdec, vrec
from .serialization import Writer
from .sigcrypt import (BoyenKey, Ciphertext, CommitmentKey, EncryptionNoise, boyen_message_matrix,
                       boyen_sign, commitment_key, extraction_width, gpv_encrypt, h1, ibe_decrypt,
                       ibe_extract, length_prefixed, ots_keygen, ots_sign, ots_verify,
                       signing_width)
from .stern import (AbstractStatement, BlockSparseMap, SternProof, encode_proof, extract,
                    fs_point, fs_prove, fs_verify, particular_solution, residue_bytes, sim_prove)
from .trapdoor import LatticeBasis, trap_gen


class WitnessError(ValueError):
    """A claimed witness violates one line of the signing relation."""

    def __init__(self, line: str, detail: str = "") -> None:
        super().__init__(f"relation line violated: {line}" + (f" ({detail})" if detail else ""))
        self.line = line


LINE_CERT = "A_{id||p} v = u"
LINE_CERT_NORM = "||v||_inf <= beta"
LINE_C1 = "c1 = B^T s + e1"
LINE_C2 = "c2 = G^T s + e2 + id*floor(q/2)"
LINE_POLICY = "G1 p + G2 pcw = m"
LINE_NOISE = "||(s, e1, e2)||_inf <= B"


# ------------------------------------------------------------------ keys

@dataclass(frozen=True, eq=False)
class PublicParams:
    params: Params
    A: np.ndarray
    A_msg: tuple[np.ndarray, ...]  # A_0 .. A_l
    u: np.ndarray
    B: np.ndarray
    G1: np.ndarray
    G2: np.ndarray

    def __post_init__(self) -> None:
        p = self.params
        shapes = [(self.A, (p.n, p.m)), (self.u, (p.n,)), (self.B, (p.n, p.m)),
                  (self.G1, (p.n, p.l2)), (self.G2, (p.n, p.d))]
        shapes += [(Ai, (p.n, p.m)) for Ai in self.A_msg]
        if len(self.A_msg) != p.l + 1 or any(a.shape != s for a, s in shapes):
            raise DimensionError("public parameters do not match the parameter set")
        if p.s is None or p.s1 is None:
            raise ParameterError("public parameters need fixed Gaussian widths")
        readonly(self.A, self.u, self.B, self.G1, self.G2, *self.A_msg)

    @cached_property
    def boyen_key(self) -> BoyenKey:
        return BoyenKey(self.A, self.A_msg, self.u, self.params.q)

    @cached_property
    def ck(self) -> CommitmentKey:
        p = self.params
        return commitment_key(p.n, p.m, p.q, p.ck_seed)

    @cached_property
    def codec(self) -> "TpbsCodec":
        return TpbsCodec(self.params)

    @cached_property
    def static_digest(self) -> bytes:
        """Digest of (A, A_0..A_l, u, B), the ciphertext-independent statement prefix."""
        import hashlib
        q = self.params.q
        h = hashlib.shake_256(b"TPBS-PP")
        for M in (self.A, *self.A_msg, self.u, self.B):
            h.update(residue_bytes(M.reshape(-1), q))
        return h.digest(64)

    @cached_property
    def static_blocks(self) -> tuple:
        """Ciphertext-independent blocks of the first linear map."""
        p, c = self.params, self.codec
        q, beta, B = p.q, p.beta, p.B
        mdb = p.m * p.delta_beta
        blocks = [(0, c.o11 + 3 * np.arange(mdb) + 1, gadget_expand(self.A, beta, q)),
                  (0, c.o12 + 3 * np.arange(mdb) + 1, gadget_expand(self.A_msg[0], beta, q))]
        for j in range(p.l):
            cols = c.o13 + 6 * (j * mdb + np.arange(mdb)) + 3
            blocks.append((0, cols, gadget_expand(self.A_msg[j + 1], beta, q)))
        blocks.append((p.n, c.mid14(0, p.n * p.delta_B), gadget_expand(self.B.T, B, q)))
        blocks.append((p.n, c.mid14(p.n * p.delta_B, p.m * p.delta_B), gadget_matrix(p.m, B)))
        half = np.eye(p.l1, dtype=np.int64) * (q // 2)
        off_c2 = p.n + p.m
        blocks.append((off_c2, c.mid14((p.n + p.m) * p.delta_B, p.l1 * p.delta_B),
                       gadget_matrix(p.l1, B)))
        blocks.append((off_c2, c.o15 + 2 * np.arange(p.l1) + 1, half))
        return tuple(blocks)

    @cached_property
    def second_map(self) -> BlockSparseMap:
        p = self.params
        cols_p = 2 * np.arange(p.l2) + 1
        cols_q = 2 * p.l2 + 2 * np.arange(p.d) + 1
        return BlockSparseMap(p.n, 2 * (p.l2 + p.d), 2,
                              ((0, cols_p, np.mod(self.G1, 2)), (0, cols_q, np.mod(self.G2, 2))))


@dataclass(frozen=True, eq=False)
class MasterSecretKey:
    basis: LatticeBasis


@dataclass(frozen=True, eq=False)
class MasterDecryptionKey:
    basis: LatticeBasis


@dataclass(frozen=True, eq=False)
class UserKey:
    ident: np.ndarray
    certs: tuple[tuple[np.ndarray, np.ndarray], ...]  # (policy, v) pairs


@dataclass(frozen=True, eq=False)
class Signature:
    ovk: bytes
    ct: Ciphertext
    proof: SternProof
    ots_sig: bytes


@dataclass(frozen=True, eq=False)
class Witness:
    ident: np.ndarray
    policy: np.ndarray
    pcw: np.ndarray
    v: np.ndarray
    s: np.ndarray
    e1: np.ndarray
    e2: np.ndarray


@dataclass(frozen=True, eq=False)
class SimTrapdoor:
    msk: MasterSecretKey
    mdk: MasterDecryptionKey


# ----------------------------------------------------------------- codec

class TpbsCodec:
    """VALID for the signing relation.

    w_1 = enc3(v1^) || enc3(v2^) || ext_mix(id||p, v2^) || enc3(s^||e1^||e2^) || enc2(id)
    w_2 = enc2(p) || enc2(pcw)

    with the shared values (v2^, id, p) tied together across blocks.
    """

    def __init__(self, params: Params) -> None:
        p = self.params = params
        self.mdb = p.m * p.delta_beta
        self.noise_len = (p.n + p.m + p.l1) * p.delta_B
        self.L11 = self.L12 = 3 * self.mdb
        self.L13 = 6 * p.l * self.mdb
        self.L14 = 3 * self.noise_len
        self.L15 = 2 * p.l1
        self.o11 = 0
        self.o12 = self.L11
        self.o13 = self.o12 + self.L12
        self.o14 = self.o13 + self.L13
        self.o15 = self.o14 + self.L14
        self.L1 = self.o15 + self.L15
        self.L21, self.L22 = 2 * p.l2, 2 * p.d
        self.L2 = self.L21 + self.L22
        self.eta_layout = ((self.mdb, 3), (self.mdb, 3), (self.noise_len, 3),
                           (p.l1, 2), (p.l2, 2), (p.d, 2))

    def mid14(self, start: int, count: int) -> np.ndarray:
        return self.o14 + 3 * (start + np.arange(count)) + 1

    def permutation(self, eta) -> np.ndarray:
        b_v1, b_v2, b_14, b_id, b_p, b_q = eta
        t_key = np.concatenate([np.asarray(b_id, dtype=np.int64), np.asarray(b_p, dtype=np.int64)])
        return np.concatenate([
            self.o11 + perm3(b_v1), self.o12 + perm3(b_v2), self.o13 + perm_mix(t_key, b_v2),
            self.o14 + perm3(b_14), self.o15 + perm2(b_id),
            self.L1 + perm2(b_p), self.L1 + self.L21 + perm2(b_q)])

    def encode(self, y_v1, y_v2, ident, policy, y_noise, pcw) -> np.ndarray:
        t = np.concatenate([np.asarray(ident), np.asarray(policy)]).astype(np.int8)
        parts = [enc3(np.asarray(y_v1)[None])[0], enc3(np.asarray(y_v2)[None])[0],
                 ext_mix(t, y_v2), enc3(np.asarray(y_noise)[None])[0],
                 enc2(np.asarray(ident)[None])[0], enc2(np.asarray(policy)[None])[0],
                 enc2(np.asarray(pcw)[None])[0]]
        return np.concatenate([np.asarray(x, dtype=np.int64) for x in parts])

    def decode(self, w: np.ndarray):
        """(y_v1, y_v2, id, p, y_noise, pcw) or None when w is not in VALID."""
        w = np.asarray(w)
        if w.shape != (self.L1 + self.L2,):
            return None
        p = self.params
        y1 = dec3(w[self.o11:self.o12])
        y2 = dec3(w[self.o12:self.o13])
        mixed = dec_ext(w[self.o13:self.o14], p.l, self.mdb)
        y_noise = dec3(w[self.o14:self.o15])
        ident = dec2(w[self.o15:self.L1])
        policy = dec2(w[self.L1:self.L1 + self.L21])
        pcw = dec2(w[self.L1 + self.L21:])
        if any(x is None for x in (y1, y2, mixed, y_noise, ident, policy, pcw)):
            return None
        t, z = mixed
        if not (np.array_equal(z, y2) and np.array_equal(t[:p.l1], ident)
                and np.array_equal(t[p.l1:], policy)):
            return None
        return y1, y2, ident, policy, y_noise, pcw

    def valid_check(self, w: np.ndarray) -> bool:
        try:
            return self.decode(w) is not None
        except Exception:
            return False

    def sample_valid(self, rng: np.random.Generator) -> np.ndarray:
        p = self.params
        return self.encode(rng.integers(-1, 2, self.mdb), rng.integers(-1, 2, self.mdb),
                           rng.integers(0, 2, p.l1), rng.integers(0, 2, p.l2),
                           rng.integers(-1, 2, self.noise_len), rng.integers(0, 2, p.d))


# ------------------------------------------------------------ relation

def policy_check(pp: PublicParams, policy: np.ndarray, msg: np.ndarray, pcw: np.ndarray) -> bool:
    """G1 p + G2 pcw = m (mod 2)."""
    lhs = np.mod(pp.G1.astype(np.int64) @ np.asarray(policy, dtype=np.int64)
                 + pp.G2.astype(np.int64) @ np.asarray(pcw, dtype=np.int64), 2)
    return bool(np.array_equal(lhs, np.mod(np.asarray(msg, dtype=np.int64), 2)))


def find_pcw(pp: PublicParams, policy: np.ndarray, msg: np.ndarray,
             rng: np.random.Generator | None = None) -> np.ndarray:
    """A policy-compliance witness for (policy, msg), random among all solutions when rng is given."""
    from .core import row_reduce_solve
    target = np.mod(np.asarray(msg, dtype=np.int64) - pp.G1.astype(np.int64) @ policy, 2)
    order = None if rng is None else rng.permutation(pp.params.d)
    x, _ = row_reduce_solve(pp.G2, target, 2, column_order=order)
    return x.astype(np.uint8)


def statement_binding(pp: PublicParams, G: np.ndarray, ct: Ciphertext, msg: np.ndarray) -> bytes:
    q = pp.params.q
    return length_prefixed(pp.static_digest, residue_bytes(G.reshape(-1), q),
                           residue_bytes(ct.c1, q), residue_bytes(ct.c2, q),
                           residue_bytes(pp.G1.reshape(-1), 2), residue_bytes(pp.G2.reshape(-1), 2),
                           residue_bytes(np.asarray(msg), 2))


def build_statement(pp: PublicParams, ovk: bytes, ct: Ciphertext, msg: np.ndarray) -> AbstractStatement:
    p = pp.params
    msg = np.asarray(msg, dtype=np.int64)
    if msg.shape != (p.n,) or ct.c1.shape != (p.m,) or ct.c2.shape != (p.l1,):
        raise DimensionError("message or ciphertext has the wrong length")
    G = h1(ovk, p.n, p.l1, p.q)
    c = pp.codec
    g_blocks = ((p.n + p.m, c.mid14(0, p.n * p.delta_B), gadget_expand(G.T, p.B, p.q)),)
    M1 = BlockSparseMap(p.n + p.m + p.l1, c.L1, p.q, pp.static_blocks + g_blocks)
    u1 = np.concatenate([pp.u, ct.c1, ct.c2]).astype(np.int64)
    return AbstractStatement(M1, u1, pp.second_map, np.mod(msg, 2), c,
                             binding=statement_binding(pp, G, ct, msg))


def check_relation(pp: PublicParams, ovk: bytes, ct: Ciphertext, msg: np.ndarray,
                   xi: Witness) -> None:
    """Raise WitnessError naming the first violated line."""
    p = pp.params
    q = p.q
    x = np.concatenate([xi.ident, xi.policy]).astype(np.int64)
    if np.abs(xi.v).max(initial=0) > p.beta:
        raise WitnessError(LINE_CERT_NORM)
    if not np.array_equal(mat_mul_mod(boyen_message_matrix(pp.boyen_key, x), xi.v, q), pp.u):
        raise WitnessError(LINE_CERT)
    if max(np.abs(a).max(initial=0) for a in (xi.s, xi.e1, xi.e2)) > p.B:
        raise WitnessError(LINE_NOISE)
    if not np.array_equal(np.mod(mat_mul_mod(pp.B.T, xi.s, q) + xi.e1, q), ct.c1):
        raise WitnessError(LINE_C1)
    G = h1(ovk, p.n, p.l1, q)
    c2 = np.mod(mat_mul_mod(G.T, xi.s, q) + xi.e2 + xi.ident.astype(np.int64) * (q // 2), q)
    if not np.array_equal(c2, ct.c2):
        raise WitnessError(LINE_C2)
    if not policy_check(pp, xi.policy, msg, xi.pcw):
        raise WitnessError(LINE_POLICY)


def encode_witness(pp: PublicParams, xi: Witness) -> np.ndarray:
    """Map a witness to VALID without checking the relation (norm bounds are required)."""
    p = pp.params
    y_v1 = vdec(xi.v[:p.m], p.beta)
    y_v2 = vdec(xi.v[p.m:], p.beta)
    y_noise = np.concatenate([vdec(xi.s, p.B), vdec(xi.e1, p.B), vdec(xi.e2, p.B)])
    return pp.codec.encode(y_v1, y_v2, xi.ident, xi.policy, y_noise, xi.pcw)


def build_statement_witness(pp: PublicParams, ovk: bytes, ct: Ciphertext, msg: np.ndarray,
                            xi: Witness | None = None) -> tuple[AbstractStatement, np.ndarray | None]:
    stmt = build_statement(pp, ovk, ct, msg)
    if xi is None:
        return stmt, None
    check_relation(pp, ovk, ct, msg, xi)
    return stmt, encode_witness(pp, xi)


def decode_witness(pp: PublicParams, w: np.ndarray) -> Witness:
    p = pp.params
    parts = pp.codec.decode(w)
    if parts is None:
        raise ValueError("vector is not a valid witness encoding")
    y_v1, y_v2, ident, policy, y_noise, pcw = parts
    v = np.concatenate([vrec(y_v1, p.beta), vrec(y_v2, p.beta)])
    nd, md = p.n * p.delta_B, p.m * p.delta_B
    s = vrec(y_noise[:nd], p.B)
    e1 = vrec(y_noise[nd:nd + md], p.B)
    e2 = vrec(y_noise[nd + md:], p.B)
    return Witness(ident, policy, pcw, v, s, e1, e2)


# -------------------------------------------------------------- algorithms

def setup(params: Params, rng: np.random.Generator
          ) -> tuple[PublicParams, MasterSecretKey, MasterDecryptionKey]:
    p = params
    sig_td = trap_gen(p.n, p.m, p.q, rng)
    enc_td = trap_gen(p.n, p.m, p.q, rng)
    s = signing_width(sig_td.basis.gs_norm, p.m)
    s1 = extraction_width(enc_td.basis.gs_norm, p.m)
    full = p.with_widths(s, s1)
    full.check_open_bound()
    A_msg = tuple(uniform_matrix(rng, p.n, p.m, p.q) for _ in range(p.l + 1))
    u = rng.integers(0, p.q, size=p.n, dtype=np.int64)
    G1 = rng.integers(0, 2, size=(p.n, p.l2)).astype(np.uint8)
    while True:
        G2 = rng.integers(0, 2, size=(p.n, p.d)).astype(np.uint8)
        if rank_mod(G2.astype(np.int64), 2) == p.n:
            break
    pp = PublicParams(full, sig_td.A, A_msg, u, enc_td.A, G1, G2)
    return pp, MasterSecretKey(sig_td.basis), MasterDecryptionKey(enc_td.basis)


def keygen(pp: PublicParams, msk: MasterSecretKey, ident: np.ndarray, policies,
           rng: np.random.Generator) -> UserKey:
    p = pp.params
    ident = np.asarray(ident, dtype=np.uint8)
    if ident.shape != (p.l1,):
        raise DimensionError(f"identity must have {p.l1} bits")
    certs = []
    for pol in policies:
        pol = np.asarray(pol, dtype=np.uint8)
        if pol.shape != (p.l2,):
            raise DimensionError(f"policy must have {p.l2} bits")
        x = np.concatenate([ident, pol])
        v = boyen_sign(pp.boyen_key, msk.basis, x, p.s, p.beta, rng)
        readonly(pol, v)
        certs.append((pol, v))
    readonly(ident)
    return UserKey(ident, tuple(certs))


def ots_message(pp: PublicParams, ct: Ciphertext, stmt: AbstractStatement, proof: SternProof) -> bytes:
    q = pp.params.q
    return length_prefixed(residue_bytes(ct.c1, q), residue_bytes(ct.c2, q),
                           encode_proof(stmt, pp.ck, proof))


@dataclass(frozen=True, eq=False)
class SignTrace:
    signature: Signature
    witness: Witness


def sign_traced(pp: PublicParams, usk: UserKey, msg: np.ndarray, pcw: np.ndarray,
                rng: np.random.Generator, oracle=None) -> SignTrace | None:
    """Sign and also return the witness used; None when no certified policy admits msg."""
    p = pp.params
    msg = np.asarray(msg, dtype=np.uint8)
    pcw = np.asarray(pcw, dtype=np.uint8)
    if msg.shape != (p.n,) or pcw.shape != (p.d,):
        raise DimensionError("message or policy-compliance witness has the wrong length")
    cert = next(((pol, v) for pol, v in usk.certs if policy_check(pp, pol, msg, pcw)), None)
    if cert is None:
        return None
    ots = ots_keygen(rng)
    G = h1(ots.ovk, p.n, p.l1, p.q)
    ct, noise = gpv_encrypt(pp.B, G, usk.ident, p.B, p.q, rng)
    xi = Witness(usk.ident, cert[0], pcw, cert[1], noise.s, noise.e1, noise.e2)
    stmt, w = build_statement_witness(pp, ots.ovk, ct, msg, xi)
    proof = fs_prove(stmt, w, pp.ck, p.kappa, rng, oracle)
    sig = Signature(ots.ovk, ct, proof, ots_sign(ots.osk, ots_message(pp, ct, stmt, proof)))
    return SignTrace(sig, xi)


def sign(pp: PublicParams, usk: UserKey, msg: np.ndarray, pcw: np.ndarray,
         rng: np.random.Generator, oracle=None) -> Signature | None:
    trace = sign_traced(pp, usk, msg, pcw, rng, oracle)
    return None if trace is None else trace.signature


def verify(pp: PublicParams, msg: np.ndarray, sig: Signature, oracle=None) -> bool:
    try:
        stmt = build_statement(pp, sig.ovk, sig.ct, msg)
        if sig.proof.kappa != pp.params.kappa:
            return False
        if not ots_verify(sig.ovk, ots_message(pp, sig.ct, stmt, sig.proof), sig.ots_sig):
            return False
        return fs_verify(stmt, pp.ck, sig.proof, oracle)
    except Exception:
        return False


def decryption_key(pp: PublicParams, mdk: MasterDecryptionKey, ovk: bytes,
                   rng: np.random.Generator) -> np.ndarray:
    p = pp.params
    return ibe_extract(mdk.basis, h1(ovk, p.n, p.l1, p.q), p.s1, rng)


def open_signature(pp: PublicParams, mdk: MasterDecryptionKey, msg: np.ndarray, sig: Signature,
                   rng: np.random.Generator, oracle=None) -> np.ndarray | None:
    """The signer's identity, or None when the signature does not verify."""
    if not verify(pp, msg, sig, oracle):
        return None
    F = decryption_key(pp, mdk, sig.ovk, rng)
    return ibe_decrypt(F, sig.ct, pp.params.q)


# -------------------------------------------------------- simulation side

def sim_setup(params: Params, rng: np.random.Generator):
    pp, msk, mdk = setup(params, rng)
    return pp, msk, mdk, SimTrapdoor(msk, mdk)


def sim_keygen(pp: PublicParams, tr: SimTrapdoor, ident, policies, rng) -> UserKey:
    return keygen(pp, tr.msk, ident, policies, rng)


def sim_sign(pp: PublicParams, tr: SimTrapdoor, msg: np.ndarray, rng: np.random.Generator,
             oracle) -> Signature:
    """Signature without any user key: encrypts the all-zero identity and simulates the proof."""
    p = pp.params
    msg = np.asarray(msg, dtype=np.uint8)
    ots = ots_keygen(rng)
    G = h1(ots.ovk, p.n, p.l1, p.q)
    ct, _ = gpv_encrypt(pp.B, G, np.zeros(p.l1, dtype=np.int64), p.B, p.q, rng)
    stmt = build_statement(pp, ots.ovk, ct, msg)
    proof = sim_prove(stmt, pp.ck, p.kappa, rng, oracle)
    return Signature(ots.ovk, ct, proof, ots_sign(ots.osk, ots_message(pp, ct, stmt, proof)))


class ExtractionFailure(RuntimeError):
    """No three-way fork was found within the replay budget."""


@dataclass
class ExtractionReport:
    ident: np.ndarray
    policy: np.ndarray
    pcw: np.ndarray
    witness: Witness
    replays: int


def find_fork(proofs: list[SternProof]):
    """(round, proof-per-challenge) for some round answered with all three challenges."""
    kappa = proofs[0].kappa
    for j in range(kappa):
        by_ch = {}
        for pr in proofs:
            by_ch.setdefault(int(pr.challenges[j]), pr)
        if len(by_ch) == 3:
            return j, by_ch
    return None


def extr(pp: PublicParams, msg: np.ndarray, sig: Signature, replay, log: list,
         rng: np.random.Generator, budget: int | None = None) -> ExtractionReport:
    """Recover (id, p, pcw) from a forger by rewinding it at its challenge query.

    ``replay(oracle)`` re-runs the deterministic adversary against the given
    oracle and returns its output (msg, signature) or None; ``log`` is the
    event log of the oracle from the original run.
    """
    from .oracles import ForkingOracle, point_key
    p = pp.params
    budget = 64 * p.kappa if budget is None else budget
    stmt = build_statement(pp, sig.ovk, sig.ct, msg)
    point = fs_point(stmt, sig.proof.commitments, pp.ck.q)
    key = point_key(point)
    t_star = next((i for i, ev in enumerate(log) if ev.key == key), None)
    if t_star is None or log[t_star].kind != "query":
        raise ExtractionFailure("the forgery's challenge was never queried by the adversary")
    proofs = [sig.proof]
    for attempt in range(1, budget + 1):
        fork = find_fork(proofs)
        if fork is not None:
            j, by_ch = fork
            w = extract(stmt, pp.ck, sig.proof.commitments[j],
                        by_ch[1].responses[j], by_ch[2].responses[j], by_ch[3].responses[j])
            xi = decode_witness(pp, w)
            return ExtractionReport(xi.ident, xi.policy, xi.pcw, xi, attempt - 1)
        oracle = ForkingOracle(base_log=log, t_star=t_star, rng=np.random.default_rng(rng.integers(2**63)))
        try:
            out = replay(oracle)
        except Exception:
            continue
        if out is None:
            continue
        m2, sig2 = out
        if (not np.array_equal(np.asarray(m2), np.asarray(msg)) or sig2.ovk != sig.ovk
                or oracle.event_index(point) != t_star):
            continue
        same = all(np.array_equal(a.to_bytes(pp.ck.q), b.to_bytes(pp.ck.q))
                   for a, b in zip(sig2.proof.commitments, sig.proof.commitments))
        if same and fs_verify(stmt, pp.ck, sig2.proof, oracle):
            proofs.append(sig2.proof)
    raise ExtractionFailure(f"no three-way fork within {budget} replays")


def noise_certificate(pp: PublicParams, F: np.ndarray, noise: EncryptionNoise) -> int:
    """||e2 - F^T e1||_inf, the decryption noise actually incurred."""
    return int(np.abs(noise.e2 - np.asarray(F).T @ noise.e1).max())


def random_message_for(pp: PublicParams, policy: np.ndarray,
                       rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A uniformly random conforming message for ``policy`` with its compliance witness."""
    pcw = rng.integers(0, 2, size=pp.params.d).astype(np.uint8)
    msg = np.mod(pp.G1.astype(np.int64) @ policy + pp.G2.astype(np.int64) @ pcw, 2).astype(np.uint8)
    return msg, pcw
