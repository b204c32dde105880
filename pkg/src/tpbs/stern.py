"""Stern-type zero-knowledge argument for the abstract relation

    M_1 w_1 = u_1 (mod q_1),  M_2 w_2 = u_2 (mod q_2),  w = (w_1 || w_2) in VALID,

where VALID is described by a ``ValidCodec``: a set of {-1,0,1} vectors
closed under a family of position permutations Gamma_eta.  Includes the
three-move protocol, its Fiat-Shamir transform, a zero-knowledge simulator
that programs the challenge oracle, and witness extraction from three
accepting answers to one commitment.

Witness-length vectors are int64 arrays of length L1 + L2; the first L1
entries live mod q_1 and the rest mod q_2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Protocol, Sequence

import numpy as np

from .core import DimensionError, UnsolvableError, mat_mul_mod, row_reduce_solve
from .encodings import dec2, dec3, enc2, enc3, invert_perm, perm2, perm3
from .serialization import (DecodeError, Reader, Writer, _pack_unsigned, _width_for,
                            pack_bits, pack_symbols, pack_trits, unpack_bits, unpack_symbols,
                            unpack_trits)
from .sigcrypt import CommitmentKey, h2, length_prefixed

PROOF_VERSION = 1


class ExtractionError(RuntimeError):
    """The three responses do not yield a witness."""


class BindingViolation(ExtractionError):
    """Two openings of one commitment disagree: the commitment binding was broken."""


# ------------------------------------------------------------------ algebra

def residue_bytes(x: np.ndarray, q: int) -> bytes:
    return _pack_unsigned(np.mod(np.asarray(x, dtype=np.int64), q), _width_for(q - 1))


@dataclass(frozen=True, eq=False)
class BlockSparseMap:
    """Linear map mod q given as a sum of dense blocks on (row range, column subset).

    Block ``(row_offset, cols, D)`` contributes ``D @ x[cols]`` to rows
    ``row_offset : row_offset + D.shape[0]``.
    """

    rows: int
    cols: int
    q: int
    blocks: tuple[tuple[int, np.ndarray, np.ndarray], ...]

    def __post_init__(self) -> None:
        for off, idx, D in self.blocks:
            if D.shape != (D.shape[0], idx.size) or off + D.shape[0] > self.rows:
                raise DimensionError("block does not fit the map")
            if D.size and (D.min() < 0 or D.max() >= self.q):
                raise ValueError("block entries must be residues mod q")
            if idx.size and (idx.min() < 0 or idx.max() >= self.cols):
                raise DimensionError("block column index out of range")

    @classmethod
    def from_dense(cls, M: np.ndarray, q: int) -> "BlockSparseMap":
        M = np.mod(np.asarray(M, dtype=np.int64), q)
        return cls(M.shape[0], M.shape[1], q, ((0, np.arange(M.shape[1]), M),))

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        if x.shape != (self.cols,):
            raise DimensionError(f"expected a vector of length {self.cols}")
        x = np.mod(x, self.q)
        out = np.zeros(self.rows, dtype=np.int64)
        for off, idx, D in self.blocks:
            seg = out[off:off + D.shape[0]]
            seg += mat_mul_mod(D, x[idx], self.q, reduced=True)
            if len(self.blocks) > 1:
                seg %= self.q
        return np.mod(out, self.q)

    def columns(self, col_ids: np.ndarray) -> np.ndarray:
        """Dense rows x len(col_ids) submatrix."""
        col_ids = np.asarray(col_ids, dtype=np.int64)
        where = {int(c): j for j, c in enumerate(col_ids)}
        out = np.zeros((self.rows, col_ids.size), dtype=np.int64)
        for off, idx, D in self.blocks:
            hits = [(k, where[int(c)]) for k, c in enumerate(idx) if int(c) in where]
            if not hits:
                continue
            src = np.array([h[0] for h in hits])
            dst = np.array([h[1] for h in hits])
            out[off:off + D.shape[0], dst] = np.mod(out[off:off + D.shape[0], dst] + D[:, src], self.q)
        return out

    def to_dense(self) -> np.ndarray:
        return self.columns(np.arange(self.cols))

    @cached_property
    def canonical_bytes(self) -> bytes:
        w = Writer()
        for v in (self.rows, self.cols, self.q, len(self.blocks)):
            w.u64(v)
        for off, idx, D in self.blocks:
            w.u64(off)
            w.ints(idx)
            w.zq(np.mod(D, self.q), self.q)
        return w.getvalue()


def solve_block_sparse(M: BlockSparseMap, u: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Some x with M x = u mod q (q prime), by elimination on a sampled column pool.

    Each block contributes all its columns when it is narrow and a random
    subset slightly larger than its row count otherwise; the pool grows if
    it does not span the right-hand side.
    """
    u = np.mod(np.asarray(u, dtype=np.int64), M.q)
    extra = 16
    for _ in range(4):
        pool: list[np.ndarray] = []
        for off, idx, D in M.blocks:
            want = D.shape[0] + extra
            if idx.size <= 2 * want:
                pool.append(idx)
            else:
                pool.append(rng.choice(idx, size=want, replace=False))
        cand = np.unique(np.concatenate(pool)) if pool else np.zeros(0, dtype=np.int64)
        sub = M.columns(cand)
        try:
            x_sub, _ = row_reduce_solve(sub, u, M.q)
        except UnsolvableError:
            extra *= 4
            continue
        x = np.zeros(M.cols, dtype=np.int64)
        x[cand] = x_sub
        return x
    raise UnsolvableError("no solution found over the sampled column pool")


# ------------------------------------------------------------------ codecs

Eta = tuple[np.ndarray, ...]


class ValidCodec(Protocol):
    """Describes VALID, the permutation family and the secret permutation keys."""

    L1: int
    L2: int
    eta_layout: tuple[tuple[int, int], ...]  # (length, alphabet size 2 or 3)

    def permutation(self, eta: Eta) -> np.ndarray: ...

    def valid_check(self, w: np.ndarray) -> bool: ...

    def sample_valid(self, rng: np.random.Generator) -> np.ndarray: ...


def sample_eta(codec: ValidCodec, rng: np.random.Generator) -> Eta:
    parts = []
    for length, base in codec.eta_layout:
        if base == 3:
            parts.append(rng.integers(-1, 2, size=length).astype(np.int8))
        else:
            parts.append(rng.integers(0, 2, size=length).astype(np.uint8))
    return tuple(parts)


def eta_bytes(codec: ValidCodec, eta: Eta) -> bytes:
    return b"".join(pack_trits(p) if base == 3 else pack_bits(p)
                    for p, (_, base) in zip(eta, codec.eta_layout))


def eta_from_reader(codec: ValidCodec, r: Reader) -> Eta:
    parts = []
    for length, base in codec.eta_layout:
        if base == 3:
            parts.append(unpack_trits(r.take(-(-length // 4)), length))
        else:
            parts.append(unpack_bits(r.take(-(-length // 8)), length))
    return tuple(parts)


def eta_well_formed(codec: ValidCodec, eta) -> bool:
    if not isinstance(eta, tuple) or len(eta) != len(codec.eta_layout):
        return False
    for p, (length, base) in zip(eta, codec.eta_layout):
        p = np.asarray(p)
        if p.shape != (length,):
            return False
        lo = -1 if base == 3 else 0
        hi = 1
        if p.size and (p.min() < lo or p.max() > hi):
            return False
    return True


def etas_equal(a: Eta, b: Eta) -> bool:
    return len(a) == len(b) and all(np.array_equal(np.asarray(x, dtype=np.int64),
                                                   np.asarray(y, dtype=np.int64))
                                    for x, y in zip(a, b))


class ToyCodec:
    """VALID = {enc3(y) || enc2(x)}: n3 trits and n2 bits; |VALID| = 3^n3 * 2^n2."""

    def __init__(self, n3: int, n2: int) -> None:
        self.n3, self.n2 = n3, n2
        self.L1, self.L2 = 3 * n3, 2 * n2
        self.eta_layout = ((n3, 3), (n2, 2))

    def permutation(self, eta: Eta) -> np.ndarray:
        return np.concatenate([perm3(eta[0]), self.L1 + perm2(eta[1])])

    def valid_check(self, w: np.ndarray) -> bool:
        w = np.asarray(w)
        if w.shape != (self.L1 + self.L2,):
            return False
        return dec3(w[:self.L1]) is not None and dec2(w[self.L1:]) is not None

    def sample_valid(self, rng: np.random.Generator) -> np.ndarray:
        y = rng.integers(-1, 2, size=(1, self.n3))
        x = rng.integers(0, 2, size=(1, self.n2))
        return np.concatenate([enc3(y)[0], enc2(x)[0]]).astype(np.int64)

    def decode(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return dec3(w[:self.L1]), dec2(w[self.L1:])


# --------------------------------------------------------------- statement

@dataclass(frozen=True, eq=False)
class AbstractStatement:
    M1: BlockSparseMap
    u1: np.ndarray
    M2: BlockSparseMap
    u2: np.ndarray
    codec: ValidCodec
    binding: bytes | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.M1.cols != self.codec.L1 or self.M2.cols != self.codec.L2:
            raise DimensionError("matrix widths must match the codec lengths")
        if self.u1.shape != (self.M1.rows,) or self.u2.shape != (self.M2.rows,):
            raise DimensionError("right-hand sides must match the row counts")

    @property
    def q1(self) -> int:
        return self.M1.q

    @property
    def q2(self) -> int:
        return self.M2.q

    @property
    def L1(self) -> int:
        return self.codec.L1

    @property
    def L(self) -> int:
        return self.codec.L1 + self.codec.L2

    def reduce(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.int64)
        return np.concatenate([np.mod(x[:self.L1], self.q1), np.mod(x[self.L1:], self.q2)])

    def images(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.M1.apply(x[:self.L1]), self.M2.apply(x[self.L1:])

    def holds(self, w: np.ndarray) -> bool:
        """Both linear equations and VALID membership."""
        w = np.asarray(w, dtype=np.int64)
        if w.shape != (self.L,) or not self.codec.valid_check(w):
            return False
        y1, y2 = self.images(self.reduce(w))
        return bool(np.array_equal(y1, np.mod(self.u1, self.q1))
                    and np.array_equal(y2, np.mod(self.u2, self.q2)))

    def vec_bytes(self, x: np.ndarray) -> bytes:
        x = self.reduce(x)
        return residue_bytes(x[:self.L1], self.q1) + residue_bytes(x[self.L1:], self.q2)

    @cached_property
    def binding_bytes(self) -> bytes:
        if self.binding is not None:
            return self.binding
        return length_prefixed(self.M1.canonical_bytes, residue_bytes(self.u1, self.q1),
                               self.M2.canonical_bytes, residue_bytes(self.u2, self.q2))


# ------------------------------------------------------------------ rounds

@dataclass(frozen=True)
class RoundCommitment:
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray

    def to_bytes(self, q: int) -> bytes:
        return b"".join(residue_bytes(c, q) for c in (self.c1, self.c2, self.c3))


@dataclass(frozen=True)
class Response1:
    t_w: np.ndarray
    t_r: np.ndarray
    rho2: np.ndarray
    rho3: np.ndarray


@dataclass(frozen=True)
class Response2:
    eta: Eta
    z: np.ndarray
    rho1: np.ndarray
    rho3: np.ndarray


@dataclass(frozen=True)
class Response3:
    eta: Eta
    z: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray


Response = Response1 | Response2 | Response3


@dataclass
class ProverState:
    w: np.ndarray
    r: np.ndarray
    z: np.ndarray
    eta: Eta
    rhos: tuple[np.ndarray, np.ndarray, np.ndarray]


def _c1_data(stmt: AbstractStatement, eta: Eta, y1: np.ndarray, y2: np.ndarray) -> bytes:
    return length_prefixed(eta_bytes(stmt.codec, eta), residue_bytes(y1, stmt.q1),
                           residue_bytes(y2, stmt.q2))


def _sample_mask(stmt: AbstractStatement, rng: np.random.Generator) -> np.ndarray:
    return np.concatenate([rng.integers(0, stmt.q1, size=stmt.L1, dtype=np.int64),
                           rng.integers(0, stmt.q2, size=stmt.L - stmt.L1, dtype=np.int64)])


def commit(stmt: AbstractStatement, w: np.ndarray, ck: CommitmentKey,
           rng: np.random.Generator, c1_images: tuple[np.ndarray, np.ndarray] | None = None
           ) -> tuple[RoundCommitment, ProverState]:
    """First move.  ``c1_images`` overrides the images committed in C1 (simulator use)."""
    w = np.asarray(w, dtype=np.int64)
    r = _sample_mask(stmt, rng)
    eta = sample_eta(stmt.codec, rng)
    z = stmt.reduce(w + r)
    perm = stmt.codec.permutation(eta)
    rhos = (ck.random_rho(rng), ck.random_rho(rng), ck.random_rho(rng))
    y1, y2 = stmt.images(r) if c1_images is None else c1_images
    cmt = RoundCommitment(ck.commit(_c1_data(stmt, eta, y1, y2), rhos[0]),
                          ck.commit(stmt.vec_bytes(r[perm]), rhos[1]),
                          ck.commit(stmt.vec_bytes(z[perm]), rhos[2]))
    return cmt, ProverState(w, r, z, eta, rhos)


def respond(stmt: AbstractStatement, state: ProverState, ch: int) -> Response:
    if ch == 1:
        perm = stmt.codec.permutation(state.eta)
        return Response1(state.w[perm].astype(np.int8), state.r[perm], state.rhos[1], state.rhos[2])
    if ch == 2:
        return Response2(state.eta, state.z, state.rhos[0], state.rhos[2])
    if ch == 3:
        return Response3(state.eta, state.r, state.rhos[0], state.rhos[1])
    raise ValueError(f"challenge must be 1, 2 or 3, got {ch}")


def _is_rho(ck: CommitmentKey, rho) -> bool:
    rho = np.asarray(rho)
    return rho.shape == (ck.m,) and bool(np.all((rho == 0) | (rho == 1)))


def _is_residue_vec(stmt: AbstractStatement, x) -> bool:
    x = np.asarray(x)
    if x.shape != (stmt.L,) or not np.issubdtype(x.dtype, np.integer):
        return False
    a, b = x[:stmt.L1], x[stmt.L1:]
    return bool(np.all((a >= 0) & (a < stmt.q1)) and np.all((b >= 0) & (b < stmt.q2)))


def _verify_round(stmt: AbstractStatement, ck: CommitmentKey, cmt: RoundCommitment, ch: int,
                  rsp) -> bool:
    codec = stmt.codec
    if ch == 1:
        if not isinstance(rsp, Response1):
            return False
        if not (_is_rho(ck, rsp.rho2) and _is_rho(ck, rsp.rho3) and _is_residue_vec(stmt, rsp.t_r)):
            return False
        t_w = np.asarray(rsp.t_w, dtype=np.int64)
        if not codec.valid_check(t_w):
            return False
        return (np.array_equal(cmt.c2, ck.commit(stmt.vec_bytes(rsp.t_r), rsp.rho2))
                and np.array_equal(cmt.c3, ck.commit(stmt.vec_bytes(t_w + rsp.t_r), rsp.rho3)))
    if ch in (2, 3):
        if not isinstance(rsp, Response2 if ch == 2 else Response3):
            return False
        other = rsp.rho3 if ch == 2 else rsp.rho2
        if not (eta_well_formed(codec, rsp.eta) and _is_rho(ck, rsp.rho1) and _is_rho(ck, other)
                and _is_residue_vec(stmt, rsp.z)):
            return False
        y1, y2 = stmt.images(rsp.z)
        if ch == 2:
            y1 = np.mod(y1 - stmt.u1, stmt.q1)
            y2 = np.mod(y2 - stmt.u2, stmt.q2)
        if not np.array_equal(cmt.c1, ck.commit(_c1_data(stmt, rsp.eta, y1, y2), rsp.rho1)):
            return False
        perm = codec.permutation(rsp.eta)
        target = cmt.c3 if ch == 2 else cmt.c2
        return bool(np.array_equal(target, ck.commit(stmt.vec_bytes(rsp.z[perm]), other)))
    return False


def verify_round(stmt: AbstractStatement, ck: CommitmentKey, cmt: RoundCommitment, ch: int,
                 rsp) -> bool:
    """Accept or reject one round; malformed input is a rejection, never an exception."""
    try:
        return bool(_verify_round(stmt, ck, cmt, int(ch), rsp))
    except Exception:
        return False


# ---------------------------------------------------------- Fiat-Shamir

class ChallengeOracle(Protocol):
    def query(self, point: bytes, kappa: int) -> np.ndarray: ...


class RandomOracle:
    """The production challenge hash."""

    def query(self, point: bytes, kappa: int) -> np.ndarray:
        return h2(point, kappa)


DEFAULT_ORACLE = RandomOracle()


@dataclass(frozen=True)
class SternProof:
    commitments: tuple[RoundCommitment, ...]
    challenges: np.ndarray
    responses: tuple[Response, ...]

    @property
    def kappa(self) -> int:
        return len(self.commitments)


def fs_point(stmt: AbstractStatement, commitments: Sequence[RoundCommitment], q_ck: int) -> bytes:
    return length_prefixed(stmt.binding_bytes, *[c.to_bytes(q_ck) for c in commitments])


def fs_prove(stmt: AbstractStatement, w: np.ndarray, ck: CommitmentKey, kappa: int,
             rng: np.random.Generator, oracle: ChallengeOracle | None = None) -> SternProof:
    oracle = oracle or DEFAULT_ORACLE
    rounds = [commit(stmt, w, ck, rng) for _ in range(kappa)]
    cmts = tuple(c for c, _ in rounds)
    ch = np.asarray(oracle.query(fs_point(stmt, cmts, ck.q), kappa), dtype=np.int8)
    rsps = tuple(respond(stmt, st, int(c)) for (_, st), c in zip(rounds, ch))
    return SternProof(cmts, ch, rsps)


def fs_verify(stmt: AbstractStatement, ck: CommitmentKey, proof: SternProof,
              oracle: ChallengeOracle | None = None) -> bool:
    oracle = oracle or DEFAULT_ORACLE
    try:
        kappa = proof.kappa
        if kappa < 1 or len(proof.responses) != kappa or len(proof.challenges) != kappa:
            return False
        expect = np.asarray(oracle.query(fs_point(stmt, proof.commitments, ck.q), kappa))
        if not np.array_equal(expect, np.asarray(proof.challenges)):
            return False
        return all(verify_round(stmt, ck, c, int(ch), r)
                   for c, ch, r in zip(proof.commitments, proof.challenges, proof.responses))
    except Exception:
        return False


# ------------------------------------------------------------- simulator

class SimulationAbort(RuntimeError):
    """The simulator tried to program a point the oracle had already answered."""


def particular_solution(stmt: AbstractStatement, rng: np.random.Generator) -> np.ndarray:
    x1 = solve_block_sparse(stmt.M1, stmt.u1, rng)
    x2 = solve_block_sparse(stmt.M2, stmt.u2, rng)
    return np.concatenate([x1, x2])


def sim_prove(stmt: AbstractStatement, ck: CommitmentKey, kappa: int, rng: np.random.Generator,
              oracle, solution: np.ndarray | None = None) -> SternProof:
    """Proof without a witness; programs ``oracle`` so the challenge matches.

    Each round picks its challenge first and prepares a commitment that can
    be opened for that challenge only.
    """
    ch = rng.integers(1, 4, size=kappa).astype(np.int8)
    rounds = []
    for c in ch:
        if c == 3:
            if solution is None:
                solution = particular_solution(stmt, rng)
            rounds.append(commit(stmt, solution, ck, rng))
        elif c == 1:
            rounds.append(commit(stmt, stmt.codec.sample_valid(rng), ck, rng))
        else:
            w_fake = stmt.codec.sample_valid(rng)
            r = _sample_mask(stmt, rng)
            y1, y2 = stmt.images(stmt.reduce(w_fake + r))
            images = (np.mod(y1 - stmt.u1, stmt.q1), np.mod(y2 - stmt.u2, stmt.q2))
            rounds.append(_commit_with_mask(stmt, w_fake, r, ck, rng, images))
    cmts = tuple(c for c, _ in rounds)
    oracle.program(fs_point(stmt, cmts, ck.q), kappa, ch)
    rsps = tuple(respond(stmt, st, int(c)) for (_, st), c in zip(rounds, ch))
    return SternProof(cmts, ch, rsps)


def _commit_with_mask(stmt, w, r, ck, rng, images) -> tuple[RoundCommitment, ProverState]:
    eta = sample_eta(stmt.codec, rng)
    z = stmt.reduce(w + r)
    perm = stmt.codec.permutation(eta)
    rhos = (ck.random_rho(rng), ck.random_rho(rng), ck.random_rho(rng))
    cmt = RoundCommitment(ck.commit(_c1_data(stmt, eta, *images), rhos[0]),
                          ck.commit(stmt.vec_bytes(r[perm]), rhos[1]),
                          ck.commit(stmt.vec_bytes(z[perm]), rhos[2]))
    return cmt, ProverState(np.asarray(w, dtype=np.int64), r, z, eta, rhos)


# ------------------------------------------------------------- extraction

def extract(stmt: AbstractStatement, ck: CommitmentKey, cmt: RoundCommitment,
            rsp1: Response1, rsp2: Response2, rsp3: Response3) -> np.ndarray:
    """Witness from accepting answers to all three challenges on one commitment."""
    for ch, rsp in ((1, rsp1), (2, rsp2), (3, rsp3)):
        if not verify_round(stmt, ck, cmt, ch, rsp):
            raise ExtractionError(f"response to challenge {ch} does not verify")
    if not etas_equal(rsp2.eta, rsp3.eta):
        raise BindingViolation("C1 opened with two different permutation keys")
    perm = stmt.codec.permutation(rsp2.eta)
    if not np.array_equal(rsp1.t_r, rsp3.z[perm]):
        raise BindingViolation("C2 opened to two different values")
    t_w = np.asarray(rsp1.t_w, dtype=np.int64)
    if not np.array_equal(stmt.reduce(t_w + rsp1.t_r), rsp2.z[perm]):
        raise BindingViolation("C3 opened to two different values")
    w = t_w[invert_perm(perm)]
    if not stmt.holds(w):
        raise ExtractionError("extracted vector does not satisfy the relation")
    return w


# ---------------------------------------------------------- serialization

def encode_proof(stmt: AbstractStatement, ck: CommitmentKey, proof: SternProof) -> bytes:
    w = Writer()
    w.u8(PROOF_VERSION)
    w.u64(proof.kappa)
    for c in proof.commitments:
        w.parts.append(c.to_bytes(ck.q))
    w.parts.append(pack_symbols(np.asarray(proof.challenges, dtype=np.uint8) - 1))
    for ch, rsp in zip(proof.challenges, proof.responses):
        body = Writer()
        if ch == 1:
            body.parts += [pack_trits(rsp.t_w), stmt.vec_bytes(rsp.t_r),
                           pack_bits(rsp.rho2), pack_bits(rsp.rho3)]
        else:
            last = rsp.rho3 if ch == 2 else rsp.rho2
            body.parts += [eta_bytes(stmt.codec, rsp.eta), stmt.vec_bytes(rsp.z),
                           pack_bits(rsp.rho1), pack_bits(last)]
        w.blob(body.getvalue())
    return w.getvalue()


def _read_vec(stmt: AbstractStatement, r: Reader) -> np.ndarray:
    parts = []
    for count, q in ((stmt.L1, stmt.q1), (stmt.L - stmt.L1, stmt.q2)):
        width = _width_for(q - 1)
        raw = np.frombuffer(r.take(count * width), dtype=np.uint8).reshape(count, width)
        vals = np.zeros(count, dtype=np.int64)
        for j in range(width):
            vals |= raw[:, j].astype(np.int64) << (8 * j)
        if count and vals.max() >= q:
            raise DecodeError("entry is not a canonical residue")
        parts.append(vals)
    return np.concatenate(parts)


def decode_proof(stmt: AbstractStatement, ck: CommitmentKey, data: bytes,
                 max_kappa: int = 4096) -> SternProof:
    r = Reader(data)
    return read_proof(stmt, ck, r, max_kappa)


def read_proof(stmt: AbstractStatement, ck: CommitmentKey, r: Reader,
               max_kappa: int = 4096) -> SternProof:
    if r.u8() != PROOF_VERSION:
        raise DecodeError("unsupported proof version")
    kappa = r.u64()
    if not 1 <= kappa <= max_kappa:
        raise DecodeError(f"invalid round count {kappa}")
    cwidth = _width_for(ck.q - 1)
    cmts = []
    for _ in range(kappa):
        vecs = []
        for _ in range(3):
            raw = np.frombuffer(r.take(ck.n * cwidth), dtype=np.uint8).reshape(ck.n, cwidth)
            v = np.zeros(ck.n, dtype=np.int64)
            for j in range(cwidth):
                v |= raw[:, j].astype(np.int64) << (8 * j)
            vecs.append(v)
        cmts.append(RoundCommitment(*vecs))
    sym = unpack_symbols(r.take(-(-kappa // 4)), kappa)
    if np.any(sym == 3):
        raise DecodeError("invalid challenge symbol")
    chs = (sym + 1).astype(np.int8)
    rho_len = -(-ck.m // 8)
    rsps: list[Response] = []
    for ch in chs:
        body = Reader(r.blob())
        if ch == 1:
            t_w = unpack_trits(body.take(-(-stmt.L // 4)), stmt.L)
            t_r = _read_vec(stmt, body)
            rho2 = unpack_bits(body.take(rho_len), ck.m).astype(np.int64)
            rho3 = unpack_bits(body.take(rho_len), ck.m).astype(np.int64)
            rsps.append(Response1(t_w, t_r, rho2, rho3))
        else:
            eta = eta_from_reader(stmt.codec, body)
            z = _read_vec(stmt, body)
            rho1 = unpack_bits(body.take(rho_len), ck.m).astype(np.int64)
            last = unpack_bits(body.take(rho_len), ck.m).astype(np.int64)
            rsps.append(Response2(eta, z, rho1, last) if ch == 2 else Response3(eta, z, rho1, last))
        body.done()
    return SternProof(tuple(cmts), chs, tuple(rsps))
