"""On-disk formats for parameters, keys and signatures.

Each file kind has its own magic tag, so a loader can tell them apart.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Params, mat_mul_mod
from .serialization import DecodeError, Reader, Writer
from .scheme import (MasterDecryptionKey, MasterSecretKey, PublicParams, Signature, UserKey,
                     build_statement)
from .sigcrypt import Ciphertext
from .stern import encode_proof, read_proof
from .trapdoor import make_basis

MAGIC = {
    "params": b"TPPA",
    "pp": b"TPPP",
    "msk": b"TPMS",
    "mdk": b"TPMD",
    "usk": b"TPUK",
    "signature": b"TPSG",
}
KIND_BY_MAGIC = {v: k for k, v in MAGIC.items()}

_DECODE_FAILURES = (ValueError, ArithmeticError, IndexError, KeyError, TypeError,
                    np.linalg.LinAlgError)


def _guard(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DecodeError:
            raise
        except _DECODE_FAILURES as exc:
            raise DecodeError(f"malformed {fn.__name__.removeprefix('decode_')}: {exc}") from None
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def file_kind(data: bytes) -> str:
    kind = KIND_BY_MAGIC.get(bytes(data[:4]))
    if kind is None:
        raise DecodeError("unknown file kind")
    return kind


# ----------------------------------------------------------------- params

def _write_params(w: Writer, p: Params) -> None:
    w.text(p.name)
    for v in (p.n, p.m, p.q, p.l1, p.l2, p.d, p.B, p.kappa):
        w.u64(v)
    w.u8(int(p.enforce_open_bound))
    w.u8(int(p.s is not None and p.s1 is not None))
    w.f64(p.s or 0.0)
    w.f64(p.s1 or 0.0)
    w.blob(p.ck_seed)


def _read_params(r: Reader) -> Params:
    name = r.text()
    n, m, q, l1, l2, d, B, kappa = (r.u64() for _ in range(8))
    if max(n, m, l1, l2, d, B, kappa) > 1 << 20 or q >= 1 << 40:
        raise DecodeError("parameter value out of supported range")
    enforce = r.u8()
    has_widths = r.u8()
    s, s1 = r.f64(), r.f64()
    seed = r.blob(max_len=32)
    if enforce > 1 or has_widths > 1:
        raise DecodeError("invalid flag byte")
    if has_widths and not (math.isfinite(s) and math.isfinite(s1) and s > 0 and s1 > 0):
        raise DecodeError("invalid Gaussian widths")
    return Params(n, m, q, l1, l2, d, B, kappa, s if has_widths else None,
                  s1 if has_widths else None, seed, name, bool(enforce))


def encode_params(p: Params) -> bytes:
    w = Writer(MAGIC["params"])
    _write_params(w, p)
    return w.getvalue()


@_guard
def decode_params(data: bytes) -> Params:
    r = Reader(data, MAGIC["params"])
    p = _read_params(r)
    r.done()
    return p


# --------------------------------------------------------------------- pp

def encode_pp(pp: PublicParams) -> bytes:
    w = Writer(MAGIC["pp"])
    _write_params(w, pp.params)
    q = pp.params.q
    w.zq(pp.A, q)
    for Ai in pp.A_msg:
        w.zq(Ai, q)
    w.zq(pp.u, q)
    w.zq(pp.B, q)
    w.zq(pp.G1, 2)
    w.zq(pp.G2, 2)
    return w.getvalue()


@_guard
def decode_pp(data: bytes) -> PublicParams:
    r = Reader(data, MAGIC["pp"])
    p = _read_params(r)
    if p.s is None:
        raise DecodeError("public parameters lack Gaussian widths")
    q = p.q
    A = r.zq(q, (p.n, p.m))
    A_msg = tuple(r.zq(q, (p.n, p.m)) for _ in range(p.l + 1))
    u = r.zq(q, (p.n,))
    B = r.zq(q, (p.n, p.m))
    G1 = r.zq(2, (p.n, p.l2)).astype(np.uint8)
    G2 = r.zq(2, (p.n, p.d)).astype(np.uint8)
    r.done()
    return PublicParams(p, A, A_msg, u, B, G1, G2)


# -------------------------------------------------------------- trapdoors

def _encode_basis(kind: str, basis) -> bytes:
    w = Writer(MAGIC[kind])
    w.zq(basis.A, basis.q)
    w.ints(basis.S)
    return w.getvalue()


def _decode_basis(kind: str, data: bytes):
    r = Reader(data, MAGIC[kind])
    start = r.pos
    ndim = r.u8()
    dims = [r.u64() for _ in range(min(ndim, 4))]
    q = r.u64()
    r.pos = start
    A = r.zq()
    if A.ndim != 2 or len(dims) != 2:
        raise DecodeError("matrix expected")
    S = r.ints((A.shape[1], A.shape[1]))
    r.done()
    if np.any(mat_mul_mod(A, S, q)):
        raise DecodeError("basis is not in the kernel lattice of the matrix")
    return make_basis(A, S, q)


def encode_msk(msk: MasterSecretKey) -> bytes:
    return _encode_basis("msk", msk.basis)


@_guard
def decode_msk(data: bytes) -> MasterSecretKey:
    return MasterSecretKey(_decode_basis("msk", data))


def encode_mdk(mdk: MasterDecryptionKey) -> bytes:
    return _encode_basis("mdk", mdk.basis)


@_guard
def decode_mdk(data: bytes) -> MasterDecryptionKey:
    return MasterDecryptionKey(_decode_basis("mdk", data))


# -------------------------------------------------------------------- usk

def encode_usk(usk: UserKey) -> bytes:
    w = Writer(MAGIC["usk"])
    w.zq(usk.ident, 2)
    w.u64(len(usk.certs))
    for pol, v in usk.certs:
        w.zq(pol, 2)
        w.ints(v)
    return w.getvalue()


@_guard
def decode_usk(data: bytes, params: Params | None = None) -> UserKey:
    r = Reader(data, MAGIC["usk"])
    ident = r.zq(2, None if params is None else (params.l1,)).astype(np.uint8)
    count = r.u64()
    if count > r.remaining():
        raise DecodeError("certificate count exceeds input size")
    certs = []
    for _ in range(count):
        pol = r.zq(2, None if params is None else (params.l2,)).astype(np.uint8)
        v = r.ints(None if params is None else (2 * params.m,))
        certs.append((pol, v))
    r.done()
    if ident.ndim != 1 or any(p.ndim != 1 or v.ndim != 1 for p, v in certs):
        raise DecodeError("identity, policies and certificates must be vectors")
    return UserKey(ident, tuple(certs))


# -------------------------------------------------------------- signature

def _layout_statement(pp: PublicParams, ovk: bytes, ct: Ciphertext):
    # proof layout depends only on the codec and moduli, not on the message
    return build_statement(pp, ovk, ct, np.zeros(pp.params.n, dtype=np.uint8))


def encode_signature(pp: PublicParams, sig: Signature) -> bytes:
    q = pp.params.q
    w = Writer(MAGIC["signature"])
    w.blob(sig.ovk)
    w.zq(sig.ct.c1, q)
    w.zq(sig.ct.c2, q)
    stmt = _layout_statement(pp, sig.ovk, sig.ct)
    w.blob(encode_proof(stmt, pp.ck, sig.proof))
    w.blob(sig.ots_sig)
    return w.getvalue()


@_guard
def decode_signature(data: bytes, pp: PublicParams) -> Signature:
    p = pp.params
    r = Reader(data, MAGIC["signature"])
    ovk = r.blob(max_len=1 << 20)
    c1 = r.zq(p.q, (p.m,))
    c2 = r.zq(p.q, (p.l1,))
    ct = Ciphertext(c1, c2)
    stmt = _layout_statement(pp, ovk, ct)
    body = Reader(r.blob())
    proof = read_proof(stmt, pp.ck, body)
    body.done()
    ots_sig = r.blob(max_len=1 << 20)
    r.done()
    return Signature(ovk, ct, proof, ots_sig)
