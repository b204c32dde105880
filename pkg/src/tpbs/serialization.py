"""Length-checked binary encoding.

Every object starts with a 4-byte magic tag and a version byte.  Integers
are 8-byte little-endian unsigned; arrays carry their dimensions followed by
entries at the minimal byte width (residues as-is, signed values zig-zag
encoded).  Readers validate every length against the remaining input before
allocating, so malformed input raises ``DecodeError`` and nothing else.
"""

from __future__ import annotations

import struct

import numpy as np

VERSION = 1

MAGIC_ZQ = b"TPZQ"
MAGIC_INT = b"TPZI"


class DecodeError(ValueError):
    """Input bytes do not describe a well-formed object."""


def _width_for(max_value: int) -> int:
    return max(1, (int(max_value).bit_length() + 7) // 8)


_NATIVE = {1: "<u1", 2: "<u2", 4: "<u4", 8: "<u8"}


def _pack_unsigned(values: np.ndarray, width: int) -> bytes:
    if width in _NATIVE:
        return np.asarray(values).astype(_NATIVE[width], copy=False).tobytes()
    flat = np.ascontiguousarray(values, dtype="<u8").reshape(-1)
    if width == 8:
        return flat.tobytes()
    return np.ascontiguousarray(flat.view(np.uint8).reshape(-1, 8)[:, :width]).tobytes()


def _unpack_unsigned(raw: bytes, count: int, width: int) -> np.ndarray:
    arr = np.frombuffer(raw, dtype=np.uint8).reshape(count, width)
    if width == 8:
        return arr.copy().view("<u8").reshape(count).astype(np.uint64)
    out = np.zeros((count, 8), dtype=np.uint8)
    out[:, :width] = arr
    return out.view("<u8").reshape(count)


def zigzag(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    return ((x << 1) ^ (x >> 63)).astype(np.uint64)


def unzigzag(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    return ((z >> np.uint64(1)).astype(np.int64)) ^ -((z & np.uint64(1)).astype(np.int64))


class Writer:
    def __init__(self, magic: bytes | None = None) -> None:
        self.parts: list[bytes] = []
        if magic is not None:
            self.header(magic)

    def header(self, magic: bytes) -> None:
        if len(magic) != 4:
            raise ValueError("magic tags are 4 bytes")
        self.parts.append(magic + bytes([VERSION]))

    def u8(self, x: int) -> None:
        self.parts.append(struct.pack("<B", x))

    def u64(self, x: int) -> None:
        self.parts.append(struct.pack("<Q", x))

    def f64(self, x: float) -> None:
        self.parts.append(struct.pack("<d", x))

    def blob(self, data: bytes) -> None:
        self.u64(len(data))
        self.parts.append(bytes(data))

    def text(self, s: str) -> None:
        self.blob(s.encode())

    def _dims(self, a: np.ndarray) -> None:
        self.u8(a.ndim)
        for d in a.shape:
            self.u64(d)

    def zq(self, a: np.ndarray, q: int) -> None:
        """Array of residues mod q."""
        a = np.asarray(a, dtype=np.int64)
        if a.size and (a.min() < 0 or a.max() >= q):
            raise ValueError("entries must be canonical residues in [0, q)")
        self._dims(a)
        self.u64(q)
        self.parts.append(_pack_unsigned(a, _width_for(q - 1)))

    def ints(self, a: np.ndarray) -> None:
        """Array of signed integers (zig-zag, minimal width recorded in one byte)."""
        a = np.asarray(a, dtype=np.int64)
        z = zigzag(a)
        width = _width_for(int(z.max()) if z.size else 0)
        self._dims(a)
        self.u8(width)
        self.parts.append(_pack_unsigned(z, width))

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class Reader:
    def __init__(self, data: bytes, magic: bytes | None = None) -> None:
        self.data = memoryview(bytes(data))
        self.pos = 0
        if magic is not None:
            self.header(magic)

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def take(self, n: int) -> bytes:
        if n < 0 or n > self.remaining():
            raise DecodeError(f"truncated input: need {n} bytes at offset {self.pos}, "
                              f"{self.remaining()} left")
        out = self.data[self.pos:self.pos + n].tobytes()
        self.pos += n
        return out

    def header(self, magic: bytes) -> None:
        got = self.take(4)
        if got != magic:
            raise DecodeError(f"bad magic tag {got!r}, expected {magic!r}")
        version = self.u8()
        if version != VERSION:
            raise DecodeError(f"unsupported version {version}")

    def u8(self) -> int:
        return self.take(1)[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def blob(self, max_len: int | None = None) -> bytes:
        n = self.u64()
        if max_len is not None and n > max_len:
            raise DecodeError(f"field length {n} exceeds limit {max_len}")
        return self.take(n)

    def text(self) -> str:
        try:
            return self.blob().decode()
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid text field: {exc}") from None

    def _dims(self) -> tuple[int, ...]:
        ndim = self.u8()
        if ndim > 4:
            raise DecodeError(f"unsupported array rank {ndim}")
        dims = tuple(self.u64() for _ in range(ndim))
        if any(d > self.remaining() * 8 + 1 for d in dims):
            raise DecodeError("array dimension exceeds input size")
        return dims

    def _count(self, dims: tuple[int, ...], width: int) -> int:
        count = 1
        for d in dims:
            count *= d
        if count * width > self.remaining():
            raise DecodeError(f"array of {count} entries does not fit in the remaining input")
        return count

    def zq(self, q: int | None = None, shape: tuple[int, ...] | None = None) -> np.ndarray:
        dims = self._dims()
        modulus = self.u64()
        if modulus < 1 or modulus >= 1 << 62:
            raise DecodeError(f"invalid modulus {modulus}")
        if q is not None and modulus != q:
            raise DecodeError(f"modulus {modulus} does not match expected {q}")
        if shape is not None and dims != tuple(shape):
            raise DecodeError(f"shape {dims} does not match expected {tuple(shape)}")
        width = _width_for(modulus - 1)
        count = self._count(dims, width)
        vals = _unpack_unsigned(self.take(count * width), count, width)
        if count and vals.max() >= modulus:
            raise DecodeError("entry is not a canonical residue")
        return vals.astype(np.int64).reshape(dims)

    def ints(self, shape: tuple[int, ...] | None = None) -> np.ndarray:
        dims = self._dims()
        if shape is not None and dims != tuple(shape):
            raise DecodeError(f"shape {dims} does not match expected {tuple(shape)}")
        width = self.u8()
        if not 1 <= width <= 8:
            raise DecodeError(f"invalid entry width {width}")
        count = self._count(dims, width)
        vals = _unpack_unsigned(self.take(count * width), count, width)
        return unzigzag(vals).reshape(dims)

    def done(self) -> None:
        if self.remaining():
            raise DecodeError(f"{self.remaining()} trailing bytes")


def encode_zq_matrix(M: np.ndarray, q: int) -> bytes:
    w = Writer(MAGIC_ZQ)
    w.zq(M, q)
    return w.getvalue()


def decode_zq_matrix(data: bytes) -> tuple[np.ndarray, int]:
    r = Reader(data, MAGIC_ZQ)
    # peek the modulus: dims come first
    start = r.pos
    ndim = r.u8()
    for _ in range(min(ndim, 4)):
        r.u64()
    q = r.u64()
    r.pos = start
    M = r.zq()
    r.done()
    return M, q


def encode_int_matrix(S: np.ndarray) -> bytes:
    w = Writer(MAGIC_INT)
    w.ints(S)
    return w.getvalue()


def decode_int_matrix(data: bytes) -> np.ndarray:
    r = Reader(data, MAGIC_INT)
    S = r.ints()
    r.done()
    return S


def pack_symbols(symbols: np.ndarray, bits: int = 2) -> bytes:
    """Pack small non-negative symbols (< 2**bits) little-end first within each byte."""
    sym = np.asarray(symbols, dtype=np.uint8)
    per = 8 // bits
    pad = (-sym.size) % per
    sym = np.concatenate([sym, np.zeros(pad, dtype=np.uint8)]).reshape(-1, per)
    shifts = (np.arange(per) * bits).astype(np.uint8)
    return (sym << shifts).sum(axis=1).astype(np.uint8).tobytes()


def unpack_symbols(data: bytes, count: int, bits: int = 2) -> np.ndarray:
    per = 8 // bits
    need = -(-count // per)
    if len(data) != need:
        raise DecodeError(f"packed field has {len(data)} bytes, expected {need}")
    raw = np.frombuffer(data, dtype=np.uint8)
    shifts = (np.arange(per) * bits).astype(np.uint8)
    sym = (raw[:, None] >> shifts) & ((1 << bits) - 1)
    return sym.reshape(-1)[:count].astype(np.uint8)


def pack_trits(t: np.ndarray) -> bytes:
    return pack_symbols(np.mod(np.asarray(t, dtype=np.int64), 3))


def unpack_trits(data: bytes, count: int) -> np.ndarray:
    sym = unpack_symbols(data, count)
    if np.any(sym == 3):
        raise DecodeError("invalid trit symbol")
    return np.where(sym == 2, -1, sym).astype(np.int8)


def pack_bits(b: np.ndarray) -> bytes:
    return np.packbits(np.asarray(b, dtype=np.uint8), bitorder="little").tobytes()


def unpack_bits(data: bytes, count: int) -> np.ndarray:
    if len(data) != -(-count // 8):
        raise DecodeError("packed bit field has the wrong length")
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")[:count]
