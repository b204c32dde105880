"""Integer decompositions, witness encodings and the permutations acting on them.

Encodings map short integers to longer {-1,0,1} vectors whose validity is
preserved, and only preserved, by a family of position permutations:

* ``enc2(z)`` sends each bit to the pair ``[1 - z, z]``; ``perm2`` with key b
  maps ``enc2(z)`` to ``enc2(z xor b)``;
* ``enc3(z)`` sends each trit to ``[[z+1], [z], [z-1]]`` (centered mod 3);
  ``perm3`` with key e maps ``enc3(z)`` to ``enc3([z+e])``;
* ``ext(t, z)`` combines a bit and a trit into six entries; ``perm6`` with
  keys (b, e) maps ``ext(t, z)`` to ``ext(t xor b, [z+e])``.

Every permutation is returned as an index array ``idx`` to be applied as
``v[idx]``, which lets callers compose and invert them cheaply.
"""

from __future__ import annotations

import numpy as np

from .core import gadget_weights


def centered3(x) -> np.ndarray:
    """Representative of x mod 3 in {-1, 0, 1}."""
    return (np.mod(np.asarray(x, dtype=np.int64) + 1, 3) - 1).astype(np.int8)


# ------------------------------------------------------------- decompositions

def idec(a: int | np.ndarray, B: int) -> np.ndarray:
    """Greedy binary-like digits of 0 <= a <= B against the gadget weights."""
    w = gadget_weights(B)
    a = np.asarray(a, dtype=np.int64)
    if np.any(a < 0) or np.any(a > B):
        raise ValueError(f"idec expects values in [0, {B}]")
    rest = a.copy()
    digits = []
    for wj in w:
        take = rest >= wj
        digits.append(take.astype(np.int8))
        rest = rest - take * wj
    return np.stack(digits, axis=-1)


def vdec(a: np.ndarray, B: int) -> np.ndarray:
    """Signed per-coordinate decomposition; the last axis of length m becomes m * delta_B."""
    a = np.asarray(a, dtype=np.int64)
    if np.any(np.abs(a) > B):
        raise ValueError(f"vdec expects entries bounded by {B} in absolute value")
    d = idec(np.abs(a), B) * np.sign(a)[..., None].astype(np.int8)
    return d.reshape(*a.shape[:-1], a.shape[-1] * d.shape[-1])


def vrec(y: np.ndarray, B: int) -> np.ndarray:
    """Inverse of vdec: multiply by the gadget matrix."""
    w = gadget_weights(B)
    y = np.asarray(y, dtype=np.int64)
    return y.reshape(*y.shape[:-1], -1, w.size) @ w


# ------------------------------------------------------------------ encodings

def enc2(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.int8)
    return np.stack([1 - z, z], axis=-1).reshape(*z.shape[:-1], 2 * z.shape[-1])


def enc3(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64)
    return np.stack([centered3(z + 1), centered3(z), centered3(z - 1)], axis=-1).reshape(
        *z.shape[:-1], 3 * z.shape[-1])


def ext(t: int, z: int) -> np.ndarray:
    return ext_mix(np.array([t]), np.array([z]))


def ext_mix(t: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Concatenation of ext(t_i, z_k) over i (outer) and k (inner)."""
    t = np.asarray(t, dtype=np.int8)[:, None, None]
    tri = enc3(np.asarray(z, dtype=np.int64)[:, None]).reshape(1, -1, 3)
    out = np.empty((t.shape[0], tri.shape[1], 6), dtype=np.int8)
    out[..., 0::2] = (1 - t) * tri
    out[..., 1::2] = t * tri
    return out.reshape(-1)


def dec2(v: np.ndarray) -> np.ndarray | None:
    """Inverse of enc2, or None when v is not a valid encoding."""
    v = np.asarray(v)
    if v.size % 2:
        return None
    pairs = v.reshape(-1, 2)
    z = pairs[:, 1]
    if np.any((z != 0) & (z != 1)) or np.any(pairs[:, 0] != 1 - z):
        return None
    return z.astype(np.uint8)


def dec3(v: np.ndarray) -> np.ndarray | None:
    v = np.asarray(v)
    if v.size % 3:
        return None
    tri = v.reshape(-1, 3).astype(np.int64)
    z = tri[:, 1]
    if np.any(np.abs(z) > 1) or not np.array_equal(enc3(z[:, None]).reshape(-1, 3), tri):
        return None
    return z.astype(np.int8)


def dec_ext(v: np.ndarray, m1: int, m2: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Recover (t, z) from ext_mix(t, z), or None if v is not of that form."""
    v = np.asarray(v)
    if v.size != 6 * m1 * m2:
        return None
    blocks = v.reshape(m1, m2, 6).astype(np.int64)
    t = np.any(blocks[..., 1::2] != 0, axis=2)
    if m2 and np.any(t != t[:, :1]):
        return None
    tvec = t[:, 0] if m2 else np.zeros(m1, dtype=bool)
    mid = np.where(t, blocks[..., 3], blocks[..., 2])
    if m1 and np.any(mid != mid[:1, :]):
        return None
    zvec = mid[0] if m1 else np.zeros(m2, dtype=np.int64)
    if np.any(np.abs(zvec) > 1):
        return None
    if not np.array_equal(ext_mix(tvec.astype(np.int8), zvec), v.astype(np.int8).reshape(-1)):
        return None
    return tvec.astype(np.uint8), zvec.astype(np.int8)


# --------------------------------------------------------------- permutations

def perm2(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=np.int64)
    base = 2 * np.arange(b.size)
    return np.stack([base + b, base + 1 - b], axis=1).reshape(-1)


def perm3(e: np.ndarray) -> np.ndarray:
    e = np.asarray(e, dtype=np.int64)
    base = 3 * np.arange(e.size)
    cols = [base + centered3(-e + shift).astype(np.int64) + 1 for shift in (-1, 0, 1)]
    return np.stack(cols, axis=1).reshape(-1)


def _perm6_offsets(b: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Offsets (in 0..5) for broadcast keys b, e; position of (c, j) is 2(j+1)+c."""
    b = np.asarray(b, dtype=np.int64)
    e = np.asarray(e, dtype=np.int64)
    cols = []
    for shift in (-1, 0, 1):
        j = centered3(-e + shift).astype(np.int64)
        cols.append(2 * (j + 1) + b)
        cols.append(2 * (j + 1) + 1 - b)
    return np.stack(cols, axis=-1)


def perm6(b: int, e: int) -> np.ndarray:
    return _perm6_offsets(np.array(b), np.array(e)).reshape(-1)


def perm_mix(b: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Block permutation applying perm6(b_i, e_k) to block (i, k) of ext_mix."""
    b = np.asarray(b, dtype=np.int64)
    e = np.asarray(e, dtype=np.int64)
    offs = _perm6_offsets(b[:, None], e[None, :])
    base = 6 * np.arange(b.size * e.size).reshape(b.size, e.size)
    return (base[..., None] + offs).reshape(-1)


def apply_perm(idx: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.asarray(v)[idx]


def invert_perm(idx: np.ndarray) -> np.ndarray:
    inv = np.empty_like(idx)
    inv[idx] = np.arange(idx.size)
    return inv
