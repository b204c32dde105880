"""Reference implementations of the sampling kernels (numpy, no compilation).

Both backends consume the injected generator identically: uniforms are drawn
in blocks of ``BLOCK`` doubles and leftovers are discarded when a call ends.
"""

from __future__ import annotations

import math

import numpy as np

BLOCK = 512
MAX_TRIES = 1_000_000
BACKEND = "python"


class SamplerFailure(RuntimeError):
    """The rejection sampler exceeded its retry cap."""


class _Uniforms:
    __slots__ = ("rng", "buf", "pos")

    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng
        self.buf = rng.random(BLOCK)
        self.pos = 0

    def next(self) -> float:
        if self.pos == BLOCK:
            self.buf = self.rng.random(BLOCK)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return float(u)


def _one(width: float, center: float, tail: float, uni: _Uniforms) -> int:
    if width <= 0.0:
        return math.floor(center + 0.5)
    lo = math.ceil(center - tail)
    hi = math.floor(center + tail)
    if hi < lo:
        return math.floor(center + 0.5)
    span = hi - lo + 1
    scale = math.pi / (width * width)
    for _ in range(MAX_TRIES):
        off = int(uni.next() * span)
        if off >= span:
            off = span - 1
        x = lo + off
        if uni.next() < math.exp(-scale * (x - center) * (x - center)):
            return x
    raise SamplerFailure(f"no sample accepted after {MAX_TRIES} tries (s={width}, c={center})")


def sample_z_batch(widths: np.ndarray, centers: np.ndarray, tails: np.ndarray,
                   rng: np.random.Generator) -> np.ndarray:
    widths = np.ascontiguousarray(widths, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    tails = np.ascontiguousarray(tails, dtype=np.float64)
    uni = _Uniforms(rng)
    out = np.empty(widths.size, dtype=np.int64)
    for i in range(widths.size):
        out[i] = _one(widths[i], centers[i], tails[i], uni)
    return out


def klein(basis_rows: np.ndarray, gs_rows: np.ndarray, gs_sq: np.ndarray, s: float,
          center: np.ndarray, tail_factor: float, rng: np.random.Generator) -> np.ndarray:
    """Randomized nearest plane: a lattice vector distributed close to D_{L, s, center}.

    ``basis_rows[i]`` is the i-th basis vector and ``gs_rows[i]`` its
    Gram-Schmidt component; vectors are processed last to first.
    """
    dim = basis_rows.shape[0]
    c = np.array(center, dtype=np.float64)
    v = np.zeros(basis_rows.shape[1], dtype=np.int64)
    uni = _Uniforms(rng)
    for i in range(dim - 1, -1, -1):
        ci = float(np.dot(c, gs_rows[i])) / gs_sq[i]
        si = s / math.sqrt(gs_sq[i])
        z = _one(si, ci, tail_factor * si, uni)
        if z:
            c -= z * basis_rows[i]
            v += z * basis_rows[i]
    return v
