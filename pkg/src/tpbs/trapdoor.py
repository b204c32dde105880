"""Gadget trapdoors, basis extension and Gaussian preimage sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .core import DimensionError, ceil_log2, inverse_mod, mat_mul_mod, readonly, row_reduce_solve

KLEIN_TAIL = 6.0


class WidthError(ValueError):
    """Requested Gaussian width is below the smoothing requirement of the basis."""


def gadget_vector(q: int) -> np.ndarray:
    return 1 << np.arange(ceil_log2(q), dtype=np.int64)


def gadget_basis(q: int) -> np.ndarray:
    """Short basis of the lattice {x : <g, x> = 0 mod q} for g = (1, 2, ..., 2^(k-1))."""
    k = ceil_log2(q)
    S = np.zeros((k, k), dtype=np.int64)
    for j in range(k - 1):
        S[j, j] = 2
        S[j + 1, j] = -1
    S[:, k - 1] = [(q >> j) & 1 for j in range(k)]
    return S


def bit_decompose(Y: np.ndarray, q: int) -> np.ndarray:
    """G^{-1}: binary digits of each entry, stacked so that G @ X = Y (G = I_n (x) g)."""
    k = ceil_log2(q)
    Y = np.mod(np.asarray(Y, dtype=np.int64), q)
    digits = (Y[:, None, :] >> np.arange(k)[None, :, None]) & 1
    return digits.reshape(Y.shape[0] * k, Y.shape[1])


def gram_schmidt(S: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Floating-point Gram-Schmidt of the columns of S.

    Returns (gs_rows, squared_norms) where ``gs_rows[i]`` is the i-th
    orthogonalized column.
    """
    Q, R = np.linalg.qr(np.asarray(S, dtype=np.float64))
    diag = np.diag(R)
    gs_rows = (Q * diag[None, :]).T.copy()
    return gs_rows, diag * diag


def gram_schmidt_exact(S: np.ndarray | Sequence[Sequence[int]]) -> list[list[Fraction]]:
    """Exact rational Gram-Schmidt of the columns of S (small dimensions only)."""
    S = np.asarray(S, dtype=object)
    cols = [[Fraction(int(x)) for x in S[:, j]] for j in range(S.shape[1])]
    out: list[list[Fraction]] = []
    sq: list[Fraction] = []
    for b in cols:
        v = list(b)
        for u, uu in zip(out, sq):
            if uu == 0:
                continue
            mu = sum(x * y for x, y in zip(b, u)) / uu
            if mu:
                v = [x - mu * y for x, y in zip(v, u)]
        out.append(v)
        sq.append(sum(x * x for x in v))
    return out


def gs_sqnorms_exact(S: np.ndarray) -> list[Fraction]:
    """Exact squared Gram-Schmidt norms via fraction-free elimination on the Gram matrix."""
    S = np.asarray(S, dtype=np.int64)
    cols = [[int(x) for x in S[:, j]] for j in range(S.shape[1])]
    dim = len(cols)
    gram = [[sum(a * b for a, b in zip(cols[i], cols[j])) for j in range(dim)] for i in range(dim)]
    minors = [1]
    prev = 1
    M = gram
    for k in range(dim):
        piv = M[k][k]
        if piv == 0:
            raise ValueError("columns are linearly dependent")
        minors.append(piv)
        for i in range(k + 1, dim):
            row_i, row_k = M[i], M[k]
            mik = row_i[k]
            for j in range(k + 1, dim):
                row_i[j] = (piv * row_i[j] - mik * row_k[j]) // prev
        prev = piv
    return [Fraction(minors[i + 1], minors[i]) for i in range(dim)]


@dataclass(frozen=True, eq=False)
class LatticeBasis:
    """A basis (columns of ``S``) of {x : A x = 0 mod q} with cached Gram-Schmidt data."""

    A: np.ndarray
    S: np.ndarray
    q: int
    gs_rows: np.ndarray = field(repr=False)
    gs_sq: np.ndarray = field(repr=False)
    pivots: np.ndarray = field(repr=False)
    pivot_inverse: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.S.shape[1]

    @property
    def gs_norm(self) -> float:
        """Largest Gram-Schmidt norm."""
        return float(np.sqrt(self.gs_sq.max()))

    def preimage(self, Y: np.ndarray) -> np.ndarray:
        """Some integer X (not short) with A X = Y mod q; Y may be a vector or matrix."""
        Y = np.asarray(Y, dtype=np.int64)
        vec = Y.ndim == 1
        Y2 = Y[:, None] if vec else Y
        X = np.zeros((self.dim, Y2.shape[1]), dtype=np.int64)
        X[self.pivots] = mat_mul_mod(self.pivot_inverse, Y2, self.q)
        return X[:, 0] if vec else X

    def babai_reduce(self, X: np.ndarray) -> np.ndarray:
        """Shift X by lattice vectors so its entries become small (round-off against S)."""
        Sf = self.S.astype(np.float64)
        coeff = np.rint(np.linalg.solve(Sf, X.astype(np.float64)))
        shift = Sf @ coeff
        # integer-valued floats stay exact below 2^53
        if np.abs(coeff).max(initial=0) * np.abs(Sf).sum(axis=1).max() >= 2.0 ** 52:
            return X - self.S @ coeff.astype(np.int64)
        return X - shift.astype(np.int64)


def _pivot_data(A: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray]:
    n = A.shape[0]
    _, piv = row_reduce_solve(A, np.zeros(n, dtype=np.int64), q,
                              column_order=np.arange(A.shape[1]))
    if piv.size != n:
        raise ValueError("matrix does not have full row rank mod q")
    piv = np.sort(piv)
    sub = A[:, piv]
    inv = np.zeros((n, n), dtype=np.int64)
    for j in range(n):
        e = np.zeros(n, dtype=np.int64)
        e[j] = 1
        inv[:, j] = row_reduce_solve(sub, e, q, column_order=np.arange(n))[0]
    return piv, inv


def make_basis(A: np.ndarray, S: np.ndarray, q: int,
               gs: tuple[np.ndarray, np.ndarray] | None = None) -> LatticeBasis:
    gs_rows, gs_sq = gram_schmidt(S) if gs is None else gs
    piv, inv = _pivot_data(A, q)
    A = np.array(A, dtype=np.int64)
    S = np.array(S, dtype=np.int64)
    readonly(A, S, gs_rows, gs_sq, piv, inv)
    return LatticeBasis(A, S, q, gs_rows, gs_sq, piv, inv)


@dataclass(frozen=True, eq=False)
class TrapdoorPair:
    basis: LatticeBasis
    quality_bound: float

    @property
    def A(self) -> np.ndarray:
        return self.basis.A

    @property
    def S(self) -> np.ndarray:
        return self.basis.S


def trap_gen(n: int, m: int, q: int, rng: np.random.Generator) -> TrapdoorPair:
    """A = [A_bar | G - A_bar R] with a short basis of its kernel lattice.

    The basis is [[I, R], [0, I]] @ [[I, 0], [W, S_G]] with G W = -A_bar,
    reordered so the gadget columns come first.
    """
    k = ceil_log2(q)
    w = n * k
    m_bar = m - w
    if m_bar < w:
        raise DimensionError(f"need m >= 2n*ceil(log2 q) = {2 * w}, got {m}")
    A_bar = rng.integers(0, q, size=(n, m_bar), dtype=np.int64)
    R = rng.choice(np.array([-1, 0, 0, 1], dtype=np.int64), size=(m_bar, w))
    G = np.kron(np.eye(n, dtype=np.int64), gadget_vector(q)[None, :])
    A = np.concatenate([A_bar, np.mod(G - mat_mul_mod(A_bar, R, q), q)], axis=1)
    S_G = np.kron(np.eye(n, dtype=np.int64), gadget_basis(q))
    W = bit_decompose(-A_bar, q)
    Rf = R.astype(np.float64)
    RW = (Rf @ W.astype(np.float64)).astype(np.int64)
    RSG = (Rf @ S_G.astype(np.float64)).astype(np.int64)
    top = np.concatenate([RSG, np.eye(m_bar, dtype=np.int64) + RW], axis=1)
    bottom = np.concatenate([S_G, W], axis=1)
    S = np.concatenate([top, bottom], axis=0)
    bound = (np.linalg.norm(Rf, 2) + 1.0) * math.sqrt(5.0)
    return TrapdoorPair(make_basis(A, S, q), float(bound))


def ext_basis(basis: LatticeBasis, A_ext: np.ndarray) -> LatticeBasis:
    """Basis of the kernel lattice of A_ext = [A | A_plus] with the same Gram-Schmidt norm.

    S' = [[S, W], [0, I]] with A W = -A_plus; its Gram-Schmidt vectors are
    those of S padded with zeros followed by unit vectors.
    """
    q = basis.q
    A_ext = np.asarray(A_ext, dtype=np.int64)
    dim = basis.dim
    if A_ext.shape[0] != basis.A.shape[0] or A_ext.shape[1] < dim:
        raise DimensionError("extended matrix must contain A as its left block")
    if not np.array_equal(np.mod(A_ext[:, :dim], q), basis.A):
        raise ValueError("left block of the extended matrix differs from A")
    extra = A_ext.shape[1] - dim
    W = basis.babai_reduce(basis.preimage(np.mod(-A_ext[:, dim:], q)))
    S_ext = np.block([[basis.S, W],
                      [np.zeros((extra, dim), dtype=np.int64), np.eye(extra, dtype=np.int64)]])
    gs_rows = np.zeros((dim + extra, dim + extra))
    gs_rows[:dim, :dim] = basis.gs_rows
    gs_rows[dim:, dim:] = np.eye(extra)
    gs_sq = np.concatenate([basis.gs_sq, np.ones(extra)])
    A_ext = np.mod(A_ext, q)
    S_ext.flags.writeable = False
    readonly(A_ext, gs_rows, gs_sq)
    # pivots of A remain valid for the extension
    return LatticeBasis(A_ext, S_ext, q, gs_rows, gs_sq, basis.pivots, basis.pivot_inverse)


def smoothing_factor(dim: int) -> float:
    return math.sqrt(2.0 * math.log(2.0 * dim))


def sample_d(basis: LatticeBasis, u: np.ndarray, s: float, rng: np.random.Generator,
             tail_factor: float = KLEIN_TAIL) -> np.ndarray:
    """x with A x = u mod q, distributed close to a discrete Gaussian of width s."""
    need = basis.gs_norm * smoothing_factor(basis.dim)
    if s < need:
        raise WidthError(f"width {s:.3f} below ||S~|| * sqrt(2 ln(2 dim)) = {need:.3f}")
    u = np.asarray(u, dtype=np.int64)
    if u.shape != (basis.A.shape[0],):
        raise DimensionError("target length must equal the row count of A")
    t = basis.preimage(u)
    v = kernels.klein(basis.S.T, basis.gs_rows, basis.gs_sq, float(s), t.astype(np.float64),
                      float(tail_factor), rng)
    x = t - v
    if not np.array_equal(mat_mul_mod(basis.A, x, basis.q), np.mod(u, basis.q)):
        raise AssertionError("preimage sampler left the target coset")
    return x


def sample_d_matrix(basis: LatticeBasis, U: np.ndarray, s: float,
                    rng: np.random.Generator) -> np.ndarray:
    return np.stack([sample_d(basis, U[:, j], s, rng) for j in range(U.shape[1])], axis=1)


def pivot_inverse_check(basis: LatticeBasis) -> bool:
    sub = basis.A[:, basis.pivots]
    return np.array_equal(mat_mul_mod(sub, basis.pivot_inverse, basis.q),
                          np.eye(sub.shape[0], dtype=np.int64))


__all__ = ["LatticeBasis", "TrapdoorPair", "WidthError", "trap_gen", "ext_basis", "sample_d",
           "sample_d_matrix", "gram_schmidt", "gram_schmidt_exact", "gs_sqnorms_exact",
           "gadget_basis", "gadget_vector", "bit_decompose", "smoothing_factor", "inverse_mod"]
