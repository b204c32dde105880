"""Discrete Gaussian sampling over the integers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .kernels import SamplerFailure

__all__ = ["GaussParams", "SamplerFailure", "sample_z", "sample_chi", "sample_vec", "chi_vec"]


@dataclass(frozen=True)
class GaussParams:
    """Width ``s``, center ``c`` and tail cut ``tail`` (samples satisfy |x - c| <= tail)."""

    s: float
    c: float = 0.0
    tail: float | None = None

    def __post_init__(self) -> None:
        if self.s < 0:
            raise ValueError("width must be non-negative")
        if self.tail is not None and self.tail < 0:
            raise ValueError("tail cut must be non-negative")

    @property
    def tail_cut(self) -> float:
        # default: 12 widths, far beyond any practically observable mass
        return 12.0 * self.s if self.tail is None else float(self.tail)


def sample_z(gp: GaussParams, rng: np.random.Generator) -> int:
    """One draw from D_{Z, s, c} restricted to |x - c| <= tail cut."""
    return int(kernels.sample_z_batch(np.array([gp.s]), np.array([gp.c]),
                                      np.array([gp.tail_cut]), rng)[0])


def sample_vec(gp: GaussParams, length: int, rng: np.random.Generator) -> np.ndarray:
    """Independent draws, one per coordinate."""
    return kernels.sample_z_batch(np.full(length, gp.s), np.full(length, gp.c),
                                  np.full(length, gp.tail_cut), rng)


def sample_chi(B: int, rng: np.random.Generator) -> int:
    """Width-B discrete Gaussian truncated to [-B, B]."""
    return sample_z(GaussParams(float(B), 0.0, float(B)), rng)


def chi_vec(B: int, length: int, rng: np.random.Generator) -> np.ndarray:
    return sample_vec(GaussParams(float(B), 0.0, float(B)), length, rng)
