"""Quantized-phase orthonormal candidate beams for a half-wavelength ULA."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .geometry import steering_vector


class Side(str, Enum):
    BS = "BS"
    UE = "UE"


@dataclass(frozen=True, eq=False)
class Codebook:
    """Columns of ``matrix`` are the N candidate beams of one array."""

    matrix: np.ndarray
    side: Side

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def grid_angles(self) -> np.ndarray:
        return grid_angles(self.n)


def quantized_phase_set(n: int) -> np.ndarray:
    """The N phase-shifter values (1/sqrt(N)) exp(j*pi*(-1 + 2k/N)), k = 0..N-1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n)
    return np.exp(1j * np.pi * (-1.0 + 2.0 * k / n)) / np.sqrt(n)


def grid_angles(n: int) -> np.ndarray:
    # arccos branch in [0, pi]
    return np.arccos(-1.0 + 2.0 * np.arange(n) / n)


@lru_cache(maxsize=None)
def _codebook_matrix(n: int) -> np.ndarray:
    cols = [steering_vector(eps, n).entries for eps in grid_angles(n)]
    m = np.stack(cols, axis=1)
    m.setflags(write=False)
    return m


def build_codebook(n: int, side: Side | str = Side.BS) -> Codebook:
    """Candidate beam matrix; column k (0-based) steers to arccos(-1 + 2k/N)."""
    if n < 2:
        raise ValueError("codebook needs n >= 2")
    return Codebook(_codebook_matrix(n), Side(side))
