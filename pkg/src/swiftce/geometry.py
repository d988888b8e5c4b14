"""Sparse geometric mmWave channels over half-wavelength ULAs.

Matrices are dense, and ``vec`` is column stacking throughout, so that
``vec(A @ B @ C) == kron(C.T, A) @ vec(B)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import ConfigurationError

if TYPE_CHECKING:
    from .codebook import Codebook

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class SystemDims:
    n_bs: int = 32
    n_ue: int = 16
    r_bs: int = 8
    r_ue: int = 4
    n_users: int = 1

    def __post_init__(self):
        if self.n_bs < 2 or self.n_ue < 2:
            raise ConfigurationError("arrays need at least two elements")
        if not 1 <= self.r_bs <= self.n_bs or not 1 <= self.r_ue <= self.n_ue:
            raise ConfigurationError("RF chain counts must lie in [1, N]")
        if self.n_users < 1:
            raise ConfigurationError("n_users must be >= 1")

    @property
    def n_virtual(self) -> int:
        return self.n_bs * self.n_ue

    @property
    def t_max(self) -> int:
        """Timeslots used by the exhaustive sweep."""
        return self.n_bs * self.n_ue // self.r_ue

    @property
    def t_u(self) -> int:
        return max(1, self.n_ue // self.r_ue)


@dataclass(frozen=True)
class PathParameters:
    alpha: complex
    aod: float
    aoa: float

    def __post_init__(self):
        for a in (self.aod, self.aoa):
            if not 0.0 <= a < TWO_PI:
                raise ValueError(f"angle {a} outside [0, 2pi)")


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray  # N_UE x N_BS
    paths: tuple[PathParameters, ...]
    user_id: int = 0
    on_grid: bool = False
    # virtual-domain indices (ue_row, bs_col) of each path when generated on-grid
    grid_bins: tuple[tuple[int, int], ...] = field(default=())


@dataclass(frozen=True, eq=False)
class SteeringVector:
    entries: np.ndarray
    angle: float


def steering_vector(epsilon: float, n_elements: int) -> SteeringVector:
    """ULA response u(eps, N) with d = lambda/2."""
    if n_elements < 1:
        raise ValueError("n_elements must be >= 1")
    k = np.arange(n_elements)
    entries = np.exp(1j * np.pi * k * np.cos(epsilon)) / np.sqrt(n_elements)
    return SteeringVector(entries, float(epsilon))


def draw_paths(n_paths: int, sigma_r: float, rng: np.random.Generator) -> list[PathParameters]:
    """Draw i.i.d. paths: uniform AOD/AOA on [0, 2pi) and alpha ~ CN(0, sigma_r)."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if sigma_r <= 0:
        raise ValueError("sigma_r must be positive")
    aod = rng.uniform(0.0, TWO_PI, n_paths)
    aoa = rng.uniform(0.0, TWO_PI, n_paths)
    g = rng.standard_normal((n_paths, 2))
    alpha = np.sqrt(sigma_r / 2.0) * (g[:, 0] + 1j * g[:, 1])
    return [PathParameters(complex(a), float(d), float(e)) for a, d, e in zip(alpha, aod, aoa)]


def draw_on_grid_paths(
    n_paths: int, sigma_r: float, dims: SystemDims, rng: np.random.Generator
) -> tuple[list[PathParameters], list[tuple[int, int]]]:
    """Paths whose angles sit exactly on candidate-beam steering directions.

    Distinct paths occupy distinct virtual-channel bins.
    """
    from .codebook import grid_angles

    if n_paths > dims.n_virtual:
        raise ConfigurationError("more paths than virtual-channel bins")
    flat = rng.choice(dims.n_virtual, size=n_paths, replace=False)
    g = rng.standard_normal((n_paths, 2))
    alpha = np.sqrt(sigma_r / 2.0) * (g[:, 0] + 1j * g[:, 1])
    bs_ang, ue_ang = grid_angles(dims.n_bs), grid_angles(dims.n_ue)
    paths, bins = [], []
    for a, idx in zip(alpha, flat):
        p, q = divmod(int(idx), dims.n_ue)  # column-stacked position p*N_UE + q
        paths.append(PathParameters(complex(a), float(bs_ang[p]), float(ue_ang[q])))
        bins.append((q, p))
    return paths, bins


def assemble_channel(
    paths: Sequence[PathParameters], dims: SystemDims, user_id: int = 0, **kw
) -> ChannelRealization:
    """H = sqrt(N_BS N_UE) * sum_l alpha_l u(aoa_l, N_UE) u(aod_l, N_BS)^H."""
    if not paths:
        raise ValueError("need at least one path")
    h = np.zeros((dims.n_ue, dims.n_bs), dtype=complex)
    for p in paths:
        a_ue = steering_vector(p.aoa, dims.n_ue).entries
        a_bs = steering_vector(p.aod, dims.n_bs).entries
        h += p.alpha * np.outer(a_ue, a_bs.conj())
    h *= np.sqrt(dims.n_bs * dims.n_ue)
    return ChannelRealization(h, tuple(paths), user_id, **kw)


def draw_channel(
    dims: SystemDims,
    n_paths: int,
    rng: np.random.Generator,
    sigma_r: float = 1.0,
    on_grid: bool = False,
    user_id: int = 0,
) -> ChannelRealization:
    if on_grid:
        paths, bins = draw_on_grid_paths(n_paths, sigma_r, dims, rng)
        return assemble_channel(paths, dims, user_id, on_grid=True, grid_bins=tuple(bins))
    return assemble_channel(draw_paths(n_paths, sigma_r, rng), dims, user_id)


def virtual_channel(channel: ChannelRealization, bs_codebook: Codebook, ue_codebook: Codebook) -> np.ndarray:
    """W_c^H H F_c."""
    h = channel.h if isinstance(channel, ChannelRealization) else np.asarray(channel)
    if h.shape != (ue_codebook.n, bs_codebook.n):
        raise ConfigurationError(
            f"channel shape {h.shape} does not match codebooks ({ue_codebook.n}, {bs_codebook.n})"
        )
    return ue_codebook.matrix.conj().T @ h @ bs_codebook.matrix


def vec(m: np.ndarray) -> np.ndarray:
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, n_ue: int, n_bs: int) -> np.ndarray:
    return np.asarray(v).reshape((n_ue, n_bs), order="F")
