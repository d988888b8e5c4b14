"""Communication beam choice from an estimate and the resulting rates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .geometry import ChannelRealization


@dataclass(frozen=True)
class BeamAssignment:
    bs_indices: tuple[int, ...]
    ue_indices: tuple[int, ...]

    def __post_init__(self):
        if not self.bs_indices or len(self.bs_indices) != len(self.ue_indices):
            raise ValueError("assignment needs matching, non-empty index lists")


@dataclass(frozen=True)
class RateReport:
    r_opt: float
    r_eff: float
    t_e: int
    t_c: int
    feedback_bits: int


def select_comm_beams(
    h_v_hat: np.ndarray, max_streams: int, gamma: float = 0.1, sigma_r: float = 1.0, threshold: float | None = None
) -> BeamAssignment:
    """Greedy dominant-entry selection with distinct rows and columns.

    Entries below ``threshold`` (default gamma*sigma_r) are skipped, but the
    single largest entry is always returned.
    """
    if max_streams < 1:
        raise ValueError("max_streams must be >= 1")
    mag = np.abs(np.asarray(h_v_hat))
    n_ue, n_bs = mag.shape
    # stable sort keeps ties in vec (column-stacked) order
    order = np.argsort(-mag.ravel(order="F"), kind="stable")
    thr = gamma * sigma_r if threshold is None else threshold
    rows: list[int] = []
    cols: list[int] = []
    for flat in order:
        if len(rows) == max_streams:
            break
        col, row = divmod(int(flat), n_ue)
        if rows and mag[row, col] < thr:
            break
        if row in rows or col in cols:
            continue
        rows.append(row)
        cols.append(col)
    return BeamAssignment(tuple(cols), tuple(rows))


def achievable_rate(
    true_channel: ChannelRealization | np.ndarray,
    assignment: BeamAssignment,
    power: float,
    noise_var: float,
    codebooks: tuple[Codebook, Codebook],
) -> float:
    """log2 det(I + P/(N0 k) W_d^H H F_d F_d^H H^H W_d), power split over k BS beams."""
    h = true_channel.h if isinstance(true_channel, ChannelRealization) else np.asarray(true_channel)
    f_c, w_c = codebooks
    f_d = f_c.matrix[:, list(assignment.bs_indices)]
    w_d = w_c.matrix[:, list(assignment.ue_indices)]
    if not np.isfinite(noise_var):
        return 0.0
    g = w_d.conj().T @ h @ f_d
    snr = power / (noise_var * len(assignment.bs_indices))
    m = np.eye(g.shape[0]) + snr * (g @ g.conj().T)
    sign, logdet = np.linalg.slogdet(m)
    return max(0.0, float(logdet / np.log(2.0)))


def effective_rate(r_opt: float, t_e: int, t_c: int) -> float:
    """r_opt * (1 - t_e/t_c), clamped at zero once training exceeds coherence."""
    if t_c <= 0:
        raise ValueError("t_c must be positive")
    return r_opt * max(0.0, 1.0 - t_e / t_c)


def feedback_bits(n_bs: int, n_paths: int) -> int:
    return math.ceil(math.log2(n_bs)) * n_paths


def rate_report(r_opt: float, t_e: int, t_c: int, n_bs: int, assignment: BeamAssignment) -> RateReport:
    return RateReport(r_opt, effective_rate(r_opt, t_e, t_c), t_e, t_c, feedback_bits(n_bs, len(assignment.bs_indices)))
