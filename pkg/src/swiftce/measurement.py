"""Random-beam measurement timeslots and the stacked sensing system per user.

Beam indices are 0-based codebook columns.  A measurement on receive chain j
with UE beam q_j, while the BS radiates pilots s_i on beams p_i, observes

    y_j = c * sum_i s_i * H_v[q_j, p_i] + n_j,      c = sqrt(P / R_BS)

so each sensing row has exactly R_BS nonzeros, at vec positions p_i*N_UE + q_j.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .codebook import Codebook, Side, build_codebook
from .errors import ConfigurationError, ProtocolError
from .geometry import ChannelRealization, SystemDims

QPSK = np.array([1, 1j, -1, -1j], dtype=complex)


@dataclass(frozen=True)
class TrialSeeds:
    """Independent substreams derived from a master seed and an index key.

    The BS stream depends on the key only, so every user (and every scheme)
    regenerates the same beam/pilot sequence.  Receive, noise and channel
    streams are private per user.
    """

    master: int
    key: tuple[int, ...] = ()

    def _rng(self, *tail: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master, spawn_key=tuple(self.key) + tail)
        return np.random.default_rng(ss)

    def bs(self) -> np.random.Generator:
        return self._rng(0)

    def ue(self, user: int = 0) -> np.random.Generator:
        return self._rng(1, user)

    def noise(self, user: int = 0) -> np.random.Generator:
        return self._rng(2, user)

    def channel(self, user: int = 0) -> np.random.Generator:
        return self._rng(3, user)


@dataclass(frozen=True, eq=False)
class BeamSelection:
    indices: np.ndarray
    side: Side


@dataclass(frozen=True, eq=False)
class PilotSymbols:
    symbols: np.ndarray


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    timeslot: int
    y: np.ndarray
    bs_selection: BeamSelection
    ue_selection: BeamSelection
    pilots: PilotSymbols


def select_beams(rng: np.random.Generator, n: int, r: int, side: Side | str = Side.BS) -> BeamSelection:
    """r distinct candidate beams, uniformly without replacement."""
    if not 1 <= r <= n:
        raise ConfigurationError(f"cannot select {r} distinct beams out of {n}")
    idx = rng.choice(n, size=r, replace=False)
    return BeamSelection(np.asarray(idx, dtype=np.intp), Side(side))


def draw_pilots(rng: np.random.Generator, r_bs: int) -> PilotSymbols:
    return PilotSymbols(QPSK[rng.integers(0, 4, size=r_bs)])


class BsSchedule:
    """The BS's pseudo-random (beams, pilots) sequence, one entry per timeslot."""

    def __init__(self, rng: np.random.Generator, dims: SystemDims):
        self._rng = rng
        self.dims = dims

    def next(self) -> tuple[BeamSelection, PilotSymbols]:
        sel = select_beams(self._rng, self.dims.n_bs, self.dims.r_bs, Side.BS)
        return sel, draw_pilots(self._rng, self.dims.r_bs)


def complex_noise(rng: np.random.Generator, size: int) -> np.ndarray:
    """Unit-variance circular complex Gaussian samples."""
    g = rng.standard_normal((size, 2))
    return (g[:, 0] + 1j * g[:, 1]) / np.sqrt(2.0)


def observe(
    channel: ChannelRealization,
    bs_sel: BeamSelection,
    ue_sel: BeamSelection,
    pilots: PilotSymbols,
    power: float,
    noise_var: float,
    rng: np.random.Generator,
    codebooks: tuple[Codebook, Codebook] | None = None,
    timeslot: int = 1,
) -> MeasurementRecord:
    """y = sqrt(P/R_BS) W_m^H H F_m s + n, n ~ CN(0, N0 I)."""
    h = channel.h
    n_ue, n_bs = h.shape
    f_c, w_c = codebooks or (build_codebook(n_bs, Side.BS), build_codebook(n_ue, Side.UE))
    f_m = f_c.matrix[:, bs_sel.indices]
    w_m = w_c.matrix[:, ue_sel.indices]
    r_bs = len(bs_sel.indices)
    y = np.sqrt(power / r_bs) * (w_m.conj().T @ (h @ (f_m @ pilots.symbols)))
    # noise is always drawn so the stream stays aligned across noise levels
    y = y + np.sqrt(noise_var) * complex_noise(rng, len(ue_sel.indices))
    return MeasurementRecord(timeslot, y, bs_sel, ue_sel, pilots)


def sensing_support(bs_sel: BeamSelection, ue_sel: BeamSelection, pilots: PilotSymbols, n_ue: int):
    """Column indices and values of the R_UE x R_BS nonzeros of one sensing block."""
    cols = bs_sel.indices[None, :] * n_ue + ue_sel.indices[:, None]
    vals = np.broadcast_to(pilots.symbols, cols.shape).astype(complex)
    return cols, vals


def sensing_block(
    bs_sel: BeamSelection,
    ue_sel: BeamSelection,
    pilots: PilotSymbols,
    codebooks: tuple[Codebook, Codebook] | tuple[int, int],
) -> np.ndarray:
    """Dense R_UE x (N_BS N_UE) block (s^T F_m^T F_c^*) kron (W_m^H W_c)."""
    if isinstance(codebooks[0], Codebook):
        n_bs, n_ue = codebooks[0].n, codebooks[1].n
    else:
        n_bs, n_ue = codebooks
    cols, vals = sensing_support(bs_sel, ue_sel, pilots, n_ue)
    a = np.zeros((len(ue_sel.indices), n_bs * n_ue), dtype=complex)
    rows = np.repeat(np.arange(cols.shape[0]), cols.shape[1])
    np.add.at(a, (rows, cols.ravel()), vals.ravel())
    return a


@dataclass(eq=False)
class MeasurementLedger:
    """Accumulated observations of one user, with the stacked sensing system."""

    dims: SystemDims
    power: float
    records: list[MeasurementRecord] = field(default_factory=list)

    def __post_init__(self):
        self._y: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []

    @property
    def scale(self) -> float:
        return float(np.sqrt(self.power / self.dims.r_bs))

    @property
    def n_rows(self) -> int:
        return len(self.records) * self.dims.r_ue

    def __len__(self) -> int:
        return len(self.records)

    def append(self, record: MeasurementRecord) -> "MeasurementLedger":
        expected = len(self.records) + 1
        if record.timeslot != expected:
            raise ProtocolError(f"expected timeslot {expected}, got {record.timeslot}")
        if len(record.y) != self.dims.r_ue:
            raise ConfigurationError("observation length must equal R_UE")
        cols, vals = sensing_support(record.bs_selection, record.ue_selection, record.pilots, self.dims.n_ue)
        self.records.append(record)
        self._y.append(record.y)
        self._cols.append(cols)
        self._vals.append(vals)
        return self

    @property
    def stacked_y(self) -> np.ndarray:
        return self.observations()

    def observations(self, n_records: int | None = None) -> np.ndarray:
        k_rec = len(self._y) if n_records is None else n_records
        if k_rec == 0:
            return np.zeros(0, dtype=complex)
        return np.concatenate(self._y[:k_rec])

    def sparse_a(self, n_records: int | None = None) -> sp.csr_matrix:
        """Stacked sensing matrix of the first ``n_records`` records (default all)."""
        n = self.dims.n_virtual
        k_rec = len(self._cols) if n_records is None else n_records
        if k_rec == 0:
            return sp.csr_matrix((0, n), dtype=complex)
        cols = np.concatenate(self._cols[:k_rec])
        vals = np.concatenate(self._vals[:k_rec])
        rows, k = cols.shape
        indptr = np.arange(0, rows * k + 1, k)
        a = sp.csr_matrix((vals.ravel(), cols.ravel(), indptr), shape=(rows, n))
        a.sum_duplicates()
        return a

    @property
    def stacked_a(self) -> np.ndarray:
        return self.sparse_a().toarray()


def append(ledger: MeasurementLedger, record: MeasurementRecord) -> MeasurementLedger:
    return ledger.append(record)


def measure_timeslot(
    ledger: MeasurementLedger,
    channel: ChannelRealization,
    schedule: BsSchedule,
    ue_rng: np.random.Generator,
    noise_rng: np.random.Generator,
    noise_var: float,
) -> MeasurementRecord:
    """Run one random-beam timeslot and append it to the ledger."""
    dims = ledger.dims
    bs_sel, pilots = schedule.next()
    ue_sel = select_beams(ue_rng, dims.n_ue, dims.r_ue, Side.UE)
    cbs = (build_codebook(dims.n_bs, Side.BS), build_codebook(dims.n_ue, Side.UE))
    rec = observe(channel, bs_sel, ue_sel, pilots, ledger.power, noise_var, noise_rng, cbs, len(ledger) + 1)
    ledger.append(rec)
    return rec
