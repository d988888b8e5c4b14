"""Per-user estimation schemes sharing one measurement model.

SWIFT keeps measuring with random beams and re-runs GAMP every ``t_u``
timeslots until two consecutive binarized supports agree (and are not
empty) or ``t_max`` is reached.  FNRB spends a fixed budget.  The exhaustive
sweep measures every virtual-channel entry once.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .codebook import Side, build_codebook
from .errors import ConfigurationError, EstimatorError
from .gamp import BgPrior, GampConfig, VirtualChannelEstimate, gamp_estimate
from .geometry import ChannelRealization, SystemDims
from .measurement import (
    BeamSelection,
    BsSchedule,
    MeasurementLedger,
    TrialSeeds,
    complex_noise,
    draw_pilots,
    measure_timeslot,
)

log = logging.getLogger(__name__)


class StopReason(str, Enum):
    CONVERGED = "Converged"
    MAX_MEASUREMENTS = "MaxMeasurements"


class Scheme(str, Enum):
    SWIFT = "Swift"
    FNRB = "Fnrb"
    EXHAUSTIVE = "Exhaustive"


@dataclass(frozen=True)
class StoppingConfig:
    gamma: float = 0.1
    t_u: int = 4
    t_max: int = 128

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError("gamma must lie in (0, 1)")
        if self.t_u < 1 or self.t_max < self.t_u:
            raise ConfigurationError("need 1 <= t_u <= t_max")

    @classmethod
    def for_dims(cls, dims: SystemDims, gamma: float = 0.1) -> "StoppingConfig":
        return cls(gamma, dims.t_u, dims.t_max)


@dataclass(frozen=True, eq=False)
class Checkpoint:
    timeslot: int
    n_active: int
    failed: bool = False


@dataclass(frozen=True, eq=False)
class EstimationOutcome:
    estimate: VirtualChannelEstimate
    t_e: int
    stop_reason: StopReason
    scheme: Scheme
    checkpoints: list[Checkpoint] = field(default_factory=list)


def binarize(estimate, gamma: float, sigma_r: float) -> np.ndarray:
    """1 where |v_hat| >= gamma*sigma_r, else 0."""
    return binarize_at(estimate, gamma * sigma_r)


def binarize_at(estimate, threshold: float) -> np.ndarray:
    v = estimate.v_hat if isinstance(estimate, VirtualChannelEstimate) else np.asarray(estimate)
    return (np.abs(v) >= threshold).astype(np.uint8)


def deep_fade_threshold(gamma: float, sigma_r: float, n_virtual: int) -> float:
    """Virtual-domain magnitude of a beam-aligned path with |alpha|^2 = gamma*sigma_r.

    A path exactly on the beam grid puts sqrt(N_BS N_UE)*alpha into a single
    entry of H_v, so "path power below gamma times its mean" reads
    |v| < sqrt(gamma * sigma_r * N_BS N_UE).
    """
    return float(np.sqrt(gamma * sigma_r * n_virtual))


def has_converged(current: np.ndarray, previous: np.ndarray | None) -> bool:
    if previous is None:
        return False
    if current.shape != previous.shape:
        raise ValueError("support vectors differ in length")
    return bool(np.array_equal(current, previous) and current.any())


def _prior_estimate(dims: SystemDims, prior: BgPrior) -> VirtualChannelEstimate:
    n = dims.n_virtual
    return VirtualChannelEstimate(np.zeros(n, complex), np.full(n, prior.rho * prior.sigma_r), 0, False)


class MeasurementSession:
    """One user's random-beam measurement stream at one noise level.

    The ledger is extended lazily and GAMP estimates are cached by record
    count, so SWIFT and FNRB runs on the same seeds share both.  An estimate
    is ``None`` when GAMP failed numerically.
    """

    def __init__(
        self,
        channel: ChannelRealization,
        dims: SystemDims,
        seeds: TrialSeeds,
        power: float,
        noise_var: float,
        prior: BgPrior,
        gamp: GampConfig = GampConfig(),
        estimator_noise_var: float | None = None,
    ):
        self.channel = channel
        self.dims = dims
        self.noise_var = noise_var
        self.prior = prior
        self.gamp = gamp
        self.estimator_noise_var = noise_var if estimator_noise_var is None else estimator_noise_var
        self.ledger = MeasurementLedger(dims, power)
        self._schedule = BsSchedule(seeds.bs(), dims)
        self._ue_rng = seeds.ue(channel.user_id)
        self._noise_rng = seeds.noise(channel.user_id)
        self._cache: dict[int, VirtualChannelEstimate | None] = {}

    def extend_to(self, m: int) -> None:
        while len(self.ledger) < m:
            measure_timeslot(self.ledger, self.channel, self._schedule, self._ue_rng, self._noise_rng, self.noise_var)

    def estimate_at(self, m: int) -> VirtualChannelEstimate | None:
        if m not in self._cache:
            self.extend_to(m)
            try:
                self._cache[m] = gamp_estimate(self.ledger, self.estimator_noise_var, self.prior, self.gamp, m)
            except EstimatorError as exc:
                log.debug("estimate at %d timeslots failed: %s", m, exc)
                self._cache[m] = None
        return self._cache[m]


def run_swift(
    channel: ChannelRealization,
    dims: SystemDims,
    seeds: TrialSeeds,
    power: float,
    noise_var: float,
    prior: BgPrior,
    stopping: StoppingConfig,
    gamp: GampConfig = GampConfig(),
    threshold: float | None = None,
    estimator_noise_var: float | None = None,
    session: MeasurementSession | None = None,
) -> EstimationOutcome:
    """Adaptive random-beam estimation.

    ``threshold`` is the binarization magnitude; ``None`` uses the bare
    gamma * prior.sigma_r.
    """
    thr = stopping.gamma * prior.sigma_r if threshold is None else threshold
    if session is None:
        session = MeasurementSession(channel, dims, seeds, power, noise_var, prior, gamp, estimator_noise_var)
    estimate = _prior_estimate(dims, prior)
    previous = None
    checkpoints = []
    marks = list(range(stopping.t_u, stopping.t_max + 1, stopping.t_u))
    if marks[-1] != stopping.t_max:
        marks.append(stopping.t_max)
    for m in marks:
        est = session.estimate_at(m)
        if est is None:
            # numerical failure counts as "no change"
            checkpoints.append(Checkpoint(m, -1, failed=True))
            continue
        estimate = est
        current = binarize_at(estimate, thr)
        checkpoints.append(Checkpoint(m, int(current.sum())))
        if m % stopping.t_u == 0 and has_converged(current, previous):
            return EstimationOutcome(estimate, m, StopReason.CONVERGED, Scheme.SWIFT, checkpoints)
        previous = current
    return EstimationOutcome(estimate, stopping.t_max, StopReason.MAX_MEASUREMENTS, Scheme.SWIFT, checkpoints)


def run_fnrb(
    channel: ChannelRealization,
    dims: SystemDims,
    seeds: TrialSeeds,
    power: float,
    noise_var: float,
    prior: BgPrior,
    m_fixed: int,
    gamp: GampConfig = GampConfig(),
    estimator_noise_var: float | None = None,
    session: MeasurementSession | None = None,
) -> EstimationOutcome:
    if m_fixed < 1:
        raise ConfigurationError("m_fixed must be >= 1")
    if session is None:
        session = MeasurementSession(channel, dims, seeds, power, noise_var, prior, gamp, estimator_noise_var)
    estimate = session.estimate_at(m_fixed)
    if estimate is None:
        estimate = _prior_estimate(dims, prior)
    return EstimationOutcome(estimate, m_fixed, StopReason.MAX_MEASUREMENTS, Scheme.FNRB)


def run_exhaustive(
    channel: ChannelRealization,
    dims: SystemDims,
    seeds: TrialSeeds,
    power: float,
    noise_var: float,
) -> EstimationOutcome:
    """Sweep every (BS beam, UE beam group) pair at full power.

    Timeslot k uses BS beam k // G and UE beams (k % G)*R_UE ... +R_UE-1, with
    G = ceil(N_UE / R_UE); the last group wraps around when R_UE does not
    divide N_UE.
    """
    f_c = build_codebook(dims.n_bs, Side.BS)
    w_c = build_codebook(dims.n_ue, Side.UE)
    bs_rng = seeds.bs()
    noise_rng = seeds.noise(channel.user_id)
    groups = -(-dims.n_ue // dims.r_ue)
    h_eff = w_c.matrix.conj().T @ channel.h  # rows: UE candidates
    v = np.zeros(dims.n_virtual, dtype=complex)
    t_e = 0
    for p in range(dims.n_bs):
        col = h_eff @ f_c.matrix[:, p]
        for g in range(groups):
            q = (g * dims.r_ue + np.arange(dims.r_ue)) % dims.n_ue
            s = draw_pilots(bs_rng, 1).symbols[0]
            y = np.sqrt(power) * col[q] * s + np.sqrt(noise_var) * complex_noise(noise_rng, dims.r_ue)
            v[p * dims.n_ue + q] = y / (np.sqrt(power) * s)
            t_e += 1
    var = np.full(dims.n_virtual, noise_var / power)
    return EstimationOutcome(VirtualChannelEstimate(v, var, 0, True), t_e, StopReason.MAX_MEASUREMENTS, Scheme.EXHAUSTIVE)


def regenerate_bs_sequence(seeds: TrialSeeds, dims: SystemDims, n_slots: int) -> list[tuple[BeamSelection, np.ndarray]]:
    """What any user reconstructs of the BS's beams and pilots from the shared seed."""
    sched = BsSchedule(seeds.bs(), dims)
    out = []
    for _ in range(n_slots):
        sel, pil = sched.next()
        out.append((sel, pil.symbols))
    return out
