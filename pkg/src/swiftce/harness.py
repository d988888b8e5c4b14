"""Seeded Monte Carlo sweeps over SNR, coherence time and estimation scheme.

Every random quantity of a trial (channel, BS beams/pilots, UE beams, noise)
is derived from ``(master_seed, trial, user)`` only.  All SNR points, all
coherence times and all schemes therefore see the same realizations, which
makes their comparison paired.  Unit-variance noise is drawn once and scaled
by sqrt(N0), so curves over SNR use common random numbers as well.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .codebook import Side, build_codebook
from .controller import (
    EstimationOutcome,
    MeasurementSession,
    Scheme,
    StoppingConfig,
    StopReason,
    binarize_at,
    deep_fade_threshold,
    run_exhaustive,
    run_fnrb,
    run_swift,
)
from .errors import ConfigurationError
from .evaluation import achievable_rate, effective_rate, select_comm_beams
from .gamp import BgPrior, GampConfig
from .geometry import ChannelRealization, SystemDims, draw_channel, unvec, vec, virtual_channel
from .measurement import TrialSeeds

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "scheme",
    "snr_db",
    "t_c",
    "mean_t_e",
    "mean_r_opt",
    "mean_r_eff",
    "converged_frac",
    "support_acc",
    "n_trials",
)


@dataclass(frozen=True, order=True)
class SchemeSpec:
    kind: Scheme
    budget: int | None = None

    def __post_init__(self):
        if self.kind is Scheme.FNRB and (self.budget is None or self.budget < 1):
            raise ConfigurationError("FNRB needs a positive measurement budget")

    @property
    def label(self) -> str:
        if self.kind is Scheme.FNRB:
            return f"FNRB({self.budget})"
        return "SWIFT" if self.kind is Scheme.SWIFT else "Exhaustive"

    def __str__(self) -> str:
        return self.label

    @classmethod
    def parse(cls, text: str) -> "SchemeSpec":
        t = text.strip().lower().replace(" ", "")
        if t == "swift":
            return cls(Scheme.SWIFT)
        if t in ("exhaustive", "exh"):
            return cls(Scheme.EXHAUSTIVE)
        m = re.fullmatch(r"fnrb[(:_-]?(\d+)\)?", t)
        if m:
            return cls(Scheme.FNRB, int(m.group(1)))
        raise ConfigurationError(f"unknown scheme descriptor {text!r}")


DEFAULT_SCHEMES = (
    SchemeSpec(Scheme.SWIFT),
    SchemeSpec(Scheme.FNRB, 32),
    SchemeSpec(Scheme.FNRB, 64),
    SchemeSpec(Scheme.FNRB, 96),
    SchemeSpec(Scheme.FNRB, 128),
    SchemeSpec(Scheme.EXHAUSTIVE),
)


@dataclass(frozen=True)
class ExperimentConfig:
    dims: SystemDims = SystemDims()
    snr_db_list: tuple[float, ...] = tuple(float(s) for s in range(-20, 21, 5))
    t_c_list: tuple[int, ...] = (200, 400)
    n_trials: int = 1000
    schemes: tuple[SchemeSpec, ...] = DEFAULT_SCHEMES
    l_paths: int = 1
    gamma: float = 0.1
    t_u: int | None = None  # None: N_UE / R_UE
    t_max: int | None = None  # None: N_BS N_UE / R_UE
    master_seed: int = 0
    sigma_r: float = 1.0
    on_grid: bool = False
    prior_variance: float | None = None  # None: sigma_r

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigurationError("n_trials must be >= 1")
        if not self.snr_db_list:
            raise ConfigurationError("snr_db_list must not be empty")
        if not self.t_c_list or any(t <= 0 for t in self.t_c_list):
            raise ConfigurationError("t_c_list must hold positive integers")
        if not self.schemes:
            raise ConfigurationError("no schemes selected")
        if self.l_paths < 1 or self.sigma_r <= 0:
            raise ConfigurationError("l_paths and sigma_r must be positive")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("master_seed must be an unsigned 64-bit integer")
        self.stopping  # validates gamma / t_u / t_max

    @property
    def stopping(self) -> StoppingConfig:
        return StoppingConfig(
            self.gamma,
            self.t_u if self.t_u is not None else self.dims.t_u,
            self.t_max if self.t_max is not None else self.dims.t_max,
        )

    @property
    def prior(self) -> BgPrior:
        var = self.sigma_r if self.prior_variance is None else self.prior_variance
        return BgPrior(min(1.0, self.l_paths / self.dims.n_virtual), var)

    @property
    def support_threshold(self) -> float:
        return deep_fade_threshold(self.gamma, self.sigma_r, self.dims.n_virtual)


@dataclass(frozen=True)
class TrialResult:
    scheme: SchemeSpec
    snr_db: float
    t_c: int
    user_id: int
    t_e: int
    r_opt: float
    r_eff: float
    stop_reason: StopReason
    support_correct: bool
    trial: int = 0


def noise_var_for(snr_db: float) -> float:
    """N0 at unit transmit power."""
    return 10.0 ** (-snr_db / 10.0)


def trial_seeds(config: ExperimentConfig, trial: int) -> TrialSeeds:
    return TrialSeeds(config.master_seed, (trial,))


def trial_channels(config: ExperimentConfig, trial: int) -> list[ChannelRealization]:
    seeds = trial_seeds(config, trial)
    return [
        draw_channel(config.dims, config.l_paths, seeds.channel(u), config.sigma_r, config.on_grid, user_id=u)
        for u in range(config.dims.n_users)
    ]


def _support_correct(config: ExperimentConfig, channel: ChannelRealization, v_hat: np.ndarray, v_true: np.ndarray) -> bool:
    if channel.on_grid:
        truth = np.zeros(config.dims.n_virtual, dtype=np.uint8)
        for q, p in channel.grid_bins:
            truth[p * config.dims.n_ue + q] = 1
        return bool(np.array_equal(binarize_at(v_hat, config.support_threshold), truth))
    return int(np.argmax(np.abs(v_hat))) == int(np.argmax(np.abs(v_true)))


def run_scheme(
    config: ExperimentConfig,
    scheme: SchemeSpec,
    channel: ChannelRealization,
    seeds: TrialSeeds,
    noise_var: float,
    session: MeasurementSession | None = None,
    gamp: GampConfig = GampConfig(),
) -> EstimationOutcome:
    dims, prior, power = config.dims, config.prior, 1.0
    if scheme.kind is Scheme.EXHAUSTIVE:
        return run_exhaustive(channel, dims, seeds, power, noise_var)
    if session is None:
        session = MeasurementSession(channel, dims, seeds, power, noise_var, prior, gamp)
    if scheme.kind is Scheme.SWIFT:
        return run_swift(
            channel, dims, seeds, power, noise_var, prior, config.stopping, gamp,
            threshold=config.support_threshold, session=session,
        )
    return run_fnrb(channel, dims, seeds, power, noise_var, prior, scheme.budget, gamp, session=session)


def score(
    config: ExperimentConfig, channel: ChannelRealization, outcome: EstimationOutcome, noise_var: float
) -> tuple[float, bool]:
    """Achievable rate on the true channel with beams chosen from the estimate."""
    dims = config.dims
    cbs = (build_codebook(dims.n_bs, Side.BS), build_codebook(dims.n_ue, Side.UE))
    h_v_hat = unvec(outcome.estimate.v_hat, dims.n_ue, dims.n_bs)
    assignment = select_comm_beams(h_v_hat, min(dims.r_bs, dims.r_ue), threshold=config.support_threshold)
    r_opt = achievable_rate(channel, assignment, 1.0, noise_var, cbs)
    v_true = vec(virtual_channel(channel, *cbs))
    return r_opt, _support_correct(config, channel, outcome.estimate.v_hat, v_true)


def run_trial(config: ExperimentConfig, snr_index: int, trial: int) -> list[TrialResult]:
    """All users and schemes of one (SNR, trial) cell, scored at every coherence time."""
    snr_db = config.snr_db_list[snr_index]
    noise_var = noise_var_for(snr_db)
    seeds = trial_seeds(config, trial)
    results = []
    for channel in trial_channels(config, trial):
        session = MeasurementSession(channel, config.dims, seeds, 1.0, noise_var, config.prior)
        for scheme in config.schemes:
            outcome = run_scheme(config, scheme, channel, seeds, noise_var, session)
            r_opt, ok = score(config, channel, outcome, noise_var)
            for t_c in config.t_c_list:
                results.append(
                    TrialResult(
                        scheme, snr_db, t_c, channel.user_id, outcome.t_e, r_opt,
                        effective_rate(r_opt, outcome.t_e, t_c), outcome.stop_reason, ok, trial,
                    )
                )
    return results


def _run_cell(args):
    config, snr_index, trial = args
    return run_trial(config, snr_index, trial)


def run_sweep(config: ExperimentConfig, workers: int = 1, progress=None) -> list[TrialResult]:
    cells = [(config, i, t) for i in range(len(config.snr_db_list)) for t in range(config.n_trials)]
    out: list[TrialResult] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for res in pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (8 * workers))):
                out.extend(res)
                if progress:
                    progress()
    else:
        for cell in cells:
            out.extend(_run_cell(cell))
            if progress:
                progress()
    return out


@dataclass(frozen=True)
class AggregateRow:
    scheme: str
    snr_db: float
    t_c: int
    mean_t_e: float
    mean_r_opt: float
    mean_r_eff: float
    converged_frac: float
    support_acc: float
    n_trials: int


def aggregate(results: Iterable[TrialResult], scheme_order: Sequence[SchemeSpec] | None = None) -> list[AggregateRow]:
    """Per (scheme, snr, t_c) means, in scheme order, then SNR, then t_c."""
    groups: dict[tuple[SchemeSpec, float, int], list[TrialResult]] = {}
    for r in results:
        groups.setdefault((r.scheme, r.snr_db, r.t_c), []).append(r)
    order = {s: i for i, s in enumerate(scheme_order or ())}
    keys = sorted(groups, key=lambda k: (order.get(k[0], len(order)), k[0].label, k[1], k[2]))
    rows = []
    for key in keys:
        g = groups[key]
        rows.append(
            AggregateRow(
                key[0].label,
                key[1],
                key[2],
                math.fsum(r.t_e for r in g) / len(g),
                math.fsum(r.r_opt for r in g) / len(g),
                math.fsum(r.r_eff for r in g) / len(g),
                sum(r.stop_reason is StopReason.CONVERGED for r in g) / len(g),
                sum(r.support_correct for r in g) / len(g),
                len(g),
            )
        )
    return rows


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    s = f"{float(x):.6g}"
    return "0" if s == "-0" else s


def format_csv(rows: Iterable[AggregateRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(getattr(row, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_csv(rows: Iterable[AggregateRow], destination) -> None:
    """Write rows to a path or a text stream."""
    text = format_csv(rows)
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text, encoding="utf-8")


def read_csv(source) -> list[dict]:
    text = Path(source).read_text(encoding="utf-8") if not hasattr(source, "read") else source.read()
    return list(csv.DictReader(io.StringIO(text)))


# config files: flat "key = value" lines, keys are ExperimentConfig field names

def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in _split(v))


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(x) for x in _split(v))


def _split(v: str) -> list[str]:
    return [x.strip() for x in v.split(",") if x.strip()]


def _bool(v: str) -> bool:
    t = v.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"not a boolean: {v!r}")


def _dims(v: str) -> SystemDims:
    parts = _ints(v)
    if len(parts) not in (4, 5):
        raise ConfigurationError("dims = n_bs,n_ue,r_bs,r_ue[,n_users]")
    return SystemDims(*parts)


def _optional_int(v: str) -> int | None:
    return None if v.strip().lower() in ("", "auto", "none") else int(v)


_PARSERS = {
    "dims": _dims,
    "snr_db_list": _floats,
    "t_c_list": _ints,
    "n_trials": int,
    "schemes": lambda v: tuple(SchemeSpec.parse(x) for x in _split(v)),
    "l_paths": int,
    "gamma": float,
    "t_u": _optional_int,
    "t_max": _optional_int,
    "master_seed": int,
    "sigma_r": float,
    "on_grid": _bool,
    "prior_variance": lambda v: None if v.strip().lower() in ("", "auto", "none") else float(v),
}
assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def parse_overrides(pairs: dict[str, str]) -> dict:
    out = {}
    for key, raw in pairs.items():
        if key not in _PARSERS:
            raise ConfigurationError(f"unknown config key {key!r}")
        try:
            out[key] = _PARSERS[key](raw)
        except ConfigurationError:
            raise
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {raw!r}") from exc
    return out


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    pairs = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {n}: expected key = value")
        key, _, value = line.partition("=")
        pairs[key.strip()] = value.strip()
    return replace(base or ExperimentConfig(), **parse_overrides(pairs))


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), base)
