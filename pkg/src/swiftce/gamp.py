"""Bernoulli-Gaussian GAMP for y = c A v + n, plus an exact-MMSE reference.

Everything is complex and circularly symmetric.  The input prior on each
entry is (1 - rho) delta_0 + rho CN(0, sigma_r); the output channel is AWGN.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, logsumexp

from .errors import ConfigurationError, EstimatorError


@dataclass(frozen=True)
class BgPrior:
    rho: float
    sigma_r: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ConfigurationError("rho must lie in (0, 1]")
        if self.sigma_r <= 0:
            raise ConfigurationError("sigma_r must be positive")


@dataclass(frozen=True)
class GampConfig:
    max_iterations: int = 50
    tolerance: float = 1e-6
    damping: float = 0.7
    variance_floor: float = 1e-12

    def __post_init__(self):
        if self.max_iterations < 1 or self.tolerance <= 0 or self.variance_floor <= 0:
            raise ConfigurationError("invalid GAMP configuration")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigurationError("damping must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class VirtualChannelEstimate:
    v_hat: np.ndarray
    v_var: np.ndarray
    iterations_used: int = 0
    converged: bool = True


def _log_odds(abs_r2, tau, prior: BgPrior):
    sig = prior.sigma_r
    with np.errstate(divide="ignore"):
        base = np.log(prior.rho) - np.log1p(-prior.rho)
    return base + np.log(tau / (tau + sig)) + abs_r2 * sig / (tau * (tau + sig))


def denoise_input(r_pseudo, tau, prior: BgPrior):
    """Posterior mean and variance of v given r = v + CN(0, tau).

    Vectorized over ``r_pseudo`` and ``tau``.
    """
    r = np.asarray(r_pseudo, dtype=complex)
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise EstimatorError("pseudo-observation variance must be positive")
    sig = prior.sigma_r
    pi_on = expit(_log_odds(np.abs(r) ** 2, tau, prior))
    gain = sig / (sig + tau)
    mu = gain * r
    gamma = sig * tau / (sig + tau)
    mean = pi_on * mu
    var = pi_on * gamma + pi_on * (1.0 - pi_on) * np.abs(mu) ** 2
    if mean.ndim == 0:
        return complex(mean), float(var)
    return mean, var


def _as_operator(a):
    if sp.issparse(a):
        a = sp.csr_matrix(a)
        a2 = a.copy()
        a2.data = np.abs(a2.data) ** 2
        return a, a.conj().T.tocsr(), a2, a2.T.tocsr()
    a = np.asarray(a, dtype=complex)
    a2 = np.abs(a) ** 2
    return a, a.conj().T, a2, a2.T


def gamp(a, y, c: float, noise_var: float, prior: BgPrior, config: GampConfig = GampConfig()) -> VirtualChannelEstimate:
    """Sum-product GAMP with damped updates.

    Columns that no measurement touches keep their prior moments.
    """
    if noise_var <= 0:
        raise ConfigurationError("noise_var must be positive")
    a, ah, a2, a2t = _as_operator(a)
    y = np.asarray(y, dtype=complex)
    m, n = a.shape
    if m == 0:
        raise ConfigurationError("no measurements")
    c2 = c * c
    floor = config.variance_floor
    d = config.damping

    covered = np.asarray(a2t @ np.ones(m)).ravel() > 0
    x = np.zeros(n, dtype=complex)
    tx = np.full(n, prior.rho * prior.sigma_r)
    s = np.zeros(m, dtype=complex)
    ts = np.zeros(m)
    converged = False
    it = 0
    for it in range(1, config.max_iterations + 1):
        tp = np.maximum(c2 * (a2 @ tx), floor)
        p = c * (a @ x) - tp * s
        s_new = (y - p) / (tp + noise_var)
        ts_new = 1.0 / (tp + noise_var)
        if it == 1:
            s, ts = s_new, ts_new
        else:
            s = d * s_new + (1 - d) * s
            ts = d * ts_new + (1 - d) * ts
        tr_inv = c2 * (a2t @ ts)
        tr = np.where(covered, 1.0 / np.maximum(tr_inv, floor), 1.0)
        r = x + tr * c * (ah @ s)
        x_new, tx_new = denoise_input(r, tr, prior)
        x_new = np.where(covered, x_new, 0.0)
        tx_new = np.where(covered, np.maximum(tx_new, floor), prior.rho * prior.sigma_r)
        if not (np.all(np.isfinite(x_new)) and np.all(np.isfinite(tx_new))):
            raise EstimatorError(f"non-finite GAMP state at iteration {it}")
        x_old = x
        x = d * x_new + (1 - d) * x
        tx = d * tx_new + (1 - d) * tx
        change = np.linalg.norm(x - x_old) / max(np.linalg.norm(x), 1e-30)
        if change < config.tolerance:
            converged = True
            break
    return VirtualChannelEstimate(x, tx, it, converged)


def gamp_estimate(
    ledger, noise_var: float, prior: BgPrior, config: GampConfig = GampConfig(), n_records: int | None = None
) -> VirtualChannelEstimate:
    """GAMP on a :class:`~swiftce.measurement.MeasurementLedger` (or its first ``n_records``)."""
    k = len(ledger) if n_records is None else n_records
    if k == 0 or k > len(ledger):
        raise ConfigurationError(f"cannot estimate from {k} of {len(ledger)} records")
    return gamp(ledger.sparse_a(k), ledger.observations(k), ledger.scale, noise_var, prior, config)


MAX_ORACLE_DIM = 14


def exact_mmse_oracle(dense_a, y, c: float, noise_var: float, prior: BgPrior) -> np.ndarray:
    """Exact posterior mean by enumerating all 2^n supports."""
    a = np.asarray(dense_a, dtype=complex)
    y = np.asarray(y, dtype=complex)
    m, n = a.shape
    if n > MAX_ORACLE_DIM:
        raise ConfigurationError(f"support enumeration refused for n = {n} > {MAX_ORACLE_DIM}")
    sig, rho = prior.sigma_r, prior.rho
    log_w, means = [], []
    for k in range(n + 1):
        if rho == 1.0 and k < n:
            continue
        for supp in itertools.combinations(range(n), k):
            a_s = a[:, supp]
            cov = c * c * sig * (a_s @ a_s.conj().T) + noise_var * np.eye(m)
            chol = np.linalg.cholesky(cov)
            z = np.linalg.solve(chol, y)
            logdet = 2.0 * np.sum(np.log(np.abs(np.diag(chol))))
            lp = k * np.log(rho) + ((n - k) * np.log1p(-rho) if k < n else 0.0)
            log_w.append(lp - logdet - np.vdot(z, z).real)
            mu = np.zeros(n, dtype=complex)
            if k:
                mu[list(supp)] = c * sig * (a_s.conj().T @ np.linalg.solve(chol.conj().T, z))
            means.append(mu)
    log_w = np.asarray(log_w)
    w = np.exp(log_w - logsumexp(log_w))
    return w @ np.asarray(means)
