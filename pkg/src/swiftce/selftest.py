"""Oracle suites: each check recomputes a quantity by an independent route.

The functions return the raw discrepancy metrics so callers can apply their
own tolerances; :func:`run_selftest` applies the default ones.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .codebook import Side, build_codebook, quantized_phase_set
from .controller import run_exhaustive
from .gamp import BgPrior, GampConfig, denoise_input, exact_mmse_oracle, gamp
from .geometry import SystemDims, draw_channel, vec, virtual_channel
from .measurement import (
    QPSK,
    BeamSelection,
    PilotSymbols,
    TrialSeeds,
    observe,
    select_beams,
    sensing_block,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    metric: float
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


# measurement model

def measurement_identity_error(dims: SystemDims, n_instances: int, rng: np.random.Generator) -> float:
    """Max |y - c A vec(H_v)| over random noiseless instances."""
    f_c = build_codebook(dims.n_bs, Side.BS)
    w_c = build_codebook(dims.n_ue, Side.UE)
    c = np.sqrt(1.0 / dims.r_bs)
    worst = 0.0
    for _ in range(n_instances):
        ch = draw_channel(dims, int(rng.integers(1, 4)), rng)
        bs = select_beams(rng, dims.n_bs, dims.r_bs, Side.BS)
        ue = select_beams(rng, dims.n_ue, dims.r_ue, Side.UE)
        pil = PilotSymbols(QPSK[rng.integers(0, 4, dims.r_bs)])
        rec = observe(ch, bs, ue, pil, 1.0, 0.0, rng, (f_c, w_c))
        # dense Kronecker form, built without the sparse shortcut
        f_m, w_m = f_c.matrix[:, bs.indices], w_c.matrix[:, ue.indices]
        a = np.kron(pil.symbols @ f_m.T @ f_c.matrix.conj(), w_m.conj().T @ w_c.matrix)
        pred = c * a @ vec(virtual_channel(ch, f_c, w_c))
        worst = max(worst, float(np.max(np.abs(rec.y - pred))))
    return worst


def sparse_block_error(dims: SystemDims, n_instances: int, rng: np.random.Generator) -> float:
    """Max |A_sparse - A_kron| between the fast block builder and the Kronecker product."""
    f_c = build_codebook(dims.n_bs, Side.BS)
    w_c = build_codebook(dims.n_ue, Side.UE)
    worst = 0.0
    for _ in range(n_instances):
        bs = select_beams(rng, dims.n_bs, dims.r_bs, Side.BS)
        ue = select_beams(rng, dims.n_ue, dims.r_ue, Side.UE)
        pil = PilotSymbols(QPSK[rng.integers(0, 4, dims.r_bs)])
        f_m, w_m = f_c.matrix[:, bs.indices], w_c.matrix[:, ue.indices]
        a = np.kron(pil.symbols @ f_m.T @ f_c.matrix.conj(), w_m.conj().T @ w_c.matrix)
        worst = max(worst, float(np.max(np.abs(sensing_block(bs, ue, pil, (f_c, w_c)) - a))))
    return worst


# codebooks

def codebook_errors(sizes=(2, 4, 8, 16, 32, 64)) -> tuple[float, float]:
    """(max Gram deviation from I, max phase distance to the quantized grid)."""
    gram_err, phase_err = 0.0, 0.0
    for n in sizes:
        m = build_codebook(n).matrix
        gram_err = max(gram_err, float(np.max(np.abs(m.conj().T @ m - np.eye(n)))))
        grid = np.angle(quantized_phase_set(n))
        ph = np.angle(m * np.sqrt(n)).ravel()
        d = np.abs(np.angle(np.exp(1j * (ph[:, None] - grid[None, :]))))
        phase_err = max(phase_err, float(d.min(axis=1).max()))
        # entries also all have modulus 1/sqrt(n)
        gram_err = max(gram_err, float(np.max(np.abs(np.abs(m) - 1 / np.sqrt(n)))))
    return gram_err, phase_err


# denoiser

def quadrature_moments(r: complex, tau: float, prior: BgPrior, nodes: int = 160) -> tuple[complex, float]:
    """Posterior mean and variance of v | r by 2-D Gauss-Legendre integration.

    The slab integral is taken over a square centred where the integrand peaks
    (the product of two Gaussians), wide enough that the tails are below
    double precision.  The spike contributes a closed-form point mass at 0.
    """
    sig = prior.sigma_r
    centre = r * sig / (sig + tau)
    half = 12.0 * np.sqrt(sig * tau / (sig + tau))
    x, w = np.polynomial.legendre.leggauss(nodes)
    re = centre.real + half * x
    im = centre.imag + half * x
    v = re[:, None] + 1j * im[None, :]
    log_w2 = np.log(w)[:, None] + np.log(w)[None, :] + 2 * np.log(half)
    # log CN(v; 0, sig) + log CN(r; v, tau)
    log_f = -np.log(np.pi * sig) - np.abs(v) ** 2 / sig - np.log(np.pi * tau) - np.abs(r - v) ** 2 / tau
    lw = (log_w2 + log_f).ravel()
    vv = v.ravel()
    log_slab = logsumexp(lw)
    p = np.exp(lw - log_slab)
    m1 = np.sum(p * vv)
    m2 = np.sum(p * np.abs(vv) ** 2)
    with np.errstate(divide="ignore"):
        log_on = np.log(prior.rho) + log_slab
        log_off = np.log1p(-prior.rho) - np.log(np.pi * tau) - abs(r) ** 2 / tau
    pi_on = np.exp(log_on - np.logaddexp(log_on, log_off))
    mean = pi_on * m1
    second = pi_on * m2
    return complex(mean), float(second - abs(mean) ** 2)


def denoiser_grid(
    taus=tuple(np.logspace(-2, 2, 9)),
    rhos=(1.0 / 512, 0.05, 0.5),
    n_r: int = 24,
    sigma_r: float = 1.0,
):
    """(r, tau, rho) points spanning the prior's operating range."""
    pts = []
    mags = np.concatenate([[0.0], np.geomspace(0.02, 6.0, n_r - 1)])
    for rho in rhos:
        for tau in taus:
            scale = np.sqrt(tau + sigma_r)
            for k, m in enumerate(mags):
                pts.append((scale * m * np.exp(1j * 0.7 * k), float(tau), float(rho)))
    return pts


def denoiser_errors(points, sigma_r: float = 1.0) -> tuple[float, float]:
    """Max abs error of (mean, variance) against quadrature."""
    e_mean, e_var = 0.0, 0.0
    for r, tau, rho in points:
        prior = BgPrior(rho, sigma_r)
        qm, qv = quadrature_moments(r, tau, prior)
        m, v = denoise_input(r, tau, prior)
        e_mean = max(e_mean, abs(m - qm))
        e_var = max(e_var, abs(v - qv))
    return e_mean, e_var


# GAMP against exact MMSE

def small_instance(rng: np.random.Generator, n: int = 6, m: int = 12, rho: float = 1 / 3, noise_var: float = 0.01):
    """i.i.d. CN(0, 1/m) sensing of a Bernoulli-Gaussian vector with a nonempty support."""
    while True:
        on = rng.random(n) < rho
        if on.any():
            break
    v = on * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    a = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / np.sqrt(2 * m)
    y = a @ v + np.sqrt(noise_var) * (rng.standard_normal(m) + 1j * rng.standard_normal(m)) / np.sqrt(2)
    return a, y, v


def gamp_vs_oracle(n_instances: int, rng: np.random.Generator, snr_db: float = 20.0, rho: float = 1 / 3) -> np.ndarray:
    """Relative L2 distance of GAMP to the exact posterior mean, per instance."""
    noise_var = 10 ** (-snr_db / 10)
    prior = BgPrior(rho, 1.0)
    out = []
    for _ in range(n_instances):
        a, y, _ = small_instance(rng, rho=rho, noise_var=noise_var)
        g = gamp(a, y, 1.0, noise_var, prior, GampConfig()).v_hat
        o = exact_mmse_oracle(a, y, 1.0, noise_var, prior)
        out.append(np.linalg.norm(g - o) / np.linalg.norm(o))
    return np.asarray(out)


# exhaustive sweep

def exhaustive_recovery_error(dims: SystemDims, n_instances: int, master_seed: int = 0) -> tuple[float, set[int]]:
    """Max |v_hat - vec(H_v)| of the noiseless sweep on on-grid channels, and the t_e values seen."""
    f_c = build_codebook(dims.n_bs, Side.BS)
    w_c = build_codebook(dims.n_ue, Side.UE)
    worst, t_es = 0.0, set()
    for t in range(n_instances):
        seeds = TrialSeeds(master_seed, (t,))
        ch = draw_channel(dims, 1 + t % 3, seeds.channel(0), on_grid=True)
        out = run_exhaustive(ch, dims, seeds, 1.0, 0.0)
        worst = max(worst, float(np.max(np.abs(out.estimate.v_hat - vec(virtual_channel(ch, f_c, w_c))))))
        t_es.add(out.t_e)
    return worst, t_es


def run_selftest(quick: bool = True, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    n = 100 if quick else 1000
    results = []

    def timed(name, fn, judge):
        t0 = time.perf_counter()
        metric, passed, detail = judge(fn())
        results.append(CheckResult(name, passed, metric, detail, time.perf_counter() - t0))

    for dims in (SystemDims(8, 4, 2, 2), SystemDims()):
        label = f"({dims.n_bs},{dims.n_ue},{dims.r_bs},{dims.r_ue})"
        timed(
            f"measurement identity {label}",
            lambda d=dims: measurement_identity_error(d, n, rng),
            lambda e: (e, e <= 1e-10, f"max abs err {e:.2e}"),
        )
    timed(
        "codebook unitarity / phase grid",
        codebook_errors,
        lambda e: (max(e), e[0] <= 1e-12 and e[1] <= 1e-9, f"gram {e[0]:.1e}, phase {e[1]:.1e} rad"),
    )
    pts = denoiser_grid(n_r=8 if quick else 24)
    timed(
        f"denoiser vs quadrature ({len(pts)} points)",
        lambda: denoiser_errors(pts),
        lambda e: (max(e), max(e) <= 1e-6, f"mean err {e[0]:.1e}, var err {e[1]:.1e}"),
    )
    k = 30 if quick else 100
    need = int(np.ceil(0.9 * k))
    timed(
        f"GAMP vs exact MMSE ({k} instances)",
        lambda: gamp_vs_oracle(k, rng),
        lambda e: (float(np.sum(e <= 0.1)), int(np.sum(e <= 0.1)) >= need, f"{int(np.sum(e <= 0.1))}/{k} within 10%"),
    )
    timed(
        "exhaustive sweep, noiseless on-grid",
        lambda: exhaustive_recovery_error(SystemDims(), 10 if quick else 50, seed),
        lambda e: (e[0], e[0] <= 1e-9 and e[1] == {128}, f"max err {e[0]:.1e}, t_e {sorted(e[1])}"),
    )
    return results
