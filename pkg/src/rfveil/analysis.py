"""Closed-form performance of the sample-mean CSI estimator under random phase rotations.

Model per subcarrier: ``m_n = h exp(j Z_n) + w_n`` with ``Z_n`` of mean ``mu``
and variance ``xi2`` and ``w_n`` circular Gaussian of variance ``sigma2``.
Everything here is in radians.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .obfuscation import DistributionSpec, sample_phases


@dataclass(frozen=True)
class EstimatorTheoryInput:
    h_sq: float
    sigma2: float
    xi2: float
    mu: float
    N: int

    def __post_init__(self):
        vals = (self.h_sq, self.sigma2, self.xi2, self.mu)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("inputs must be finite")
        if self.h_sq < 0 or self.sigma2 < 0 or self.xi2 < 0:
            raise ValueError("|h|^2, sigma^2 and xi^2 must be non-negative")
        if self.N < 1:
            raise ValueError("N must be >= 1")


def mcrb(sigma2, N):
    """Modified Cramer-Rao bound on the channel estimate, ``sigma2 / N``."""
    return sigma2 / N


def bias_sq(h_sq, xi2, mu=0.0):
    """Squared bias of the sample mean; ``mu=0`` is the legitimate receiver."""
    return h_sq * (1.0 + np.exp(-xi2) - 2.0 * np.cos(mu) * np.exp(-xi2 / 2.0))


def estimator_variance(h_sq, sigma2, xi2, N):
    return h_sq / N - h_sq / N * np.exp(-xi2) + sigma2 / N


def estimator_mse(inp: EstimatorTheoryInput):
    return bias_sq(inp.h_sq, inp.xi2, inp.mu) + estimator_variance(inp.h_sq, inp.sigma2, inp.xi2, inp.N)


def mse(h_sq, sigma2, xi2, mu, N):
    """Array-friendly form of :func:`estimator_mse`."""
    return bias_sq(h_sq, xi2, mu) + estimator_variance(h_sq, sigma2, xi2, N)


def mcrb_bounds(h_sq, sigma2, xi2, N):
    """Non-tight bounds ``(magnitude, phase, rotation)``.

    The rotation bound degenerates to 0 when either noise source vanishes.
    """
    if not h_sq > 0:
        raise ValueError("phase bound needs |h|^2 > 0")
    magnitude = sigma2 / (2 * N)
    phase = magnitude / h_sq
    if xi2 == 0 or sigma2 == 0:
        rotation = 0.0
    else:
        rotation = 1.0 / (1.0 / phase + N / xi2)
    return magnitude, phase, rotation


@dataclass(frozen=True)
class EmpiricalStats:
    bias_sq: float
    variance: float
    mse: float


def empirical_estimator_stats(h: complex, sigma2: float, spec: DistributionSpec, N: int,
                              trials: int, seed: int = 0, chunk: int = 2000) -> EmpiricalStats:
    """Monte Carlo bias^2 / variance / MSE of the sample-mean estimator.

    Variance is taken as MSE minus squared bias, both in the complex plane.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    rng = np.random.default_rng(seed)
    means = np.empty(trials, dtype=complex)
    for start in range(0, trials, chunk):
        t = min(chunk, trials - start)
        u1 = 1.0 - rng.random((t, N))
        u2 = rng.random((t, N))
        z = np.radians(sample_phases(spec, u1, u2))
        m = h * np.exp(1j * z)
        if sigma2 > 0:
            m = m + np.sqrt(sigma2 / 2) * (rng.standard_normal((t, N)) + 1j * rng.standard_normal((t, N)))
        means[start:start + t] = m.mean(axis=1)
    err = means - h
    b = err.mean()
    b2 = float(abs(b) ** 2)
    total = float(np.mean(np.abs(err) ** 2))
    return EmpiricalStats(b2, total - b2, total)


BIAS_MU_DEG = (0, 1, 2, 5, 10, 20, 45, 90, 180)
MSE_XI2_GRID = (0.1, 0.4, 0.7, 1.0)


def bias_curves(xi2_grid, mus_deg=BIAS_MU_DEG) -> list[tuple[float, str, float]]:
    """Normalized squared bias over ``xi2`` for each attacker offset (degrees)."""
    rows = []
    for mu in mus_deg:
        series = "legitimate" if mu == 0 else f"attacker_mu{mu}"
        for x in xi2_grid:
            rows.append((float(x), series, float(bias_sq(1.0, x, np.radians(mu)))))
    return rows


def mse_curves(N_grid, xi2_grid=MSE_XI2_GRID, h_sq=1.0, sigma2=1.0, mu_attacker_deg=90.0):
    rows = []
    for n in N_grid:
        rows.append((float(n), "mcrb", float(mcrb(sigma2, n))))
        for x in xi2_grid:
            rows.append((float(n), f"variance_xi2_{x}", float(estimator_variance(h_sq, sigma2, x, n))))
            rows.append((float(n), f"mse_legitimate_xi2_{x}", float(mse(h_sq, sigma2, x, 0.0, n))))
            rows.append((float(n), f"mse_attacker_xi2_{x}",
                         float(mse(h_sq, sigma2, x, np.radians(mu_attacker_deg), n))))
    return rows
