"""Photon statistics of the attenuated signal at the two detector ports.

Each pulse carries a random overall gain (a Gamma variate that reproduces a
requested zero-delay correlation g2) and the two ports then receive
independent Poisson counts whose means split the per-pulse budget in
proportion to the port intensities.  Counts are clamped at a configurable
photon-number resolution, mirroring a detector that cannot distinguish
higher numbers.

All randomness flows through the counter-based generator in _kernels, so a
batch of pulses is reproducible from (seed, stream, pulse index) alone and
independent of batch boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincinv, ndtri

from ._kernels import STREAM_DETECTOR, poisson_counts, pulse_randoms
from .errors import DegenerateInputError, ParameterError

VOLTS_PER_PHOTON = 0.6
SIPM_NOISE_VOLTS = 0.05


@dataclass(frozen=True)
class AttenuationConfig:
    """Mean photon budget per pulse and the pulse-to-pulse gain statistics.

    The seed is deliberately not part of this config: one run-level seed
    governs every stream of an artifact, so attenuation stays a pure
    description of the source.
    """

    mean_total_photons: float = 1.0
    g2_target: float = 1.0
    max_photons: int = 5

    def __post_init__(self) -> None:
        if self.mean_total_photons <= 0:
            raise ParameterError("mean_total_photons must be positive")
        if self.g2_target < 1.0:
            raise ParameterError("g2_target below 1 is not reachable with a gain mixture")
        if self.max_photons < 1:
            raise ParameterError("max_photons must be at least 1")


def gain_from_uniform(u, g2: float):
    """Map uniforms to Gamma-distributed gains with unit mean.

    The gain variance equals g2 - 1, which is exactly the excess the mixed
    Poisson counts show in their normalized second-order correlation.  At
    g2 = 1 the gain collapses to the constant 1 and no special function is
    evaluated.
    """
    var = g2 - 1.0
    if var < 0:
        raise ParameterError("g2 must be at least 1")
    u = np.asarray(u, dtype=np.float64)
    if var == 0.0:
        return np.ones_like(u)
    return gammaincinv(1.0 / var, u) * var


@dataclass(frozen=True)
class DetectionBatch:
    """Counts and bookkeeping for a contiguous run of pulses."""

    n_h: np.ndarray
    n_v: np.ndarray
    clamped: np.ndarray
    gain: np.ndarray
    delay_bits: np.ndarray
    basis_bits: np.ndarray


def draw_photon_counts(
    i_h,
    i_v,
    config: AttenuationConfig,
    seed: int,
    count: int,
    start: int = 0,
    stream: int = STREAM_DETECTOR,
) -> DetectionBatch:
    """Draw per-pulse photon counts for both ports.

    i_h and i_v may be scalars or per-pulse arrays of length count.  The two
    raw bits that ride along with each pulse's uniforms are returned so a
    caller can use them for random pulse settings without a second pass over
    the generator.
    """
    if count < 0:
        raise ParameterError("count must be non-negative")
    i_h = np.asarray(i_h, dtype=np.float64)
    i_v = np.asarray(i_v, dtype=np.float64)
    if np.any(i_h < 0) or np.any(i_v < 0):
        raise ParameterError("intensities must be non-negative")
    total = i_h + i_v
    if np.any(total <= 0):
        raise DegenerateInputError("zero total intensity cannot split a photon budget")

    u_gain, u_h, u_v, delay_bits, basis_bits = pulse_randoms(seed, stream, start, count)
    gain = gain_from_uniform(u_gain, config.g2_target)
    lam_h = np.ascontiguousarray(gain * (config.mean_total_photons * (i_h / total)) * np.ones(count))
    lam_v = np.ascontiguousarray(gain * (config.mean_total_photons * (i_v / total)) * np.ones(count))
    n_h, clamped_h = poisson_counts(u_h, lam_h, config.max_photons)
    n_v, clamped_v = poisson_counts(u_v, lam_v, config.max_photons)
    return DetectionBatch(n_h, n_v, clamped_h | clamped_v, gain, delay_bits, basis_bits)


def compute_g2(total_counts) -> float:
    """Normalized second-order correlation <n(n-1)> / <n>^2 of pulse totals."""
    n = np.asarray(total_counts, dtype=np.float64)
    mean = n.mean()
    if mean == 0.0:
        raise DegenerateInputError("no photons recorded, g2 is undefined")
    return float((n * (n - 1.0)).mean() / (mean * mean))


@dataclass(frozen=True)
class ContrastStats:
    """Contrast estimates over a set of pulse records.

    p_bar averages the per-record contrast over the m_used records that saw
    at least one photon; p_cum is the contrast of the pooled counts.  sigma
    is the standard error of p_bar and is reported as 0.0 when fewer than two
    records contribute, since a spread cannot be estimated from them.
    """

    p_bar: float
    p_cum: float
    sigma: float
    m_total: int
    m_used: int
    total_h: int
    total_v: int

    def to_dict(self) -> dict:
        return {
            "N_H": self.total_h,
            "N_V": self.total_v,
            "P_cum": self.p_cum,
            "P_bar": self.p_bar,
            "sigma_P": self.sigma,
            "M": self.m_total,
            "M_used": self.m_used,
        }


def accumulate_contrast(n_h, n_v) -> ContrastStats:
    """Reduce per-pulse counts to contrast estimates.

    Per-record contrasts and the residual sum use compensated summation so
    the estimates do not drift over long runs.
    """
    n_h = np.asarray(n_h, dtype=np.int64)
    n_v = np.asarray(n_v, dtype=np.int64)
    if n_h.shape != n_v.shape:
        raise ParameterError("port count arrays must have matching shapes")
    totals = n_h + n_v
    mask = totals > 0
    m_total = int(n_h.size)
    m_used = int(np.count_nonzero(mask))
    total_h = int(n_h.sum())
    total_v = int(n_v.sum())
    pooled = total_h + total_v
    if pooled == 0:
        raise DegenerateInputError("no photons in any record, contrast is undefined")
    p_cum = (total_h - total_v) / pooled
    p_k = (n_h[mask] - n_v[mask]) / totals[mask]
    p_bar = math.fsum(p_k) / m_used
    if m_used < 2:
        sigma = 0.0
    else:
        residual = math.fsum((p - p_bar) ** 2 for p in p_k)
        sigma = math.sqrt(residual / (m_used * (m_used - 1)))
    return ContrastStats(p_bar, p_cum, sigma, m_total, m_used, total_h, total_v)


@dataclass(frozen=True)
class Resolution:
    """Separation of two contrast estimates in units of their joint error."""

    value: float
    saturated: bool


def resolution(stats_a: ContrastStats, stats_b: ContrastStats) -> Resolution:
    """Distinguishability |p_bar_a - p_bar_b| / sqrt(sigma_a^2 + sigma_b^2).

    When both spreads are zero the settings are either identical or
    trivially separated; the value saturates to inf and the flag records
    that the denominator carried no information.
    """
    denom = math.hypot(stats_a.sigma, stats_b.sigma)
    num = abs(stats_a.p_bar - stats_b.p_bar)
    if denom == 0.0:
        return Resolution(math.inf, True)
    return Resolution(num / denom, False)


def emulate_sipm(counts, noise_u=None, volts_per_photon: float = VOLTS_PER_PHOTON,
                 noise_volts: float = SIPM_NOISE_VOLTS):
    """Convert photon counts to detector voltages.

    noise_u, when given, is a uniform array mapped through the normal
    quantile to gaussian jitter of width noise_volts.  With the defaults the
    jitter is a twelfth of the single-photon step, so a misround needs a six
    sigma excursion.
    """
    volts = np.asarray(counts, dtype=np.float64) * volts_per_photon
    if noise_u is not None:
        u = np.clip(np.asarray(noise_u, dtype=np.float64), 1e-16, 1.0 - 1e-16)
        volts = volts + noise_volts * ndtri(u)
    return volts


def invert_sipm(volts, volts_per_photon: float = VOLTS_PER_PHOTON) -> np.ndarray:
    """Recover photon numbers from voltages by rounding to the nearest step."""
    counts = np.rint(np.asarray(volts, dtype=np.float64) / volts_per_photon)
    return np.maximum(counts, 0.0).astype(np.int64)
