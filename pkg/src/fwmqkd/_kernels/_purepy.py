"""Vectorized numpy implementation of the sampling and search kernels.

This backend mirrors the compiled core exactly.  The Philox generator works in
pure integer arithmetic, so its uniforms are bitwise identical to the compiled
ones.  The Poisson search shares the same arithmetic ordering; the only
tolerated divergence is ~1 ulp in exp() between numpy's vectorized loop and
libm, which cannot move an integer count in practice.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"

# Philox4x32-10 constants (multipliers and Weyl key increments).
_M0 = 0xD2511F53
_M1 = 0xCD9E8D57
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = 0xFFFFFFFF
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


def philox4x32(ctr: np.ndarray, key: np.ndarray) -> np.ndarray:
    """Run 10 Philox4x32 rounds on an (n, 4) uint32 counter block."""
    ctr = np.asarray(ctr, dtype=np.uint32)
    c0 = ctr[:, 0].astype(np.uint64)
    c1 = ctr[:, 1].astype(np.uint64)
    c2 = ctr[:, 2].astype(np.uint64)
    c3 = ctr[:, 3].astype(np.uint64)
    k0 = int(key[0]) & _MASK32
    k1 = int(key[1]) & _MASK32
    mask = np.uint64(_MASK32)
    m0 = np.uint64(_M0)
    m1 = np.uint64(_M1)
    for r in range(10):
        rk0 = np.uint64((k0 + r * _W0) & _MASK32)
        rk1 = np.uint64((k1 + r * _W1) & _MASK32)
        p0 = m0 * c0
        p1 = m1 * c2
        hi0 = p0 >> np.uint64(32)
        lo0 = p0 & mask
        hi1 = p1 >> np.uint64(32)
        lo1 = p1 & mask
        c0 = hi1 ^ c1 ^ rk0
        c1 = lo1
        c2 = hi0 ^ c3 ^ rk1
        c3 = lo0
    out = np.empty((ctr.shape[0], 4), dtype=np.uint32)
    out[:, 0] = c0.astype(np.uint32)
    out[:, 1] = c1.astype(np.uint32)
    out[:, 2] = c2.astype(np.uint32)
    out[:, 3] = c3.astype(np.uint32)
    return out


def _u01(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    # 53-bit mantissa from two 32-bit words, uniform on [0, 1)
    word = lo.astype(np.uint64) | (hi.astype(np.uint64) << np.uint64(32))
    return (word >> np.uint64(11)).astype(np.float64) * _INV53


def pulse_randoms(seed: int, stream: int, start: int, count: int):
    """Positional per-pulse randoms for pulses [start, start+count).

    Returns (u_gain, u_h, u_v, delay_bit, basis_bit).  Pulse i consumes the
    two counter blocks (lo32(i), hi32(i), stream, 0|1), so the mapping from
    pulse index to randoms is fixed regardless of chunking.
    """
    idx = (np.uint64(start) + np.arange(count, dtype=np.uint64))
    ctr = np.empty((2 * count, 4), dtype=np.uint32)
    lo = (idx & np.uint64(_MASK32)).astype(np.uint32)
    hi = (idx >> np.uint64(32)).astype(np.uint32)
    ctr[0::2, 0] = lo
    ctr[1::2, 0] = lo
    ctr[0::2, 1] = hi
    ctr[1::2, 1] = hi
    ctr[:, 2] = np.uint32(stream)
    ctr[0::2, 3] = 0
    ctr[1::2, 3] = 1
    key = np.array([seed & _MASK32, (seed >> 32) & _MASK32], dtype=np.uint32)
    w = philox4x32(ctr, key)
    blk0 = w[0::2]
    blk1 = w[1::2]
    u_gain = _u01(blk0[:, 0], blk0[:, 1])
    u_h = _u01(blk0[:, 2], blk0[:, 3])
    u_v = _u01(blk1[:, 0], blk1[:, 1])
    delay_bit = (blk1[:, 2] >> np.uint32(31)).astype(np.uint8)
    basis_bit = (blk1[:, 3] >> np.uint32(31)).astype(np.uint8)
    return u_gain, u_h, u_v, delay_bit, basis_bit


def poisson_counts(u: np.ndarray, lam: np.ndarray, max_photons: int):
    """Poisson inverse-CDF search clamped at max_photons.

    The count is the number of CDF levels below u, accumulated with the
    recurrence p_k = p_{k-1} * lam / k, so a clamp is exactly the event
    u > CDF(max_photons).  Returns (counts int64, clamped bool).
    """
    u = np.asarray(u, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    p = np.exp(-lam)
    cdf = p.copy()
    n = np.zeros(lam.shape, dtype=np.int64)
    for k in range(1, max_photons + 1):
        n += u > cdf
        p = p * (lam / k)
        cdf = cdf + p
    clamped = u > cdf
    return n, clamped


def se_argmin(tab0: np.ndarray, tab45: np.ndarray, g0: float, g45: float,
              tie_eps: float):
    """Squared-error argmin over the (psi, phi) ratio tables.

    Row-major first minimum, i.e. ties resolve to the lowest psi index and
    then the lowest phi index.  Returns (i_psi, i_phi, se_min, n_ties) where
    n_ties counts grid points within tie_eps of the minimum.
    """
    se = (tab0 - g0) ** 2 + (tab45 - g45) ** 2
    flat = int(np.argmin(se))
    se_min = float(se.flat[flat])
    n_ties = int(np.count_nonzero(se <= se_min + tie_eps))
    i_psi, i_phi = divmod(flat, se.shape[1])
    return i_psi, i_phi, se_min, n_ties
