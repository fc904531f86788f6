"""Grid-search recovery of the signal field from intensity ratios.

Two detector settings are enough to pin the field down: the wave plate at 0
splits the raw amplitudes, the wave plate at 45 degrees mixes them with a
sin(phi) interference term.  The measured observable at each setting is the
regularized port ratio Gamma = I_H / (I_V + xi).  A candidate field is
parameterized as (A_H, A_V) = (sin psi, cos psi) with psi in [0, pi/2] and a
relative phase phi in [-pi/2, pi/2]; the search minimizes the squared error
of the two ratios over a fixed rectangular grid.

Only sin(phi) enters the model at these settings, so phases outside the
principal branch alias onto it.  Restricting the grid to the branch makes
the recovered phi unique up to that physical ambiguity.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._kernels import se_argmin
from .errors import ParameterError
from .optics import SignalField, detected_intensities, intensity_pair

THETA_SPLIT = 0.0
THETA_MIX = math.pi / 4.0


@dataclass(frozen=True)
class GridSpec:
    """Search grid geometry and regularization constants."""

    psi_step: float = 0.005
    phi_step: float = 0.01
    phi_min: float = -math.pi / 2.0
    phi_max: float = math.pi / 2.0
    xi: float = 1e-9
    tie_eps: float = 1e-12

    def __post_init__(self) -> None:
        if self.psi_step <= 0 or self.phi_step <= 0:
            raise ParameterError("grid steps must be positive")
        if self.phi_max <= self.phi_min:
            raise ParameterError("phi_max must exceed phi_min")
        if self.xi <= 0:
            raise ParameterError("xi must be positive")
        if self.tie_eps < 0:
            raise ParameterError("tie_eps must be non-negative")

    def psi_axis(self) -> np.ndarray:
        n = int((math.pi / 2.0) / self.psi_step) + 1
        return self.psi_step * np.arange(n)

    def phi_axis(self) -> np.ndarray:
        n = int((self.phi_max - self.phi_min) / self.phi_step) + 1
        return self.phi_min + self.phi_step * np.arange(n)


DEFAULT_GRID = GridSpec()


def intensity_ratio(i_h: float, i_v: float, xi: float = DEFAULT_GRID.xi) -> float:
    """Regularized port ratio I_H / (I_V + xi)."""
    if i_h < 0 or i_v < 0:
        raise ParameterError("intensities must be non-negative")
    if xi <= 0:
        raise ParameterError("xi must be positive")
    return i_h / (i_v + xi)


@lru_cache(maxsize=8)
def _ratio_tables(grid: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Precompute Gamma(psi, phi) at both settings, once per grid."""
    psi = grid.psi_axis()
    phi = grid.phi_axis()
    a_h = np.sin(psi)[:, None]
    a_v = np.cos(psi)[:, None]
    tables = []
    for theta in (THETA_SPLIT, THETA_MIX):
        i_h, i_v = intensity_pair(a_h, a_v, phi[None, :], theta)
        tables.append(np.ascontiguousarray(i_h / (i_v + grid.xi)))
    return psi, phi, tables[0], tables[1]


def measured_ratios(field: SignalField, grid: GridSpec = DEFAULT_GRID) -> tuple[float, float]:
    """Ideal ratio pair (Gamma at 0, Gamma at 45 deg) a field would produce."""
    out = []
    for theta in (THETA_SPLIT, THETA_MIX):
        i_h, i_v = detected_intensities(field, theta)
        out.append(i_h / (i_v + grid.xi))
    return out[0], out[1]


@dataclass(frozen=True)
class ReconstructionResult:
    """Best grid point for one ratio pair.

    n_ties counts grid points whose squared error is within tie_eps of the
    minimum, including the winner; more than one means the data do not single
    out a field at this resolution and the result keeps the first minimum in
    row-major (psi, then phi) order.
    """

    field: SignalField
    psi: float
    se: float
    n_ties: int
    index: tuple[int, int]

    @property
    def degenerate(self) -> bool:
        return self.n_ties > 1

    @property
    def phi(self) -> float:
        return self.field.phi


def reconstruct_field(gamma_0: float, gamma_45: float, grid: GridSpec = DEFAULT_GRID) -> ReconstructionResult:
    """Recover the field from one measured ratio pair."""
    if not (math.isfinite(gamma_0) and math.isfinite(gamma_45)):
        raise ParameterError("ratios must be finite")
    if gamma_0 < 0 or gamma_45 < 0:
        raise ParameterError("ratios must be non-negative")
    psi_axis, phi_axis, tab0, tab45 = _ratio_tables(grid)
    i_psi, i_phi, se, n_ties = se_argmin(tab0, tab45, gamma_0, gamma_45, grid.tie_eps)
    psi = float(psi_axis[i_psi])
    phi = float(phi_axis[i_phi])
    field = SignalField(math.sin(psi), math.cos(psi), phi)
    return ReconstructionResult(field, psi, se, n_ties, (int(i_psi), int(i_phi)))


def reconstruct_map(ratio_pairs, grid: GridSpec = DEFAULT_GRID, threads: int = 1) -> list[ReconstructionResult]:
    """Reconstruct a batch of ratio pairs, optionally across worker threads.

    Rows are processed in chunks but results come back in input order, so the
    output is independent of the thread count.
    """
    pairs = np.asarray(ratio_pairs, dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ParameterError("expected an (n, 2) array of ratio pairs")
    if threads < 1:
        raise ParameterError("threads must be at least 1")
    _ratio_tables(grid)

    def _run(rows: np.ndarray) -> list[ReconstructionResult]:
        return [reconstruct_field(float(g0), float(g45), grid) for g0, g45 in rows]

    if threads == 1 or len(pairs) < 2:
        return _run(pairs)
    chunks = np.array_split(pairs, min(threads, len(pairs)))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(_run, chunks))
    return [result for part in parts for result in part]
