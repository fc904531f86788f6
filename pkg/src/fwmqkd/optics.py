"""Jones-calculus detection optics.

The detection arm is a rotatable quarter-wave plate followed by a fixed
polarizing beam splitter.  Fields are two-component Jones vectors in the
(H, V) basis; the signal field is parameterized by real amplitudes A_H, A_V
and the relative phase phi of the horizontal component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFieldError, DegenerateInputError, ParameterError


@dataclass(frozen=True)
class SignalField:
    """Normalized signal field (A_H e^{i phi}, A_V) with A_H^2 + A_V^2 = 1."""

    a_h: float
    a_v: float
    phi: float

    def __post_init__(self) -> None:
        if self.a_h < 0 or self.a_v < 0:
            raise ParameterError("field amplitudes must be non-negative")
        if not (-math.pi < self.phi <= math.pi):
            raise ParameterError("phi must lie in (-pi, pi]")
        norm = self.a_h * self.a_h + self.a_v * self.a_v
        if abs(norm - 1.0) > 1e-9:
            raise ParameterError(f"field is not normalized: A_H^2+A_V^2 = {norm!r}")

    @classmethod
    def normalized(cls, a_h: float, a_v: float, phi: float) -> "SignalField":
        """Build a field from unnormalized amplitudes."""
        scale = math.hypot(a_h, a_v)
        if scale == 0.0:
            raise DegenerateFieldError("both amplitudes are zero")
        phi = wrap_phase(phi)
        return cls(a_h / scale, a_v / scale, phi)

    @property
    def jones(self) -> np.ndarray:
        """Jones vector in the (H, V) basis."""
        return np.array([self.a_h * np.exp(1j * self.phi), self.a_v])


def wrap_phase(phi: float) -> float:
    """Wrap an angle to the interval (-pi, pi]."""
    wrapped = -((-phi + math.pi) % (2.0 * math.pi) - math.pi)
    return wrapped


def rotation_matrix(theta: float) -> np.ndarray:
    """Basis rotation by theta radians: [[cos, -sin], [sin, cos]]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def qwp_matrix(theta: float) -> np.ndarray:
    """Quarter-wave plate with fast axis at theta, rotated into the lab frame.

    Q(theta) = R(-theta) @ diag(1, i) @ R(theta).  Unitary for any theta.
    """
    retarder = np.diag([1.0 + 0.0j, 1.0j])
    return rotation_matrix(-theta) @ retarder @ rotation_matrix(theta)


def detected_intensities(field: SignalField, theta_qwp: float) -> tuple[float, float]:
    """Port intensities (I_H, I_V) behind the wave plate and splitter.

    I_X = |Pi_X Q(theta) e_S|^2 with Pi_H = diag(1, 0), Pi_V = diag(0, 1).
    At theta = 0 the plate only retards V, so the split is (A_H^2, A_V^2)
    and the phase is invisible; at theta = 45 deg it reduces to
    I_H = (1 + 2 A_H A_V sin phi) / 2.
    """
    out = qwp_matrix(theta_qwp) @ field.jones
    i_h = float(np.abs(out[0]) ** 2)
    i_v = float(np.abs(out[1]) ** 2)
    return i_h, i_v


def intensity_pair(a_h, a_v, phi, theta_qwp: float):
    """Broadcasting form of detected_intensities over amplitude/phase arrays.

    Uses the same Q(theta) entries applied componentwise, so it agrees with
    the matrix route to rounding.
    """
    q = qwp_matrix(theta_qwp)
    e_h = np.asarray(a_h) * np.exp(1j * np.asarray(phi))
    e_v = np.asarray(a_v)
    out_h = q[0, 0] * e_h + q[0, 1] * e_v
    out_v = q[1, 0] * e_h + q[1, 1] * e_v
    return np.abs(out_h) ** 2, np.abs(out_v) ** 2


def polarization_contrast(i_h: float, i_v: float) -> float:
    """Normalized port contrast (I_H - I_V) / (I_H + I_V)."""
    if i_h < 0 or i_v < 0:
        raise ParameterError("intensities must be non-negative")
    total = i_h + i_v
    if total == 0.0:
        raise DegenerateInputError("zero total intensity has no contrast")
    return (i_h - i_v) / total
