"""Grid-search field recovery from two-setting intensity ratios."""

import math

import numpy as np
import pytest

from fwmqkd.errors import ParameterError
from fwmqkd.optics import SignalField, detected_intensities
from fwmqkd.reconstruct import (
    DEFAULT_GRID,
    THETA_MIX,
    THETA_SPLIT,
    GridSpec,
    intensity_ratio,
    measured_ratios,
    reconstruct_field,
    reconstruct_map,
)


def test_intensity_ratio_limits():
    assert intensity_ratio(0.0, 1.0) == 0.0
    assert intensity_ratio(1.0, 0.0) == pytest.approx(1e9, rel=1e-12)
    assert intensity_ratio(0.5, 0.5) == pytest.approx(1.0, rel=3e-9)


def test_intensity_ratio_rejects_bad_inputs():
    with pytest.raises(ParameterError):
        intensity_ratio(-0.1, 0.5)
    with pytest.raises(ParameterError):
        intensity_ratio(0.5, -0.1)
    with pytest.raises(ParameterError):
        intensity_ratio(0.5, 0.5, xi=0.0)


class TestGridSpec:
    def test_default_axes_have_matched_sizes(self):
        assert len(DEFAULT_GRID.psi_axis()) == 315
        assert len(DEFAULT_GRID.phi_axis()) == 315
        assert DEFAULT_GRID.psi_axis()[0] == 0.0
        assert DEFAULT_GRID.phi_axis()[0] == -math.pi / 2

    def test_axes_stay_inside_their_ranges(self):
        assert DEFAULT_GRID.psi_axis()[-1] <= math.pi / 2
        assert DEFAULT_GRID.phi_axis()[-1] <= math.pi / 2

    def test_validation(self):
        with pytest.raises(ParameterError):
            GridSpec(psi_step=0.0)
        with pytest.raises(ParameterError):
            GridSpec(phi_step=-0.01)
        with pytest.raises(ParameterError):
            GridSpec(phi_min=1.0, phi_max=-1.0)
        with pytest.raises(ParameterError):
            GridSpec(xi=0.0)


def test_measured_ratios_match_direct_intensities():
    f = SignalField.normalized(0.7, 0.5, 0.4)
    g0, g45 = measured_ratios(f)
    i_h0, i_v0 = detected_intensities(f, THETA_SPLIT)
    i_h45, i_v45 = detected_intensities(f, THETA_MIX)
    assert g0 == pytest.approx(i_h0 / (i_v0 + DEFAULT_GRID.xi), rel=1e-15)
    assert g45 == pytest.approx(i_h45 / (i_v45 + DEFAULT_GRID.xi), rel=1e-15)


def test_roundtrip_lands_within_one_grid_step():
    psi_true, phi_true = math.radians(30.0), 0.25
    truth = SignalField(math.sin(psi_true), math.cos(psi_true), phi_true)
    result = reconstruct_field(*measured_ratios(truth))
    assert abs(result.psi - psi_true) <= DEFAULT_GRID.psi_step
    assert abs(result.phi - phi_true) <= DEFAULT_GRID.phi_step
    assert not result.degenerate
    assert result.field.a_h == pytest.approx(truth.a_h, abs=0.005)
    assert result.field.a_v == pytest.approx(truth.a_v, abs=0.005)


def test_on_grid_truths_recover_their_exact_node():
    """A truth sitting on a grid node is the unique zero of the squared error.

    This is the resolution guarantee of the search: off-grid truths in the
    flat-phase regions (small A_H*A_V, or |phi| near pi/2 where sin phi
    saturates) can legitimately land several phi steps away, so exactness is
    only promised on the lattice itself.
    """
    psi_axis = DEFAULT_GRID.psi_axis()
    phi_axis = DEFAULT_GRID.phi_axis()
    for i, j in [(20, 5), (100, 160), (157, 300), (250, 40), (294, 220)]:
        truth = SignalField(
            math.sin(psi_axis[i]), math.cos(psi_axis[i]), float(phi_axis[j])
        )
        result = reconstruct_field(*measured_ratios(truth))
        assert result.index == (i, j)
        assert result.se == 0.0
        assert not result.degenerate


def test_pure_vertical_field_is_degenerate_in_phase():
    """With no horizontal amplitude the phase row is flat, so every phi ties."""
    truth = SignalField(0.0, 1.0, 0.7)
    result = reconstruct_field(*measured_ratios(truth))
    assert result.psi == 0.0
    assert result.degenerate
    assert result.n_ties == len(DEFAULT_GRID.phi_axis())
    # tie break keeps the first grid point in row-major order
    assert result.index == (0, 0)
    assert result.phi == pytest.approx(-math.pi / 2, abs=1e-12)


def test_reconstruction_tolerates_one_percent_noise():
    rng = np.random.default_rng(99)
    truth = SignalField(math.sin(0.7), math.cos(0.7), 0.6)
    errors = []
    for _ in range(250):
        pairs = []
        for theta in (THETA_SPLIT, THETA_MIX):
            i_h, i_v = detected_intensities(truth, theta)
            i_h *= 1.0 + rng.normal(0.0, 0.01)
            i_v *= 1.0 + rng.normal(0.0, 0.01)
            pairs.append(intensity_ratio(max(i_h, 0.0), max(i_v, 0.0)))
        result = reconstruct_field(*pairs)
        errors.append(abs(result.phi - 0.6))
    assert np.median(errors) <= 0.05


def test_map_results_do_not_depend_on_thread_count():
    rng = np.random.default_rng(8)
    fields = [
        SignalField.normalized(rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0), rng.uniform(-1.5, 1.5))
        for _ in range(23)
    ]
    pairs = [measured_ratios(f) for f in fields]
    serial = reconstruct_map(pairs, threads=1)
    threaded = reconstruct_map(pairs, threads=3)
    assert len(serial) == len(threaded) == 23
    for a, b in zip(serial, threaded):
        assert a.index == b.index
        assert a.se == b.se
        assert a.n_ties == b.n_ties
        assert (a.field.a_h, a.field.a_v, a.field.phi) == (
            b.field.a_h,
            b.field.a_v,
            b.field.phi,
        )


def test_reconstruct_field_input_validation():
    with pytest.raises(ParameterError):
        reconstruct_field(float("nan"), 1.0)
    with pytest.raises(ParameterError):
        reconstruct_field(1.0, float("inf"))
    with pytest.raises(ParameterError):
        reconstruct_field(-0.5, 1.0)


def test_reconstruct_map_input_validation():
    with pytest.raises(ParameterError):
        reconstruct_map(np.zeros((3, 4)))
    with pytest.raises(ParameterError):
        reconstruct_map([(1.0, 1.0)], threads=0)
