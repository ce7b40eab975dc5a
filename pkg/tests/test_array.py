import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import distances_from_coordinates, element_positions, gain_direct

from fr3lab.array import (
    SPEED_OF_LIGHT,
    FieldPoint,
    angle_grid,
    array_gain,
    beampattern,
    build_ula,
    element_distances,
    farfield_steering,
    half_power_beamwidth,
    nearfield_steering,
    pointing_weights,
    wavelength,
)


def test_ula_geometry():
    g = build_ula(32, 24e9)
    lam = SPEED_OF_LIGHT / 24e9
    assert g.spacing == pytest.approx(lam / 2)
    assert g.element_positions.mean() == pytest.approx(0, abs=1e-15)
    assert g.aperture == pytest.approx(31 * lam / 2)
    np.testing.assert_allclose(g.element_positions, element_positions(32, 24e9), rtol=0, atol=1e-15)


@pytest.mark.parametrize("n,f", [(1, 24e9), (2.5, 24e9), (8, 0.0), (8, -1e9), (8, math.nan)])
def test_ula_rejects_bad_input(n, f):
    with pytest.raises(ValueError):
        build_ula(n, f)


def test_geometry_positions_read_only():
    g = build_ula(4, 10e9)
    with pytest.raises(ValueError):
        g.element_positions[0] = 1.0


@pytest.mark.parametrize("angle", [-89.99, 0.0, 37.2, 89.99])
def test_steering_unit_modulus(angle):
    a = farfield_steering(build_ula(16, 12e9), angle, 12e9)
    np.testing.assert_allclose(np.abs(a.entries), 1.0, atol=1e-14)


@pytest.mark.parametrize("angle", [90.0, -90.0, 120.0])
def test_steering_rejects_out_of_range_angle(angle):
    with pytest.raises(ValueError):
        farfield_steering(build_ula(4, 10e9), angle, 10e9)


def test_broadside_is_all_ones():
    a = farfield_steering(build_ula(9, 10e9), 0.0, 10e9)
    np.testing.assert_allclose(a.entries, 1.0)


@given(
    r=st.floats(0.5, 100.0),
    theta=st.floats(-80.0, 80.0),
    n=st.integers(2, 64),
)
def test_element_distance_matches_coordinates(r, theta, n):
    g = build_ula(n, 24e9)
    got = element_distances(g, r, math.radians(theta))
    want = distances_from_coordinates(g.element_positions, r, theta)
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_nearfield_tends_to_farfield():
    g = build_ula(16, 24e9)
    far = farfield_steering(g, 25.0, 24e9).entries
    near = nearfield_steering(g, 1e6, 25.0, 24e9).entries
    np.testing.assert_allclose(near, far, atol=1e-5)


def test_nearfield_requires_range_beyond_aperture():
    g = build_ula(16, 24e9)
    with pytest.raises(ValueError):
        nearfield_steering(g, g.max_offset * 0.5, 0.0, 24e9)


def test_field_point_modes():
    assert FieldPoint.far(10.0).mode == "far-field"
    with pytest.raises(ValueError):
        FieldPoint.near(-1.0, 0.0)
    with pytest.raises(ValueError):
        FieldPoint(0.0, 1.0, mode="sideways")


@settings(max_examples=50)
@given(
    pointing=st.floats(-60, 60), angle=st.floats(-80, 80), f=st.floats(6e9, 24e9), n=st.integers(2, 40)
)
def test_gain_matches_direct_sum(pointing, angle, f, n):
    g = build_ula(n, 24e9)
    w = pointing_weights(g, pointing)
    got = array_gain(g, w, f, [angle])[0] / n**2
    assert got == pytest.approx(gain_direct(g.element_positions, pointing, 24e9, f, angle), abs=1e-12)


@pytest.mark.parametrize("pointing", [-40.0, 0.0, 10.0, 33.0])
def test_pattern_peaks_at_pointing_angle_on_design(pointing):
    g = build_ula(32, 24e9)
    pat = beampattern(g, pointing_weights(g, pointing), 24e9, angle_grid(-90, 90, 0.01))
    assert pat.peak_angle == pytest.approx(pointing, abs=0.01)
    assert pat.gains.max() == 1.0


def test_peak_gain_is_n_squared():
    g = build_ula(12, 10e9)
    assert array_gain(g, pointing_weights(g, 20.0), 10e9, [20.0])[0] == pytest.approx(144.0)


def test_peak_angle_tie_takes_smallest():
    from fr3lab.array import Beampattern

    pat = Beampattern(np.array([-1.0, 0.0, 1.0]), np.array([1.0, 0.5, 1.0]), 1e9)
    assert pat.peak_angle == -1.0


def test_angle_grid_hits_anchor_angles():
    grid = angle_grid(-90, 90, 0.01)
    assert grid[0] > -90 and grid[-1] < 90
    for a in (0.0, 5.0, 10.0, -13.4):
        assert a in grid
    assert len(grid) == 17999


@pytest.mark.parametrize("bad", [[], [0.0, 0.0], [-90.0, 0.0], [[0.0, 1.0]], [1.0, 0.0]])
def test_beampattern_rejects_bad_grid(bad):
    g = build_ula(4, 10e9)
    with pytest.raises(ValueError):
        beampattern(g, pointing_weights(g, 0.0), 10e9, bad)


def test_hpbw_scales_like_inverse_aperture():
    # broadside HPBW of a half-wavelength ULA is about 101.5 / N degrees
    for n in (10, 30, 64):
        g = build_ula(n, 10e9)
        pat = beampattern(g, pointing_weights(g, 0.0), 10e9, angle_grid(-90, 90, 0.01))
        assert half_power_beamwidth(pat) == pytest.approx(101.5 / n, rel=0.03)


def test_wavelength():
    assert wavelength(SPEED_OF_LIGHT) == 1.0
