"""Beam squint of fixed phase-shifter beamformers.

A phase profile set for ``design_frequency`` and radiated at another carrier
points the beam where ``sin(theta) = (f_design / f) sin(theta_0)``. Within one
carrier's bandwidth this spreads the beam (intra-beam squint); between carriers
it moves the beam altogether (inter-beam squint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array import (
    DEFAULT_GRID_STEP,
    ArrayGeometry,
    angle_grid,
    array_gain,
    beampattern,
    pointing_weights,
)


class BeamInvisibleError(ValueError):
    """The squinted beam direction falls outside the visible region (|sin| > 1)."""


@dataclass(frozen=True)
class SquintReport:
    design_frequency: float
    carrier_center: float
    bandwidth: float
    pointing_angle: float
    apparent_center_angle: float
    edge_angles: tuple[float, float]
    max_deviation_from_center: float
    snr_loss_db: float
    # peak directions read off the numerical beampatterns (center, lower, upper)
    numerical_peaks: tuple[float, float, float] = (math.nan, math.nan, math.nan)

    @property
    def total_spread(self) -> float:
        return abs(self.edge_angles[0] - self.edge_angles[1])


def apparent_angle(design_frequency: float, carrier_frequency: float, pointing_angle: float) -> float:
    """Beam-peak direction (degrees) of a profile fixed at ``design_frequency``."""
    s = design_frequency / carrier_frequency * math.sin(math.radians(pointing_angle))
    if abs(s) > 1.0:
        raise BeamInvisibleError(
            f"beam lost to invisible region: sine argument {s:.4f} at {carrier_frequency:.6g} Hz"
        )
    return math.degrees(math.asin(s))


def numerical_peak(
    geom: ArrayGeometry,
    design_frequency: float,
    frequency: float,
    pointing_angle: float,
    expected: float,
    grid_step: float = DEFAULT_GRID_STEP,
    search_halfwidth: float = 5.0,
) -> float:
    """Argmax of the beampattern on a grid around ``expected``."""
    weights = pointing_weights(geom, pointing_angle, design_frequency)
    lo = max(-90.0, expected - search_halfwidth)
    hi = min(90.0, expected + search_halfwidth)
    pattern = beampattern(geom, weights, frequency, angle_grid(lo, hi, grid_step), normalize=False)
    return pattern.peak_angle


def intra_band_spread(
    geom: ArrayGeometry,
    design_frequency: float,
    carrier_center: float,
    bandwidth: float,
    pointing_angle: float,
    grid_step: float = DEFAULT_GRID_STEP,
    n_band_samples: int = 64,
) -> SquintReport:
    """Squint of the band centre and both band edges ``f_c -/+ B/2``.

    Reported angles are closed form; the numerical beampattern peaks are also
    computed and must agree to within two grid steps.
    """
    if bandwidth < 0:
        raise ValueError(f"bandwidth must be non-negative, got {bandwidth}")
    edges = (carrier_center - bandwidth / 2.0, carrier_center + bandwidth / 2.0)
    center = apparent_angle(design_frequency, carrier_center, pointing_angle)
    edge_angles = tuple(apparent_angle(design_frequency, f, pointing_angle) for f in edges)

    numeric = tuple(
        numerical_peak(geom, design_frequency, f, pointing_angle, expected, grid_step)
        for f, expected in zip((carrier_center, *edges), (center, *edge_angles))
    )
    for got, want in zip(numeric, (center, *edge_angles)):
        if abs(got - want) > 2 * grid_step + 1e-9:
            raise ArithmeticError(
                f"numerical peak {got:.4f} deg disagrees with closed form {want:.4f} deg"
            )

    if bandwidth > 0:
        loss = squint_snr_loss(
            geom, design_frequency, carrier_center, bandwidth, pointing_angle, center, n_band_samples
        )
    else:
        loss = 0.0
    return SquintReport(
        design_frequency=design_frequency,
        carrier_center=carrier_center,
        bandwidth=bandwidth,
        pointing_angle=pointing_angle,
        apparent_center_angle=center,
        edge_angles=edge_angles,
        max_deviation_from_center=max(abs(e - center) for e in edge_angles),
        snr_loss_db=loss,
        numerical_peaks=numeric,
    )


@dataclass(frozen=True)
class SquintLoss:
    loss_db: float
    excluded: tuple[float, ...]


def _band_samples(carrier_center: float, bandwidth: float, n: int) -> np.ndarray:
    # midpoints of n equal sub-bands
    return carrier_center - bandwidth / 2.0 + (np.arange(n) + 0.5) * bandwidth / n


def squint_snr_loss_detail(
    geom: ArrayGeometry,
    design_frequency: float,
    carrier_center: float,
    bandwidth: float,
    pointing_angle: float,
    true_angle: float,
    n_band_samples: int = 64,
) -> SquintLoss:
    if n_band_samples < 2:
        raise ValueError("n_band_samples must be >= 2")
    weights = pointing_weights(geom, pointing_angle, design_frequency)
    gains = []
    excluded = []
    for f in _band_samples(carrier_center, bandwidth, n_band_samples):
        try:
            apparent_angle(design_frequency, f, pointing_angle)
        except BeamInvisibleError:
            excluded.append(float(f))
            continue
        gains.append(array_gain(geom, weights, f, true_angle)[0] / geom.n_elements**2)
    if not gains:
        raise BeamInvisibleError("every band sample lost its beam to the invisible region")
    mean_gain = math.fsum(gains) / len(gains)
    return SquintLoss(max(0.0, -10.0 * math.log10(mean_gain)), tuple(excluded))


def squint_snr_loss(
    geom: ArrayGeometry,
    design_frequency: float,
    carrier_center: float,
    bandwidth: float,
    pointing_angle: float,
    true_angle: float,
    n_band_samples: int = 64,
) -> float:
    """Band-averaged gain loss (dB, >= 0) towards ``true_angle``.

    The gain of the fixed-phase beam is normalised by ``N^2`` (perfect
    alignment) and averaged linearly over ``n_band_samples`` sub-band
    midpoints. Samples whose beam is invisible are dropped; use
    :func:`squint_snr_loss_detail` to see which.
    """
    return squint_snr_loss_detail(
        geom, design_frequency, carrier_center, bandwidth, pointing_angle, true_angle, n_band_samples
    ).loss_db


def inter_band_table(
    geom: ArrayGeometry,
    design_frequency: float,
    carriers,
    bandwidths,
    pointing_angle: float,
    grid_step: float = DEFAULT_GRID_STEP,
) -> list[SquintReport]:
    """One :class:`SquintReport` per (carrier, bandwidth) pair."""
    return [
        intra_band_spread(geom, design_frequency, fc, bw, pointing_angle, grid_step)
        for fc, bw in zip(carriers, bandwidths)
    ]
