"""Uniform linear arrays: geometry, steering vectors, analog weights and beampatterns.

Angles are degrees at every public interface and radians internally. Phases
are referenced to the array centroid, and every element has unit gain
(pure phase model, no taper, no coupling).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_GRID_STEP = 0.01  # degrees


def wavelength(frequency: float) -> float:
    return SPEED_OF_LIGHT / frequency


def wavenumber(frequency: float) -> float:
    return 2.0 * np.pi * frequency / SPEED_OF_LIGHT


def _check_angle(angle: float, name: str = "angle") -> None:
    if not np.isfinite(angle) or not -90.0 < angle < 90.0:
        raise ValueError(f"{name} must lie in the open interval (-90, 90) degrees, got {angle}")


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions of a linear array, centred on the origin.

    Attributes:
        n_elements: number of antenna elements (>= 2).
        design_frequency: carrier (Hz) the spacing was chosen for.
        element_positions: positions along the array axis in metres.
        spacing: inter-element distance in metres.
    """

    n_elements: int
    design_frequency: float
    element_positions: np.ndarray = field(repr=False)
    spacing: float

    def __post_init__(self) -> None:
        pos = np.asarray(self.element_positions, dtype=float)
        if self.n_elements < 2 or pos.shape != (self.n_elements,):
            raise ValueError("an array needs n_elements >= 2 positions")
        if np.any(np.diff(pos) <= 0):
            raise ValueError("element positions must be strictly increasing")
        pos.setflags(write=False)
        object.__setattr__(self, "element_positions", pos)

    @property
    def aperture(self) -> float:
        return float(self.element_positions[-1] - self.element_positions[0])

    @property
    def max_offset(self) -> float:
        return float(np.max(np.abs(self.element_positions)))


def build_ula(n_elements: int, design_frequency: float) -> ArrayGeometry:
    """Half-wavelength ULA at ``design_frequency`` with its centroid at 0."""
    if int(n_elements) != n_elements or n_elements < 2:
        raise ValueError(f"n_elements must be an integer >= 2, got {n_elements}")
    if not np.isfinite(design_frequency) or design_frequency <= 0:
        raise ValueError(f"design_frequency must be positive, got {design_frequency}")
    n_elements = int(n_elements)
    spacing = wavelength(design_frequency) / 2.0
    positions = (np.arange(n_elements) - (n_elements - 1) / 2.0) * spacing
    return ArrayGeometry(n_elements, float(design_frequency), positions, spacing)


@dataclass(frozen=True)
class FieldPoint:
    angle: float
    range: float = np.inf
    mode: Literal["far-field", "near-field"] = "far-field"

    def __post_init__(self) -> None:
        _check_angle(self.angle)
        if self.mode not in ("far-field", "near-field"):
            raise ValueError(f"unknown field mode {self.mode!r}")
        if self.mode == "near-field" and not (np.isfinite(self.range) and self.range > 0):
            raise ValueError(f"near-field points need a finite positive range, got {self.range}")

    @classmethod
    def near(cls, range: float, angle: float) -> FieldPoint:
        return cls(angle=angle, range=range, mode="near-field")

    @classmethod
    def far(cls, angle: float) -> FieldPoint:
        return cls(angle=angle)


@dataclass(frozen=True, eq=False)
class SteeringVector:
    entries: np.ndarray = field(repr=False)
    frequency: float
    point: FieldPoint

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class BeamformerWeights:
    entries: np.ndarray = field(repr=False)
    pointing_angle: float
    design_frequency: float


@dataclass(frozen=True, eq=False)
class Beampattern:
    angle_grid: np.ndarray
    gains: np.ndarray
    frequency: float

    def __post_init__(self) -> None:
        if len(self.angle_grid) != len(self.gains):
            raise ValueError("angle grid and gains differ in length")

    @property
    def peak_angle(self) -> float:
        # np.argmax returns the first maximum, i.e. the smallest angle on ties
        return float(self.angle_grid[int(np.argmax(self.gains))])

    def in_db(self) -> np.ndarray:
        return 10.0 * np.log10(np.maximum(self.gains, np.finfo(float).tiny))


def farfield_phase(geom: ArrayGeometry, angles_deg, frequency: float) -> np.ndarray:
    """Plane-wave excess-path phase ``-k p_n sin(theta)``, shape ``(len(angles), n_elements)``.

    A source at positive angle sits nearer the positive-offset elements, the
    same convention as :func:`element_distances`, so that near-field steering
    tends to far-field steering as the range grows.
    """
    sines = np.sin(np.radians(np.atleast_1d(np.asarray(angles_deg, dtype=float))))
    return -wavenumber(frequency) * np.outer(sines, geom.element_positions)


def farfield_steering(geom: ArrayGeometry, angle: float, frequency: float) -> SteeringVector:
    _check_angle(angle)
    entries = np.exp(-1j * farfield_phase(geom, angle, frequency)[0])
    return SteeringVector(entries, float(frequency), FieldPoint.far(angle))


def element_distances(geom: ArrayGeometry, range: float, angle_rad: float) -> np.ndarray:
    """Exact distance from a point at (range, angle) to every element."""
    p = geom.element_positions
    return np.sqrt(range**2 + p**2 - 2.0 * range * p * np.sin(angle_rad))


def nearfield_steering(
    geom: ArrayGeometry, range: float, angle: float, frequency: float
) -> SteeringVector:
    """Spherical-wavefront steering vector with phase referenced to the centroid."""
    _check_angle(angle)
    if not np.isfinite(range) or range <= geom.max_offset:
        raise ValueError(
            f"range {range} m must exceed the largest element offset {geom.max_offset:.4g} m"
        )
    excess = element_distances(geom, range, np.radians(angle)) - range
    entries = np.exp(-1j * wavenumber(frequency) * excess)
    return SteeringVector(entries, float(frequency), FieldPoint.near(range, angle))


def pointing_weights(
    geom: ArrayGeometry, pointing_angle: float, design_frequency: float | None = None
) -> BeamformerWeights:
    """Fixed analog phase profile matched to ``pointing_angle`` at the design carrier.

    The returned phases do not change with the operating frequency, which is
    what produces beam squint when the weights are used off-design.
    """
    if design_frequency is None:
        design_frequency = geom.design_frequency
    a = farfield_steering(geom, pointing_angle, design_frequency)
    return BeamformerWeights(np.conj(a.entries), float(pointing_angle), float(design_frequency))


def check_angle_grid(angle_grid) -> np.ndarray:
    grid = np.asarray(angle_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("angle grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("angle grid must be strictly increasing")
    if grid[0] <= -90.0 or grid[-1] >= 90.0:
        raise ValueError("angle grid must lie inside (-90, 90) degrees")
    return grid


def array_gain(
    geom: ArrayGeometry, weights: BeamformerWeights, frequency: float, angles_deg
) -> np.ndarray:
    """Un-normalised power gain ``|sum_n w_n a_n(theta)|^2`` at each angle."""
    a = np.exp(-1j * farfield_phase(geom, angles_deg, frequency))
    return np.abs(a @ weights.entries) ** 2


def beampattern(
    geom: ArrayGeometry,
    weights: BeamformerWeights,
    frequency: float,
    angle_grid: Sequence[float] | np.ndarray,
    normalize: bool = True,
) -> Beampattern:
    grid = check_angle_grid(angle_grid)
    gains = array_gain(geom, weights, frequency, grid)
    if normalize:
        gains = gains / gains.max()
    return Beampattern(grid, gains, float(frequency))


def angle_grid(
    start: float = -90.0, stop: float = 90.0, step: float = DEFAULT_GRID_STEP
) -> np.ndarray:
    """Uniform grid of multiples of ``step`` strictly inside (start, stop).

    Grid points are integer multiples of the step so that anchor angles such
    as 0, 5 or 10 degrees fall exactly on the grid.
    """
    if step <= 0:
        raise ValueError("grid step must be positive")
    lo = int(np.floor(start / step + 1e-9)) + 1
    hi = int(np.ceil(stop / step - 1e-9)) - 1
    grid = np.arange(lo, hi + 1) * step
    return np.round(grid, 10)


def half_power_beamwidth(pattern: Beampattern) -> float:
    """Width of the contiguous region around the peak where gain >= half the peak."""
    g = pattern.gains / pattern.gains.max()
    i = int(np.argmax(g))
    lo = i
    while lo > 0 and g[lo - 1] >= 0.5:
        lo -= 1
    hi = i
    while hi < len(g) - 1 and g[hi + 1] >= 0.5:
        hi += 1
    return float(pattern.angle_grid[hi] - pattern.angle_grid[lo])
