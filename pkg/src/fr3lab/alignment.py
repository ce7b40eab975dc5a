"""Two-tier beam alignment: a wide low-band scan picks a window for a narrow high-band scan."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .array import (
    Beampattern,
    angle_grid,
    beampattern,
    build_ula,
    farfield_phase,
    half_power_beamwidth,
    pointing_weights,
)


class CoarseMissError(RuntimeError):
    """The coarse scan found nothing above the noise floor."""


@dataclass(frozen=True)
class Scene:
    """Incoherent point sources: list of (angle in degrees, linear power)."""

    sources: tuple[tuple[float, float], ...]
    noise_power: float = 0.01

    def __post_init__(self) -> None:
        srcs = tuple((float(a), float(p)) for a, p in self.sources)
        if not srcs:
            raise ValueError("a scene needs at least one source")
        for a, p in srcs:
            if not -90.0 < a < 90.0:
                raise ValueError(f"source angle {a} outside (-90, 90)")
            if p < 0:
                raise ValueError("source power must be non-negative")
        if self.noise_power < 0:
            raise ValueError("noise power must be non-negative")
        object.__setattr__(self, "sources", srcs)

    @property
    def angles(self) -> list[float]:
        return [a for a, _ in self.sources]


@dataclass(frozen=True)
class TierConfig:
    frequency: float
    n_elements: int
    scan_grid_step: float = 0.01
    scan_span: tuple[float, float] = (-60.0, 60.0)

    def __post_init__(self) -> None:
        lo, hi = self.scan_span
        if self.scan_grid_step <= 0:
            raise ValueError("scan grid step must be positive")
        if not (-90.0 <= lo < hi <= 90.0):
            raise ValueError(f"scan span {self.scan_span} must be a non-empty part of (-90, 90)")
        if self.n_elements < 2 or self.frequency <= 0:
            raise ValueError("tier needs >= 2 elements and a positive frequency")

    def grid(self, span: tuple[float, float] | None = None) -> np.ndarray:
        lo, hi = span if span is not None else self.scan_span
        step = self.scan_grid_step
        # inclusive of the span ends when they sit on the grid, never touching +/-90
        return angle_grid(max(lo - step / 2, -90.0), min(hi + step / 2, 90.0), step)

    def beamwidth(self) -> float:
        """Half-power beamwidth of a boresight beam of this tier."""
        geom = build_ula(self.n_elements, self.frequency)
        w = pointing_weights(geom, 0.0)
        return half_power_beamwidth(beampattern(geom, w, self.frequency, angle_grid(-89.99, 89.99, 0.01)))


def scan_response(scene: Scene, tier: TierConfig, span: tuple[float, float] | None = None) -> Beampattern:
    """Received power versus scan direction for an incoherent scene.

    Each scan direction uses weights matched at the tier carrier, so there is
    no squint inside a tier. Gains are in units of source power (matched gain
    normalised to 1) with the noise power added.
    """
    geom = build_ula(tier.n_elements, tier.frequency)
    grid = tier.grid(span)
    # rows: scan weights (conjugate steering), columns: elements
    scan = np.exp(1j * farfield_phase(geom, grid, tier.frequency))
    response = np.full(grid.shape, float(scene.noise_power))
    for angle, power in scene.sources:
        a = np.exp(-1j * farfield_phase(geom, angle, tier.frequency)[0])
        response += power * np.abs(scan @ a) ** 2 / geom.n_elements**2
    return Beampattern(grid, response, tier.frequency)


def detect_peaks(pattern: Beampattern, min_prominence: float, in_db: bool = False) -> list[float]:
    """Interior local maxima with at least ``min_prominence``, strongest first.

    Prominence is measured against the higher of the two surrounding minima,
    in linear gain units, or in dB when ``in_db`` is set. Grid endpoints are
    never reported as peaks.
    """
    if min_prominence <= 0:
        raise ValueError("prominence must be positive")
    values = pattern.in_db() if in_db else np.asarray(pattern.gains, dtype=float)
    idx, _ = find_peaks(values, prominence=min_prominence)
    order = sorted(idx, key=lambda i: (-values[i], pattern.angle_grid[i]))
    return [float(pattern.angle_grid[i]) for i in order]


@dataclass(frozen=True)
class AlignmentResult:
    coarse_peak: float
    refinement_window: tuple[float, float]
    fine_peaks: list[float]
    resolved: list[bool]
    coarse_evaluations: int
    fine_evaluations: int
    exhaustive_evaluations: int
    coarse_pattern: Beampattern = field(repr=False)
    fine_pattern: Beampattern = field(repr=False)

    @property
    def evaluations(self) -> int:
        return self.coarse_evaluations + self.fine_evaluations


def hierarchical_align(
    scene: Scene,
    coarse: TierConfig | None = None,
    fine: TierConfig | None = None,
    window_halfwidth: float = 5.0,
    peak_prominence_db: float = 3.0,
    detection_margin_db: float = 3.0,
) -> AlignmentResult:
    """Coarse full-span scan, then a fine scan over ``coarse_peak +/- window_halfwidth``.

    Source ``i`` counts as resolved when a fine peak lies within one fine
    half-power beamwidth of it.
    """
    coarse = coarse or TierConfig(8e9, 10, 0.1)
    fine = fine or TierConfig(24e9, 30, 0.01)
    if fine.scan_grid_step > coarse.scan_grid_step:
        raise ValueError("fine grid step must not exceed the coarse one")

    coarse_pattern = scan_response(scene, coarse)
    coarse_peak = coarse_pattern.peak_angle
    floor = max(scene.noise_power, np.finfo(float).tiny)
    if 10 * math.log10(coarse_pattern.gains.max() / floor) < detection_margin_db:
        raise CoarseMissError(
            f"coarse peak is less than {detection_margin_db} dB above the noise floor"
        )

    lo = max(coarse_peak - window_halfwidth, fine.scan_span[0], -90 + fine.scan_grid_step)
    hi = min(coarse_peak + window_halfwidth, fine.scan_span[1], 90 - fine.scan_grid_step)
    fine_pattern = scan_response(scene, fine, (lo, hi))
    fine_peaks = detect_peaks(fine_pattern, peak_prominence_db, in_db=True)
    if not fine_peaks:
        fine_peaks = [fine_pattern.peak_angle]

    bw = fine.beamwidth()
    resolved = [any(abs(p - a) <= bw for p in fine_peaks) for a in scene.angles]
    exhaustive = len(fine.grid())
    return AlignmentResult(
        coarse_peak=coarse_peak,
        refinement_window=(lo, hi),
        fine_peaks=fine_peaks,
        resolved=resolved,
        coarse_evaluations=len(coarse_pattern.angle_grid),
        fine_evaluations=len(fine_pattern.angle_grid),
        exhaustive_evaluations=exhaustive,
        coarse_pattern=coarse_pattern,
        fine_pattern=fine_pattern,
    )


def peaks_near_sources(
    pattern: Beampattern, scene: Scene, min_prominence_db: float = 3.0, margin: float = 5.0
) -> list[float]:
    """Prominent peaks inside ``[min(source) - margin, max(source) + margin]``.

    Keeps sidelobes far from the sources out of resolution checks.
    """
    lo = min(scene.angles) - margin
    hi = max(scene.angles) + margin
    return sorted(p for p in detect_peaks(pattern, min_prominence_db, in_db=True) if lo <= p <= hi)
