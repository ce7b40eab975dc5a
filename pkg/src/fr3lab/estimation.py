"""Joint near-field (range, angle) Cramér-Rao bounds for a linear array.

Signal model: one narrowband snapshot ``x = alpha a(r, theta) + n`` with an
unknown deterministic complex gain ``alpha`` and white noise of known power.
Projecting ``alpha`` out of the Fisher information gives

    J_ij = 2 (rho_array / N) Re{ d_i^H (I - a a^H / a^H a) d_j }

with ``d_1 = da/dr`` and ``d_2 = da/dtheta`` (theta in radians).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .array import (
    ArrayGeometry,
    FieldPoint,
    build_ula,
    element_distances,
    wavelength,
    wavenumber,
)

DEFAULT_CONDITION_LIMIT = 1e12
HARDENING_BLOCK = 4096  # trials per derived seed


class SingularFisherError(ArithmeticError):
    """Fisher matrix too ill-conditioned to invert reliably."""

    def __init__(self, condition_number: float, limit: float):
        super().__init__(
            f"Fisher matrix is near-singular (condition number {condition_number:.3e} > {limit:.1e})"
        )
        self.condition_number = condition_number


@dataclass(frozen=True)
class SnrSpec:
    """Array-level SNR, i.e. per-element SNR times the coherent gain N."""

    array_level_snr_db: float
    n_elements: int
    n_snapshots: int = 1

    def __post_init__(self) -> None:
        if not math.isfinite(self.array_level_snr_db):
            raise ValueError(f"SNR must be finite, got {self.array_level_snr_db}")
        if self.n_elements < 1 or self.n_snapshots < 1:
            raise ValueError("n_elements and n_snapshots must be positive")

    @property
    def array_level_snr_linear(self) -> float:
        return 10.0 ** (self.array_level_snr_db / 10.0)

    @property
    def per_element_snr_linear(self) -> float:
        return self.array_level_snr_linear / self.n_elements


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    matrix: np.ndarray = field(repr=False)
    frequency: float
    target: FieldPoint

    def __getitem__(self, idx):
        return self.matrix[idx]


@dataclass(frozen=True, eq=False)
class CrbResult:
    range_crb: float  # m^2
    angle_crb: float  # rad^2
    crb_matrix: np.ndarray = field(repr=False)

    @property
    def angle_crb_deg2(self) -> float:
        return self.angle_crb * (180.0 / math.pi) ** 2

    @property
    def range_std(self) -> float:
        return math.sqrt(self.range_crb)

    @property
    def angle_std_deg(self) -> float:
        return math.sqrt(self.angle_crb_deg2)


def steering_derivatives(
    geom: ArrayGeometry, range: float, angle_rad: float, frequency: float
) -> tuple[np.ndarray, np.ndarray]:
    """Near-field steering vector and its analytic (range, angle) derivatives.

    Returns ``(a, D)`` where ``D`` has shape ``(N, 2)``; column 0 is
    ``da/dr`` and column 1 is ``da/dtheta``. The ``-r`` reference phase
    contributes the ``-1`` in the range derivative.
    """
    p = geom.element_positions
    k = wavenumber(frequency)
    rn = element_distances(geom, range, angle_rad)
    a = np.exp(-1j * k * (rn - range))
    drn_dr = (range - p * math.sin(angle_rad)) / rn
    drn_dtheta = -range * p * math.cos(angle_rad) / rn
    d_range = -1j * k * (drn_dr - 1.0) * a
    d_angle = -1j * k * drn_dtheta * a
    return a, np.column_stack([d_range, d_angle])


def projected_fisher(a: np.ndarray, derivs: np.ndarray, per_element_snr: float) -> np.ndarray:
    """``2 rho Re{D^H P_perp D}`` for an unknown complex amplitude."""
    proj = derivs - np.outer(a, a.conj() @ derivs) / np.vdot(a, a).real
    fim = 2.0 * per_element_snr * np.real(derivs.conj().T @ proj)
    return 0.5 * (fim + fim.T)


def fisher_matrix(
    geom: ArrayGeometry, target: FieldPoint, frequency: float, snr: SnrSpec
) -> FisherMatrix:
    if target.mode != "near-field":
        raise ValueError("the range/angle Fisher matrix needs a near-field target")
    if target.range <= geom.max_offset:
        raise ValueError(f"target at {target.range} m lies inside the aperture")
    if snr.n_elements != geom.n_elements:
        raise ValueError(
            f"SNR spec is for {snr.n_elements} elements but the array has {geom.n_elements}"
        )
    a, derivs = steering_derivatives(geom, target.range, math.radians(target.angle), frequency)
    fim = projected_fisher(a, derivs, snr.per_element_snr_linear) * snr.n_snapshots
    return FisherMatrix(fim, float(frequency), target)


def crb(fim: FisherMatrix | np.ndarray, condition_limit: float = DEFAULT_CONDITION_LIMIT) -> CrbResult:
    """Invert a 2x2 Fisher matrix, refusing near-singular ones."""
    m = np.asarray(fim.matrix if isinstance(fim, FisherMatrix) else fim, dtype=float)
    if not np.all(np.isfinite(m)):
        raise SingularFisherError(math.inf, condition_limit)
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > condition_limit or np.any(np.diag(m) <= 0):
        raise SingularFisherError(float(cond), condition_limit)
    inv = np.linalg.inv(m)
    inv = 0.5 * (inv + inv.T)
    return CrbResult(float(inv[0, 0]), float(inv[1, 1]), inv)


def fraunhofer_distance(geom: ArrayGeometry, frequency: float) -> float:
    return 2.0 * geom.aperture**2 / wavelength(frequency)


GeometryMode = Literal["fixed-aperture", "per-carrier"]


def sweep_geometry(
    n_elements: int, frequency: float, mode: GeometryMode, design_frequency: float
) -> ArrayGeometry:
    """Array used at ``frequency`` during a carrier sweep.

    ``fixed-aperture`` keeps one physical array (half-wavelength at
    ``design_frequency``) for every carrier; ``per-carrier`` rebuilds a
    half-wavelength array at each carrier, so its aperture shrinks as 1/f.
    """
    if mode == "fixed-aperture":
        return build_ula(n_elements, design_frequency)
    if mode == "per-carrier":
        return build_ula(n_elements, frequency)
    raise ValueError(f"unknown geometry mode {mode!r}")


@dataclass(frozen=True)
class CrbRow:
    frequency: float
    range: float
    angle: float
    fraunhofer: float
    result: CrbResult | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.result is not None


def crb_sweep(
    frequencies: Sequence[float],
    ranges: Sequence[float],
    angle: float,
    snr_db: float,
    n_elements: int = 32,
    geometry_mode: GeometryMode = "fixed-aperture",
    design_frequency: float | None = None,
    n_snapshots: int = 1,
) -> list[CrbRow]:
    """CRB table over carriers x ranges at a fixed array-level SNR.

    Rows are ordered frequency-major. A failing cell (target inside the
    aperture, singular FIM) is returned with ``result=None`` and an error
    message instead of aborting the sweep.
    """
    frequencies = list(frequencies)
    ranges = list(ranges)
    if not frequencies or not ranges:
        raise ValueError("frequencies and ranges must be non-empty")
    if design_frequency is None:
        design_frequency = max(frequencies)
    snr = SnrSpec(snr_db, n_elements, n_snapshots)
    rows = []
    for f in frequencies:
        geom = sweep_geometry(n_elements, f, geometry_mode, design_frequency)
        fr = fraunhofer_distance(geom, f)
        for r in ranges:
            try:
                res = crb(fisher_matrix(geom, FieldPoint.near(r, angle), f, snr))
                rows.append(CrbRow(f, r, angle, fr, res))
            except (ValueError, ArithmeticError) as exc:
                rows.append(CrbRow(f, r, angle, fr, None, str(exc)))
    return rows


def angle_crb_relative_spread(rows: Sequence[CrbRow]) -> dict[float, float]:
    """(max - min) / min of the angle CRB across ranges, per carrier."""
    by_freq: dict[float, list[float]] = {}
    for row in rows:
        if row.ok:
            by_freq.setdefault(row.frequency, []).append(row.result.angle_crb)
    return {f: (max(v) - min(v)) / min(v) for f, v in by_freq.items()}


def hardening_samples(n_antennas: int, n_trials: int, seed: int) -> np.ndarray:
    """``||h||^2 / N`` for ``n_trials`` draws of i.i.d. CN(0, 1) channels.

    Trials are generated in fixed blocks, each from its own child seed, so
    the sample set does not depend on how the blocks are scheduled.
    """
    if n_trials < 2:
        raise ValueError("need at least two trials")
    if n_antennas < 1:
        raise ValueError("need at least one antenna")
    n_blocks = -(-n_trials // HARDENING_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    out = np.empty(n_trials)
    for b, child in enumerate(children):
        lo = b * HARDENING_BLOCK
        hi = min(n_trials, lo + HARDENING_BLOCK)
        rng = np.random.default_rng(child)
        h = rng.standard_normal((hi - lo, n_antennas, 2))
        out[lo:hi] = 0.5 * np.sum(h**2, axis=(1, 2)) / n_antennas
    return out


def hardening_variance(n_antennas: int, n_trials: int, seed: int = 0) -> float:
    """Unbiased sample variance of ``||h||^2 / N``; its exact value is ``1/N``."""
    return float(np.var(hardening_samples(n_antennas, n_trials, seed), ddof=1))


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
