"""Deterministic-random tradeoff for sensing with OFDM data payloads.

Random payload symbols make the ambiguity function (AF) of a frame random.
How much it fluctuates away from the mainlobe is governed by the fourth
moment of the constellation: constant-modulus alphabets give the most
stable AF, Gaussian-like ones the least.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm

GAUSSIAN = "gaussian"


@dataclass(frozen=True, eq=False)
class ConstellationSpec:
    """A unit-power symbol alphabet with its probabilities.

    ``name == "gaussian"`` with an empty alphabet stands for circular
    complex Gaussian symbols, the reference with kurtosis 2.
    """

    name: str
    alphabet: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        pts = np.asarray(self.alphabet, dtype=complex).ravel()
        probs = np.asarray(self.probabilities, dtype=float).ravel()
        if self.is_gaussian:
            pts, probs = np.zeros(0, complex), np.zeros(0)
        else:
            if pts.size == 0 or pts.shape != probs.shape:
                raise ValueError("alphabet and probabilities must be non-empty and of equal length")
            if np.any(probs < 0) or abs(math.fsum(probs) - 1.0) > 1e-12:
                raise ValueError("probabilities must be non-negative and sum to 1")
        object.__setattr__(self, "alphabet", pts)
        object.__setattr__(self, "probabilities", probs)

    @property
    def is_gaussian(self) -> bool:
        return self.name == GAUSSIAN

    @classmethod
    def from_points(cls, name: str, points, probabilities=None) -> ConstellationSpec:
        """Build a spec scaled to ``E|s|^2 = 1``."""
        pts = np.asarray(points, dtype=complex).ravel()
        probs = np.full(pts.size, 1.0 / pts.size) if probabilities is None else np.asarray(probabilities, float)
        power = float(np.sum(probs * np.abs(pts) ** 2))
        if not power > 0:
            raise ValueError("constellation has zero power")
        return cls(name, pts / math.sqrt(power), probs)

    def power(self) -> float:
        if self.is_gaussian:
            return 1.0
        return math.fsum(self.probabilities * np.abs(self.alphabet) ** 2)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.is_gaussian:
            return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2.0)
        idx = rng.choice(self.alphabet.size, size=size, p=self.probabilities)
        return self.alphabet[idx]


def psk(order: int) -> ConstellationSpec:
    pts = np.exp(1j * (2 * np.pi * np.arange(order) / order + np.pi / order))
    return ConstellationSpec.from_points(f"{order}psk" if order != 4 else "qpsk", pts)


def qam(order: int) -> ConstellationSpec:
    side = int(round(math.sqrt(order)))
    if side * side != order:
        raise ValueError("square QAM orders only")
    levels = np.arange(-(side - 1), side, 2, dtype=float)
    pts = (levels[:, None] + 1j * levels[None, :]).ravel()
    return ConstellationSpec.from_points(f"{order}qam", pts)


def gaussian() -> ConstellationSpec:
    return ConstellationSpec(GAUSSIAN, np.zeros(0, complex), np.zeros(0))


def reference_constellation(name: str) -> ConstellationSpec:
    name = name.lower()
    if name == GAUSSIAN:
        return gaussian()
    if name == "bpsk":
        return ConstellationSpec.from_points("bpsk", [1, -1])
    if name == "qpsk":
        return psk(4)
    if name.endswith("psk"):
        return psk(int(name[:-3]))
    if name.endswith("qam"):
        return qam(int(name[:-3]))
    raise ValueError(f"unknown constellation {name!r}")


def constellation_kurtosis(spec: ConstellationSpec) -> float:
    """``E|s|^4 / (E|s|^2)^2`` over the weighted alphabet (exactly 2 for Gaussian)."""
    if spec.is_gaussian:
        return 2.0
    mag2 = np.abs(spec.alphabet) ** 2
    m2 = math.fsum(spec.probabilities * mag2)
    if m2 <= 0:
        raise ValueError("zero-power alphabet")
    return math.fsum(spec.probabilities * mag2**2) / m2**2


@dataclass(frozen=True, eq=False)
class FrameLayout:
    n_subcarriers: int
    n_symbols: int
    pilot_mask: np.ndarray = field(repr=False)  # shape (n_symbols, n_subcarriers)

    def __post_init__(self) -> None:
        mask = np.asarray(self.pilot_mask, dtype=bool)
        if mask.shape != (self.n_symbols, self.n_subcarriers):
            raise ValueError(
                f"pilot mask shape {mask.shape} does not match ({self.n_symbols}, {self.n_subcarriers})"
            )
        object.__setattr__(self, "pilot_mask", mask)

    @classmethod
    def comb(cls, n_subcarriers: int, n_symbols: int, spacing: int, offset: int = 0) -> FrameLayout:
        """Pilots on every ``spacing``-th subcarrier of every symbol."""
        mask = np.zeros((n_symbols, n_subcarriers), bool)
        mask[:, offset::spacing] = True
        return cls(n_subcarriers, n_symbols, mask)

    @classmethod
    def filled(cls, n_subcarriers: int, n_symbols: int, pilots: bool) -> FrameLayout:
        return cls(n_subcarriers, n_symbols, np.full((n_symbols, n_subcarriers), pilots))


def resource_split(layout: FrameLayout) -> tuple[float, float]:
    """(pilot fraction, payload fraction), counted from the mask."""
    total = layout.pilot_mask.size
    pilots = int(layout.pilot_mask.sum())
    return pilots / total, (total - pilots) / total


def pilot_sequence(n_symbols: int, n_subcarriers: int) -> np.ndarray:
    """Fixed unit-modulus chirp; the same for every frame."""
    k = np.arange(n_subcarriers)
    m = np.arange(n_symbols)[:, None]
    return np.exp(1j * np.pi * ((k**2) / n_subcarriers + m * k / n_subcarriers))


@dataclass(frozen=True, eq=False)
class OfdmFrame:
    grid: np.ndarray  # (n_symbols, n_subcarriers) frequency-domain symbols
    symbols_time: np.ndarray  # per-symbol unitary IDFT, no cyclic prefix
    signal: np.ndarray  # serialised time signal including cyclic prefixes
    cp_len: int


PulseFilter = Callable[[np.ndarray], np.ndarray]


def generate_ofdm_frame(
    spec: ConstellationSpec,
    layout: FrameLayout,
    seed: int | np.random.SeedSequence,
    cp_len: int = 16,
    pulse_filter: PulseFilter | None = None,
) -> OfdmFrame:
    """Random payload on non-pilot cells, fixed pilots, unitary IDFT per symbol.

    ``pulse_filter`` is applied to the serialised signal; the default
    (``None``) is rectangular shaping, i.e. no filtering.
    """
    if not 0 <= cp_len <= layout.n_subcarriers:
        raise ValueError("cyclic prefix must be between 0 and n_subcarriers samples")
    rng = np.random.default_rng(seed)
    shape = (layout.n_symbols, layout.n_subcarriers)
    grid = np.where(layout.pilot_mask, pilot_sequence(*shape), 0j)
    n_payload = int((~layout.pilot_mask).sum())
    if n_payload:
        grid[~layout.pilot_mask] = spec.sample(rng, n_payload)
    body = np.fft.ifft(grid, axis=1, norm="ortho")
    with_cp = np.concatenate([body[:, layout.n_subcarriers - cp_len:], body], axis=1) if cp_len else body
    signal = with_cp.ravel()
    if pulse_filter is not None:
        signal = np.asarray(pulse_filter(signal), dtype=complex)
    return OfdmFrame(grid, body, signal, cp_len)


@dataclass(frozen=True, eq=False)
class AfSurface:
    delays: np.ndarray
    dopplers: np.ndarray
    values: np.ndarray  # complex, (len(delays), len(dopplers))

    def at(self, delay: int, doppler: int) -> complex:
        i = int(np.searchsorted(self.delays, delay))
        j = int(np.searchsorted(self.dopplers, doppler))
        return complex(self.values[i, j])


def ambiguity_function(signal, max_delay_bins: int, max_doppler_bins: int) -> AfSurface:
    """Cyclic AF ``sum_t s[t] s*[t - tau] exp(-2j pi nu t / L)``, normalised so AF(0, 0) = 1.

    Delay bins are samples and Doppler bins are multiples of ``1/L`` with
    ``L`` the signal length; both are wrapped cyclically.
    """
    s = np.asarray(signal.signal if isinstance(signal, OfdmFrame) else signal, dtype=complex)
    length = s.size
    if not (0 <= max_delay_bins < length and 0 <= max_doppler_bins < length):
        raise ValueError("bin limits must be smaller than the signal length")
    energy = np.vdot(s, s).real
    if energy == 0:
        raise ValueError("signal has zero energy")
    delays = np.arange(-max_delay_bins, max_delay_bins + 1)
    dopplers = np.arange(-max_doppler_bins, max_doppler_bins + 1)
    products = s[None, :] * np.conj(np.stack([np.roll(s, int(tau)) for tau in delays]))
    spectrum = np.fft.fft(products, axis=1)
    values = spectrum[:, dopplers % length] / energy
    return AfSurface(delays, dopplers, values)


@dataclass(frozen=True, eq=False)
class AfStats:
    kurtosis: float
    sidelobe_mean: float
    sidelobe_variance: float
    n_trials: int
    exclusion_zone: tuple[int, int]
    trial_contributions: np.ndarray = field(repr=False)  # averages to sidelobe_variance

    @property
    def variance_stderr(self) -> float:
        return float(np.std(self.trial_contributions, ddof=1) / math.sqrt(self.n_trials))

    def to_dict(self) -> dict:
        return {
            "kurtosis": self.kurtosis,
            "sidelobe_mean": self.sidelobe_mean,
            "sidelobe_variance": self.sidelobe_variance,
            "sidelobe_variance_stderr": self.variance_stderr,
            "n_trials": self.n_trials,
            "exclusion_zone": list(self.exclusion_zone),
        }


def _fsum_columns(x: np.ndarray) -> np.ndarray:
    return np.array([math.fsum(col) for col in x.T])


def sidelobe_mask(surface: AfSurface, exclusion_zone: tuple[int, int]) -> np.ndarray:
    dz, nz = exclusion_zone
    main = (np.abs(surface.delays)[:, None] <= dz) & (np.abs(surface.dopplers)[None, :] <= nz)
    return ~main


def af_sidelobe_stats(
    spec: ConstellationSpec,
    layout: FrameLayout,
    n_trials: int,
    seed: int,
    exclusion_zone: tuple[int, int] = (1, 1),
    max_delay_bins: int = 16,
    max_doppler_bins: int = 8,
    cp_len: int = 16,
    workers: int = 1,
) -> AfStats:
    """Monte Carlo statistics of ``|AF|^2`` outside the mainlobe.

    ``sidelobe_mean`` is the mean of ``|AF|^2`` over sidelobe bins and
    trials. ``sidelobe_variance`` is the across-trial variance of ``|AF|^2``
    at each sidelobe bin, averaged over bins, so a deterministic frame has
    variance exactly zero. Each trial draws from its own child seed and
    sums are exactly rounded, so results do not depend on ``workers``.
    """
    if n_trials < 2:
        raise ValueError("need at least two trials")
    children = np.random.SeedSequence(seed).spawn(n_trials)

    def one(child):
        frame = generate_ofdm_frame(spec, layout, child, cp_len)
        surf = ambiguity_function(frame, max_delay_bins, max_doppler_bins)
        return surf, np.abs(surf.values) ** 2

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(one, children))
    else:
        results = [one(c) for c in children]
    mask = sidelobe_mask(results[0][0], exclusion_zone)
    if not mask.any():
        raise ValueError("exclusion zone covers every AF bin")
    x = np.stack([p[mask] for _, p in results])  # (trials, bins)
    n, bins = x.shape

    # shifted data keeps identical trials at exactly zero variance
    shifted = x - x[0]
    mean_shift = _fsum_columns(shifted) / n
    dev2 = (shifted - mean_shift) ** 2
    per_bin_var = _fsum_columns(dev2) / (n - 1)
    variance = math.fsum(per_bin_var) / bins
    contributions = np.array([math.fsum(row) for row in dev2]) * (n / (n - 1)) / bins
    mean = math.fsum(_fsum_columns(x)) / (n * bins)
    return AfStats(
        kurtosis=constellation_kurtosis(spec),
        sidelobe_mean=mean,
        sidelobe_variance=variance,
        n_trials=n,
        exclusion_zone=tuple(exclusion_zone),
        trial_contributions=contributions,
    )


def variance_ordering_z(lower: AfStats, higher: AfStats) -> float:
    """z-score of ``higher.sidelobe_variance - lower.sidelobe_variance``."""
    se = math.hypot(lower.variance_stderr, higher.variance_stderr)
    diff = higher.sidelobe_variance - lower.sidelobe_variance
    if se == 0:
        return math.inf if diff > 0 else (0.0 if diff == 0 else -math.inf)
    return diff / se


def variance_is_lower(lower: AfStats, higher: AfStats, confidence: float = 0.95) -> bool:
    """One-sided test that ``lower`` has the smaller sidelobe variance."""
    return variance_ordering_z(lower, higher) > norm.ppf(confidence)


def rank_agreement(stats: Sequence[AfStats]) -> bool:
    """True when sidelobe variances are ordered like the kurtoses."""
    by_k = sorted(stats, key=lambda s: s.kurtosis)
    v = [s.sidelobe_variance for s in by_k]
    return all(a < b for a, b in zip(v, v[1:]))
