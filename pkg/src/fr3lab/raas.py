"""Slot-scheduled radar sensing windows under a cellular frame (radar-as-a-service).

Time is a grid of ``horizon`` frames with ``n_slots_per_frame`` slots each;
frequency is a set of non-overlapping bands. A mission asks for a contiguous
window of slots on one band, once (``period == 0``) or once in every period
of ``period`` slots. Communication demands are modelled as pre-blocked
(frame, slot, band) cells. Two missions may share a cell only if neither
pushes the other below its SINR requirement.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Literal, Sequence

from .array import SPEED_OF_LIGHT

Policy = Literal["greedy-priority", "earliest-deadline"]


@dataclass(frozen=True)
class Band:
    center: float  # Hz
    width: float  # Hz

    @property
    def low(self) -> float:
        return self.center - self.width / 2

    @property
    def high(self) -> float:
        return self.center + self.width / 2


@dataclass(frozen=True)
class SlotGrid:
    n_slots_per_frame: int
    slot_duration: float  # s
    bands: tuple[Band, ...]
    horizon: int  # frames
    blocked: frozenset[tuple[int, int, int]] = frozenset()  # (frame, slot, band)
    noise_power: float = 1e-12  # W, thermal floor at every radar receiver
    signal_power: float = 1e-9  # W, wanted echo power at every radar receiver
    min_distance: float = 1.0  # m, co-located nodes are clamped to this
    propagation_exponent: float = 2.0

    def __post_init__(self) -> None:
        bands = tuple(b if isinstance(b, Band) else Band(*b) for b in self.bands)
        object.__setattr__(self, "bands", bands)
        object.__setattr__(self, "blocked", frozenset(tuple(c) for c in self.blocked))
        if self.n_slots_per_frame < 1 or self.horizon < 1:
            raise ValueError("grid needs at least one slot per frame and one frame")
        if self.slot_duration <= 0:
            raise ValueError("slot_duration must be positive")
        if not bands:
            raise ValueError("grid needs at least one band")
        for b in bands:
            if b.width <= 0:
                raise ValueError("band width must be positive")
        ordered = sorted(bands, key=lambda b: b.low)
        for lo, hi in zip(ordered, ordered[1:]):
            if hi.low < lo.high:
                raise ValueError("bands must not overlap")
        for frame, slot, band in self.blocked:
            if not (0 <= frame < self.horizon and 0 <= slot < self.n_slots_per_frame and 0 <= band < len(bands)):
                raise ValueError(f"blocked cell {(frame, slot, band)} lies outside the grid")

    @property
    def total_slots(self) -> int:
        return self.n_slots_per_frame * self.horizon

    def is_blocked(self, abs_slot: int, band: int) -> bool:
        frame, slot = divmod(abs_slot, self.n_slots_per_frame)
        return (frame, slot, band) in self.blocked


@dataclass(frozen=True)
class MissionProfile:
    node_id: str
    required_bandwidth: float  # Hz
    window_length: int  # slots
    period: int = 0  # slots, 0 = one-shot
    required_sinr_db: float = 20.0
    position: tuple[float, float] = (0.0, 0.0)  # m
    priority: int = 0  # larger is more important
    allowed_bands: tuple[int, ...] | None = None  # None = any band

    def __post_init__(self) -> None:
        if self.required_bandwidth <= 0:
            raise ValueError(f"{self.node_id}: required_bandwidth must be positive")
        if self.window_length < 1:
            raise ValueError(f"{self.node_id}: window_length must be >= 1")
        if self.period != 0 and self.period < self.window_length:
            raise ValueError(f"{self.node_id}: period must be 0 or >= window_length")
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if self.allowed_bands is not None:
            object.__setattr__(self, "allowed_bands", tuple(self.allowed_bands))


@dataclass(frozen=True, order=True)
class Assignment:
    node_id: str
    frame: int
    first_slot: int
    n_slots: int
    band: int
    occurrence: int = 0

    @property
    def slots(self) -> range:
        return range(self.first_slot, self.first_slot + self.n_slots)

    def abs_slots(self, grid: SlotGrid) -> range:
        start = self.frame * grid.n_slots_per_frame + self.first_slot
        return range(start, start + self.n_slots)


@dataclass(frozen=True)
class Rejection:
    node_id: str
    reason: Literal["capacity", "interference", "bandwidth"]
    detail: str = ""


@dataclass(frozen=True)
class SensingSchedule:
    assignments: tuple[Assignment, ...]
    rejections: tuple[Rejection, ...]
    utilization: dict[int, float] = field(default_factory=dict)

    @property
    def granted(self) -> list[str]:
        return sorted({a.node_id for a in self.assignments})

    def to_dict(self) -> dict:
        return {
            "assignments": [asdict(a) for a in self.assignments],
            "rejections": [asdict(r) for r in self.rejections],
            "utilization": {str(k): v for k, v in sorted(self.utilization.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def range_resolution(bandwidth: float) -> float:
    """Radar range resolution ``c / 2B`` in metres."""
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    return SPEED_OF_LIGHT / (2.0 * bandwidth)


def candidate_bands(mission: MissionProfile, grid: SlotGrid) -> list[int]:
    allowed = range(len(grid.bands)) if mission.allowed_bands is None else mission.allowed_bands
    return [b for b in allowed if 0 <= b < len(grid.bands) and grid.bands[b].width >= mission.required_bandwidth]


def sinr_db(victim: MissionProfile, aggressor: MissionProfile, grid: SlotGrid, exponent: float | None = None) -> float:
    """SINR at ``victim`` with ``aggressor`` transmitting at unit power."""
    n = grid.propagation_exponent if exponent is None else exponent
    d = max(math.dist(victim.position, aggressor.position), grid.min_distance)
    interference = d ** (-n)
    return 10 * math.log10(grid.signal_power / (grid.noise_power + interference))


def interferes(
    a: MissionProfile,
    b: MissionProfile,
    grid: SlotGrid,
    propagation_exponent: float | None = None,
    band_a: int | None = None,
    band_b: int | None = None,
) -> bool:
    """Whether ``a`` and ``b`` may not share a (frame, slot) cell.

    Bands overlap when the given band indices are equal or, if either is not
    given, when the missions have a usable band in common. Overlapping
    missions interfere if either one's SINR falls below its requirement.
    """
    if band_a is not None and band_b is not None:
        overlap = band_a == band_b
    else:
        ca = {band_a} if band_a is not None else set(candidate_bands(a, grid))
        cb = {band_b} if band_b is not None else set(candidate_bands(b, grid))
        overlap = bool(ca & cb)
    if not overlap:
        return False
    return (
        sinr_db(a, b, grid, propagation_exponent) < a.required_sinr_db
        or sinr_db(b, a, grid, propagation_exponent) < b.required_sinr_db
    )


def occurrence_regions(mission: MissionProfile, grid: SlotGrid) -> list[range]:
    """Absolute-slot range each occurrence's window has to fall in."""
    total = grid.total_slots
    if mission.period == 0:
        return [range(0, total)]
    return [range(k * mission.period, (k + 1) * mission.period) for k in range(total // mission.period)]


def window_starts(mission: MissionProfile, region: range, grid: SlotGrid) -> list[int]:
    """Window starts inside ``region`` that do not cross a frame boundary."""
    n = grid.n_slots_per_frame
    length = mission.window_length
    return [
        s
        for s in range(region.start, region.stop - length + 1)
        if s // n == (s + length - 1) // n
    ]


def _order(missions: Sequence[MissionProfile], grid: SlotGrid, policy: Policy) -> list[MissionProfile]:
    if policy == "greedy-priority":
        return sorted(missions, key=lambda m: (-m.priority, m.node_id))
    if policy == "earliest-deadline":
        def deadline(m: MissionProfile) -> int:
            return m.period if m.period else grid.total_slots
        return sorted(missions, key=lambda m: (deadline(m), -m.priority, m.node_id))
    raise ValueError(f"unknown policy {policy!r}")


class _Occupancy:
    def __init__(self, grid: SlotGrid, missions: dict[str, MissionProfile], exponent: float | None):
        self.grid = grid
        self.missions = missions
        self.exponent = exponent
        self.cells: dict[tuple[int, int], list[str]] = {}
        self._pair_cache: dict[tuple[str, str, int], bool] = {}

    def _conflict(self, a: str, b: str, band: int) -> bool:
        key = (a, b, band) if a < b else (b, a, band)
        if key not in self._pair_cache:
            self._pair_cache[key] = interferes(
                self.missions[a], self.missions[b], self.grid, self.exponent, band, band
            )
        return self._pair_cache[key]

    def fits(self, node: str, start: int, length: int, band: int, honour_blocks: bool = True) -> bool:
        for t in range(start, start + length):
            if honour_blocks and self.grid.is_blocked(t, band):
                return False
            for other in self.cells.get((t, band), ()):
                if other == node or self._conflict(node, other, band):
                    return False
        return True

    def add(self, node: str, start: int, length: int, band: int) -> None:
        for t in range(start, start + length):
            self.cells.setdefault((t, band), []).append(node)

    def remove(self, node: str, start: int, length: int, band: int) -> None:
        for t in range(start, start + length):
            self.cells[(t, band)].remove(node)


def build_schedule(
    grid: SlotGrid,
    missions: Sequence[MissionProfile],
    policy: Policy = "greedy-priority",
    propagation_exponent: float | None = None,
) -> SensingSchedule:
    """Admit missions one at a time, placing every occurrence at its earliest feasible window.

    A mission is granted only if all its occurrences fit; otherwise none of
    them are kept and it is listed in the rejections with a reason.
    """
    by_id = {m.node_id: m for m in missions}
    if len(by_id) != len(missions):
        raise ValueError("node_id values must be unique")
    occ = _Occupancy(grid, by_id, propagation_exponent)
    n = grid.n_slots_per_frame
    assignments: list[Assignment] = []
    rejections: list[Rejection] = []

    for m in _order(missions, grid, policy):
        bands = candidate_bands(m, grid)
        if not bands:
            rejections.append(Rejection(m.node_id, "bandwidth", f"no usable band of at least {m.required_bandwidth:g} Hz"))
            continue
        placed: list[tuple[int, int, int]] = []
        failure: Rejection | None = None
        for k, region in enumerate(occurrence_regions(m, grid)):
            starts = window_starts(m, region, grid)
            spot = next(
                ((s, b) for s in starts for b in bands if occ.fits(m.node_id, s, m.window_length, b)),
                None,
            )
            if spot is None:
                comm_only = any(occ.fits(m.node_id, s, m.window_length, b, honour_blocks=False) for s in starts for b in bands)
                reason = "interference" if comm_only else "capacity"
                failure = Rejection(m.node_id, reason, f"occurrence {k} has no feasible window")
                break
            s, b = spot
            occ.add(m.node_id, s, m.window_length, b)
            placed.append((k, s, b))
        if failure is None and not occurrence_regions(m, grid):
            failure = Rejection(m.node_id, "capacity", "period longer than the horizon")
        if failure is not None:
            for _, s, b in placed:
                occ.remove(m.node_id, s, m.window_length, b)
            rejections.append(failure)
            continue
        for k, s, b in placed:
            frame, slot = divmod(s, n)
            assignments.append(Assignment(m.node_id, frame, slot, m.window_length, b, k))

    used: dict[int, set[int]] = {b: set() for b in range(len(grid.bands))}
    for a in assignments:
        used[a.band].update(a.abs_slots(grid))
    utilization = {b: len(s) / grid.total_slots for b, s in used.items()}
    return SensingSchedule(
        tuple(sorted(assignments, key=lambda a: (a.frame, a.first_slot, a.band, a.node_id))),
        tuple(sorted(rejections, key=lambda r: r.node_id)),
        utilization,
    )


@dataclass(frozen=True)
class ConflictItem:
    kind: str
    nodes: tuple[str, ...]
    detail: str = ""


def verify_schedule(
    grid: SlotGrid,
    missions: Iterable[MissionProfile],
    schedule: SensingSchedule,
    propagation_exponent: float | None = None,
) -> list[ConflictItem]:
    """Exhaustive, scheduler-independent re-check of a schedule.

    Every pair of assignments is compared cell by cell, and every granted
    mission's periodic obligations are recounted. An empty list means the
    schedule is valid.
    """
    by_id = {m.node_id: m for m in missions}
    report: list[ConflictItem] = []
    assigned = list(schedule.assignments)
    rejected = {r.node_id for r in schedule.rejections}

    for a in assigned:
        m = by_id.get(a.node_id)
        if m is None:
            report.append(ConflictItem("unknown node", (a.node_id,)))
            continue
        if not (0 <= a.frame < grid.horizon and 0 <= a.first_slot and a.first_slot + a.n_slots <= grid.n_slots_per_frame):
            report.append(ConflictItem("bad window", (a.node_id,), f"{a} leaves its frame"))
        if a.n_slots != m.window_length:
            report.append(ConflictItem("bad window", (a.node_id,), f"{a} has {a.n_slots} slots, needs {m.window_length}"))
        if not (0 <= a.band < len(grid.bands)) or a.band not in candidate_bands(m, grid):
            report.append(ConflictItem("bandwidth", (a.node_id,), f"band {a.band} not usable"))
        for s in a.slots:
            if (a.frame, s, a.band) in grid.blocked:
                report.append(ConflictItem("blocked slot", (a.node_id,), f"frame {a.frame} slot {s} band {a.band}"))

    for i in range(len(assigned)):
        for j in range(i + 1, len(assigned)):
            a, b = assigned[i], assigned[j]
            if a.band != b.band or a.frame != b.frame:
                continue
            if not set(a.slots) & set(b.slots):
                continue
            if a.node_id == b.node_id:
                report.append(ConflictItem("self overlap", (a.node_id,), f"{a} and {b}"))
                continue
            ma, mb = by_id.get(a.node_id), by_id.get(b.node_id)
            if ma is None or mb is None:
                continue
            if interferes(ma, mb, grid, propagation_exponent, a.band, b.band):
                report.append(ConflictItem("overlap", tuple(sorted((a.node_id, b.node_id))), f"frame {a.frame} band {a.band}"))

    n = grid.n_slots_per_frame
    for node, m in sorted(by_id.items()):
        mine = [a for a in assigned if a.node_id == node]
        if node in rejected:
            if mine:
                report.append(ConflictItem("granted and rejected", (node,)))
            continue
        if not mine:
            report.append(ConflictItem("unaccounted", (node,), "neither granted nor rejected"))
            continue
        regions = occurrence_regions(m, grid)
        covered = [0] * len(regions)
        for a in mine:
            start = a.frame * n + a.first_slot
            ks = [k for k, r in enumerate(regions) if r.start <= start and start + a.n_slots <= r.stop]
            if not ks:
                report.append(ConflictItem("bad window", (node,), f"{a} outside every period"))
            else:
                covered[ks[0]] += 1
        for k, c in enumerate(covered):
            if c == 0:
                report.append(ConflictItem("missed period", (node,), f"occurrence {k}"))
            elif c > 1:
                report.append(ConflictItem("extra occurrence", (node,), f"occurrence {k} served {c} times"))
    return report
