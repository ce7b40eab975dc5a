"""Versioned YAML scenario schema.

Every block is optional; a missing block takes the defaults below, which
reproduce the reference figures. Numeric keys carry their unit as a suffix
(``_hz``, ``_m``, ``_deg``, ``_db``, ``_s``, ``_w``); counts are ``n_*`` or
``*_slots``/``*_bins``. Unknown keys are rejected.
"""

from __future__ import annotations

from typing import Any, Literal

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

SCHEMA_VERSION = 1


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


Span = tuple[float, float]


class BeampatternBlock(_Block):
    n_elements: int = Field(32, ge=2)
    design_frequency_hz: PositiveFloat = 24e9
    frequency_hz: PositiveFloat = 24e9
    pointing_angle_deg: float = Field(10.0, gt=-90, lt=90)
    span_deg: Span = (-90.0, 90.0)
    grid_step_deg: PositiveFloat = 0.01


class SquintCase(_Block):
    carrier_hz: PositiveFloat
    bandwidth_hz: float = Field(ge=0)
    label: str = ""


class SquintBlock(_Block):
    n_elements: int = Field(32, ge=2)
    design_frequency_hz: PositiveFloat = 24e9
    pointing_angle_deg: float = Field(10.0, gt=-90, lt=90)
    grid_step_deg: PositiveFloat = 0.01
    cases: list[SquintCase] = Field(
        default_factory=lambda: [
            SquintCase(carrier_hz=24e9, bandwidth_hz=400e6, label="intra_24ghz_400mhz"),
            SquintCase(carrier_hz=6e9, bandwidth_hz=100e6, label="intra_6ghz_100mhz"),
            SquintCase(carrier_hz=18e9, bandwidth_hz=300e6, label="inter_18ghz_300mhz"),
        ]
    )
    sweep_carriers_hz: list[PositiveFloat] = Field(default_factory=lambda: [float(f) * 1e9 for f in range(6, 25)])
    sweep_bandwidth_hz: float = Field(400e6, ge=0)


class FrequencySweep(_Block):
    start_hz: PositiveFloat = 7e9
    stop_hz: PositiveFloat = 24e9
    num: int = Field(18, ge=1)


class CrbBlock(_Block):
    n_elements: int = Field(32, ge=2)
    snr_db: float = 20.0
    ranges_m: list[PositiveFloat] = Field(default_factory=lambda: [2.0, 10.0, 20.0])
    frequencies_hz: FrequencySweep | list[PositiveFloat] = Field(default_factory=FrequencySweep)
    angle_deg: float = Field(0.0, gt=-90, lt=90)
    geometry_mode: Literal["fixed-aperture", "per-carrier"] = "fixed-aperture"
    design_frequency_hz: PositiveFloat | None = None
    n_snapshots: PositiveInt = 1

    def frequency_list(self) -> list[float]:
        f = self.frequencies_hz
        if isinstance(f, FrequencySweep):
            if f.num == 1:
                return [f.start_hz]
            step = (f.stop_hz - f.start_hz) / (f.num - 1)
            return [f.start_hz + i * step for i in range(f.num)]
        return list(f)


class SourceSpec(_Block):
    angle_deg: float = Field(gt=-90, lt=90)
    power: float = Field(1.0, ge=0)


class TierSpec(_Block):
    frequency_hz: PositiveFloat
    n_elements: int = Field(ge=2)
    grid_step_deg: PositiveFloat
    span_deg: Span = (-60.0, 60.0)


class AlignBlock(_Block):
    sources: list[SourceSpec] = Field(
        default_factory=lambda: [SourceSpec(angle_deg=0.0), SourceSpec(angle_deg=5.0)], min_length=1
    )
    noise_power: float = Field(0.01, ge=0)
    window_halfwidth_deg: PositiveFloat = 5.0
    peak_prominence_db: PositiveFloat = 3.0
    detection_margin_db: float = 3.0
    coarse: TierSpec = TierSpec(frequency_hz=8e9, n_elements=10, grid_step_deg=0.1)
    fine: TierSpec = TierSpec(frequency_hz=24e9, n_elements=30, grid_step_deg=0.01)


class BandSpec(_Block):
    center_hz: PositiveFloat
    width_hz: PositiveFloat


class GridSpec(_Block):
    n_slots_per_frame: PositiveInt
    slot_duration_s: PositiveFloat
    horizon_frames: PositiveInt
    bands: list[BandSpec] = Field(min_length=1)
    noise_power_w: PositiveFloat = 1e-12
    signal_power_w: PositiveFloat = 1e-9
    min_distance_m: PositiveFloat = 1.0
    propagation_exponent: PositiveFloat = 2.0


class BlockedCell(_Block):
    frame: int = Field(ge=0)
    slot: int = Field(ge=0)
    band: int = Field(ge=0)


class MissionSpec(_Block):
    node_id: str
    required_bandwidth_hz: PositiveFloat
    window_length_slots: PositiveInt
    period_slots: int = Field(0, ge=0)
    required_sinr_db: float = 20.0
    position_m: tuple[float, float] = (0.0, 0.0)
    priority: int = 0
    allowed_bands: list[int] | None = None

    @model_validator(mode="after")
    def _period(self):
        if self.period_slots and self.period_slots < self.window_length_slots:
            raise ValueError("period_slots must be 0 or >= window_length_slots")
        return self


class Scenario(_Block):
    grid: GridSpec
    blocked: list[BlockedCell] = Field(default_factory=list)
    missions: list[MissionSpec] = Field(default_factory=list)


def _default_scenario() -> Scenario:
    bands = [BandSpec(center_hz=26.75e9, width_hz=500e6), BandSpec(center_hz=27.25e9, width_hz=500e6)]
    missions = [
        MissionSpec(node_id="airspace-a", required_bandwidth_hz=400e6, window_length_slots=2, period_slots=10,
                    position_m=(0.0, 0.0), priority=2),
        MissionSpec(node_id="airspace-b", required_bandwidth_hz=400e6, window_length_slots=2, period_slots=10,
                    position_m=(30.0, 0.0), priority=2),
        MissionSpec(node_id="bridge-monitor", required_bandwidth_hz=250e6, window_length_slots=3,
                    position_m=(5000.0, 0.0), priority=1),
        MissionSpec(node_id="drone-sweep", required_bandwidth_hz=450e6, window_length_slots=4, period_slots=20,
                    position_m=(10.0, 10.0), priority=0),
    ]
    blocked = [BlockedCell(frame=f, slot=s, band=0) for f in range(2) for s in (0, 1, 2)]
    return Scenario(
        grid=GridSpec(n_slots_per_frame=10, slot_duration_s=0.5e-3, horizon_frames=2, bands=bands),
        blocked=blocked,
        missions=missions,
    )


class ScheduleBlock(_Block):
    scenario_path: str | None = None
    scenario: Scenario | None = None
    policy: Literal["greedy-priority", "earliest-deadline"] = "greedy-priority"

    def resolved(self, base_dir=None) -> Scenario:
        if self.scenario is not None:
            return self.scenario
        if self.scenario_path is not None:
            from pathlib import Path

            path = Path(self.scenario_path)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return Scenario.model_validate(load_yaml(path.read_text()))
        return _default_scenario()


class DrtBlock(_Block):
    constellation: str = "qpsk"
    alphabet_path: str | None = None
    n_subcarriers: int = Field(64, ge=2)
    n_symbols: int = Field(14, ge=1)
    pilot_spacing: int = Field(8, ge=0)  # 0 = no pilots
    n_trials: int = Field(500, ge=2)
    cp_len: int = Field(16, ge=0)
    max_delay_bins: int = Field(16, ge=0)
    max_doppler_bins: int = Field(8, ge=0)
    exclusion_zone_bins: tuple[int, int] = (1, 1)
    compare: list[str] = Field(default_factory=lambda: ["qpsk", "16qam", "gaussian"])


class LinkSpec(_Block):
    reference_snr_db: float
    reference_distance_m: PositiveFloat = 1.0
    reference_frequency_hz: PositiveFloat = 6e9
    reference_n_elements: int = Field(32, ge=1)
    path_loss_exponent: PositiveFloat = 2.0
    blockage_zone_m: Span | None = (20.0, 25.0)
    blockage_loss_db: float = Field(0.0, ge=0)
    blockage_applies_above_hz: float = 10e9


class RegimeSpec(_Block):
    name: str
    carrier_hz: PositiveFloat
    n_elements: int = Field(ge=2)
    squint_mode: Literal["none", "intra-uncompensated", "compensated"] = "none"
    design_frequency_hz: PositiveFloat | None = None
    bandwidth_hz: float = Field(400e6, ge=0)
    squint_angle_deg: float = Field(10.0, gt=-90, lt=90)


class DistanceSweep(_Block):
    start_m: PositiveFloat = 2.0
    stop_m: PositiveFloat = 35.0
    step_m: PositiveFloat = 0.5


class TrackBlock(_Block):
    link: LinkSpec
    regimes: list[RegimeSpec] = Field(min_length=2)
    distances: DistanceSweep = DistanceSweep()
    accuracy_target_m: PositiveFloat = 0.1


class ScenarioConfig(_Block):
    schema_version: int = SCHEMA_VERSION
    master_seed: int = 0
    output_dir: str = "out"
    beampattern: BeampatternBlock = BeampatternBlock()
    squint: SquintBlock = SquintBlock()
    crb: CrbBlock = CrbBlock()
    align: AlignBlock = AlignBlock()
    schedule: ScheduleBlock = ScheduleBlock()
    drt: DrtBlock = DrtBlock()
    track: TrackBlock | None = None

    @model_validator(mode="after")
    def _version(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}, expected {SCHEMA_VERSION}")
        return self


class ConfigParseError(ValueError):
    pass


def load_yaml(text: str) -> Any:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(str(exc)) from exc
    return {} if data is None else data


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``dotted.key=value`` overrides; values are parsed as YAML scalars."""
    for item in overrides:
        if "=" not in item:
            raise ConfigParseError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        value = load_yaml(raw) if raw.strip() else None
        node = data
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigParseError(f"override {key!r} walks through a non-mapping")
        node[parts[-1]] = value
    return data


def parse_track_block(data: dict):
    block = TrackBlock.model_validate(data)
    return track_objects(block)


def load_paper_track_block() -> TrackBlock:
    from importlib import resources

    text = resources.files("fr3lab").joinpath("configs/paper_calibration.yaml").read_text()
    return TrackBlock.model_validate(load_yaml(text)["track"])


def track_objects(block: TrackBlock):
    from .tracking import Blockage, LinkBudget, RegimeConfig

    ln = block.link
    blockage = None
    if ln.blockage_zone_m is not None:
        blockage = Blockage(tuple(ln.blockage_zone_m), ln.blockage_loss_db, ln.blockage_applies_above_hz)
    link = LinkBudget(
        reference_snr_db=ln.reference_snr_db,
        reference_distance=ln.reference_distance_m,
        reference_frequency=ln.reference_frequency_hz,
        reference_n_elements=ln.reference_n_elements,
        path_loss_exponent=ln.path_loss_exponent,
        blockage=blockage,
    )
    regimes = [
        RegimeConfig(
            name=r.name,
            carrier=r.carrier_hz,
            n_elements=r.n_elements,
            squint_mode=r.squint_mode,
            design_frequency=r.design_frequency_hz,
            bandwidth=r.bandwidth_hz,
            squint_angle=r.squint_angle_deg,
        )
        for r in block.regimes
    ]
    return link, regimes


def schedule_objects(sc: Scenario):
    from .raas import Band, MissionProfile, SlotGrid

    g = sc.grid
    grid = SlotGrid(
        n_slots_per_frame=g.n_slots_per_frame,
        slot_duration=g.slot_duration_s,
        bands=tuple(Band(b.center_hz, b.width_hz) for b in g.bands),
        horizon=g.horizon_frames,
        blocked=frozenset((c.frame, c.slot, c.band) for c in sc.blocked),
        noise_power=g.noise_power_w,
        signal_power=g.signal_power_w,
        min_distance=g.min_distance_m,
        propagation_exponent=g.propagation_exponent,
    )
    missions = [
        MissionProfile(
            node_id=m.node_id,
            required_bandwidth=m.required_bandwidth_hz,
            window_length=m.window_length_slots,
            period=m.period_slots,
            required_sinr_db=m.required_sinr_db,
            position=tuple(m.position_m),
            priority=m.priority,
            allowed_bands=None if m.allowed_bands is None else tuple(m.allowed_bands),
        )
        for m in sc.missions
    ]
    return grid, missions
