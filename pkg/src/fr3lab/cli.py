"""Command-line scenario runner: every subcommand writes CSV/JSON files plus a manifest.

Exit codes: 0 success, 2 config parse error, 3 validation error,
4 numerical failure, 5 I/O error. Errors are also printed to stderr as a
JSON object.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from pydantic import ValidationError

from . import __version__
from .alignment import (
    CoarseMissError,
    Scene,
    TierConfig,
    hierarchical_align,
    scan_response,
)
from .array import angle_grid, beampattern, build_ula, pointing_weights
from .config import (
    ConfigParseError,
    DrtBlock,
    ScenarioConfig,
    apply_overrides,
    load_paper_track_block,
    load_yaml,
    schedule_objects,
    track_objects,
)
from .drt import (
    ConstellationSpec,
    FrameLayout,
    af_sidelobe_stats,
    ambiguity_function,
    generate_ofdm_frame,
    reference_constellation,
    resource_split,
    variance_ordering_z,
)
from .estimation import crb_sweep
from .raas import (
    build_schedule,
    range_resolution,
    verify_schedule,
)
from .squint import BeamInvisibleError, intra_band_spread
from .tracking import (
    AlwaysMeetsTarget,
    CoverageError,
    NeverMeetsTarget,
    coverage_radius,
    localization_rmse,
    rmse_curve,
)

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5
SUBCOMMANDS = ("beampattern", "squint", "crb", "align", "schedule", "drt", "track", "reproduce-figures")
FIGURES = ("fig2", "fig3", "fig4", "fig5")


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, errors: list | None = None):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.errors = errors or []


@dataclass
class RunManifest:
    tool_version: str
    subcommand: str
    config_hash: str
    seed: int
    outputs: list[dict] = field(default_factory=list)
    wall_clock_s: float = 0.0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


class Writer:
    """Collects output files in memory and writes them in a fixed order."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.files: dict[str, bytes] = {}

    def csv(self, name: str, header: list[str], rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self.files[name] = buf.getvalue().encode()

    def json(self, name: str, payload) -> None:
        self.files[name] = (json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n").encode()

    def flush(self) -> list[dict]:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        listing = []
        for name in sorted(self.files):
            data = self.files[name]
            (self.out_dir / name).write_bytes(data)
            listing.append({"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        return listing


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _finite(x: float):
    return x if math.isfinite(x) else None


# --- subcommands ---------------------------------------------------------


def run_beampattern(cfg: ScenarioConfig, w: Writer, workers: int) -> None:
    b = cfg.beampattern
    geom = build_ula(b.n_elements, b.design_frequency_hz)
    weights = pointing_weights(geom, b.pointing_angle_deg)
    grid = angle_grid(b.span_deg[0], b.span_deg[1], b.grid_step_deg)
    pat = beampattern(geom, weights, b.frequency_hz, grid, normalize=True)
    w.csv("beampattern.csv", ["angle_deg", "gain_linear", "gain_db"], zip(pat.angle_grid, pat.gains, pat.in_db()))


SQUINT_HEADER = [
    "label", "design_frequency_hz", "carrier_hz", "bandwidth_hz", "pointing_angle_deg",
    "apparent_center_deg", "lower_edge_deg", "upper_edge_deg", "max_deviation_deg",
    "total_spread_deg", "snr_loss_db",
]


def _squint_rows(cfg: ScenarioConfig, with_sweep: bool):
    s = cfg.squint
    geom = build_ula(s.n_elements, s.design_frequency_hz)
    cases = [(c.label or f"case_{i}", c.carrier_hz, c.bandwidth_hz) for i, c in enumerate(s.cases)]
    if with_sweep:
        cases += [(f"sweep_{fc / 1e9:g}ghz", fc, s.sweep_bandwidth_hz) for fc in s.sweep_carriers_hz]
    for label, fc, bw in cases:
        r = intra_band_spread(geom, s.design_frequency_hz, fc, bw, s.pointing_angle_deg, s.grid_step_deg)
        yield [label, r.design_frequency, r.carrier_center, r.bandwidth, r.pointing_angle,
               r.apparent_center_angle, r.edge_angles[0], r.edge_angles[1],
               r.max_deviation_from_center, r.total_spread, r.snr_loss_db]


def run_squint(cfg: ScenarioConfig, w: Writer, workers: int) -> None:
    w.csv("squint.csv", SQUINT_HEADER, list(_squint_rows(cfg, with_sweep=True)))


CRB_HEADER = ["frequency_hz", "range_m", "angle_deg", "crb_range_m2", "crb_angle_deg2", "fraunhofer_m"]


def _crb_rows(cfg: ScenarioConfig):
    c = cfg.crb
    rows = crb_sweep(
        c.frequency_list(), c.ranges_m, c.angle_deg, c.snr_db, c.n_elements,
        c.geometry_mode, c.design_frequency_hz, c.n_snapshots,
    )
    out = []
    for r in rows:
        rc = r.result.range_crb if r.ok else math.nan
        ac = r.result.angle_crb_deg2 if r.ok else math.nan
        out.append([r.frequency, r.range, r.angle, rc, ac, r.fraunhofer])
    return out


def run_crb(cfg: ScenarioConfig, w: Writer, workers: int) -> None:
    w.csv("crb.csv", CRB_HEADER, _crb_rows(cfg))


def _tiers(cfg: ScenarioConfig):
    a = cfg.align
    mk = lambda t: TierConfig(t.frequency_hz, t.n_elements, t.grid_step_deg, tuple(t.span_deg))  # noqa: E731
    scene = Scene(tuple((s.angle_deg, s.power) for s in a.sources), a.noise_power)
    return scene, mk(a.coarse), mk(a.fine)


def _align_summary(result, scene) -> dict:
    return {
        "sources_deg": scene.angles,
        "coarse_peak_deg": result.coarse_peak,
        "refinement_window_deg": list(result.refinement_window),
        "fine_peaks_deg": result.fine_peaks,
        "resolved": result.resolved,
        "evaluations": {
            "coarse": result.coarse_evaluations,
            "fine": result.fine_evaluations,
            "hierarchical_total": result.evaluations,
            "exhaustive_fine": result.exhaustive_evaluations,
        },
    }


def run_align(cfg: ScenarioConfig, w: Writer, workers: int) -> None:
    a = cfg.align
    scene, coarse, fine = _tiers(cfg)
    res = hierarchical_align(scene, coarse, fine, a.window_halfwidth_deg, a.peak_prominence_db, a.detection_margin_db)
    w.csv("align_coarse.csv", ["angle_deg", "gain_linear"], zip(res.coarse_pattern.angle_grid, res.coarse_pattern.gains))
    w.csv("align_fine.csv", ["angle_deg", "gain_linear"], zip(res.fine_pattern.angle_grid, res.fine_pattern.gains))
    w.json("align_summary.json", _align_summary(res, scene))


def run_schedule(cfg: ScenarioConfig, w: Writer, workers: int, base_dir: Path | None = None) -> None:
    grid, missions = schedule_objects(cfg.schedule.resolved(base_dir))
    sched = build_schedule(grid, missions, cfg.schedule.policy)
    report = verify_schedule(grid, missions, sched)
    payload = sched.to_dict()
    payload["policy"] = cfg.schedule.policy
    payload["verification"] = [c.__dict__ for c in report]
    payload["range_resolution_m"] = {
        m.node_id: range_resolution(m.required_bandwidth) for m in sorted(missions, key=lambda m: m.node_id)
    }
    w.json("schedule.json", payload)
    w.csv(
        "utilization.csv",
        ["band_index", "center_hz", "width_hz", "utilization_fraction"],
        [[i, b.center, b.width, sched.utilization[i]] for i, b in enumerate(grid.bands)],
    )
    if report:
        raise CliError(EXIT_NUMERIC, "numerical", "schedule failed independent verification",
                       [c.__dict__ for c in report])


def _constellation(d: DrtBlock, name: str | None, base_dir: Path | None) -> ConstellationSpec:
    if name is None and d.alphabet_path:
        path = Path(d.alphabet_path)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        data = load_yaml(path.read_text())
        pts = [complex(p[0], p[1]) for p in data["points"]]
        return ConstellationSpec.from_points(str(data.get("name", path.stem)), pts, data.get("probabilities"))
    return reference_constellation(name or d.constellation)


def _layout(d: DrtBlock) -> FrameLayout:
    if d.pilot_spacing == 0:
        return FrameLayout.filled(d.n_subcarriers, d.n_symbols, pilots=False)
    return FrameLayout.comb(d.n_subcarriers, d.n_symbols, d.pilot_spacing)


def run_drt(cfg: ScenarioConfig, w: Writer, workers: int, base_dir: Path | None = None) -> None:
    d = cfg.drt
    layout = _layout(d)
    pilot, payload = resource_split(layout)
    kwargs = dict(
        exclusion_zone=tuple(d.exclusion_zone_bins), max_delay_bins=d.max_delay_bins,
        max_doppler_bins=d.max_doppler_bins, cp_len=d.cp_len, workers=workers,
    )
    main_spec = _constellation(d, None, base_dir)
    main = af_sidelobe_stats(main_spec, layout, d.n_trials, cfg.master_seed, **kwargs)
    comparison = {}
    for name in d.compare:
        spec = reference_constellation(name)
        comparison[spec.name] = af_sidelobe_stats(spec, layout, d.n_trials, cfg.master_seed, **kwargs)
    ranked = sorted(comparison.values(), key=lambda s: s.kurtosis)
    z = [variance_ordering_z(a, b) for a, b in zip(ranked, ranked[1:])]
    w.json("drt_stats.json", {
        "constellation": main_spec.name,
        "stats": main.to_dict(),
        "pilot_fraction": pilot,
        "payload_fraction": payload,
        "comparison": {k: v.to_dict() for k, v in comparison.items()},
        "ordering_z_scores": z,
    })
    frame = generate_ofdm_frame(main_spec, layout, np.random.SeedSequence(cfg.master_seed).spawn(1)[0], d.cp_len)
    surf = ambiguity_function(frame, d.max_delay_bins, d.max_doppler_bins)
    mag2 = np.abs(surf.values) ** 2
    rows = [[int(t), int(n), mag2[i, j]] for i, t in enumerate(surf.delays) for j, n in enumerate(surf.dopplers)]
    w.csv("af_surface.csv", ["delay_bins", "doppler_bins", "af_power_linear"], rows)


def _track_setup(cfg: ScenarioConfig):
    block = cfg.track if cfg.track is not None else load_paper_track_block()
    link, regimes = track_objects(block)
    ds = block.distances
    n = int(math.floor((ds.stop_m - ds.start_m) / ds.step_m + 1e-9)) + 1
    distances = ds.start_m + ds.step_m * np.arange(n)
    return link, regimes, distances, block.accuracy_target_m


def _track_outputs(cfg: ScenarioConfig, w: Writer, csv_name: str, json_name: str) -> None:
    link, regimes, distances, target = _track_setup(cfg)
    curve = rmse_curve(link, regimes, distances)
    names = [r.name for r in regimes]
    header = ["distance_m", *[f"rmse_{n}" for n in names], "rmse_hybrid", "chosen_regime"]
    rows = [
        [d, *[curve.rmse[n][i] for n in names], curve.hybrid_rmse[i], curve.chosen_regime[i]]
        for i, d in enumerate(curve.distances)
    ]
    w.csv(csv_name, header, rows)
    coverage = {}
    for r in regimes:
        try:
            coverage[r.name] = coverage_radius(link, r, target)
        except (NeverMeetsTarget, AlwaysMeetsTarget) as exc:
            coverage[r.name] = {"error": type(exc).__name__, "message": str(exc)}
    summary = {"accuracy_target_m": target, "coverage_radius_m": coverage}
    unc = [r for r in regimes if r.squint_mode == "intra-uncompensated"]
    comp = [r for r in regimes if r.squint_mode == "compensated"]
    if unc and comp and all(isinstance(coverage[r.name], float) for r in (unc[0], comp[0])):
        u, c = unc[0], comp[0]
        clear = link.without_blockage()
        at = coverage[u.name]
        summary["squint_compensation"] = {
            "coverage_gain_m": coverage[c.name] - coverage[u.name],
            "rmse_gain_at_uncompensated_radius_m": localization_rmse(clear, u, at) - localization_rmse(clear, c, at),
        }
    w.json(json_name, summary)


def run_track(cfg: ScenarioConfig, w: Writer, workers: int) -> None:
    _track_outputs(cfg, w, "track.csv", "track_summary.json")


def reproduce_figures(which: str, cfg: ScenarioConfig, w: Writer, workers: int = 1) -> None:
    """One CSV per figure panel; ``which`` is ``all`` or one of ``fig2``..``fig5``."""
    figs = FIGURES if which == "all" else (which,)
    for fig in figs:
        if fig == "fig2":
            scene, coarse, fine = _tiers(cfg)
            span = (min(coarse.scan_span[0], fine.scan_span[0]), max(coarse.scan_span[1], fine.scan_span[1]))
            step = fine.scan_grid_step
            common = TierConfig(coarse.frequency, coarse.n_elements, step, span)
            c = scan_response(scene, common)
            f = scan_response(scene, TierConfig(fine.frequency, fine.n_elements, step, span))
            w.csv("fig2_coarse.csv", ["angle_deg", "gain_linear", "gain_db"], zip(c.angle_grid, c.gains, c.in_db()))
            w.csv("fig2_fine.csv", ["angle_deg", "gain_linear", "gain_db"], zip(f.angle_grid, f.gains, f.in_db()))
            a = cfg.align
            res = hierarchical_align(scene, coarse, fine, a.window_halfwidth_deg, a.peak_prominence_db, a.detection_margin_db)
            w.json("fig2_summary.json", _align_summary(res, scene))
        elif fig == "fig3":
            w.csv("fig3_crb.csv", CRB_HEADER, _crb_rows(cfg))
        elif fig == "fig4":
            w.csv("fig4_squint.csv", SQUINT_HEADER, list(_squint_rows(cfg, with_sweep=True)))
        elif fig == "fig5":
            _track_outputs(cfg, w, "fig5_track.csv", "fig5_summary.json")
        else:
            raise CliError(EXIT_VALIDATION, "validation", f"unknown figure {fig!r}")


RUNNERS: dict[str, Callable] = {
    "beampattern": run_beampattern,
    "squint": run_squint,
    "crb": run_crb,
    "align": run_align,
    "schedule": run_schedule,
    "drt": run_drt,
    "track": run_track,
}


# --- driver ---------------------------------------------------------------


def load_config(config_path: str | None, overrides: list[str], seed: int | None, out: str | None,
                grid_step: float | None) -> tuple[ScenarioConfig, Path | None]:
    data: dict = {}
    base_dir = None
    if config_path is not None:
        path = Path(config_path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise CliError(EXIT_IO, "io", f"cannot read config {config_path}: {exc}") from exc
        try:
            data = load_yaml(text)
        except ConfigParseError as exc:
            raise CliError(EXIT_PARSE, "parse", f"config is not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise CliError(EXIT_PARSE, "parse", "config must be a mapping at the top level")
        base_dir = path.parent
    extra = list(overrides)
    if seed is not None:
        extra.append(f"master_seed={seed}")
    if out is not None:
        extra.append(f"output_dir={json.dumps(out)}")
    if grid_step is not None:
        extra += [f"beampattern.grid_step_deg={grid_step}", f"squint.grid_step_deg={grid_step}",
                  f"align.fine.grid_step_deg={grid_step}"]
    try:
        data = apply_overrides(data, extra)
    except ConfigParseError as exc:
        raise CliError(EXIT_PARSE, "parse", str(exc)) from exc
    if grid_step is not None:
        _complete_tier(data, "fine")
    try:
        return ScenarioConfig.model_validate(data), base_dir
    except ValidationError as exc:
        errors = [{"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]} for e in exc.errors()]
        names = ", ".join(e["field"] for e in errors)
        raise CliError(EXIT_VALIDATION, "validation", f"invalid config field(s): {names}", errors) from exc


def _complete_tier(data: dict, tier: str) -> None:
    # a bare grid-step override must not erase the tier defaults
    from .config import AlignBlock

    default = getattr(AlignBlock(), tier).model_dump()
    block = data.setdefault("align", {}).setdefault(tier, {})
    for k, v in default.items():
        block.setdefault(k, v)


def config_hash(cfg: ScenarioConfig) -> str:
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def run(
    subcommand: str,
    config_path: str | None = None,
    overrides: list[str] | None = None,
    seed: int | None = None,
    out: str | None = None,
    grid_step: float | None = None,
    workers: int = 1,
    figure: str = "all",
) -> tuple[int, RunManifest | None]:
    """Run one subcommand; returns ``(exit_code, manifest)`` and never raises for user errors."""
    start = time.perf_counter()
    try:
        if subcommand not in SUBCOMMANDS:
            raise CliError(EXIT_PARSE, "parse", f"unknown subcommand {subcommand!r}")
        cfg, base_dir = load_config(config_path, overrides or [], seed, out, grid_step)
        writer = Writer(Path(cfg.output_dir))
        pending: CliError | None = None
        try:
            if subcommand == "reproduce-figures":
                reproduce_figures(figure, cfg, writer, workers)
            elif subcommand in ("schedule", "drt"):
                RUNNERS[subcommand](cfg, writer, workers, base_dir)
            else:
                RUNNERS[subcommand](cfg, writer, workers)
        except CliError as exc:
            if not writer.files:
                raise
            pending = exc
        except (ArithmeticError, BeamInvisibleError, CoarseMissError, CoverageError) as exc:
            raise CliError(EXIT_NUMERIC, "numerical", f"{type(exc).__name__}: {exc}") from exc
        except ValidationError as exc:
            errors = [{"field": ".".join(str(p) for p in e["loc"]), "message": e["msg"]} for e in exc.errors()]
            raise CliError(EXIT_VALIDATION, "validation", "invalid scenario file", errors) from exc
        except ConfigParseError as exc:
            raise CliError(EXIT_PARSE, "parse", str(exc)) from exc
        except ValueError as exc:
            raise CliError(EXIT_VALIDATION, "validation", str(exc)) from exc
        except OSError as exc:
            raise CliError(EXIT_IO, "io", str(exc)) from exc
        try:
            listing = writer.flush()
            manifest = RunManifest(__version__, subcommand, config_hash(cfg), cfg.master_seed, listing)
            manifest.wall_clock_s = time.perf_counter() - start
            (Path(cfg.output_dir) / "manifest.json").write_text(manifest.to_json() + "\n")
        except OSError as exc:
            raise CliError(EXIT_IO, "io", f"cannot write outputs: {exc}") from exc
        if pending is not None:
            raise pending
        return EXIT_OK, manifest
    except CliError as exc:
        report = {"status": "error", "exit_code": exc.code, "kind": exc.kind, "message": str(exc), "errors": exc.errors}
        print(json.dumps(report, sort_keys=True, default=_json_default), file=sys.stderr)
        return exc.code, None


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors get the same JSON report as config errors
        self.print_usage(sys.stderr)
        report = {"status": "error", "exit_code": EXIT_PARSE, "kind": "parse", "message": message, "errors": []}
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
        self.exit(EXIT_PARSE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fr3lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(parser_class=_Parser, dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML scenario file")
        p.add_argument("--seed", type=int, help="master seed (overrides master_seed)")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-key override, e.g. crb.snr_db=10")
        p.add_argument("--grid-step", type=float, help="angular grid step in degrees")
        p.add_argument("--workers", type=int, default=1, help="threads for Monte Carlo trials")
        if name == "reproduce-figures":
            p.add_argument("figure", nargs="?", default="all", choices=("all",) + FIGURES)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    code, manifest = run(
        args.subcommand, args.config, args.overrides, args.seed, args.out, args.grid_step,
        args.workers, getattr(args, "figure", "all"),
    )
    if manifest is not None:
        print(json.dumps({"status": "ok", "outputs": [o["path"] for o in manifest.outputs]}))
    return code


if __name__ == "__main__":
    sys.exit(main())
