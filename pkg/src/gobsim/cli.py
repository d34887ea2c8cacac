"""Command-line entry point for maps, Monte Carlo campaigns and validation.

Subcommands: intensity-map, sinr-map, rate-map, montecarlo,
validate-config.  All dimensioned flags take unit-tagged values
("--rlens 25mm", "--tilt 21deg").  Every run writes CSV outputs plus a
manifest.json capturing the fully resolved configuration; re-running
from that manifest reproduces the outputs byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .ap import build_beams, total_intensity_field
from .clustering import BUILTIN_LAYOUTS, builtin_layout, layout_from_file
from .config import describe_config, read_config_file, resolve_config
from .errors import ConfigError, NotAPartition, ParseError, SimulationError, UnknownLayout
from .rayoracle import compare_fields, trace_field
from .sim import (
    CampaignSpec,
    run_campaign,
    spatial_maps,
    write_cdf_csv,
    write_grid_csv,
    write_manifest,
    write_mean_csv,
)

_OVERRIDE_FLAGS = {
    # flag -> config key
    "fov": "adr.fov",
    "theta_cpc": "adr.theta_cpc",
    "rlens": "lens.curvature_radius",
    "L": "lens.diameter",
    "tauc": "lens.center_thickness",
    "nlens": "lens.refractive_index",
    "dvl": "ap.array_to_lens",
    "dlens": "ap.element_spacing",
    "tilt": "ap.tilt",
    "pitch": "ap.pitch",
    "hdl": "ap.height",
    "w0": "source.waist_radius",
    "wavelength": "source.wavelength",
    "pt": "source.power",
    "apd": "adr.pd_area",
    "ff": "adr.fill_factor",
    "npd": "adr.num_pd",
    "ncpc": "adr.refractive_index",
    "rpd": "adr.responsivity",
    "rin": "noise.rin",
    "noise_figure": "noise.noise_figure",
    "temperature": "noise.temperature",
    "load": "noise.load_resistance",
    "bandwidth": "noise.bandwidth",
    "fft": "mac.fft_size",
    "ber": "mac.target_ber",
}

_NUMERIC_OVERRIDES = {"nlens", "ff", "ncpc", "rpd", "ber"}
_INT_OVERRIDES = {"npd", "fft"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 on bad flags (config error)
        raise ConfigError(message)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file (or manifest.json)")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, help="campaign seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    group = parser.add_argument_group("parameter overrides (unit-tagged)")
    for flag in _OVERRIDE_FLAGS:
        group.add_argument(f"--{flag.replace('_', '-')}", dest=f"ov_{flag}")


def _collect_overrides(args) -> dict:
    overrides = {}
    for flag, key in _OVERRIDE_FLAGS.items():
        value = getattr(args, f"ov_{flag}", None)
        if value is None:
            continue
        if flag in _NUMERIC_OVERRIDES:
            value = float(value)
        elif flag in _INT_OVERRIDES:
            value = int(value)
        overrides[key] = value
    if args.seed is not None:
        overrides["seed"] = args.seed
    return overrides


def _load(args):
    file_values = read_config_file(args.config) if args.config else None
    return resolve_config(file_values, _collect_overrides(args))


def _resolve_layout(name: str, beams):
    if name in BUILTIN_LAYOUTS:
        return builtin_layout(name, beams)
    if os.path.exists(name):
        return layout_from_file(name)
    raise UnknownLayout(name)


def _room_extent(cfg):
    return (-cfg.room[0] / 2, cfg.room[0] / 2, -cfg.room[1] / 2, cfg.room[1] / 2)


def _manifest(args, cfg, command: str, outputs, extra=None):
    payload = {
        "tool": "gobsim",
        "version": __version__,
        "command": command,
        "config_raw": cfg.raw,
        "outputs": sorted(outputs),
    }
    if extra:
        payload.update(extra)
    path = os.path.join(args.out, "manifest.json")
    write_manifest(payload, path)
    return path


def cmd_intensity_map(args) -> int:
    cfg = _load(args)
    beams = build_beams(cfg.ap)
    extent = _room_extent(cfg)
    elements = [args.element] if args.element else None
    fieldmap = total_intensity_field(
        beams, extent, args.resolution, elements=elements
    )
    os.makedirs(args.out, exist_ok=True)
    out_field = os.path.join(args.out, "heatmap_intensity.csv")
    write_grid_csv(fieldmap, out_field)
    outputs = [os.path.basename(out_field)]
    extra = {}
    if args.validate:
        oracle = trace_field(
            beams,
            args.rays,
            extent,
            args.resolution,
            seed=cfg.seed,
            threads=args.threads,
        )
        out_oracle = os.path.join(args.out, "heatmap_intensity_oracle.csv")
        write_grid_csv(oracle.field, out_oracle)
        outputs.append(os.path.basename(out_oracle))
        report = compare_fields(fieldmap, oracle, beams)
        extra = {
            "validation": {
                "nrmse": report.nrmse,
                "cells_compared": report.cells_compared,
                "max_centroid_offset_m": float(np.nanmax(report.centroid_offsets)),
                "escaped_fraction": report.escaped_fraction,
                "rays_per_vcsel": args.rays,
            }
        }
        print(
            f"oracle comparison: nrmse={report.nrmse:.4f} over "
            f"{report.cells_compared} cells, max spot-centroid offset "
            f"{np.nanmax(report.centroid_offsets) * 100:.2f} cm, "
            f"escaped fraction {report.escaped_fraction:.2e}"
        )
    _manifest(args, cfg, "intensity-map", outputs, extra)
    print(f"wrote {', '.join(outputs)} to {args.out}")
    return 0


def _map_command(args, kind: str) -> int:
    cfg = _load(args)
    beams = build_beams(cfg.ap)
    layout = _resolve_layout(args.layout, beams)
    sinr_map, rate_map = spatial_maps(
        beams,
        layout,
        cfg.adr,
        cfg.noise,
        cfg.mac,
        _room_extent(cfg),
        args.resolution,
        threads=args.threads,
    )
    os.makedirs(args.out, exist_ok=True)
    fieldmap = sinr_map if kind == "sinr" else rate_map
    name = "heatmap_sinr_db.csv" if kind == "sinr" else "heatmap_rate_bps.csv"
    path = os.path.join(args.out, name)
    write_grid_csv(fieldmap, path)
    _manifest(args, cfg, f"{kind}-map", [name], {"layout": layout.name})
    print(f"wrote {name} to {args.out} (layout {layout.name}, peak {fieldmap.values.max():.4g})")
    return 0


def cmd_sinr_map(args) -> int:
    return _map_command(args, "sinr")


def cmd_rate_map(args) -> int:
    return _map_command(args, "rate")


def _parse_rho(text: str) -> tuple[float, ...]:
    if ":" in text:
        start, stop, step = (float(tok) for tok in text.split(":"))
        if step <= 0 or stop < start:
            raise ConfigError(f"bad density grid {text!r}")
        count = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 9) for i in range(count))
    return tuple(float(tok) for tok in text.split(","))


def cmd_montecarlo(args) -> int:
    cfg = _load(args)
    if (args.K is None) == (args.rho is None):
        raise ConfigError("specify exactly one of --K or --rho")
    beams = build_beams(cfg.ap)
    layout_names = [tok.strip() for tok in args.layouts.split(",") if tok.strip()]
    layouts = {name: _resolve_layout(name, beams) for name in layout_names}
    schemes = tuple(tok.strip() for tok in args.schemes.split(",") if tok.strip())
    spec = CampaignSpec(
        drops=args.drops,
        layouts=tuple(layout_names),
        schemes=schemes,
        densities=_parse_rho(args.rho) if args.rho else (),
        ue_counts=(args.K,) if args.K is not None else (),
        room=cfg.room,
        seed=cfg.seed,
    )
    result = run_campaign(
        spec, beams, layouts, cfg.adr, cfg.noise, cfg.mac, threads=args.threads
    )
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    single_density = len(spec.drop_specs()) == 1
    if single_density:
        for s in result.series:
            for metric, cdf in (
                ("sumrate", s.cdf_sum_rate()),
                ("jain", s.cdf_jain()),
            ):
                name = f"cdf_{metric}_{s.layout}_{s.scheme}.csv"
                write_cdf_csv(cdf, os.path.join(args.out, name))
                outputs.append(name)
    for metric in ("sumrate", "jain"):
        name = f"mean_{metric}_vs_rho.csv"
        write_mean_csv(result, metric, os.path.join(args.out, name))
        outputs.append(name)
    _manifest(
        args,
        cfg,
        "montecarlo",
        outputs,
        {
            "drops": args.drops,
            "layouts": layout_names,
            "schemes": list(schemes),
            "densities": [s.density for s in result.series],
        },
    )
    print(f"wrote {len(outputs)} files to {args.out}")
    return 0


def cmd_validate_config(args) -> int:
    cfg = _load(args)
    print(describe_config(cfg))
    if args.layout:
        beams = build_beams(cfg.ap)
        layout = _resolve_layout(args.layout, beams)
        sizes = layout.sizes()
        print(
            f"layout {layout.name!r}: {layout.n_clusters} clusters, sizes "
            f"{min(sizes)}..{max(sizes)}, partition OK"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gobsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("intensity-map", help="receiver-plane irradiance heatmap")
    p.add_argument("--resolution", type=int, default=250)
    p.add_argument("--element", type=int, help="restrict to one transmitter element (1..9)")
    p.add_argument("--validate", action="store_true", help="also run the ray-trace oracle")
    p.add_argument("--rays", type=int, default=100_000, help="rays per VCSEL for --validate")
    _add_common(p)
    p.set_defaults(func=cmd_intensity_map)

    p = sub.add_parser("sinr-map", help="single-user SINR heatmap for a layout")
    p.add_argument("--layout", required=True, help="builtin name or layout file")
    p.add_argument("--resolution", type=int, default=250)
    _add_common(p)
    p.set_defaults(func=cmd_sinr_map)

    p = sub.add_parser("rate-map", help="single-user rate heatmap for a layout")
    p.add_argument("--layout", required=True, help="builtin name or layout file")
    p.add_argument("--resolution", type=int, default=250)
    _add_common(p)
    p.set_defaults(func=cmd_rate_map)

    p = sub.add_parser("montecarlo", help="multi-user Monte Carlo campaign")
    p.add_argument("--layouts", default="sdma", help="comma list of layouts")
    p.add_argument("--schemes", default="noma", help="comma list of schemes")
    p.add_argument("--K", type=int, help="fixed UE count")
    p.add_argument("--rho", help="UE density: value, comma list, or start:stop:step")
    p.add_argument("--drops", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("validate-config", help="print the resolved configuration")
    p.add_argument("--layout", help="also validate a layout (builtin or file)")
    _add_common(p)
    p.set_defaults(func=cmd_validate_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, ParseError, NotAPartition, UnknownLayout) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except SimulationError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
