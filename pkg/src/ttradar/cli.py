"""Command-line interface.

Subcommands: simulate, denoise, estimate, profile, bench, ingest.
Exit codes: 0 success, 1 usage/configuration error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import radar
from . import tensor as tz
from .decomp import cpd_als, cpd_to_tt, reconstruct, save_model, tt_mdl, tt_recompress
from .errors import NumericFailureError, TTRadarError
from .estimate import SmoothingPlan, estimate
from .metrics import ra_profile, rd_profile

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser():
    p = _Parser(prog="ttradar", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--config", type=Path, help="JSON configuration file")
        sp.add_argument("--out", type=Path, required=True, help="output path")

    sp = sub.add_parser("simulate", help="synthesize a scenario tensor")
    common(sp)

    sp = sub.add_parser("denoise", help="denoise a CTEN1 tensor")
    common(sp)
    sp.add_argument("--in", dest="infile", type=Path, required=True)
    sp.add_argument(
        "--method",
        choices=("tt_mdl", "cpd_als", "cpd_recompress"),
        default="tt_mdl",
    )
    sp.add_argument("--rank", type=int, default=None, help="CP rank (ALS routes)")
    sp.add_argument("--eps", type=float, default=1e-2, help="recompression eps")

    sp = sub.add_parser("estimate", help="estimate target parameters")
    common(sp)
    sp.add_argument("--in", dest="infile", type=Path, required=True)
    sp.add_argument("--targets", type=int, default=None, help="model order")
    sp.add_argument(
        "--sub-dims",
        type=lambda s: tuple(int(x) for x in s.split(",")),
        default=(2, 2, 2, 2),
    )

    sp = sub.add_parser("profile", help="range-Doppler / range-angle profile")
    common(sp)
    sp.add_argument("--in", dest="infile", type=Path, required=True)
    sp.add_argument("--kind", choices=("rd", "ra"), default="rd")

    sp = sub.add_parser("bench", help="Monte-Carlo benchmark")
    common(sp)

    sp = sub.add_parser("ingest", help="parse a raw int16 ADC capture")
    common(sp)
    sp.add_argument("--raw", type=Path, required=True)
    sp.add_argument("--sidecar", type=Path, required=True)
    return p


def _load_json(path, what):
    if path is None:
        raise TTRadarError(f"--config is required for {what}")
    with open(path) as fh:
        return json.load(fh)


def _cmd_simulate(args):
    doc = _load_json(args.config, "simulate")
    cfg, targets, noise = radar.scenario_from_dict(doc)
    clean = radar.synthesize(cfg, targets)
    args.out.mkdir(parents=True, exist_ok=True)
    tz.write_cten(args.out / "clean.cten", clean)
    manifest = {
        "format": "scenario-output",
        "version": 1,
        "dims": list(clean.shape),
        "clean": "clean.cten",
    }
    if noise is not None:
        noisy, _ = radar.add_noise(
            clean, radar.NoiseSpec(noise.input_snr_db, noise.seed + args.seed)
        )
        tz.write_cten(args.out / "noisy.cten", noisy)
        manifest["noisy"] = "noisy.cten"
        manifest["input_snr_db"] = noise.input_snr_db
    with open(args.out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def _cmd_denoise(args):
    y = tz.read_cten(args.infile)
    args.out.mkdir(parents=True, exist_ok=True)
    if args.method == "tt_mdl":
        res = tt_mdl(y)
        model, denoised = res.model, res.denoised
        diag = {
            "ranks": model.ranks,
            "empty_signal": res.empty_signal,
            "truncation_energies": res.truncation_energies,
        }
    else:
        if not args.rank:
            raise TTRadarError(f"--rank is required for {args.method}")
        cpd = cpd_als(y, R=args.rank, seed=args.seed)
        if args.method == "cpd_als":
            model, denoised = cpd, reconstruct(cpd)
            diag = {"rank": cpd.rank, "residual": cpd.residual}
        else:
            model = tt_recompress(cpd_to_tt(cpd), args.eps)
            denoised = reconstruct(model)
            diag = {"ranks": model.ranks, "eps": args.eps}
    tz.write_cten(args.out / "denoised.cten", denoised)
    save_model(args.out / "model", model)
    with open(args.out / "diagnostics.json", "w") as fh:
        json.dump(diag, fh, indent=2)
        fh.write("\n")
    return EXIT_OK


def _cmd_estimate(args):
    y = tz.read_cten(args.infile)
    doc = _load_json(args.config, "estimate")
    cfg, _, _ = radar.scenario_from_dict(doc)
    result = estimate(y, cfg, SmoothingPlan(args.sub_dims), n_targets=args.targets)
    if args.out.suffix == ".json":
        args.out.parent.mkdir(parents=True, exist_ok=True)
        result.save(args.out)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        result.save(args.out / "estimate.json")
    return EXIT_OK


def _profile_axes(cfg, kind, n_fft):
    nu = (np.arange(n_fft) + n_fft // 2) % n_fft - n_fft // 2
    nu = nu / float(n_fft)
    rng = nu * radar.SPEED_OF_LIGHT / (
        2.0 * cfg.chirp_slope_hz_per_s * cfg.sample_interval_s
    )
    if kind == "rd":
        other = nu * cfg.wavelength_m / (2.0 * cfg.chirp_duration_s)
        return rng, other, "range_m", "velocity_mps"
    ratio = cfg.element_spacing_m / cfg.wavelength_m
    other = np.degrees(np.arcsin(np.clip(nu / ratio, -1.0, 1.0)))
    return rng, other, "range_m", "azimuth_deg"


def _cmd_profile(args):
    y = tz.read_cten(args.infile)
    doc = _load_json(args.config, "profile")
    cfg, _, _ = radar.scenario_from_dict(doc)
    grid = rd_profile(y) if args.kind == "rd" else ra_profile(y)
    rng, other, rng_label, other_label = _profile_axes(cfg, args.kind, grid.shape[0])
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"profile_{args.kind}.csv"
    with open(path, "w") as fh:
        fh.write(rng_label + "," + ",".join(f"{v:.6g}" for v in rng) + "\n")
        fh.write(other_label + "," + ",".join(f"{v:.6g}" for v in other) + "\n")
        for row in grid:
            fh.write("db," + ",".join(f"{v:.4f}" for v in row) + "\n")
    return EXIT_OK


def _cmd_bench(args):
    doc = _load_json(args.config, "bench") if args.config else {}
    scenario = doc.get("scenario", radar.desk_scenario())
    if isinstance(scenario, str):
        with open(scenario) as fh:
            scenario = json.load(fh)
    spec = bench_mod.BenchmarkSpec(
        scenario=scenario,
        methods=tuple(doc.get("methods", bench_mod.METHODS)),
        snr_grid_db=tuple(doc.get("snr_grid_db", (-30.0, -20.0, -10.0, 0.0))),
        trials=int(doc.get("trials", 100)),
        base_seed=int(doc.get("base_seed", args.seed)),
        sub_dims=tuple(doc.get("sub_dims", (2, 2, 2, 2))),
        recompress_eps=float(doc.get("recompress_eps", 1e-2)),
        measure_time=bool(doc.get("measure_time", True)),
    )
    rows = bench_mod.run_benchmark(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    bench_mod.write_csv(args.out / "metrics.csv", rows)
    return EXIT_OK


def _cmd_ingest(args):
    y = radar.ingest_adc(args.raw, args.sidecar)
    if args.out.suffix == ".cten":
        args.out.parent.mkdir(parents=True, exist_ok=True)
        tz.write_cten(args.out, y)
    else:
        args.out.mkdir(parents=True, exist_ok=True)
        tz.write_cten(args.out / "ingested.cten", y)
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "denoise": _cmd_denoise,
    "estimate": _cmd_estimate,
    "profile": _cmd_profile,
    "bench": _cmd_bench,
    "ingest": _cmd_ingest,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or EXIT_OK)
    try:
        return _COMMANDS[args.command](args)
    except NumericFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (TTRadarError, OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
