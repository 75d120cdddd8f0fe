"""Command-line front end: ``design``, ``pattern``, ``map``, ``sweep`` and ``validate``.

Exit codes: 0 success, 1 input error, 2 infeasible design or size mismatch,
3 failed validation check.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis
from .codebook import (DesignResult, Formulation, PreconditionError, build_profile, codebook_from_dict,
                       codebook_to_dict, integer_design, rotate_mapping,
                       two_stage_design)
from .config import ConfigError, RunConfig, load_config
from .linksim import InfeasibleSweepError, run_sweep
from .wavefield import angle_grid, evenly_spaced_indices, gain, gain_grid

log = logging.getLogger("staircase_ttd")

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_VALIDATION = 0, 1, 2, 3
PATTERN_HEADER = ("m", "f_hz", "sin_theta", "gain_db")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _write_json(path, obj) -> None:
    # json emits floats with repr, the shortest round-trip form
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _out_dir(args, cfg: RunConfig) -> str:
    path = args.out or cfg.output.dir
    os.makedirs(path, exist_ok=True)
    return path


def _angle_count(args, cfg: RunConfig) -> int:
    n = args.angles if args.angles is not None else cfg.output.angle_grid_size
    if n < 2:
        raise CliError("--angles must be >= 2", EXIT_INPUT)
    return n


def _seed(args, cfg: RunConfig) -> int:
    return cfg.output.seed if args.seed is None else args.seed


def _design(cfg: RunConfig) -> DesignResult:
    spec = cfg.design_spec()
    if cfg.design.formulation is Formulation.UNIFORM_INTEGER:
        return integer_design(spec)
    return two_stage_design(spec)


def _designed_params(cfg: RunConfig, result: DesignResult):
    """Design parameters after the optional rotation from the config."""
    if cfg.design.rotation is None:
        return result.params
    try:
        return rotate_mapping(result, cfg.design.rotation)
    except PreconditionError as exc:
        raise CliError(f"design.rotation: {exc}", EXIT_INFEASIBLE) from exc


def _load_codebook(args, cfg: RunConfig):
    if not args.codebook:
        raise CliError("--codebook is required", EXIT_INPUT)
    try:
        with open(args.codebook) as fh:
            data = json.load(fh)
        params, profile = codebook_from_dict(data)
    except OSError as exc:
        raise CliError(f"cannot read codebook {args.codebook}: {exc.strerror}", EXIT_INPUT) from exc
    except ValueError as exc:  # includes JSONDecodeError
        raise CliError(f"invalid codebook {args.codebook}: {exc}", EXIT_INPUT) from exc
    if profile.n_t != cfg.array.n_t:
        raise CliError(f"codebook has n_t={profile.n_t} but the config array has n_t={cfg.array.n_t}",
                       EXIT_INFEASIBLE)
    return params, profile


def cmd_design(args, cfg: RunConfig) -> int:
    result = _design(cfg)
    out = _out_dir(args, cfg)
    report = result.report()
    report["scenario"] = cfg.scenario
    report["rotation"] = cfg.design.rotation
    if not result.feasible:
        _write_json(os.path.join(out, "design_report.json"), report)
        d_req = result.d_required
        ceil_d = math.ceil(d_req) if math.isfinite(d_req) else d_req
        raise CliError(f"infeasible design: ceil(D)={ceil_d} must be < N_T={cfg.array.n_t} (D={d_req:.6g})",
                       EXIT_INFEASIBLE)
    params = _designed_params(cfg, result)
    profile = build_profile(params, cfg.array.n_t)
    report["dphi_step_rad"] = params.dphi_step
    _write_json(os.path.join(out, "codebook.json"), codebook_to_dict(params, profile))
    _write_json(os.path.join(out, "design_report.json"), report)
    print(f"D={params.d:.6g} gamma={result.gamma:.6g} feasible=true -> {out}")
    return EXIT_OK


def cmd_pattern(args, cfg: RunConfig) -> int:
    _, profile = _load_codebook(args, cfg)
    out = _out_dir(args, cfg)
    idx = evenly_spaced_indices(cfg.grid, cfg.output.freq_count)
    gg = gain_grid(profile, cfg.array, cfg.grid, _angle_count(args, cfg), idx)
    db = analysis.gain_db(gg.values)
    angles = [repr(float(u)) for u in gg.angles]
    path = os.path.join(out, "pattern.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PATTERN_HEADER)
        for m, f, row in zip(gg.freq_indices, gg.freqs, db):
            fs = repr(float(f))
            writer.writerows([int(m), fs, a, repr(float(v))] for a, v in zip(angles, row))
    print(f"pattern {len(idx)}x{len(angles)} -> {path}")
    return EXIT_OK


def cmd_map(args, cfg: RunConfig) -> int:
    params, profile = _load_codebook(args, cfg)
    out = _out_dir(args, cfg)
    n_ang = _angle_count(args, cfg)
    idx = evenly_spaced_indices(cfg.grid, cfg.output.freq_count)
    bm = analysis.extract_beam_map(gain_grid(profile, cfg.array, cfg.grid, n_ang, idx))
    analysis.write_beam_map_csv(os.path.join(out, "beam_map.csv"), bm)
    if cfg.design is not None:
        result = _design(cfg)
        if not result.feasible:
            raise CliError("design section is infeasible; no discrepancy report", EXIT_INFEASIBLE)
        peaks = analysis.subband_peaks(profile, cfg.array, cfg.grid, result.subband_centers, n_ang)
        targets = np.sin(result.target_angles)
        _write_json(os.path.join(out, "discrepancy.json"), {
            "formulation": result.params.formulation.value,
            "d": result.params.d,
            "subband_centers_hz": result.subband_centers.tolist(),
            "target_sin_theta": targets.tolist(),
            "predicted_sin_theta": np.sin(result.predicted_angles).tolist(),
            "mapping_discrepancy": analysis.mapping_discrepancy(result).tolist(),
            "measured_peak_sin_theta": peaks.tolist(),
            "measured_offset_cells": (np.abs(peaks - targets) / (2 / n_ang)).tolist(),
        })
    print(f"beam map over {len(idx)} subcarriers -> {out}")
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig) -> int:
    spec = cfg.sweep_spec(_seed(args, cfg))
    out = _out_dir(args, cfg)
    try:
        if args.workers and args.workers > 1:
            with ProcessPoolExecutor(args.workers) as pool:
                result = run_sweep(spec, pool)
        else:
            result = run_sweep(spec)
    except InfeasibleSweepError as exc:
        raise CliError(str(exc), EXIT_INFEASIBLE) from exc
    except ValueError as exc:
        raise CliError(f"sweep: {exc}", EXIT_INPUT) from exc
    path = os.path.join(out, "sweep.csv")
    result.write_csv(path)
    print(f"sweep over {spec.variable} ({len(spec.values)} values) -> {path}")
    return EXIT_OK


def _check(name, status, measured=None, tolerance=None, reason=None) -> dict:
    return {"name": name, "status": status, "measured": measured, "tolerance": tolerance,
            "reason": reason}


def _pass_fail(name, measured, tolerance) -> dict:
    return _check(name, "pass" if measured <= tolerance else "fail", float(measured), tolerance)


def _params_close(a, b) -> bool:
    pairs = [(a.d, b.d), (a.dtau_jump, b.dtau_jump), (a.dphi_jump, b.dphi_jump),
             (a.dtau_step, b.dtau_step), (a.dphi_step, b.dphi_step)]
    return a.formulation is b.formulation and all(
        math.isclose(x, y, rel_tol=1e-12, abs_tol=1e-24) for x, y in pairs)


def validation_checks(cfg: RunConfig, params, profile, angle_count: int, seed: int) -> list[dict]:
    rng = np.random.default_rng(seed)
    grid, array = cfg.grid, cfg.array
    view = analysis.SubArrayView.from_params(params, array.n_t, grid.f_c)
    cell = 2 / angle_count
    checks = []

    rebuilt = build_profile(params, array.n_t)
    err = max(np.max(np.abs(rebuilt.delays - profile.delays)) / max(np.max(np.abs(profile.delays)), 1e-30),
              np.max(np.abs(rebuilt.phases - profile.phases)))
    checks.append(_pass_fail("profile_matches_params", err, 1e-12))

    if params.formulation is Formulation.UNIFORM_INTEGER and array.n_t % int(params.d) == 0:
        worst = 0.0
        for _ in range(500):
            u = rng.uniform(-1, 1)
            m = int(rng.integers(1, grid.m_tot + 1))
            direct = gain(profile, array, grid, u, m)
            fact = analysis.factorized_gain(view, array, grid, u, m)
            worst = max(worst, abs(direct - fact) / max(direct, 1e-12))
        checks.append(_pass_fail("factorization_identity", worst, 1e-9))
    else:
        checks.append(_check("factorization_identity", "skipped",
                             reason=f"needs the uniform staircase with integer D dividing n_t "
                                    f"(formulation={params.formulation.value}, D={params.d:.6g})"))

    sep_err, argmax_err = 0.0, 0.0
    u = angle_grid(angle_count)
    for m in evenly_spaced_indices(grid, 16):
        centres = analysis.beam_centres(view, grid, int(m))
        if centres.size > 1:
            spacing = analysis.lobe_spacing(view, grid, int(m))
            sep_err = max(sep_err, float(np.max(np.abs(-np.diff(centres) - spacing))))
        f = float(grid.frequencies(m))
        peak = u[np.argmax(analysis.subarray_gain(view, u, f))]
        argmax_err = max(argmax_err, float(np.min(np.abs(centres - peak))) / cell)
    checks.append(_pass_fail("separation_law", sep_err, 1e-12))
    checks.append(_pass_fail("closed_form_argmax_cells", argmax_err, 1.0))

    if cfg.design is None:
        reason = "no design section in the config"
        checks += [_check(n, "skipped", reason=reason) for n in ("filter_centre_tracks_lobes",
                                                                 "design_hits_predicted")]
        return checks
    result = _design(cfg)
    if not result.feasible:
        reason = "the config design is infeasible"
    elif not _params_close(_designed_params(cfg, result), params):
        reason = "codebook parameters differ from the config design"
    elif cfg.design.rotation not in (None, 1):
        reason = "rotated mapping; predicted lobes refer to the unrotated design"
    elif params.formulation is not Formulation.MODULO:
        reason = "integer D shifts the lobes off the filter trajectory by construction"
    else:
        reason = None
    if reason:
        checks += [_check(n, "skipped", reason=reason) for n in ("filter_centre_tracks_lobes",
                                                                 "design_hits_predicted")]
        return checks
    predicted = np.sin(result.predicted_angles)
    centres = np.array([analysis.filter_centre_at(view, f) for f in result.subband_centers])
    checks.append(_pass_fail("filter_centre_tracks_lobes", float(np.max(np.abs(centres - predicted))), 1e-9))
    peaks = analysis.subband_peaks(profile, cfg.array, cfg.grid, result.subband_centers, angle_count)
    checks.append(_pass_fail("design_hits_predicted", float(np.max(np.abs(peaks - predicted))) / cell, 1.0))
    offsets = np.abs(peaks - np.sin(result.target_angles)) / cell
    checks.append(_check("target_offset_cells", "info", float(np.max(offsets)),
                         reason="per-sub-band offsets: " + ", ".join(f"{x:.3g}" for x in offsets)))
    return checks


def cmd_validate(args, cfg: RunConfig) -> int:
    params, profile = _load_codebook(args, cfg)
    out = _out_dir(args, cfg)
    checks = validation_checks(cfg, params, profile, _angle_count(args, cfg), _seed(args, cfg))
    ok = all(c["status"] != "fail" for c in checks)
    _write_json(os.path.join(out, "validation.json"), {"passed": ok, "checks": checks})
    for c in checks:
        detail = c["reason"] if c["measured"] is None else f"{c['measured']:.3g} (tol {c['tolerance']})"
        print(f"{c['status']:>7}  {c['name']}: {detail}")
    return EXIT_OK if ok else EXIT_VALIDATION


COMMANDS = {"design": cmd_design, "pattern": cmd_pattern, "map": cmd_map, "sweep": cmd_sweep,
            "validate": cmd_validate}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="staircase-ttd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario JSON")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="sampler seed (overrides output.seed)")
        p.add_argument("--angles", type=int, help="sin(theta) grid size (overrides output.angle_grid_size)")
        if name in ("pattern", "map", "validate"):
            p.add_argument("--codebook", help="codebook JSON from the design command")
        if name == "sweep":
            p.add_argument("--workers", type=int, default=0, help="worker processes for scenarios")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"error: config {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
