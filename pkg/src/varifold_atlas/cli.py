"""Command-line interface.

    varifold-atlas arrange   CONFIG [--svg PATH] [--out DIR]
    varifold-atlas enumerate CONFIG [--out DIR]
    varifold-atlas build     CONFIG (--varifold K | --all) [--out DIR] [--no-figures]
    varifold-atlas verify    CONFIG [--out DIR] [--replay REPORT] [--no-figures]

Exit codes: 0 success, 1 verification failure, 2 input/geometry error.
Reports are deterministic JSON; the build/verify paths also emit OBJ
meshes, relaxation CSVs and matplotlib figures next to them.
VARIFOLD_ATLAS_THREADS caps per-varifold parallelism.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import pipeline, report as report_mod
from .arrangement import build as build_signed_arrangement
from .errors import ConsistencyError, GeometryError, InputError, VarifoldAtlasError
from .render import arrangement_figure, relax_history_figure, surface_figure, write_arrangement_svg


def _stem(config_path: str) -> str:
    return Path(config_path).stem


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _start_report(cfg: pipeline.RunConfig) -> dict:
    rep = report_mod.new_report(cfg.echo())
    if cfg.warnings:
        rep["warnings"] = cfg.warnings
    for w in cfg.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return rep


def cmd_arrange(args) -> int:
    cfg = pipeline.load_config(args.config)
    rep = _start_report(cfg)
    t0 = time.time()
    arr = build_signed_arrangement(cfg.curves)
    summary = pipeline.arrangement_summary(arr)
    rep["arrangement"] = summary
    rep["timing"] = {"arrange_seconds": round(time.time() - t0, 3)}
    out = _outdir(args)
    stem = _stem(args.config)
    report_mod.save_report(rep, out / f"{stem}.arrange.json")
    if args.svg:
        write_arrangement_svg(arr, args.svg)
    print(f"crossings: {summary['crossings']}  faces: {summary['faces']} "
          f"(bounded {summary['bounded_faces']})")
    print(f"fi_minus: {summary['fi_minus']}  fo_minus: {summary['fo_minus']} "
          f" upper bound: {summary['upper_bound']}")
    print(f"report: {out / (stem + '.arrange.json')}")
    return 0


def cmd_enumerate(args) -> int:
    cfg = pipeline.load_config(args.config)
    rep = _start_report(cfg)
    t0 = time.time()
    arr = build_signed_arrangement(cfg.curves)
    rep["arrangement"] = pipeline.arrangement_summary(arr)
    vs, entries, _ = pipeline.enumerate_report_entries(arr)
    rep["varifolds"] = entries
    rep["timing"] = {"enumerate_seconds": round(time.time() - t0, 3)}
    out = _outdir(args)
    stem = _stem(args.config)
    report_mod.save_report(rep, out / f"{stem}.enumerate.json")
    print(f"{len(vs)} admissible varifolds "
          f"(bound {rep['arrangement']['upper_bound']})")
    for e in entries:
        comps = e["topology"]["components"]
        print(f"  [{e['index']}] chi={e['stats']['chi']} area={e['stats']['area']:.4f} "
              f"components={len(comps)} genus={[r['genus'] for r in comps]}"
              + ("  (least area)" if e["least_area"] else ""))
    print(f"report: {out / (stem + '.enumerate.json')}")
    return 0


def _emit_surface_outputs(out: Path, stem: str, idx: int, built, figures: bool):
    paths = []
    for j, mesh in enumerate(built.relaxed):
        obj = out / f"{stem}_{idx}_{j}.obj"
        mesh.write_obj(obj)
        paths.append(str(obj))
        rep = built.relax_reports[j]
        report_mod.write_relax_csv(out / f"{stem}_{idx}_{j}_relax.csv",
                                   rep.area_history, rep.residual_history)
        if figures:
            relax_history_figure(rep.area_history, rep.residual_history,
                                 out / f"{stem}_{idx}_{j}_relax.png",
                                 title=f"varifold {idx} component {j}")
    if figures and built.relaxed:
        surface_figure(built.relaxed, out / f"{stem}_{idx}_surface.png",
                       title=f"varifold {idx}")
    return paths


def cmd_build(args) -> int:
    cfg = pipeline.load_config(args.config)
    rep = _start_report(cfg)
    t0 = time.time()
    arr = build_signed_arrangement(cfg.curves)
    rep["arrangement"] = pipeline.arrangement_summary(arr)
    vs, entries, complexes = pipeline.enumerate_report_entries(arr)
    if args.all:
        selected = list(range(len(vs)))
    else:
        if args.varifold is None:
            raise InputError("build requires --varifold K or --all")
        if not 0 <= args.varifold < len(vs):
            raise InputError(
                f"--varifold {args.varifold} out of range (0..{len(vs) - 1})"
            )
        selected = [args.varifold]

    out = _outdir(args)
    stem = _stem(args.config)
    figures = not args.no_figures
    if figures:
        arrangement_figure(arr, out / f"{stem}_arrangement.png")
        write_arrangement_svg(arr, out / f"{stem}_arrangement.svg")

    results = pipeline.process_varifolds(arr, vs, entries, complexes, cfg.mesh,
                                         cfg.verify, selected=selected)
    failures = []
    for i in selected:
        built, dt = results[i]
        entries[i].update(pipeline.built_entry_fields(built))
        entries[i]["build_seconds"] = round(dt, 3)
        entries[i]["meshes"] = _emit_surface_outputs(out, stem, i, built, figures)
        for r in built.relax_reports:
            if not r.converged:
                failures.append(f"varifold {i}: relaxation did not converge "
                                f"(residual {r.final_residual:.3e})")
    rep["varifolds"] = entries
    rep["timing"] = {"total_seconds": round(time.time() - t0, 3)}
    if failures:
        rep["relax_failures"] = failures
    report_mod.save_report(rep, out / f"{stem}.build.json")
    for i in selected:
        built, _ = results[i]
        print(f"varifold {i}: verdict {built.verdict}, "
              f"{len(built.relaxed)} component(s), "
              f"area {sum(m.area() for m in built.relaxed):.5f}")
    for f in failures:
        print(f"warning: {f}", file=sys.stderr)
    print(f"report: {out / (stem + '.build.json')}")
    return 0


def cmd_verify(args) -> int:
    cfg = pipeline.load_config(args.config)
    rep = _start_report(cfg)
    t0 = time.time()
    ok, checks = pipeline.verify_config(cfg, rep)
    rep["checks"] = checks
    rep["passed"] = ok
    rep["timing"] = {"total_seconds": round(time.time() - t0, 3)}
    out = _outdir(args)
    stem = _stem(args.config)

    if args.replay:
        stored = report_mod.load_report(args.replay)
        r_ok, r_checks = pipeline.replay_check(stored, rep)
        rep["checks"] += r_checks
        ok = ok and r_ok
        rep["passed"] = ok

    report_mod.save_report(rep, out / f"{stem}.verify.json")
    if not args.no_figures:
        arr = build_signed_arrangement(cfg.curves)
        arrangement_figure(arr, out / f"{stem}_arrangement.png")
    for c in rep["checks"]:
        mark = "PASS" if c["passed"] else "FAIL"
        print(f"[{mark}] {c['name']}: {c['detail']}")
    print(f"report: {out / (stem + '.verify.json')}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="varifold-atlas",
        description="Enumerate admissible varifolds of two crossing curve "
                    "families and build/verify the stable minimal surfaces "
                    "they predict.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="JSON configuration file")
        p.add_argument("--out", default=".", help="output directory (default .)")

    p = sub.add_parser("arrange", help="compute crossings and the signed subdivision")
    common(p)
    p.add_argument("--svg", default=None, help="write an SVG render to this path")
    p.set_defaults(func=cmd_arrange)

    p = sub.add_parser("enumerate", help="enumerate admissible varifolds")
    common(p)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("build", help="build, relax and analyze surfaces")
    common(p)
    p.add_argument("--varifold", type=int, default=None, metavar="K")
    p.add_argument("--all", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="run the full cross-check battery")
    common(p)
    p.add_argument("--replay", default=None, metavar="REPORT",
                   help="also re-verify a stored report's combinatorial fields")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_verify)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConsistencyError, VarifoldAtlasError) as exc:
        print(f"verification error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
