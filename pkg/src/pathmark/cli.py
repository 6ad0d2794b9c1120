"""Command line entry point.

    pathmark run --catalog <path> --out <dir> --seed <u64> [--set key=value ...]
    pathmark state [--markers] [--stage lens ...] [--basis linear|circular] [--analyzer H]
    pathmark profile --scenario <name> --plane lens-entry --projection H

Exit codes: 0 success, 1 expected bounds failed, 2 usage or parse error.
The default catalog is taken from $PATHMARK_CATALOG, else the shipped one.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__, algebra
from .harness import (CatalogError, ScenarioError, load_catalog, run_scenario, sample_photons,
                      tomllib)
from .io import canonical_json, config_hash, digest, new_manifest, profile_text
from .optics import ConfigError, fringe_visibility

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PLANES = ("aperture", "lens-entry", "image")
PROJECTIONS = ("H", "V", "L", "R", "total")


class UsageError(Exception):
    pass


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"--set expects key=value, got {item!r}")
        try:
            value = tomllib.loads(f"v = {raw}")["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        out[key.strip()] = value
    return out


def _profile_extent(cfg, plane):
    if plane == "aperture":
        return cfg.slit_separation / 2 + cfg.slit_width
    if plane == "lens-entry":
        return 3 * cfg.fringe_period
    return cfg.magnification * cfg.slit_separation


def _catalog_hash(catalog) -> str:
    return digest([{"name": s.name, "version": s.version, "model": s.model,
                    "config": s.config.to_dict(), "wire_rule": s.wire_rule, "baseline": s.baseline,
                    "expected": [b.__dict__ for b in s.expected]} for s in catalog.scenarios])


def cmd_run(args) -> int:
    overrides = parse_overrides(args.set)
    catalog = load_catalog(args.catalog, overrides)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as err:
        raise UsageError(f"output directory {out} is not writable: {err.strerror or err}") from None

    outputs = []
    for s in catalog.scenarios:
        outputs.append(f"{s.name}.summary.json")
        if s.model == "wave":
            outputs += [f"{s.name}.lens-entry.csv", f"{s.name}.image.csv"]
        if args.photons:
            outputs.append(f"{s.name}.events.csv")
    chash = _catalog_hash(catalog)
    manifest = new_manifest(chash, catalog.names(), outputs, args.seed, overrides,
                            Path(catalog.path).name if catalog.path else "")
    mhash = manifest.hash

    failed = []
    for s in catalog.scenarios:
        result = run_scenario(s)
        doc = {
            "scenario": s.name,
            "version": s.version,
            "model": s.model,
            "description": s.description,
            "manifest_hash": mhash,
            "config_hash": config_hash(result.config),
            "config": result.config.to_dict(),
            "metadata": s.metadata,
            "summary": result.summary.to_dict(),
            "checks": [{"bound": c.bound.describe(), "quantity": c.bound.quantity,
                        "measured": c.measured, "passed": c.passed} for c in result.checks],
            "passed": result.passed,
        }
        if result.baseline is not None:
            doc["baseline"] = result.baseline.to_dict()
        if args.photons:
            sample = sample_photons(result.summary, args.photons, args.seed)
            chi2, pval = sample.chi_square()
            doc["photons"] = {"n": sample.n, "seed": args.seed, "table": sample.table(),
                              "chi_square": chi2, "p_value": pval}
            with open(out / f"{s.name}.events.csv", "w", newline="") as fh:
                fh.write(f"# manifest_hash = {mhash}\n")
                sample.write_csv(fh)
        (out / f"{s.name}.summary.json").write_text(canonical_json(doc))
        if result.simulation is not None:
            meta = {"scenario": s.name, "config_hash": config_hash(result.config), "manifest_hash": mhash}
            for plane in ("lens-entry", "image"):
                fld = result.simulation.plane(plane)
                text = profile_text(fld, meta=meta, extent=_profile_extent(result.config, plane))
                (out / f"{s.name}.{plane}.csv").write_text(text)
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {s.name}")
        for c in result.failures:
            print(f"    {c}")
            failed.append(f"{s.name}: {c}")
    (out / "manifest.json").write_text(manifest.to_json())
    if failed:
        print(f"{len(failed)} bound(s) failed:", file=sys.stderr)
        for f in failed:
            print(f"  {f}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _fmt(z: complex) -> str:
    # roundoff-sized parts print as exact zeros
    re = z.real if abs(z.real) >= 1e-15 else 0.0
    im = z.imag if abs(z.imag) >= 1e-15 else 0.0
    return f"{re:.12g}{im:+.12g}j"


def cmd_state(args) -> int:
    s = algebra.make_initial_state(args.markers, args.open)
    lens_done = False
    for stage in args.stage or ():
        if stage == "lens":
            if lens_done:
                raise UsageError("the lens can be applied only once")
            s = algebra.apply_lens(s)
            lens_done = True
        else:
            if lens_done:
                raise UsageError(f"stage {stage!r} is not allowed after the lens")
            target = algebra.PathBasis.PLUS_MINUS if stage == "plusminus" else algebra.PathBasis.SLIT_AB
            s = algebra.path_basis_change(s, target)
    if args.basis:
        s = algebra.pol_basis_change(s, algebra.PolBasis(args.basis))
    print(f"path basis: {s.path_basis.value}   polarization basis: {s.pol_basis.value}")
    print(f"{'path':<6} {'pol':<4} {'amplitude':<40} {'|amp|^2':>20}")
    for path, pol, amp in s.table():
        prob = abs(amp) ** 2 if abs(amp) >= 1e-15 else 0.0
        print(f"{path:<6} {pol:<4} {_fmt(amp):<40} {prob:>20.12g}")
    if s.path_basis is algebra.PathBasis.DETECTOR:
        print("\ndetector statistics")
        for (det, pol), p in algebra.detector_statistics(s).items():
            print(f"P({det},{pol}) = {p:.12g}")
    if args.analyzer:
        p, collapsed = algebra.project_polarization(s, args.analyzer)
        print(f"\nanalyzer {args.analyzer}: probability {p:.12g}")
        if not collapsed.null:
            for path, pol, amp in collapsed.table():
                if amp != 0:
                    print(f"{path:<6} {pol:<4} {_fmt(amp)}")
    return EXIT_OK


def cmd_profile(args) -> int:
    catalog = load_catalog(args.catalog, parse_overrides(args.set))
    try:
        s = catalog[args.scenario]
    except KeyError as err:
        raise UsageError(str(err.args[0])) from None
    if s.model != "wave":
        raise UsageError(f"scenario {s.name} uses the exact model and has no intensity profile")
    result = run_scenario(s)
    cfg = result.config
    fld = result.simulation.plane(args.plane)
    vis = fringe_visibility(fld.x, fld.intensity(args.projection), cfg.fringe_period)
    meta = {"scenario": s.name, "config_hash": config_hash(cfg), "visibility": f"{vis:.6f}"}
    extent = args.extent if args.extent is not None else _profile_extent(cfg, args.plane)
    text = profile_text(fld, meta=meta, projection=args.projection, extent=extent, stride=args.stride)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathmark", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"pathmark {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario catalog and write summaries")
    run.add_argument("--catalog", help="scenario catalog (TOML); default $PATHMARK_CATALOG or the shipped one")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, default=0, help="photon sampling seed (u64)")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field")
    run.add_argument("--photons", type=int, default=10000, help="photons sampled per scenario (0 to skip)")
    run.set_defaults(func=cmd_run)

    st = sub.add_parser("state", help="exact-algebra calculator")
    st.add_argument("--markers", action="store_true", help="quarter-wave plate markers on")
    st.add_argument("--open", choices=("A", "B", "both"), default="both")
    st.add_argument("--stage", action="append", choices=("plusminus", "slit", "lens"),
                    help="pipeline stage, repeatable, applied in order")
    st.add_argument("--basis", choices=("linear", "circular"), help="polarization basis for display")
    st.add_argument("--analyzer", choices=("H", "V", "L", "R"), help="project onto a polarization axis")
    st.set_defaults(func=cmd_state)

    pr = sub.add_parser("profile", help="write a CSV intensity profile of a scenario")
    pr.add_argument("--scenario", required=True)
    pr.add_argument("--plane", choices=PLANES, default="lens-entry")
    pr.add_argument("--projection", choices=PROJECTIONS, default="total")
    pr.add_argument("--catalog")
    pr.add_argument("--set", action="append", metavar="KEY=VALUE")
    pr.add_argument("--extent", type=float, help="half-width of the exported region (m)")
    pr.add_argument("--stride", type=int, help="keep every n-th sample")
    pr.add_argument("--out", help="write to a file instead of stdout")
    pr.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed", 0) is not None and not 0 <= getattr(args, "seed", 0) < 2 ** 64:
        parser.error("--seed must be an unsigned 64-bit integer")
    try:
        return args.func(args)
    except CatalogError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ConfigError, ScenarioError, algebra.InvalidStateError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
