"""Command-line interface: ``patchdipole {solve,verify,field,oracle,export}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .diagnostics import (any_gating_failure, consistency_checks, reports_to_json, run_suite,
                          speed_oracle)
from .field import sample_field, trace_contours, write_contours_json, write_field_csv, write_svg
from .grid import (DEFAULT_GRADING, Profile, ProfileError, make_graded_grid,
                   profile_from_half_nodes, read_profile_csv, resample, write_profile_csv)
from .potential import speed_c
from .seeds import SEEDS, make_seed, semicircle, tent
from .solver import SolveConfig, SolverError, solve_fixed_point

EXIT_OK, EXIT_GATE, EXIT_NOCONV, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("patchdipole")

# config keys accepted from --config files; CLI flags take precedence
CONFIG_KEYS = {"grid_n", "grading_power", "tol", "max_iter", "scheme", "seed", "out",
               "damping", "dt", "T", "quad_tol", "barrier_lambda", "barrier_Lambda",
               "bound_M", "gamma"}


class InputError(Exception):
    pass


def _common(suppress: bool = False) -> argparse.ArgumentParser:
    # the subcommand copy must not overwrite values given before the subcommand
    kw = {"argument_default": argparse.SUPPRESS} if suppress else {}
    p = argparse.ArgumentParser(add_help=False, **kw)
    p.add_argument("--config", type=Path, help="JSON file with defaults for these flags")
    p.add_argument("--grid-n", type=int, dest="grid_n", help="half grid size N (default 128)")
    p.add_argument("--tol", type=float, help="max-node residual target")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--scheme", choices=["explicit_P", "implicit_R", "dynamics"])
    p.add_argument("--seed", help=f"named seed ({'|'.join(sorted(SEEDS))}) or profile CSV")
    p.add_argument("--out", type=Path, help="output directory (default ./out)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patchdipole", parents=[_common()],
                                     description="Contiguous vortex-patch dipole solver")
    common = _common(suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", parents=[common], help="iterate a seed to a fixed point")

    v = sub.add_parser("verify", parents=[common], help="run the diagnostics suite")
    v.add_argument("profile", type=Path)

    f = sub.add_parser("field", parents=[common], help="sample psi, velocity and streamlines")
    f.add_argument("profile", type=Path)
    f.add_argument("--bbox", default="-1.5,1.5,-1.2,1.2", help="x1min,x1max,x2min,x2max")
    f.add_argument("--resolution", default="64,64", help="n1,n2")
    f.add_argument("--levels", default="auto", help="'auto' or comma-separated values")
    f.add_argument("--svg", action="store_true", help="also write field.svg")

    o = sub.add_parser("oracle", parents=[common], help="2D quadrature cross-checks")
    o.add_argument("profile", type=Path, nargs="?")

    e = sub.add_parser("export", parents=[common], help="convert a profile between formats")
    e.add_argument("source", type=Path)
    e.add_argument("--format", choices=["csv", "json"], default="json")
    e.add_argument("--output", type=Path)
    return parser


def _settings(args) -> dict:
    cfg = {}
    if args.config is not None:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InputError("config file must hold a JSON object")
        unknown = set(cfg) - CONFIG_KEYS
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
    for key in ("grid_n", "tol", "max_iter", "scheme", "seed", "out"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg.setdefault("grid_n", 128)
    cfg.setdefault("grading_power", DEFAULT_GRADING)
    cfg.setdefault("out", "out")
    return cfg


def _solve_config(cfg: dict) -> SolveConfig:
    keys = {"scheme", "tol", "max_iter", "damping", "dt", "T", "quad_tol", "barrier_lambda",
            "barrier_Lambda", "bound_M", "gamma"}
    try:
        return SolveConfig(**{k: cfg[k] for k in keys if k in cfg})
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _grid(cfg):
    try:
        return make_graded_grid(int(cfg["grid_n"]), float(cfg["grading_power"]))
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _load_profile(path) -> Profile:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"profile file not found: {path}")
    if path.suffix == ".json":
        data = json.loads(path.read_text())
        xs, vs = data["x"], data["f"]
        return profile_from_half_nodes(xs, vs, str(path))
    return read_profile_csv(path)


def _seed_profile(cfg) -> Profile:
    seed = cfg.get("seed", "fig2b")
    grid = _grid(cfg)
    if seed in SEEDS:
        return make_seed(seed, grid)
    if not Path(seed).is_file():
        raise InputError(f"--seed {seed!r} is neither a named seed ({', '.join(sorted(SEEDS))})"
                         " nor an existing profile file")
    f = _load_profile(seed)
    if f.grid.half_count != grid.half_count:
        f = resample(f, grid)
    return f


def _parse_floats(text: str, count: int | None, what: str):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError(f"bad {what}: {text!r}") from exc
    if count is not None and len(vals) != count:
        raise InputError(f"{what} needs {count} comma-separated values")
    return vals


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


# -- commands --------------------------------------------------------------

def cmd_solve(cfg) -> int:
    f0 = _seed_profile(cfg)
    scfg = _solve_config(cfg)
    report = solve_fixed_point(f0, scfg)
    path = report.write(Path(cfg["out"]))
    last = report.residual_history[-1] if report.residual_history else float("nan")
    print(f"{report.status}: {report.iterations} iterations, residual {last:.3e}, "
          f"c = {report.final_speed.c:.12g}")
    print(f"wrote {report.profile_csv_path} and {path}")
    return EXIT_OK if report.converged else EXIT_NOCONV


def cmd_verify(cfg, args) -> int:
    f = _load_profile(args.profile)
    reports = run_suite(f, _solve_config(cfg))
    out = Path(cfg["out"]) / "diagnostics.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(reports_to_json(reports))
    for r in reports:
        tag = "PASS" if r.passed else ("FAIL" if r.gating else "note")
        print(f"{tag:4s} {r.name}: {r.details}")
    print(f"wrote {out}")
    return EXIT_GATE if any_gating_failure(reports) else EXIT_OK


def cmd_field(cfg, args) -> int:
    f = _load_profile(args.profile)
    bbox = _parse_floats(args.bbox, 4, "bbox")
    res = [int(v) for v in _parse_floats(args.resolution, 2, "resolution")]
    try:
        grid = sample_field(f, tuple(bbox), tuple(res))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    levels = "auto" if args.levels == "auto" else _parse_floats(args.levels, None, "levels")
    cs = trace_contours(grid, levels)
    out = Path(cfg["out"])
    paths = [write_field_csv(grid, out / "field.csv"), write_contours_json(cs, out / "contours.json")]
    if args.svg:
        paths.append(write_svg(cs, bbox, out / "field.svg", profile=f))
    print(f"c = {grid.speed_c.c:.12g}; {len(cs.levels)} levels, "
          f"{sum(len(p) for p in cs.polylines)} polylines")
    print("wrote " + ", ".join(str(p) for p in paths))
    return EXIT_OK


def cmd_oracle(cfg, args) -> int:
    grid = _grid(cfg)
    cases = {"semicircle": semicircle(grid), "tent": tent(grid)}
    exact = {"semicircle": 1.0 / np.pi, "tent": 0.25 - np.log(2.0) / (2.0 * np.pi)}
    if args.profile is not None:
        cases["profile"] = _load_profile(args.profile)
    results, failed = [], False
    for name, f in cases.items():
        rep = consistency_checks(f)
        c = speed_c(f).c
        c2 = speed_oracle(f)
        entry = {"profile": name, "passed": bool(rep.passed), "details": rep.details,
                 "c": c, "c_oracle_2d": c2, "c_diff": abs(c - c2)}
        ok = rep.passed and abs(c - c2) <= 1e-6
        if name in exact:
            entry["c_exact"] = exact[name]
            ok = ok and abs(c - exact[name]) <= 1e-8
        entry["passed"] = bool(ok)
        failed |= not ok
        results.append(entry)
        print(f"{'PASS' if ok else 'FAIL'} {name}: c={c:.12g} (2D {c2:.12g}); {rep.details}")
    out = _write_json(Path(cfg["out"]) / "oracle.json", results)
    print(f"wrote {out}")
    return EXIT_GATE if failed else EXIT_OK


def cmd_export(cfg, args) -> int:
    f = _load_profile(args.source)
    if args.grid_n is not None and args.grid_n != f.grid.half_count:
        f = resample(f, _grid(cfg))
    target = args.output or Path(cfg["out"]) / f"{args.source.stem}.{args.format}"
    if args.format == "csv":
        write_profile_csv(f, target)
    else:
        _write_json(Path(target), {"x": f.grid.half_nodes.tolist(), "f": f.half_values.tolist(),
                                   "grading_power": f.grid.grading_power})
    print(f"wrote {target}")
    return EXIT_OK


def _glue_negative_values(argv):
    """Turn ``--bbox -1,1,...`` into ``--bbox=-1,1,...`` so argparse accepts it."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--bbox", "--levels", "--resolution") and i + 1 < len(argv) \
                and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def run_cli(argv=None) -> int:
    parser = build_parser()
    argv = _glue_negative_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _settings(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args)
        if args.command == "field":
            return cmd_field(cfg, args)
        if args.command == "oracle":
            return cmd_oracle(cfg, args)
        return cmd_export(cfg, args)
    except (InputError, ProfileError, SolverError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
