"""Command-line front end.

Exit codes: 0 success / CERTIFIED, 1 FAILED, 2 INDETERMINATE or quadrature
non-convergence, 3 input error, 4 infeasible code, 5 generation failure.
Files hold radians; terminal output shows degrees.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ball_poly import build_ball_polyhedron
from .geom_core import (
    GeometryError,
    circumradius,
    dump_points,
    euclidean_diameter,
    jung_cap_radius,
    load_points,
)
from .illum import (
    DirectionSet,
    Infeasible,
    Status,
    get_code,
    jung_code_directions,
    verify_illumination,
)
from .schramm import (
    epsilon0,
    kahn_kalai_lower,
    schramm_direction_budget,
    theorem_bound,
)
from .width_s3 import QuadratureError, identity_report

EXIT_OK, EXIT_FAILED, EXIT_INDETERMINATE, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_GENERATION = range(6)
EXIT_FOR_STATUS = {Status.CERTIFIED: EXIT_OK, Status.FAILED: EXIT_FAILED,
                   Status.INDETERMINATE: EXIT_INDETERMINATE}


class InputError(Exception):
    pass


# --- files and manifests ----------------------------------------------------------

def _now():
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_manifest(out, args, started, inputs=(), outputs=()) -> Path:
    path = Path(str(out) + ".manifest.json")
    argd = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {
        "manifest_version": 1,
        "command": args.command,
        "arguments": argd,
        "seed": argd.get("seed"),
        "tool_version": __version__,
        "started_utc": started,
        "finished_utc": _now(),
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
    }
    write_json(path, doc)
    return path


def _read_points(path):
    try:
        return load_points(Path(path))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# --- commands ---------------------------------------------------------------------------

def cmd_gen_points(args) -> int:
    started = _now()
    if not (0 < args.diam_max <= 2) or not (0 < args.cr_max < 1) or args.n < 1:
        raise InputError("need n >= 1, 0 < diam-max <= 2, 0 < cr-max < 1")
    rng = np.random.default_rng(args.seed)
    radius = min(args.cr_max, args.diam_max * math.sqrt(3) / (2 * math.sqrt(2)))
    pts, tries = [], 0
    while len(pts) < args.n:
        tries += 1
        if tries > 1000 * args.n:
            print("rejection budget exhausted", file=sys.stderr)
            return EXIT_GENERATION
        g = rng.standard_normal(3)
        p = g / np.linalg.norm(g) * radius * rng.uniform() ** (1 / 3)
        if not pts or np.linalg.norm(np.asarray(pts) - p, axis=1).max() <= args.diam_max:
            pts.append(p)
    X = np.asarray(pts)
    diam = euclidean_diameter(X)
    cr, _ = circumradius(X)
    if diam > args.diam_max or cr > args.cr_max:
        print("certification of the generated set failed", file=sys.stderr)
        return EXIT_GENERATION
    write_json(args.out, dump_points(X, unit_flag=False, diam=diam, cr=cr, seed=args.seed))
    write_manifest(args.out, args, started, outputs=[args.out])
    print(f"{args.n} points, diam {diam:.6f}, cr {cr:.6f} -> {args.out}")
    return EXIT_OK


def _load_body(path):
    X, _ = _read_points(path)
    if X.shape[1] != 3:
        raise InputError("points must be in E^3")
    try:
        return build_ball_polyhedron(X)
    except GeometryError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_directions(path):
    D, doc = _read_points(path)
    try:
        return DirectionSet(D, doc.get("label", ""))
    except GeometryError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _report_certificate(cert, out, args, started, inputs):
    print(f"status: {cert.status.value} ({len(cert.per_cell)} cells discharged)")
    if cert.witness is not None:
        print("witness: " + " ".join(f"{c:.12g}" for c in cert.witness))
    if cert.indeterminate:
        print("indeterminate cells: " + ", ".join(cert.indeterminate))
    if out:
        write_json(out, cert.to_json())
        write_manifest(out, args, started, inputs=inputs, outputs=[out])


def cmd_verify(args) -> int:
    started = _now()
    B = _load_body(args.points)
    D = _load_directions(args.directions)
    cert = verify_illumination(B, D, body_id=Path(args.points).name)
    _report_certificate(cert, args.out, args, started, [args.points, args.directions])
    return EXIT_FOR_STATUS[cert.status]


def cmd_jung(args) -> int:
    started = _now()
    if (args.points is None) == (args.diam is None):
        raise InputError("give exactly one of POINTS or --diam")
    try:
        code = get_code(args.code)
    except KeyError as exc:
        raise InputError(str(exc)) from exc
    B = None
    if args.points is not None:
        B = _load_body(args.points)
        diam = B.generators.diam
    else:
        diam = args.diam
    if not (0 <= diam < 2):
        raise InputError("diameter must lie in [0, 2)")
    D = jung_code_directions(diam, code, args.seed)
    if isinstance(D, Infeasible):
        r, R = D.r, D.R
    else:
        r, R = (jung_cap_radius(diam, 3) if diam > 0 else 0.0), code.covering_radius
    slack = math.pi / 2 - r - R
    print(f"diam {diam:.6f}  r {math.degrees(r):.6f} deg  R {math.degrees(R):.6f} deg  "
          f"slack {math.degrees(slack):.6f} deg")
    if isinstance(D, Infeasible):
        print(f"infeasible: r + R exceeds 90 deg by {math.degrees(D.deficit):.6f} deg")
        return EXIT_INFEASIBLE
    seed = args.seed
    status = None
    if B is not None:
        cert = verify_illumination(B, D)
        if cert.status is Status.INDETERMINATE:
            seed += 1
            D = jung_code_directions(diam, code, seed)
            cert = verify_illumination(B, D)
        status = cert.status
        print(f"verification: {status.value}")
    doc = D.to_json()
    doc.update(code=code.name, seed=seed, diam=diam, r_rad=r, R_rad=R, slack_rad=slack)
    if args.out:
        write_json(args.out, doc)
        write_manifest(args.out, args, started,
                       inputs=[args.points] if args.points else [], outputs=[args.out])
    print(f"{len(D)} directions" + (f" -> {args.out}" if args.out else ""))
    return EXIT_OK if status is None else EXIT_FOR_STATUS[status]


BOUNDS_FIELDS = ("d", "tight", "relaxed", "2^d", "crossover", "epsilon0", "budget", "kahn_kalai")


def bounds_rows(a: int, b: int):
    for d in range(a, b + 1):
        tight, relaxed = theorem_bound(d)
        e = epsilon0(d)
        yield {"d": d, "tight": tight, "relaxed": relaxed, "2^d": 2.0 ** d,
               "crossover": int(tight < 2.0 ** d), "epsilon0": e,
               "budget": schramm_direction_budget(d, e), "kahn_kalai": kahn_kalai_lower(d)}


def _parse_range(text: str):
    try:
        a, b = (int(x) for x in text.split(".."))
    except ValueError as exc:
        raise InputError(f"bad range {text!r}; expected a..b") from exc
    if not (3 <= a <= b):
        raise InputError("need 3 <= a <= b")
    return a, b


def cmd_bounds(args) -> int:
    started = _now()
    a, b = _parse_range(args.d_range)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BOUNDS_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in bounds_rows(a, b):
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    if args.out:
        Path(args.out).write_text(buf.getvalue())
        write_manifest(args.out, args, started, outputs=[args.out])
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_width_identity(args) -> int:
    started = _now()
    if (args.rho is None) == (args.width is None):
        raise InputError("give exactly one of --rho or --width")
    rho = args.rho if args.rho is not None else args.width / 2
    if not (0 < rho < math.pi / 2):
        raise InputError("need 0 < rho < pi/2")
    try:
        rep = identity_report(rho, args.method, args.grid)
    except QuadratureError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INDETERMINATE
    doc = rep.to_json()
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=rep.CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in rep.csv_row().items()})
    if args.out:
        csv_path = Path(args.out).with_suffix(".csv")
        write_json(args.out, doc)
        csv_path.write_text(buf.getvalue())
        write_manifest(args.out, args, started, outputs=[args.out, csv_path])
    print(json.dumps(doc, indent=2, sort_keys=True))
    sys.stdout.write(buf.getvalue())
    print(f"rho {math.degrees(rho):.6f} deg, width {math.degrees(2 * rho):.6f} deg: "
          f"{'PASS' if rep.passed else 'FAIL'} at tolerance {rep.tolerance:g}")
    return EXIT_OK if rep.passed else EXIT_INDETERMINATE


# --- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spindle", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-points", help="sample a generator set with bounded diameter")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--diam-max", type=float, required=True)
    g.add_argument("--cr-max", type=float, default=0.99)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_points)

    v = sub.add_parser("verify", help="certify that directions illuminate B[X]")
    v.add_argument("points")
    v.add_argument("directions")
    v.add_argument("--out", help="certificate JSON path")
    v.set_defaults(func=cmd_verify)

    j = sub.add_parser("jung", help="directions from a covering code")
    j.add_argument("points", nargs="?")
    j.add_argument("--diam", type=float)
    j.add_argument("--code", required=True, help="TETRA-4, BIPYR-5 or OCTA-6")
    j.add_argument("--seed", type=int, default=0)
    j.add_argument("--out")
    j.set_defaults(func=cmd_jung)

    b = sub.add_parser("bounds", help="CSV table of the dimension bounds")
    b.add_argument("--d-range", required=True, help="a..b")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    w = sub.add_parser("width", help="constant-width identities on S^3")
    wsub = w.add_subparsers(dest="width_command", required=True)
    wi = wsub.add_parser("identity")
    wi.add_argument("--rho", type=float)
    wi.add_argument("--width", type=float)
    wi.add_argument("--method", choices=("analytic", "quadrature"), default="analytic")
    wi.add_argument("--grid", type=int, default=400)
    wi.add_argument("--out")
    wi.set_defaults(func=cmd_width_identity)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
