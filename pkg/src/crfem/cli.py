"""Command-line interface: every verification as a subcommand with a JSON report.

Exit codes: 0 when every check passes, 1 on a verification failure, 2 on a
usage or input error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from math import comb
from typing import Sequence

from . import __version__
from .continuity import PatchError, build_patch, fe_trials, interp_trials, reference_patch
from .fe_element import block_triangularity, build_dofs, check_unisolvent, equivalence_check, nodal_basis, vandermonde
from .geometry import GeometryError, Simplex, frac_str, random_simplex
from .interp_element import (Interpolator, build_dofs_interp, check_unisolvent_interp,
                             vandermonde_interp)
from .mesh import (MeshError, derham_check, euler_characteristic, global_dim, l_shape_mesh,
                   parse_mesh, square_mesh, annulus_mesh, subsimplex_table)
from .multiindex import (DUAL, PRIMAL, AssumptionError, MultiIndex, assumption_violations,
                         classify, counts_by_codim, refined_classes)
from .polynomial import BaryPoly

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--seed", type=int, default=0)


def _params(p: argparse.ArgumentParser, need_d: bool = True):
    if need_d:
        p.add_argument("--d", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int_list, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crfem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="classify one multi-index or list the (N, n) classes")
    _common(p)
    p.add_argument("--alpha", type=int_list)
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--r", type=int_list, required=True)
    p.add_argument("--kind", choices=(PRIMAL, DUAL), default=PRIMAL)

    p = sub.add_parser("counts", help="DOF counts per codimension")
    _common(p)
    _params(p)
    p.add_argument("--kind", choices=(PRIMAL, DUAL), default=PRIMAL)

    p = sub.add_parser("check-assumption", help="validate (r, k)")
    _common(p)
    _params(p, need_d=False)

    p = sub.add_parser("unisolvency", help="certify the DOF matrix is nonsingular")
    _common(p)
    _params(p)
    p.add_argument("--family", choices=("fe", "interp"), default="fe")
    p.add_argument("--mode", choices=("exact", "modular"), default="exact")
    p.add_argument("--simplex", choices=("reference", "random"), default="reference")
    p.add_argument("--structure", action="store_true",
                   help="also run the block-structure and equivalence checks (fe only)")

    p = sub.add_parser("basis", help="nodal basis coefficients with the DOF manifest")
    _common(p)
    _params(p)
    p.add_argument("--family", choices=("fe", "interp"), default="fe")
    p.add_argument("--out", required=True)

    p = sub.add_parser("check-continuity", help="two-element jump checks")
    _common(p)
    p.add_argument("--patch", help="JSON file with two cells in mesh format")
    p.add_argument("--d", type=int)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int_list, required=True)
    p.add_argument("--family", choices=("fe", "interp", "both"), default="both")
    p.add_argument("--trials", type=int, default=20)

    p = sub.add_parser("interpolate", help="interpolate a Cartesian polynomial on a simplex")
    _common(p)
    _params(p)
    p.add_argument("--poly", required=True, help="JSON list of [exponents, coefficient]")
    p.add_argument("--cell", help="JSON list of d+1 vertices (default: reference simplex)")

    p = sub.add_parser("derham", help="2D dimension identity")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mesh")
    src.add_argument("--generate", help="square:N, lshape or annulus")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int_list, required=True)

    p = sub.add_parser("mesh-info", help="validate a mesh and list its sub-simplex counts")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--mesh")
    src.add_argument("--generate")
    p.add_argument("--k", type=int)
    p.add_argument("--r", type=int_list)
    return parser


# -- helpers -----------------------------------------------------------------

def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _check_r(d: int, r: Sequence[int], k: int):
    if len(r) != d:
        raise UsageError(f"--r needs {d} entries for d={d}")
    bad = assumption_violations(r, k)
    if bad:
        raise UsageError("invalid (r, k): " + "; ".join(bad))


def _simplex(args) -> Simplex:
    if getattr(args, "simplex", "reference") == "random":
        return random_simplex(args.d, random.Random(args.seed))
    return Simplex.reference(args.d)


def _generated(spec: str):
    if spec.startswith("square:"):
        return square_mesh(int(spec.split(":", 1)[1]))
    if spec == "lshape":
        return l_shape_mesh()
    if spec == "annulus":
        return annulus_mesh()
    raise UsageError(f"unknown mesh generator {spec!r}")


def _mesh(args):
    return _generated(args.generate) if args.generate else parse_mesh(_read(args.mesh))


# -- subcommands -------------------------------------------------------------

def cmd_decompose(args) -> tuple[dict, bool]:
    if args.alpha is not None:
        alpha = MultiIndex.local(args.alpha)
        if len(args.r) != len(args.alpha) - 1:
            raise UsageError("--r needs one entry fewer than --alpha")
        return classify(alpha, args.r, args.kind).to_json(), True
    if args.d is None or args.k is None:
        raise UsageError("give --alpha, or --d and --k")
    _check_r(args.d, args.r, args.k)
    classes = refined_classes(args.d, args.k, args.r, args.kind)
    rows = [{"N": list(N), "n": n, "size": len(v), "members": [list(a.entries) for a in v]}
            for (N, n), v in sorted(classes.items())]
    total = sum(r["size"] for r in rows)
    return {"classes": rows, "total": total}, total == comb(args.k + args.d, args.d)


def cmd_counts(args) -> tuple[dict, bool]:
    _check_r(args.d, args.r, args.k)
    table = counts_by_codim(args.d, args.k, args.r, args.kind)
    names = {0: "interior", 1: "facet", args.d - 1: "edge", args.d: "vertex"} if args.d >= 2 else {0: "interior", 1: "vertex"}
    rows = []
    for row in table:
        j = row.to_json()
        j["name"] = names.get(row.codim, f"codim-{row.codim}")
        rows.append(j)
    total = sum(row.total for row in table)
    return {"table": rows, "total": total}, total == comb(args.k + args.d, args.d)


def cmd_check_assumption(args) -> tuple[dict, bool]:
    bad = assumption_violations(args.r, args.k)
    return {"valid": not bad, "verdict": "valid" if not bad else "invalid: " + "; ".join(bad),
            "violations": bad}, not bad


def cmd_unisolvency(args) -> tuple[dict, bool]:
    _check_r(args.d, args.r, args.k)
    S = _simplex(args)
    rng = random.Random(args.seed)
    check = check_unisolvent if args.family == "fe" else check_unisolvent_interp
    cert = check(S, args.r, args.k, args.mode, rng)
    out = {"simplex": S.to_json(), "certificate": cert.to_json(),
           "verdict": "nonsingular" if cert.nonsingular else "singular"}
    ok = cert.nonsingular
    if args.structure and args.family == "fe":
        tri = block_triangularity(S, args.r, args.k)
        eq = equivalence_check(S, args.r, args.k)
        out["block_triangularity"] = tri.to_json()
        out["equivalence"] = eq.to_json()
        ok = ok and tri.ok and eq.ok
    return out, ok


def cmd_basis(args) -> tuple[dict, bool]:
    _check_r(args.d, args.r, args.k)
    S = _simplex(args)
    if args.family == "fe":
        dofs = build_dofs(S, args.r, args.k)
        V = vandermonde(dofs, args.k)
    else:
        dofs = build_dofs_interp(S, args.r, args.k)
        V = vandermonde_interp(dofs, args.k)
    try:
        X = nodal_basis(V)
    except ZeroDivisionError:
        return {"verdict": "singular"}, False
    from .fe_element import monomial_columns
    cols = monomial_columns(args.d, args.k)
    n = len(dofs)
    doc = {"version": __version__, "family": args.family, "d": args.d, "k": args.k,
           "r": list(args.r), "simplex": S.to_json(),
           "monomials": [list(a) for a in cols],
           "dofs": [f.to_json() for f in dofs],
           "basis": [[frac_str(X[i][j]) for i in range(n)] for j in range(n)]}
    try:
        with open(args.out, "w") as fh:
            json.dump(doc, fh)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc.strerror}") from exc
    return {"out": args.out, "size": n, "verdict": "written"}, True


def cmd_check_continuity(args) -> tuple[dict, bool]:
    if args.patch:
        mesh = parse_mesh(_read(args.patch))
        if len(mesh.cells) != 2:
            raise UsageError("a patch file needs exactly two cells")
        patch = build_patch(mesh.simplex(mesh.cells[0]), mesh.simplex(mesh.cells[1]))
    elif args.d is not None:
        patch = reference_patch(args.d)
    else:
        raise UsageError("give --patch or --d")
    _check_r(patch.dim, args.r, args.k)
    reports = []
    families = ("fe", "interp") if args.family == "both" else (args.family,)
    for fam in families:
        run = fe_trials if fam == "fe" else interp_trials
        reports.append(run(patch, args.r, args.k, args.trials, random.Random(args.seed)).to_json())
    return {"patch": patch.to_json(), "reports": reports}, all(r["ok"] for r in reports)


def _parse_poly(text: str, d: int) -> list[tuple[tuple[int, ...], Fraction]]:
    try:
        terms = json.loads(text)
        out = [(tuple(int(e) for e in exps), Fraction(str(c))) for exps, c in terms]
    except (ValueError, TypeError) as exc:
        raise UsageError(f"bad polynomial file: {exc}") from exc
    if any(len(e) != d or min(e, default=0) < 0 for e, _ in out):
        raise UsageError(f"each exponent list needs {d} nonnegative entries")
    return out


def cmd_interpolate(args) -> tuple[dict, bool]:
    _check_r(args.d, args.r, args.k)
    terms = _parse_poly(_read(args.poly), args.d)
    if args.cell:
        try:
            S = Simplex.from_points(json.loads(_read(args.cell)))
        except (ValueError, GeometryError) as exc:
            raise UsageError(f"bad cell: {exc}") from exc
        if S.dim != args.d:
            raise UsageError("cell dimension does not match --d")
    else:
        S = Simplex.reference(args.d)
    u = BaryPoly.from_cartesian(S, terms)
    ip = Interpolator(S, args.r, args.k)
    Iu = ip(u)
    matches = ip.values(Iu) == ip.values(u)
    reproduced = u.degree <= args.k and Iu == u
    return {"degree_in": u.degree,
            "interpolant": [{"lambda": list(e), "coef": frac_str(c)} for e, c in Iu.terms()],
            "dofs_match": matches, "reproduced": reproduced if u.degree <= args.k else None}, \
        matches and (reproduced or u.degree > args.k)


def cmd_derham(args) -> tuple[dict, bool]:
    mesh = _mesh(args)
    if len(args.r) != 2:
        raise UsageError("--r needs two entries")
    try:
        rep = derham_check(mesh, args.r, args.k)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    table = subsimplex_table(mesh)
    out = rep.to_json()
    out.update({"V": len(table[0]), "E": len(table[1]), "F": len(table[2]),
                "verdict": "pass" if rep.ok else "fail"})
    return out, rep.ok


def cmd_mesh_info(args) -> tuple[dict, bool]:
    try:
        mesh = _mesh(args)
    except MeshError as exc:
        return {"valid": False, "error": exc.code, "message": str(exc)}, False
    table = subsimplex_table(mesh)
    out = {"valid": True, "dim": mesh.dim, "counts": {str(t): len(v) for t, v in table.items()},
           "euler_characteristic": euler_characteristic(mesh)}
    if args.k is not None and args.r is not None:
        _check_r(mesh.dim, args.r, args.k)
        out["global_dim"] = global_dim(mesh, args.r, args.k)
    return out, True


COMMANDS = {
    "decompose": cmd_decompose, "counts": cmd_counts, "check-assumption": cmd_check_assumption,
    "unisolvency": cmd_unisolvency, "basis": cmd_basis, "check-continuity": cmd_check_continuity,
    "interpolate": cmd_interpolate, "derham": cmd_derham, "mesh-info": cmd_mesh_info,
}


def _params_of(args) -> dict:
    skip = {"command", "format", "seed"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None:
            continue
        out[key] = list(value) if isinstance(value, tuple) else value
    return out


def render_text(report: dict) -> str:
    lines = [f"{report['command']}  (crfem {report['version']}, seed {report['seed']})"]
    lines.append("params: " + ", ".join(f"{k}={v}" for k, v in report["params"].items()))
    result = report.get("result", {})
    if "table" in result:
        lines.append(f"{'codim':>5} {'name':>9} {'#sub':>5} {'each':>6} {'total':>7}  by order")
        for row in result["table"]:
            lines.append(f"{row['codim']:>5} {row['name']:>9} {row['subsimplices']:>5} "
                         f"{row['per_subsimplex']:>6} {row['total']:>7}  {row['by_order']}")
        lines.append(f"total {result['total']}")
    else:
        for key, value in result.items():
            text = json.dumps(value)
            lines.append(f"{key}: {text if len(text) < 200 else text[:197] + '...'}")
    if "error" in report:
        lines.append(f"error: {report['error']}")
    lines.append(f"status: {report['status']}")
    return "\n".join(lines)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    report = {"command": args.command, "version": __version__, "seed": args.seed,
              "params": _params_of(args)}
    try:
        result, ok = COMMANDS[args.command](args)
        report["result"] = result
        report["status"] = "pass" if ok else "fail"
        code = EXIT_OK if ok else EXIT_FAIL
    except (UsageError, AssumptionError, MeshError, PatchError, GeometryError) as exc:
        report["status"] = "usage-error"
        report["error"] = str(exc)
        code = EXIT_USAGE
    if args.format == "json":
        print(json.dumps(report, indent=2))
    else:
        print(render_text(report))
    return code


def main() -> None:
    sys.exit(run())
