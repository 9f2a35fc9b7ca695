"""Simplicial meshes: ingestion, validation, sub-simplex tables and global counts."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Sequence

from .geometry import GeometryError, Simplex, Vector, frac_str, sub, vec
from .multiindex import assumption_violations, counts_by_codim


class MeshError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class Mesh:
    dim: int
    vertices: dict[int, Vector]
    cells: tuple[tuple[int, ...], ...]

    def simplex(self, cell: Sequence[int]) -> Simplex:
        return Simplex.from_points([self.vertices[i] for i in cell], list(cell))

    def to_json(self) -> dict:
        ids = sorted(self.vertices)
        return {"dim": self.dim, "ids": ids,
                "vertices": [[frac_str(c) for c in self.vertices[i]] for i in ids],
                "cells": [list(c) for c in self.cells]}


def parse_mesh(text: str) -> Mesh:
    """Read {"dim": d, "vertices": [[x, ...], ...], "cells": [[ids], ...]}.

    Vertex ids are list positions unless an "ids" list is given.  Coordinates
    may be integers or rational strings such as "1/3".
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeshError("parse", str(exc)) from exc
    try:
        d = int(doc["dim"])
        raw = doc["vertices"]
        ids = doc.get("ids", list(range(len(raw))))
        cells = doc["cells"]
    except (KeyError, TypeError) as exc:
        raise MeshError("parse", f"missing field {exc}") from exc
    if len(ids) != len(raw):
        raise MeshError("parse", "ids and vertices differ in length")
    if len(set(ids)) != len(ids):
        raise MeshError("duplicate-id", "vertex ids repeat")
    try:
        verts = {int(i): vec(p) for i, p in zip(ids, raw)}
    except (ValueError, ZeroDivisionError) as exc:
        raise MeshError("parse", f"bad coordinate: {exc}") from exc
    return validate(Mesh(d, verts, tuple(tuple(sorted(int(i) for i in c)) for c in cells)))


def _orient(a: Vector, b: Vector, c: Vector) -> Fraction:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_cross(p: Sequence[Vector], q: Sequence[Vector]) -> bool:
    """Closed segments p and q (2D) share a point."""
    o1, o2 = _orient(p[0], p[1], q[0]), _orient(p[0], p[1], q[1])
    o3, o4 = _orient(q[0], q[1], p[0]), _orient(q[0], q[1], p[1])
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True

    def on(a, b, c):
        return _orient(a, b, c) == 0 and all(min(x, y) <= z <= max(x, y) for x, y, z in zip(a, b, c))

    return on(*p, q[0]) or on(*p, q[1]) or on(*q, p[0]) or on(*q, p[1])


def validate(mesh: Mesh) -> Mesh:
    """Check cell sizes, ids, nondegeneracy and conformity; returns a normalized mesh."""
    d = mesh.dim
    if d < 1:
        raise MeshError("dim", "dimension must be at least 1")
    if any(len(v) != d for v in mesh.vertices.values()):
        raise MeshError("dim", f"all vertices need {d} coordinates")
    cells = sorted(tuple(sorted(c)) for c in mesh.cells)
    if not cells:
        raise MeshError("empty", "mesh has no cells")
    if len(set(cells)) != len(cells):
        raise MeshError("duplicate-cell", "a cell is listed twice")
    simplices = []
    for c in cells:
        if len(c) != d + 1 or len(set(c)) != d + 1:
            raise MeshError("cell-size", f"cell {list(c)} needs {d + 1} distinct ids")
        missing = [i for i in c if i not in mesh.vertices]
        if missing:
            raise MeshError("unknown-id", f"cell {list(c)} uses unknown ids {missing}")
        try:
            simplices.append(Simplex.from_points([mesh.vertices[i] for i in c], list(c)))
        except GeometryError as exc:
            raise MeshError("degenerate", f"cell {list(c)}: {exc}") from exc
    # each facet borders at most two cells, lying on opposite sides
    owners: dict[tuple[int, ...], list[int]] = {}
    for j, c in enumerate(cells):
        for f in itertools.combinations(c, d):
            owners.setdefault(f, []).append(j)
    for f, js in owners.items():
        if len(js) > 2:
            raise MeshError("nonconforming", f"facet {list(f)} borders {len(js)} cells")
        if len(js) == 2:
            a, b = (simplices[j] for j in js)
            xa = next(a.vertices[i] for i, g in enumerate(a.ids) if g not in f)
            xb = next(b.vertices[i] for i, g in enumerate(b.ids) if g not in f)
            face = a.face_by_ids(f)
            n = face.project_normal(sub(xa, face.points[0]))
            side = sum((x * y for x, y in zip(n, sub(xb, face.points[0]))), Fraction(0))
            if side >= 0:
                raise MeshError("overlap", f"cells {list(cells[js[0]])} and {list(cells[js[1]])} overlap")
    # no vertex inside a cell it does not belong to; no two cells share an interior point
    for j, (c, s) in enumerate(zip(cells, simplices)):
        for i, x in mesh.vertices.items():
            if i not in c and s.contains(x):
                raise MeshError("nonconforming", f"vertex {i} lies in cell {list(c)}")
        centroid = s.point([Fraction(1, d + 1)] * (d + 1))
        for jj, s2 in enumerate(simplices):
            if jj != j and s2.contains(centroid):
                raise MeshError("overlap", f"cells {list(c)} and {list(cells[jj])} overlap")
    if d == 2:
        edges = sorted({e for c in cells for e in itertools.combinations(c, 2)})
        for e1, e2 in itertools.combinations(edges, 2):
            if set(e1) & set(e2):
                continue
            if _segments_cross([mesh.vertices[i] for i in e1], [mesh.vertices[i] for i in e2]):
                raise MeshError("nonconforming", f"edges {list(e1)} and {list(e2)} intersect")
    return Mesh(d, dict(sorted(mesh.vertices.items())), tuple(cells))


def subsimplex_table(mesh: Mesh) -> dict[int, list[tuple[int, ...]]]:
    """Sorted global-id tuples of all sub-simplices, by dimension."""
    table = {}
    for t in range(mesh.dim + 1):
        table[t] = sorted({f for c in mesh.cells for f in itertools.combinations(c, t + 1)})
    used = {i for c in mesh.cells for i in c}
    table[0] = [(i,) for i in sorted(used)]
    return table


def euler_characteristic(mesh: Mesh) -> int:
    table = subsimplex_table(mesh)
    return sum((-1) ** t * len(v) for t, v in table.items())


def global_dim(mesh: Mesh, r: Sequence[int], k: int) -> int:
    """Dimension of the global conforming space: per-sub-simplex counts times table sizes."""
    table = subsimplex_table(mesh)
    d = mesh.dim
    return sum(row.per_subsimplex * len(table[d - row.codim]) for row in counts_by_codim(d, k, r))


def closed_form_counts_2d(r: Sequence[int], k: int) -> tuple[int, int, int]:
    """(per vertex, per edge, per triangle) DOF counts in 2D."""
    r1, r2 = r
    a_v = comb(r2 + 2, 2) if r2 >= 0 else 0
    a_e = (k - 2 * r2 - 1) * (r1 + 1) + comb(r1 + 1, 2) if r1 >= 0 else 0
    a_f = comb(k + 2, 2) - 3 * a_v - 3 * a_e
    return a_v, a_e, a_f


def global_dim_2d(mesh: Mesh, r: Sequence[int], k: int) -> int:
    table = subsimplex_table(mesh)
    a_v, a_e, a_f = closed_form_counts_2d(r, k)
    return a_v * len(table[0]) + a_e * len(table[1]) + a_f * len(table[2])


@dataclass
class DerhamReport:
    dims: list[int]
    closed_form: list[int]
    legs: list[dict]
    alternating_sum: int
    euler: int
    asserted: bool
    ok: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"legs": self.legs, "dims": self.dims, "closed_form_dims": self.closed_form,
                "alternating_sum": self.alternating_sum, "euler_characteristic": self.euler,
                "asserted": self.asserted, "ok": self.ok, "notes": self.notes}


def derham_check(mesh: Mesh, r: Sequence[int], k: int) -> DerhamReport:
    """D(r, k) - 2 D(r - 1, k - 1) + D(r - 2, k - 2) against V - E + F.

    The identity is asserted only when the Euler characteristic is 1; other
    meshes are measured and reported.
    """
    if mesh.dim != 2:
        raise MeshError("dim", "the dimension identity is for 2D meshes")
    if k < 2:
        raise ValueError("k must be at least 2")
    legs = []
    for shift, name in enumerate(("r", "r'", "r''")):
        rr = tuple(x - shift for x in r)
        kk = k - shift
        bad = assumption_violations(rr, kk)
        if bad:
            raise ValueError(f"leg {name}={rr}, k={kk} is invalid: {'; '.join(bad)}")
        legs.append({"leg": name, "r": list(rr), "k": kk})
    dims = [global_dim(mesh, leg["r"], leg["k"]) for leg in legs]
    closed = [global_dim_2d(mesh, leg["r"], leg["k"]) for leg in legs]
    alt = dims[0] - 2 * dims[1] + dims[2]
    chi = euler_characteristic(mesh)
    notes = []
    if dims != closed:
        notes.append("closed-form counts disagree with the classification counts")
    asserted = chi == 1
    ok = dims == closed and (alt == chi if asserted else True)
    if not asserted:
        notes.append(f"Euler characteristic {chi} != 1: identity measured, not asserted")
    return DerhamReport(dims, closed, legs, alt, chi, asserted, ok, notes)


# -- generators --------------------------------------------------------------

def _grid_mesh(squares: Sequence[tuple[int, int]]) -> Mesh:
    pts: dict[tuple[int, int], int] = {}

    def vid(p):
        if p not in pts:
            pts[p] = len(pts)
        return pts[p]

    cells = []
    for i, j in sorted(squares):
        a, b, c, e = vid((i, j)), vid((i + 1, j)), vid((i, j + 1)), vid((i + 1, j + 1))
        cells.append(tuple(sorted((a, b, e))))
        cells.append(tuple(sorted((a, e, c))))
    verts = {v: vec(p) for p, v in pts.items()}
    return validate(Mesh(2, verts, tuple(cells)))


def square_mesh(n: int) -> Mesh:
    """Unit squares on an n x n grid, each cut along its diagonal."""
    return _grid_mesh([(i, j) for i in range(n) for j in range(n)])


def l_shape_mesh() -> Mesh:
    return _grid_mesh([(0, 0), (1, 0), (0, 1)])


def annulus_mesh() -> Mesh:
    """A 3 x 3 block of squares with the middle one removed."""
    return _grid_mesh([(i, j) for i in range(3) for j in range(3) if (i, j) != (1, 1)])


def single_cell_mesh(d: int) -> Mesh:
    s = Simplex.reference(d)
    return validate(Mesh(d, dict(zip(s.ids, s.vertices)), (s.ids,)))
