"""Rational simplices, barycentric coordinates and canonical normal frames.

Vertices of a :class:`Simplex` are stored sorted by global id, so local index
``i`` is the ``i``-th smallest global id.  Every frame below is built from the
coordinates of the sub-simplex alone, which makes it identical when computed
from either element sharing that sub-simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import factorial
from typing import Iterable, Sequence

Vector = tuple[Fraction, ...]


class GeometryError(ValueError):
    pass


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        # floats are taken at face value of their shortest repr
        return Fraction(repr(x))
    return Fraction(x)


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def vec(xs: Iterable) -> Vector:
    return tuple(to_fraction(x) for x in xs)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def axpy(a: Fraction, x: Sequence[Fraction], y: Sequence[Fraction]) -> Vector:
    return tuple(a * xi + yi for xi, yi in zip(x, y))


def _solve(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    # small dense Gauss-Jordan; returns None when singular
    n = len(A)
    M = [row[:] + [bi] for row, bi in zip(A, b)]
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return None
        M[c], M[piv] = M[piv], M[c]
        p = M[c][c]
        M[c] = [x / p for x in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return [M[i][n] for i in range(n)]


def _det(A: list[list[Fraction]]) -> Fraction:
    n = len(A)
    M = [row[:] for row in A]
    det = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for i in range(c + 1, n):
            if M[i][c] != 0:
                f = M[i][c] / M[c][c]
                M[i] = [x - f * y for x, y in zip(M[i], M[c])]
    return det


def orthogonalize(vectors: Iterable[Sequence[Fraction]],
                  basis: Sequence[Vector] = ()) -> list[Vector]:
    """Gram-Schmidt without normalization; zero remainders are dropped."""
    out: list[Vector] = []
    ref = list(basis)
    for v in vectors:
        w = tuple(v)
        for b in ref + out:
            bb = dot(b, b)
            w = axpy(-dot(w, b) / bb, b, w)
        if any(w):
            out.append(w)
    return out


@dataclass(frozen=True, eq=False)
class Simplex:
    vertices: tuple[Vector, ...]
    ids: tuple[int, ...]

    def __post_init__(self):
        d = len(self.vertices) - 1
        if d < 0:
            raise GeometryError("a simplex needs at least one vertex")
        if any(len(v) != d for v in self.vertices):
            raise GeometryError(f"a {d}-simplex needs points in R^{d}")
        if list(self.ids) != sorted(set(self.ids)) or len(self.ids) != d + 1:
            raise GeometryError("ids must be distinct and sorted")
        if d > 0 and _det(self._edge_matrix()) == 0:
            raise GeometryError("degenerate simplex")

    @classmethod
    def from_points(cls, points: Sequence[Sequence], ids: Sequence[int] | None = None) -> "Simplex":
        pts = [vec(p) for p in points]
        ids = list(range(len(pts))) if ids is None else list(ids)
        order = sorted(range(len(pts)), key=lambda i: ids[i])
        return cls(tuple(pts[i] for i in order), tuple(ids[i] for i in order))

    @classmethod
    def reference(cls, d: int) -> "Simplex":
        pts = [[0] * d]
        for i in range(d):
            e = [0] * d
            e[i] = 1
            pts.append(e)
        return cls.from_points(pts)

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def _edge_matrix(self) -> list[list[Fraction]]:
        x0 = self.vertices[0]
        return [list(sub(x, x0)) for x in self.vertices[1:]]

    @cached_property
    def grad_lambda(self) -> tuple[Vector, ...]:
        """Gradients of the barycentric coordinates (constant vectors)."""
        d = self.dim
        if d == 0:
            return ((),)
        # grad lambda_i (i >= 1) is row i of T^{-1}, T having columns x_i - x_0;
        # with E = T^t that row solves E y = e_i
        E = self._edge_matrix()
        rows = []
        for i in range(d):
            e = [Fraction(int(c == i)) for c in range(d)]
            rows.append(tuple(_solve(E, e)))
        g0 = tuple(-sum(col, Fraction(0)) for col in zip(*rows))
        return (g0,) + tuple(rows)

    def dlambda(self, v: Sequence) -> Vector:
        """The constant values d(lambda_i)(v) for i = 0..d."""
        v = vec(v)
        return tuple(dot(g, v) for g in self.grad_lambda)

    def barycentric(self, point: Sequence) -> Vector:
        p = vec(point)
        if len(p) != self.dim:
            raise GeometryError("point has the wrong ambient dimension")
        x0 = self.vertices[0]
        tail = tuple(dot(g, sub(p, x0)) for g in self.grad_lambda[1:])
        return (1 - sum(tail, Fraction(0)),) + tail

    def point(self, bary: Sequence) -> Vector:
        b = vec(bary)
        return tuple(sum((bi * x[j] for bi, x in zip(b, self.vertices)), Fraction(0))
                     for j in range(self.dim))

    def local_index(self, gid: int) -> int:
        return self.ids.index(gid)

    def face(self, local: Iterable[int]) -> "SubsimplexRef":
        return SubsimplexRef(self, tuple(sorted(local)))

    def face_by_ids(self, gids: Iterable[int]) -> "SubsimplexRef":
        return self.face(self.local_index(g) for g in gids)

    def contains(self, point: Sequence) -> bool:
        return all(b >= 0 for b in self.barycentric(point))

    def to_json(self) -> dict:
        return {"ids": list(self.ids),
                "vertices": [[frac_str(c) for c in v] for v in self.vertices]}


@dataclass(frozen=True, eq=False)
class SubsimplexRef:
    parent: Simplex
    local: tuple[int, ...]

    def __post_init__(self):
        if not self.local:
            raise GeometryError("empty sub-simplex")
        if any(i < 0 or i > self.parent.dim for i in self.local):
            raise GeometryError("sub-simplex index out of range")

    @property
    def dim(self) -> int:
        return len(self.local) - 1

    @property
    def codim(self) -> int:
        return self.parent.dim - self.dim

    @property
    def complement(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.parent.dim + 1) if i not in self.local)

    @property
    def global_ids(self) -> tuple[int, ...]:
        return tuple(self.parent.ids[i] for i in self.local)

    @property
    def points(self) -> tuple[Vector, ...]:
        return tuple(self.parent.vertices[i] for i in self.local)

    @cached_property
    def tangents(self) -> tuple[Vector, ...]:
        base = self.points[0]
        return tuple(sub(p, base) for p in self.points[1:])

    @cached_property
    def tangent_basis(self) -> tuple[Vector, ...]:
        return tuple(orthogonalize(self.tangents))

    def centroid(self) -> Vector:
        m = len(self.points)
        return tuple(sum(c, Fraction(0)) / m for c in zip(*self.points))

    def project_normal(self, v: Sequence) -> Vector:
        """Component of v orthogonal to the tangent space."""
        w = vec(v)
        for b in self.tangent_basis:
            w = axpy(-dot(w, b) / dot(b, b), b, w)
        return w


@dataclass(frozen=True)
class NormalFrame:
    kind: str
    vectors: tuple[Vector, ...]
    N: tuple[int, ...] = field(default=())

    def to_json(self) -> dict:
        return {"kind": self.kind, "N": list(self.N),
                "vectors": [[frac_str(c) for c in v] for v in self.vectors]}


def canonical_normals(face: SubsimplexRef) -> tuple[Vector, ...]:
    """Orthogonal rational basis of the normal space of a sub-simplex.

    Cartesian axes are projected off the tangent space and orthogonalized in
    axis order; the result depends only on the sub-simplex's coordinates.
    """
    d = face.parent.dim
    want = face.codim
    axes = [tuple(Fraction(int(i == j)) for j in range(d)) for i in range(d)]
    out: list[Vector] = []
    basis = list(face.tangent_basis)
    for a in axes:
        if len(out) == want:
            break
        w = orthogonalize([a], basis + out)
        out.extend(w)
    if len(out) != want:
        raise GeometryError("could not complete the normal frame")
    return tuple(out)


def perpendicular_frame(simplex: Simplex, N: Iterable[int]) -> NormalFrame:
    """Pairwise-orthogonal rational normals to the face opposite N (local ids)."""
    N = tuple(sorted(N))
    if not N:
        raise GeometryError("N must be nonempty")
    if len(N) > simplex.dim:
        raise GeometryError("N must be a proper subset of the vertex set")
    delta = tuple(i for i in range(simplex.dim + 1) if i not in N)
    return NormalFrame("orthogonal", canonical_normals(simplex.face(delta)), N)


def outer_normal(simplex: Simplex, Delta: Iterable[int], i: int) -> Vector:
    """Unnormalized outer normal of face Delta inside the face Delta + {i}."""
    Delta = tuple(sorted(Delta))
    if i in Delta:
        raise GeometryError("i must not belong to Delta")
    face = simplex.face(Delta)
    return face.project_normal(sub(face.centroid(), simplex.vertices[i]))


def outer_frame(simplex: Simplex, Delta: Iterable[int]) -> NormalFrame:
    Delta = tuple(sorted(Delta))
    N = tuple(i for i in range(simplex.dim + 1) if i not in Delta)
    return NormalFrame("outer", tuple(outer_normal(simplex, Delta, i) for i in N), N)


def gram_measure_sq(face: SubsimplexRef) -> Fraction:
    """Squared t-dimensional measure, det(Gram of edge vectors) / (t!)^2.

    Degenerate faces give 0.
    """
    t = face.dim
    if t == 0:
        return Fraction(1)
    E = face.tangents
    G = [[dot(a, b) for b in E] for a in E]
    return _det(G) / factorial(t) ** 2


def random_simplex(d: int, rng, bound: int = 9, ids: Sequence[int] | None = None) -> Simplex:
    """A nondegenerate simplex with small random rational coordinates."""
    while True:
        pts = [[Fraction(rng.randint(-bound, bound), rng.randint(1, 4)) for _ in range(d)]
               for _ in range(d + 1)]
        try:
            return Simplex.from_points(pts, ids)
        except GeometryError:
            continue
