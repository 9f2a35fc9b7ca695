"""Point-derivative DOFs built from the dual decomposition, and interpolation.

Each alpha in Sigma(d, k) owns one functional: a mixed derivative along the
outer normals m_i (i in N'(alpha)) of the face Delta'(alpha), of orders
alpha_i, evaluated at a rational node on that face.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Callable, Sequence, Union

from . import linalg
from .parallel import assemble_rows
from .geometry import (Simplex, SubsimplexRef, Vector, canonical_normals, dot, frac_str,
                       outer_normal, sub)
from .multiindex import (MultiIndex, classify_dual, node_shift, require_assumption,
                         sigma_tuples)
from .polynomial import BaryPoly, derivative, functional_row, point_pairing, trace

# oracle(point, vectors) -> value of the mixed directional derivative at point
DerivativeOracle = Callable[[Vector, Sequence[Vector]], Fraction]


@dataclass(frozen=True, eq=False)
class InterpDof:
    """u -> d^|theta| u / prod dir_j^theta_j evaluated at a node."""

    owner: SubsimplexRef
    theta: tuple[int, ...]
    directions: tuple[Vector, ...]
    node: tuple[Fraction, ...]  # barycentric on the whole element
    alpha: tuple[int, ...] | None = None

    @property
    def order(self) -> int:
        return sum(self.theta)

    @property
    def point(self) -> Vector:
        return self.owner.parent.point(self.node)

    def derivative_vectors(self) -> list[Vector]:
        return [v for v, t in zip(self.directions, self.theta) for _ in range(t)]

    def __call__(self, u) -> Fraction:
        return apply_interp(self, u)

    def row(self, k: int) -> dict[tuple[int, ...], Fraction]:
        face_node = tuple(self.node[i] for i in self.owner.local)
        return functional_row(self.owner.parent, self.derivative_vectors(), self.owner.local,
                              k, point_pairing(face_node))

    def tensor(self) -> dict[tuple[int, ...], Fraction]:
        return cartesian_tensor(self.derivative_vectors(), self.owner.parent.dim)

    def to_json(self) -> dict:
        return {"owner": list(self.owner.global_ids), "theta": list(self.theta),
                "node": [frac_str(c) for c in self.point],
                "directions": [[frac_str(c) for c in v] for v in self.directions],
                "alpha": None if self.alpha is None else list(self.alpha)}


def cartesian_tensor(vectors: Sequence[Vector], dim: int) -> dict[tuple[int, ...], Fraction]:
    """prod_j (v_j . y) as a polynomial in y; identifies the derivative functional."""
    P = {(0,) * dim: Fraction(1)}
    for v in vectors:
        nxt: dict[tuple[int, ...], Fraction] = {}
        for g, a in P.items():
            for x, vx in enumerate(v):
                if vx:
                    e = g[:x] + (g[x] + 1,) + g[x + 1:]
                    nxt[e] = nxt.get(e, Fraction(0)) + a * vx
        P = {g: a for g, a in nxt.items() if a}
    return P


def node_coordinates(entries: Sequence[int], labels: Sequence[int], r: Sequence[int],
                     k: int) -> dict[int, Fraction]:
    """Node on Delta'(alpha) as {label: barycentric coordinate}."""
    alpha = MultiIndex(tuple(labels), tuple(entries))
    c = classify_dual(alpha, r)
    shift = node_shift(r, c.s, c.n, len(c.Delta))
    S = k - c.n - len(c.Delta) * shift
    denom = S + len(c.Delta)
    return {i: Fraction(alpha[i] - shift + 1, denom) for i in c.Delta}


def node(alpha: Sequence[int], r: Sequence[int], k: int) -> tuple[Fraction, ...]:
    """Barycentric node of a dual-classified alpha on the whole element."""
    coords = node_coordinates(alpha, range(len(alpha)), r, k)
    return tuple(coords.get(i, Fraction(0)) for i in range(len(alpha)))


def build_dofs_interp(simplex: Simplex, r: Sequence[int], k: int) -> list[InterpDof]:
    r = tuple(r)
    d = simplex.dim
    if len(r) != d:
        raise ValueError(f"r must have {d} entries")
    require_assumption(r, k)
    out = []
    for a in sigma_tuples(d + 1, k):
        c = classify_dual(MultiIndex.local(a), r)
        face = simplex.face(c.Delta)
        dirs = tuple(outer_normal(simplex, c.Delta, i) for i in c.N)
        out.append(InterpDof(face, tuple(a[i] for i in c.N), dirs, node(a, r, k), a))
    return out


def apply_interp(dof: InterpDof, u: Union[BaryPoly, DerivativeOracle]) -> Fraction:
    vectors = dof.derivative_vectors()
    if isinstance(u, BaryPoly):
        return derivative(u, vectors).evaluate(dof.node)
    return Fraction(u(dof.point, vectors))


def _columns(d: int, k: int):
    return sigma_tuples(d + 1, k)


def vandermonde_interp(dofs: Sequence[InterpDof], k: int) -> linalg.Matrix:
    d = dofs[0].owner.parent.dim
    return linalg.dense(assemble_rows(dofs, k), _columns(d, k))


def check_unisolvent_interp(simplex: Simplex, r: Sequence[int], k: int, mode: str = "exact",
                            rng: random.Random | None = None) -> linalg.Certificate:
    dofs = build_dofs_interp(simplex, r, k)
    if len(dofs) != comb(k + simplex.dim, k):
        raise AssertionError(f"{len(dofs)} DOFs, expected {comb(k + simplex.dim, k)}")
    return linalg.certify(vandermonde_interp(dofs, k), mode, rng)


class Interpolator:
    """The local interpolation operator on one element (DOFs and matrix cached)."""

    def __init__(self, simplex: Simplex, r: Sequence[int], k: int):
        self.simplex = simplex
        self.r = tuple(r)
        self.k = k
        self.dofs = build_dofs_interp(simplex, r, k)
        self.matrix = vandermonde_interp(self.dofs, k)

    def values(self, u) -> list[Fraction]:
        if not isinstance(u, BaryPoly):
            return [apply_interp(f, u) for f in self.dofs]
        # derivatives commute, so share them between DOFs with the same directions
        cache: dict[tuple, BaryPoly] = {(): u}

        def deriv(key: tuple) -> BaryPoly:
            if key not in cache:
                cache[key] = derivative(deriv(key[:-1]), key[-1:])
            return cache[key]

        out = []
        for f in self.dofs:
            p = trace(deriv(tuple(sorted(f.derivative_vectors()))), f.owner.local)
            out.append(p.evaluate([f.node[i] for i in f.owner.local]))
        return out

    def from_values(self, columns: Sequence[Sequence[Fraction]]) -> list[BaryPoly]:
        """Polynomials whose DOF values are the given vectors (solved together)."""
        if not columns:
            return []
        B = [list(row) for row in zip(*columns)]
        try:
            X = linalg.solve(self.matrix, B)
        except ZeroDivisionError as exc:
            raise linalg_singular(self) from exc
        cols = _columns(self.simplex.dim, self.k)
        return [BaryPoly(self.simplex, self.k, {a: X[i][j] for i, a in enumerate(cols)})
                for j in range(len(columns))]

    def __call__(self, u) -> BaryPoly:
        return self.from_values([self.values(u)])[0]

    def many(self, us: Sequence) -> list[BaryPoly]:
        return self.from_values([self.values(u) for u in us])


def linalg_singular(ip: Interpolator) -> ValueError:
    return ValueError(f"interpolation DOFs are not unisolvent for r={ip.r}, k={ip.k}")


def interpolate(u, simplex: Simplex, r: Sequence[int], k: int) -> BaryPoly:
    """I_K(u) = sum_alpha psi_alpha(u) p_alpha."""
    return Interpolator(simplex, r, k)(u)


# -- facet trace sets --------------------------------------------------------

def facet_normal(simplex: Simplex, I: int) -> Vector:
    """Canonical normal of the facet opposite local vertex I, turned outward."""
    facet = simplex.face(i for i in range(simplex.dim + 1) if i != I)
    n = canonical_normals(facet)[0]
    if dot(n, sub(simplex.vertices[I], facet.points[0])) > 0:
        n = tuple(-x for x in n)
    return n


@dataclass(frozen=True)
class TraceDofSet:
    facet: tuple[int, ...]  # global ids
    l: int
    normal: Vector
    dofs: tuple[InterpDof, ...]


def trace_dof_set(simplex: Simplex, I: int, l: int, r: Sequence[int], k: int) -> TraceDofSet:
    """Psi_{I,l}: the facet's own point-derivative DOFs (smoothness r - l, degree k - l)
    applied to the l-th outward facet-normal derivative."""
    r = tuple(r)
    d = simplex.dim
    if l < 0 or l > r[0]:
        raise ValueError(f"l={l} outside [0, r_1={r[0]}]")
    F = tuple(i for i in range(d + 1) if i != I)
    p_l = tuple(x - l for x in r[1:])
    nF = facet_normal(simplex, I)
    out = []
    for b in sigma_tuples(d, k - l):
        beta = MultiIndex(F, b)
        c = classify_dual(beta, p_l)
        coords = node_coordinates(b, F, p_l, k - l)
        bary = tuple(coords.get(i, Fraction(0)) for i in range(d + 1))
        dirs = tuple(outer_normal(simplex, c.Delta, i) for i in c.N) + (nF,)
        theta = tuple(beta[i] for i in c.N) + (l,)
        out.append(InterpDof(simplex.face(c.Delta), theta, dirs, bary, None))
    return TraceDofSet(tuple(simplex.ids[i] for i in F), l, nF, tuple(out))


@dataclass
class RepresentationReport:
    functionals: int
    nodes_checked: int
    rank_over_pk: tuple[int, int]
    failures: list[dict]

    @property
    def ok(self) -> bool:
        return not self.failures and self.rank_over_pk[0] == self.rank_over_pk[1]

    def to_json(self) -> dict:
        return {"functionals": self.functionals, "nodes_checked": self.nodes_checked,
                "rank_over_pk": list(self.rank_over_pk), "ok": self.ok,
                "failures": self.failures[:10]}


def representation_check(simplex: Simplex, I: int, l: int, r: Sequence[int],
                         k: int) -> RepresentationReport:
    """Each functional of Psi_{I,l} is a combination of the psi_alpha at its node.

    Two checks: the stacked rank over P_k (implied by unisolvency), and the
    local one, comparing derivative tensors of the same order at the same node.
    """
    psi = build_dofs_interp(simplex, r, k)
    ts = trace_dof_set(simplex, I, l, r, k)
    V = vandermonde_interp(psi, k)
    W = vandermonde_interp(list(ts.dofs), k)
    ranks = (linalg.rank(V), linalg.rank(V + W))
    by_node: dict[tuple, list[InterpDof]] = {}
    for f in psi:
        by_node.setdefault((f.node, f.order), []).append(f)
    failures = []
    for g in ts.dofs:
        peers = by_node.get((g.node, g.order), [])
        monos = sorted({e for f in peers for e in f.tensor()} | set(g.tensor()))
        A = linalg.dense([f.tensor() for f in peers], monos) if peers else []
        B = linalg.dense([g.tensor()], monos)
        base = linalg.rank(A) if A else 0
        if linalg.rank(A + B) != base:
            failures.append({"node": [frac_str(x) for x in g.point], "order": g.order,
                             "peers": len(peers)})
    return RepresentationReport(len(ts.dofs), len(by_node), ranks, failures)


# -- factoring out powers of a barycentric coordinate ------------------------

def factor_power(p: BaryPoly, i: int, t0: int) -> BaryPoly:
    """u1 with p = lambda_i^(t0+1) * u1, after checking the vanishing hypothesis."""
    if t0 >= p.degree:
        raise ValueError(f"t0={t0} must be below the degree {p.degree}")
    S = p.simplex
    facet = tuple(j for j in range(S.dim + 1) if j != i)
    n = facet_normal(S, i)
    q = p
    for t in range(t0 + 1):
        if not trace(q, facet).is_zero():
            raise ValueError(f"normal derivative of order {t} does not vanish on the facet")
        q = derivative(q, [n])
    out = {}
    for e, c in p.coeffs.items():
        out[e[:i] + (e[i] - t0 - 1,) + e[i + 1:]] = c
    return BaryPoly(S, p.degree - t0 - 1, out, p.support)
