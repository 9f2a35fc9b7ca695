"""Exact polynomials in barycentric coordinates.

Every :class:`BaryPoly` is homogeneous: a polynomial of degree ``j`` is stored
as a form of degree ``j`` in the barycentric coordinates of its support, and
mixed-degree arithmetic lifts the lower degree with ``sum(lambda) = 1``.  With
this convention the monomials of one degree form a basis, so two polynomials
are equal exactly when their coefficient maps agree after lifting.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from math import factorial, prod
from typing import Callable, Iterable, Mapping, Sequence

from .geometry import Simplex, Vector, dot, sub, to_fraction, vec
from .multiindex import MultiIndex, sigma_tuples

Exps = tuple[int, ...]


@dataclass(frozen=True, eq=False)
class BaryPoly:
    simplex: Simplex
    degree: int
    coeffs: Mapping[Exps, Fraction]
    support: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.support:
            object.__setattr__(self, "support", tuple(range(self.simplex.dim + 1)))
        clean = {e: Fraction(c) for e, c in self.coeffs.items() if c != 0}
        for e in clean:
            if len(e) != len(self.support) or sum(e) != self.degree:
                raise ValueError(f"exponent {e} does not match support/degree")
        object.__setattr__(self, "coeffs", clean)

    # construction -----------------------------------------------------------
    @classmethod
    def zero(cls, simplex: Simplex, degree: int = 0, support: tuple[int, ...] = ()) -> "BaryPoly":
        return cls(simplex, degree, {}, support)

    @classmethod
    def constant(cls, simplex: Simplex, c, support: tuple[int, ...] = ()) -> "BaryPoly":
        s = support or tuple(range(simplex.dim + 1))
        return cls(simplex, 0, {(0,) * len(s): to_fraction(c)}, s)

    @classmethod
    def monomial(cls, simplex: Simplex, alpha: Sequence[int] | MultiIndex, coef=1,
                 support: tuple[int, ...] = ()) -> "BaryPoly":
        e = tuple(alpha.entries if isinstance(alpha, MultiIndex) else alpha)
        return cls(simplex, sum(e), {e: to_fraction(coef)}, support)

    @classmethod
    def lam(cls, simplex: Simplex, i: int) -> "BaryPoly":
        e = [0] * (simplex.dim + 1)
        e[i] = 1
        return cls(simplex, 1, {tuple(e): Fraction(1)})

    @classmethod
    def affine(cls, simplex: Simplex, values: Sequence) -> "BaryPoly":
        """The degree-1 form sum_i values[i] * lambda_i."""
        n = simplex.dim + 1
        return cls(simplex, 1, {tuple(int(j == i) for j in range(n)): to_fraction(v)
                                for i, v in enumerate(values)})

    @classmethod
    def from_cartesian(cls, simplex: Simplex, terms: Iterable[tuple[Sequence[int], object]]) -> "BaryPoly":
        """Convert sum c * x^a (global Cartesian monomials) to barycentric form."""
        coords = [cls.affine(simplex, [x[j] for x in simplex.vertices]) for j in range(simplex.dim)]
        out = cls.zero(simplex)
        for a, c in terms:
            if len(a) != simplex.dim:
                raise ValueError(f"monomial exponent {tuple(a)} has wrong length")
            term = cls.constant(simplex, c)
            for j, aj in enumerate(a):
                for _ in range(aj):
                    term = term * coords[j]
            out = out + term
        return out

    # algebra ----------------------------------------------------------------
    def _check(self, other: "BaryPoly"):
        if other.simplex is not self.simplex or other.support != self.support:
            raise ValueError("polynomials live on different simplices")

    def homogenize(self, degree: int) -> "BaryPoly":
        if degree < self.degree:
            raise ValueError("cannot lower the degree of a form")
        out = dict(self.coeffs)
        n = len(self.support)
        for deg in range(self.degree, degree):
            nxt: dict[Exps, Fraction] = defaultdict(Fraction)
            for e, c in out.items():
                for i in range(n):
                    e2 = e[:i] + (e[i] + 1,) + e[i + 1:]
                    nxt[e2] += c
            out = nxt
        return BaryPoly(self.simplex, degree, out, self.support)

    def __add__(self, other):
        if not isinstance(other, BaryPoly):
            other = BaryPoly.constant(self.simplex, other, self.support)
        self._check(other)
        deg = max(self.degree, other.degree)
        a, b = self.homogenize(deg), other.homogenize(deg)
        out = defaultdict(Fraction, a.coeffs)
        for e, c in b.coeffs.items():
            out[e] += c
        return BaryPoly(self.simplex, deg, out, self.support)

    __radd__ = __add__

    def __neg__(self):
        return BaryPoly(self.simplex, self.degree, {e: -c for e, c in self.coeffs.items()}, self.support)

    def __sub__(self, other):
        return self + (-other if isinstance(other, BaryPoly) else -to_fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, BaryPoly):
            f = to_fraction(other)
            return BaryPoly(self.simplex, self.degree, {e: c * f for e, c in self.coeffs.items()}, self.support)
        self._check(other)
        out: dict[Exps, Fraction] = defaultdict(Fraction)
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                out[tuple(x + y for x, y in zip(e1, e2))] += c1 * c2
        return BaryPoly(self.simplex, self.degree + other.degree, out, self.support)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, BaryPoly):
            if self.is_zero():
                return to_fraction(other) == 0
            return NotImplemented if not isinstance(other, (int, Fraction)) else (self - other).is_zero()
        if other.simplex is not self.simplex or other.support != self.support:
            return False
        return (self - other).is_zero()

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.coeffs

    # evaluation -------------------------------------------------------------
    def evaluate(self, bary: Sequence) -> Fraction:
        """Value at a point given by barycentric coordinates of the support."""
        b = vec(bary)
        return sum((c * prod(bi ** ei for bi, ei in zip(b, e)) for e, c in self.coeffs.items()), Fraction(0))

    def evaluate_at(self, point: Sequence) -> Fraction:
        self._require_full()
        return self.evaluate(self.simplex.barycentric(point))

    def evaluate_float(self, point: Sequence[float]) -> float:
        self._require_full()
        S = self.simplex
        x0 = [float(c) for c in S.vertices[0]]
        grads = [[float(c) for c in g] for g in S.grad_lambda[1:]]
        tail = [sum(g[j] * (point[j] - x0[j]) for j in range(S.dim)) for g in grads]
        b = [1.0 - sum(tail)] + tail
        return sum(float(c) * prod(bi ** ei for bi, ei in zip(b, e)) for e, c in self.coeffs.items())

    def _require_full(self):
        if len(self.support) != self.simplex.dim + 1:
            raise ValueError("operation needs a polynomial on the whole element")

    def terms(self) -> list[tuple[Exps, Fraction]]:
        return sorted(self.coeffs.items(), reverse=True)

    def __repr__(self) -> str:
        body = " + ".join(f"{c}*L{list(e)}" for e, c in self.terms()) or "0"
        return f"BaryPoly(deg={self.degree}, {body})"


def lambda_partial(p: BaryPoly, i: int) -> BaryPoly:
    """Formal partial derivative in the i-th support coordinate."""
    out: dict[Exps, Fraction] = defaultdict(Fraction)
    for e, c in p.coeffs.items():
        if e[i]:
            out[e[:i] + (e[i] - 1,) + e[i + 1:]] += c * e[i]
    return BaryPoly(p.simplex, max(p.degree - 1, 0), out, p.support)


def directional_derivative(p: BaryPoly, v: Sequence) -> BaryPoly:
    """d p / d v via the chain rule sum_i (dp/dlambda_i) * dlambda_i(v)."""
    p._require_full()
    if p.degree == 0:
        return BaryPoly.zero(p.simplex)
    c = p.simplex.dlambda(v)
    out: dict[Exps, Fraction] = defaultdict(Fraction)
    for e, a in p.coeffs.items():
        for i, ci in enumerate(c):
            if e[i] and ci:
                out[e[:i] + (e[i] - 1,) + e[i + 1:]] += a * e[i] * ci
    return BaryPoly(p.simplex, p.degree - 1, out)


def derivative(p: BaryPoly, vectors: Iterable[Sequence]) -> BaryPoly:
    """Iterated directional derivative along each vector in turn."""
    for v in vectors:
        p = directional_derivative(p, v)
    return p


def trace(p: BaryPoly, Delta: Iterable[int]) -> BaryPoly:
    """Restriction to the face spanned by the local vertices Delta."""
    Delta = tuple(sorted(Delta))
    pos = [p.support.index(i) for i in Delta]
    if len(set(pos)) != len(pos):
        raise ValueError("repeated face vertex")
    drop = [j for j in range(len(p.support)) if j not in pos]
    out = {}
    for e, c in p.coeffs.items():
        if all(e[j] == 0 for j in drop):
            out[tuple(e[j] for j in pos)] = c
    return BaryPoly(p.simplex, p.degree, out, Delta)


@lru_cache(maxsize=1 << 16)
def _moment(dim: int, e: tuple[int, ...]) -> Fraction:
    return Fraction(factorial(dim) * prod(factorial(x) for x in e), factorial(dim + sum(e)))


def moment_monomial(dim: int, e: Sequence[int]) -> Fraction:
    """(1/|S|) * integral over a dim-simplex S of prod mu_i^e_i."""
    return _moment(dim, tuple(e))


def normalized_moment(p: BaryPoly, q: BaryPoly) -> Fraction:
    """(1/|S|) <p, q>_S on the common support S."""
    p._check(q)
    dim = len(p.support) - 1
    total = Fraction(0)
    for e1, c1 in p.coeffs.items():
        for e2, c2 in q.coeffs.items():
            total += c1 * c2 * moment_monomial(dim, [a + b for a, b in zip(e1, e2)])
    return total


def derivative_tensor(simplex: Simplex, vectors: Iterable[Sequence]) -> dict[Exps, Fraction]:
    """Coefficients P[g] with D_{v_1}...D_{v_t} = sum_g P[g] d^g/dlambda^g."""
    n = simplex.dim + 1
    P: dict[Exps, Fraction] = {(0,) * n: Fraction(1)}
    for v in vectors:
        c = simplex.dlambda(v)
        nxt: dict[Exps, Fraction] = defaultdict(Fraction)
        for g, a in P.items():
            for i, ci in enumerate(c):
                if ci:
                    nxt[g[:i] + (g[i] + 1,) + g[i + 1:]] += a * ci
        P = {g: a for g, a in nxt.items() if a}
    return P


def functional_row(simplex: Simplex, vectors: Sequence[Sequence], support: Sequence[int], k: int,
                   pairing: Callable[[Exps], Fraction]) -> dict[Exps, Fraction]:
    """Values of u -> pairing(trace_support(D_vectors u)) on every monomial of degree k.

    ``pairing`` receives exponents over ``support`` (degree k - len(vectors))
    and returns the value of the functional on that face monomial.  Columns
    absent from the result are zero.
    """
    t = len(vectors)
    if t > k:
        return {}
    support = tuple(support)
    P = derivative_tensor(simplex, vectors)
    pairs = {}
    for mu in sigma_tuples(len(support), k - t):
        val = pairing(mu)
        if val:
            pairs[mu] = val
    row: dict[Exps, Fraction] = defaultdict(Fraction)
    for g, a in P.items():
        for mu, val in pairs.items():
            alpha = list(g)
            for pos, i in enumerate(support):
                alpha[i] += mu[pos]
            fall = 1
            for ai, gi in zip(alpha, g):
                if gi:
                    fall *= factorial(ai) // factorial(ai - gi)
            row[tuple(alpha)] += a * fall * val
    return {e: v for e, v in row.items() if v}


def moment_pairing(weight: Sequence[int]) -> Callable[[Exps], Fraction]:
    dim = len(weight) - 1
    w = tuple(weight)
    return lambda mu: moment_monomial(dim, [a + b for a, b in zip(mu, w)])


def point_pairing(bary: Sequence[Fraction]) -> Callable[[Exps], Fraction]:
    z = tuple(bary)
    return lambda mu: prod((zi ** m for zi, m in zip(z, mu)), start=Fraction(1))


def dual_frame(simplex: Simplex, N: Sequence[int], normals: Sequence[Vector]) -> tuple[Vector, ...]:
    """Vectors v_i (i in N) in span(normals) with dlambda_j(v_i) = delta_ij on N."""
    from .geometry import _solve  # small dense solver
    N = tuple(N)
    m = len(N)
    # M[j][a] = dlambda_{N[j]}(normals[a]); v_i = sum_a C[a][i] normals[a]
    M = [[simplex.dlambda(nv)[N[j]] for nv in normals] for j in range(m)]
    out = []
    for i in range(m):
        e = [Fraction(int(j == i)) for j in range(m)]
        c = _solve(M, e)
        if c is None:
            raise ValueError("normals do not span a complement of the face")
        out.append(tuple(sum((c[a] * normals[a][x] for a in range(m)), Fraction(0))
                         for x in range(simplex.dim)))
    return tuple(out)


def lambda_derivative(p: BaryPoly, N: Sequence[int], theta: Sequence[int],
                      normals: Sequence[Vector] | None = None) -> BaryPoly:
    """d^|theta| p / prod dlambda_i^theta_i along the dual-frame directions."""
    from .geometry import canonical_normals
    N = tuple(N)
    if normals is None:
        Delta = tuple(i for i in range(p.simplex.dim + 1) if i not in N)
        normals = canonical_normals(p.simplex.face(Delta))
    vs = dual_frame(p.simplex, N, normals)
    dirs = [v for v, t in zip(vs, theta) for _ in range(t)]
    return derivative(p, dirs)


def normal_coordinate(simplex: Simplex, normal: Vector, anchor: Vector) -> BaryPoly:
    """The affine function x -> normal . (x - anchor) in barycentric form."""
    return BaryPoly.affine(simplex, [dot(normal, sub(x, anchor)) for x in simplex.vertices])


def normal_monomial(simplex: Simplex, N: Sequence[int], alpha: Sequence[int],
                    normals: Sequence[Vector]) -> BaryPoly:
    """prod_{a} nu_a^{alpha_{N[a]}} * prod_{i not in N} lambda_i^{alpha_i}.

    nu_a vanishes on the face opposite N, which fixes the anchor at that
    face's first vertex.
    """
    N = tuple(N)
    Delta = tuple(i for i in range(simplex.dim + 1) if i not in N)
    e = [0] * (simplex.dim + 1)
    for i in Delta:
        e[i] = alpha[i]
    out = BaryPoly.monomial(simplex, e)
    anchor = simplex.vertices[Delta[0]]
    for a, i in enumerate(N):
        nu = normal_coordinate(simplex, normals[a], anchor)
        for _ in range(alpha[i]):
            out = out * nu
    return out


def lattice(dim: int, degree: int) -> list[tuple[Fraction, ...]]:
    """Barycentric points a / degree, a in Sigma(dim, degree) (degree 0: centroid)."""
    if degree == 0:
        return [tuple(Fraction(1, dim + 1) for _ in range(dim + 1))]
    return [tuple(Fraction(x, degree) for x in a) for a in sigma_tuples(dim + 1, degree)]


def transfer(polys: Sequence[BaryPoly], target: Simplex) -> list[BaryPoly]:
    """Re-express polynomials (as functions on R^d) in the barycentrics of target.

    Values at the degree-j lattice of target determine a degree-j form there.
    """
    from . import linalg
    if not polys:
        return []
    j = max(p.degree for p in polys)
    pts = lattice(target.dim, j)
    cols = sigma_tuples(target.dim + 1, j)
    V = [[prod((z ** e for z, e in zip(pt, a)), start=Fraction(1)) for a in cols] for pt in pts]
    vals = []
    for p in polys:
        src = p.simplex
        vals.append([p.evaluate(src.barycentric(target.point(pt))) for pt in pts])
    X = linalg.solve(V, [list(row) for row in zip(*vals)])
    return [BaryPoly(target, j, {a: X[i][c] for i, a in enumerate(cols)})
            for c in range(len(polys))]
