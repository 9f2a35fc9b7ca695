"""Moment-type DOFs of the C^r conforming element and their verification.

Each DOF is a normalized moment over a sub-simplex F of a mixed normal
derivative of order |theta| <= r_m (m = codim F) against a barycentric
monomial weight on F.  The weights of order t are the monomials of
Sigma_0^(q)(F, k - t) with q_t = r_{t+m} - |theta|.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial, prod
from typing import Sequence

from . import linalg
from .parallel import assemble_rows
from .geometry import Simplex, SubsimplexRef, Vector, canonical_normals, dot, frac_str
from .multiindex import (MultiIndex, classify_primal, derived_q, enumerate_sigma0,
                         require_assumption, sigma_tuples)
from .polynomial import (BaryPoly, derivative, dual_frame, functional_row,
                         moment_monomial, moment_pairing, normal_monomial,
                         normalized_moment, trace)

FRAME = "frame"
LAMBDA = "lambda"


@dataclass(frozen=True, eq=False)
class DofFunctional:
    """u -> (1/|F|) < d^theta u / d dirs^theta |_F , Lambda^F weight >_F."""

    owner: SubsimplexRef
    theta: tuple[int, ...]
    directions: tuple[Vector, ...]
    weight: tuple[int, ...]
    alpha: tuple[int, ...] | None = None
    kind: str = FRAME

    @property
    def order(self) -> int:
        return sum(self.theta)

    @property
    def block(self) -> tuple[tuple[int, ...], int]:
        return self.owner.complement, self.order

    def derivative_vectors(self) -> list[Vector]:
        return [v for v, t in zip(self.directions, self.theta) for _ in range(t)]

    def key(self) -> tuple:
        """Identifies the same functional when built from another element."""
        return (self.kind, self.owner.global_ids, self.theta, self.weight)

    def __call__(self, p: BaryPoly) -> Fraction:
        return apply(self, p)

    def row(self, k: int) -> dict[tuple[int, ...], Fraction]:
        return functional_row(self.owner.parent, self.derivative_vectors(), self.owner.local,
                              k, moment_pairing(self.weight))

    def to_json(self) -> dict:
        return {"owner": list(self.owner.global_ids), "kind": self.kind,
                "theta": list(self.theta), "weight": list(self.weight),
                "directions": [[frac_str(c) for c in v] for v in self.directions],
                "alpha": None if self.alpha is None else list(self.alpha)}


def apply(dof: DofFunctional, p: BaryPoly) -> Fraction:
    """Evaluate a DOF on p through derivative, trace and moment."""
    dp = derivative(p, dof.derivative_vectors())
    tr = trace(dp, dof.owner.local)
    w = BaryPoly.monomial(p.simplex, dof.weight, support=dof.owner.local)
    return normalized_moment(tr, w)


def subsimplices(d: int) -> list[tuple[int, ...]]:
    """All nonempty vertex subsets, ordered lexicographically."""
    out = [c for size in range(1, d + 2) for c in itertools.combinations(range(d + 1), size)]
    return sorted(out)


def _glue(d: int, N: Sequence[int], theta: Sequence[int], Delta: Sequence[int],
          weight: Sequence[int]) -> tuple[int, ...]:
    alpha = [0] * (d + 1)
    for i, t in zip(N, theta):
        alpha[i] = t
    for i, w in zip(Delta, weight):
        alpha[i] = w
    return tuple(alpha)


def build_dofs(simplex: Simplex, r: Sequence[int], k: int) -> list[DofFunctional]:
    """The frame-derivative DOF set, ordered by owner, order, theta, weight."""
    r = tuple(r)
    d = simplex.dim
    if len(r) != d:
        raise ValueError(f"r must have {d} entries")
    require_assumption(r, k)
    dofs = []
    for Delta in subsimplices(d):
        face = simplex.face(Delta)
        m = face.codim
        N = face.complement
        frame = canonical_normals(face) if m else ()
        top = r[m - 1] if m else 0
        for t in range(top + 1):
            weights = enumerate_sigma0(Delta, k - t, derived_q(r, m, t))
            for theta in (sigma_tuples(m, t) if m else [()]):
                for w in weights:
                    dofs.append(DofFunctional(face, theta, frame, w.entries,
                                              _glue(d, N, theta, Delta, w.entries)))
    return dofs


def phi_alpha_dofs(simplex: Simplex, r: Sequence[int], k: int) -> list[DofFunctional]:
    """One DOF per alpha: lambda-derivative of order alpha_N against Lambda^Delta alpha."""
    r = tuple(r)
    require_assumption(r, k)
    d = simplex.dim
    frames: dict[tuple[int, ...], tuple[Vector, ...]] = {}
    out = []
    for a in sigma_tuples(d + 1, k):
        c = classify_primal(MultiIndex.local(a), r)
        face = simplex.face(c.Delta)
        if c.N not in frames:
            frames[c.N] = dual_frame(simplex, c.N, canonical_normals(face)) if c.N else ()
        out.append(DofFunctional(face, tuple(a[i] for i in c.N), frames[c.N],
                                 tuple(a[i] for i in c.Delta), a, LAMBDA))
    return out


def monomial_columns(d: int, k: int) -> list[tuple[int, ...]]:
    return sigma_tuples(d + 1, k)


def vandermonde(dofs: Sequence[DofFunctional], k: int) -> linalg.Matrix:
    """Rows: DOFs; columns: the monomials Lambda^alpha of degree k."""
    d = dofs[0].owner.parent.dim
    return linalg.dense(assemble_rows(dofs, k), monomial_columns(d, k))


def check_unisolvent(simplex: Simplex, r: Sequence[int], k: int, mode: str = "exact",
                     rng: random.Random | None = None) -> linalg.Certificate:
    dofs = build_dofs(simplex, r, k)
    if len(dofs) != comb(k + simplex.dim, k):
        raise AssertionError(f"{len(dofs)} DOFs, expected {comb(k + simplex.dim, k)}")
    return linalg.certify(vandermonde(dofs, k), mode, rng)


def coefficients_to_poly(simplex: Simplex, k: int, coeffs: Sequence[Fraction]) -> BaryPoly:
    cols = monomial_columns(simplex.dim, k)
    return BaryPoly(simplex, k, dict(zip(cols, coeffs)))


def poly_to_coefficients(p: BaryPoly, k: int) -> list[Fraction]:
    q = p.homogenize(k)
    return [q.coeffs.get(a, Fraction(0)) for a in monomial_columns(p.simplex.dim, k)]


def nodal_basis(V: linalg.Matrix) -> linalg.Matrix:
    """Columns of V^{-1}: coefficient vectors of the nodal basis."""
    n = len(V)
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    return linalg.solve(V, eye)


def dual_basis(simplex: Simplex, r: Sequence[int], k: int,
               dofs: Sequence[DofFunctional] | None = None) -> list[BaryPoly]:
    """Polynomials p_j with dof_i(p_j) = delta_ij."""
    dofs = list(dofs) if dofs is not None else build_dofs(simplex, r, k)
    X = nodal_basis(vandermonde(dofs, k))
    n = len(X)
    return [coefficients_to_poly(simplex, k, [X[i][j] for i in range(n)]) for j in range(n)]


# -- equivalence of the lambda-derivative and frame-derivative forms ---------

@dataclass
class EquivalenceReport:
    blocks_checked: int = 0
    slices_checked: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"blocks_checked": self.blocks_checked, "slices_checked": self.slices_checked,
                "ok": self.ok, "failures": self.failures}


def _span_equal(A: linalg.Matrix, B: linalg.Matrix) -> tuple[bool, tuple[int, int, int]]:
    ra, rb, rab = linalg.rank(A), linalg.rank(B), linalg.rank(A + B)
    return (len(A) == len(B) == ra == rb == rab), (ra, rb, rab)


def equivalence_check(simplex: Simplex, r: Sequence[int], k: int) -> EquivalenceReport:
    """Per (N, n) block and per weight slice, both DOF forms span the same space."""
    frame = build_dofs(simplex, r, k)
    lam = phi_alpha_dofs(simplex, r, k)
    cols = monomial_columns(simplex.dim, k)
    rows = {id(f): f.row(k) for f in frame + lam}
    groups: dict[tuple, tuple[list, list]] = {}
    for f in frame:
        groups.setdefault(f.block, ([], []))[0].append(f)
    for f in lam:
        groups.setdefault(f.block, ([], []))[1].append(f)
    report = EquivalenceReport()
    for block, (fs, ls) in sorted(groups.items()):
        A = linalg.dense([rows[id(f)] for f in fs], cols)
        B = linalg.dense([rows[id(f)] for f in ls], cols)
        ok, ranks = _span_equal(A, B)
        report.blocks_checked += 1
        if not ok:
            report.failures.append({"block": {"N": list(block[0]), "n": block[1]},
                                    "sizes": [len(fs), len(ls)], "ranks": list(ranks)})
        for w in sorted({f.weight for f in fs} | {f.weight for f in ls}):
            A = linalg.dense([rows[id(f)] for f in fs if f.weight == w], cols)
            B = linalg.dense([rows[id(f)] for f in ls if f.weight == w], cols)
            ok, ranks = _span_equal(A, B) if A and B else (False, (len(A), len(B), 0))
            report.slices_checked += 1
            if not ok:
                report.failures.append({"block": {"N": list(block[0]), "n": block[1]},
                                        "slice": list(w), "ranks": list(ranks)})
    return report


# -- block structure in the normal-monomial basis ----------------------------

def precedes_or_equal(b: tuple[tuple[int, ...], int], a: tuple[tuple[int, ...], int]) -> bool:
    """b precedes a (or equals it): N_a is a proper subset of N_b, or same N and n_b <= n_a."""
    (Nb, nb), (Na, na) = b, a
    if Nb == Na:
        return nb <= na
    return set(Na) < set(Nb)


@dataclass
class TriangularityReport:
    size: int
    blocks: int
    zero_blocks_checked: int = 0
    violations: list[dict] = field(default_factory=list)
    diagonal_mismatches: list[dict] = field(default_factory=list)
    diagonal_nonsingular: bool = True

    @property
    def ok(self) -> bool:
        return not self.violations and not self.diagonal_mismatches and self.diagonal_nonsingular

    def to_json(self) -> dict:
        return {"size": self.size, "blocks": self.blocks,
                "zero_blocks_checked": self.zero_blocks_checked, "ok": self.ok,
                "violations": self.violations[:10],
                "diagonal_mismatches": self.diagonal_mismatches[:10],
                "diagonal_nonsingular": self.diagonal_nonsingular}


def normal_monomial_basis(simplex: Simplex, r: Sequence[int], k: int):
    """(alpha, block, polynomial) for each alpha, using the canonical frames."""
    out = []
    for a in sigma_tuples(simplex.dim + 1, k):
        c = classify_primal(MultiIndex.local(a), r)
        normals = canonical_normals(simplex.face(c.Delta)) if c.N else ()
        out.append((a, (c.N, c.n), normal_monomial(simplex, c.N, a, normals)))
    return out


def block_triangularity(simplex: Simplex, r: Sequence[int], k: int) -> TriangularityReport:
    """Frame DOFs applied to the normal-monomial basis, checked block by block.

    Off-diagonal blocks must vanish unless the column block precedes the row
    block.  Diagonal blocks must equal c_theta times the Gram matrix of the
    weights, with c_theta = prod theta_a! * |n_a|^(2 theta_a).
    """
    dofs = build_dofs(simplex, r, k)
    basis = normal_monomial_basis(simplex, r, k)
    cols = [(a, blk, p.homogenize(k).coeffs) for a, blk, p in basis]
    blocks = sorted({d.block for d in dofs})
    report = TriangularityReport(len(dofs), len(blocks))
    zero_pairs = set()
    for dof in dofs:
        row = dof.row(k)
        A = dof.block
        N = A[0]
        lengths = [dot(v, v) for v in dof.directions]
        for beta, B, coeffs in cols:
            val = sum((row[g] * c for g, c in coeffs.items() if g in row), Fraction(0))
            if B != A:
                if not precedes_or_equal(B, A):
                    zero_pairs.add((A, B))
                    if val != 0:
                        report.violations.append({"row_block": _blk(A), "col_block": _blk(B),
                                                  "alpha": list(dof.alpha), "beta": list(beta),
                                                  "value": frac_str(val)})
                continue
            theta_b = tuple(beta[i] for i in N)
            if theta_b == dof.theta:
                c = prod(factorial(t) * lengths[j] ** t for j, t in enumerate(dof.theta))
                e = [beta[i] + w for i, w in zip(dof.owner.local, dof.weight)]
                expected = c * moment_monomial(len(dof.owner.local) - 1, e)
            else:
                expected = Fraction(0)
            if val != expected:
                report.diagonal_mismatches.append({"block": _blk(A), "alpha": list(dof.alpha),
                                                   "beta": list(beta), "value": frac_str(val),
                                                   "expected": frac_str(expected)})
    report.zero_blocks_checked = len(zero_pairs)
    # diagonal blocks are c_theta-scaled copies of weight Gram matrices
    for dof_block in blocks:
        members = [d for d in dofs if d.block == dof_block]
        weights = sorted({d.weight for d in members})
        dim = len(members[0].owner.local) - 1
        G = [[moment_monomial(dim, [a + b for a, b in zip(u, v)]) for v in weights] for u in weights]
        if not linalg.ldl_positive_definite(G):
            report.diagonal_nonsingular = False
    return report


def _blk(b) -> dict:
    return {"N": list(b[0]), "n": b[1]}
