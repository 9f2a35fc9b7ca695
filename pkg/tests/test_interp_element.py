import random
from collections import Counter
from fractions import Fraction as F
from itertools import product

import pytest

from crfem.geometry import Simplex, dot, random_simplex, sub
from crfem.interp_element import (
    Interpolator, apply_interp, build_dofs_interp, cartesian_tensor, check_unisolvent_interp,
    facet_normal, factor_power, interpolate, node, representation_check, trace_dof_set,
    vandermonde_interp,
)
from crfem.multiindex import MultiIndex, classify_dual, node_shift, sigma_tuples
from crfem.polynomial import BaryPoly, derivative

BATTERY = [((1,), 3), ((1, 2), 5), ((2, 4), 9), ((1, 2, 4), 9)]


def random_poly(S, degree, rng, bound=9):
    return BaryPoly(S, degree, {a: F(rng.randint(-bound, bound), rng.randint(1, bound))
                                for a in sigma_tuples(S.dim + 1, degree)})


def test_vertex_dofs_sit_on_vertices():
    S = Simplex.reference(2)
    for f in build_dofs_interp(S, (1, 2), 5):
        if f.owner.dim == 0:
            assert f.point == S.vertices[f.owner.local[0]]


def test_argyris_edge_node_is_midpoint_and_no_interior():
    S = random_simplex(2, random.Random(3))
    dofs = build_dofs_interp(S, (1, 2), 5)
    by_dim = Counter(f.owner.dim for f in dofs)
    assert by_dim == {0: 18, 1: 3}
    for f in dofs:
        if f.owner.dim == 1:
            a, b = (S.vertices[i] for i in f.owner.local)
            assert f.point == tuple((x + y) / 2 for x, y in zip(a, b))
            assert f.order == 1
            (m,) = f.directions
            assert dot(m, sub(b, a)) == 0


def test_standard_lattice_when_r_is_zero():
    k = 4
    for f in build_dofs_interp(Simplex.reference(2), (0, 0), k):
        assert f.order == 0
        assert f.node == tuple(F(a, k) for a in f.alpha)


@pytest.mark.parametrize("r,k", BATTERY + [((1, 2), 7), ((0, 1), 4)])
def test_nodes_in_closed_face(r, k):
    for a in sigma_tuples(len(r) + 1, k):
        x = node(a, r, k)
        c = classify_dual(MultiIndex.local(a), r)
        assert sum(x) == 1 and min(x) >= 0
        assert all(x[i] > 0 for i in c.Delta) or len(c.Delta) == 1
        assert all(x[i] == 0 for i in c.N)


@pytest.mark.parametrize("r,k", [((1, 2), 9), ((2, 4), 12), ((1, 2, 4), 13)])
def test_interior_nodes_form_interior_lattice(r, k):
    d = len(r)
    got = {node(a, r, k) for a in sigma_tuples(d + 1, k)
           if not classify_dual(MultiIndex.local(a), r).N}
    shift = node_shift(r, 0, 0, d + 1)
    S = k - (d + 1) * shift
    lattice = {tuple(F(b, S + d + 1) for b in c) for c in sigma_tuples(d + 1, S + d + 1)
               if min(c) > 0}
    assert got == lattice


def test_interp_nodes_distinct_per_order():
    dofs = build_dofs_interp(Simplex.reference(3), (1, 2, 4), 9)
    seen = Counter((f.node, f.theta, f.owner.local) for f in dofs)
    assert max(seen.values()) == 1


@pytest.mark.parametrize("r,k", BATTERY)
def test_unisolvent_reference_and_random(r, k):
    d = len(r)
    for S in [Simplex.reference(d), random_simplex(d, random.Random(10 + d))]:
        assert check_unisolvent_interp(S, r, k).nonsingular


def test_apply_matches_row():
    S = random_simplex(2, random.Random(2))
    k = 5
    for f in build_dofs_interp(S, (1, 2), k):
        row = f.row(k)
        for a in sigma_tuples(3, k):
            assert row.get(a, 0) == apply_interp(f, BaryPoly.monomial(S, a))


def test_oracle_input_matches_polynomial_input():
    S = Simplex.reference(2)
    terms = [((3, 1), 2), ((0, 2), -1), ((1, 0), F(1, 3))]
    p = BaryPoly.from_cartesian(S, terms)

    def oracle(point, vectors):
        return derivative(p, vectors).evaluate_at(point)

    for f in build_dofs_interp(S, (1, 2), 5):
        assert apply_interp(f, oracle) == apply_interp(f, p)


@pytest.mark.parametrize("r,k", BATTERY)
def test_reproduces_degree_k(r, k):
    rng = random.Random(sum(r) + k)
    S = random_simplex(len(r), rng)
    ip = Interpolator(S, r, k)
    for u in [random_poly(S, k, rng) for _ in range(3)] + [BaryPoly.constant(S, 7)]:
        assert ip(u) == u


@pytest.mark.parametrize("r,k", [((1,), 3), ((1, 2), 5), ((2, 4), 9)])
def test_projection_on_higher_degree(r, k):
    rng = random.Random(4)
    S = random_simplex(len(r), rng)
    ip = Interpolator(S, r, k)
    u = random_poly(S, k + 2, rng)
    Iu = ip(u)
    assert ip.values(Iu) == ip.values(u)
    assert ip(Iu) == Iu


def test_interpolate_wrapper():
    S = Simplex.reference(1)
    u = BaryPoly.from_cartesian(S, [((5,), 1)])
    Iu = interpolate(u, S, (1,), 3)
    # Hermite cubic of x^5: matches value and slope at 0 and 1
    assert Iu == BaryPoly.from_cartesian(S, [((2,), -2), ((3,), 3)])


def test_cartesian_tensor():
    assert cartesian_tensor([(1, 2), (3, 0)], 2) == {(2, 0): 3, (1, 1): 6}
    assert cartesian_tensor([], 3) == {(0, 0, 0): 1}


@pytest.mark.parametrize("r,k", [((1, 2), 5), ((2, 4), 9), ((1, 3), 7)])
def test_trace_set_l0_is_lower_dimensional_element(r, k):
    S = random_simplex(2, random.Random(1))
    edge = Simplex.reference(1)
    low = sorted((f.node, f.order) for f in build_dofs_interp(edge, r[1:], k))
    for I in range(3):
        ts = trace_dof_set(S, I, 0, r, k)
        F_ = [i for i in range(3) if i != I]
        got = sorted((tuple(f.node[i] for i in F_), f.order) for f in ts.dofs)
        assert got == low


def test_trace_set_size_and_orders():
    r, k = (2, 4), 9
    S = Simplex.reference(2)
    for l in range(r[0] + 1):
        ts = trace_dof_set(S, 0, l, r, k)
        assert len(ts.dofs) == k - l + 1
        assert all(f.theta[-1] == l for f in ts.dofs)
    with pytest.raises(ValueError):
        trace_dof_set(S, 0, r[0] + 1, r, k)


@pytest.mark.parametrize("r,k", [((1, 2), 5), ((2, 4), 9), ((1, 2, 4), 9)])
def test_representation_check(r, k):
    d = len(r)
    S = random_simplex(d, random.Random(7))
    for I in range(d + 1):
        for l in range(r[0] + 1):
            report = representation_check(S, I, l, r, k)
            assert report.ok, report.to_json()


def test_trace_sets_agree_across_shared_facet():
    shared = [[0, 0], [F(3, 2), F(1, 2)]]
    A = Simplex.from_points(shared + [[0, 2]], [0, 1, 2])
    B = Simplex.from_points(shared + [[1, -2]], [0, 1, 3])
    r, k = (2, 4), 9
    assert facet_normal(A, 2) == tuple(-x for x in facet_normal(B, 2))
    for l in range(r[0] + 1):
        ta, tb = trace_dof_set(A, 2, l, r, k), trace_dof_set(B, 2, l, r, k)
        assert ta.facet == tb.facet
        for fa, fb in zip(ta.dofs, tb.dofs):
            assert fa.point == fb.point
            sign = (-1) ** l
            assert fa.tensor() == {e: sign * c for e, c in fb.tensor().items()}


def test_factor_power_round_trip():
    rng = random.Random(5)
    S = random_simplex(2, rng)
    q = random_poly(S, 3, rng)
    for i, t0 in product(range(3), range(3)):
        p = BaryPoly.monomial(S, tuple(t0 + 1 if j == i else 0 for j in range(3))) * q
        assert factor_power(p, i, t0) == q


def test_factor_power_rejects_nonvanishing():
    S = Simplex.reference(2)
    p = BaryPoly.monomial(S, (2, 1, 1))
    assert factor_power(p, 0, 1) == BaryPoly.monomial(S, (0, 1, 1))
    with pytest.raises(ValueError):
        factor_power(p, 0, 2)
    with pytest.raises(ValueError):
        factor_power(p, 1, 1)


def test_interp_vandermonde_shape():
    V = vandermonde_interp(build_dofs_interp(Simplex.reference(1), (1,), 3), 3)
    assert len(V) == 4 and all(len(row) == 4 for row in V)
