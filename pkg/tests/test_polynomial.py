import random
from fractions import Fraction as F
from math import factorial

import pytest
from hypothesis import given, settings, strategies as st

from crfem.fe_element import phi_alpha_dofs
from crfem.geometry import Simplex, canonical_normals, dot, random_simplex
from crfem.multiindex import MultiIndex, classify_primal, sigma_tuples
from crfem.polynomial import (
    BaryPoly, derivative, derivative_tensor, directional_derivative, dual_frame, functional_row,
    lambda_derivative, moment_monomial, moment_pairing, normal_coordinate, normal_monomial,
    normalized_moment, point_pairing, trace, transfer,
)

TRI = Simplex.from_points([[0, 0], [2, 1], [F(1, 2), 3]])


def random_poly(S, degree, rng, bound=9):
    return BaryPoly(S, degree, {a: F(rng.randint(-bound, bound), rng.randint(1, bound))
                                for a in sigma_tuples(S.dim + 1, degree)})


def test_monomial_zero_is_one():
    assert BaryPoly.monomial(TRI, (0, 0, 0)) == 1


def test_monomial_product():
    a, b = (1, 0, 2), (0, 3, 1)
    assert BaryPoly.monomial(TRI, a) * BaryPoly.monomial(TRI, b) == BaryPoly.monomial(TRI, (1, 3, 3))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_partition_of_unity(seed):
    rng = random.Random(seed)
    p = random_poly(TRI, 3, rng)
    ones = BaryPoly.lam(TRI, 0) + BaryPoly.lam(TRI, 1) + BaryPoly.lam(TRI, 2)
    assert ones * p == p
    assert (ones * p).degree == 4


def test_homogenize_idempotent():
    p = random_poly(TRI, 2, random.Random(3))
    assert p.homogenize(2).coeffs == p.coeffs
    assert p.homogenize(5).homogenize(5).coeffs == p.homogenize(5).coeffs


def test_mismatched_simplices_rejected():
    other = Simplex.reference(2)
    with pytest.raises(ValueError):
        BaryPoly.lam(TRI, 0) + BaryPoly.lam(other, 0)


def test_from_cartesian_evaluates_correctly():
    p = BaryPoly.from_cartesian(TRI, [((2, 1), 3), ((0, 0), -1), ((1, 0), F(1, 2))])
    for pt in [(F(1, 3), F(1, 5)), (2, 7), (F(-1, 2), 0)]:
        x, y = map(F, pt)
        assert p.evaluate_at(pt) == 3 * x * x * y - 1 + x / 2


def test_derivative_of_square():
    S = random_simplex(2, random.Random(2))
    v = (F(1, 3), F(-2))
    got = directional_derivative(BaryPoly.monomial(S, (2, 0, 0)), v)
    assert got == BaryPoly.lam(S, 0) * (2 * S.dlambda(v)[0])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_derivative_linearity_and_leibniz(seed):
    rng = random.Random(seed)
    S = random_simplex(2, rng)
    p, q = random_poly(S, 2, rng), random_poly(S, 3, rng)
    v, w = (F(rng.randint(-5, 5)), F(1)), (F(2), F(rng.randint(-5, 5), 3))
    D = directional_derivative
    assert D(p + q, v) == D(p, v) + D(q, v)
    assert D(p * q, v) == D(p, v) * q + p * D(q, v)
    assert D(p, tuple(a + b for a, b in zip(v, w))) == D(p, v) + D(p, w)


def unit_scale_case(rng, d, degree):
    """A simplex near the reference one and a Cartesian polynomial with |coef| <= 1."""
    ref = Simplex.reference(d)
    S = Simplex.from_points([[c + F(rng.randint(-2, 2), 8) for c in x] for x in ref.vertices])
    terms = [(e[1:], F(rng.randint(-8, 8), 8)) for e in sigma_tuples(d + 1, degree)]
    return S, BaryPoly.from_cartesian(S, terms)


@pytest.mark.parametrize("seed", range(10))
def test_derivative_against_finite_differences(seed):
    rng = random.Random(seed)
    S, p = unit_scale_case(rng, 3, 4)
    v = tuple(F(rng.randint(-4, 4), 4) for _ in range(3))
    dp = directional_derivative(p, v)
    h = 1e-4
    for _ in range(5):
        x = S.point(_interior(rng, 3))
        xf = [float(c) for c in x]
        fd = (p.evaluate_float([a + h * float(b) for a, b in zip(xf, v)])
              - p.evaluate_float([a - h * float(b) for a, b in zip(xf, v)])) / (2 * h)
        exact = float(dp.evaluate_at(x))
        assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact))


def _interior(rng, d):
    w = [F(rng.randint(1, 9)) for _ in range(d + 1)]
    return [x / sum(w) for x in w]


def test_trace_kills_outside_coordinates():
    assert trace(BaryPoly.lam(TRI, 2), (0, 1)).is_zero()
    assert trace(BaryPoly.monomial(TRI, (2, 1, 0)), (0, 1)) == \
        BaryPoly.monomial(TRI, (2, 1), support=(0, 1))


def test_moment_basics():
    one = BaryPoly.constant(TRI, 1)
    assert normalized_moment(one, one) == 1
    for t in range(4):
        assert moment_monomial(t, (1,) + (0,) * t) == F(1, t + 1)


def test_moment_lambda0_lambda1_vs_quadrature():
    # degree-2 exact rule on the unit triangle: edge midpoints, equal weights
    mids = [(F(1, 2), F(1, 2), 0), (0, F(1, 2), F(1, 2)), (F(1, 2), 0, F(1, 2))]
    quad = sum(a * b for a, b, _ in mids) / 3
    assert moment_monomial(2, (1, 1, 0)) == quad == F(1, 12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_moment_symmetric_bilinear(seed):
    rng = random.Random(seed)
    p, q, s = random_poly(TRI, 2, rng), random_poly(TRI, 1, rng), random_poly(TRI, 2, rng)
    c = F(rng.randint(-5, 5), 7)
    assert normalized_moment(p, q) == normalized_moment(q, p)
    assert normalized_moment(p * c + s, q) == c * normalized_moment(p, q) + normalized_moment(s, q)


def test_lambda_derivative_kronecker():
    S = random_simplex(3, random.Random(5))
    N = (1, 3)
    for a, i in enumerate(N):
        for j in N:
            theta = [0, 0]
            theta[a] = 1
            assert lambda_derivative(BaryPoly.lam(S, j), N, theta) == int(i == j)


def test_dual_frame_is_normal_and_dual():
    S = random_simplex(3, random.Random(8))
    Delta, N = (0, 2), (1, 3)
    face = S.face(Delta)
    vs = dual_frame(S, N, canonical_normals(face))
    for i, v in zip(N, vs):
        assert all(dot(v, t) == 0 for t in face.tangents)
        assert [S.dlambda(v)[j] for j in N] == [int(j == i) for j in N]


def test_normal_coordinates_tangentially_constant():
    S = random_simplex(3, random.Random(9))
    face = S.face((0, 2))
    nu = normal_coordinate(S, canonical_normals(face)[0], S.vertices[0])
    assert trace(nu, (0, 2)).is_zero()
    for t in face.tangents:
        assert directional_derivative(nu, t) == 0


def test_normal_monomial_derivative_structure():
    S = random_simplex(2, random.Random(12))
    N, Delta = (0,), (1, 2)
    (n0,) = canonical_normals(S.face(Delta))
    for beta in [(2, 3, 4), (1, 4, 4), (2, 1, 6)]:
        p = normal_monomial(S, N, beta, (n0,))
        got = trace(derivative(p, [n0] * beta[0]), Delta)
        c = factorial(beta[0]) * dot(n0, n0) ** beta[0]
        assert got == BaryPoly.monomial(S, beta[1:], support=Delta) * c


def test_vanishing_lemma_instances():
    S = random_simplex(2, random.Random(13))
    r, k = (2, 4), 9
    for phi in phi_alpha_dofs(S, r, k):
        c = classify_primal(MultiIndex.local(phi.alpha), r)
        for beta in sigma_tuples(3, k):
            if sum(beta[i] for i in c.N) > c.n:
                assert phi(BaryPoly.monomial(S, beta)) == 0


def test_derivative_tensor_matches_iterated_derivative():
    rng = random.Random(21)
    S = random_simplex(2, rng)
    p = random_poly(S, 4, rng)
    vs = [(F(1), F(2)), (F(-1, 3), F(1))]
    P = derivative_tensor(S, vs)
    from crfem.polynomial import lambda_partial
    acc = BaryPoly.zero(S, 2)
    for g, c in P.items():
        q = p
        for i, gi in enumerate(g):
            for _ in range(gi):
                q = lambda_partial(q, i)
        acc = acc + q * c
    assert acc == derivative(p, vs)


@pytest.mark.parametrize("support,pairing", [
    ((0, 2), moment_pairing((2, 1))),
    ((0, 1, 2), moment_pairing((1, 0, 0))),
    ((1,), point_pairing((F(1),))),
    ((0, 1), point_pairing((F(1, 3), F(2, 3)))),
])
def test_fast_rows_match_generic_route(support, pairing):
    rng = random.Random(5)
    S = random_simplex(2, rng)
    vs = [(F(1), F(-2)), (F(3, 2), F(1))]
    k = 5
    row = functional_row(S, vs, support, k, pairing)
    for a in sigma_tuples(3, k):
        tr = trace(derivative(BaryPoly.monomial(S, a), vs), support)
        slow = sum((c * pairing(e) for e, c in tr.coeffs.items()), F(0))
        assert row.get(a, 0) == slow


def test_transfer_between_simplices():
    A = Simplex.from_points([[0, 0], [1, 0], [0, 1]], [0, 1, 2])
    B = Simplex.from_points([[1, 0], [0, 1], [1, 1]], [1, 2, 3])
    terms = [((2, 1), 3), ((0, 3), -1), ((0, 0), F(1, 2))]
    assert transfer([BaryPoly.from_cartesian(A, terms)], B)[0] == BaryPoly.from_cartesian(B, terms)
