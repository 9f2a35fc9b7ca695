"""Exact and modular linear algebra on rational matrices.

Matrices are passed around as lists of rows of :class:`fractions.Fraction`;
the heavy lifting is delegated to python-flint (``fmpq_mat`` over Q and
``nmod_mat`` over a prime field).
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from flint import fmpq, fmpq_mat, fmpz, nmod_mat

from .geometry import frac_str

Matrix = list[list[Fraction]]

MODULAR_RETRIES = 3


def dense(rows: Sequence[Mapping], columns: Sequence) -> Matrix:
    """Turn sparse rows (column key -> value) into a dense matrix."""
    pos = {c: j for j, c in enumerate(columns)}
    out = []
    for row in rows:
        dense_row = [Fraction(0)] * len(columns)
        for c, v in row.items():
            if c not in pos:
                raise KeyError(f"unknown column {c!r}")
            dense_row[pos[c]] = Fraction(v)
        out.append(dense_row)
    return out


def to_fmpq(A: Matrix) -> fmpq_mat:
    n = len(A)
    m = len(A[0]) if n else 0
    return fmpq_mat(n, m, [fmpq(x.numerator, x.denominator) for row in A for x in row])


def from_fmpq(M: fmpq_mat) -> Matrix:
    return [[Fraction(int(x.p), int(x.q)) for x in row] for row in M.tolist()]


def det(A: Matrix) -> Fraction:
    if not A:
        return Fraction(1)
    d = to_fmpq(A).det()
    return Fraction(int(d.p), int(d.q))


def rank(A: Matrix) -> int:
    if not A or not A[0]:
        return 0
    return to_fmpq(A).rank()


def solve(A: Matrix, B: Matrix) -> Matrix:
    """X with A X = B for square nonsingular A (B given as rows)."""
    return from_fmpq(to_fmpq(A).solve(to_fmpq(B)))


def kernel(A: Matrix) -> list[list[Fraction]]:
    """A basis of the right null space, read off the reduced row echelon form."""
    if not A:
        return []
    m = len(A[0])
    R, rk = to_fmpq(A).rref()
    R = from_fmpq(R)
    pivots = []
    for i in range(rk):
        pivots.append(next(j for j in range(m) if R[i][j] != 0))
    free = [j for j in range(m) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * m
        v[f] = Fraction(1)
        for i, pj in enumerate(pivots):
            v[pj] = -R[i][f]
        basis.append(v)
    return basis


def random_prime(rng: random.Random, bits: int = 62) -> int:
    while True:
        p = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if fmpz(p).is_prime():
            return p


def reduce_mod(A: Matrix, p: int) -> nmod_mat | None:
    """A mod p, or None when some denominator vanishes mod p."""
    entries = []
    for row in A:
        for x in row:
            den = x.denominator % p
            if den == 0:
                return None
            entries.append(x.numerator % p * pow(den, -1, p) % p)
    return nmod_mat(len(A), len(A[0]), entries, p)


def modular_rank(A: Matrix, p: int) -> int | None:
    M = reduce_mod(A, p)
    return None if M is None else M.rank()


@dataclass
class Certificate:
    """Outcome of a nonsingularity check."""

    size: int
    nonsingular: bool
    mode: str
    rank: int
    determinant: str | None = None
    primes: list[int] = field(default_factory=list)
    kernel_vector: list[str] | None = None
    note: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def certify(A: Matrix, mode: str = "exact", rng: random.Random | None = None) -> Certificate:
    """Certify that a square matrix is nonsingular.

    In modular mode full rank modulo a random 62-bit prime proves
    nonsingularity over Q.  A deficient rank is retried with fresh primes and
    finally settled exactly, so a "singular" verdict is always exact.
    """
    n = len(A)
    if any(len(row) != n for row in A):
        raise ValueError("matrix is not square")
    if mode not in ("exact", "modular"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "modular":
        rng = rng or random.Random(0)
        primes = []
        for _ in range(MODULAR_RETRIES):
            p = random_prime(rng)
            primes.append(p)
            rk = modular_rank(A, p)
            if rk == n:
                return Certificate(n, True, "modular", n, primes=primes)
        cert = _exact_certificate(A)
        cert.primes = primes
        cert.note = "modular rank deficient; settled exactly"
        return cert
    return _exact_certificate(A)


def _exact_certificate(A: Matrix) -> Certificate:
    n = len(A)
    d = det(A)
    if d != 0:
        return Certificate(n, True, "exact", n, determinant=frac_str(d))
    rk = rank(A)
    ker = kernel(A)
    return Certificate(n, False, "exact", rk, determinant="0",
                       kernel_vector=[frac_str(x) for x in ker[0]] if ker else None)


def ldl_positive_definite(G: Matrix) -> bool:
    """Exact LDL^T test for symmetric positive definiteness."""
    n = len(G)
    if any(G[i][j] != G[j][i] for i in range(n) for j in range(i)):
        return False
    M = [list(map(Fraction, row)) for row in G]
    for c in range(n):
        piv = M[c][c]
        if piv <= 0:
            return False
        for i in range(c + 1, n):
            if M[i][c]:
                f = M[i][c] / piv
                for j in range(c + 1, n):
                    M[i][j] -= f * M[c][j]
    return True
