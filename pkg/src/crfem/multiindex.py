"""Multi-index sets Sigma(D, k) and their primal / dual decompositions.

A multi-index is stored together with the sorted tuple of vertex labels it is
indexed by, so that classes computed on an element transfer unchanged to the
sub-simplices of a mesh.  Smoothness vectors ``r = (r_1, ..., r_d)`` are plain
integer tuples, 1-indexed in the mathematical sense: ``r[t - 1]`` is ``r_t``.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator, Sequence

PRIMAL = "primal"
DUAL = "dual"


class AssumptionError(ValueError):
    """Raised when (r, k) violates the smoothness/degree assumption."""


class DecompositionError(RuntimeError):
    """Raised when a classification is not unique (should be impossible)."""


@dataclass(frozen=True, order=True)
class MultiIndex:
    labels: tuple[int, ...]
    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.entries):
            raise ValueError("labels and entries differ in length")
        if any(a >= b for a, b in zip(self.labels, self.labels[1:])):
            raise ValueError("index set must be sorted and duplicate-free")
        if any(e < 0 for e in self.entries):
            raise ValueError("entries must be nonnegative")

    @classmethod
    def local(cls, entries: Sequence[int]) -> "MultiIndex":
        return cls(tuple(range(len(entries))), tuple(entries))

    @classmethod
    def from_dict(cls, mapping: dict[int, int]) -> "MultiIndex":
        labels = tuple(sorted(mapping))
        return cls(labels, tuple(mapping[i] for i in labels))

    @property
    def degree(self) -> int:
        return sum(self.entries)

    def __getitem__(self, label: int) -> int:
        return self.entries[self.labels.index(label)]

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.labels, self.entries))

    def restrict(self, labels: Iterable[int]) -> "MultiIndex":
        d = self.as_dict()
        keep = tuple(sorted(labels))
        return MultiIndex(keep, tuple(d[i] for i in keep))

    def subset_sum(self, labels: Iterable[int]) -> int:
        d = self.as_dict()
        return sum(d[i] for i in labels)

    def __repr__(self) -> str:
        return f"MultiIndex({dict(zip(self.labels, self.entries))})"


@dataclass(frozen=True)
class Classification:
    kind: str
    alpha: MultiIndex
    s: int
    N: tuple[int, ...]
    Delta: tuple[int, ...]
    n: int
    delta: int

    def to_json(self) -> dict:
        return {
            "alpha": list(self.alpha.entries),
            "labels": list(self.alpha.labels),
            "kind": self.kind,
            "s": self.s,
            "N": list(self.N),
            "Delta": list(self.Delta),
            "n": self.n,
            "delta": self.delta,
        }


def _labels(D: Iterable[int] | int) -> tuple[int, ...]:
    if isinstance(D, int):
        return tuple(range(D + 1))
    labels = tuple(sorted(set(D)))
    if not labels:
        raise ValueError("empty index set")
    return labels


def _compositions(length: int, k: int) -> Iterator[tuple[int, ...]]:
    # first entry descending, i.e. (k,0,...) comes first
    if length == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in _compositions(length - 1, k - first):
            yield (first,) + rest


def sigma_tuples(length: int, k: int) -> list[tuple[int, ...]]:
    """Raw entry tuples of Sigma over ``length`` labels, in enumeration order."""
    if length <= 0:
        raise ValueError("empty index set")
    if k < 0:
        return []
    return list(_compositions(length, k))


def enumerate_sigma(D: Iterable[int] | int, k: int) -> list[MultiIndex]:
    """All multi-indices on index set ``D`` with entries summing to ``k``.

    ``D`` is either an iterable of labels or an int ``d`` meaning {0, ..., d}.
    The order is lexicographic with the first entry largest first.
    """
    labels = _labels(D)
    if k < 0:
        raise ValueError("degree must be nonnegative")
    return [MultiIndex(labels, e) for e in _compositions(len(labels), k)]


def assumption_violations(r: Sequence[int], k: int) -> list[str]:
    r = tuple(r)
    problems = []
    if any(x < -1 for x in r):
        problems.append("entries of r must be >= -1")
    for i in range(len(r) - 1):
        if r[i + 1] < 2 * r[i]:
            problems.append(f"r_{i + 2} < 2*r_{i + 1}")
    last = r[-1] if r else -1
    if k < 2 * last + 1:
        problems.append("k < 2*r_d+1")
    if k < 0:
        problems.append("k < 0")
    return problems


def validate_assumption(r: Sequence[int], k: int) -> bool:
    return not assumption_violations(r, k)


def require_assumption(r: Sequence[int], k: int) -> None:
    problems = assumption_violations(r, k)
    if problems:
        raise AssumptionError(f"assumption violated for r={tuple(r)}, k={k}: " + "; ".join(problems))


def _threshold(r: Sequence[int], t: int) -> int:
    return r[t - 1]


def _smallest_sums(entries: Sequence[int]) -> list[int]:
    # partial[t] = sum of the t smallest entries
    partial = [0]
    for e in sorted(entries):
        partial.append(partial[-1] + e)
    return partial


def _unique_subset(entries: Sequence[int], s: int, bound: int) -> tuple[int, ...]:
    hits = [c for c in itertools.combinations(range(len(entries)), s)
            if sum(entries[i] for i in c) <= bound]
    if len(hits) != 1:
        raise DecompositionError(f"{len(hits)} subsets of size {s} with sum <= {bound} for {tuple(entries)}")
    return hits[0]


def primal_positions(entries: Sequence[int], r: Sequence[int]) -> tuple[int, ...]:
    """Positions of N(alpha) for the primal decomposition; no assumption check."""
    partial = _smallest_sums(entries)
    for s in range(len(entries) - 1, 0, -1):
        if partial[s] <= _threshold(r, s):
            return _unique_subset(entries, s, _threshold(r, s))
    return ()


def dual_positions(entries: Sequence[int], r: Sequence[int]) -> tuple[int, ...]:
    """Positions of N'(alpha) for the dual decomposition; no assumption check."""
    partial = _smallest_sums(entries)
    s = 0
    for t in range(1, len(entries)):
        if partial[t] > _threshold(r, t):
            break
        s = t
    if s == 0:
        return ()
    return _unique_subset(entries, s, _threshold(r, s))


def _classify(alpha: MultiIndex, r: Sequence[int], kind: str) -> Classification:
    r = tuple(r)
    if len(r) != len(alpha.entries) - 1:
        raise ValueError(f"r has {len(r)} entries, need {len(alpha.entries) - 1}")
    require_assumption(r, alpha.degree)
    finder = primal_positions if kind == PRIMAL else dual_positions
    pos = finder(alpha.entries, r)
    N = tuple(alpha.labels[i] for i in pos)
    Delta = tuple(x for x in alpha.labels if x not in N)
    n = sum(alpha.entries[i] for i in pos)
    return Classification(kind, alpha, len(N), N, Delta, n, alpha.degree - n)


def classify_primal(alpha: MultiIndex, r: Sequence[int]) -> Classification:
    return _classify(alpha, r, PRIMAL)


def classify_dual(alpha: MultiIndex, r: Sequence[int]) -> Classification:
    return _classify(alpha, r, DUAL)


def classify(alpha: MultiIndex, r: Sequence[int], kind: str = PRIMAL) -> Classification:
    if kind not in (PRIMAL, DUAL):
        raise ValueError(f"unknown kind {kind!r}")
    return _classify(alpha, r, kind)


def in_sigma0(entries: Sequence[int], q: Sequence[int]) -> bool:
    partial = _smallest_sums(entries)
    return all(partial[t] > q[t - 1] for t in range(1, len(entries)))


def enumerate_sigma0(D: Iterable[int] | int, k: int, q: Sequence[int]) -> list[MultiIndex]:
    """Sigma_0^{(q)}(D, k): every t-subset sum exceeds q_t, 1 <= t < card(D)."""
    labels = _labels(D)
    q = tuple(q)
    if len(q) != len(labels) - 1:
        raise ValueError(f"q must have length {len(labels) - 1}, got {len(q)}")
    if k < 0:
        return []
    return [MultiIndex(labels, e) for e in _compositions(len(labels), k) if in_sigma0(e, q)]


def derived_q(r: Sequence[int], m: int, order: int, dim: int | None = None) -> tuple[int, ...]:
    """q_t = r_{t+m} - order for t = 1..d-m (the thresholds on a codim-m face)."""
    d = len(r) if dim is None else dim
    return tuple(r[t + m - 1] - order for t in range(1, d - m + 1))


def refined_enumerate(N: Iterable[int], n: int, D: Iterable[int] | int, k: int,
                      r: Sequence[int], kind: str = PRIMAL,
                      theta: MultiIndex | None = None,
                      sigma: MultiIndex | None = None) -> list[MultiIndex]:
    """The refined class Sigma_{N,n} (or its dual), optionally sliced.

    ``theta`` fixes the entries on N, ``sigma`` fixes the entries on Delta.
    """
    labels = _labels(D)
    N = tuple(sorted(N))
    if N and n > _threshold(r, len(N)):
        return []
    out = []
    for alpha in enumerate_sigma(labels, k):
        c = classify(alpha, r, kind)
        if c.N != N or c.n != n:
            continue
        if theta is not None and alpha.restrict(theta.labels) != theta:
            continue
        if sigma is not None and alpha.restrict(sigma.labels) != sigma:
            continue
        out.append(alpha)
    return out


def refined_classes(D: Iterable[int] | int, k: int, r: Sequence[int],
                    kind: str = PRIMAL) -> dict[tuple[tuple[int, ...], int], list[MultiIndex]]:
    """Group Sigma(D, k) by (N, n) in one pass."""
    classes: dict[tuple[tuple[int, ...], int], list[MultiIndex]] = {}
    for alpha in enumerate_sigma(D, k):
        c = classify(alpha, r, kind)
        classes.setdefault((c.N, c.n), []).append(alpha)
    return classes


def restrict_to_delta(alpha: MultiIndex, r: Sequence[int]) -> MultiIndex:
    """R_(Delta): keep the entries of alpha on Delta(alpha)."""
    c = classify_primal(alpha, r)
    return alpha.restrict(c.Delta)


def restrict_to_n(alpha: MultiIndex, r: Sequence[int]) -> MultiIndex:
    """R_(N): keep the entries of alpha on N(alpha)."""
    c = classify_primal(alpha, r)
    return alpha.restrict(c.N)


def extend_from(theta: MultiIndex, sigma: MultiIndex, r: Sequence[int]) -> MultiIndex:
    """Inverse of (R_(N), R_(Delta)): glue theta on N and sigma on Delta.

    Raises ValueError unless the glued index lands in Sigma_{N,|theta|}.
    """
    if set(theta.labels) & set(sigma.labels):
        raise ValueError("theta and sigma overlap")
    merged = theta.as_dict()
    merged.update(sigma.as_dict())
    alpha = MultiIndex.from_dict(merged)
    n = theta.degree
    N = theta.labels
    if N and n > _threshold(r, len(N)):
        raise ValueError(f"|theta|={n} exceeds r_{len(N)}")
    q = derived_q(r, len(N), n, dim=len(alpha.labels) - 1)
    if not in_sigma0(sigma.entries, q):
        raise ValueError(f"sigma={sigma!r} is not in Sigma_0^{q}")
    c = classify_primal(alpha, r)
    if c.N != N or c.n != n:
        raise ValueError(f"glued index {alpha!r} has class N={c.N}, n={c.n}")
    return alpha


def node_shift(r: Sequence[int], N_size: int, n: int, Delta_size: int) -> int:
    """Amount subtracted from each Delta' entry by R'_(Delta).

    For a singleton Delta' (vertex class) the node is forced to the vertex and
    the shift is taken as 0.
    """
    if Delta_size == 1:
        return 0
    return _threshold(r, N_size + 1) - n + 1


def s_value(d: int, k: int, N_size: int, n: int, r: Sequence[int]) -> int:
    """S(d, k, N, n) = k - n - (d + 1 - card N) * shift."""
    Delta_size = d + 1 - N_size
    return k - n - Delta_size * node_shift(r, N_size, n, Delta_size)


def dual_node_shift(alpha: MultiIndex, r: Sequence[int]) -> MultiIndex:
    """R'_(Delta'): the shifted Delta'-part of a dual-classified index."""
    c = classify_dual(alpha, r)
    shift = node_shift(r, c.s, c.n, len(c.Delta))
    shifted = tuple(alpha[i] - shift for i in c.Delta)
    if any(v < 0 for v in shifted):
        raise DecompositionError(f"negative shifted entry for {alpha!r}")
    return MultiIndex(c.Delta, shifted)


def embed_dual(beta: MultiIndex, theta: MultiIndex, r: Sequence[int], l: int, I: int) -> MultiIndex:
    """Assemble alpha from a facet index beta and a tail theta on N'(beta) + {I}.

    ``beta`` lives on D minus {I} and is dual-classified with the shifted
    vector p_l = (r_2 - l, ..., r_d - l).
    """
    r = tuple(r)
    if I in beta.labels:
        raise ValueError("beta must not contain the facet vertex I")
    if l < 0 or l > r[0]:
        raise ValueError(f"l={l} outside [0, r_1]")
    if theta.degree != l:
        raise ValueError("theta must have degree l")
    p_l = tuple(x - l for x in r[1:])
    cb = classify_dual(beta, p_l)
    if set(theta.labels) != set(cb.N) | {I}:
        raise ValueError(f"theta must be indexed by N'(beta) + {{I}} = {sorted(set(cb.N) | {I})}")
    merged = beta.as_dict()
    for i, t in theta.as_dict().items():
        merged[i] = merged.get(i, 0) + t
    return MultiIndex.from_dict(merged)


@dataclass(frozen=True)
class CodimCounts:
    codim: int
    subsimplices: int
    per_subsimplex: int
    total: int
    by_order: tuple[int, ...]

    def to_json(self) -> dict:
        return {"codim": self.codim, "subsimplices": self.subsimplices,
                "per_subsimplex": self.per_subsimplex, "total": self.total,
                "by_order": list(self.by_order)}


def counts_by_codim(d: int, k: int, r: Sequence[int], kind: str = PRIMAL) -> list[CodimCounts]:
    """Per-codimension DOF counts, with the per-sub-simplex split by order n."""
    require_assumption(r, k)
    per_set: Counter = Counter()
    for alpha in enumerate_sigma(d, k):
        c = classify(alpha, r, kind)
        per_set[(c.N, c.n)] += 1
    table = []
    for m in range(d + 1):
        subsets = list(itertools.combinations(range(d + 1), m))
        max_order = max([n for (N, n) in per_set if len(N) == m], default=-1)
        rows = []
        for N in subsets:
            rows.append(tuple(per_set[(N, n)] for n in range(max_order + 1)))
        if any(row != rows[0] for row in rows):
            raise DecompositionError(f"counts differ between codim-{m} sub-simplices")
        by_order = rows[0]
        per = sum(by_order)
        table.append(CodimCounts(m, len(subsets), per, per * len(subsets), by_order))
    total = sum(row.total for row in table)
    if total != comb(k + d, d):
        raise DecompositionError(f"counts sum to {total}, expected {comb(k + d, d)}")
    return table
