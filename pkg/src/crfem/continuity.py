"""Two-element patches and exact jump checks across the shared facet."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import linalg
from .fe_element import build_dofs, coefficients_to_poly, vandermonde
from .geometry import Simplex, SubsimplexRef, Vector, canonical_normals, dot, frac_str, sub
from .interp_element import Interpolator, trace_dof_set
from .multiindex import sigma_tuples
from .polynomial import BaryPoly, derivative, trace, transfer

FE = "fe"
INTERP = "interp"


class PatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Patch:
    plus: Simplex
    minus: Simplex
    facet_ids: tuple[int, ...]
    normal: Vector  # canonical facet normal, oriented from K+ into K-

    @property
    def dim(self) -> int:
        return self.plus.dim

    def facet(self, side: Simplex) -> SubsimplexRef:
        return side.face_by_ids(self.facet_ids)

    def opposite(self, side: Simplex) -> int:
        """Local index of the vertex not on the facet."""
        return next(i for i, g in enumerate(side.ids) if g not in self.facet_ids)

    def to_json(self) -> dict:
        return {"plus": self.plus.to_json(), "minus": self.minus.to_json(),
                "facet": list(self.facet_ids), "normal": [frac_str(c) for c in self.normal]}


def build_patch(plus: Simplex, minus: Simplex) -> Patch:
    if plus.dim != minus.dim:
        raise PatchError("cells have different dimensions")
    d = plus.dim
    shared = tuple(sorted(set(plus.ids) & set(minus.ids)))
    if len(shared) != d:
        raise PatchError(f"cells share {len(shared)} vertices, need exactly {d}")
    for g in shared:
        if plus.vertices[plus.local_index(g)] != minus.vertices[minus.local_index(g)]:
            raise PatchError(f"vertex {g} has different coordinates in the two cells")
    F = plus.face_by_ids(shared)
    n = canonical_normals(F)[0]
    base = F.points[0]
    x_plus = plus.vertices[next(i for i, g in enumerate(plus.ids) if g not in shared)]
    x_minus = minus.vertices[next(i for i, g in enumerate(minus.ids) if g not in shared)]
    sp, sm = dot(n, sub(x_plus, base)), dot(n, sub(x_minus, base))
    if sp * sm >= 0:
        raise PatchError("cells lie on the same side of the shared facet")
    if sp > 0:
        n = tuple(-c for c in n)
    return Patch(plus, minus, shared, n)


@dataclass(frozen=True)
class DofPair:
    plus: int
    minus: int
    sign: int = 1
    order: int = 0


def shared_dof_map(patch: Patch, r: Sequence[int], k: int, family: str = FE) -> list[DofPair]:
    """Pairs of DOFs that must agree (up to sign) for a conforming assembly.

    fe: DOFs owned by the facet and its sub-simplices, matched as identical
    functionals.  interp: the facet trace sets Psi_{I,l} from both sides,
    matched position by position with sign (-1)^l.
    """
    if family == FE:
        keys_plus = {f.key(): i for i, f in enumerate(build_dofs(patch.plus, r, k))
                     if set(f.owner.global_ids) <= set(patch.facet_ids)}
        keys_minus = {f.key(): i for i, f in enumerate(build_dofs(patch.minus, r, k))
                      if set(f.owner.global_ids) <= set(patch.facet_ids)}
        if set(keys_plus) != set(keys_minus):
            raise PatchError("facet DOFs differ between the two cells")
        return [DofPair(keys_plus[key], keys_minus[key], 1, sum(key[2]))
                for key in sorted(keys_plus, key=lambda key: keys_plus[key])]
    if family == INTERP:
        pairs = []
        Ip, Im = patch.opposite(patch.plus), patch.opposite(patch.minus)
        offset = 0
        for l in range(r[0] + 1):
            sp = trace_dof_set(patch.plus, Ip, l, r, k).dofs
            sm = trace_dof_set(patch.minus, Im, l, r, k).dofs
            for j, (a, b) in enumerate(zip(sp, sm)):
                sign = (-1) ** l
                if a.point != b.point:
                    raise PatchError("trace nodes do not coincide")
                ta, tb = a.tensor(), b.tensor()
                if ta != {e: sign * c for e, c in tb.items()}:
                    raise PatchError(f"trace functionals differ beyond the sign (-1)^{l}")
                pairs.append(DofPair(offset + j, offset + j, sign, l))
            offset += len(sp)
        return pairs
    raise ValueError(f"unknown family {family!r}")


def _to_plus(p: BaryPoly, patch: Patch) -> BaryPoly:
    """Move a facet trace computed on either side onto K+'s facet support."""
    F = patch.facet(patch.plus)
    return BaryPoly(patch.plus, p.degree, dict(p.coeffs), F.local)


def jump_check(u_plus: BaryPoly, u_minus: BaryPoly, patch: Patch, t_max: int) -> list[BaryPoly]:
    """Trace jumps of d^t u / dn^t across the facet, t = 0..t_max."""
    Fp, Fm = patch.facet(patch.plus), patch.facet(patch.minus)
    out = []
    dp, dm = u_plus, u_minus
    for t in range(t_max + 1):
        if t:
            dp = derivative(dp, [patch.normal])
            dm = derivative(dm, [patch.normal])
        tp = _to_plus(trace(dp, Fp.local), patch)
        tm = _to_plus(trace(dm, Fm.local), patch)
        out.append(tp - tm)
    return out


@dataclass
class TrialReport:
    family: str
    trials: int
    orders: int
    zero_jumps: bool = True
    sharp: bool = False
    shared: int = 0
    failures: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.zero_jumps and self.sharp

    def to_json(self) -> dict:
        return {"family": self.family, "trials": self.trials, "checked_orders": self.orders,
                "shared_functionals": self.shared, "zero_jumps": self.zero_jumps,
                "nonzero_jump_above_r1": self.sharp, "ok": self.ok,
                "failures": self.failures[:10]}


def random_rational(rng: random.Random, bound: int = 100) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def _record(report: TrialReport, trial: int, jumps: Sequence[BaryPoly], r1: int):
    for t, j in enumerate(jumps):
        if t <= r1 and not j.is_zero():
            report.zero_jumps = False
            report.failures.append({"trial": trial, "order": t})
        if t == r1 + 1 and not j.is_zero():
            report.sharp = True


def fe_trials(patch: Patch, r: Sequence[int], k: int, trials: int = 20,
              rng: random.Random | None = None) -> TrialReport:
    """Random DOF vectors agreeing on the shared functionals, solved on both cells."""
    rng = rng or random.Random(0)
    r1 = r[0]
    pairs = shared_dof_map(patch, r, k, FE)
    Vp = vandermonde(build_dofs(patch.plus, r, k), k)
    Vm = vandermonde(build_dofs(patch.minus, r, k), k)
    n = len(Vp)
    vp = [[random_rational(rng) for _ in range(trials)] for _ in range(n)]
    vm = [[random_rational(rng) for _ in range(trials)] for _ in range(n)]
    for p in pairs:
        vm[p.minus] = list(vp[p.plus])
    Cp, Cm = linalg.solve(Vp, vp), linalg.solve(Vm, vm)
    report = TrialReport(FE, trials, r1 + 2, shared=len(pairs))
    for t in range(trials):
        up = coefficients_to_poly(patch.plus, k, [row[t] for row in Cp])
        um = coefficients_to_poly(patch.minus, k, [row[t] for row in Cm])
        _record(report, t, jump_check(up, um, patch, r1 + 1), r1)
    return report


def interp_trials(patch: Patch, r: Sequence[int], k: int, trials: int = 20,
                  rng: random.Random | None = None, extra: int = 2) -> TrialReport:
    """Interpolate one random global polynomial of degree k + extra on each cell."""
    rng = rng or random.Random(0)
    r1 = r[0]
    d = patch.dim
    us = [BaryPoly(patch.plus, k + extra, {a: random_rational(rng, 9)
                                            for a in sigma_tuples(d + 1, k + extra)})
          for _ in range(trials)]
    ums = transfer(us, patch.minus)
    ip, im = Interpolator(patch.plus, r, k), Interpolator(patch.minus, r, k)
    Ip, Im = ip.many(us), im.many(ums)
    report = TrialReport(INTERP, trials, r1 + 2, shared=len(shared_dof_map(patch, r, k, INTERP)))
    for t in range(trials):
        _record(report, t, jump_check(Ip[t], Im[t], patch, r1 + 1), r1)
    return report


def reference_patch(d: int) -> Patch:
    """The reference simplex glued to a cell beyond its facet x_1 + ... + x_d = 1."""
    ref = Simplex.reference(d)
    far = [Fraction(2, d)] * d
    pts = list(ref.vertices[1:]) + [tuple(far)]
    return build_patch(ref, Simplex.from_points(pts, list(range(1, d + 2))))


def random_patch(d: int, rng: random.Random, bound: int = 9) -> Patch:
    """Two random rational simplices glued on a facet."""
    from .geometry import random_simplex
    while True:
        plus = random_simplex(d, rng, bound)
        F = plus.face(range(1, d + 1))
        n = canonical_normals(F)[0]
        side = dot(n, sub(plus.vertices[0], F.points[0]))
        c = F.centroid()
        shift = [Fraction(rng.randint(1, 5), rng.randint(1, 3)) for _ in range(d)]
        apex = tuple(ci + s for ci, s in zip(c, shift))
        if dot(n, sub(apex, F.points[0])) * side >= 0:
            apex = tuple(ci - s for ci, s in zip(c, shift))
        if dot(n, sub(apex, F.points[0])) * side >= 0:
            continue
        minus = Simplex.from_points(list(F.points) + [apex], list(range(1, d + 2)))
        return build_patch(plus, minus)
