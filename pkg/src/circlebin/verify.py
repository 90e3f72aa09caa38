"""Exact validation of packings, slack measurement, area and brute-force bounds.

The verifier is the trust anchor of the toolkit: every solver output is
checked here with exact rational arithmetic, zero tolerance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .exactmath import PI_LOW, ceil_div_fraction
from .geometry import Circle, Point2, dist_sq


@dataclass(frozen=True)
class Instance:
    """Circles plus the target bin size; all data rational."""

    circles: Tuple[Circle, ...]
    w: Fraction
    h: Fraction

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError("bin sides must be positive")
        m = min(self.w, self.h)
        for c in self.circles:
            if 2 * c.radius > m:
                raise ValueError(f"circle {c.id}: diameter exceeds min bin side")
        ids = [c.id for c in self.circles]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate circle ids")

    @property
    def n(self) -> int:
        return len(self.circles)

    def radius_of(self) -> Dict[int, Fraction]:
        return {c.id: c.radius for c in self.circles}


@dataclass(frozen=True)
class BinContent:
    """Placements inside one bin: (circle id, center)."""

    placements: Tuple[Tuple[int, Point2], ...]


@dataclass(frozen=True)
class Packing:
    """A set of bins with placed circles; bin_height may be augmented."""

    bins: Tuple[BinContent, ...]
    bin_width: Fraction
    bin_height: Fraction

    @property
    def num_bins(self) -> int:
        return len(self.bins)


@dataclass(frozen=True)
class OverlapPair:
    i: int
    j: int
    gap_sq: Fraction  # (r_i + r_j)^2 - dist^2 > 0, the exact witness


@dataclass(frozen=True)
class OutOfBounds:
    i: int
    side: str  # left / right / bottom / top
    deficit: Fraction  # exact distance the constraint is missed by


@dataclass(frozen=True)
class VerificationReport:
    valid: bool
    violations: Tuple[object, ...]
    max_violation: Fraction  # smallest slack for which the input qualifies

    def first_violation(self) -> Optional[object]:
        return self.violations[0] if self.violations else None


def _bound_deficits(
    radius: Fraction, center: Point2, w: Fraction, h: Fraction
) -> List[Tuple[str, Fraction]]:
    out = []
    if center.x < radius:
        out.append(("left", radius - center.x))
    if center.x > w - radius:
        out.append(("right", center.x - (w - radius)))
    if center.y < radius:
        out.append(("bottom", radius - center.y))
    if center.y > h - radius:
        out.append(("top", center.y - (h - radius)))
    return out


def satisfies_slack(
    circles: Sequence[Circle],
    bins: Sequence[BinContent],
    w: Fraction,
    h: Fraction,
    eps: Fraction,
) -> bool:
    """Exact: do all containment/overlap constraints hold with slack eps?

    Pairwise distances are compared on squares, so no roots are taken.
    """
    radius = {c.id: c.radius for c in circles}
    for bc in bins:
        for cid, p in bc.placements:
            r = radius[cid]
            if p.x < r - eps or p.x > w - r + eps:
                return False
            if p.y < r - eps or p.y > h - r + eps:
                return False
        for (i, p), (j, q) in itertools.combinations(bc.placements, 2):
            need = radius[i] + radius[j] - eps
            if need > 0 and dist_sq(p, q) < need * need:
                return False
    return True


def verify_packing(inst: Instance, pk: Packing) -> VerificationReport:
    """Exact check of containment and pairwise non-overlap for every bin.

    Reports all violations with exact witnesses and the minimal slack for
    which the placement qualifies (a rational upper bound within 2**-32 of
    the true minimum when pair deficits are irrational).
    """
    radius = inst.radius_of()
    seen: set[int] = set()
    violations: List[object] = []
    w, hh = pk.bin_width, pk.bin_height
    for bc in pk.bins:
        for cid, p in bc.placements:
            if cid not in radius:
                raise ValueError(f"unknown circle id {cid}")
            if cid in seen:
                raise ValueError(f"duplicate placement of circle {cid}")
            seen.add(cid)
            for side, deficit in _bound_deficits(radius[cid], p, w, hh):
                violations.append(OutOfBounds(cid, side, deficit))
        for (i, p), (j, q) in itertools.combinations(bc.placements, 2):
            s = radius[i] + radius[j]
            d2 = dist_sq(p, q)
            if d2 < s * s:
                violations.append(OverlapPair(i, j, s * s - d2))
    missing = set(radius) - seen
    if missing:
        raise ValueError(f"circles not placed: {sorted(missing)}")

    if not violations:
        return VerificationReport(True, (), Fraction(0))

    max_violation = _minimal_slack(inst.circles, pk.bins, w, hh, violations)
    return VerificationReport(False, tuple(violations), max_violation)


def _minimal_slack(
    circles: Sequence[Circle],
    bins: Sequence[BinContent],
    w: Fraction,
    h: Fraction,
    violations: Sequence[object],
) -> Fraction:
    """Smallest eps such that satisfies_slack holds, to 2**-34 granularity.

    Bound deficits are rational and taken exactly; pair deficits are found
    by square-root-free dyadic bisection, reporting the upper endpoint.
    """
    bound_floor = max(
        (v.deficit for v in violations if isinstance(v, OutOfBounds)),
        default=Fraction(0),
    )
    if not any(isinstance(v, OverlapPair) for v in violations):
        return bound_floor
    hi = Fraction(1)
    limit = w + h
    while hi < limit:
        hi *= 2
    lo = bound_floor
    if satisfies_slack(circles, bins, w, h, lo):
        return lo
    step = Fraction(1, 1 << 34)
    while hi - lo > step:
        mid = (lo + hi) / 2
        if satisfies_slack(circles, bins, w, h, mid):
            hi = mid
        else:
            lo = mid
    return hi


def area_lower_bound(inst: Instance) -> int:
    """ceil(total circle area / bin area) with a certified lower pi."""
    if not inst.circles:
        return 0
    total = sum((PI_LOW * c.radius * c.radius for c in inst.circles), Fraction(0))
    return ceil_div_fraction(total, inst.w * inst.h)


class OptUnknown(RuntimeError):
    """Brute-force optimum could not be certified within budget."""


def _partitions(items: Sequence[int]):
    """All set partitions, yielded as tuples of tuples."""
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for sub in _partitions(rest):
        yield ((first,),) + sub
        for k in range(len(sub)):
            yield sub[:k] + ((first,) + sub[k],) + sub[k + 1 :]


def brute_force_opt(
    inst: Instance,
    backend=None,
    budget: int = 400_000,
    alpha: Fraction = Fraction(1, 1 << 10),
) -> int:
    """Exact minimum bin count over all set partitions (n <= 8 enforced).

    A part is admitted only with an exactly verified zero-slack packing in
    the original bin, so the result never under-counts; raises OptUnknown
    if the budget runs out before a certified partition is found.
    """
    from .oracle import FeasibilityBackend, part_fits_exactly

    if inst.n > 8:
        raise ValueError("brute_force_opt is limited to n <= 8")
    if inst.n == 0:
        return 0
    if backend is None:
        backend = FeasibilityBackend()

    cache: Dict[Tuple[Fraction, ...], bool] = {}
    spent = [0]

    def feasible(part: Tuple[int, ...]) -> bool:
        radii = tuple(sorted((radius[c] for c in part)))
        if radii not in cache:
            if spent[0] >= budget:
                raise OptUnknown("feasibility budget exhausted")
            spent[0] += 1
            cache[radii] = part_fits_exactly(radii, inst.w, inst.h, alpha, backend)
        return cache[radii]

    radius = inst.radius_of()
    ids = sorted(radius)
    lower = max(area_lower_bound(inst), 1)
    by_count: Dict[int, List[Tuple[Tuple[int, ...], ...]]] = {}
    for part in _partitions(ids):
        by_count.setdefault(len(part), []).append(part)
    for k in range(lower, inst.n + 1):
        for partition in by_count.get(k, []):
            if all(feasible(p) for p in partition):
                return k
    raise OptUnknown("no certified partition found")
