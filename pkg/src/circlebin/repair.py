"""Turn approximate packings into exact ones in height-augmented bins.

The repair strategy: shift circles off the left/right borders, lift all
centers by the slack amount, then lift the k-th circle (sorted by height)
by (k-1) times a certified rational upper bound on sqrt(6*eps)*h.  Every
output is re-verified exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from .exactmath import root_upper, sqrt_upper
from .geometry import Circle, Point2, WeightedNorm, dist_sq, lp_distance_cmp
from .verify import BinContent, satisfies_slack


@dataclass(frozen=True)
class EpsilonPacking:
    """Placements that may violate constraints by at most `epsilon` (absolute).

    `epsilon` is the slack of the definition used throughout: pairwise
    distance and containment may each be missed by up to epsilon, and
    r_i + r_j - epsilon must stay non-negative.
    """

    placements: Tuple[Tuple[int, Point2], ...]
    epsilon: Fraction
    bin: Tuple[Fraction, Fraction]  # (w, h)

    def validate(self, circles: Sequence[Circle]) -> None:
        w, h = self.bin
        radius = {c.id: c.radius for c in circles}
        for (i, _), (j, _) in _pairs(self.placements):
            if radius[i] + radius[j] - self.epsilon < 0:
                raise ValueError("slack exceeds a pair's radius sum")
        if not satisfies_slack(circles, [BinContent(self.placements)], w, h, self.epsilon):
            raise ValueError("placements violate the declared slack")


def _pairs(placements):
    for a in range(len(placements)):
        for b in range(a + 1, len(placements)):
            yield placements[a], placements[b]


def lift_suffices(
    p1: Point2,
    p2: Point2,
    r1: Fraction,
    r2: Fraction,
    h: Fraction,
    eps: Fraction,
) -> bool:
    """Certify: lifting p1 by any amount >= sqrt(2*eps)*h separates the pair.

    Hypotheses (checked exactly): eps*h <= r1+r2 <= h, y1 >= y2, and
    dist(p1,p2) >= r1+r2-eps*h.  The conclusion is certified at the exact
    (irrational) lift length via one squaring, and is monotone in the lift.
    """
    if eps <= 0 or h <= 0:
        raise ValueError("need eps > 0 and h > 0")
    s = r1 + r2
    if not (eps * h <= s <= h):
        raise ValueError("hypothesis eps*h <= r1+r2 <= h fails")
    if p1.y < p2.y:
        raise ValueError("hypothesis y1 >= y2 fails")
    need = s - eps * h
    d2 = dist_sq(p1, p2)
    if need > 0 and d2 < need * need:
        raise ValueError("hypothesis dist >= r1+r2-eps*h fails")
    # dist'(L)^2 = d2 + 2*dy*L + L^2 at L = sqrt(2 eps) h:
    #   d2 + 2*eps*h^2 + 2*dy*sqrt(2 eps)*h >= s^2
    # <=> sqrt(8 eps)*dy*h >= s^2 - d2 - 2*eps*h^2, settled by squaring.
    dy = p1.y - p2.y
    rhs = s * s - d2 - 2 * eps * h * h
    if rhs <= 0:
        return True
    return 8 * eps * dy * dy * h * h >= rhs * rhs


def repair_packing(
    circles: Sequence[Circle],
    ep: EpsilonPacking,
    eps: Fraction,
) -> Tuple[BinContent, Fraction]:
    """Repair an (eps*h)-packing into an exact packing in a taller bin.

    Returns the repaired placements and the exact output height
    h*(1 + 2*eps + (n-1)*q) <= (1 + n*q)*h, where q is the minimal dyadic
    rational with q*q >= 6*eps (within 2**-32).  Linear after the sort.
    """
    w, h = ep.bin
    if eps <= 0:
        raise ValueError("eps must be positive")
    if eps > Fraction(2, 3):
        raise ValueError("eps too large for the lifting argument")
    radius = {c.id: c.radius for c in circles}
    for cid, _ in ep.placements:
        if 2 * radius[cid] > w:
            raise ValueError(f"circle {cid}: diameter exceeds bin width")
    for (i, _), (j, _) in _pairs(ep.placements):
        if radius[i] + radius[j] < eps * h:
            raise ValueError("eps*h exceeds a pair's radius sum")
    if not satisfies_slack(circles, [BinContent(ep.placements)], w, h, eps * h):
        raise ValueError("input is not an (eps*h)-packing")

    # Border shift plus uniform lift: a 3*eps*h packing, nothing on a border.
    lifted: List[Tuple[int, Point2]] = []
    for cid, p in ep.placements:
        r = radius[cid]
        x = p.x
        if x < r:
            x = r
        elif x > w - r:
            x = w - r
        lifted.append((cid, Point2(x, p.y + eps * h)))

    # Sort by height and spread with the certified lift length.
    q = sqrt_upper(6 * eps)
    lifted.sort(key=lambda item: (item[1].y, item[0]))
    out: List[Tuple[int, Point2]] = []
    for k, (cid, p) in enumerate(lifted):
        out.append((cid, Point2(p.x, p.y + k * q * h)))
    n = len(out)
    height = h * (1 + 2 * eps) + (n - 1) * q * h if n else h
    if not satisfies_slack(circles, [BinContent(tuple(out))], w, height, Fraction(0)):
        raise AssertionError("repair failed exact re-verification")
    return BinContent(tuple(out)), height


def shift_length_upper(norm: WeightedNorm, eps: Fraction, h: Fraction, bits: int = 32) -> Fraction:
    """Certified rational upper bound on (2**a * eps)**(1/p) * h / omega_1."""
    if norm.is_inf:
        raise ValueError("no finite shift length for the max norm")
    a, b = norm.a, norm.b
    base = (2 ** a * eps) ** b
    return root_upper(base, a, bits) * h / norm.omega[0]


def lp_shift_repair(
    placements: Sequence[Tuple[int, Tuple[Fraction, ...]]],
    radii: dict,
    norm: WeightedNorm,
    eps: Fraction,
    h: Fraction,
) -> Tuple[List[Tuple[int, Tuple[Fraction, ...]]], Fraction]:
    """Separate near-overlapping Lp spheres by shifting along dimension 1.

    Input pairs must satisfy eps*h <= r1+r2 <= h and
    ||x1-x2|| >= r1+r2 - eps^2*h (checked exactly).  The k-th sphere in
    first-coordinate order is shifted by (k-1)*T, with T a certified upper
    bound on the required shift; the result is re-verified pairwise and
    returned with the dimension-1 extent growth.  Rejected for p = infinity,
    where lifting provably fails.
    """
    if norm.is_inf:
        raise ValueError("lifting cannot fix max-norm overlaps; use discretization")
    if eps <= 0 or eps >= 1:
        raise ValueError("need 0 < eps < 1")
    items = list(placements)
    for a in range(len(items)):
        for b in range(a + 1, len(items)):
            (i, xi), (j, xj) = items[a], items[b]
            s = radii[i] + radii[j]
            if not (eps * h <= s <= h):
                raise ValueError("hypothesis eps*h <= r1+r2 <= h fails")
            if lp_distance_cmp(xi, xj, norm, s - eps * eps * h) < 0:
                raise ValueError("hypothesis ||x1-x2|| >= r1+r2-eps^2*h fails")

    t_up = shift_length_upper(norm, eps, h)
    items.sort(key=lambda item: (item[1][0], item[0]))
    out: List[Tuple[int, Tuple[Fraction, ...]]] = []
    for k, (cid, x) in enumerate(items):
        shifted = (x[0] + k * t_up,) + tuple(x[1:])
        out.append((cid, shifted))
    for a in range(len(out)):
        for b in range(a + 1, len(out)):
            (i, xi), (j, xj) = out[a], out[b]
            if lp_distance_cmp(xi, xj, norm, radii[i] + radii[j]) < 0:
                raise AssertionError("shift repair failed exact re-verification")
    growth = (len(items) - 1) * t_up if items else Fraction(0)
    return out, growth
