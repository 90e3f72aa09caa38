"""Exact geometric predicates: circles vs rectangles, weighted Lp norms.

All predicates compare exactly over rationals.  Fractional powers are never
evaluated; comparisons against a weighted Lp norm cross-raise both sides to
integer powers and decide the sign of the resulting radical sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .exactmath import cmp_fraction, cmp_radical_sum


@dataclass(frozen=True)
class Point2:
    x: Fraction
    y: Fraction


@dataclass(frozen=True)
class Circle:
    """A circle identified by index; the radius is exact."""

    id: int
    radius: Fraction

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"circle {self.id}: radius must be positive")


@dataclass(frozen=True)
class Rect:
    origin: Point2
    width: Fraction
    height: Fraction

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("rectangle sides must be positive")

    @property
    def x2(self) -> Fraction:
        return self.origin.x + self.width

    @property
    def y2(self) -> Fraction:
        return self.origin.y + self.height


def dist_sq(p: Point2, q: Point2) -> Fraction:
    """Exact squared Euclidean distance."""
    dx = p.x - q.x
    dy = p.y - q.y
    return dx * dx + dy * dy


class RectRelation(Enum):
    DISJOINT = "disjoint"
    CELL_INSIDE_CIRCLE = "cell_inside_circle"
    PARTIAL_OVERLAP = "partial_overlap"


def circle_rect_relation(center: Point2, r: Fraction, cell: Rect) -> RectRelation:
    """Classify an open disk against a closed rectangle, exactly.

    DISJOINT iff the open disk and the rectangle do not meet (nearest
    rectangle point at distance >= r); CELL_INSIDE_CIRCLE iff the whole
    rectangle lies in the closed disk (farthest corner at distance <= r);
    PARTIAL_OVERLAP otherwise.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    r_sq = r * r
    nx = min(max(center.x, cell.origin.x), cell.x2)
    ny = min(max(center.y, cell.origin.y), cell.y2)
    near_sq = dist_sq(center, Point2(nx, ny))
    if near_sq >= r_sq:
        return RectRelation.DISJOINT
    fx = cell.origin.x if center.x - cell.origin.x >= cell.x2 - center.x else cell.x2
    fy = cell.origin.y if center.y - cell.origin.y >= cell.y2 - center.y else cell.y2
    far_sq = dist_sq(center, Point2(fx, fy))
    if far_sq <= r_sq:
        return RectRelation.CELL_INSIDE_CIRCLE
    return RectRelation.PARTIAL_OVERLAP


@dataclass(frozen=True)
class WeightedNorm:
    """Weighted Lp norm ||x|| = (sum_k (omega_k * |x_k|)**p)**(1/p).

    ``p`` is a rational >= 1, or None for the max norm.  Weights must be
    >= 1 so a radius-r sphere fits in a box of side 2r.
    """

    p: Optional[Fraction]
    omega: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if self.p is not None:
            object.__setattr__(self, "p", Fraction(self.p))
            if self.p < 1:
                raise ValueError("p must be >= 1")
        if len(self.omega) < 1:
            raise ValueError("dimension must be >= 1")
        if any(w < 1 for w in self.omega):
            raise ValueError("weights must be >= 1")
        object.__setattr__(self, "omega", tuple(Fraction(w) for w in self.omega))

    @property
    def d(self) -> int:
        return len(self.omega)

    @property
    def is_inf(self) -> bool:
        return self.p is None

    @property
    def a(self) -> int:
        assert self.p is not None
        return self.p.numerator

    @property
    def b(self) -> int:
        assert self.p is not None
        return self.p.denominator


def euclidean_norm(d: int = 2) -> WeightedNorm:
    return WeightedNorm(Fraction(2), tuple(Fraction(1) for _ in range(d)))


def _abs_deltas(x: Sequence[Fraction], y: Sequence[Fraction]) -> list[Fraction]:
    if len(x) != len(y):
        raise ValueError("dimension mismatch")
    return [abs(Fraction(a) - Fraction(b)) for a, b in zip(x, y)]


def lp_norm_cmp(delta: Sequence[Fraction], norm: WeightedNorm, r: Fraction) -> int:
    """Exact sign of ||delta||_{p,omega} - r."""
    if len(delta) != norm.d:
        raise ValueError("dimension mismatch")
    deltas = [abs(Fraction(v)) for v in delta]
    if norm.is_inf:
        value = max(w * dv for w, dv in zip(norm.omega, deltas))
        return cmp_fraction(value, r)
    if r < 0:
        return 1
    a, b = norm.a, norm.b
    terms = [(Fraction(1), (w * dv) ** a) for w, dv in zip(norm.omega, deltas)]
    if r > 0:
        terms.append((Fraction(-1), Fraction(r) ** a))
    return cmp_radical_sum(terms, b, Fraction(0))


def lp_distance_cmp(
    x: Sequence[Fraction], y: Sequence[Fraction], norm: WeightedNorm, r: Fraction
) -> int:
    """Exact three-way comparison of ||x - y||_{p,omega} against r.

    Returns -1, 0 or 1 for less, equal, greater.
    """
    return lp_norm_cmp(_abs_deltas(x, y), norm, r)


@dataclass(frozen=True)
class LpDiameter:
    """The norm of a cube diagonal: side * (sum_k omega_k**p)**(1/p).

    Held symbolically so comparisons against rational radii stay exact.
    For the max norm the value itself is rational.
    """

    norm: WeightedNorm
    side: Fraction

    def cmp(self, r: Fraction) -> int:
        """Exact sign of (diameter bound) - r."""
        vec = tuple(self.side for _ in range(self.norm.d))
        return lp_norm_cmp(vec, self.norm, r)

    def value_exact(self) -> Optional[Fraction]:
        """The bound as a Fraction when it is rational, else None."""
        if self.norm.is_inf:
            return self.side * max(self.norm.omega)
        from .exactmath import exact_root

        power = self.power_value()
        return exact_root(power, self.norm.b) if power is not None else None

    def power_value(self) -> Optional[Fraction]:
        """(bound)**p as a Fraction, valid when p is an integer."""
        if self.norm.is_inf:
            return None
        if self.norm.b != 1:
            return None
        a = self.norm.a
        return sum(((w * self.side) ** a for w in self.norm.omega), Fraction(0))

    def upper(self, bits: int = 32) -> Fraction:
        """Certified rational upper bound on the diameter value."""
        if self.norm.is_inf:
            return self.side * max(self.norm.omega)
        from .exactmath import root_upper

        a, b = self.norm.a, self.norm.b
        # bound = (sum (w*side)^{a/b})^{b/a}; upper-bound each b-th root, then
        # the outer a-th root of the b-th power of the sum.
        inner_up = sum(
            (root_upper((w * self.side) ** a, b, bits) for w in self.norm.omega),
            Fraction(0),
        )
        return root_upper(inner_up ** b, a, bits)


def lp_cell_diameter(norm: WeightedNorm, side: Fraction) -> LpDiameter:
    """Upper bound on the distance of two points in a cube of given side."""
    if side <= 0:
        raise ValueError("side must be positive")
    return LpDiameter(norm, Fraction(side))


class ShellRelation(Enum):
    INSIDE_INNER = "inside_inner"
    WITHIN_SHELL = "within_shell"
    OUTSIDE_OUTER = "outside_outer"
    STRADDLES = "straddles"


class ShellPreconditionError(ValueError):
    """Raised when the sphere radius is below the cell diameter bound."""


def _norm_terms(
    deltas: Sequence[Fraction], norm: WeightedNorm, sign: int
) -> list[tuple[Fraction, Fraction]]:
    a = norm.a
    return [
        (Fraction(sign), (w * abs(dv)) ** a) for w, dv in zip(norm.omega, deltas)
    ]


def lp_shell_classify(
    center: Sequence[Fraction],
    r: Fraction,
    cell_origin: Sequence[Fraction],
    side: Fraction,
    norm: WeightedNorm,
) -> ShellRelation:
    """Classify a cube cell against an open Lp sphere of radius r.

    Requires r >= the cell diameter bound.  A cell meeting the sphere
    boundary is certified to lie inside the radius-(r+t) sphere and outside
    the open radius-(r-t) sphere, where t is the diameter bound; if that
    certification ever failed the cell would be reported as STRADDLES.
    """
    if len(center) != norm.d or len(cell_origin) != norm.d:
        raise ValueError("dimension mismatch")
    diam = lp_cell_diameter(norm, side)
    if diam.cmp(r) > 0:
        raise ShellPreconditionError("cell diameter bound exceeds sphere radius")

    near = []
    far = []
    for c, o in zip(center, cell_origin):
        c = Fraction(c)
        o = Fraction(o)
        hi = o + side
        near.append(Fraction(0) if o <= c <= hi else min(abs(c - o), abs(c - hi)))
        far.append(max(abs(c - o), abs(c - hi)))

    cmp_max = lp_norm_cmp(far, norm, r)
    if cmp_max < 0:
        return ShellRelation.INSIDE_INNER
    cmp_min = lp_norm_cmp(near, norm, r)
    if cmp_min >= 0:
        return ShellRelation.OUTSIDE_OUTER

    # Boundary meets the cell: verify ||far|| <= r + t and ||near|| >= r - t.
    diag = tuple(side for _ in range(norm.d))
    if norm.is_inf:
        t = side * max(norm.omega)
        ok_outer = max(w * dv for w, dv in zip(norm.omega, far)) <= r + t
        ok_inner = max(w * dv for w, dv in zip(norm.omega, near)) >= r - t
    else:
        b = norm.b
        outer_terms = _norm_terms(far, norm, 1) + _norm_terms(diag, norm, -1)
        ok_outer = cmp_radical_sum(outer_terms, b, r) <= 0
        inner_terms = _norm_terms(near, norm, 1) + _norm_terms(diag, norm, 1)
        ok_inner = cmp_radical_sum(inner_terms, b, r) >= 0
    if ok_outer and ok_inner:
        return ShellRelation.WITHIN_SHELL
    return ShellRelation.STRADDLES
