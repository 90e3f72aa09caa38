"""Next-Fit-Decreasing-Height shelf packing of circle bounding boxes."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

from .geometry import Circle, Point2
from .verify import BinContent


@dataclass
class Shelf:
    y_base: Fraction
    height: Fraction  # side of the first box placed on the shelf
    cursor_x: Fraction


def nfdh_pack_squares(
    circles: Sequence[Circle], w: Fraction, height: Fraction
) -> List[BinContent]:
    """Pack each circle's bounding box on shelves, largest sides first.

    A box that does not fit the current shelf opens a new shelf; a shelf
    that does not fit the remaining height opens a new bin.  Circles sit
    centered in their boxes, so the output is exactly valid as-is.
    """
    for c in circles:
        if 2 * c.radius > w or 2 * c.radius > height:
            raise ValueError(f"circle {c.id}: box exceeds bin size")
    order = sorted(circles, key=lambda c: (-c.radius, c.id))
    bins: List[List[Tuple[int, Point2]]] = []
    current: List[Tuple[int, Point2]] = []
    shelf = Shelf(Fraction(0), Fraction(0), Fraction(0))
    for c in order:
        s = 2 * c.radius
        if not current:
            shelf = Shelf(Fraction(0), s, Fraction(0))
        elif shelf.cursor_x + s > w:
            new_base = shelf.y_base + shelf.height
            if new_base + s > height:
                bins.append(current)
                current = []
                shelf = Shelf(Fraction(0), s, Fraction(0))
            else:
                shelf = Shelf(new_base, s, Fraction(0))
        current.append((c.id, Point2(shelf.cursor_x + c.radius, shelf.y_base + c.radius)))
        shelf.cursor_x += s
    if current:
        bins.append(current)
    return [BinContent(tuple(b)) for b in bins]


def box_density_per_bin(
    bins: Sequence[BinContent], radii: dict, w: Fraction, height: Fraction
) -> List[Fraction]:
    """Exact (sum of box areas) / (bin area) per bin."""
    area = w * height
    out = []
    for b in bins:
        boxes = sum(((2 * radii[i]) ** 2 for i, _ in b.placements), Fraction(0))
        out.append(boxes / area)
    return out


def nfdh_density_audit(
    bins: Sequence[BinContent], radii: dict, w: Fraction, height: Fraction
) -> Fraction:
    """Minimum box density over all non-last bins (needs >= 2 bins).

    Circle density is pi/4 of this value; callers bracket pi on whichever
    side keeps their threshold conservative.
    """
    if len(bins) < 2:
        raise ValueError("density audit needs at least two bins")
    dens = box_density_per_bin(bins[:-1], radii, w, height)
    return min(dens)
