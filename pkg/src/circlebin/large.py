"""Bin packing when every radius is at least delta.

Configuration enumeration with oracle feasibility checks, an exact covering
IP, linear grouping for many distinct radii, and the radius round-down
variant used by the resource-augmentation scheme.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .exactmath import PI_LOW, ceil_div_fraction, sqrt_upper
from .geometry import Circle, Point2
from .lp import solve_cover_ip
from .nfdh import nfdh_pack_squares
from .oracle import (
    Configuration,
    FeasibilityBackend,
    Feasible,
    check_configuration,
)
from .repair import EpsilonPacking, repair_packing
from .verify import BinContent, Instance, Packing, satisfies_slack

# Full configuration enumeration is used only while the lattice stays below
# this size; beyond it a generated pool (shelf patterns, singletons, whole
# demand) feeds the covering IP instead.
CONFIG_ENUM_CAP = 600


class OracleIncompletenessError(RuntimeError):
    """No certified configuration covers some demanded radius class."""

    def __init__(self, radius: Fraction, context: str = "") -> None:
        self.radius = radius
        super().__init__(
            f"oracle could not certify any configuration covering radius {radius}"
            + (f" ({context})" if context else "")
        )


@dataclass(frozen=True)
class LargeParams:
    """Derived constants for a minimum radius delta (conservative pi side)."""

    delta: Fraction
    epsilon: Fraction
    gamma: Fraction
    M: int
    K_cap: int

    @staticmethod
    def derive(
        delta: Fraction, epsilon: Fraction, gamma: Fraction, w: Fraction, h: Fraction
    ) -> "LargeParams":
        if delta <= 0:
            raise ValueError("delta must be positive")
        area_low = PI_LOW * delta * delta
        m = ceil_div_fraction(w * h, area_low)
        k_cap = ceil_div_fraction(Fraction(2), epsilon * area_low)
        return LargeParams(delta, epsilon, gamma, m, k_cap)


@dataclass(frozen=True)
class CoverIPInstance:
    feasible_configs: Tuple[Configuration, ...]
    demands: Tuple[int, ...]


@dataclass
class _ConfigTemplate:
    """A certified per-bin layout for one configuration."""

    config: Configuration
    slots: List[Tuple[int, Point2]]  # (class index, center)
    height: Fraction  # exact bin height the layout verifies in


@dataclass
class FixedRadiiResult:
    packing: Packing
    templates: List[_ConfigTemplate]
    counts: List[int]
    demands: Tuple[int, ...]
    class_radii: Tuple[Fraction, ...]


def _enumerate_configs(
    class_radii: Sequence[Fraction],
    demands: Sequence[int],
    m_cap: int,
    w: Fraction,
    h: Fraction,
) -> Optional[List[Tuple[int, ...]]]:
    """All demand-capped count vectors with total <= m_cap that pass the
    area filter, or None when the lattice exceeds CONFIG_ENUM_CAP."""
    bin_area = w * h
    out: List[Tuple[int, ...]] = []

    def rec(idx: int, left: int, acc: List[int], area: Fraction) -> bool:
        if idx == len(class_radii):
            if any(acc):
                out.append(tuple(acc))
            return len(out) <= CONFIG_ENUM_CAP
        r = class_radii[idx]
        unit = PI_LOW * r * r
        for c in range(0, min(demands[idx], left) + 1):
            new_area = area + c * unit
            if new_area > bin_area:
                break
            acc.append(c)
            ok = rec(idx + 1, left - c, acc, new_area)
            acc.pop()
            if not ok:
                return False
        return True

    if not rec(0, m_cap, [], Fraction(0)):
        return None
    return out


def _template_from_exact(
    config: Configuration, centers: Sequence[Point2], height: Fraction
) -> _ConfigTemplate:
    slots = []
    pos = 0
    for ci, count in enumerate(config.counts):
        for _ in range(count):
            slots.append((ci, centers[pos]))
            pos += 1
    return _ConfigTemplate(config, slots, height)


def _certify_config(
    config: Configuration,
    w: Fraction,
    h: Fraction,
    gamma: Fraction,
    eps_repair: Fraction,
    alpha: Fraction,
    backend: FeasibilityBackend,
) -> Optional[_ConfigTemplate]:
    """Oracle + repair: a verified layout in w x (1+gamma)h, or None."""
    radii = config.expand()
    if len(radii) == 1:
        return _template_from_exact(config, [Point2(w / 2, radii[0])], h)
    circles = [Circle(i, r) for i, r in enumerate(radii)]
    nfdh_bins = nfdh_pack_squares(circles, w, h)
    if len(nfdh_bins) == 1:
        centers = [None] * len(radii)
        for cid, p in nfdh_bins[0].placements:
            centers[cid] = p
        return _template_from_exact(config, centers, h)
    verdict = check_configuration(config, w, h, alpha, backend)
    if not isinstance(verdict, Feasible):
        return None
    if verdict.exact:
        centers = [p for _, p in sorted(verdict.packing.placements)]
        return _template_from_exact(config, centers, h)
    repaired, height = repair_packing(circles, verdict.packing, eps_repair)
    limit = (1 + gamma) * h
    if height > limit:
        return None
    centers = [None] * len(radii)
    for cid, p in repaired.placements:
        centers[cid] = p
    return _template_from_exact(config, centers, height)


def _pool_configs(
    class_radii: Sequence[Fraction],
    demands: Sequence[int],
    w: Fraction,
    h: Fraction,
) -> List[_ConfigTemplate]:
    """Shelf-pattern and singleton templates; all exactly valid in w x h."""
    templates: List[_ConfigTemplate] = []
    seen: set = set()
    # one template per radius class (coverage guarantee)
    for ci, r in enumerate(class_radii):
        counts = tuple(1 if j == ci else 0 for j in range(len(class_radii)))
        cfg = Configuration(tuple(class_radii), counts)
        templates.append(_template_from_exact(cfg, [Point2(w / 2, h / 2)], h))
        seen.add(counts)
    # shelf patterns over the whole demand
    circles = []
    cid = 0
    for ci, (r, n) in enumerate(zip(class_radii, demands)):
        for _ in range(n):
            circles.append((Circle(cid, r), ci))
            cid += 1
    class_of = {c.id: ci for c, ci in circles}
    bins = nfdh_pack_squares([c for c, _ in circles], w, h)
    for bc in bins:
        counts = [0] * len(class_radii)
        for cid2, _ in bc.placements:
            counts[class_of[cid2]] += 1
        key = tuple(counts)
        if key in seen:
            continue
        seen.add(key)
        cfg = Configuration(tuple(class_radii), key)
        slots = [(class_of[cid2], p) for cid2, p in bc.placements]
        templates.append(_ConfigTemplate(cfg, slots, h))
    return templates


def _instantiate(
    templates: Sequence[_ConfigTemplate],
    counts: Sequence[int],
    ids_by_class: Dict[int, List[int]],
    bin_width: Fraction,
    bin_height: Fraction,
) -> Packing:
    """Fill template copies with concrete circle ids (per class, ascending)."""
    queues = {ci: list(ids) for ci, ids in ids_by_class.items()}
    bins: List[BinContent] = []
    for tmpl, count in zip(templates, counts):
        for _ in range(count):
            placements = []
            for ci, center in tmpl.slots:
                if queues.get(ci):
                    placements.append((queues[ci].pop(0), center))
                # surplus slots stay empty
            if placements:
                bins.append(BinContent(tuple(placements)))
    leftovers = [cid for q in queues.values() for cid in q]
    if leftovers:
        raise AssertionError(f"unassigned circles {leftovers}")
    return Packing(tuple(bins), bin_width, bin_height)


def pack_fixed_radii(
    inst: Instance,
    gamma: Fraction,
    backend: Optional[FeasibilityBackend] = None,
    params: Optional[LargeParams] = None,
) -> FixedRadiiResult:
    """Pack an instance with few distinct radii into bins w x (1+gamma)h.

    Enumerates configurations (or falls back to a generated pool when the
    lattice is large), certifies each via the oracle plus repair, solves the
    covering IP exactly, and instantiates the chosen templates.
    """
    if backend is None:
        backend = FeasibilityBackend()
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    w, h = inst.w, inst.h
    if not inst.circles:
        return FixedRadiiResult(Packing((), w, (1 + gamma) * h), [], [], (), ())

    class_radii = tuple(sorted({c.radius for c in inst.circles}, reverse=True))
    ids_by_class: Dict[int, List[int]] = {ci: [] for ci in range(len(class_radii))}
    index = {r: ci for ci, r in enumerate(class_radii)}
    for c in sorted(inst.circles, key=lambda c: c.id):
        ids_by_class[index[c.radius]].append(c.id)
    demands = tuple(len(ids_by_class[ci]) for ci in range(len(class_radii)))

    delta = min(class_radii)
    if params is not None and len(class_radii) > params.K_cap:
        raise ValueError("distinct radii exceed the class cap")
    if params is None:
        params = LargeParams.derive(delta, Fraction(1), gamma, w, h)
    m_cap = min(params.M, sum(demands))
    eps_repair = gamma * gamma / (6 * params.M * params.M)
    alpha = eps_repair * h / 4

    vectors = _enumerate_configs(class_radii, demands, m_cap, w, h)
    templates: List[_ConfigTemplate] = []
    if vectors is None:
        templates = _pool_configs(class_radii, demands, w, h)
    else:
        for vec in sorted(vectors):
            cfg = Configuration(class_radii, vec)
            tmpl = _certify_config(cfg, w, h, gamma, eps_repair, alpha, backend)
            if tmpl is not None:
                templates.append(tmpl)

    for ci, r in enumerate(class_radii):
        if demands[ci] > 0 and not any(
            t.config.counts[ci] > 0 for t in templates
        ):
            raise OracleIncompletenessError(r)

    counts = solve_cover_ip([t.config.counts for t in templates], demands)
    packing = _instantiate(templates, counts, ids_by_class, w, (1 + gamma) * h)
    if not satisfies_slack(
        inst.circles, packing.bins, w, (1 + gamma) * h, Fraction(0)
    ):
        raise AssertionError("fixed-radii packing failed exact verification")
    return FixedRadiiResult(packing, templates, counts, demands, class_radii)


@dataclass
class LargeResult:
    packing: Packing
    surrogate_radius: Dict[int, Fraction]  # id -> radius of the slot it uses


def pack_large(
    inst: Instance,
    delta: Fraction,
    epsilon: Fraction,
    gamma: Fraction,
    backend: Optional[FeasibilityBackend] = None,
) -> LargeResult:
    """Pack circles with radius >= delta into bins w x (1+gamma)h.

    Small inputs go straight to the fixed-radii routine; larger ones are
    linearly grouped, rounded down to group minima, packed, and mapped back
    with each circle taking the slot of a surrogate of non-smaller radius.
    """
    if backend is None:
        backend = FeasibilityBackend()
    for c in inst.circles:
        if c.radius < delta:
            raise ValueError(f"circle {c.id}: radius below delta")
    if not inst.circles:
        return LargeResult(Packing((), inst.w, (1 + gamma) * inst.h), {})

    params = LargeParams.derive(delta, epsilon, gamma, inst.w, inst.h)
    n = inst.n
    if n <= params.K_cap:
        res = pack_fixed_radii(inst, gamma, backend, params)
        return LargeResult(res.packing, {c.id: c.radius for c in inst.circles})

    area_low = PI_LOW * delta * delta
    q = int(epsilon * n * area_low)  # floor; > 1 since n > K_cap
    order = sorted(inst.circles, key=lambda c: (-c.radius, c.id))
    groups = [order[i : i + q] for i in range(0, n, q)]
    rounded_map: Dict[int, Fraction] = {}
    for g in groups:
        gmin = min(c.radius for c in g)
        for c in g:
            rounded_map[c.id] = gmin
    rounded = Instance(
        tuple(Circle(c.id, rounded_map[c.id]) for c in inst.circles), inst.w, inst.h
    )
    res = pack_fixed_radii(rounded, gamma, backend)

    # slot positions of every rounded circle
    position: Dict[int, Tuple[int, Point2]] = {}
    for b_idx, bc in enumerate(res.packing.bins):
        for cid, p in bc.placements:
            position[cid] = (b_idx, p)

    new_bins: List[List[Tuple[int, Point2]]] = [
        [] for _ in range(res.packing.num_bins)
    ]
    surrogate: Dict[int, Fraction] = {}
    # first group: one circle per fresh bin
    for c in groups[0]:
        new_bins.append([(c.id, Point2(inst.w / 2, inst.h / 2))])
        surrogate[c.id] = c.radius
    # others: take the slot of the same-rank circle in the previous group
    for gi in range(1, len(groups)):
        prev = groups[gi - 1]
        for rank, c in enumerate(groups[gi]):
            host = prev[rank]
            b_idx, p = position[host.id]
            new_bins[b_idx].append((c.id, p))
            surrogate[c.id] = rounded_map[host.id]
            if surrogate[c.id] < c.radius:
                raise AssertionError("surrogate radius smaller than circle")

    bins = tuple(BinContent(tuple(b)) for b in new_bins if b)
    packing = Packing(bins, inst.w, (1 + gamma) * inst.h)
    if not satisfies_slack(
        inst.circles, packing.bins, inst.w, (1 + gamma) * inst.h, Fraction(0)
    ):
        raise AssertionError("grouped packing failed exact verification")
    return LargeResult(packing, surrogate)


def pack_large_rounddown(
    inst: Instance,
    delta: Fraction,
    epsilon: Fraction,
    backend: Optional[FeasibilityBackend] = None,
) -> Packing:
    """Round radii down to a delta-anchored grid, pack, restore, and lift.

    Output height is (1+epsilon)h times the exact augmentation factor of the
    per-bin lift; never more bins than the rounded instance needs.
    """
    if backend is None:
        backend = FeasibilityBackend()
    for c in inst.circles:
        if c.radius < delta:
            raise ValueError(f"circle {c.id}: radius below delta")
    w, h = inst.w, inst.h
    if not inst.circles:
        return Packing((), w, (1 + epsilon) * h)

    params = LargeParams.derive(delta, epsilon, epsilon, w, h)
    alpha_grid = epsilon * epsilon / (6 * params.M * params.M)
    rounded_map: Dict[int, Fraction] = {}
    for c in inst.circles:
        steps = (c.radius - delta) / alpha_grid
        k = steps.numerator // steps.denominator  # floor
        rounded_map[c.id] = delta + k * alpha_grid
    rounded = Instance(
        tuple(Circle(c.id, rounded_map[c.id]) for c in inst.circles), w, h
    )
    res = pack_fixed_radii(rounded, epsilon, backend)
    h1 = (1 + epsilon) * h

    # restoring original radii gives a 2*alpha_grid-slack packing in w x h1
    circles_by_id = {c.id: c for c in inst.circles}
    out_bins: List[BinContent] = []
    height_out = h1
    eps2 = 2 * alpha_grid / h1
    for bc in res.packing.bins:
        members = [circles_by_id[cid] for cid, _ in bc.placements]
        ep = EpsilonPacking(bc.placements, 2 * alpha_grid, (w, h1))
        repaired, bin_h = repair_packing(members, ep, eps2)
        out_bins.append(repaired)
        height_out = max(height_out, bin_h)

    packing = Packing(tuple(out_bins), w, height_out)
    if not satisfies_slack(inst.circles, packing.bins, w, height_out, Fraction(0)):
        raise AssertionError("round-down packing failed exact verification")
    return packing
