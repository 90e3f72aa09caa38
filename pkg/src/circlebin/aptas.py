"""Recursive grid packing scheme: grouping, bunch removal, per-layer packing,
free-cell bookkeeping, recombination; plus the aspect-ratio reduction, the
strip wrapper, and the resource-augmentation variant.

Circles are banded into size groups with exponentially decreasing radii,
one light bunch of groups is set aside and shelf-packed, and the remaining
maximal runs of consecutive groups become layers.  Layer j is packed by the
large-circle machinery into bins matching the level-j grid cells; cells not
touched by layer-j circles stay free for layer j+1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .exactmath import PI_LOW, sqrt_lower, sqrt_upper
from .geometry import Circle, Point2, Rect, RectRelation, circle_rect_relation
from .large import pack_large, pack_large_rounddown
from .nfdh import nfdh_pack_squares
from .oracle import FeasibilityBackend
from .verify import BinContent, Instance, Packing, satisfies_slack

# Free-cell bookkeeping guard: instances needing more cells than this are
# beyond desk scale for the grid scheme.
MAX_CELLS = 500_000


@dataclass(frozen=True)
class Plan:
    """Deterministic partition of an instance for the grid scheme."""

    r: int
    epsilon: Fraction
    gamma: Fraction
    t: int
    groups: Dict[int, List[int]]  # size band -> circle ids
    bunches: List[List[int]]  # index j in 0..r-1
    layers: List[List[int]]  # runs of consecutive groups, j = 0, 1, ...
    w: Fraction
    h: Fraction

    def level_size(self, j: int) -> Fraction:
        """Side w_j = h_j of level-j cells (level 0 is the bin itself)."""
        if j == 0:
            raise ValueError("level 0 is the bin itself (w x h)")
        e = self.epsilon
        return e ** (2 * (self.t + (j - 1) * self.r) + 1) * self.w

    @property
    def held_out(self) -> List[int]:
        return self.bunches[self.t]


def build_plan(
    inst: Instance, r: int, *, min_t: int = 0, area_factor: Fraction = Fraction(1)
) -> Plan:
    """Group circles by size band, pick the lightest bunch, cut layers.

    The bunch index t is the smallest t >= min_t whose circles' total area
    is at most area_factor * (1/r) times the instance area (the pi factor
    cancels, so the comparison is exact on squared radii).
    """
    if r < 3 or r % 3 != 0:
        raise ValueError("r must be a positive multiple of 3")
    if inst.w > inst.h:
        raise ValueError("requires w <= h")
    eps = Fraction(1, r)
    w = inst.w

    groups: Dict[int, List[int]] = {}
    for c in sorted(inst.circles, key=lambda c: c.id):
        i = 0
        while eps ** (2 * (i + 1)) * w >= 2 * c.radius:
            i += 1
        # now eps^(2i) w >= 2r > eps^(2(i+1)) w
        groups.setdefault(i, []).append(c.id)

    bunches: List[List[int]] = [[] for _ in range(r)]
    for i, ids in groups.items():
        bunches[i % r].extend(ids)
    for b in bunches:
        b.sort()

    sq = {c.id: c.radius * c.radius for c in inst.circles}
    total_sq = sum(sq.values(), Fraction(0))
    t = -1
    for cand in range(min_t, r):
        bunch_sq = sum((sq[i] for i in bunches[cand]), Fraction(0))
        if bunch_sq <= area_factor * eps * total_sq:
            t = cand
            break
    if t < 0:
        raise AssertionError("no qualifying bunch (pigeonhole violated?)")

    layers: List[List[int]] = []
    max_group = max(groups) if groups else -1
    j = 0
    while True:
        lo = t + (j - 1) * r + 1
        hi = t + j * r - 1
        if lo > max_group:
            break
        ids: List[int] = []
        for i in range(max(lo, 0), hi + 1):
            ids.extend(groups.get(i, []))
        layers.append(sorted(ids))
        j += 1
    while layers and not layers[-1]:
        layers.pop()
    return Plan(r, eps, Fraction(0), t, groups, bunches, layers, inst.w, inst.h)


@dataclass
class _Float:
    """A sub-bin with its own coordinate frame (level-0 floats are roots)."""

    id: int
    level: int
    width: Fraction
    height: Fraction
    placements: List[Tuple[int, Point2]] = field(default_factory=list)


@dataclass(frozen=True)
class CellAddress:
    host: int  # _Float id
    path: Tuple[Tuple[int, int], ...]  # per-level (col, row), column-major order

    def sort_key(self):
        return (self.host, self.path)


@dataclass
class _Cell:
    addr: CellAddress
    level: int
    origin: Point2  # local to host float
    width: Fraction
    height: Fraction


@dataclass
class GridState:
    """F_j / A_j / U_j bookkeeping plus the frame of every placed circle."""

    floats: List[_Float] = field(default_factory=list)
    free: Dict[int, List[_Cell]] = field(default_factory=dict)  # F_j
    new_bins: Dict[int, List[int]] = field(default_factory=dict)  # A_j float ids
    used: Dict[int, List[_Cell]] = field(default_factory=dict)  # U_j
    # circle id -> (layer j, host float id, level-j frame origin, local center)
    frames: Dict[int, Tuple[int, int, Point2, Point2]] = field(default_factory=dict)
    cells_created: int = 0


@dataclass
class WasteEntry:
    circle_id: int
    layer: int
    partial_cells: int
    shell_area_over_aug: Fraction  # Area(partial cells) / aug
    bound: Fraction  # 16 * eps * pi_low * r^2

    @property
    def ok(self) -> bool:
        return self.shell_area_over_aug <= self.bound


@dataclass
class Algo1Result:
    packing: Packing
    plan: Plan
    state: GridState
    audit: List[WasteEntry]
    free_cells_abs: Dict[int, List[Rect]]
    centers_abs: Dict[int, Tuple[int, Point2]]  # circle id -> (layer, center)
    strip_bins: List[BinContent]  # held-out strips in resource mode, else []


LayerPacker = Callable[[List[Circle], Fraction, Fraction], Packing]


def _grid_dims(
    width: Fraction, height: Fraction, cw: Fraction, ch: Fraction
) -> Tuple[int, int]:
    """Full columns/rows of a cw x ch grid inside width x height.

    Columns always divide exactly here; a fractional top row is dropped
    (those cells are marked unusable and never hold circles)."""
    cols_f = width / cw
    if cols_f.denominator != 1:
        raise AssertionError("grid columns must divide exactly")
    rows = (height / ch).__floor__()
    return int(cols_f), rows


def run_algorithm1(
    inst: Instance,
    r: int,
    gamma: Fraction,
    backend: Optional[FeasibilityBackend] = None,
    *,
    plan: Optional[Plan] = None,
    aug: Optional[Fraction] = None,
    layer_packer: Optional[LayerPacker] = None,
    held_out_strip_height: Optional[Fraction] = None,
) -> Algo1Result:
    """Run the grid scheme on (C, w, h) into bins of size w x aug*h.

    `aug` defaults to 1+gamma; `layer_packer` defaults to the large-circle
    routine with parameters (delta, 1/r, gamma).  When
    `held_out_strip_height` is set (resource mode), the held-out bunch is
    shelf-packed into strips of that height and returned separately instead
    of going to full bins.
    """
    if backend is None:
        backend = FeasibilityBackend()
    if inst.w > inst.h:
        raise ValueError("requires w <= h")
    eps = Fraction(1, r)
    if aug is None:
        aug = 1 + gamma
    if plan is None:
        plan = build_plan(inst, r)
    w, h = inst.w, inst.h
    by_id = {c.id: c for c in inst.circles}

    if layer_packer is None:

        def layer_packer(circles: List[Circle], bw: Fraction, bh: Fraction) -> Packing:
            sub = Instance(tuple(circles), bw, bh)
            delta = min(c.radius for c in circles)
            return pack_large(sub, delta, eps, gamma, backend).packing

    state = GridState()

    def add_float(level: int, width: Fraction, height: Fraction) -> _Float:
        f = _Float(len(state.floats), level, width, height)
        state.floats.append(f)
        return f

    def subdivide_region(
        host: _Float,
        path: Tuple[Tuple[int, int], ...],
        origin: Point2,
        width: Fraction,
        height: Fraction,
        j: int,
        cw: Fraction,
        ch: Fraction,
    ) -> List[_Cell]:
        cols, rows = _grid_dims(width, height, cw, ch)
        state.cells_created += cols * rows
        if state.cells_created > MAX_CELLS:
            raise RuntimeError("grid bookkeeping exceeds desk-scale cell cap")
        out = []
        for col in range(cols):
            for row in range(rows):
                o = Point2(origin.x + col * cw, origin.y + row * ch)
                out.append(
                    _Cell(CellAddress(host.id, path + ((col, row),)), j + 1, o, cw, ch)
                )
        return out

    last_layer = len(plan.layers) - 1
    for j, layer_ids in enumerate(plan.layers):
        level_w = w if j == 0 else plan.level_size(j)
        level_h = h if j == 0 else plan.level_size(j)
        bin_h = aug * level_h
        # (host float, region path, region origin, placements local to region)
        placed_bins: List[Tuple[_Float, Tuple, Point2, BinContent]] = []
        free_here = sorted(state.free.get(j, []), key=lambda c: c.addr.sort_key())
        state.new_bins[j] = []
        used_free = 0
        if layer_ids:
            circles = [by_id[i] for i in layer_ids]
            scale = level_w
            scaled = [Circle(c.id, c.radius / scale) for c in circles]
            local = layer_packer(scaled, Fraction(1), level_h / level_w)
            if local.bin_height > aug * level_h / level_w:
                raise AssertionError("layer bins exceed the cell height budget")
            sub_bins = [
                BinContent(
                    tuple(
                        (cid, Point2(p.x * scale, p.y * scale))
                        for cid, p in bc.placements
                    )
                )
                for bc in local.bins
            ]
            for k, bc in enumerate(sub_bins):
                if k < len(free_here):
                    cell = free_here[k]
                    host = state.floats[cell.addr.host]
                    path, origin = cell.addr.path, cell.origin
                    used_free += 1
                else:
                    f = add_float(j, level_w, bin_h)
                    state.new_bins[j].append(f.id)
                    host, path = f, ()
                    origin = Point2(Fraction(0), Fraction(0))
                host.placements.extend(
                    (cid, Point2(origin.x + p.x, origin.y + p.y))
                    for cid, p in bc.placements
                )
                for cid, p in bc.placements:
                    state.frames[cid] = (j, host.id, origin, p)
                placed_bins.append((host, path, origin, bc))
        leftover_free = free_here[used_free:]

        if not any(plan.layers[m] for m in range(j + 1, last_layer + 1)):
            break

        # classify level-(j+1) cells: free unless touching a layer-j circle
        cw = plan.level_size(j + 1)
        ch = aug * cw
        next_free: List[_Cell] = []
        state.used[j] = []
        for host, path, origin, bc in placed_bins:
            cells = subdivide_region(host, path, origin, level_w, bin_h, j, cw, ch)
            for cell in cells:
                rect = Rect(cell.origin, cell.width, cell.height)
                touched = False
                for cid, p in bc.placements:
                    center = Point2(origin.x + p.x, origin.y + p.y)
                    rel = circle_rect_relation(center, by_id[cid].radius, rect)
                    if rel != RectRelation.DISJOINT:
                        touched = True
                        break
                (state.used[j] if touched else next_free).append(cell)
        for cell in leftover_free:
            host = state.floats[cell.addr.host]
            next_free.extend(
                subdivide_region(
                    host, cell.addr.path, cell.origin, cell.width, cell.height,
                    j, cw, ch,
                )
            )
        state.free[j + 1] = next_free

    # assemble final bins -------------------------------------------------
    final_bins: List[List[Tuple[int, Point2]]] = []
    float_origin: Dict[int, Tuple[int, Point2]] = {}  # float id -> (bin, offset)
    target_h = aug * h
    roots = [f for f in state.floats if f.level == 0]
    for f in roots:
        float_origin[f.id] = (len(final_bins), Point2(Fraction(0), Fraction(0)))
        final_bins.append(list(f.placements))
    # first-fit decreasing height over the deeper sub-bins, fresh bins only
    deep = sorted(
        (f for f in state.floats if f.level > 0), key=lambda f: (-f.height, f.id)
    )
    bin_shelves: Dict[int, List[List[Fraction]]] = {}  # bin -> [y, height, cursor]
    for f in deep:
        placed = False
        for b_idx in sorted(bin_shelves):
            for shelf in bin_shelves[b_idx]:
                if shelf[1] >= f.height and shelf[2] + f.width <= w:
                    float_origin[f.id] = (b_idx, Point2(shelf[2], shelf[0]))
                    shelf[2] += f.width
                    placed = True
                    break
            if placed:
                break
            used_h = sum(s[1] for s in bin_shelves[b_idx])
            if used_h + f.height <= target_h:
                bin_shelves[b_idx].append([used_h, f.height, f.width])
                float_origin[f.id] = (b_idx, Point2(Fraction(0), used_h))
                placed = True
                break
        if not placed:
            b_idx = len(final_bins)
            final_bins.append([])
            bin_shelves[b_idx] = [[Fraction(0), f.height, f.width]]
            float_origin[f.id] = (b_idx, Point2(Fraction(0), Fraction(0)))
        b_idx, off = float_origin[f.id]
        final_bins[b_idx].extend(
            (cid, Point2(off.x + p.x, off.y + p.y)) for cid, p in f.placements
        )

    # held-out bunch: shelf-packed boxes in separate bins (or strips)
    held = [by_id[i] for i in plan.held_out]
    strip_bins: List[BinContent] = []
    if held:
        if held_out_strip_height is not None:
            strip_bins = nfdh_pack_squares(held, w, held_out_strip_height)
        else:
            for bc in nfdh_pack_squares(held, w, target_h):
                final_bins.append(list(bc.placements))

    bins = tuple(BinContent(tuple(b)) for b in final_bins if b)
    packing = Packing(bins, w, target_h)

    centers_abs: Dict[int, Tuple[int, Point2]] = {}
    for cid, (j, fid, origin, p) in state.frames.items():
        b_idx, off = float_origin[fid]
        centers_abs[cid] = (
            j,
            Point2(off.x + origin.x + p.x, off.y + origin.y + p.y),
        )
    free_abs: Dict[int, List[Rect]] = {}
    for lvl, cells in state.free.items():
        rects = []
        for cell in cells:
            if cell.addr.host not in float_origin:
                continue
            _, off = float_origin[cell.addr.host]
            rects.append(
                Rect(
                    Point2(off.x + cell.origin.x, off.y + cell.origin.y),
                    cell.width,
                    cell.height,
                )
            )
        free_abs[lvl] = rects

    audit = waste_audit(state, plan, aug, by_id)
    return Algo1Result(packing, plan, state, audit, free_abs, centers_abs, strip_bins)


def waste_audit(
    state: GridState,
    plan: Plan,
    aug: Fraction,
    by_id: Dict[int, Circle],
) -> List[WasteEntry]:
    """Per placed circle: total area of next-level cells that intersect it
    without being contained, compared against the 16-epsilon area bound
    (conservative pi side)."""
    eps = plan.epsilon
    out: List[WasteEntry] = []
    for cid, (j, fid, origin, center) in sorted(state.frames.items()):
        cw = plan.level_size(j + 1)
        ch = aug * cw
        level_w = plan.w if j == 0 else plan.level_size(j)
        level_h = (plan.h if j == 0 else plan.level_size(j)) * aug
        cols, rows = _grid_dims(level_w, level_h, cw, ch)
        radius = by_id[cid].radius
        count = _count_partial_cells(center, radius, cw, ch, cols, rows)
        area_over_aug = count * cw * cw  # (cw * ch)/aug = cw^2
        bound = 16 * eps * PI_LOW * radius * radius
        out.append(WasteEntry(cid, j, count, area_over_aug, bound))
    return out


def _count_partial_cells(
    center: Point2,
    radius: Fraction,
    cw: Fraction,
    ch: Fraction,
    cols: int,
    rows: int,
) -> int:
    """Cells of the cw x ch grid that the circle cuts without containing.

    Columns are scanned across the disk; candidate rows are narrowed with
    certified root bounds before the exact predicate runs.
    """
    r_sq = radius * radius
    c_lo = max(0, ((center.x - radius) / cw).__floor__())
    c_hi = min(cols - 1, ((center.x + radius) / cw).__floor__())
    count = 0
    for col in range(c_lo, c_hi + 1):
        x0 = col * cw
        x1 = x0 + cw
        dx_min = Fraction(0) if x0 <= center.x <= x1 else min(
            abs(center.x - x0), abs(center.x - x1)
        )
        rem = r_sq - dx_min * dx_min
        if rem <= 0:
            continue
        span_up = sqrt_upper(rem, 20)
        row_lo = max(0, ((center.y - span_up) / ch).__floor__())
        row_hi = min(rows - 1, ((center.y + span_up) / ch).__floor__())
        dx_max = max(abs(center.x - x0), abs(center.x - x1))
        inner = r_sq - dx_max * dx_max
        skip_lo, skip_hi = 1, 0
        if inner > 0:
            s_lo = sqrt_lower(inner, 20)
            skip_lo = ((center.y - s_lo) / ch).__ceil__()
            skip_hi = ((center.y + s_lo) / ch).__floor__() - 1
        for row in range(row_lo, row_hi + 1):
            if skip_lo <= row <= skip_hi:
                continue
            rect = Rect(Point2(x0, row * ch), cw, ch)
            if circle_rect_relation(center, radius, rect) == RectRelation.PARTIAL_OVERLAP:
                count += 1
    return count


def _verify_or_raise(inst: Instance, packing: Packing) -> None:
    if not satisfies_slack(
        inst.circles, packing.bins, packing.bin_width, packing.bin_height, Fraction(0)
    ):
        raise AssertionError("scheme output failed exact verification")


def pack_bins(
    inst: Instance,
    r: int,
    gamma: Fraction,
    backend: Optional[FeasibilityBackend] = None,
) -> Tuple[Packing, Dict]:
    """Bin packing into bins w x (1+gamma)h.

    Tall bins (h/w >= r^2) are reduced to sub-bins of height w*r, packed
    there, and the sub-bins re-stacked in groups; otherwise the grid scheme
    runs directly.  Returns the packing and a metadata dict.
    """
    if backend is None:
        backend = FeasibilityBackend()
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if inst.w > inst.h:
        raise ValueError("requires w <= h")
    if not inst.circles:
        return Packing((), inst.w, (1 + gamma) * inst.h), {"mode": "direct"}
    eps = Fraction(1, r)
    w, h = inst.w, inst.h
    if h / w < r * r:  # h/w < 1/eps^2: run directly
        res = run_algorithm1(inst, r, gamma, backend)
        _verify_or_raise(inst, res.packing)
        meta = {
            "mode": "direct",
            "t": res.plan.t,
            "levels": [
                str(res.plan.level_size(j)) for j in range(1, len(res.plan.layers) + 1)
            ],
        }
        return res.packing, meta

    # reduction: pack into sub-bins of size w x (w*r), then stack them
    sub_h = w * r
    sub_inst = Instance(inst.circles, w, sub_h)
    res = run_algorithm1(sub_inst, r, gamma, backend)
    _verify_or_raise(sub_inst, res.packing)
    per_bin = int(h / sub_h)  # floor; >= r since h/w >= r^2
    stacked: List[List[Tuple[int, Point2]]] = []
    step_y = (1 + gamma) * sub_h
    for idx, bc in enumerate(res.packing.bins):
        slot = idx % per_bin
        if slot == 0:
            stacked.append([])
        dy = slot * step_y
        stacked[-1].extend(
            (cid, Point2(p.x, p.y + dy)) for cid, p in bc.placements
        )
    packing = Packing(
        tuple(BinContent(tuple(b)) for b in stacked), w, (1 + gamma) * h
    )
    _verify_or_raise(inst, packing)
    return packing, {"mode": "reduction", "sub_height": str(sub_h), "per_bin": per_bin}


def pack_strip(
    circles: Sequence[Circle],
    r: int,
    gamma: Fraction,
    backend: Optional[FeasibilityBackend] = None,
) -> Tuple[Packing, Fraction, Dict]:
    """Pack circles into a unit-width strip; returns exact achieved height.

    Uses bins of size 1 x r internally and stacks them; the reported height
    is the exact top of the highest circle.
    """
    for c in circles:
        if 2 * c.radius > 1:
            raise ValueError(f"circle {c.id}: diameter exceeds strip width")
    if not circles:
        return Packing((), Fraction(1), Fraction(0)), Fraction(0), {"bins": 0}
    inst = Instance(tuple(circles), Fraction(1), Fraction(r))
    packing, meta = pack_bins(inst, r, gamma, backend)
    step_y = (1 + gamma) * Fraction(r)
    merged: List[Tuple[int, Point2]] = []
    for idx, bc in enumerate(packing.bins):
        dy = idx * step_y
        merged.extend((cid, Point2(p.x, p.y + dy)) for cid, p in bc.placements)
    radius = {c.id: c.radius for c in circles}
    achieved = max(p.y + radius[cid] for cid, p in merged)
    strip = Packing((BinContent(tuple(merged)),), Fraction(1), achieved)
    _verify_or_raise(inst, strip)
    return strip, achieved, {"bins": packing.num_bins, "mode": meta["mode"]}


def pack_resource_augmented(
    inst: Instance,
    r: int,
    backend: Optional[FeasibilityBackend] = None,
) -> Tuple[Packing, Dict]:
    """Resource-augmentation variant: height grows by O(eps) factors, and
    the bin count aims at the unaugmented optimum.

    Layers are packed by the round-down routine; the held-out bunch (chosen
    with t >= 1, doubled area budget) goes to shelf strips of height
    11*eps*h attached above the main bins.
    """
    if backend is None:
        backend = FeasibilityBackend()
    if inst.w > inst.h:
        raise ValueError("requires w <= h")
    if not inst.circles:
        return Packing((), inst.w, inst.h), {"mode": "resource"}
    eps = Fraction(1, r)
    w, h = inst.w, inst.h
    plan = build_plan(inst, r, min_t=1, area_factor=Fraction(2))
    kappa = (1 + eps) * (1 + 2 * eps)  # per-layer bin height budget factor

    def rounddown_packer(circles: List[Circle], bw: Fraction, bh: Fraction) -> Packing:
        sub = Instance(tuple(circles), bw, bh)
        delta = min(c.radius for c in circles)
        return pack_large_rounddown(sub, delta, eps, backend)

    res = run_algorithm1(
        inst,
        r,
        eps,
        backend,
        plan=plan,
        aug=kappa,
        layer_packer=rounddown_packer,
        held_out_strip_height=11 * eps * h,
    )
    # re-stack: FFD over sub-bins already done by run; final bins get the
    # taller budget, with one shelf strip attached above each if present
    main_bins = list(res.packing.bins)
    strip_h = 11 * eps * h
    main_h = (1 + 105 * eps) * kappa * h
    # run_algorithm1 stacked deep floats against target kappa*h; the extra
    # (1+105 eps) headroom is kept as recorded height budget
    out: List[List[Tuple[int, Point2]]] = [list(b.placements) for b in main_bins]
    has_strips = bool(res.strip_bins)
    for k, bc in enumerate(res.strip_bins):
        dy = main_h
        lifted = [(cid, Point2(p.x, p.y + dy)) for cid, p in bc.placements]
        if k < len(out):
            out[k].extend(lifted)
        else:
            out.append(lifted)
    height = main_h + strip_h if has_strips else main_h
    packing = Packing(tuple(BinContent(tuple(b)) for b in out), w, height)
    _verify_or_raise(inst, packing)
    meta = {
        "mode": "resource",
        "t": plan.t,
        "strips": len(res.strip_bins),
        "main_height": str(main_h),
        "height": str(height),
    }
    return packing, meta
