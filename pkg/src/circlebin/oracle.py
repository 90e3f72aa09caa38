"""Configuration feasibility oracle: sound, incomplete, exactly certified.

Feasible verdicts carry rational centers that pass an exact slack check;
ProvenInfeasible verdicts carry exactly recheckable certificates (area or
pairwise distance).  Anything else is Unknown, which callers treat as
infeasible — that can cost extra bins but never invalid output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .exactmath import PI_LOW, dyadic_snap
from .geometry import Circle, Point2, dist_sq
from .repair import EpsilonPacking
from .verify import BinContent, satisfies_slack


@dataclass(frozen=True)
class Configuration:
    """Counts per radius class that share one bin."""

    radii: Tuple[Fraction, ...]  # distinct class radii, descending
    counts: Tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.radii) != len(self.counts):
            raise ValueError("radii/counts length mismatch")
        if any(c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative")

    @property
    def size(self) -> int:
        return sum(self.counts)

    def expand(self) -> List[Fraction]:
        """One radius per circle slot, class order."""
        out: List[Fraction] = []
        for r, c in zip(self.radii, self.counts):
            out.extend([r] * c)
        return out


@dataclass(frozen=True)
class AreaExceeded:
    total_area_low: Fraction  # certified lower bound on the circles' area
    bin_area: Fraction

    def recheck(self) -> bool:
        return self.total_area_low > self.bin_area


@dataclass(frozen=True)
class PairwiseLowerBound:
    """Two radii whose required distance exceeds the reachable maximum."""

    r1: Fraction
    r2: Fraction
    max_dist_sq: Fraction  # max squared distance between admissible centers

    def recheck(self) -> bool:
        s = self.r1 + self.r2
        return s * s > self.max_dist_sq


@dataclass(frozen=True)
class Feasible:
    packing: EpsilonPacking
    exact: bool  # True when the placement also verifies at zero slack


@dataclass(frozen=True)
class ProvenInfeasible:
    certificate: Union[AreaExceeded, PairwiseLowerBound]


@dataclass(frozen=True)
class Unknown:
    budget_spent: int


OracleVerdict = Union[Feasible, ProvenInfeasible, Unknown]


@dataclass(frozen=True)
class FeasibilityBackend:
    """Backend selection plus tunables; deterministic given the seed."""

    kind: str = "continuous"  # or "grid"
    seed: int = 0
    restarts: int = 4
    max_iters: int = 1500
    node_budget: int = 200_000


_verdict_cache: Dict[tuple, OracleVerdict] = {}


def clear_cache() -> None:
    _verdict_cache.clear()


def _area_certificate(radii: Sequence[Fraction], w: Fraction, h: Fraction):
    total = sum((PI_LOW * r * r for r in radii), Fraction(0))
    if total > w * h:
        return AreaExceeded(total, w * h)
    return None


def _pairwise_certificate(radii: Sequence[Fraction], w: Fraction, h: Fraction):
    """Max distance between admissible centers is corner-to-corner of the
    shrunken rectangles [r, w-r] x [r, h-r]; exceeded radius sums certify
    infeasibility."""
    for r1, r2 in itertools.combinations(sorted(radii, reverse=True), 2):
        dx = w - r1 - r2  # >= |r1 - r2| since w >= 2*max(r1, r2)
        dy = h - r1 - r2
        max_d2 = dx * dx + dy * dy
        s = r1 + r2
        if s * s > max_d2:
            return PairwiseLowerBound(r1, r2, max_d2)
    # identical-radius pairs are covered by combinations of the multiset
    return None


def _snap_step(alpha: Fraction) -> Fraction:
    """Smallest power of two >= alpha/2 (so denominators stay <= 2/alpha)."""
    half = alpha / 2
    step = Fraction(1)
    while step < half:
        step *= 2
    while step / 2 >= half:
        step /= 2
    return step


def _centers_to_packing(
    radii: Sequence[Fraction],
    centers: Sequence[Point2],
    w: Fraction,
    h: Fraction,
    alpha: Fraction,
) -> Tuple[Optional[Feasible], Tuple[Circle, ...]]:
    """Gate: exact verification of the 4*alpha slack; also records exactness."""
    circles = tuple(Circle(i, r) for i, r in enumerate(radii))
    placements = tuple((i, c) for i, c in enumerate(centers))
    bins = [BinContent(placements)]
    slack = 4 * alpha
    if not satisfies_slack(circles, bins, w, h, slack):
        return None, circles
    exact = satisfies_slack(circles, bins, w, h, Fraction(0))
    ep = EpsilonPacking(placements, slack, (w, h))
    return Feasible(ep, exact), circles


def _nfdh_centers(
    radii: Sequence[Fraction], w: Fraction, h: Fraction
) -> Optional[List[Point2]]:
    """Shelf layout of the bounding boxes; exact solution when it fits."""
    order = sorted(range(len(radii)), key=lambda i: (-radii[i], i))
    centers: Dict[int, Point2] = {}
    y = Fraction(0)
    shelf_h = Fraction(0)
    x = Fraction(0)
    for i in order:
        s = 2 * radii[i]
        if shelf_h == 0:
            shelf_h = s
        if x + s > w:
            y += shelf_h
            shelf_h = s
            x = Fraction(0)
        if y + s > h:
            return None
        centers[i] = Point2(x + s / 2, y + s / 2)
        x += s
    return [centers[i] for i in range(len(radii))]


def _structured_inits(radii_f: np.ndarray, w_f: float, h_f: float) -> List[np.ndarray]:
    m = len(radii_f)
    inits = []
    # corner anchors, largest first
    anchors = [
        (0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0),
        (0.5, 0.5), (0.5, 0.0), (0.5, 1.0), (0.0, 0.5), (1.0, 0.5),
    ]
    pos = np.zeros((m, 2))
    order = np.argsort(-radii_f, kind="stable")
    for slot, i in enumerate(order):
        ax, ay = anchors[slot % len(anchors)]
        r = radii_f[i]
        pos[i] = [r + ax * (w_f - 2 * r), r + ay * (h_f - 2 * r)]
    inits.append(pos.copy())
    # square lattice
    k = int(np.ceil(np.sqrt(m)))
    pos2 = np.zeros((m, 2))
    for slot, i in enumerate(order):
        gx, gy = slot % k, slot // k
        pos2[i] = [(gx + 0.5) * w_f / k, (gy + 0.5) * h_f / k]
    inits.append(pos2)
    return inits


def _relax(
    radii_f: np.ndarray,
    w_f: float,
    h_f: float,
    pos: np.ndarray,
    max_iters: int,
    tol: float,
) -> Tuple[np.ndarray, float]:
    """Push-apart relaxation on the squared-overlap penalty with projection."""
    m = len(radii_f)
    lo = radii_f[:, None] * np.ones((m, 2))
    hi = np.stack([w_f - radii_f, h_f - radii_f], axis=1)
    pos = np.clip(pos, lo, hi)
    if m == 1:
        return pos, 0.0
    rsum = radii_f[:, None] + radii_f[None, :]
    eye = np.eye(m, dtype=bool)
    best = np.inf
    stale = 0
    for _ in range(max_iters):
        diff = pos[:, None, :] - pos[None, :, :]
        d = np.sqrt(np.maximum((diff ** 2).sum(axis=2), 1e-30))
        deficit = np.maximum(rsum - d, 0.0)
        deficit[eye] = 0.0
        pen = float((deficit ** 2).sum()) / 2.0
        if pen <= tol:
            return np.clip(pos, lo, hi), pen
        if pen < best * (1 - 1e-4):
            best = pen
            stale = 0
        else:
            stale += 1
            if stale > 220:
                break
        push = (deficit / d)[:, :, None] * diff
        pos = pos + 0.55 * push.sum(axis=1)
        pos = np.clip(pos, lo, hi)
    return np.clip(pos, lo, hi), pen


def continuous_backend(
    radii: Sequence[Fraction],
    w: Fraction,
    h: Fraction,
    alpha: Fraction,
    backend: FeasibilityBackend,
) -> Optional[Feasible]:
    """Multi-start penalized relaxation, then a certified dyadic snap.

    Emits Feasible only after the snapped rational centers pass the exact
    4*alpha slack check; never a source of unsoundness.
    """
    m = len(radii)
    if m == 0:
        return Feasible(EpsilonPacking((), 4 * alpha, (w, h)), True)
    if m == 1:
        centers = [Point2(w / 2, h / 2)]
        verdict, _ = _centers_to_packing(radii, centers, w, h, alpha)
        return verdict
    nfdh = _nfdh_centers(radii, w, h)
    if nfdh is not None:
        verdict, _ = _centers_to_packing(radii, nfdh, w, h, alpha)
        if verdict is not None:
            return verdict

    radii_f = np.array([float(r) for r in radii])
    w_f, h_f = float(w), float(h)
    step = _snap_step(alpha)
    tol = max(float(alpha) ** 2 / 16.0, 1e-24)
    starts = _structured_inits(radii_f, w_f, h_f)
    for k in range(backend.restarts):
        rng = np.random.default_rng(np.random.SeedSequence([backend.seed, k, m]))
        pos = np.stack(
            [
                radii_f + rng.random(m) * (w_f - 2 * radii_f),
                radii_f + rng.random(m) * (h_f - 2 * radii_f),
            ],
            axis=1,
        )
        starts.append(pos)
    for pos0 in starts:
        pos, pen = _relax(radii_f, w_f, h_f, pos0, backend.max_iters, tol)
        if pen > tol * 64:
            continue
        centers = [
            Point2(
                min(max(dyadic_snap(float(p[0]), step), Fraction(0)), w),
                min(max(dyadic_snap(float(p[1]), step), Fraction(0)), h),
            )
            for p in pos
        ]
        verdict, circles = _centers_to_packing(radii, centers, w, h, alpha)
        if verdict is not None:
            if not verdict.exact:
                clamped = [
                    Point2(
                        min(max(c.x, r), w - r),
                        min(max(c.y, r), h - r),
                    )
                    for c, r in zip(centers, radii)
                ]
                v2, _ = _centers_to_packing(radii, clamped, w, h, alpha)
                if v2 is not None and v2.exact:
                    return v2
            return verdict
    return None


def grid_backend(
    radii: Sequence[Fraction],
    w: Fraction,
    h: Fraction,
    alpha: Fraction,
    backend: FeasibilityBackend,
    slack: Optional[Fraction] = None,
) -> OracleVerdict:
    """Exhaustive dyadic-grid search with exact pruning (reference backend).

    Centers range over the step-(<= alpha) dyadic grid plus the exact corner
    and midpoint anchors of each circle's admissible rectangle.  Enforced
    to at most 5 circles; exceeding the node budget yields Unknown.
    """
    m = len(radii)
    if m > 5:
        raise ValueError("grid backend is limited to 5 circles")
    if m == 0:
        return Feasible(EpsilonPacking((), 4 * alpha, (w, h)), True)
    step = _snap_step(alpha)
    order = sorted(range(m), key=lambda i: (-radii[i], i))
    nodes = [0]

    def search_at(slk: Fraction) -> Optional[List[Point2]]:
        def candidates(r: Fraction) -> List[Point2]:
            xs = set()
            ys = set()
            for lo, hi, vals in (
                (r - slk, w - r + slk, xs),
                (r - slk, h - r + slk, ys),
            ):
                k0 = (lo / step).__ceil__()
                k1 = (hi / step).__floor__()
                vals.update(k * step for k in range(k0, k1 + 1))
            xs.update((r, w - r, w / 2))
            ys.update((r, h - r, h / 2))
            xlist = sorted(v for v in xs if r - slk <= v <= w - r + slk)
            ylist = sorted(v for v in ys if r - slk <= v <= h - r + slk)
            if len(xlist) * len(ylist) > 65536:
                raise _BudgetExhausted
            return [Point2(x, y) for x in xlist for y in ylist]

        cand = {i: candidates(radii[i]) for i in order}
        placed: Dict[int, Point2] = {}

        def admissible(i: int, p: Point2) -> bool:
            for j, q in placed.items():
                need = radii[i] + radii[j] - slk
                if need > 0 and dist_sq(p, q) < need * need:
                    return False
            return True

        def rec(k: int) -> bool:
            if k == m:
                return True
            i = order[k]
            for p in cand[i]:
                nodes[0] += 1
                if nodes[0] > backend.node_budget:
                    raise _BudgetExhausted
                if admissible(i, p):
                    placed[i] = p
                    if rec(k + 1):
                        return True
                    del placed[i]
            return False

        return [placed[i] for i in range(m)] if rec(0) else None

    slacks = [Fraction(0)]
    if slack is None:
        slacks.append(4 * alpha)
    elif slack > 0:
        slacks.append(slack)
    try:
        for slk in slacks:
            centers = search_at(slk)
            if centers is not None:
                verdict, _ = _centers_to_packing(radii, centers, w, h, alpha)
                if verdict is not None:
                    return verdict
    except _BudgetExhausted:
        return Unknown(nodes[0])
    return Unknown(nodes[0])


class _BudgetExhausted(Exception):
    pass


def check_configuration(
    cfg: Configuration,
    w: Fraction,
    h: Fraction,
    alpha: Fraction,
    backend: Optional[FeasibilityBackend] = None,
    budget: Optional[int] = None,
) -> OracleVerdict:
    """Decide whether the configuration fits a w x h bin.

    Feasible verdicts carry a 4*alpha-slack packing with dyadic rational
    centers; ProvenInfeasible certificates re-validate exactly; Unknown
    means neither was established within budget.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if backend is None:
        backend = FeasibilityBackend()
    if budget is not None:
        backend = FeasibilityBackend(
            backend.kind, backend.seed, backend.restarts, backend.max_iters, budget
        )
    radii = cfg.expand()
    for r in radii:
        if 2 * r > min(w, h):
            raise ValueError("configuration radius exceeds bin")
    key = (tuple(sorted(radii)), w, h, alpha, backend)
    if key in _verdict_cache:
        return _verdict_cache[key]

    verdict: OracleVerdict
    cert = _area_certificate(radii, w, h)
    if cert is not None:
        verdict = ProvenInfeasible(cert)
    else:
        pcert = _pairwise_certificate(radii, w, h)
        if pcert is not None:
            verdict = ProvenInfeasible(pcert)
        elif backend.kind == "grid" and len(radii) <= 5:
            verdict = grid_backend(radii, w, h, alpha, backend)
        else:
            feas = continuous_backend(radii, w, h, alpha, backend)
            verdict = feas if feas is not None else Unknown(backend.restarts)
    _verdict_cache[key] = verdict
    return verdict


def part_fits_exactly(
    radii: Sequence[Fraction],
    w: Fraction,
    h: Fraction,
    alpha: Fraction,
    backend: FeasibilityBackend,
) -> bool:
    """Zero-slack certificate that a multiset of radii shares one w x h bin.

    Used by the brute-force optimum: admits a part only with an exactly
    valid placement in the unaugmented bin.
    """
    if len(radii) == 0:
        return True
    if len(radii) == 1:
        return 2 * radii[0] <= min(w, h)
    if _area_certificate(radii, w, h) is not None:
        return False
    if _pairwise_certificate(radii, w, h) is not None:
        return False
    if _nfdh_centers(radii, w, h) is not None:
        return True
    feas = continuous_backend(radii, w, h, alpha, backend)
    if feas is not None and feas.exact:
        return True
    if len(radii) <= 4:
        coarse = max(alpha, Fraction(1, 32))
        v = grid_backend(radii, w, h, coarse, backend, slack=Fraction(0))
        if isinstance(v, Feasible) and v.exact:
            return True
    return False
