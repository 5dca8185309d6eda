"""Integer box geometry: sub-box tilings with gaps and sublattice alignment.

A box of side n cornered at z is the site set z + {0,...,n-1}^d.  ``tile``
splits an outer box of side n into k^d aligned sub-boxes of side m whose
corners sit on the sublattice (ell*Z)^d, pairwise sup-norm distance strictly
greater than the gap g, plus the leftover margin sites.  All arithmetic is
exact integer arithmetic; the margin density rho is a Fraction.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .reports import VerificationReport

Site = tuple


@dataclass(frozen=True)
class Box:
    """Axis-aligned integer box: corner + [0, side)^dim."""

    corner: Site
    side: int
    dim: int

    @property
    def size(self) -> int:
        return self.side ** self.dim

    def sites(self):
        """All sites in lexicographic order."""
        ranges = [range(c, c + self.side) for c in self.corner]
        return [tuple(p) for p in itertools.product(*ranges)]

    def __contains__(self, site) -> bool:
        return all(c <= x < c + self.side for c, x in zip(self.corner, site))


def make_box(corner, side: int, dim: int) -> Box:
    corner = tuple(int(c) for c in corner)
    if dim not in (1, 2):
        raise ValueError(f"dim must be 1 or 2, got {dim}")
    if len(corner) != dim:
        raise ValueError(f"corner {corner} does not match dim {dim}")
    if side < 1:
        raise ValueError(f"side must be positive, got {side}")
    return Box(corner, int(side), dim)


def box_distance(a: Box, b: Box) -> int:
    """Sup-norm distance between two boxes (0 if they overlap or touch)."""
    gaps = []
    for axis in range(a.dim):
        alo, ahi = a.corner[axis], a.corner[axis] + a.side - 1
        blo, bhi = b.corner[axis], b.corner[axis] + b.side - 1
        gaps.append(max(0, blo - ahi, alo - bhi))
    # each axis can be bridged independently, so the set distance is the max gap
    return max(gaps)


@dataclass(frozen=True)
class Tiling:
    """Outer box split into aligned sub-boxes plus margin sites."""

    outer: Box
    inner_side: int
    gap: int
    step: int                  # sublattice step ell
    sub_boxes: tuple
    margin: tuple              # sorted margin sites S_0
    k: int                     # sub-boxes per axis
    remainder: int             # n - k*(m + g + ell)

    @property
    def rho(self) -> Fraction:
        """Exact margin density |S_0| / n^d."""
        return Fraction(len(self.margin), self.outer.size)


def tile(n: int, m: int, g_of_m: int, ell: int, dim: int, corner=None) -> Tiling:
    """Tile the side-n box with side-m sub-boxes cornered on (ell*Z)^dim.

    The outer box splits into k^dim cells of side m + g_of_m + ell; inside
    each cell the sub-box is cornered at the lexicographically least point of
    the sublattice.  Rejects n < m + g_of_m + ell (no cell fits).
    """
    if min(n, m, ell) < 1 or g_of_m < 0:
        raise ValueError(f"invalid tiling parameters n={n} m={m} g={g_of_m} ell={ell}")
    period = m + g_of_m + ell
    k, r = divmod(n, period)
    if k < 1:
        raise ValueError(
            f"outer side n={n} is smaller than one cell m+g+ell={period}")
    if corner is None:
        corner = (0,) * dim
    outer = make_box(corner, n, dim)

    sub_boxes = []
    covered = set()
    for idx in itertools.product(range(k), repeat=dim):
        cell_corner = tuple(c + i * period for c, i in zip(corner, idx))
        # least sublattice point of the cell, coordinatewise: ceil(c/ell)*ell
        sub_corner = tuple(-(-c // ell) * ell for c in cell_corner)
        for c_cell, c_sub in zip(cell_corner, sub_corner):
            if not (c_cell <= c_sub and c_sub + m <= c_cell + period):
                # cannot happen for cubic cells of side m+g+ell; guard anyway
                raise ValueError(
                    f"no sublattice placement for cell at {cell_corner} "
                    f"(m={m}, g={g_of_m}, ell={ell})")
        box = Box(sub_corner, m, dim)
        sub_boxes.append(box)
        covered.update(box.sites())

    margin = tuple(sorted(s for s in outer.sites() if s not in covered))
    return Tiling(outer=outer, inner_side=m, gap=g_of_m, step=ell,
                  sub_boxes=tuple(sub_boxes), margin=margin, k=k, remainder=r)


def rho_limit_check(m_values, n_of_m, g_of_m, ell: int = 1, dim: int = 1,
                    thresholds=(0.5, 0.2)) -> VerificationReport:
    """Measure rho along a volume schedule and test eventual smallness.

    For each threshold the check passes iff some index exists past which
    every measured rho is strictly below it.  The report records the exact
    densities and the g(m)/m ratios (the vanishing-gap hypothesis) so a
    violating schedule is visible, not just red.
    """
    g_fn = g_of_m if callable(g_of_m) else (lambda m: g_of_m)
    n_fn = n_of_m if callable(n_of_m) else (lambda m: n_of_m)
    rhos = []
    ratios = []
    for m in m_values:
        t = tile(n_fn(m), m, g_fn(m), ell, dim)
        rhos.append(float(t.rho))
        ratios.append(g_fn(m) / m)
    slacks = []
    per_threshold = {}
    for thr in thresholds:
        tail_ok = [all(r < thr for r in rhos[i:]) for i in range(len(rhos))]
        reached = any(tail_ok)
        first = tail_ok.index(True) if reached else None
        per_threshold[str(thr)] = {"reached": reached, "first_index": first}
        # slack: how far the final rho sits below the threshold
        slacks.append(thr - rhos[-1] if reached else thr - max(rhos))
    return VerificationReport.from_slacks(
        "rho-eventually-below-thresholds", slacks, tolerance=0.0,
        details={"m_values": list(m_values), "rho": rhos,
                 "gap_over_m": ratios, "thresholds": per_threshold})
