"""Reduction to bounded geometry between concentric balls.

The curve is cut by the sphere of radius ``rho_prime``; inside, we keep the
part in the ball of radius ``rho`` together with the pieces of the shell
``rho <= |p| <= rho_prime`` that touch the inner sphere.  ``rho_prime`` is
picked from a finite candidate list by minimal boundary length.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .surface_mesh import (DiscreteCurve, compute_stats, label_components,
                           slice_by_sphere, split_by_sphere)

log = logging.getLogger(__name__)


@dataclass
class TrimParams:
    rho: float = 0.55
    rho_prime_candidates: tuple = (0.9, 0.93, 0.96)
    budget: float = 10.0

    def __post_init__(self):
        cands = sorted(float(r) for r in self.rho_prime_candidates)
        if not cands:
            raise ValueError("need at least one rho' candidate")
        if not (0 < self.rho < cands[0] and cands[-1] < 1):
            raise ValueError("need 0 < rho < min(rho') <= max(rho') < 1")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        self.rho_prime_candidates = tuple(cands)


@dataclass
class TrimReport:
    rho: float
    rho_prime_selected: float
    L: float
    G: int
    B: int
    A: float
    ratio: float
    within_budget: bool
    boundary_on_sphere: bool
    glued_components: int
    dropped_components: int
    candidates: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def _trim_at(curve: DiscreteCurve, rho: float, rho_prime: float):
    outer = slice_by_sphere(curve, rho_prime)
    if outer.is_empty:
        return outer, 0, 0
    split, inside, _ = split_by_sphere(outer, rho)
    shell = ~inside
    # shell components (edge-connected among shell faces)
    n, lab = label_components(len(split.faces), split.table, same=shell.astype(np.int64))
    t = split.table
    h = np.flatnonzero(t.twin >= 0)
    f0, f1 = h // 3, t.twin[h] // 3
    touching = np.zeros(n, dtype=bool)
    cross = shell[f0] & inside[f1]
    touching[lab[f0[cross]]] = True
    shell_ids = np.unique(lab[shell])
    keep = inside | touching[lab]
    glued = int(np.count_nonzero(touching[shell_ids]))
    dropped = len(shell_ids) - glued
    if keep.all():
        return outer, glued, dropped
    return split.subset(keep), glued, dropped


def trim(curve: DiscreteCurve, params: TrimParams):
    """Bounded-geometry replacement of ``curve`` agreeing with it on ``rho B``.

    Returns ``(trimmed_curve, TrimReport)``.  A budget overrun is reported
    through ``within_budget`` and the ``"budget_exceeded"`` flag; the curve
    is returned regardless.
    """
    rows = []
    best = None
    for rp in params.rho_prime_candidates:
        c, glued, dropped = _trim_at(curve, params.rho, rp)
        st = compute_stats(c)
        rows.append({"rho_prime": rp, "L": st.boundary_length, "ratio": st.budget_ratio})
        # strict inequality keeps the smallest rho' on ties
        if best is None or st.boundary_length < best[2].boundary_length:
            best = (rp, c, st, glued, dropped)
    rp, c, st, glued, dropped = best
    on_sphere = True
    for loop in c.boundary_loops:
        r = np.sqrt(np.sum(np.abs(c.vertices[c.loop_vertices(loop)]) ** 2, axis=1))
        if np.any(np.abs(r - rp) > 1e-6 * rp):
            on_sphere = False
            break
    ratio = st.budget_ratio
    report = TrimReport(rho=params.rho, rho_prime_selected=rp, L=st.boundary_length,
                        G=st.genus, B=st.boundary_count, A=st.area, ratio=ratio,
                        within_budget=bool(ratio <= params.budget),
                        boundary_on_sphere=on_sphere, glued_components=glued,
                        dropped_components=dropped, candidates=rows)
    c.holomorphic = curve.holomorphic
    if not report.within_budget:
        log.warning("bounded-geometry budget exceeded: ratio %.3g > %.3g", ratio, params.budget)
        c.flags.add("budget_exceeded")
    return c, report
