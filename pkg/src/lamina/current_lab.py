"""Discrete laminated currents built from good islands.

Both the normalized curve current ``[C]/A`` and its approximation by good
islands are represented as weighted sets of faces of a paving.  Test forms
are pullbacks of scalar functions on the base square, so every pairing is
``weight * sum f(centroid) * projected area``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fiber_components import ISLAND, RAMIFIED_ISLAND, detect_islands, extract_cells
from .grid_paving import PavedMesh, build_grid, pave

__all__ = ["CurveCurrent", "CurrentApprox", "assemble", "evaluate", "transversal_measure",
           "defect_curve", "DefectTrend", "CompatibilityError", "check_compatibility",
           "good_islands_at"]


class CompatibilityError(AssertionError):
    pass


@dataclass
class CurveCurrent:
    """``[C]/A`` restricted to the part of the curve over C."""

    paving: PavedMesh
    weight: float

    @property
    def face_index(self) -> np.ndarray:
        return np.arange(len(self.paving.faces))

    @property
    def mass_pi_omega(self) -> float:
        return evaluate(self, 1.0)


@dataclass
class CurrentApprox:
    weight: float
    patches: list
    k: int
    paving: PavedMesh
    mass_pi_omega: float = 0.0
    defect: float = 0.0
    ramified_count: int = 0
    transverse_counts: dict = field(default_factory=dict)

    @property
    def face_index(self) -> np.ndarray:
        if not self.patches:
            return np.zeros(0, dtype=np.int64)
        return np.concatenate([p.faces for p in self.patches])

    def patch_cells(self):
        return [p.region_ref for p in self.patches]


def evaluate(current, test_form) -> float:
    """Pair a current with the pullback of a scalar test function on C.

    ``test_form`` is a constant, a vectorized callable ``f(x, y)``, or an
    ``(n, n)`` array of samples on the cell centres of an ``n x n`` grid
    over C (nearest-cell lookup).
    """
    idx = current.face_index
    if len(idx) == 0:
        return 0.0
    p = current.paving
    area = p.pi_area[idx]
    if np.isscalar(test_form):
        return float(current.weight * float(test_form) * np.sum(area))
    cen = p.centroids[idx]
    if callable(test_form):
        vals = np.asarray(test_form(cen.real, cen.imag), dtype=float)
    else:
        arr = np.asarray(test_form, dtype=float)
        n = arr.shape[0]
        u = (cen - p.grid.origin) * (n / 2.0)
        i = np.clip(np.floor(u.real).astype(int), 0, n - 1)
        j = np.clip(np.floor(u.imag).astype(int), 0, n - 1)
        vals = arr[i, j]
    return float(current.weight * np.sum(vals * area))


def assemble(islands: list, paving: PavedMesh, area: float,
             ramified: int | None = None) -> CurrentApprox:
    """Current of the good islands, weighted by ``1 / area``.

    Raises
    ------
    ValueError
        If a ramified island is passed in as a patch.
    """
    good = [c for c in islands if c.classification == ISLAND]
    for c in islands:
        if c.classification == RAMIFIED_ISLAND:
            raise ValueError(f"ramified island over cell {c.region_ref} is not a graph")
    seen: dict = {}
    for c in good:
        s = seen.setdefault(c.region_ref, set())
        f = set(c.faces.tolist())
        if s & f:
            raise AssertionError(f"overlapping patches over cell {c.region_ref}")
        s |= f
    weight = 1.0 / area if area > 0 else 0.0
    cur = CurrentApprox(weight, good, paving.grid.k, paving, ramified_count=ramified or 0)
    cur.mass_pi_omega = evaluate(cur, 1.0)
    cur.defect = evaluate(CurveCurrent(paving, weight), 1.0) - cur.mass_pi_omega
    counts: dict = {}
    for c in good:
        counts[c.region_ref] = counts.get(c.region_ref, 0) + 1
    cur.transverse_counts = counts
    return cur


def transversal_measure(current: CurrentApprox, base_point: complex, fiber_samples: int | None = None) -> float:
    """Weighted number of patches over ``base_point``.

    Every good island is a degree-one graph over its whole cell, so the
    patches over a point are those whose cell contains it.
    """
    cell = current.paving.grid.locate_cell(base_point)
    if cell is None:
        raise ValueError(f"{base_point} is on a cell boundary or outside C")
    return current.weight * current.transverse_counts.get(cell, 0)


def good_islands_at(paving: PavedMesh, ramification_threshold: float = 1.5,
                    fold_rtol: float = 1e-9, l_tol: float = 1e-7):
    """Cell components over the full quadrillage and the islands among them."""
    ex = extract_cells(paving, fold_rtol)
    isl = detect_islands(ex.components, paving.grid, ramification_threshold, l_tol)
    return ex, isl


def _patch_keys(patch, paving: PavedMesh, shift: int) -> np.ndarray:
    n4 = 4 * paving.grid.k >> shift
    q = paving.quarter[patch.faces] >> shift
    o = paving.origin[patch.faces].astype(np.int64)
    return (o * n4 + q[:, 0]) * n4 + q[:, 1]


def check_compatibility(coarse: CurrentApprox, fine: CurrentApprox) -> int:
    """Face-wise containment of fine patches inside overlapping coarse patches.

    Returns the number of fine patches that lie inside some coarse patch.
    """
    if fine.k != 2 * coarse.k:
        raise ValueError("compatibility is checked between k and 2k")
    owner = {}
    for t, p in enumerate(coarse.patches):
        for key in _patch_keys(p, coarse.paving, 0).tolist():
            owner[key] = t
    nested = 0
    for p in fine.patches:
        keys = _patch_keys(p, fine.paving, 1)
        hits = {owner.get(key, -1) for key in np.unique(keys).tolist()}
        if hits == {-1}:
            continue
        if len(hits) != 1 or -1 in hits:
            raise CompatibilityError(f"patch over cell {p.region_ref} at k={fine.k} "
                                     f"is not contained in a coarse patch")
        nested += 1
    return nested


@dataclass
class DefectTrend:
    rows: list
    c_constant: float
    monotone: list
    nested_patches: list

    @property
    def monotone_ok(self) -> bool:
        return all(m["holds"] for m in self.monotone)


def defect_curve(curve, frame, ks, jitter: complex, area: float | None = None,
                 levels: dict | None = None, ramification_threshold: float = 1.5,
                 epsilon=None) -> DefectTrend:
    """Defect of the good-island current over a doubling sequence of k.

    ``levels`` may map k to an already assembled :class:`CurrentApprox`
    built with the same frame and jitter.
    """
    ks = list(ks)
    for a, b in zip(ks, ks[1:]):
        if b != 2 * a:
            raise ValueError("k values must double")
    if area is None:
        area = float(np.sum(curve.face_areas))
    levels = dict(levels or {})
    for k in ks:
        if k not in levels:
            grid = build_grid(k, jitter=jitter, epsilon=epsilon, tol=0.0)
            paving = pave(curve, frame, grid)
            ex, isl = good_islands_at(paving, ramification_threshold)
            ram = sum(1 for c in isl if c.classification == RAMIFIED_ISLAND)
            levels[k] = assemble([c for c in isl if c.classification == ISLAND], paving, area, ram)
    rows = []
    for k in ks:
        cur = levels[k]
        mass = evaluate(CurveCurrent(cur.paving, cur.weight), 1.0)
        rows.append({"k": k, "epsilon_k": cur.paving.grid.epsilon_k, "mass_Tn": mass,
                     "mass_Tkn": cur.mass_pi_omega, "defect": cur.defect,
                     "good_island_count": len(cur.patches), "ramified_count": cur.ramified_count})
    c = max((r["defect"] / r["mass_Tn"] / r["epsilon_k"] for r in rows if r["mass_Tn"] > 0),
            default=0.0)
    mono = []
    nested = []
    for r0, r1 in zip(rows, rows[1:]):
        allowance = 2.0 / r0["k"]
        mono.append({"k": r0["k"], "k2": r1["k"], "defect_k": r0["defect"],
                     "defect_2k": r1["defect"], "allowance": allowance,
                     "holds": r1["defect"] <= r0["defect"] + allowance})
        nested.append(check_compatibility(levels[r0["k"]], levels[r1["k"]]))
    return DefectTrend(rows, c, mono, nested)
