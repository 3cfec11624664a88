"""Connected pieces of the curve over crosses and grid cells.

For a region ``R`` and a component ``S`` of the curve over ``R``:

* ``rel_boundary_length`` (``l``) is the projected length of the part of
  the boundary of ``S`` lying over the interior of ``R``.  Boundary edges
  created by cutting along region boundaries lie on quarter lines and are
  recognised exactly from vertex tags, so only true curve boundary counts.
* ``projected_area`` (``a``) is the projected area with multiplicity.

Cross components are sorted by the short/long boundary test and the
isoperimetric alternative ``a <= 4 l^2``; cell components are tested for
being islands (disks whose boundary lies over the cell boundary).
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .grid_paving import Cross, GridSpec, PavedMesh, RegionMap, pave, region_map
from .surface_mesh import MeshError, euler_by_component, label_components

log = logging.getLogger(__name__)

LONG_BOUNDARY = "LONG_BOUNDARY"
COVERING = "COVERING"
SMALL = "SMALL"
ISLAND = "ISLAND"
RAMIFIED_ISLAND = "RAMIFIED_ISLAND"
OTHER = "OTHER"


@dataclass
class FiberComponent:
    region_id: int
    kind: str                      # "cross" or "cell"
    region_ref: tuple              # cross centre cell or cell (i, j)
    faces: np.ndarray
    rel_boundary_length: float
    projected_area: float
    region_area: float
    euler: int
    fold: bool = False
    clipped: bool = False
    classification: str | None = None
    alpha_arcs: dict = field(default_factory=dict)      # neighbour cross id -> arc count
    alpha_lengths: dict = field(default_factory=dict)   # neighbour cross id -> projected length
    label: int = -1
    sides: tuple = ()                                   # alpha-side neighbour cross ids

    @property
    def degree(self) -> float:
        return self.projected_area / self.region_area

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("faces")
        d["n_faces"] = len(self.faces)
        d["degree"] = self.degree
        return d


@dataclass
class Arc:
    """Connected piece of the curve over one alpha side."""

    crosses: tuple       # (cross id, cross id)
    components: tuple    # component labels on either side
    n_edges: int
    euler: int
    length: float


@dataclass
class Extraction:
    """All components of one partition of C, with shared-arc data."""

    paving: PavedMesh
    labels: np.ndarray
    components: list
    arcs: list = field(default_factory=list)
    anomalies: int = 0

    def by_kind(self, kind):
        return [c for c in self.components if c.kind == kind]


def _components(paving: PavedMesh, region: np.ndarray, area_of, kind_of, ref_of,
                clipped_of, fold_rtol: float = 1e-9):
    F = len(paving.faces)
    t = paving.table
    n, labels = label_components(F, t, same=region)
    if n == 0:
        return n, labels, [], 0
    first = np.full(n, -1, dtype=np.int64)
    first[labels[::-1]] = np.arange(F)[::-1]
    comp_region = region[first]
    a = np.bincount(labels, weights=paving.pi_area, minlength=n)
    sa = paving.signed_area
    pos = np.bincount(labels, weights=np.maximum(sa, 0), minlength=n)
    neg = np.bincount(labels, weights=np.maximum(-sa, 0), minlength=n)
    chi = euler_by_component(paving.faces, t, labels, n)
    # boundary half-edges of each component
    hf = np.arange(3 * F) // 3
    tw = t.twin
    other = np.where(tw >= 0, labels[np.maximum(tw, 0) // 3], -1)
    bnd = other != labels[hf]
    on_line = paving.edge_on_line[t.halfedge_edge]
    rel = bnd & ~on_line
    anomalies = int(np.count_nonzero(rel & (tw >= 0)))
    length = paving.edge_proj_length[t.halfedge_edge]
    l = np.bincount(labels[hf[rel]], weights=length[rel], minlength=n)
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(np.bincount(labels, minlength=n))[:-1]
    face_groups = np.split(order, splits)
    comps = []
    for c in range(n):
        r = int(comp_region[c])
        ra = area_of(r)
        comps.append(FiberComponent(
            region_id=r, kind=kind_of(r), region_ref=ref_of(r), faces=face_groups[c],
            rel_boundary_length=float(l[c]), projected_area=float(a[c]), region_area=ra,
            euler=int(chi[c]), fold=bool(min(pos[c], neg[c]) > fold_rtol * ra),
            clipped=clipped_of(r), label=c))
    return n, labels, comps, anomalies


def extract_partition(paving: PavedMesh, rmap: RegionMap, fold_rtol: float = 1e-9) -> Extraction:
    """Components over every Q cell and every cross, plus alpha-side arcs."""
    q = paving.quarter
    region = rmap.quarter_region[q[:, 0], q[:, 1]]
    nq = rmap.n_q
    n, labels, comps, anomalies = _components(
        paving, region,
        area_of=lambda r: float(rmap.region_area[r]),
        kind_of=lambda r: "cross" if r >= nq else "cell",
        ref_of=lambda r: rmap.crosses[r - nq].center_cell if r >= nq else rmap.q_cells[r],
        clipped_of=lambda r: rmap.crosses[r - nq].clipped if r >= nq else False,
        fold_rtol=fold_rtol)
    for c in comps:
        if c.kind == "cross":
            c.sides = tuple(nb for _, nb, _ in rmap.crosses[c.region_id - nq].alpha_sides)
    ex = Extraction(paving, labels, comps, anomalies=anomalies)
    if n:
        ex.arcs = _alpha_arcs(paving, region, labels, nq, comps)
    return ex


def _alpha_arcs(paving: PavedMesh, region, labels, nq, comps) -> list[Arc]:
    t = paving.table
    h = np.flatnonzero(t.twin >= 0)
    h = h[h < t.twin[h]]
    f0, f1 = h // 3, t.twin[h] // 3
    r0, r1 = region[f0], region[f1]
    sel = (r0 >= nq) & (r1 >= nq) & (r0 != r1)
    h, f0, f1, r0, r1 = h[sel], f0[sel], f1[sel], r0[sel], r1[sel]
    if len(h) == 0:
        return []
    eid = t.halfedge_edge[h]
    ev = t.edges[eid]
    # connected arcs through shared vertices
    verts, inv = np.unique(ev.reshape(-1), return_inverse=True)
    inv = inv.reshape(-1, 2)
    m = len(verts)
    adj = coo_matrix((np.ones(len(h), np.int8), (inv[:, 0], inv[:, 1])), shape=(m, m))
    n_arcs, vlab = connected_components(adj, directed=False)
    arc_of_edge = vlab[inv[:, 0]]
    swap = r0 > r1
    ra = np.where(swap, r1, r0)
    rb = np.where(swap, r0, r1)
    ca = np.where(swap, labels[f1], labels[f0])
    cb = np.where(swap, labels[f0], labels[f1])
    length = paving.edge_proj_length[eid]
    n_edges = np.bincount(arc_of_edge, minlength=n_arcs)
    n_verts = np.bincount(vlab, minlength=n_arcs)
    arc_len = np.bincount(arc_of_edge, weights=length, minlength=n_arcs)
    arcs = []
    order = np.argsort(arc_of_edge, kind="stable")
    starts = np.concatenate([[0], np.cumsum(n_edges)[:-1]])
    for a in range(n_arcs):
        idx = order[starts[a]:starts[a] + n_edges[a]]
        pairs = set(zip(ra[idx].tolist(), rb[idx].tolist(), ca[idx].tolist(), cb[idx].tolist()))
        if len(pairs) != 1:
            raise MeshError(f"unmatched arc over an alpha side: {sorted(pairs)[:4]}")
        (xa, xb, la, lb), = pairs
        arcs.append(Arc((xa - nq, xb - nq), (la, lb), int(n_edges[a]),
                        int(n_verts[a] - n_edges[a]), float(arc_len[a])))
    for arc in arcs:
        for side, (mine, other) in enumerate([(0, 1), (1, 0)]):
            c = comps[arc.components[mine]]
            nb = arc.crosses[other]
            c.alpha_arcs[nb] = c.alpha_arcs.get(nb, 0) + 1
            c.alpha_lengths[nb] = c.alpha_lengths.get(nb, 0.0) + arc.length
    return arcs


def extract_cells(paving: PavedMesh, fold_rtol: float = 1e-9) -> Extraction:
    """Components over every cell of the grid (all four families)."""
    g = paving.grid
    region = paving.cell_index
    n, labels, comps, anomalies = _components(
        paving, region,
        area_of=lambda r: g.cell_area,
        kind_of=lambda r: "cell",
        ref_of=lambda r: divmod(int(r), g.n),
        clipped_of=lambda r: False, fold_rtol=fold_rtol)
    return Extraction(paving, labels, comps, anomalies=anomalies)


def extract_components(curve, frame, grid: GridSpec, region) -> list[FiberComponent]:
    """Components of ``curve`` over a single cross or cell ``(i, j)``."""
    paving = pave(curve, frame, grid)
    if isinstance(region, Cross):
        rmap = region_map(grid)
        ex = extract_partition(paving, rmap)
        return [c for c in ex.components if c.kind == "cross" and c.region_ref == region.center_cell]
    ex = extract_cells(paving)
    return [c for c in ex.components if c.region_ref == tuple(region)]


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def classify(component: FiberComponent, grid: GridSpec) -> str:
    """Long boundary / small / covering / other, for a cross component."""
    eps, k = grid.epsilon_k, grid.k
    l, a = component.rel_boundary_length, component.projected_area
    if l >= eps / k:
        return LONG_BOUNDARY
    if a <= 4.0 * l * l:
        return SMALL
    if a >= (1.0 - eps) * component.region_area:
        return COVERING
    return OTHER


@dataclass
class PruneReport:
    removed_components: int
    removed_mass: float
    isoperimetric_sum: float     # sum of 4 l_i^2
    length_sum: float            # sum of l_i
    bound: float                 # (4/k) L_n
    within_bound: bool
    stats_before: dict = field(default_factory=dict)
    stats_after: dict = field(default_factory=dict)
    within_budget: bool | None = None

    def as_dict(self):
        return asdict(self)


def prune_small(paving: PavedMesh, components: list[FiberComponent], boundary_length: float):
    """Remove SMALL cross components.

    Returns ``(pruned_paving, PruneReport)``.  Cell components are never
    touched.
    """
    k = paving.grid.k
    small = [c for c in components if c.kind == "cross" and c.classification == SMALL]
    removed = float(sum(c.projected_area for c in small))
    iso = float(sum(4 * c.rel_boundary_length ** 2 for c in small))
    lsum = float(sum(c.rel_boundary_length for c in small))
    bound = 4.0 / k * boundary_length
    report = PruneReport(len(small), removed, iso, lsum, bound, removed <= bound)
    if not small:
        return paving, report
    mask = np.ones(len(paving.faces), bool)
    for c in small:
        mask[c.faces] = False
    log.info("pruned %d small components (mass %.3g)", len(small), removed)
    return paving.subset(mask), report


def detect_islands(components: list[FiberComponent], grid: GridSpec,
                   ramification_threshold: float = 1.5, l_tol: float = 1e-7) -> list[FiberComponent]:
    """Tag cell components as ISLAND, RAMIFIED_ISLAND or OTHER; return the islands."""
    out = []
    for c in components:
        if c.kind != "cell":
            continue
        if c.euler == 1 and c.rel_boundary_length <= l_tol / grid.k:
            if c.degree > ramification_threshold or c.fold:
                c.classification = RAMIFIED_ISLAND
            else:
                c.classification = ISLAND
            out.append(c)
        else:
            c.classification = OTHER
    return out
