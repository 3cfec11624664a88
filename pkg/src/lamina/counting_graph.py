"""Adjacency graph over crosses, covering statistics and the island count.

Vertices are the components over the crosses; every connected arc of the
curve over an alpha side joins the two components it bounds.  Gluing along
the arcs, the Euler characteristic of the part of the curve outside the Q
cells is the sum of the vertex characteristics minus that of the arcs.  When
every arc is a path this is ``sum chi - a``, which drives the lower bound
``#islands >= chi(C) + a - s``.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .fiber_components import Extraction, FiberComponent
from .grid_paving import GridSpec
from .surface_mesh import euler_by_component

log = logging.getLogger(__name__)

FP_SLACK = 1e-9     # floating point allowance in inequalities between measured reals


class TheoremViolation(AssertionError):
    """An inequality that holds for every surface failed: a bug, not a finding."""


@dataclass
class CoveringStats:
    mean_sheets: float               # S(Sigma)
    rel_boundary: float              # L = k l(Sigma)
    arc_sheets: dict                 # neighbour cross id -> S(alpha)
    arc_counts: dict                 # neighbour cross id -> number of arcs
    h_estimate: float | None = None
    label: int = -1

    def ahlfors_ratio(self) -> float:
        """max_i |S - S(alpha_i)| / L (inf when L = 0 and the gap is nonzero)."""
        gap = max((abs(self.mean_sheets - s) for s in self.arc_sheets.values()), default=0.0)
        if self.rel_boundary > 0:
            return gap / self.rel_boundary
        return 0.0 if gap <= FP_SLACK else float("inf")


@dataclass
class CountingGraph:
    vertices: list                    # component labels
    edges: list                       # (label, label) per arc
    valences: dict                    # label -> nu
    vertex_count: int
    edge_count: int
    euler_graph: int                  # sum chi(Sigma) - sum chi(arc)
    euler_outside_q: int              # chi of the cross part, from the mesh
    arc_euler_sum: int
    arc_cycles: int = 0               # a - sum chi(arc): zero when every arc is a path
    components: dict = field(default_factory=dict, repr=False)

    @property
    def handshake_ok(self) -> bool:
        return 2 * self.edge_count == sum(self.valences.values())

    @property
    def euler_agrees(self) -> bool:
        return self.euler_graph == self.euler_outside_q


def build_graph(extraction: Extraction, grid: GridSpec | None = None) -> CountingGraph:
    """Graph whose vertices are cross components and edges are shared arcs."""
    comps = {c.label: c for c in extraction.components if c.kind == "cross"}
    edges = [tuple(a.components) for a in extraction.arcs]
    val = {lab: 0 for lab in comps}
    for u, v in edges:
        val[u] += 1
        val[v] += 1
    p = extraction.paving
    if comps:
        mask = np.zeros(len(p.faces), bool)
        for c in comps.values():
            mask[c.faces] = True
        sub = p.subset(mask)
        chi_mesh = int(euler_by_component(sub.faces, sub.table,
                                          np.zeros(len(sub.faces), np.int64), 1)[0])
    else:
        chi_mesh = 0
    sum_chi = sum(c.euler for c in comps.values())
    arc_chi = sum(a.euler for a in extraction.arcs)
    if arc_chi != len(edges):
        log.info("%d arcs close up into cycles over the alpha sides", len(edges) - arc_chi)
    return CountingGraph(
        vertices=sorted(comps), edges=edges, valences=val, vertex_count=len(comps),
        edge_count=len(edges), euler_graph=sum_chi - arc_chi, euler_outside_q=chi_mesh,
        arc_euler_sum=arc_chi, arc_cycles=len(edges) - arc_chi, components=comps)


def ahlfors_stats(component: FiberComponent, grid: GridSpec,
                  h_estimate: float | None = None) -> CoveringStats:
    """Covering numbers of a component over an unclipped cross, after rescaling by k."""
    if component.kind != "cross" or component.clipped:
        raise ValueError("Ahlfors statistics need a component over an unclipped cross")
    k = grid.k
    arc_sheets = {nb: k * component.alpha_lengths.get(nb, 0.0) for nb in component.sides}
    arc_counts = {nb: component.alpha_arcs.get(nb, 0) for nb in component.sides}
    return CoveringStats(mean_sheets=component.degree, rel_boundary=k * component.rel_boundary_length,
                         arc_sheets=arc_sheets, arc_counts=arc_counts, h_estimate=h_estimate,
                         label=component.label)


def calibrate_h(corpus, default: float = 1.0, floor: float = 1e-9, safety: float = 1.5) -> float:
    """Safety-padded maximum of ``|S - S(alpha)| / L`` over a corpus of stats."""
    worst = None
    for st in corpus:
        if st.rel_boundary <= floor:
            continue
        r = st.ahlfors_ratio()
        worst = r if worst is None else max(worst, r)
    if worst is None:
        return float(default)
    return safety * worst


@dataclass
class Inequality:
    name: str
    lhs: float
    rhs: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs


@dataclass
class BoundReport:
    islands: int
    chi_curve: int
    chi_outside_q: int
    sum_chi_minus_a: int
    s: int
    a: int
    inequalities: list

    @property
    def ok(self) -> bool:
        return all(i.holds for i in self.inequalities)

    def as_dict(self):
        d = asdict(self)
        for row, ineq in zip(d["inequalities"], self.inequalities):
            row["slack"] = ineq.slack
        d["ok"] = self.ok
        return d


def island_lower_bound(graph: CountingGraph, chi_curve: int, islands: list,
                       strict: bool = True) -> BoundReport:
    """Exact integer chain ending in ``#islands >= chi(C) + a - s``."""
    n_isl = len(islands)
    s, a = graph.vertex_count, graph.edge_count
    x = graph.euler_outside_q
    ineqs = [
        Inequality("chi_outside_q >= chi_curve - islands", x, chi_curve - n_isl, x >= chi_curve - n_isl),
        Inequality("s - a >= chi_outside_q", s - a, x, s - a >= x),
        Inequality("islands >= chi_curve + a - s", n_isl, chi_curve + a - s, n_isl >= chi_curve + a - s),
    ]
    rep = BoundReport(n_isl, chi_curve, x, graph.euler_graph, s, a, ineqs)
    if strict and not rep.ok:
        bad = [i.name for i in ineqs if not i.holds]
        raise TheoremViolation(f"island chain violated: {bad}")
    return rep


@dataclass
class ValenceReport:
    h: float
    n_checked: int
    vertex_violations: list
    ahlfors_violations: list
    aggregate: Inequality
    edge_aggregate: Inequality
    vertex_bound: Inequality
    excluded_clipped: int
    s_interior: int
    sheets_outside_q: float

    @property
    def ok(self) -> bool:
        return (not self.vertex_violations and not self.ahlfors_violations
                and self.aggregate.holds and self.vertex_bound.holds)

    def as_dict(self):
        d = asdict(self)
        for key in ("aggregate", "edge_aggregate", "vertex_bound"):
            d[key]["slack"] = getattr(self, key).slack
        d["ok"] = self.ok
        return d


def sheets_outside_q(graph: CountingGraph, grid: GridSpec) -> tuple[float, int]:
    """S_n(C - Q) over unclipped crosses, and the number of such crosses."""
    interior = {c.region_id for c in graph.components.values() if not c.clipped}
    mass = sum(c.projected_area for c in graph.components.values() if not c.clipped)
    n_int = len(interior)
    return (mass / (n_int * 3.0 / grid.k ** 2) if n_int else 0.0), n_int


def valence_bound_check(graph: CountingGraph, stats: dict, grid: GridSpec, h: float,
                        boundary_length: float, n_interior_crosses: int | None = None) -> ValenceReport:
    """Per-vertex and aggregate valence bounds, the Ahlfors inequality and the vertex count bound.

    ``stats`` maps component labels (unclipped only) to :class:`CoveringStats`.
    """
    k, eps = grid.k, grid.epsilon_k
    vbad, abad = [], []
    sum_nu = 0
    sum_l = 0.0
    for lab, st in stats.items():
        nu = graph.valences[lab]
        sum_nu += nu
        l = st.rel_boundary / k
        sum_l += l
        rhs = 4 * st.mean_sheets - 4 * h * k * l
        if nu < rhs - FP_SLACK:
            vbad.append({"label": lab, "nu": nu, "S": st.mean_sheets, "l": l, "rhs": rhs})
        for nb, s_alpha in st.arc_sheets.items():
            if abs(st.mean_sheets - s_alpha) > h * k * l + FP_SLACK:
                abad.append({"label": lab, "side": nb, "S": st.mean_sheets,
                             "S_alpha": s_alpha, "l": l, "h": h})
    S_out, n_int = sheets_outside_q(graph, grid)
    if n_interior_crosses is not None:
        n_int = n_interior_crosses
    agg_rhs = 4 * n_int * S_out - 4 * h * k * sum_l
    aggregate = Inequality("sum_nu_interior >= 4 n_int S(C-Q) - 4 h k sum l", sum_nu, agg_rhs,
                           sum_nu >= agg_rhs - FP_SLACK)
    two_a = 2 * graph.edge_count
    p_rhs = 4 * k * k * S_out - h * k * boundary_length
    edge = Inequality("2a >= 4 k^2 S(C-Q) - h k L_n", two_a, p_rhs, two_a >= p_rhs - FP_SLACK)
    s_int = len(stats)
    vb_rhs = S_out * n_int * (1 + eps) + (k / eps) * boundary_length
    vbound = Inequality("s_interior <= S(C-Q) n_int (1+eps) + (k/eps) L_n", vb_rhs, s_int,
                        s_int <= vb_rhs + FP_SLACK)
    clipped = sum(1 for c in graph.components.values() if c.clipped)
    rep = ValenceReport(h, len(stats), vbad, abad, aggregate, edge, vbound, clipped, s_int, S_out)
    if not rep.ok:
        log.warning("valence/Ahlfors check flagged %d vertex and %d side violations",
                    len(vbad), len(abad))
    return rep
