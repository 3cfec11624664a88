import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import paved_partition
from lamina.counting_graph import (CoveringStats, CountingGraph, TheoremViolation, ahlfors_stats,
                                   build_graph, calibrate_h, island_lower_bound,
                                   valence_bound_check)
from lamina.curve_forge import FamilySpec, generate
from lamina.fiber_components import Extraction, detect_islands, extract_partition
from lamina.surface_mesh import euler_by_component


def graph_at(curve, k, **kw):
    grid, paving, rm = paved_partition(curve, k, **kw)
    ex = extract_partition(paving, rm)
    islands = detect_islands(ex.components, grid)
    chi = int(euler_by_component(paving.faces, paving.table,
                                 np.zeros(len(paving.faces), np.int64), 1)[0])
    return grid, ex, build_graph(ex, grid), islands, chi


@pytest.fixture(scope="module")
def sheets():
    return {m: generate(FamilySpec("flat_sheets", {"sheets": m}, resolution=0.08)) for m in (1, 2)}


@pytest.mark.parametrize("m", [1, 2])
def test_flat_counts_at_k4(sheets, m):
    grid, ex, g, islands, chi = graph_at(sheets[m], 4)
    assert (g.vertex_count, g.edge_count, len(islands)) == (16 * m, 24 * m, 16 * m)
    assert g.handshake_ok and g.euler_agrees and g.arc_cycles == 0
    rep = island_lower_bound(g, chi, islands)
    assert rep.ok and rep.islands == 16 * m and rep.chi_curve == m


def test_flat_valences(sheets):
    _, ex, g, _, _ = graph_at(sheets[1], 4)
    hist = np.bincount(list(g.valences.values()))
    # 4 x 4 block of crosses: corners 2, edges 3, interior 4
    assert hist.tolist() == [0, 0, 4, 8, 4]


def test_empty_graph():
    g = build_graph(Extraction(paving=None, labels=np.zeros(0), components=[]))
    assert (g.vertex_count, g.edge_count, g.euler_graph, g.euler_outside_q) == (0, 0, 0, 0)
    assert g.handshake_ok and g.euler_agrees
    assert island_lower_bound(g, 0, []).ok


def test_closed_arcs_keep_euler_agreement():
    c = generate(FamilySpec("handle_body", {"tubes": 200}, resolution=0.04))
    cycles = 0
    for k in (4, 8):
        _, _, g, islands, chi = graph_at(c, k)
        assert g.handshake_ok and g.euler_agrees
        assert g.euler_graph == sum(v.euler for v in g.components.values()) - g.arc_euler_sum
        assert g.arc_cycles == g.edge_count - g.arc_euler_sum
        assert island_lower_bound(g, chi, islands).ok
        cycles += g.arc_cycles
    assert cycles > 0


def test_strict_chain_raises():
    g = CountingGraph([0], [], {0: 0}, 1, 0, euler_graph=5, euler_outside_q=5, arc_euler_sum=0)
    with pytest.raises(TheoremViolation):
        island_lower_bound(g, chi_curve=1, islands=[])
    rep = island_lower_bound(g, 1, [], strict=False)
    assert not rep.ok and rep.as_dict()["inequalities"][1]["slack"] == -4


@pytest.mark.parametrize("S,L,arcs,ratio", [
    (0.5, 1.0, {1: 1.0, 2: 0.0}, 0.5),     # a half sheet over a cross
    (1.0, 0.0, {1: 1.0, 2: 1.0}, 0.0),
    (0.5, 0.0, {1: 1.0}, float("inf")),
    (2.0, 4.0, {}, 0.0),
])
def test_ahlfors_ratio(S, L, arcs, ratio):
    assert CoveringStats(S, L, arcs, {}).ahlfors_ratio() == ratio


def test_ahlfors_stats_of_flat_sheet(sheets):
    grid, ex, g, _, _ = graph_at(sheets[1], 4)
    inner = [c for c in ex.by_kind("cross") if not c.clipped]
    assert len(inner) == 4
    for c in inner:
        st_ = ahlfors_stats(c, grid)
        assert st_.mean_sheets == pytest.approx(1.0)
        assert st_.rel_boundary == 0 and set(st_.arc_counts.values()) == {1}
        assert all(v == pytest.approx(1.0) for v in st_.arc_sheets.values())
    clipped = next(c for c in ex.by_kind("cross") if c.clipped)
    with pytest.raises(ValueError):
        ahlfors_stats(clipped, grid)


def test_flat_valence_report(sheets):
    grid, ex, g, _, _ = graph_at(sheets[2], 4)
    stats = {c.label: ahlfors_stats(c, grid) for c in ex.by_kind("cross") if not c.clipped}
    rep = valence_bound_check(g, stats, grid, h=1.0, boundary_length=0.0)
    assert rep.ok and rep.sheets_outside_q == pytest.approx(2.0)
    assert rep.excluded_clipped == 24 and rep.n_checked == 8
    assert rep.aggregate.lhs == 32 and rep.aggregate.rhs == pytest.approx(32.0)


def test_calibrate_defaults():
    assert calibrate_h([]) == 1.0
    assert calibrate_h([CoveringStats(1.0, 0.0, {1: 0.0}, {})], default=2.0) == 2.0
    assert calibrate_h([CoveringStats(0.5, 1.0, {1: 1.0}, {})]) == pytest.approx(0.75)


ratios = st.lists(st.tuples(st.floats(0, 3), st.floats(1e-3, 2), st.floats(0, 3)), max_size=8)


@settings(max_examples=60, deadline=None)
@given(base=ratios, extra=ratios)
def test_calibration_is_monotone_under_superset(base, extra):
    mk = lambda rows: [CoveringStats(s, l, {0: sa}, {}) for s, l, sa in rows]
    a = calibrate_h(mk(base), default=0.0)
    b = calibrate_h(mk(base + extra), default=0.0)
    assert b >= a
