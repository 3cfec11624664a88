import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import clifford_torus, grid_disk, octahedron
from lamina.curve_forge import FamilySpec, generate
from lamina.surface_mesh import (DiscreteCurve, MeshError, compute_stats, curve_to_json,
                                 edge_table, euler_by_component, load_curve, save_curve,
                                 slice_by_sphere, split_by_sphere)


def euler_vef(curve):
    t = curve.table
    return len(np.unique(curve.faces)) - len(t.counts) + len(curve.faces)


def check_euler_identity(curve):
    st_ = compute_stats(curve)
    per_comp = sum(2 - 2 * g - b for g, b in zip(st_.component_genus, st_.component_boundaries))
    assert euler_vef(curve) == st_.euler_characteristic == per_comp
    return st_


def test_single_triangle(tmp_path):
    p = tmp_path / "tri.json"
    p.write_text(json.dumps({"vertices": [[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0]],
                             "faces": [[0, 1, 2]]}))
    c = load_curve(p)
    assert (len(c.vertices), len(c.table.counts), len(c.faces)) == (3, 3, 1)
    assert len(c.boundary_loops) == 1
    assert compute_stats(c).euler_characteristic == 1


def test_octahedron_is_a_sphere(tmp_path):
    c = load_curve(save_curve(octahedron(), tmp_path / "oct.json"))
    s = check_euler_identity(c)
    assert (s.euler_characteristic, s.boundary_count, s.genus) == (2, 0, 0)


def test_non_manifold_edge_rejected(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"vertices": [[0, 0, 0, 0], [1, 0, 0, 0], [0, 1, 0, 0],
                                          [0, -1, 0, 0], [0, 0, 1, 0]],
                             "faces": [[0, 1, 2], [1, 0, 3], [0, 1, 4]]}))
    with pytest.raises(MeshError, match="non-manifold"):
        load_curve(p)


def test_inconsistent_orientation_rejected():
    v = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], complex)
    with pytest.raises(MeshError, match="orientation"):
        DiscreteCurve(v, [(0, 1, 2), (1, 2, 3)])


def test_degenerate_triangle_rejected():
    v = np.array([[0, 0], [1, 0], [2, 0]], complex)
    with pytest.raises(MeshError, match="zero-area"):
        DiscreteCurve(v, [(0, 1, 2)])


@pytest.mark.parametrize("text", ["not json", '{"faces": [[0, 1, 2]]}'])
def test_parse_failure(tmp_path, text):
    p = tmp_path / "x.json"
    p.write_text(text)
    with pytest.raises(MeshError):
        load_curve(p)


def test_quads_are_split():
    v = np.array([[0, 0], [1, 0], [1 + 1j, 0], [1j, 0]], complex)
    c = DiscreteCurve(v, [(0, 1, 2, 3)])
    assert c.faces.shape == (2, 3)
    assert np.isclose(c.face_areas.sum(), 1.0)


def test_flat_square_stats():
    s = check_euler_identity(grid_disk(8))
    assert s.area == pytest.approx(4.0, rel=1e-12)
    assert (s.genus, s.boundary_count) == (0, 1)
    assert s.boundary_length == pytest.approx(8.0)
    assert s.holomorphy_residual < 1e-12


def test_torus():
    s = check_euler_identity(clifford_torus())
    assert (s.euler_characteristic, s.genus, s.boundary_count) == (0, 1, 0)


def test_genus_two_with_three_boundaries():
    hb = generate(FamilySpec("handle_body", {"tubes": 2}, resolution=0.1))
    keep = np.ones(len(hb.faces), bool)
    keep[0] = False
    c = hb.subset(keep)
    s = check_euler_identity(c)
    assert (s.genus, s.boundary_count, s.euler_characteristic) == (2, 3, -5)


def test_holomorphy_residual_detects_tilted_plane():
    c = grid_disk(4, height=lambda z: z.real)  # w = Re z is not holomorphic
    assert compute_stats(c).holomorphy_residual > 0.1


def test_slice_flat_disk_radius_half():
    spec = FamilySpec("flat_sheets", {"sheets": 1}, resolution=0.02, margin=0.2)
    c = generate(spec)
    inner = slice_by_sphere(c, 0.5)
    s = check_euler_identity(inner)
    assert s.boundary_count == 1
    assert s.boundary_length == pytest.approx(np.pi, rel=2e-3)
    assert s.area == pytest.approx(np.pi * 0.25, rel=2e-3)


def test_slice_outside_is_identity():
    c = grid_disk(4)
    out = slice_by_sphere(c, 2.0)
    assert np.array_equal(out.faces, c.faces)
    assert np.array_equal(out.vertices, c.vertices)


def test_two_sheets_slice_into_two_disks():
    c = generate(FamilySpec("flat_sheets", {"sheets": 2}, resolution=0.08))
    s = check_euler_identity(slice_by_sphere(c, 0.6))
    assert s.n_components == 2
    assert s.component_genus == [0, 0] and s.component_boundaries == [1, 1]


def test_empty_slice_is_flagged():
    c = grid_disk(4, height=lambda z: np.full_like(z, 3.0))
    out = slice_by_sphere(c, 0.5)
    assert out.is_empty and "empty_slice" in out.flags


def test_round_trip_is_bit_identical(tmp_path):
    c = generate(FamilySpec("branched_cover", {"degree": 2, "scale": 0.05}, resolution=0.1))
    p = save_curve(c, tmp_path / "c.json")
    c2 = load_curve(p)
    assert np.array_equal(c.vertices, c2.vertices) and np.array_equal(c.faces, c2.faces)
    assert curve_to_json(c2) == p.read_text()


@pytest.mark.parametrize("family,params", [
    ("flat_sheets", {"sheets": 2}),
    ("poly_graph", {"coefficients": (0, 0, 1)}),
    ("branched_cover", {"degree": 2, "scale": 0.3, "branch_point": 0}),
])
def test_residual_halves_under_refinement(family, params):
    r = [compute_stats(generate(FamilySpec(family, params, resolution=h))).holomorphy_residual
         for h in (0.08, 0.04)]
    assert r[1] <= r[0] / 2 or r[0] < 1e-12


@settings(max_examples=40, deadline=None)
@given(radius=st.floats(0.1, 1.6), a=st.floats(-1, 1), b=st.floats(-1, 1))
def test_slice_conserves_area(radius, a, b):
    c = grid_disk(7, half=1.0, height=lambda z: a * z + b * z * z)
    split, inside, _ = split_by_sphere(c, radius)
    total = c.face_areas.sum()
    assert split.face_areas.sum() == pytest.approx(total, rel=1e-9)
    inner = split.subset(inside).face_areas.sum()
    outer = split.subset(~inside).face_areas.sum()
    assert inner + outer == pytest.approx(total, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(radius=st.floats(0.2, 1.4), c2=st.floats(-0.5, 0.5))
def test_euler_identity_on_slices(radius, c2):
    c = slice_by_sphere(grid_disk(9, height=lambda z: c2 * z * z), radius)
    if not c.is_empty:
        check_euler_identity(c)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 71), min_size=1, max_size=72, unique=True))
def test_components_partition_faces(keep):
    c = grid_disk(6)
    mask = np.zeros(len(c.faces), bool)
    mask[keep] = True
    sub = c.subset(mask)
    lab = sub.component_ids
    chi = euler_by_component(sub.faces, edge_table(sub.faces, len(sub.vertices)), lab, sub.n_components)
    assert len(lab) == len(sub.faces) and set(lab.tolist()) == set(range(sub.n_components))
    assert np.all(chi <= 1)
