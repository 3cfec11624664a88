"""Parameterized families of test curves.

Families
--------
flat_sheets
    ``m`` parallel graphs ``w = c_i``.
branched_cover
    ``w^d = s (z - b)``, meshed in the uniformizing parameter ``t = w``.
poly_graph
    The graph ``w = P(z)`` of a polynomial.
handle_body
    Two parallel sheets joined by thin square tubes.  This is a
    topological model only (the tube walls are not complex lines) and is
    flagged non-holomorphic.  It is the genus-heavy negative control.
from_file
    A mesh file in the JSON format of :mod:`lamina.surface_mesh`.

Every generated curve is cut by the sphere of radius ``1 + margin``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .surface_mesh import DiscreteCurve, load_curve, slice_by_sphere

FAMILIES = ("flat_sheets", "branched_cover", "poly_graph", "handle_body", "from_file")

DEFAULTS = {
    "flat_sheets": {"sheets": 1, "offsets": None, "separation": 0.1},
    "branched_cover": {"degree": 2, "scale": 1.0, "branch_point": 0.12 + 0.12j},
    "poly_graph": {"coefficients": (0.0, 0.0, 0.3)},
    "handle_body": {"sheets": 2, "tubes": 1, "tube_spacing": 0.03,
                    "separation": 0.1, "tube_rmin": 0.0},
    "from_file": {"path": None},
}


@dataclass
class FamilySpec:
    family: str
    params: dict = field(default_factory=dict)
    resolution: float = 0.04
    margin: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.resolution <= 0:
            raise ValueError("mesh resolution must be positive")
        if self.margin <= 0:
            raise ValueError("margin must be positive")
        merged = dict(DEFAULTS[self.family])
        merged.update(self.params)
        self.params = merged
        if self.family in ("flat_sheets", "handle_body") and int(merged["sheets"]) < 1:
            raise ValueError("sheet count must be >= 1")
        if self.family == "branched_cover" and int(merged["degree"]) < 1:
            raise ValueError("degree must be >= 1")

    @property
    def radius(self) -> float:
        return 1.0 + self.margin

    def sheet_offsets(self) -> list[complex]:
        p = self.params
        if p.get("offsets") is not None:
            offs = [complex(c) for c in p["offsets"]]
            if len(offs) != int(p["sheets"]):
                raise ValueError("offsets must list one value per sheet")
            return offs
        m = int(p["sheets"])
        return [complex((i - (m - 1) / 2) * float(p["separation"])) for i in range(m)]


# ---------------------------------------------------------------------------
# mesh builders
# ---------------------------------------------------------------------------

def _square_grid(half: float, h: float):
    """Vertex lattice and counterclockwise triangles over [-half, half]^2."""
    n = int(np.ceil(2 * half / h))
    xs = np.linspace(-half, half, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    z = (X + 1j * Y).reshape(-1)
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    i, j = i.reshape(-1), j.reshape(-1)
    v00 = i * (n + 1) + j
    v10 = (i + 1) * (n + 1) + j
    v11 = (i + 1) * (n + 1) + j + 1
    v01 = i * (n + 1) + j + 1
    faces = np.concatenate([np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)])
    return z, faces


def _graph_mesh(fn, radius: float, h: float, name: str) -> DiscreteCurve:
    z, faces = _square_grid(radius * 1.02, h)
    keep = np.abs(z[faces]).min(axis=1) < radius
    faces = faces[keep]
    verts = np.stack([z, fn(z)], axis=1)
    curve = DiscreteCurve(verts, faces, name=name, check_area=False)
    return slice_by_sphere(curve.subset(np.ones(len(faces), bool)), radius)


def _flat_sheets(spec: FamilySpec) -> DiscreteCurve:
    R, h = spec.radius, spec.resolution
    parts = []
    for c in spec.sheet_offsets():
        parts.append(_graph_mesh(lambda z, c=c: np.full_like(z, c), R, h, "sheet"))
    return _union(parts, f"flat_sheets(m={len(parts)})")


def _poly_graph(spec: FamilySpec) -> DiscreteCurve:
    coeffs = [complex(c) for c in spec.params["coefficients"]]
    fn = lambda z: np.polyval(coeffs[::-1], z)  # noqa: E731
    return _graph_mesh(fn, spec.radius, spec.resolution, "poly_graph")


def _union(parts, name, holomorphic=True) -> DiscreteCurve:
    verts, faces, off = [], [], 0
    for p in parts:
        verts.append(p.vertices)
        faces.append(p.faces + off)
        off += len(p.vertices)
    return DiscreteCurve(np.concatenate(verts), np.concatenate(faces), name=name,
                         holomorphic=holomorphic)


def _zip_rings(ia, ta, ib, tb):
    """Triangulate the annulus between an inner and an outer ring.

    ``ia``/``ib`` are vertex ids, ``ta``/``tb`` increasing angles in
    ``[0, 2 pi)``.
    """
    na, nb = len(ia), len(ib)
    b0 = int(np.argmin(np.abs(np.angle(np.exp(1j * (tb - ta[0]))))))
    ua = np.concatenate([ta, [ta[0] + 2 * np.pi]])
    ub = np.unwrap(np.roll(tb, -b0))
    ub = ub - 2 * np.pi * np.round((ub[0] - ta[0]) / (2 * np.pi))
    ub = np.concatenate([ub, [ub[0] + 2 * np.pi]])
    ibr = np.roll(ib, -b0)
    tris = []
    a = b = 0
    while a < na or b < nb:
        if b >= nb or (a < na and ua[a + 1] <= ub[b + 1]):
            tris.append((ia[a % na], ibr[b % nb], ia[(a + 1) % na]))
            a += 1
        else:
            tris.append((ia[a % na], ibr[b % nb], ibr[(b + 1) % nb]))
            b += 1
    return tris


def _branched_cover(spec: FamilySpec) -> DiscreteCurve:
    p = spec.params
    d = int(p["degree"])
    s = float(p["scale"])
    b = complex(p["branch_point"])
    R, h = spec.radius, spec.resolution
    if R - abs(b) < 3 * h:
        raise ValueError("resolution too coarse: branch point within 3 edge "
                         "lengths of the domain boundary")
    t_max = (s * (R + abs(b))) ** (1.0 / d) * 1.05 + h
    grade = 5 * h

    def local_h(r):
        # 4x finer near the branch point, relaxing gradually to avoid slivers
        return min(h, h / 4 + 0.25 * max(r ** d / s - grade, 0.0))

    radii = [0.0]
    r = 0.0
    while r < t_max:
        g = d * r ** (d - 1) / s if d > 1 else 1.0 / s
        r += local_h(r) / np.sqrt(g * g + 1.0)
        radii.append(r)
    verts = [np.array([0.0 + 0j])]
    ring_ids, ring_ang = [np.array([0])], [None]
    n_total = 1
    for i, r in enumerate(radii[1:], start=1):
        g = d * r ** (d - 1) / s if d > 1 else 1.0 / s
        h_loc = local_h(r)
        n = max(8 * d, int(np.ceil(2 * np.pi * r * np.sqrt(g * g + 1.0) / h_loc)))
        ang = 2 * np.pi * (np.arange(n) + 0.5 * (i % 2)) / n
        verts.append(r * np.exp(1j * ang))
        ring_ids.append(np.arange(n_total, n_total + n))
        ring_ang.append(ang)
        n_total += n
    tris = []
    first = ring_ids[1]
    for j in range(len(first)):
        tris.append((0, first[j], first[(j + 1) % len(first)]))
    for i in range(1, len(ring_ids) - 1):
        tris.extend(_zip_rings(ring_ids[i], ring_ang[i], ring_ids[i + 1], ring_ang[i + 1]))
    t = np.concatenate(verts)
    z = b + t ** d / s
    curve = DiscreteCurve(np.stack([z, t], 1), np.array(tris), name=f"branched_cover(d={d})",
                          check_area=False)
    return slice_by_sphere(curve, R)


def _handle_body(spec: FamilySpec) -> DiscreteCurve:
    p = spec.params
    if int(p["sheets"]) != 2:
        raise ValueError("handle_body supports exactly 2 sheets")
    n_handles = int(p["tubes"])
    spacing = float(p["tube_spacing"])
    c = float(p["separation"]) / 2
    R = spec.radius
    sub = max(3, int(round(spacing / spec.resolution)))
    h = spacing / sub
    M = int(np.ceil(R * 1.02 / h))
    xs = h * np.arange(-M, M + 1)
    n = len(xs)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    z = (X + 1j * Y).reshape(-1)
    i, j = np.meshgrid(np.arange(n - 1), np.arange(n - 1), indexing="ij")
    i, j = i.reshape(-1), j.reshape(-1)
    centre = xs[i] + h / 2 + 1j * (xs[j] + h / 2)
    # tube sites: quads on the spacing lattice, nearest the origin first
    on_lattice = ((i - M) % sub == 0) & ((j - M) % sub == 0)
    safe = np.abs(centre) + 2 * h < np.sqrt(max(R * R - c * c, 0.0)) - 2 * h
    cand = np.flatnonzero(on_lattice & safe & (np.abs(centre) >= float(p["tube_rmin"])))
    cand = cand[np.lexsort((cand, np.round(np.abs(centre[cand]), 12)))]
    n_tubes = n_handles + 1
    if len(cand) < n_tubes:
        raise ValueError(f"only {len(cand)} tube sites available, need {n_tubes}")
    holes = np.zeros(len(i), dtype=bool)
    holes[cand[:n_tubes]] = True
    v00 = i * n + j
    v10 = (i + 1) * n + j
    v11 = (i + 1) * n + j + 1
    v01 = i * n + j + 1
    q = ~holes
    top = np.concatenate([np.stack([v00, v10, v11], 1)[q], np.stack([v00, v11, v01], 1)[q]])
    nz = len(z)
    bot = top[:, ::-1] + nz
    walls = []
    for k in np.flatnonzero(holes):
        ring = [v00[k], v01[k], v11[k], v10[k]]  # clockwise: the top hole boundary
        for a, bb in zip(ring, ring[1:] + ring[:1]):
            walls.append((bb, a, a + nz))
            walls.append((bb, a + nz, bb + nz))
    verts = np.concatenate([np.stack([z, np.full(nz, c + 0j)], 1),
                            np.stack([z, np.full(nz, -c + 0j)], 1)])
    faces = np.concatenate([top, bot, np.array(walls, dtype=np.int64).reshape(-1, 3)])
    keep = np.abs(z[faces % nz]).min(axis=1) < R
    curve = DiscreteCurve(verts, faces[keep], name=f"handle_body(tubes={n_handles})",
                          holomorphic=False, check_area=False)
    curve = curve.subset(np.ones(len(curve.faces), bool))
    out = slice_by_sphere(curve, R)
    out.holomorphic = False
    return out


def generate(spec: FamilySpec) -> DiscreteCurve:
    """Build the curve described by ``spec`` over the ball of radius ``1 + margin``."""
    fam = spec.family
    if fam == "flat_sheets":
        return _flat_sheets(spec)
    if fam == "branched_cover":
        return _branched_cover(spec)
    if fam == "poly_graph":
        return _poly_graph(spec)
    if fam == "handle_body":
        return _handle_body(spec)
    path = spec.params.get("path")
    if path is None:
        raise ValueError("from_file needs a 'path' parameter")
    return load_curve(path)


def sheet_oracle(spec: FamilySpec, point: complex, tol: float = 1e-9) -> list[tuple[complex, complex]]:
    """Exact fiber of the first-coordinate projection over ``point``.

    Raises
    ------
    ValueError
        For families without a closed-form fiber, or when ``point`` is a
        branch value.
    """
    z = complex(point)
    fam = spec.family
    if fam == "flat_sheets":
        return [(z, c) for c in spec.sheet_offsets()]
    if fam == "poly_graph":
        coeffs = [complex(c) for c in spec.params["coefficients"]]
        return [(z, complex(np.polyval(coeffs[::-1], z)))]
    if fam == "branched_cover":
        d = int(spec.params["degree"])
        s = float(spec.params["scale"])
        b = complex(spec.params["branch_point"])
        u = s * (z - b)
        if abs(z - b) <= tol:
            raise ValueError(f"{z} is a branch value")
        root = abs(u) ** (1.0 / d) * np.exp(1j * np.angle(u) / d)
        return [(z, complex(root * np.exp(2j * np.pi * j / d))) for j in range(d)]
    raise ValueError(f"no closed-form fiber for family {fam!r}")


def branch_values(spec: FamilySpec) -> list[complex]:
    """Critical values of the first-coordinate projection."""
    if spec.family == "branched_cover" and int(spec.params["degree"]) > 1:
        return [complex(spec.params["branch_point"])]
    return []


def oracle_component_count(spec: FamilySpec, polygon, steps_per_side: int = 400) -> int:
    """Number of connected sheets over a simply connected polygon.

    Continues the fiber of :func:`sheet_oracle` once around the polygon
    boundary and counts the cycles of the resulting monodromy permutation.
    """
    poly = [complex(p) for p in polygon]
    path = []
    for a, b in zip(poly, poly[1:] + poly[:1]):
        path.extend(a + (b - a) * np.arange(steps_per_side) / steps_per_side)
    path.append(poly[0])
    start = np.array([w for _, w in sheet_oracle(spec, path[0])])
    cur = start.copy()
    for pt in path[1:]:
        nxt = np.array([w for _, w in sheet_oracle(spec, pt)])
        cur = np.array([nxt[np.argmin(np.abs(nxt - c))] for c in cur])
    perm = [int(np.argmin(np.abs(start - c))) for c in cur]
    seen, cycles = set(), 0
    for i in range(len(perm)):
        if i in seen:
            continue
        cycles += 1
        while i not in seen:
            seen.add(i)
            i = perm[i]
    return cycles
