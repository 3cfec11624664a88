"""Triangulated oriented surfaces in C^2 and their invariants.

A :class:`DiscreteCurve` stores vertices as complex pairs ``(z, w)`` and
faces as counterclockwise vertex triples.  The flat metric of
C^2 = R^4 is used for areas and lengths.

Mesh file format (JSON)::

    {"name": "...", "vertices": [[re_z, im_z, re_w, im_w], ...],
     "faces": [[i, j, k], ...]}
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)


class MeshError(ValueError):
    """Raised for malformed or non-manifold mesh data."""


class TopologyError(MeshError):
    """Raised when Euler bookkeeping produces an impossible genus."""


# ---------------------------------------------------------------------------
# array-level helpers, shared with the paving code
# ---------------------------------------------------------------------------

def as_real4(vertices: np.ndarray) -> np.ndarray:
    """(N, 2) complex -> (N, 4) real ``[re z, im z, re w, im w]``."""
    v = np.asarray(vertices, dtype=complex).reshape(-1, 2)
    return np.stack([v[:, 0].real, v[:, 0].imag, v[:, 1].real, v[:, 1].imag], axis=1)


def face_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Euclidean area of each triangle in R^4."""
    if len(faces) == 0:
        return np.zeros(0)
    p = as_real4(vertices)
    e1 = p[faces[:, 1]] - p[faces[:, 0]]
    e2 = p[faces[:, 2]] - p[faces[:, 0]]
    g11 = np.einsum("ij,ij->i", e1, e1)
    g22 = np.einsum("ij,ij->i", e2, e2)
    g12 = np.einsum("ij,ij->i", e1, e2)
    return 0.5 * np.sqrt(np.maximum(g11 * g22 - g12 * g12, 0.0))


def holomorphy_residuals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Kahler-angle defect ``1 - |cos theta|`` of each face plane.

    For an orthonormal basis ``u1, u2`` of the face plane, ``cos theta`` is
    ``<J u1, u2>``; it has modulus one exactly when the plane is a complex
    line.
    """
    if len(faces) == 0:
        return np.zeros(0)
    v = np.asarray(vertices, dtype=complex)
    a = v[faces[:, 1]] - v[faces[:, 0]]
    b = v[faces[:, 2]] - v[faces[:, 0]]
    # real inner product and the Kahler form omega(a, b) = Im <a, b>_herm
    na = np.sqrt(np.sum(np.abs(a) ** 2, axis=1))
    a_hat = a / na[:, None]
    b_perp = b - np.sum((a_hat.conj() * b).real, axis=1)[:, None] * a_hat
    nb = np.sqrt(np.sum(np.abs(b_perp) ** 2, axis=1))
    b_hat = b_perp / nb[:, None]
    cos_k = np.sum((a_hat.conj() * b_hat).imag, axis=1)
    return np.clip(1.0 - np.abs(cos_k), 0.0, 1.0)


@dataclass(frozen=True)
class EdgeTable:
    """Undirected edges of a triangle list.

    Half-edge ``3*f + i`` runs from ``faces[f, i]`` to ``faces[f, (i+1)%3]``.
    """

    edges: np.ndarray        # (E, 2) sorted vertex pairs
    halfedge_edge: np.ndarray  # (3F,) edge id of each half-edge
    counts: np.ndarray       # (E,) number of incident half-edges
    twin: np.ndarray         # (3F,) opposite half-edge or -1

    @property
    def boundary_halfedges(self) -> np.ndarray:
        return np.flatnonzero(self.counts[self.halfedge_edge] == 1)


def edge_table(faces: np.ndarray, n_vertices: int | None = None) -> EdgeTable:
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    if n_vertices is None:
        n_vertices = int(faces.max()) + 1 if len(faces) else 0
    src = faces.reshape(-1)
    dst = faces[:, [1, 2, 0]].reshape(-1)
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    key = lo * np.int64(max(n_vertices, 1)) + hi
    uniq, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
    edges = np.stack([uniq // max(n_vertices, 1), uniq % max(n_vertices, 1)], axis=1)
    twin = np.full(len(src), -1, dtype=np.int64)
    order = np.argsort(inv, kind="stable")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    pair = np.flatnonzero(counts == 2)
    h0 = order[starts[pair]]
    h1 = order[starts[pair] + 1]
    twin[h0] = h1
    twin[h1] = h0
    return EdgeTable(edges=edges, halfedge_edge=inv, counts=counts, twin=twin)


def label_components(n_faces: int, table: EdgeTable, same: np.ndarray | None = None):
    """Edge-connected components of faces.

    ``same`` is an optional per-face label; faces are only joined across an
    edge when their labels agree.  Returns ``(n_components, labels)``.
    """
    if n_faces == 0:
        return 0, np.zeros(0, dtype=np.int64)
    h = np.flatnonzero(table.twin >= 0)
    h = h[h < table.twin[h]]
    f0 = h // 3
    f1 = table.twin[h] // 3
    if same is not None:
        keep = same[f0] == same[f1]
        f0, f1 = f0[keep], f1[keep]
    adj = coo_matrix((np.ones(len(f0), dtype=np.int8), (f0, f1)), shape=(n_faces, n_faces))
    n, labels = connected_components(adj, directed=False)
    return n, labels.astype(np.int64)


def boundary_loops(faces: np.ndarray, table: EdgeTable) -> list[list[int]]:
    """Closed cycles of boundary half-edges, traced by rotating around vertices."""
    bnd = table.boundary_halfedges
    if len(bnd) == 0:
        return []
    is_bnd = np.zeros(len(table.twin), dtype=bool)
    is_bnd[bnd] = True
    succ = {}
    for h in bnd.tolist():
        g = 3 * (h // 3) + (h % 3 + 1) % 3
        guard = 0
        while not is_bnd[g]:
            t = int(table.twin[g])
            g = 3 * (t // 3) + (t % 3 + 1) % 3
            guard += 1
            if guard > len(table.twin):
                raise MeshError("boundary rotation did not terminate")
        succ[h] = g
    loops, seen = [], set()
    for h in bnd.tolist():
        if h in seen:
            continue
        loop = []
        while h not in seen:
            seen.add(h)
            loop.append(h)
            h = succ[h]
        loops.append(loop)
    return loops


# ---------------------------------------------------------------------------
# curve
# ---------------------------------------------------------------------------

class DiscreteCurve:
    """Triangulated oriented surface with a map to C^2.

    Parameters
    ----------
    vertices : array_like
        ``(N, 2)`` complex coordinates, or ``(N, 4)`` real quadruples.
    faces : array_like
        ``(F, 3)`` counterclockwise index triples.  Quads are split.
    name : str, optional
    holomorphic : bool
        False for curves that are only topological models.
    check_area : bool
        Reject zero-area triangles (on by default).

    Raises
    ------
    MeshError
        On non-manifold edges, inconsistent orientation, bad indices or
        degenerate triangles.
    """

    def __init__(self, vertices, faces, name: str | None = None,
                 holomorphic: bool = True, check_area: bool = True):
        v = np.asarray(vertices)
        if v.size == 0:
            v = np.zeros((0, 2), dtype=complex)
        elif not np.iscomplexobj(v) and v.ndim == 2 and v.shape[1] == 4:
            v = v[:, 0] + 1j * v[:, 1], v[:, 2] + 1j * v[:, 3]
            v = np.stack(v, axis=1)
        v = np.asarray(v, dtype=complex).reshape(-1, 2)
        f = _triangulate(faces)
        if len(f) and (f.min() < 0 or f.max() >= len(v)):
            raise MeshError("face index out of range")
        if len(f) and np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise MeshError("face with repeated vertex")
        self.vertices = v
        self.faces = f
        self.vertices.flags.writeable = False
        self.faces.flags.writeable = False
        self.name = name
        self.holomorphic = holomorphic
        self.flags: set[str] = set()
        self._validate(check_area)

    def _validate(self, check_area: bool) -> None:
        if len(self.faces) == 0:
            return
        t = self.table
        if np.any(t.counts > 2):
            bad = t.edges[np.flatnonzero(t.counts > 2)[0]]
            raise MeshError(f"non-manifold edge {tuple(bad)} shared by >= 3 faces")
        src = self.faces.reshape(-1)
        fwd = src < self.faces[:, [1, 2, 0]].reshape(-1)
        both = t.twin >= 0
        if np.any(fwd[both] == fwd[t.twin[both]]):
            raise MeshError("inconsistent orientation of adjacent faces")
        if check_area:
            if np.any(self.face_areas <= 0.0):
                raise MeshError("degenerate (zero-area) triangle")

    # -- derived structure --------------------------------------------------

    @cached_property
    def table(self) -> EdgeTable:
        return edge_table(self.faces, len(self.vertices))

    @cached_property
    def face_areas(self) -> np.ndarray:
        return face_areas(self.vertices, self.faces)

    @cached_property
    def component_ids(self) -> np.ndarray:
        return label_components(len(self.faces), self.table)[1]

    @property
    def n_components(self) -> int:
        return int(self.component_ids.max()) + 1 if len(self.faces) else 0

    @cached_property
    def boundary_loops(self) -> list[list[int]]:
        """Boundary loops as lists of half-edge ids."""
        return boundary_loops(self.faces, self.table)

    def loop_vertices(self, loop: list[int]) -> np.ndarray:
        h = np.asarray(loop)
        return self.faces.reshape(-1)[h]

    @property
    def is_empty(self) -> bool:
        return len(self.faces) == 0

    # -- derived curves -----------------------------------------------------

    def subset(self, face_mask) -> "DiscreteCurve":
        """Curve made of the selected faces, unreferenced vertices dropped."""
        f = self.faces[np.asarray(face_mask)]
        used = np.unique(f)
        remap = np.full(len(self.vertices), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        out = DiscreteCurve(self.vertices[used], remap[f], name=self.name,
                            holomorphic=self.holomorphic, check_area=False)
        return out

    def scaled(self, factor: float) -> "DiscreteCurve":
        return DiscreteCurve(self.vertices * factor, self.faces, name=self.name,
                             holomorphic=self.holomorphic, check_area=False)

    def __repr__(self):
        return (f"DiscreteCurve(name={self.name!r}, V={len(self.vertices)}, "
                f"F={len(self.faces)})")


def _triangulate(faces) -> np.ndarray:
    if isinstance(faces, np.ndarray):
        if faces.size == 0:
            return np.zeros((0, 3), dtype=np.int64)
        if faces.ndim == 2 and faces.shape[1] == 3:
            return np.array(faces, dtype=np.int64)
    out = []
    for face in faces:
        face = [int(i) for i in face]
        if len(face) < 3:
            raise MeshError(f"face with {len(face)} vertices")
        for i in range(1, len(face) - 1):
            out.append((face[0], face[i], face[i + 1]))
    return np.array(out, dtype=np.int64).reshape(-1, 3)


# ---------------------------------------------------------------------------
# statistics
# ---------------------------------------------------------------------------

@dataclass
class CurveStats:
    area: float
    genus: int
    boundary_count: int
    boundary_length: float
    euler_characteristic: int
    holomorphy_residual: float
    n_components: int = 0
    component_genus: list = field(default_factory=list)
    component_boundaries: list = field(default_factory=list)

    @property
    def budget_ratio(self) -> float:
        """(L + G + B) / A, the bounded-geometry ratio."""
        if self.area == 0:
            return float("inf")
        return (self.boundary_length + self.genus + self.boundary_count) / self.area

    def as_dict(self) -> dict:
        return asdict(self)


def euler_by_component(faces: np.ndarray, table: EdgeTable, labels: np.ndarray,
                       n: int) -> np.ndarray:
    """V - E + F of each labelled face set, taken as a closed subcomplex."""
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    lab3 = np.repeat(labels, 3)
    nv = np.int64(int(faces.max()) + 1)
    ne = np.int64(len(table.counts))
    fc = np.bincount(labels, minlength=n)
    ek = np.unique(lab3 * ne + table.halfedge_edge)
    ec = np.bincount(ek // ne, minlength=n)
    vk = np.unique(lab3 * nv + faces.reshape(-1))
    vc = np.bincount(vk // nv, minlength=n)
    return vc - ec + fc


def compute_stats(curve: DiscreteCurve) -> CurveStats:
    """Area, genus, boundary data and Euler characteristic of a curve.

    Genus is recovered per component from ``chi = 2 - 2g - b``.
    """
    if curve.is_empty:
        return CurveStats(0.0, 0, 0, 0.0, 0, 0.0)
    n = curve.n_components
    labels = curve.component_ids
    chi = euler_by_component(curve.faces, curve.table, labels, n)
    loops = curve.boundary_loops
    b = np.zeros(n, dtype=np.int64)
    for loop in loops:
        b[labels[loop[0] // 3]] += 1
    twice_g = 2 - chi - b
    if np.any(twice_g < 0) or np.any(twice_g % 2):
        raise TopologyError(f"impossible topology: chi={chi.tolist()} b={b.tolist()}")
    g = twice_g // 2
    bh = curve.table.boundary_halfedges
    src = curve.faces.reshape(-1)[bh]
    dst = curve.faces[:, [1, 2, 0]].reshape(-1)[bh]
    d = curve.vertices[dst] - curve.vertices[src]
    length = float(np.sum(np.sqrt(np.sum(np.abs(d) ** 2, axis=1))))
    res = holomorphy_residuals(curve.vertices, curve.faces)
    return CurveStats(
        area=float(np.sum(curve.face_areas)),
        genus=int(g.sum()),
        boundary_count=int(b.sum()),
        boundary_length=length,
        euler_characteristic=int(chi.sum()),
        holomorphy_residual=float(res.max()),
        n_components=n,
        component_genus=g.tolist(),
        component_boundaries=b.tolist(),
    )


# ---------------------------------------------------------------------------
# sphere slicing
# ---------------------------------------------------------------------------

def _sphere_jitter(sq_norm: np.ndarray, radius: float) -> float:
    r = radius
    for _ in range(50):
        if np.all(np.abs(sq_norm - r * r) > 1e-12 * r * r):
            return r
        r *= 1.0 + 1e-9
    raise MeshError("could not move the slicing sphere off the mesh vertices")


def split_by_sphere(curve: DiscreteCurve, radius: float):
    """Subdivide faces crossing the sphere ``|z|^2 + |w|^2 = radius^2``.

    Returns ``(curve, inside, radius)``: the subdivided curve (faces not
    crossing the sphere keep their order and come first), a per-face mask of
    faces inside the ball, and the radius actually used after jitter.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    v = curve.vertices
    f = curve.faces
    sq = np.sum(np.abs(v) ** 2, axis=1)
    radius = _sphere_jitter(sq, radius)
    r2 = radius * radius
    side = sq < r2
    fs = side[f]
    n_in = fs.sum(axis=1)
    mixed = (n_in == 1) | (n_in == 2)
    keep = f[~mixed]
    keep_in = n_in[~mixed] == 3
    mf = f[mixed]
    if len(mf) == 0:
        return curve, n_in == 3, radius
    ms = fs[mixed]
    # rotate so the lone vertex comes first
    lone_in = n_in[mixed] == 1
    lone_flag = np.where(lone_in[:, None], ms, ~ms)
    shift = np.argmax(lone_flag, axis=1)
    idx = (shift[:, None] + np.arange(3)[None, :]) % 3
    tri = np.take_along_axis(mf, idx, axis=1)
    a, p, q = tri[:, 0], tri[:, 1], tri[:, 2]
    nv = np.int64(len(v))
    e_keys = np.concatenate([np.minimum(a, p) * nv + np.maximum(a, p),
                             np.minimum(a, q) * nv + np.maximum(a, q)])
    uniq, inv = np.unique(e_keys, return_inverse=True)
    e0 = uniq // nv
    e1 = uniq % nv
    # solve |v0 + t (v1 - v0)|^2 = r^2 on the segment
    d = v[e1] - v[e0]
    A = np.sum(np.abs(d) ** 2, axis=1)
    B = 2.0 * np.sum((v[e0].conj() * d).real, axis=1)
    Cq = sq[e0] - r2
    disc = np.sqrt(np.maximum(B * B - 4 * A * Cq, 0.0))
    t1 = (-B + disc) / (2 * A)
    t2 = (-B - disc) / (2 * A)
    t = np.where((t1 >= 0) & (t1 <= 1), t1, t2)
    t = np.clip(t, 0.0, 1.0)
    new_v = v[e0] + t[:, None] * d
    ids = nv + inv
    u = ids[: len(a)]
    w = ids[len(a):]
    t_a = np.stack([a, u, w], axis=1)
    t_b = np.stack([u, p, q], axis=1)
    t_c = np.stack([u, q, w], axis=1)
    new_faces = np.concatenate([keep, t_a, t_b, t_c])
    a_in = side[a]
    inside = np.concatenate([keep_in, a_in, ~a_in, ~a_in])
    out = DiscreteCurve(np.concatenate([v, new_v]), new_faces, name=curve.name,
                        holomorphic=curve.holomorphic, check_area=False)
    return out, inside, radius


def slice_by_sphere(curve: DiscreteCurve, radius: float, keep: str = "inside") -> DiscreteCurve:
    """Part of ``curve`` inside (or outside) the sphere of given radius.

    Faces crossing the sphere are subdivided so the new boundary lies on
    the sphere.  An empty result carries the ``"empty_slice"`` flag.
    """
    if keep not in ("inside", "outside"):
        raise ValueError("keep must be 'inside' or 'outside'")
    split, inside, _ = split_by_sphere(curve, radius)
    mask = inside if keep == "inside" else ~inside
    out = split.subset(mask)
    if out.is_empty:
        log.warning("sphere of radius %g misses the curve", radius)
        out.flags.add("empty_slice")
    return out


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def curve_to_json(curve: DiscreteCurve) -> str:
    r4 = as_real4(curve.vertices)
    doc = {}
    if curve.name is not None:
        doc["name"] = curve.name
    doc["vertices"] = [[float(x) for x in row] for row in r4]
    doc["faces"] = [[int(i) for i in row] for row in curve.faces]
    return json.dumps(doc, separators=(",", ":"))


def save_curve(curve: DiscreteCurve, path) -> Path:
    path = Path(path)
    path.write_text(curve_to_json(curve))
    return path


def load_curve(path, holomorphic: bool = True) -> DiscreteCurve:
    """Read and validate a mesh file."""
    try:
        doc = json.loads(Path(path).read_text())
        verts = np.asarray(doc["vertices"], dtype=float).reshape(-1, 4)
        faces = doc["faces"]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise MeshError(f"cannot parse mesh file {path}: {exc}") from exc
    return DiscreteCurve(verts, faces, name=doc.get("name"), holomorphic=holomorphic)
