"""Projection frame, square grid, parity families and the cross paving.

Conventions
-----------
The square ``C = [-1, 1]^2`` (shifted by the grid jitter) is cut into
``2k x 2k`` cells of side ``1/k``; cell ``(i, j)`` has lower-left corner
``origin + (i, j) / k``.  Cells are further halved into quarters of side
``1/(2k)`` (index ``(2i + a, 2j + b)``), which is the resolution the mesh
is cut at: every cross boundary and every cell boundary is a quarter line.

Family ``f`` holds the cells with ``(i % 2, j % 2) == divmod(f, 2)``.

Given the family ``Q``, cells are classified by their parity relative to
``Q``: ``(0, 0)`` are the Q cells, ``(1, 1)`` are cross centres, and the
remaining cells are arms.  An arm cell between two centres is split along
its midline, each half going to the adjacent centre; the midline is the
alpha side shared by the two crosses.  An arm cell with a single adjacent
centre (at the border of ``C``) goes to it whole.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .surface_mesh import DiscreteCurve, edge_table

log = logging.getLogger(__name__)


class JitterError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# projection frame
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionFrame:
    direction: np.ndarray
    unitary: np.ndarray
    omega_mass: float = 0.0

    @classmethod
    def from_direction(cls, direction, omega_mass: float = 0.0) -> "ProjectionFrame":
        d = np.asarray(direction, dtype=complex)
        d = d / np.linalg.norm(d)
        u = np.array([[d[0].conjugate(), d[1].conjugate()], [-d[1], d[0]]])
        return cls(direction=d, unitary=u, omega_mass=omega_mass)

    def project(self, vertices: np.ndarray) -> np.ndarray:
        """First coordinate after applying the unitary."""
        v = np.asarray(vertices, dtype=complex).reshape(-1, 2)
        return v @ self.unitary[0]


def projected_areas(proj: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Signed area of each projected triangle (positive = orientation kept)."""
    if len(faces) == 0:
        return np.zeros(0)
    a = proj[faces[:, 1]] - proj[faces[:, 0]]
    b = proj[faces[:, 2]] - proj[faces[:, 0]]
    return 0.5 * (a.conj() * b).imag


def omega_mass(curve: DiscreteCurve, direction) -> float:
    """Projected area with multiplicity over ``direction``, divided by the curve area."""
    if curve.is_empty:
        return 0.0
    frame = ProjectionFrame.from_direction(direction)
    p = frame.project(curve.vertices)
    total = float(np.sum(curve.face_areas))
    return float(np.sum(np.abs(projected_areas(p, curve.faces)))) / total


def sample_directions(samples: int, seed: int = 0) -> list[np.ndarray]:
    """Coordinate axes first, then a rotated Fibonacci lattice on CP^1."""
    out = [np.array([1, 0], complex), np.array([0, 1], complex)]
    m = max(samples - 2, 0)
    if m:
        rng = np.random.default_rng(seed)
        phase = rng.uniform(0, 2 * np.pi)
        golden = np.pi * (3 - np.sqrt(5))
        for i in range(m):
            zc = 1 - 2 * (i + 0.5) / m
            theta = np.arccos(zc)
            phi = phase + golden * i
            out.append(np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)]))
    return out[:samples]


def choose_direction(curve: DiscreteCurve, samples: int = 1, seed: int = 0) -> ProjectionFrame:
    """Frame whose projection carries the most of the curve's area."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    best = None
    for d in sample_directions(samples, seed):
        m = omega_mass(curve, d)
        if best is None or m > best[1]:
            best = (d, m)
    if best[1] <= 0:
        raise ValueError("every sampled direction has zero projected mass")
    return ProjectionFrame.from_direction(best[0], best[1])


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def default_epsilon(k: int) -> float:
    return 1.0 / np.log(k + 3)


@dataclass(frozen=True)
class GridSpec:
    k: int
    jitter: complex = 0j
    epsilon_k: float = 0.0
    q_family: int | None = None
    family_sheets: tuple = ()

    @property
    def n(self) -> int:
        """Cells per side."""
        return 2 * self.k

    @property
    def origin(self) -> complex:
        return complex(-1, -1) + self.jitter

    @property
    def cell_area(self) -> float:
        return 1.0 / self.k ** 2

    def cell_bounds(self, i: int, j: int):
        o = self.origin
        return (o.real + i / self.k, o.real + (i + 1) / self.k,
                o.imag + j / self.k, o.imag + (j + 1) / self.k)

    def cell_polygon(self, i, j):
        x0, x1, y0, y1 = self.cell_bounds(i, j)
        return [complex(x0, y0), complex(x1, y0), complex(x1, y1), complex(x0, y1)]

    def family_of(self, i, j):
        return 2 * (np.asarray(i) % 2) + (np.asarray(j) % 2)

    @cached_property
    def families(self) -> list[list[tuple[int, int]]]:
        fam = [[] for _ in range(4)]
        for i in range(self.n):
            for j in range(self.n):
                fam[int(self.family_of(i, j))].append((i, j))
        return fam

    def quarter_lines(self, axis: int) -> np.ndarray:
        o = self.origin.real if axis == 0 else self.origin.imag
        return o + np.arange(4 * self.k + 1) / (2 * self.k)

    def locate_cell(self, point: complex, tol: float = 1e-12):
        """Cell containing ``point``; ``None`` outside C or on a cell edge."""
        u = (complex(point) - self.origin) * self.k
        fi, fj = u.real, u.imag
        i, j = int(np.floor(fi)), int(np.floor(fj))
        if not (0 <= i < self.n and 0 <= j < self.n):
            return None
        if min(fi - i, i + 1 - fi, fj - j, j + 1 - fj) <= tol * self.k:
            return None
        return i, j


def _lattice_distance(x: np.ndarray, origin: float, step: float) -> np.ndarray:
    u = (x - origin) / step
    return np.abs(u - np.round(u)) * step


def jitter_ok(points: np.ndarray, jitter: complex, k_check: int, tol: float,
              critical_values=(), clearance: float = 0.0) -> bool:
    step = 1.0 / (2 * k_check)
    o = complex(-1, -1) + jitter
    pts = np.asarray(points, dtype=complex)
    if len(pts):
        if _lattice_distance(pts.real, o.real, step).min() <= tol:
            return False
        if _lattice_distance(pts.imag, o.imag, step).min() <= tol:
            return False
    for cv in critical_values:
        cv = complex(cv)
        d = min(_lattice_distance(np.array([cv.real]), o.real, step)[0],
                _lattice_distance(np.array([cv.imag]), o.imag, step)[0])
        if d <= clearance * step:
            return False
    return True


def build_grid(k: int, jitter_seed: int = 0, points=None, critical_values=(),
               tol: float = 1e-7, clearance: float = 0.1, k_max: int | None = None,
               jitter: complex | None = None, epsilon: float | None = None,
               retries: int = 200) -> GridSpec:
    """Jittered ``2k x 2k`` grid over C.

    ``points`` are projected mesh vertices that must stay farther than
    ``tol`` from every quarter line of the grid at scale ``k_max`` (default
    ``k``); ``critical_values`` must stay farther than ``clearance`` times
    the quarter spacing.  Passing ``jitter`` reuses a known offset (nested
    sweeps) and only validates it.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    k_check = max(k, k_max or k)
    pts = np.zeros(0, complex) if points is None else np.asarray(points, complex)
    eps = default_epsilon(k) if epsilon is None else float(epsilon)
    if jitter is not None:
        if not jitter_ok(pts, jitter, k_check, tol, critical_values, clearance):
            raise JitterError(f"inherited jitter {jitter} is not generic at k={k_check}")
        return GridSpec(k=k, jitter=complex(jitter), epsilon_k=eps)
    rng = np.random.default_rng(jitter_seed)
    amp = 1.0 / (4 * k_check)
    for _ in range(retries):
        j = complex(*rng.uniform(-amp, amp, size=2))
        if jitter_ok(pts, j, k_check, tol, critical_values, clearance):
            return GridSpec(k=k, jitter=j, epsilon_k=eps)
    raise JitterError(f"no generic jitter found after {retries} retries at k={k_check}")


# ---------------------------------------------------------------------------
# cutting the curve along the quarter lines
# ---------------------------------------------------------------------------

@dataclass
class PavedMesh:
    """The curve cut along every quarter line and clipped to C."""

    grid: GridSpec
    vertices: np.ndarray   # (N, 2) complex, points of C^2
    proj: np.ndarray       # (N,) complex projection
    faces: np.ndarray      # (F, 3)
    origin: np.ndarray     # (F,) index of the face of the uncut curve
    quarter: np.ndarray    # (F, 2) quarter indices in [0, 4k)
    vtag: np.ndarray       # (N,) vertical quarter line through the vertex, or -1
    htag: np.ndarray       # (N,) horizontal quarter line, or -1
    outside_mass: float = 0.0

    @cached_property
    def table(self):
        return edge_table(self.faces, len(self.vertices))

    @cached_property
    def signed_area(self) -> np.ndarray:
        return projected_areas(self.proj, self.faces)

    @cached_property
    def pi_area(self) -> np.ndarray:
        """Face contribution to the projected area with multiplicity."""
        return np.abs(self.signed_area)

    @cached_property
    def cell(self) -> np.ndarray:
        return self.quarter // 2

    @cached_property
    def cell_index(self) -> np.ndarray:
        c = self.cell
        return c[:, 0] * self.grid.n + c[:, 1]

    @cached_property
    def edge_on_line(self) -> np.ndarray:
        e = self.table.edges
        v = (self.vtag[e[:, 0]] == self.vtag[e[:, 1]]) & (self.vtag[e[:, 0]] >= 0)
        h = (self.htag[e[:, 0]] == self.htag[e[:, 1]]) & (self.htag[e[:, 0]] >= 0)
        return v | h

    @cached_property
    def edge_proj_length(self) -> np.ndarray:
        e = self.table.edges
        return np.abs(self.proj[e[:, 1]] - self.proj[e[:, 0]])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.proj[self.faces].mean(axis=1)

    def subset(self, mask) -> "PavedMesh":
        mask = np.asarray(mask, bool)
        f = self.faces[mask]
        used = np.unique(f)
        remap = np.full(len(self.vertices), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        return PavedMesh(self.grid, self.vertices[used], self.proj[used], remap[f],
                         self.origin[mask], self.quarter[mask], self.vtag[used],
                         self.htag[used], self.outside_mass)

    def to_curve(self, name=None) -> DiscreteCurve:
        return DiscreteCurve(self.vertices, self.faces, name=name, check_area=False)


def _cut_lines(V, P, F, origin, vtag, htag, axis, values):
    coord = (P.real if axis == 0 else P.imag).copy()
    fc = coord[F]
    fmin, fmax = fc.min(axis=1), fc.max(axis=1)
    for m, c in enumerate(values):
        idx = np.flatnonzero((fmin < c) & (fmax >= c))
        if len(idx) == 0:
            continue
        tri = F[idx]
        side = coord[tri] >= c
        n_pos = side.sum(axis=1)
        lone = np.where((n_pos == 1)[:, None], side, ~side)
        shift = np.argmax(lone, axis=1)
        rot = (shift[:, None] + np.arange(3)[None, :]) % 3
        tri = np.take_along_axis(tri, rot, axis=1)
        a, p, q = tri[:, 0], tri[:, 1], tri[:, 2]
        nv = np.int64(len(coord))
        keys = np.concatenate([np.minimum(a, p) * nv + np.maximum(a, p),
                               np.minimum(a, q) * nv + np.maximum(a, q)])
        uniq, inv = np.unique(keys, return_inverse=True)
        e0, e1 = uniq // nv, uniq % nv
        s0, s1 = coord[e0] - c, coord[e1] - c
        t = s0 / (s0 - s1)
        newV = V[e0] + t[:, None] * (V[e1] - V[e0])
        newP = P[e0] + t * (P[e1] - P[e0])
        if axis == 0:
            newP = c + 1j * newP.imag
            nvt = np.full(len(uniq), m)
            nht = np.full(len(uniq), -1)
        else:
            newP = newP.real + 1j * c
            nvt = np.where(vtag[e0] == vtag[e1], vtag[e0], -1)
            nht = np.full(len(uniq), m)
        ids = nv + inv
        u, w = ids[: len(a)], ids[len(a):]
        V = np.concatenate([V, newV])
        P = np.concatenate([P, newP])
        vtag = np.concatenate([vtag, nvt])
        htag = np.concatenate([htag, nht])
        new_coord = newP.real if axis == 0 else newP.imag
        coord = np.concatenate([coord, new_coord])
        t_a = np.stack([a, u, w], 1)
        t_b = np.stack([u, p, q], 1)
        t_c = np.stack([u, q, w], 1)
        F[idx] = t_a
        F = np.concatenate([F, t_b, t_c])
        origin = np.concatenate([origin, origin[idx], origin[idx]])
        new_f = np.concatenate([idx, np.arange(len(F) - 2 * len(idx), len(F))])
        fmin = np.concatenate([fmin, np.empty(2 * len(idx))])
        fmax = np.concatenate([fmax, np.empty(2 * len(idx))])
        cc = coord[F[new_f]]
        fmin[new_f] = cc.min(axis=1)
        fmax[new_f] = cc.max(axis=1)
    return V, P, F, origin, vtag, htag


def pave(curve: DiscreteCurve, frame: ProjectionFrame, grid: GridSpec) -> PavedMesh:
    """Cut ``curve`` along all quarter lines of ``grid`` and clip it to C."""
    V = np.array(curve.vertices, dtype=complex)
    P = frame.project(V)
    F = np.array(curve.faces, dtype=np.int64)
    origin = np.arange(len(F))
    vtag = np.full(len(V), -1, dtype=np.int64)
    htag = np.full(len(V), -1, dtype=np.int64)
    V, P, F, origin, vtag, htag = _cut_lines(V, P, F, origin, vtag, htag, 0, grid.quarter_lines(0))
    V, P, F, origin, vtag, htag = _cut_lines(V, P, F, origin, vtag, htag, 1, grid.quarter_lines(1))
    cen = P[F].mean(axis=1)
    u = (cen - grid.origin) * (2 * grid.k)
    q = np.stack([np.floor(u.real), np.floor(u.imag)], 1).astype(np.int64)
    n4 = 4 * grid.k
    inside = np.all((q >= 0) & (q < n4), axis=1)
    outside_mass = float(np.sum(np.abs(projected_areas(P, F[~inside]))))
    mesh = PavedMesh(grid, V, P, F, origin, q, vtag, htag, outside_mass)
    return mesh.subset(inside)


# ---------------------------------------------------------------------------
# family selection and crosses
# ---------------------------------------------------------------------------

def family_sheets(paving: PavedMesh) -> np.ndarray:
    """Mean sheet number over each of the four families."""
    g = paving.grid
    c = paving.cell
    fam = g.family_of(c[:, 0], c[:, 1])
    mass = np.bincount(fam, weights=paving.pi_area, minlength=4)
    return mass / (g.k ** 2 * g.cell_area)


def select_q(curve: DiscreteCurve, frame: ProjectionFrame, grid: GridSpec,
             paving: PavedMesh | None = None, rtol: float = 1e-9) -> GridSpec:
    """Pick the least covered family; near-ties go to the lowest index."""
    if paving is None:
        paving = pave(curve, frame, grid)
    s = family_sheets(paving)
    lo = s.min()
    q = int(np.flatnonzero(s <= lo + rtol * max(abs(lo), 1.0))[0])
    return replace(grid, q_family=q, family_sheets=tuple(float(x) for x in s))


@dataclass
class Cross:
    cross_id: int
    center_cell: tuple
    arms: list                   # (cell, part) with part in {"full", "left", "right", "down", "up"}
    alpha_sides: list            # (direction, neighbour cross id, segment endpoints)
    quarters: list               # quarter indices covered
    clipped: bool
    area: float
    missing_sides: list = field(default_factory=list)


_DIRS = {"right": (1, 0), "left": (-1, 0), "up": (0, 1), "down": (0, -1)}
# half of the arm cell adjacent to the centre, as quarter offsets inside the cell
_NEAR_HALF = {"right": [(0, 0), (0, 1)], "left": [(1, 0), (1, 1)],
              "up": [(0, 0), (1, 0)], "down": [(0, 1), (1, 1)]}


def build_crosses(grid: GridSpec) -> list[Cross]:
    """Plus-shaped tiles of ``C - Q`` for the selected family."""
    if grid.q_family is None:
        raise ValueError("select a family first")
    pi, pj = divmod(grid.q_family, 2)
    n, k = grid.n, grid.k
    centres = [(i, j) for i in range(n) for j in range(n)
               if (i - pi) % 2 == 1 and (j - pj) % 2 == 1]
    ids = {c: t for t, c in enumerate(centres)}
    o = grid.origin
    out = []
    for (i, j), t in ids.items():
        quarters = [(2 * i + a, 2 * j + b) for a in (0, 1) for b in (0, 1)]
        arms, alphas, missing = [], [], []
        clipped = False
        for name, (di, dj) in _DIRS.items():
            ai, aj = i + di, j + dj
            if not (0 <= ai < n and 0 <= aj < n):
                clipped = True
                missing.append(name)
                continue
            other = (i + 2 * di, j + 2 * dj)
            if other in ids:
                arms.append(((ai, aj), name))
                quarters.extend((2 * ai + a, 2 * aj + b) for a, b in _NEAR_HALF[name])
                if di:
                    x = o.real + (ai + 0.5) / k
                    seg = (complex(x, o.imag + aj / k), complex(x, o.imag + (aj + 1) / k))
                else:
                    y = o.imag + (aj + 0.5) / k
                    seg = (complex(o.real + ai / k, y), complex(o.real + (ai + 1) / k, y))
                alphas.append((name, ids[other], seg))
            else:
                clipped = True
                missing.append(name)
                arms.append(((ai, aj), "full"))
                quarters.extend((2 * ai + a, 2 * aj + b) for a in (0, 1) for b in (0, 1))
        out.append(Cross(t, (i, j), arms, alphas, quarters, clipped,
                         len(quarters) / (4.0 * k * k), missing))
    return out


@dataclass
class RegionMap:
    """Assignment of quarters to Q cells and crosses for one family."""

    grid: GridSpec
    crosses: list
    q_cells: list                 # (i, j) of each Q cell, region ids 0..len-1
    quarter_region: np.ndarray    # (4k, 4k) region id
    region_area: np.ndarray

    @property
    def n_q(self) -> int:
        return len(self.q_cells)

    def is_cross(self, region):
        return np.asarray(region) >= self.n_q


def region_map(grid: GridSpec, crosses: list[Cross] | None = None) -> RegionMap:
    if crosses is None:
        crosses = build_crosses(grid)
    n4 = 4 * grid.k
    qr = np.full((n4, n4), -1, dtype=np.int64)
    q_cells = grid.families[grid.q_family]
    for r, (i, j) in enumerate(q_cells):
        qr[2 * i:2 * i + 2, 2 * j:2 * j + 2] = r
    for c in crosses:
        for a, b in c.quarters:
            if qr[a, b] != -1:
                raise AssertionError(f"quarter {(a, b)} assigned twice")
            qr[a, b] = len(q_cells) + c.cross_id
    if np.any(qr < 0):
        raise AssertionError("crosses and Q cells do not tile C")
    area = np.array([grid.cell_area] * len(q_cells) + [c.area for c in crosses])
    return RegionMap(grid, crosses, q_cells, qr, area)
