from __future__ import annotations

import numpy as np
import pytest

from lamina.surface_mesh import DiscreteCurve

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record():
    """Register a pass/fail line for an acceptance criterion."""

    def _record(number: int, ok: bool, detail: str = ""):
        _ACCEPTANCE[number] = (bool(ok), detail)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


# ---------------------------------------------------------------------------
# small hand-built meshes
# ---------------------------------------------------------------------------

def grid_disk(n: int = 6, half: float = 1.0, height=None) -> DiscreteCurve:
    """Triangulated square graph over ``[-half, half]^2``."""
    xs = np.linspace(-half, half, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    z = (X + 1j * Y).reshape(-1)
    w = np.zeros_like(z) if height is None else height(z)
    faces = []
    for i in range(n):
        for j in range(n):
            a, b = i * (n + 1) + j, (i + 1) * (n + 1) + j
            faces += [(a, b, b + 1), (a, b + 1, a + 1)]
    return DiscreteCurve(np.stack([z, w], 1), faces)


def octahedron() -> DiscreteCurve:
    v = np.zeros((6, 4))
    for i in range(3):
        v[2 * i, i] = 1.0
        v[2 * i + 1, i] = -1.0
    # 0:+x 1:-x 2:+y 3:-y 4:+z 5:-z (first three real coordinates)
    faces = [(0, 2, 4), (2, 1, 4), (1, 3, 4), (3, 0, 4),
             (2, 0, 5), (1, 2, 5), (3, 1, 5), (0, 3, 5)]
    return DiscreteCurve(v, faces, name="octahedron")


def clifford_torus(n: int = 8) -> DiscreteCurve:
    u = 2 * np.pi * np.arange(n) / n
    U, V = np.meshgrid(u, u, indexing="ij")
    verts = np.stack([np.exp(1j * U).reshape(-1), np.exp(1j * V).reshape(-1)], 1)
    faces = []
    for i in range(n):
        for j in range(n):
            a = i * n + j
            b = ((i + 1) % n) * n + j
            c = ((i + 1) % n) * n + (j + 1) % n
            d = i * n + (j + 1) % n
            faces.append((a, b, c, d))
    return DiscreteCurve(verts, faces, name="torus", holomorphic=False)


@pytest.fixture
def flat_disk():
    return grid_disk()


def paved_partition(curve, k: int, jitter: complex | None = None, seed: int = 0,
                    k_max: int | None = None):
    """Pave ``curve`` over the axis frame and return ``(grid, paving, regions)``."""
    from lamina.grid_paving import ProjectionFrame, build_grid, pave, region_map, select_q

    frame = ProjectionFrame.from_direction((1, 0), 1.0)
    pts = frame.project(curve.vertices)
    grid = build_grid(k, jitter_seed=seed, points=pts, jitter=jitter, k_max=k_max)
    paving = pave(curve, frame, grid)
    grid = select_q(curve, frame, grid, paving)
    paving.grid = grid
    return grid, paving, region_map(grid)
