"""Pave a curve over the square grid and sort its pieces by shape.

Run with ``python demos/02_paving_and_crosses.py``.
"""
from collections import Counter

from lamina import (FamilySpec, TrimParams, build_grid, choose_direction, classify,
                    extract_partition, generate, pave, region_map, select_q, trim)

curve = generate(FamilySpec("poly_graph", {"coefficients": (0, 0, 2.0)}))
work, _ = trim(curve, TrimParams())
work = work.scaled(1 / 0.55)                 # unit scale: the square C is [-1, 1]^2

# With several samples the steep graph prefers the w axis, where it is a double cover.
frame = choose_direction(work, samples=4)
print("projection direction", frame.direction.round(3), f"omega mass {frame.omega_mass:.3f}")

for k in (4, 8, 16):
    grid = build_grid(k, points=frame.project(work.vertices), k_max=16)
    paving = pave(work, frame, grid)
    grid = select_q(work, frame, grid, paving)
    paving.grid = grid
    ex = extract_partition(paving, region_map(grid))
    crosses = ex.by_kind("cross")
    kinds = Counter(classify(c, grid) for c in crosses)
    print(f"k={k:>2}: family {grid.q_family} has the fewest sheets "
          f"{[round(s, 3) for s in grid.family_sheets]}; cross pieces {dict(kinds)}")
