"""Build a few curves, look at their topology, and cut them down to the inner ball.

Run with ``python demos/01_curves_and_topology.py``.
"""
from lamina import FamilySpec, TrimParams, compute_stats, generate, trim

cases = [
    ("three parallel disks", FamilySpec("flat_sheets", {"sheets": 3})),
    ("double cover w^2 = s (z - b)", FamilySpec("branched_cover", {"degree": 2, "scale": 0.05})),
    ("a body with 12 handles", FamilySpec("handle_body", {"tubes": 12}, resolution=0.08)),
]

for title, spec in cases:
    curve = generate(spec)
    s = compute_stats(curve)
    print(f"{title}: {len(curve.faces)} faces, chi={s.euler_characteristic}, "
          f"genus={s.genus}, boundaries={s.boundary_count}, area={s.area:.3f}")

    # Keep what reaches the ball of radius 0.55 and close it off on a nearby sphere.
    trimmed, rep = trim(curve, TrimParams())
    print(f"   trimmed on the sphere of radius {rep.rho_prime_selected}: genus {rep.G}, "
          f"{rep.B} boundary loops of total length {rep.L:.3f}, "
          f"budget ratio {rep.ratio:.2f} ({'ok' if rep.within_budget else 'exceeded'})")

# Handles that live only in the outer shell disappear after trimming.
shell = generate(FamilySpec("handle_body", {"tubes": 6, "tube_rmin": 1.0}, resolution=0.1))
_, rep = trim(shell, TrimParams())
print(f"handles placed beyond the shell: genus {compute_stats(shell).genus} before, {rep.G} after")
