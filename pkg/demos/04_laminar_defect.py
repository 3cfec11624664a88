"""Watch the good-island current take over the curve current as the grid refines.

Run with ``python demos/04_laminar_defect.py``.
"""
from lamina import RunConfig, execute

for name in ("branched_2", "branched_3", "poly_steep"):
    rr = execute(RunConfig.from_suite(name, k_list=(4, 8, 16, 32)), write=False)
    trend = rr.trend
    print(f"{name}: c = {trend.c_constant:.3f}, nested patches per doubling {trend.nested_patches}")
    for row in trend.rows:
        ratio = row["defect"] / row["mass_Tn"]
        print(f"  k={row['k']:>2}  defect/mass {ratio:.2e}  eps_k {row['epsilon_k']:.3f}  "
              f"good islands {row['good_island_count']:>5}  ramified {row['ramified_count']}")
