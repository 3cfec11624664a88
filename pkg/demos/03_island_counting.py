"""Count islands and compare with the graph-theoretic lower bound.

Run with ``python demos/03_island_counting.py``.
"""
from lamina import RunConfig, execute

for name in ("flat_3", "branched_3", "poly_steep", "handle_heavy"):
    rr = execute(RunConfig.from_suite(name, k_list=(4, 8, 16)), write=False)
    print(name)
    for lv in rr.report["levels"]:
        b, g = lv["island_bound"], lv["graph"]
        print(f"  k={lv['k']:>2}: islands {b['islands']:>5} >= chi {b['chi_curve']:>5} "
              f"+ a {b['a']:>4} - s {b['s']:>4}   arc cycles {g['arc_cycles']}")
    print("  theorem checks", "hold" if rr.exit_code == 0 else "FAILED",
          "| flags", rr.report["hypothesis_flags"] or "none")
