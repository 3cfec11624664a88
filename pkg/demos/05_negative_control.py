"""Too much genus per unit area destroys the islands; flat sheets keep all of them.

Run with ``python demos/05_negative_control.py``.
"""
from lamina import RunConfig, execute

for name, tubes in (("handle_heavy", None), ("handle_body", 200), ("flat_2", None)):
    if tubes is None:
        cfg = RunConfig.from_suite(name, k_list=(4, 8, 16))
    else:
        cfg = RunConfig.from_suite("handle_heavy", k_list=(4, 8, 16))
        cfg.family_spec.params["tubes"] = tubes
    rr = execute(cfg, write=False)
    rep = rr.report
    g_over_a = rep["genus_over_area"]
    fractions = [round(lv["current"]["good_fraction"], 3) for lv in rep["levels"]]
    print(f"{name if tubes is None else f'handle_body({tubes})'}: G/A = {g_over_a:.1f}, "
          f"good-island mass fraction at k=4,8,16: {fractions}")
