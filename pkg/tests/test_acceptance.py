"""Acceptance criteria 1-9, one PASS/FAIL line each in the terminal summary.

The suite runs are shared across criteria through session fixtures, so the
whole module runs in well under a minute.  Every criterion asserts at its stated
tolerance and records the measured numbers alongside the verdict.
"""

from __future__ import annotations

import time
from collections import Counter

import numpy as np
import pytest

from lamina.cli_runner import CONTROLS, SUITE, RunConfig, execute, main
from lamina.counting_graph import calibrate_h, valence_bound_check
from lamina.curve_forge import FamilySpec, generate, oracle_component_count
from lamina.current_lab import CurveCurrent, evaluate, transversal_measure
from lamina.fiber_components import ISLAND, OTHER, RAMIFIED_ISLAND
from lamina.grid_paving import region_map
from lamina.surface_mesh import compute_stats, load_curve, save_curve

pytestmark = pytest.mark.slow

SUITE_KS = (4, 8, 16, 32)
CHAIN_KS = (4, 8, 16)


def _timed_run(cfg):
    t0 = time.perf_counter()
    rr = execute(cfg, write=False)
    return rr, time.perf_counter() - t0


@pytest.fixture(scope="session")
def suite_runs():
    return {name: _timed_run(RunConfig.from_suite(name, k_list=SUITE_KS)) for name in SUITE}


@pytest.fixture(scope="session")
def control_runs():
    return {name: _timed_run(RunConfig.from_suite(name, k_list=CHAIN_KS)) for name in CONTROLS}


@pytest.fixture(scope="session")
def loaded_run(tmp_path_factory):
    """A mesh written to disk and read back through the from_file family."""
    d = tmp_path_factory.mktemp("loaded")
    fam, params = SUITE["branched_3"]
    path = save_curve(generate(FamilySpec(fam, dict(params))), d / "b3.json")
    cfg = RunConfig(FamilySpec("from_file", {"path": str(path)}), k_list=CHAIN_KS, name="loaded")
    return path, _timed_run(cfg)


def _all_runs(suite_runs, control_runs, loaded_run):
    runs = {n: rr for n, (rr, _) in suite_runs.items()}
    runs.update({n: rr for n, (rr, _) in control_runs.items()})
    runs["loaded"] = loaded_run[1][0]
    return runs


def _euler_identity(curve) -> tuple[bool, float]:
    t0 = time.perf_counter()
    s = compute_stats(curve)
    vef = len(np.unique(curve.faces)) - len(curve.table.counts) + len(curve.faces)
    per = sum(2 - 2 * g - b for g, b in zip(s.component_genus, s.component_boundaries))
    return vef == s.euler_characteristic == per, time.perf_counter() - t0


# ---------------------------------------------------------------------------

def test_criterion_1_euler_exactness(suite_runs, control_runs, loaded_run, record):
    runs = _all_runs(suite_runs, control_runs, loaded_run)
    bad, slowest, checked = [], 0.0, 0
    meshes = [(n, rr.levels[min(rr.levels)].paving.to_curve()) for n, rr in runs.items()]
    for name, (fam, params) in {**SUITE, **CONTROLS}.items():
        meshes.append((f"{name}:raw", generate(FamilySpec(fam, dict(params)))))
    meshes.append(("loaded:file", load_curve(loaded_run[0])))
    for name, curve in meshes:
        ok, dt = _euler_identity(curve)
        slowest = max(slowest, dt)
        bad += [] if ok else [name]
    for name, rr in runs.items():
        for k, lv in rr.levels.items():
            checked += 1
            if not (lv.graph.euler_agrees and lv.graph.handshake_ok):
                bad.append(f"{name}:k={k}")
    ok = not bad and slowest < 1.0
    record(1, ok, f"{len(meshes)} meshes, {checked} graph/mesh comparisons, "
                  f"slowest identity {slowest:.2f}s, failures {bad}")
    assert ok


def test_criterion_2_island_chain(suite_runs, control_runs, loaded_run, record):
    runs = {n: (rr, dt) for n, (rr, dt) in {**suite_runs, **control_runs}.items()}
    runs["loaded"] = loaded_run[1]
    bad, worst_time, n = [], 0.0, 0
    min_slack = None
    for name, (rr, dt) in runs.items():
        per_k = dt / len(rr.levels)
        worst_time = max(worst_time, per_k)
        for k in CHAIN_KS:
            b = rr.levels[k].bound
            n += 1
            slack = b.islands - (b.chi_curve + b.a - b.s)
            min_slack = slack if min_slack is None else min(min_slack, slack)
            if not b.ok:
                bad.append(f"{name}:k={k}")
    ok = not bad and worst_time < 60
    record(2, ok, f"{n} runs, min slack {min_slack}, worst {worst_time:.1f}s per run, failures {bad}")
    assert ok


def test_criterion_3_flat_sheets(suite_runs, record):
    rng = np.random.default_rng(0)
    bad, worst = [], 0.0
    for name, m in (("flat_1", 1), ("flat_3", 3)):
        rr, _ = suite_runs[name]
        area = rr.report["curve"]["area"]
        for k in CHAIN_KS:
            cur = rr.levels[k].current
            mass = evaluate(CurveCurrent(cur.paving, cur.weight), 1.0)
            worst = max(worst, abs(cur.defect) / mass)
            if len(cur.patches) != 4 * k * k * m or abs(cur.defect) > 1e-9 * mass:
                bad.append(f"{name}:k={k} good={len(cur.patches)}")
            g = cur.paving.grid
            pts = g.origin + rng.uniform(0.01, 1.99, 50) + 1j * rng.uniform(0.01, 1.99, 50)
            for p in pts:
                if g.locate_cell(p) is None:
                    continue
                if not np.isclose(transversal_measure(cur, p), m / area, rtol=1e-12):
                    bad.append(f"{name}:k={k} transversal at {p}")
                    break
    ok = not bad
    record(3, ok, f"max defect/mass {worst:.2e}, failures {bad}")
    assert ok


def _quarter_polygon(quarters, grid, scale):
    edges = {}
    qs = set(map(tuple, quarters))
    for a, b in qs:
        corners = [(a, b), (a + 1, b), (a + 1, b + 1), (a, b + 1)]
        for u, v in zip(corners, corners[1:] + corners[:1]):
            edges[u] = edges.get(u, []) + [v]
    # drop edges traversed in both directions
    directed = {(u, v) for u, vs in edges.items() for v in vs}
    boundary = {u: v for u, v in directed if (v, u) not in directed}
    start = next(iter(sorted(boundary)))
    loop, cur = [start], boundary[start]
    while cur != start:
        loop.append(cur)
        cur = boundary[cur]
    assert len(loop) == len(boundary), "region boundary is not a single loop"
    o, h = grid.origin, 1.0 / (2 * grid.k)
    return [(o + complex(x, y) * h) * scale for x, y in loop]


def test_criterion_4_branched_oracle(suite_runs, record):
    t0 = time.perf_counter()
    rr, _ = suite_runs["branched_2"]
    cfg = RunConfig.from_suite("branched_2")
    spec, rho = cfg.family_spec, cfg.trim_params.rho
    lv = rr.levels[8]
    g = lv.grid
    problems = []
    direction = np.array([complex(*x) for x in rr.report["direction"]])
    if not np.allclose(np.abs(direction), [1, 0]):
        problems.append("frame is not the coordinate projection")
    branch = complex(spec.params["branch_point"]) / rho
    bcell = g.locate_cell(branch)
    by_cell: dict = {}
    for c in lv.cell_components:
        by_cell.setdefault(c.region_ref, []).append(c)
    oracle_islands = 0
    for i in range(g.n):
        for j in range(g.n):
            comps = by_cell.get((i, j), [])
            expect = oracle_component_count(spec, [p * rho for p in g.cell_polygon(i, j)], 40)
            oracle_islands += expect
            if len(comps) != expect:
                problems.append(f"cell {(i, j)}: {len(comps)} components, oracle {expect}")
                continue
            if (i, j) == bcell:
                if [c.classification for c in comps] != [RAMIFIED_ISLAND] or abs(comps[0].degree - 2) > 0.05:
                    problems.append(f"branch cell {comps[0].classification} degree {comps[0].degree}")
            elif any(c.classification != ISLAND or abs(c.degree - 1) > 0.05 for c in comps):
                problems.append(f"cell {(i, j)} has a non-graph component")
    q_cells = set(g.families[g.q_family])
    for cell in q_cells - {bcell}:
        if len([c for c in by_cell.get(cell, []) if c.classification == ISLAND]) != 2:
            problems.append(f"Q cell {cell} does not carry two islands")
    n_islands = sum(1 for c in lv.cell_components if c.classification in (ISLAND, RAMIFIED_ISLAND))
    cross_counts = Counter(c.region_ref for c in lv.extraction.by_kind("cross"))
    rm = region_map(g)
    n_cross_oracle = 0
    for cross in rm.crosses:
        expect = oracle_component_count(spec, _quarter_polygon(cross.quarters, g, rho), 40)
        n_cross_oracle += expect
        if cross_counts.get(cross.center_cell, 0) != expect:
            problems.append(f"cross {cross.center_cell}: {cross_counts.get(cross.center_cell, 0)} "
                            f"components, oracle {expect}")
    dt = time.perf_counter() - t0
    ok = (not problems and n_islands == oracle_islands == 2 * 4 * 64 - 1
          and bcell is not None and dt < 60)
    record(4, ok, f"islands {n_islands} (oracle {oracle_islands}), cross components "
                  f"{sum(cross_counts.values())} (oracle {n_cross_oracle}), branch cell {bcell}, "
                  f"{dt:.1f}s, problems {problems[:3]}")
    assert ok


def test_criterion_5_ahlfors(suite_runs, record):
    corpus = [st for rr, _ in suite_runs.values() for k in CHAIN_KS
              for st in rr.levels[k].covering.values()]
    h = calibrate_h(corpus)
    n, abad, vbad = 0, 0, 0
    worst = 0.0
    for name, (rr, _) in suite_runs.items():
        L = rr.report["curve"]["boundary_length"]
        for k in CHAIN_KS:
            lv = rr.levels[k]
            rep = valence_bound_check(lv.graph, lv.covering, lv.grid, h, L)
            n += rep.n_checked
            abad += len(rep.ahlfors_violations)
            vbad += len(rep.vertex_violations)
    # out of sample: the same h at the finest scale
    held = [valence_bound_check(rr.levels[32].graph, rr.levels[32].covering, rr.levels[32].grid, h,
                                rr.report["curve"]["boundary_length"]) for rr, _ in suite_runs.values()]
    held_bad = sum(len(r.ahlfors_violations) + len(r.vertex_violations) for r in held)
    for st in corpus:
        if st.rel_boundary > 1e-9:
            worst = max(worst, st.ahlfors_ratio())
    ok = n > 0 and abad == 0 and vbad == 0
    record(5, ok, f"h={h:.4f} (1.5 x max ratio {worst:.4f}), {n} unclipped components, "
                  f"Ahlfors violations {abad}, valence violations {vbad}; "
                  f"k=32 held out: {held_bad} violations")
    assert ok


def test_criterion_6_trichotomy(suite_runs, control_runs, loaded_run, record):
    others, prune_bad, n = [], [], 0
    for name, (rr, _) in suite_runs.items():
        for k, lv in rr.levels.items():
            cnt = sum(1 for c in lv.extraction.by_kind("cross") if c.classification == OTHER)
            if cnt:
                others.append(f"{name}:k={k}:{cnt}")
    for name, rr in _all_runs(suite_runs, control_runs, loaded_run).items():
        for k, lv in rr.levels.items():
            n += 1
            if not lv.prune.within_bound:
                prune_bad.append(f"{name}:k={k}")
    ok = not others and not prune_bad
    record(6, ok, f"OTHER components {others or 0}; prune bound checked on {n} runs, "
                  f"exceeded {prune_bad}")
    assert ok


def test_criterion_7_defect_trend(suite_runs, record):
    cs, bad = {}, []
    t = 0.0
    for name, (rr, dt) in suite_runs.items():
        t += dt
        tr = rr.trend
        cs[name] = tr.c_constant
        if not tr.monotone_ok:
            bad.append(f"{name}: monotone")
        if rr.report["defect_trend"]["compatibility_error"]:
            bad.append(f"{name}: compatibility")
        if len(tr.nested_patches) != len(SUITE_KS) - 1:
            bad.append(f"{name}: nested sweep incomplete")
    c = max(cs.values())
    ok = c <= 5 and not bad and t < 300
    detail = ", ".join(f"{n}={v:.3g}" for n, v in cs.items())
    record(7, ok, f"c={c:.3g} ({detail}), sweep {t:.0f}s, failures {bad}")
    assert ok


def test_criterion_8_negative_control(control_runs, record):
    t0 = time.perf_counter()
    heavy, dt_h = control_runs["handle_heavy"]
    flat, dt_f = control_runs["flat_2"]
    g_over_a = heavy.report["genus_over_area"]
    idx = CHAIN_KS.index(16)
    fh = heavy.report["levels"][idx]["current"]["good_fraction"]
    ff = flat.report["levels"][idx]["current"]["good_fraction"]
    ok = g_over_a >= 10 and fh < 0.5 and ff > 0.95 and dt_h < 120 and dt_f < 120
    record(8, ok, f"handle_body G/A={g_over_a:.1f} good fraction {fh:.3f}; flat_2 {ff:.3f}; "
                  f"{dt_h:.0f}s + {dt_f:.0f}s")
    assert ok


def test_criterion_9_determinism(tmp_path, record):
    cfg = tmp_path / "det.cfg"
    cfg.write_text("family = branched_cover\ndegree = 3\nscale = 0.05\nk_list = 4, 8, 16\n")
    t0 = time.perf_counter()
    codes = [main(["run", "--config", str(cfg), "--seed", "11", "--out", str(tmp_path / d)])
             for d in ("a", "b")]
    dt = time.perf_counter() - t0
    names = ["islands.csv", "components.csv", "defect_vs_k.csv", "run_report.json"]
    same = {f: (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in names}
    ok = codes == [0, 0] and all(same.values()) and dt < 120
    record(9, ok, f"exit codes {codes}, identical {same}, {dt:.0f}s")
    assert ok
