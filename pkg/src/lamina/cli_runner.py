"""End-to-end runs: configuration, the per-k pipeline and report files.

A configuration is a flat ``key = value`` text file (``#`` starts a
comment).  Family parameters sit next to run settings; every key and its
default is listed in :data:`RUN_DEFAULTS` and in the README.
"""

from __future__ import annotations

import argparse
import configparser
import contextlib
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .ball_trim import TrimParams, trim
from .counting_graph import (ahlfors_stats, build_graph, calibrate_h, island_lower_bound,
                             valence_bound_check)
from .curve_forge import DEFAULTS, FAMILIES, FamilySpec, branch_values, generate
from .current_lab import (CompatibilityError, CurveCurrent, DefectTrend, assemble, defect_curve,
                          evaluate, good_islands_at)
from .fiber_components import (ISLAND, OTHER, RAMIFIED_ISLAND, classify, detect_islands,
                               extract_partition, prune_small)
from .grid_paving import build_grid, choose_direction, pave, region_map, select_q
from .surface_mesh import compute_stats, euler_by_component, save_curve

log = logging.getLogger(__name__)

RUN_DEFAULTS = {
    "family": "flat_sheets",
    "resolution": 0.04,
    "margin": 0.5,
    "seed": 0,
    "rho": 0.55,
    "rho_prime_candidates": (0.9, 0.93, 0.96),
    "budget": 10.0,
    "direction_samples": 1,
    "k_list": (4, 8, 16),
    "epsilon_override": None,
    "grid_tol": 1e-7,
    "critical_clearance": 0.1,
    "fold_rtol": 1e-9,
    "island_l_tol": 1e-7,
    "q_tie_rtol": 1e-9,
    "ramification_threshold": 1.5,
    "h_estimate": None,
    "calibration_file": None,
    "calibration_corpus": None,
    "output_dir": "out",
    "workers": 1,
    "defect_flag": 0.5,
}

# genus-light holomorphic suite and the matched negative control
SUITE = {
    "flat_1": ("flat_sheets", {"sheets": 1}),
    "flat_3": ("flat_sheets", {"sheets": 3}),
    "branched_2": ("branched_cover", {"degree": 2, "scale": 0.05}),
    "branched_3": ("branched_cover", {"degree": 3, "scale": 0.05}),
    "poly": ("poly_graph", {}),
    "poly_steep": ("poly_graph", {"coefficients": (0.0, 0.0, 2.0)}),
}
CONTROLS = {
    "handle_heavy": ("handle_body", {"tubes": 2500}),
    "flat_2": ("flat_sheets", {"sheets": 2}),
}

EXIT_OK, EXIT_THEOREM, EXIT_USAGE, EXIT_ERROR = 0, 1, 2, 3


class UsageError(ValueError):
    """Malformed configuration or command line."""


class PipelineError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"stage {stage!r} failed: {type(exc).__name__}: {exc}")
        self.stage = stage


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except (PipelineError, UsageError):
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with stage context
        raise PipelineError(name, exc) from exc


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class Tolerances:
    grid_tol: float = 1e-7
    critical_clearance: float = 0.1
    fold_rtol: float = 1e-9
    island_l_tol: float = 1e-7
    q_tie_rtol: float = 1e-9
    ramification_threshold: float = 1.5


@dataclass
class RunConfig:
    family_spec: FamilySpec
    trim_params: TrimParams = field(default_factory=TrimParams)
    direction_samples: int = 1
    k_list: tuple = (4, 8, 16)
    epsilon_override: float | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    h_estimate: float | None = None
    calibration_file: Path | None = None
    calibration_corpus: list | None = None
    seed: int = 0
    output_dir: Path = Path("out")
    workers: int = 1
    defect_flag: float = 0.5
    name: str = "run"

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_list)
        if not ks:
            raise UsageError("k_list must not be empty")
        if any(k < 1 for k in ks) or any(b <= a for a, b in zip(ks, ks[1:])):
            raise UsageError("k_list must be positive and strictly increasing")
        self.k_list = ks
        if self.direction_samples < 1:
            raise UsageError("direction_samples must be >= 1")
        if self.workers < 1:
            raise UsageError("workers must be >= 1")

    @property
    def doubling(self) -> bool:
        return all(b == 2 * a for a, b in zip(self.k_list, self.k_list[1:]))

    @classmethod
    def from_suite(cls, name: str, **kw) -> "RunConfig":
        fam, params = {**SUITE, **CONTROLS}[name]
        seed = kw.get("seed", 0)
        return cls(FamilySpec(fam, dict(params), seed=seed), name=name, **kw)


def _scalar(text: str):
    t = text.strip()
    if t.lower() in ("", "none"):
        return None
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    for conv in (int, float, complex):
        try:
            return conv(t.replace(" ", ""))
        except ValueError:
            pass
    return t


def _value(text: str):
    if "," in text:
        return tuple(_scalar(p) for p in text.split(",") if p.strip())
    return _scalar(text)


def parse_config_text(text: str, base: Path | None = None) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), delimiters=("=",),
                                   interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config: {exc}") from exc
    raw = {k: _value(v) for k, v in cp["run"].items()}
    family_keys = set().union(*(DEFAULTS[f] for f in FAMILIES))
    unknown = set(raw) - set(RUN_DEFAULTS) - family_keys
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    raw["_base"] = base
    return raw


def build_config(raw: dict, seed: int | None = None, k_list=None, out=None) -> RunConfig:
    vals = dict(RUN_DEFAULTS)
    vals.update({k: v for k, v in raw.items() if k in RUN_DEFAULTS})
    base = raw.get("_base") or Path(".")
    fam = vals["family"]
    if fam not in FAMILIES:
        raise UsageError(f"unknown family {fam!r}")
    params = {k: v for k, v in raw.items() if k in DEFAULTS[fam]}
    stray = {k for k in raw if k not in RUN_DEFAULTS and not k.startswith("_")} - set(params)
    if stray:
        raise UsageError(f"keys {sorted(stray)} do not apply to family {fam!r}")
    if fam == "from_file" and params.get("path") is not None:
        params["path"] = str(base / str(params["path"]))
    if seed is not None:
        vals["seed"] = seed
    if k_list is not None:
        vals["k_list"] = k_list
    if out is not None:
        vals["output_dir"] = out

    def as_tuple(v):
        return v if isinstance(v, tuple) else (v,)

    def path_or_none(v):
        return None if v is None else base / str(v)

    try:
        spec = FamilySpec(fam, params, resolution=float(vals["resolution"]),
                          margin=float(vals["margin"]), seed=int(vals["seed"]))
        trim_params = TrimParams(float(vals["rho"]),
                                 tuple(float(r) for r in as_tuple(vals["rho_prime_candidates"])),
                                 float(vals["budget"]))
        tol = Tolerances(*(float(vals[f]) for f in Tolerances.__dataclass_fields__))
        corpus = vals["calibration_corpus"]
        if corpus is not None:
            corpus = [str(base / str(c)) for c in as_tuple(corpus)]
        return RunConfig(
            family_spec=spec, trim_params=trim_params,
            direction_samples=int(vals["direction_samples"]),
            k_list=tuple(int(k) for k in as_tuple(vals["k_list"])),
            epsilon_override=None if vals["epsilon_override"] is None else float(vals["epsilon_override"]),
            tolerances=tol,
            h_estimate=None if vals["h_estimate"] is None else float(vals["h_estimate"]),
            calibration_file=path_or_none(vals["calibration_file"]),
            calibration_corpus=corpus, seed=int(vals["seed"]),
            output_dir=Path(str(vals["output_dir"])), workers=int(vals["workers"]),
            defect_flag=float(vals["defect_flag"]), name=str(raw.get("_name", fam)))
    except UsageError:
        raise
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config value: {exc}") from exc


def load_config(path, seed=None, k_list=None, out=None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    raw = parse_config_text(text, base=path.parent)
    raw["_name"] = path.stem
    return build_config(raw, seed=seed, k_list=k_list, out=out)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@dataclass
class Prepared:
    curve: object
    trim_report: object
    stats: object
    frame: object
    jitter: complex
    critical_values: list


def prepare(cfg: RunConfig) -> Prepared:
    """Generate, trim, rescale to unit size and fix the direction and jitter."""
    rho = cfg.trim_params.rho
    with stage("generate"):
        raw = generate(cfg.family_spec)
    with stage("trim"):
        trimmed, trep = trim(raw, cfg.trim_params)
        work = trimmed.scaled(1.0 / rho)
        stats = compute_stats(work)
    with stage("choose_direction"):
        frame = choose_direction(work, cfg.direction_samples, cfg.seed)
    crit = [complex(frame.project(np.array([b / rho, 0j]))[0]) for b in branch_values(cfg.family_spec)]
    tol = cfg.tolerances
    with stage("build_grid"):
        g0 = build_grid(cfg.k_list[0], jitter_seed=cfg.seed, points=frame.project(work.vertices),
                        critical_values=crit, tol=tol.grid_tol, clearance=tol.critical_clearance,
                        k_max=cfg.k_list[-1], epsilon=cfg.epsilon_override)
    return Prepared(work, trep, stats, frame, g0.jitter, crit)


@dataclass
class Level:
    k: int
    grid: object
    paving: object
    extraction: object
    prune: object
    chi_paved: int
    q_islands: list
    graph: object
    bound: object
    covering: dict
    cell_components: list
    current: object


def run_level(prep: Prepared, cfg: RunConfig, k: int) -> Level:
    """Everything at one grid scale, up to the assembled current."""
    tol = cfg.tolerances
    work, frame, stats = prep.curve, prep.frame, prep.stats
    with stage(f"build_grid k={k}"):
        grid = build_grid(k, jitter=prep.jitter, epsilon=cfg.epsilon_override, tol=0.0)
    with stage(f"pave k={k}"):
        paving = pave(work, frame, grid)
        grid = select_q(work, frame, grid, paving, rtol=tol.q_tie_rtol)
        paving.grid = grid
        rmap = region_map(grid)
    with stage(f"extract k={k}"):
        ex = extract_partition(paving, rmap, tol.fold_rtol)
        for c in ex.components:
            if c.kind == "cross":
                c.classification = classify(c, grid)
    with stage(f"prune k={k}"):
        pruned, prep_report = prune_small(paving, ex.components, stats.boundary_length)
        if prep_report.removed_components:
            ex = extract_partition(pruned, rmap, tol.fold_rtol)
            for c in ex.components:
                if c.kind == "cross":
                    c.classification = classify(c, grid)
            before = compute_stats(paving.to_curve())
            after = compute_stats(pruned.to_curve())
            prep_report.stats_before = before.as_dict()
            prep_report.stats_after = after.as_dict()
            prep_report.within_budget = bool(after.budget_ratio <= cfg.trim_params.budget)
    with stage(f"islands k={k}"):
        q_islands = detect_islands(ex.components, grid, tol.ramification_threshold, tol.island_l_tol)
        chi_paved = int(euler_by_component(pruned.faces, pruned.table,
                                           np.zeros(len(pruned.faces), np.int64), 1)[0]) if len(pruned.faces) else 0
    with stage(f"counting_graph k={k}"):
        graph = build_graph(ex, grid)
        bound = island_lower_bound(graph, chi_paved, q_islands, strict=False)
        covering = {c.label: ahlfors_stats(c, grid) for c in ex.components
                    if c.kind == "cross" and not c.clipped}
    with stage(f"assemble k={k}"):
        cells, islands = good_islands_at(paving, tol.ramification_threshold, tol.fold_rtol,
                                         tol.island_l_tol)
        ram = sum(1 for c in islands if c.classification == RAMIFIED_ISLAND)
        current = assemble([c for c in islands if c.classification == ISLAND], paving,
                           stats.area, ram)
    return Level(k, grid, paving, ex, prep_report, chi_paved, q_islands, graph, bound,
                 covering, cells.components, current)


def _run_level_star(args):
    return run_level(*args)


def run_levels(prep: Prepared, cfg: RunConfig) -> dict:
    if cfg.workers > 1 and len(cfg.k_list) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(cfg.k_list))) as pool:
            out = list(pool.map(_run_level_star, [(prep, cfg, k) for k in cfg.k_list]))
    else:
        out = [run_level(prep, cfg, k) for k in cfg.k_list]
    return {lv.k: lv for lv in out}


def resolve_h(cfg: RunConfig) -> tuple[float, str]:
    if cfg.h_estimate is not None:
        return float(cfg.h_estimate), "config"
    if cfg.calibration_file is not None:
        try:
            data = json.loads(Path(cfg.calibration_file).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read calibration file: {exc}") from exc
        return float(data["h"]), "calibration_file"
    return 1.0, "default"


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, Path):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


@dataclass
class RunReport:
    report: dict
    exit_code: int
    levels: dict = field(default_factory=dict, repr=False)
    trend: object = None
    files: dict = field(default_factory=dict)

    @property
    def theorem_ok(self) -> bool:
        return self.exit_code == EXIT_OK


def _level_summary(lv: Level, h: float, stats, cfg: RunConfig) -> tuple[dict, dict, dict]:
    ex = lv.extraction
    kinds: dict = {"cross": {}, "cell": {}}
    for c in ex.components:
        if c.classification is not None:
            d = kinds[c.kind]
            d[c.classification] = d.get(c.classification, 0) + 1
    val = valence_bound_check(lv.graph, lv.covering, lv.grid, h, stats.boundary_length)
    ratios = [st.ahlfors_ratio() for st in lv.covering.values() if st.rel_boundary > 0]
    cur = lv.current
    total = evaluate(CurveCurrent(cur.paving, cur.weight), 1.0)
    theorem = {
        "handshake": lv.graph.handshake_ok,
        "euler_agreement": lv.graph.euler_agrees,
        "island_chain": lv.bound.ok,
    }
    hyp = {
        "other_components": kinds["cross"].get(OTHER, 0),
        "prune_within_bound": lv.prune.within_bound,
        "ahlfors_violations": len(val.ahlfors_violations),
        "valence_violations": len(val.vertex_violations),
        "aggregate_valence_holds": val.aggregate.holds,
        "vertex_bound_holds": val.vertex_bound.holds,
        "arc_cycles": lv.graph.arc_cycles,
        "high_defect": bool(total > 0 and cur.defect / total > cfg.defect_flag),
    }
    summary = {
        "k": lv.k,
        "epsilon_k": lv.grid.epsilon_k,
        "q_family": lv.grid.q_family,
        "family_sheets": list(lv.grid.family_sheets),
        "n_faces_paved": int(len(lv.paving.faces)),
        "chi_paved": lv.chi_paved,
        "classes": {kind: dict(sorted(d.items())) for kind, d in kinds.items()},
        "graph": {"s": lv.graph.vertex_count, "a": lv.graph.edge_count,
                  "euler_graph": lv.graph.euler_graph, "euler_mesh": lv.graph.euler_outside_q,
                  "arc_cycles": lv.graph.arc_cycles},
        "island_bound": lv.bound.as_dict(),
        "prune": lv.prune.as_dict(),
        "valence": val.as_dict(),
        "max_ahlfors_ratio": max(ratios, default=0.0),
        "current": {"weight": cur.weight, "mass_Tn": total, "mass_Tkn": cur.mass_pi_omega,
                    "defect": cur.defect, "good_islands": len(cur.patches),
                    "ramified": cur.ramified_count,
                    "good_fraction": cur.mass_pi_omega / total if total > 0 else 0.0},
    }
    return summary, theorem, hyp


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def write_tables(out: Path, levels: dict, trend) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    rows = []
    for k, lv in sorted(levels.items()):
        g = lv.grid
        good = {id(c) for c in lv.current.patches}
        for c in sorted(lv.cell_components, key=lambda c: (c.region_ref, c.label)):
            i, j = c.region_ref
            fam = int(g.family_of(i, j))
            rows.append([k, i, j, fam, int(fam == g.q_family), c.classification,
                         int(id(c) in good), c.rel_boundary_length, c.projected_area, c.degree,
                         c.euler, int(c.fold), len(c.faces)])
    files["islands"] = out / "islands.csv"
    _write_csv(files["islands"], ["k", "cell_i", "cell_j", "family", "in_q", "classification",
                                  "good", "rel_boundary_length", "projected_area", "degree",
                                  "euler", "fold", "n_faces"], rows)
    rows = []
    for k, lv in sorted(levels.items()):
        val = lv.graph.valences
        for c in sorted(lv.extraction.by_kind("cross"), key=lambda c: (c.region_ref, c.label)):
            i, j = c.region_ref
            rows.append([k, c.region_id, i, j, c.label, c.classification, c.rel_boundary_length,
                         c.projected_area, c.degree, c.euler, int(c.fold), int(c.clipped),
                         val.get(c.label, 0), len(c.faces)])
    files["components"] = out / "components.csv"
    _write_csv(files["components"], ["k", "region_id", "center_i", "center_j", "label",
                                     "classification", "rel_boundary_length", "projected_area",
                                     "degree", "euler", "fold", "clipped", "valence", "n_faces"], rows)
    files["defect_vs_k"] = out / "defect_vs_k.csv"
    _write_csv(files["defect_vs_k"], ["k", "epsilon_k", "mass_Tn", "mass_Tkn", "defect",
                                      "good_island_count", "ramified_count"],
               [[r[c] for c in ("k", "epsilon_k", "mass_Tn", "mass_Tkn", "defect",
                                "good_island_count", "ramified_count")] for r in trend.rows])
    return files


def _trend(prep: Prepared, ks, levels: dict, nested: bool):
    """Defect rows; the nested compatibility check needs a doubling k list."""
    if nested:
        return defect_curve(prep.curve, prep.frame, ks, prep.jitter, prep.stats.area,
                            levels={k: levels[k].current for k in ks})
    rows = [defect_curve(prep.curve, prep.frame, [k], prep.jitter, prep.stats.area,
                         levels={k: levels[k].current}).rows[0] for k in ks]
    c = max((r["defect"] / r["mass_Tn"] / r["epsilon_k"] for r in rows if r["mass_Tn"] > 0),
            default=0.0)
    return DefectTrend(rows, c, [], [])


def execute(cfg: RunConfig, write: bool = True) -> RunReport:
    """Run the pipeline for one configuration and optionally write the report files."""
    h, h_source = resolve_h(cfg)
    prep = prepare(cfg)
    levels = run_levels(prep, cfg)
    theorem_failures = []
    compat_error = None
    with stage("defect_curve"):
        try:
            trend = _trend(prep, cfg.k_list, levels, cfg.doubling)
        except CompatibilityError as exc:
            compat_error = str(exc)
            theorem_failures.append({"k": None, "check": "refinement_compatibility",
                                     "detail": compat_error})
            trend = _trend(prep, cfg.k_list, levels, False)
    per_k = []
    flags = set(prep.curve.flags)
    if not prep.curve.holomorphic:
        flags.add("non_holomorphic")
    for k in cfg.k_list:
        summary, theorem, hyp = _level_summary(levels[k], h, prep.stats, cfg)
        summary["theorem_checks"] = theorem
        summary["hypothesis_checks"] = hyp
        per_k.append(summary)
        for name, ok in theorem.items():
            if not ok:
                theorem_failures.append({"k": k, "check": name})
        if hyp["other_components"]:
            flags.add("other_components")
        if hyp["ahlfors_violations"] or hyp["valence_violations"]:
            flags.add("ahlfors_or_valence_violation")
        if not hyp["prune_within_bound"]:
            flags.add("prune_bound_exceeded")
        if hyp["high_defect"]:
            flags.add("high_defect")
    if not prep.trim_report.within_budget:
        flags.add("budget_exceeded")
    st = prep.stats
    report = {
        "name": cfg.name,
        "config": {"family": cfg.family_spec.family, "params": cfg.family_spec.params,
                   "resolution": cfg.family_spec.resolution, "margin": cfg.family_spec.margin,
                   "seed": cfg.seed, "k_list": list(cfg.k_list),
                   "trim": asdict(cfg.trim_params), "direction_samples": cfg.direction_samples,
                   "epsilon_override": cfg.epsilon_override, "tolerances": asdict(cfg.tolerances)},
        "h": h, "h_source": h_source,
        "trim": prep.trim_report.as_dict(),
        "curve": st.as_dict(),
        "genus_over_area": st.genus / st.area if st.area > 0 else None,
        "direction": [complex(x) for x in prep.frame.direction],
        "omega_mass": prep.frame.omega_mass,
        "jitter": prep.jitter,
        "critical_values": prep.critical_values,
        "levels": per_k,
        "defect_trend": {"rows": trend.rows, "c": trend.c_constant, "monotone": trend.monotone,
                         "nested_patches": trend.nested_patches,
                         "compatibility_error": compat_error},
        "theorem_failures": theorem_failures,
        "hypothesis_flags": sorted(flags),
    }
    report = _jsonable(report)
    code = EXIT_THEOREM if theorem_failures else EXIT_OK
    rr = RunReport(report, code, levels, trend)
    if write:
        out = Path(cfg.output_dir)
        rr.files = write_tables(out, levels, trend)
        rr.files["report"] = out / "run_report.json"
        rr.files["report"].write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    if theorem_failures:
        log.error("theorem-level checks failed: %s", theorem_failures)
    return rr


def calibrate(cfg: RunConfig, corpus: list | None = None, write: bool = True) -> dict:
    """Calibrate h over a corpus of configurations and persist it.

    ``corpus`` is a list of :class:`RunConfig`; by default it is taken from
    ``cfg.calibration_corpus`` (config paths) or the built-in holomorphic
    suite at ``cfg.k_list``.
    """
    if corpus is None:
        if cfg.calibration_corpus is None:
            corpus = [RunConfig.from_suite(n, k_list=cfg.k_list, seed=cfg.seed) for n in SUITE]
        else:
            corpus = [load_config(p, seed=cfg.seed, k_list=cfg.k_list) for p in cfg.calibration_corpus]
    stats, names = [], []
    for c in corpus:
        prep = prepare(c)
        levels = run_levels(prep, c)
        for k in c.k_list:
            stats.extend(levels[k].covering.values())
        names.append(c.name)
    if not stats:
        log.warning("empty calibration corpus: using the default h")
    ratios = [s.ahlfors_ratio() for s in stats if s.rel_boundary > 1e-9]
    h = calibrate_h(stats)
    data = {"h": h, "max_ratio": max(ratios, default=None), "n_stats": len(stats),
            "n_with_boundary": len(ratios), "corpus": names, "k_list": list(cfg.k_list),
            "seed": cfg.seed, "default_used": not ratios}
    data = _jsonable(data)
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "calibration.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _k_list(text: str):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise UsageError(f"--k expects a comma separated list of integers, got {text!r}") from exc


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lamina", description="Island counting and laminar current diagnostics.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in [("generate", "build a curve and save it as a mesh file"),
                        ("run", "run the full pipeline"),
                        ("sweep", "run the pipeline for several configs"),
                        ("calibrate", "estimate h over a corpus")]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=name != "calibrate", action="append",
                       help="config file (repeatable for sweep)")
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--out", default=None)
        s.add_argument("--k", type=_k_list, default=None)
        if name in ("run", "sweep"):
            s.add_argument("--workers", type=int, default=None)
    return p


def _single(args):
    if args.config and len(args.config) > 1:
        raise UsageError(f"{args.command} takes a single --config")
    if not args.config:
        return build_config({}, seed=args.seed, k_list=args.k, out=args.out)
    return load_config(args.config[0], seed=args.seed, k_list=args.k, out=args.out)


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "generate":
            cfg = _single(args)
            with stage("generate"):
                curve = generate(cfg.family_spec)
            out = Path(cfg.output_dir)
            out.mkdir(parents=True, exist_ok=True)
            save_curve(curve, out / "curve.json")
            (out / "curve_stats.json").write_text(
                json.dumps(_jsonable(compute_stats(curve).as_dict()), indent=2, sort_keys=True) + "\n")
            print(out / "curve.json")
            return EXIT_OK
        if args.command == "calibrate":
            cfg = _single(args)
            data = calibrate(cfg)
            print(f"h = {data['h']!r} over {data['n_stats']} components")
            return EXIT_OK
        if args.command == "run":
            cfg = _single(args)
            if args.workers:
                cfg.workers = args.workers
            rr = execute(cfg)
            _print_summary(rr)
            return rr.exit_code
        # sweep
        code = EXIT_OK
        rows = []
        base_out = Path(args.out or "out")
        for path in args.config:
            cfg = load_config(path, seed=args.seed, k_list=args.k)
            cfg.output_dir = base_out / cfg.name
            if args.workers:
                cfg.workers = args.workers
            rr = execute(cfg)
            _print_summary(rr)
            code = max(code, rr.exit_code)
            for lv in rr.report["levels"]:
                rows.append([cfg.name, lv["k"], lv["current"]["defect"], lv["current"]["mass_Tn"],
                             lv["current"]["good_fraction"], lv["island_bound"]["islands"],
                             int(all(lv["theorem_checks"].values()))])
        _write_csv(base_out / "sweep_summary.csv",
                   ["name", "k", "defect", "mass_Tn", "good_fraction", "islands", "theorem_ok"], rows)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def _print_summary(rr: RunReport):
    rep = rr.report
    print(f"{rep['name']}: theorem checks {'ok' if rr.exit_code == EXIT_OK else 'FAILED'}; "
          f"flags {rep['hypothesis_flags'] or 'none'}")
    for lv in rep["levels"]:
        cur = lv["current"]
        print(f"  k={lv['k']:>3}  islands={lv['island_bound']['islands']:>5}  "
              f"good={cur['good_islands']:>5}  defect={cur['defect']:.3g}  "
              f"good_fraction={cur['good_fraction']:.3f}")
