"""Island counting and laminar current diagnostics for discrete curves in C^2."""

from .ball_trim import TrimParams, TrimReport, trim
from .cli_runner import RunConfig, RunReport, calibrate, execute, load_config
from .counting_graph import (CountingGraph, CoveringStats, TheoremViolation, ahlfors_stats,
                             build_graph, calibrate_h, island_lower_bound, valence_bound_check)
from .current_lab import (CompatibilityError, CurrentApprox, CurveCurrent, DefectTrend, assemble,
                          defect_curve, evaluate, good_islands_at, transversal_measure)
from .curve_forge import FamilySpec, branch_values, generate, oracle_component_count, sheet_oracle
from .fiber_components import (FiberComponent, classify, detect_islands, extract_cells,
                               extract_components, extract_partition, prune_small)
from .grid_paving import (Cross, GridSpec, ProjectionFrame, build_crosses, build_grid,
                          choose_direction, pave, region_map, select_q)
from .surface_mesh import (CurveStats, DiscreteCurve, MeshError, TopologyError, compute_stats,
                           load_curve, save_curve)

__version__ = "0.1.0"
