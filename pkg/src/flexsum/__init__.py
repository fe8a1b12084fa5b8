"""Inner approximations of Minkowski sums of convex polytopes for DER fleets."""

from .aggregate import (
    AccuracyReport,
    AggregateApprox,
    CandidateSelection,
    accuracy_report,
    box_msum,
    exact_fleet_msum_2d,
    hull_of_boxes_2d,
    minkowski_sum_volume_mc,
    optimize_over_union,
    select_candidates,
    union_msum,
)
from .decompose import (
    DecompositionTree,
    PrototypeRatios,
    TreeNode,
    attempted_solve_budget,
    coverage_ratio,
    decompose_polytope,
    max_inscribed_box,
    representative_box_ratios,
)
from .devices import (
    BatteryParams,
    InverterParams,
    area_ratio,
    battery_polytope,
    circle_halfspaces,
    inverter_polytope,
    inverter_vertices,
    load_interval,
    pv_inverter_polytope,
    storage_inverter_polytope,
)
from .errors import (
    DegenerateGeometryError,
    EmptyPolytopeError,
    FlexsumError,
    InfeasibleModelError,
    LPNumericalError,
    ScenarioError,
    UnboundedPolytopeError,
)
from .geometry import (
    AlignedBox,
    HalfSpace,
    HPolytope,
    VPolygon,
    contains,
    convex_hull_2d,
    intersect_halfspace,
    mc_volume,
    minkowski_sum_2d_exact,
    polygon_area,
    vertex_enum_2d,
)
from .homothets import (
    Homothet,
    aggregate_common_bounds,
    aggregate_common_pv,
    aggregate_lower_bound_pv,
    fit_homothet,
    homothet_msum,
)
from .lp import LPProblem, LPSolution, lp_solve
from .scenario import Scenario, Settings, load_scenario, realize_devices
from .tolerances import DEFAULT, PROFILES, Tolerances

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
