"""brwlab: Monte Carlo laboratory for 1-d branching random walks.

Core layers:

* ``offspring``   -- finite offspring laws and their log-Laplace calculus
* ``calibration`` -- tangent points, assumption screening, matched-law pairs
* ``engine``      -- aggregate count-based lattice simulation
* ``genealogy``   -- individual-level trees and the democracy statistic
* ``competition`` -- two-color first-visit arenas
* ``experiments`` -- replica farms, front statistics, CSV/manifest output

``brwlab.service`` wraps the above in a FastAPI app; the ``brw-arena`` CLI
is a thin client of that service.
"""

__version__ = "0.1.0"

from .offspring import (  # noqa: F401
    CountLaw,
    GeneralFinite,
    OffspringSpec,
    PointSample,
    ProductForm,
    SpecError,
    StepLaw,
    kappa,
    kappa_double_prime,
    kappa_prime,
    project,
    sample,
)
from .calibration import (  # noqa: F401
    AssumptionReport,
    CalibrationResult,
    Infeasible,
    NoTangentPoint,
    NonConvergence,
    NoncoexistencePair,
    centering,
    check_assumptions,
    construct_noncoexistence_pair,
    fluct_bounds,
    make_count_law,
    match_speed,
    solve_theta,
    theta_exists,
)
from .engine import (  # noqa: F401
    EngineConfig,
    EmptyPopulation,
    PopulationState,
    advance,
    from_occupancy,
    init,
    max_position,
    min_position,
    multinomial_counts,
    step,
    truncate_frontier,
)
from .genealogy import BudgetExceeded, Individual, Tree, democracy_stats, grow  # noqa: F401
from .competition import (  # noqa: F401
    ArenaRngs,
    ArenaState,
    ColorField,
    HoleCensus,
    WindowOutOfRange,
    arena_init,
    arena_rngs,
    arena_step,
    color_counts,
    frontier_gaps,
    hole_census,
    window_presence,
)
