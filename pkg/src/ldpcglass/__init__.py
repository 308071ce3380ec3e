"""LDPC codes on the BIAWGN channel seen as spin glasses on the Nishimori line.

Exact enumeration for small codes, belief propagation, density evolution,
GEXIT curves and the area bounds built from them.
"""

__version__ = "0.1.0"

from ldpcglass.bp import BPResult, ber_simulation, run_bp, tree_magnetization  # noqa: E402
from ldpcglass.channel import LLRField, NoiseScale, capacity, sample_llr_field, shannon_threshold  # noqa: E402
from ldpcglass.de import (  # noqa: E402
    GexitCurve,
    area_integral,
    bp_threshold,
    entropy_bounds,
    g_bp_curve,
    g_bp_point,
    map_threshold_lower_bound,
)
from ldpcglass.errors import (  # noqa: E402
    CapacityError,
    ConfigError,
    MalformedCodeError,
    ParameterError,
    PreconditionError,
    SearchError,
)
from ldpcglass.gibbs import (  # noqa: E402
    CouplingSpec,
    GibbsSystem,
    exact_gibbs_soft,
    exact_marginals_hard,
    fano_gap,
    gexit_point_exact,
    verify_cgn,
    verify_check_erasing,
    verify_nishimori,
)
from ldpcglass.graph import (  # noqa: E402
    DegreeDistribution,
    TannerGraph,
    extract_neighborhood,
    from_matrix,
    gf2_rank_rate,
    sample_irregular,
    sample_regular,
)

__all__ = [
    "BPResult", "CapacityError", "ConfigError", "CouplingSpec", "DegreeDistribution", "GexitCurve",
    "GibbsSystem", "LLRField", "MalformedCodeError", "NoiseScale", "ParameterError", "PreconditionError",
    "SearchError", "TannerGraph", "area_integral", "ber_simulation", "bp_threshold", "capacity",
    "entropy_bounds", "exact_gibbs_soft", "exact_marginals_hard", "extract_neighborhood", "fano_gap",
    "from_matrix", "g_bp_curve", "g_bp_point", "gexit_point_exact", "gf2_rank_rate",
    "map_threshold_lower_bound", "run_bp", "sample_irregular", "sample_llr_field", "sample_regular",
    "shannon_threshold", "tree_magnetization", "verify_cgn", "verify_check_erasing", "verify_nishimori",
]
