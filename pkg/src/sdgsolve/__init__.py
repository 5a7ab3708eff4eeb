"""Exact solvers for score-based social distance games.

Agents sit on a social network and split into coalitions; an agent's utility
sums a score for each coalition partner according to their distance inside the
coalition. The package maximises social welfare, optionally restricted to
individually rational or Nash stable outcomes.
"""

__version__ = "0.1.0"

from .model import (  # noqa: E402
    INFINITE,
    NEG_INF,
    ContractError,
    Instance,
    InvalidOutcome,
    Outcome,
    ScoringVector,
    coalition_utilities,
    coalition_welfare,
    diameter,
    distances_within,
    make_outcome,
    score,
    utility,
    validate_outcome,
    welfare,
)
from .oracle import OracleRefused, SolveMode, SolveResult, solve_exact  # noqa: E402
from .stability import (  # noqa: E402
    Deviation,
    DeviationKind,
    find_ir_deviation,
    find_ns_deviation,
    is_individually_rational,
    is_nash_stable,
)
from .bounds import AUTO, effective_size_cap, bounds_report  # noqa: E402
from .treewidth import NiceTreeDecomposition, build_nice_decomposition, validate_decomposition  # noqa: E402
from .dp import solve_dp  # noqa: E402
from .vc import solve_vc  # noqa: E402

__all__ = [
    "INFINITE",
    "NEG_INF",
    "ContractError",
    "Instance",
    "InvalidOutcome",
    "Outcome",
    "ScoringVector",
    "coalition_utilities",
    "coalition_welfare",
    "diameter",
    "distances_within",
    "make_outcome",
    "score",
    "utility",
    "validate_outcome",
    "welfare",
    "OracleRefused",
    "SolveMode",
    "SolveResult",
    "solve_exact",
    "Deviation",
    "DeviationKind",
    "find_ir_deviation",
    "find_ns_deviation",
    "is_individually_rational",
    "is_nash_stable",
    "AUTO",
    "effective_size_cap",
    "bounds_report",
    "NiceTreeDecomposition",
    "build_nice_decomposition",
    "validate_decomposition",
    "solve_dp",
    "solve_vc",
]
