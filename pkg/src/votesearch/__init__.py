"""votesearch: diversity-tunable search over approval data via multiwinner elections.

A query is a set of resources (movies, for the bundled ingest format). The
engine restricts the global approval data to the agents who approve the query,
weights every co-approved resource by a TF-IDF style relevance score, and then
holds a utility election among those agents. The winning committee is computed
under a one-parameter family of ordered-weighted-average rules: the focus
parameter p interpolates from pure popularity (p = 0) through proportional
rules (p = 1) to pure coverage (p = infinity), trading focus against breadth
of the result list.
"""

from .elections import (
    INFINITY,
    ApprovalElection,
    Committee,
    HuvParams,
    UtilityElection,
    huv_weights,
    marginal_gain,
    owa_apply,
    score_committee,
)
from .solvers import (
    AnnealingConfig,
    solve_annealing,
    solve_bruteforce,
    solve_exact_p0,
    solve_greedy,
)

__version__ = "0.1.0"

__all__ = [
    "INFINITY",
    "ApprovalElection",
    "Committee",
    "HuvParams",
    "UtilityElection",
    "huv_weights",
    "marginal_gain",
    "owa_apply",
    "score_committee",
    "AnnealingConfig",
    "solve_annealing",
    "solve_bruteforce",
    "solve_exact_p0",
    "solve_greedy",
    "__version__",
]
