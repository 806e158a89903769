"""Shared helpers for the test suite.

The scorers in here are deliberately independent of the package: they are
written from the rule definitions (total approvals, harmonic proportional
score, coverage count) and are used as oracles against the library's
ordered-weighted-average scoring path.
"""

from __future__ import annotations

import math

import numpy as np

from votesearch.elections import ApprovalElection, UtilityElection

# One verdict line per acceptance gate, collected here and replayed by a
# pytest_terminal_summary hook in conftest.py. Passing tests have their
# stdout captured and discarded, so direct prints would vanish.
ACCEPTANCE_LINES: list[str] = []


def total_approval_score(e: ApprovalElection, members) -> int:
    """Sum over members of the number of agents approving that member."""
    total = 0
    for r in members:
        total += sum(1 for items in e.approvals.values() if r in items)
    return total


def harmonic_proportional_score(e: ApprovalElection, members) -> float:
    """Classic proportional approval score: sum over agents of H(overlap).

    H(t) = 1 + 1/2 + ... + 1/t, H(0) = 0.
    """
    ms = set(members)
    per_agent = []
    for items in e.approvals.values():
        t = len(ms & items)
        per_agent.append(sum(1.0 / j for j in range(1, t + 1)))
    return math.fsum(per_agent)


def coverage_score(e: ApprovalElection, members) -> int:
    """Number of agents approving at least one committee member."""
    ms = set(members)
    return sum(1 for items in e.approvals.values() if ms & items)


def naive_best_committees(e: UtilityElection, weights, k):
    """Enumerate all committees, return (best_score, list of optimal member tuples).

    Pure-Python enumeration against sorted ids; used to cross-check the
    package's enumeration solver including its tie-breaking.
    """
    from itertools import combinations

    from votesearch.elections import score_committee

    ids = sorted(e.resources)
    best = -math.inf
    winners: list[tuple[int, ...]] = []
    for combo in combinations(ids, k):
        s = score_committee(e, weights, combo)
        if s > best:
            best, winners = s, [combo]
        elif s == best:
            winners.append(combo)
    return best, winners


def random_utility_election(rng: np.random.Generator, *, max_agents=8,
                            max_resources=12, integer=True) -> UtilityElection:
    """Small random utility election. Utilities in [0, 5]; 0 means absent.

    Integer-valued utilities keep all sums exact in float64, which the
    exact-equality tests rely on.
    """
    n = int(rng.integers(1, max_agents + 1))
    m = int(rng.integers(2, max_resources + 1))
    utilities = {}
    for agent in range(1, n + 1):
        row = {}
        for r in range(m):
            if rng.random() < 0.45:
                u = int(rng.integers(1, 6)) if integer else float(rng.uniform(0.01, 5.0))
                row[r] = float(u)
        if row:
            utilities[agent] = row
    return UtilityElection(utilities, resources=range(m))


def random_approval_election(rng: np.random.Generator, *, max_agents=10,
                             max_resources=12) -> ApprovalElection:
    n = int(rng.integers(1, max_agents + 1))
    m = int(rng.integers(2, max_resources + 1))
    approvals = {}
    for agent in range(1, n + 1):
        items = {r for r in range(m) if rng.random() < 0.4}
        approvals[agent] = items
    return ApprovalElection(approvals, num_agents=n, resources=range(m))
