"""The search pipeline: query -> local election -> TF-IDF utilities -> committee.

Given a query (a set of resources), the *local election* restricts the global
approval data to the query's supporters: its agents are everyone who approves
at least one query resource, its resources are everything those supporters
approve other than the query itself, and each supporter keeps only their
approvals inside that resource set.

Each local resource r is weighted by a TF-IDF style score

    tfidf(r) = |A_local(r)| * gamma ** ln(n / |A(r)|)

where |A_local(r)| counts supporters approving r, |A(r)| counts approvers of
r in the whole population, and n is the total number of agents (raters with
no approvals included). gamma tunes the damping: gamma = 1 reduces the score
to plain local popularity, larger gamma punishes globally common resources
harder. The score of a resource is then split evenly among its local
approvers, giving the utility election the committee solvers run on. Query
relevance is never normalized beyond this split; zero utilities are absent.

Dispatch: p = 0 is solved exactly; p >= 1 goes to the greedy or annealing
solver as requested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .elections import (
    INFINITY,
    ApprovalElection,
    Committee,
    HuvParams,
    UtilityElection,
    _normalize_p,
)
from .ingest import Catalog
from .solvers import AnnealingConfig, solve_annealing, solve_exact_p0, solve_greedy

ALGORITHMS = ("exact0", "greedy", "annealing")


class UnknownResourceError(ValueError):
    """A query names a resource the global election does not contain."""


class NoSupportersError(ValueError):
    """No agent approves any resource of the query."""


def parse_p(text: str) -> int | float:
    """Parse a focus parameter from its string form: '0', '1', ... or 'inf'."""
    if text == "inf":
        return INFINITY
    try:
        value = int(text)
    except ValueError:
        raise ValueError(f"p must be a nonnegative integer or 'inf', got {text!r}") from None
    return _normalize_p(value)


def format_p(p: int | float) -> str:
    return "inf" if p == INFINITY else str(p)


@dataclass(frozen=True)
class Query:
    """A search request. gamma > 0 (gamma = 1 disables IDF damping)."""

    resources: frozenset[int]
    p: int | float
    gamma: float = 2.0
    k: int = 10
    algorithm: str = "greedy"
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "resources", frozenset(self.resources))
        if not self.resources:
            raise ValueError("query must name at least one resource")
        object.__setattr__(self, "p", _normalize_p(self.p))
        if not (math.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}"
            )
        if self.algorithm == "exact0" and self.p != 0:
            raise ValueError("the exact solver only handles p = 0")


def derive_local_approval(
    global_election: ApprovalElection, query_resources: Iterable[int]
) -> ApprovalElection:
    """Restrict the global election to the supporters of the query.

    Agents: everyone approving at least one query resource (supporters who
    approve nothing else still count toward the local agent total).
    Resources: everything supporters approve, minus the query itself.
    """
    q = frozenset(query_resources)
    for r in q:
        if r not in global_election.resources:
            raise UnknownResourceError(f"resource {r} not in the global election")
    supporters: set[int] = set()
    for r in q:
        supporters |= global_election.approvers[r]
    if not supporters:
        raise NoSupportersError(f"query {sorted(q)} has no supporters")
    approvals = {
        agent: global_election.approvals[agent] - q for agent in supporters
    }
    resources: set[int] = set()
    for items in approvals.values():
        resources |= items
    return ApprovalElection(
        approvals, num_agents=len(supporters), resources=resources
    )


def tfidf_value(
    local_count: int, global_count: int, global_n: int, gamma: float
) -> float:
    """tfidf = local_count * gamma ** ln(global_n / global_count)."""
    return local_count * gamma ** math.log(global_n / global_count)


def tfidf_scores(
    local: ApprovalElection, global_election: ApprovalElection, gamma: float
) -> dict[int, float]:
    """TF-IDF score for every local resource."""
    n = global_election.num_agents
    global_counts = global_election.approval_counts
    return {
        r: tfidf_value(c, global_counts[r], n, gamma)
        for r, c in local.approval_counts.items()
    }


def derive_local_utility(
    local: ApprovalElection, tfidf: Mapping[int, float]
) -> UtilityElection:
    """Split each resource's TF-IDF evenly among its local approvers."""
    counts = local.approval_counts
    utilities = {
        agent: {r: tfidf[r] / counts[r] for r in items}
        for agent, items in local.approvals.items()
    }
    return UtilityElection(utilities, resources=local.resources)


@dataclass(frozen=True)
class LocalElection:
    """The per-query election with its provenance carried explicitly."""

    approval: ApprovalElection
    tfidf: dict[int, float]
    utility: UtilityElection
    global_n: int
    global_counts: dict[int, int]


def build_local_election(
    global_election: ApprovalElection,
    query_resources: Iterable[int],
    gamma: float,
) -> LocalElection:
    local = derive_local_approval(global_election, query_resources)
    tfidf = tfidf_scores(local, global_election, gamma)
    utility = derive_local_utility(local, tfidf)
    global_counts = {
        r: global_election.approval_counts[r] for r in local.resources
    }
    return LocalElection(
        approval=local,
        tfidf=tfidf,
        utility=utility,
        global_n=global_election.num_agents,
        global_counts=global_counts,
    )


@dataclass(frozen=True)
class MemberInfo:
    id: int
    title: str
    genres: tuple[str, ...]
    tfidf: float
    local_approvals: int
    global_approvals: int
    iteration: int | None


@dataclass(frozen=True)
class SearchResult:
    query: Query
    committee: Committee | None
    members: list[MemberInfo]
    score: float
    truncated: bool
    algorithm: str
    seed: int | None
    n_local_agents: int
    n_local_resources: int

    @property
    def no_results(self) -> bool:
        return not self.members

    def to_json_dict(self) -> dict:
        return {
            "query": sorted(self.query.resources),
            "p": format_p(self.query.p),
            "k": self.query.k,
            "algorithm": self.algorithm,
            "members": [
                {
                    "id": m.id,
                    "title": m.title,
                    "genres": list(m.genres),
                    "tfidf": m.tfidf,
                    "local_approvals": m.local_approvals,
                    "global_approvals": m.global_approvals,
                    "iteration": m.iteration,
                }
                for m in self.members
            ],
            "score": self.score,
            "truncated": self.truncated,
        }


def _solve(utility: UtilityElection, query: Query, k_eff: int):
    """Dispatch to a solver; returns (committee, actual algorithm, seed used)."""
    if query.p == 0:
        return solve_exact_p0(utility, k_eff), "exact0", None
    params = HuvParams(query.p, k_eff)
    if query.algorithm == "annealing":
        seed = query.seed if query.seed is not None else 0
        cfg = AnnealingConfig(seed=seed)
        return solve_annealing(utility, params, cfg), "annealing", seed
    return solve_greedy(utility, params), "greedy", None


def search(
    global_election: ApprovalElection,
    catalog: Catalog | None,
    query: Query,
) -> SearchResult:
    """Run the full pipeline for one query.

    An empty local resource set (supporters approve nothing beyond the query)
    yields a structured empty result, not an exception. A committee size
    larger than the local resource set is truncated and flagged.
    """
    le = build_local_election(global_election, query.resources, query.gamma)
    local = le.approval
    m = len(local.resources)

    if m == 0:
        return SearchResult(
            query=query,
            committee=None,
            members=[],
            score=0.0,
            truncated=False,
            algorithm=query.algorithm if query.p != 0 else "exact0",
            seed=None,
            n_local_agents=local.num_agents,
            n_local_resources=0,
        )

    k_eff = min(query.k, m)
    committee, algorithm, seed = _solve(le.utility, query, k_eff)

    members = []
    for position, r in enumerate(committee.members, start=1):
        if catalog is not None and r in catalog:
            info = catalog.get(r)
            title, genres = info.title, info.genres
        else:
            title, genres = f"movie-{r}", ()
        members.append(
            MemberInfo(
                id=r,
                title=title,
                genres=genres,
                tfidf=le.tfidf[r],
                local_approvals=local.approval_counts[r],
                global_approvals=le.global_counts[r],
                iteration=position if algorithm == "greedy" else None,
            )
        )

    return SearchResult(
        query=query,
        committee=committee,
        members=members,
        score=committee.score,
        truncated=k_eff < query.k,
        algorithm=algorithm,
        seed=seed,
        n_local_agents=local.num_agents,
        n_local_resources=m,
    )
