"""Elections over resources, and committee scoring by ordered weighted averages.

An *approval election* records, for every agent, the set of resources the
agent approves. A *utility election* generalizes this to sparse nonnegative
utilities; a utility of zero is never stored, absence means zero. Approval
elections embed into utility elections with all utilities equal to one.

A committee of size k is scored by summing, over all agents, an ordered
weighted average of the agent's utilities for the committee members: the
agent's k utility values are sorted in nonincreasing order and dotted with a
nonincreasing weight vector. The bundled weight family is

    weights(p, k) = (1, 1/2**p, 1/3**p, ..., 1/k**p),

indexed by a single focus parameter p. p = 0 gives the all-ones vector
(committee score is plain total utility), p = 1 the harmonic vector of
proportional approval voting, and p = infinity the (1, 0, ..., 0) vector that
counts only each agent's best member (pure coverage). Larger p therefore
trades focus for breadth.

Scores are computed in float64. Comparisons elsewhere in the package are exact
float comparisons with deterministic tie-breaking, never epsilon fuzzing, so
scoring here is careful to be independent of dict insertion order: per-agent
contributions are accumulated with math.fsum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

INFINITY = math.inf
"""Explicit marker for the pure-coverage limit of the weight family."""


def _normalize_p(p):
    """Validate the focus parameter: a nonnegative integer or INFINITY."""
    if p == INFINITY:
        return INFINITY
    if isinstance(p, bool):
        raise ValueError("p must be a nonnegative integer or INFINITY")
    if isinstance(p, float):
        if not p.is_integer():
            raise ValueError(
                f"p must be a nonnegative integer or INFINITY, got {p!r}"
            )
        p = int(p)
    if not isinstance(p, int) or p < 0:
        raise ValueError(f"p must be a nonnegative integer or INFINITY, got {p!r}")
    return p


@dataclass(frozen=True)
class HuvParams:
    """Committee size and focus parameter for the harmonic utility family."""

    p: int | float
    k: int

    def __post_init__(self):
        object.__setattr__(self, "p", _normalize_p(self.p))
        if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")


def huv_weights(params: HuvParams) -> tuple[float, ...]:
    """Weight vector (1, 1/2**p, ..., 1/k**p); (1, 0, ..., 0) for p = INFINITY."""
    if params.p == INFINITY:
        return (1.0,) + (0.0,) * (params.k - 1)
    return tuple(1.0 / j**params.p for j in range(1, params.k + 1))


def owa_apply(weights: Sequence[float], values: Sequence[float]) -> float:
    """Ordered weighted average: dot the weights with the sorted values.

    Values are sorted in nonincreasing order first, which makes the result
    invariant under permutations of `values`.
    """
    if len(weights) != len(values):
        raise ValueError(
            f"length mismatch: {len(weights)} weights vs {len(values)} values"
        )
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    total = 0.0
    for w, v in zip(weights, sorted(values, reverse=True)):
        total += w * v
    return total


class ApprovalElection:
    """Binary approvals of agents over resources.

    Parameters
    ----------
    approvals:
        Mapping from agent id to an iterable of approved resource ids. Agents
        mapped to an empty iterable still count toward ``num_agents``.
    num_agents:
        Total number of agents, including agents with no approvals at all.
        Defaults to ``len(approvals)``.
    resources:
        The full resource set. Defaults to the union of all approval sets; if
        given it must be a superset of that union.
    """

    def __init__(
        self,
        approvals: Mapping[int, Iterable[int]],
        num_agents: int | None = None,
        resources: Iterable[int] | None = None,
    ):
        clean: dict[int, frozenset[int]] = {}
        for agent, items in approvals.items():
            s = frozenset(items)
            if s:
                clean[agent] = s
        union: set[int] = set()
        for s in clean.values():
            union.update(s)
        if resources is None:
            res = frozenset(union)
        else:
            res = frozenset(resources)
            if not union <= res:
                missing = sorted(union - res)[:5]
                raise ValueError(f"approved resources missing from resource set: {missing}")
        if num_agents is None:
            num_agents = len(approvals)
        if num_agents < len(clean):
            raise ValueError(
                f"num_agents={num_agents} is below the {len(clean)} agents with approvals"
            )
        self._approvals = clean
        self._resources = res
        self._num_agents = int(num_agents)

    @property
    def approvals(self) -> Mapping[int, frozenset[int]]:
        """Agents with at least one approval, agent id -> approved set."""
        return self._approvals

    @property
    def resources(self) -> frozenset[int]:
        return self._resources

    @property
    def num_agents(self) -> int:
        return self._num_agents

    @cached_property
    def approval_counts(self) -> dict[int, int]:
        """Number of approvals per resource, zero included."""
        counts = dict.fromkeys(self._resources, 0)
        for items in self._approvals.values():
            for r in items:
                counts[r] += 1
        return counts

    @cached_property
    def approvers(self) -> dict[int, frozenset[int]]:
        """Approving agent set per resource (built lazily; memory-heavy at scale)."""
        by_resource: dict[int, list[int]] = {r: [] for r in self._resources}
        for agent, items in self._approvals.items():
            for r in items:
                by_resource[r].append(agent)
        return {r: frozenset(agents) for r, agents in by_resource.items()}

    def to_utility(self) -> "UtilityElection":
        """View the approvals as a utility election with unit utilities."""
        return UtilityElection(
            {a: dict.fromkeys(items, 1.0) for a, items in self._approvals.items()},
            resources=self._resources,
        )

    def __repr__(self):
        return (
            f"ApprovalElection(num_agents={self._num_agents}, "
            f"num_resources={len(self._resources)})"
        )


class UtilityElection:
    """Sparse nonnegative utilities of agents over resources.

    Zero utilities are dropped on construction (zero means absent); negative
    or non-finite utilities are rejected.
    """

    def __init__(
        self,
        utilities: Mapping[int, Mapping[int, float]],
        resources: Iterable[int] | None = None,
    ):
        clean: dict[int, dict[int, float]] = {}
        referenced: set[int] = set()
        for agent, row in utilities.items():
            kept: dict[int, float] = {}
            for r, u in row.items():
                u = float(u)
                if not math.isfinite(u) or u < 0.0:
                    raise ValueError(
                        f"utility of agent {agent!r} for resource {r!r} must be "
                        f"finite and nonnegative, got {u!r}"
                    )
                referenced.add(r)
                if u > 0.0:
                    kept[r] = u
            if kept:
                clean[agent] = kept
        if resources is None:
            res = frozenset(referenced)
        else:
            res = frozenset(resources)
            if not referenced <= res:
                missing = sorted(referenced - res)[:5]
                raise ValueError(f"utilities reference unknown resources: {missing}")
        self._utilities = clean
        self._resources = res

    @property
    def utilities(self) -> Mapping[int, Mapping[int, float]]:
        return self._utilities

    @property
    def resources(self) -> frozenset[int]:
        return self._resources

    @cached_property
    def _totals(self) -> dict[int, float]:
        buckets: dict[int, list[float]] = {r: [] for r in self._resources}
        for row in self._utilities.values():
            for r, u in row.items():
                buckets[r].append(u)
        # fsum: totals do not depend on agent iteration order
        return {r: math.fsum(vals) for r, vals in buckets.items()}

    def total_utility(self, r: int) -> float:
        """Sum of all agents' utilities for resource r."""
        return self._totals[r]

    def __repr__(self):
        return (
            f"UtilityElection(num_agents={len(self._utilities)}, "
            f"num_resources={len(self._resources)})"
        )


@dataclass(frozen=True)
class Committee:
    """A solved committee with provenance.

    ``members`` keeps the order the solver produced: iteration order for the
    greedy solver, nonincreasing total utility for the exact p = 0 solver,
    ascending id for the annealer. ``seed`` is set only by seeded solvers.
    """

    members: tuple[int, ...]
    score: float
    algorithm: str
    seed: int | None = None

    def __post_init__(self):
        if len(set(self.members)) != len(self.members):
            raise ValueError("committee members must be distinct")

    @property
    def member_set(self) -> frozenset[int]:
        return frozenset(self.members)


def _checked_members(e: UtilityElection, members: Iterable[int]) -> tuple[int, ...]:
    ms = tuple(members)
    if len(set(ms)) != len(ms):
        raise ValueError("committee members must be distinct")
    unknown = [r for r in ms if r not in e.resources]
    if unknown:
        raise ValueError(f"committee members not in election: {unknown[:5]}")
    return ms


def score_committee(
    e: UtilityElection, weights: Sequence[float], members: Iterable[int]
) -> float:
    """Election score of a committee: fsum over agents of their OWA value.

    ``weights`` must have exactly one weight per member. Agents with zero
    utility for every member contribute nothing.
    """
    ms = _checked_members(e, members)
    if len(weights) != len(ms):
        raise ValueError(
            f"need {len(ms)} weights for a committee of {len(ms)}, got {len(weights)}"
        )
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    contributions = []
    for row in e.utilities.values():
        vals = [row[r] for r in ms if r in row]
        if not vals:
            continue
        vals.sort(reverse=True)
        contrib = 0.0
        for w, v in zip(weights, vals):
            contrib += w * v
        contributions.append(contrib)
    return math.fsum(contributions)


def marginal_gain(
    e: UtilityElection,
    weights: Sequence[float],
    members: Iterable[int],
    r: int,
) -> float:
    """Score increase from adding resource r to the committee.

    Computed agent by agent from the insertion position of the new utility in
    the agent's sorted value vector; equals the difference of two full
    score_committee calls (up to one final rounding). Only agents with
    positive utility for r can contribute, and the gain is nonnegative
    whenever the weights are nonincreasing.
    """
    ms = _checked_members(e, members)
    if r in ms:
        raise ValueError(f"resource {r!r} is already in the committee")
    if r not in e.resources:
        raise ValueError(f"resource {r!r} not in election")
    if len(weights) < len(ms) + 1:
        raise ValueError(
            f"need at least {len(ms) + 1} weights, got {len(weights)}"
        )
    w = list(weights[: len(ms) + 1])
    if any(x < 0 for x in w):
        raise ValueError("weights must be nonnegative")
    gains = []
    for row in e.utilities.values():
        u = row.get(r, 0.0)
        if u == 0.0:
            continue  # inserting a zero changes nothing
        vals = sorted((row[x] for x in ms if x in row), reverse=True)
        j = sum(1 for v in vals if v > u)
        old = 0.0
        for wi, v in zip(w, vals):
            old += wi * v
        vals.insert(j, u)
        new = 0.0
        for wi, v in zip(w, vals):
            new += wi * v
        gains.append(new - old)
    return math.fsum(gains)
