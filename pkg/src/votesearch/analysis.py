"""Measurement tools built on top of the search pipeline.

Resources are compared through each other's eyes: the rank of y with respect
to x is y's position (1 = best) in the TF-IDF ordering of x's local election,
and the dissimilarity of a pair is the mean of the two ranks. A resource
absent from the other's local election is treated as completely dissimilar
and the pair carries the MISSING sentinel instead of a number.

On top of that sit: extension sets (committees around committees, to pick
which resources are worth plotting), a force-directed 2-D embedding of a
dissimilarity graph, a gamma calibration sweep, and a greedy-vs-annealing
score benchmark.
"""

from __future__ import annotations

import logging
import math
import statistics
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .elections import INFINITY, ApprovalElection, HuvParams
from .search import NoSupportersError, build_local_election
from .solvers import AnnealingConfig, solve_annealing, solve_exact_p0, solve_greedy

log = logging.getLogger(__name__)


class _Missing:
    """Sentinel for 'completely dissimilar' (no rank defined)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"


MISSING = _Missing()


def rank_table(
    global_election: ApprovalElection, x: int, gamma: float = 2.0
) -> dict[int, int]:
    """Map every resource in x's local election to its TF-IDF rank.

    Rank 1 is the largest TF-IDF value; exact ties break by ascending id.
    Empty when x's supporters approve nothing besides x itself.
    """
    local = build_local_election(global_election, {x}, gamma)
    ordered = sorted(local.tfidf, key=lambda r: (-local.tfidf[r], r))
    return {r: rank for rank, r in enumerate(ordered, start=1)}


class RankTableCache:
    """LRU read-through cache of rank tables for one global election.

    Safe to share across threads; a lock serializes lookups, so concurrent
    misses for the same resource build the table once.
    """

    def __init__(self, global_election: ApprovalElection, gamma: float = 2.0, maxsize: int = 128):
        if maxsize < 1:
            raise ValueError("maxsize must be positive")
        self._election = global_election
        self._gamma = gamma
        self._maxsize = maxsize
        self._tables: dict[int, dict[int, int]] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def get(self, x: int) -> dict[int, int]:
        with self._lock:
            table = self._tables.get(x)
            if table is not None:
                self.hits += 1
                # refresh recency (dicts iterate in insertion order)
                del self._tables[x]
                self._tables[x] = table
                return table
            self.misses += 1
            table = rank_table(self._election, x, self._gamma)
            if len(self._tables) >= self._maxsize:
                oldest = next(iter(self._tables))
                del self._tables[oldest]
            self._tables[x] = table
            return table


def rank_in_local(
    global_election: ApprovalElection, x: int, y: int, gamma: float = 2.0
):
    """Rank of y in x's local election, or MISSING when y does not appear."""
    if x == y:
        raise ValueError("rank is defined only for distinct resources")
    return rank_table(global_election, x, gamma).get(y, MISSING)


def dissimilarity(
    global_election: ApprovalElection, x: int, y: int, gamma: float = 2.0
):
    """Mean of the two directed ranks; MISSING when either is MISSING."""
    forward = rank_in_local(global_election, x, y, gamma)
    backward = rank_in_local(global_election, y, x, gamma)
    if forward is MISSING or backward is MISSING:
        return MISSING
    return (forward + backward) / 2


@dataclass(frozen=True)
class DissimilarityGraph:
    """Nodes plus a symmetric pairwise dissimilarity map (absent = MISSING)."""

    nodes: frozenset[int]
    diss: Mapping[tuple[int, int], float]

    def __post_init__(self):
        for (a, b), value in self.diss.items():
            if a >= b:
                raise ValueError(f"pair keys must be sorted and distinct, got {(a, b)}")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"pair {(a, b)} references a node outside the graph")
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"dissimilarity must be positive and finite, got {value!r}")

    def get(self, x: int, y: int):
        if x not in self.nodes or y not in self.nodes:
            raise ValueError(f"unknown node in pair {(x, y)}")
        if x == y:
            raise ValueError("dissimilarity is defined only for distinct nodes")
        return self.diss.get((min(x, y), max(x, y)), MISSING)


def build_dissimilarity_graph(
    global_election: ApprovalElection,
    nodes: Iterable[int],
    gamma: float = 2.0,
    cache: RankTableCache | None = None,
) -> DissimilarityGraph:
    """All-pairs dissimilarities, computing each node's rank table once."""
    node_list = sorted(set(nodes))
    if cache is None:
        cache = RankTableCache(global_election, gamma, maxsize=max(len(node_list), 1))
    tables = {}
    for x in node_list:
        try:
            tables[x] = cache.get(x)
        except NoSupportersError:
            tables[x] = {}
    diss = {}
    for i, a in enumerate(node_list):
        for b in node_list[i + 1 :]:
            ra = tables[a].get(b)
            rb = tables[b].get(a)
            if ra is not None and rb is not None:
                diss[(a, b)] = (ra + rb) / 2
    return DissimilarityGraph(nodes=frozenset(node_list), diss=diss)


def build_extension(
    global_election: ApprovalElection,
    a: Iterable[int],
    k: int = 10,
    p_values: Sequence[int | float] = (0, 1, 2, 3),
    gamma: float = 2.0,
) -> frozenset[int]:
    """Close a seed set under committee neighbourhoods.

    B = union over x in a and p in p_values of the size-k committee for the
    singleton query {x} (exact for p = 0, greedy otherwise); C = union of
    size-2 total-utility committees around each member of B. Returns
    a | B | C. Members whose local election is degenerate are skipped with
    a warning.
    """
    seed_set = frozenset(a)

    def committees_for(x: int, sizes_and_ps) -> set[int]:
        try:
            local = build_local_election(global_election, {x}, gamma)
        except NoSupportersError:
            log.warning("extension: resource %d has no supporters, skipped", x)
            return set()
        m = len(local.approval.resources)
        if m == 0:
            log.warning(
                "extension: supporters of resource %d approve nothing else, skipped", x
            )
            return set()
        found: set[int] = set()
        for size, p in sizes_and_ps:
            k_eff = min(size, m)
            if p == 0:
                found.update(solve_exact_p0(local.utility, k_eff).members)
            else:
                found.update(solve_greedy(local.utility, HuvParams(p, k_eff)).members)
        return found

    b: set[int] = set()
    for x in sorted(seed_set):
        b |= committees_for(x, [(k, p) for p in p_values])
    c: set[int] = set()
    for y in sorted(b):
        c |= committees_for(y, [(2, 0)])
    return seed_set | b | c


def edge_weight(diss) -> float:
    """Attraction weight of a pair: diss^-2, or 0 for MISSING pairs."""
    if diss is MISSING:
        return 0.0
    return float(diss) ** -2.0


@dataclass(frozen=True)
class Embedding:
    positions: dict[int, tuple[float, float]]


def embed(
    graph: DissimilarityGraph, iterations: int = 10_000, seed: int = 0
) -> Embedding:
    """Force-directed layout of the dissimilarity graph in the unit square.

    Standard spring model: every pair repels with k^2/d, connected pairs
    attract with w * d^2 / k where w = diss^-2, displacement per step is
    capped by a linearly cooling temperature, and positions are clamped to
    [0, 1]^2 (no post-hoc rescale). Deterministic per seed. A lone node sits
    at the origin. Two-body equilibrium: d* = k * diss^(2/3).
    """
    if not graph.nodes:
        raise ValueError("graph must have at least one node")
    nodes = sorted(graph.nodes)
    n = len(nodes)
    if n == 1:
        return Embedding({nodes[0]: (0.0, 0.0)})

    index = {node: i for i, node in enumerate(nodes)}
    weights = np.zeros((n, n))
    for (a, b), value in graph.diss.items():
        w = edge_weight(value)
        weights[index[a], index[b]] = w
        weights[index[b], index[a]] = w

    rng = np.random.default_rng(seed)
    pos = rng.random((n, 2))
    k = math.sqrt(1.0 / n)
    t0 = 0.1

    for step in range(iterations):
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((diff * diff).sum(axis=2))
        dist = np.maximum(dist, 1e-9)
        coef = (k * k / dist - weights * dist * dist / k) / dist
        np.fill_diagonal(coef, 0.0)
        disp = (diff * coef[:, :, None]).sum(axis=1)
        norm = np.maximum(np.sqrt((disp * disp).sum(axis=1)), 1e-12)
        temperature = t0 * (1.0 - step / iterations)
        pos += disp * (np.minimum(norm, temperature) / norm)[:, None]
        np.clip(pos, 0.0, 1.0, out=pos)

    return Embedding(
        {node: (float(x), float(y)) for node, (x, y) in zip(nodes, pos)}
    )


DEFAULT_GAMMAS = (1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4, 2.6, 2.8)


@dataclass(frozen=True)
class CalibrationRow:
    gamma: float
    counts: dict[int, int]
    mean: float


@dataclass(frozen=True)
class CalibrationResult:
    rows: tuple[CalibrationRow, ...]
    flagged: frozenset[int]


def calibrate_gamma(
    global_election: ApprovalElection,
    family: Iterable[int],
    gammas: Sequence[float] = DEFAULT_GAMMAS,
    top: int = 10,
) -> CalibrationResult:
    """How well each gamma keeps a known family together.

    For every family member as a singleton query, count the other family
    members among the `top` largest TF-IDF resources of its local election.
    Members with a degenerate local election count 0 and are flagged.
    """
    members = sorted(set(family))
    if len(members) < 2:
        raise ValueError("family must contain at least two resources")
    family_set = set(members)
    rows = []
    flagged: set[int] = set()
    for gamma in gammas:
        counts = {}
        for x in members:
            try:
                table = rank_table(global_election, x, gamma)
            except NoSupportersError:
                table = {}
            if not table:
                flagged.add(x)
                counts[x] = 0
                continue
            counts[x] = sum(
                1 for r, rank in table.items() if rank <= top and r in family_set
            )
        rows.append(
            CalibrationRow(
                gamma=gamma,
                counts=counts,
                mean=sum(counts.values()) / len(members),
            )
        )
    return CalibrationResult(rows=tuple(rows), flagged=frozenset(flagged))


@dataclass(frozen=True)
class BenchRow:
    movie: int
    p: int | float
    ratio: float
    greedy_score: float
    annealing_score: float
    global_approvals: int


@dataclass(frozen=True)
class BenchResult:
    rows: tuple[BenchRow, ...]
    summary: dict[int | float, tuple[float, float]]
    skipped: tuple[int, ...]


def _p_spawn_key(p) -> int:
    # spawn keys must be nonnegative ints; reserve the top of the u32 range
    # for the coverage limit
    return 0xFFFFFFFF if p == INFINITY else int(p)


def bench_algorithms(
    global_election: ApprovalElection,
    sample_size: int = 1000,
    p_values: Sequence[int | float] = (1, 2, 3),
    k: int = 10,
    seed: int = 0,
    gamma: float = 2.0,
    annealing: AnnealingConfig = AnnealingConfig(),
) -> BenchResult:
    """Greedy-vs-annealing score ratios over sampled singleton queries.

    Samples uniformly (without replacement, seeded) from the global
    resources, skipping any whose local election is degenerate, until
    sample_size eligible movies are benched or the pool runs out. The
    annealing config's seed field is replaced per (movie, p). Each row
    carries the movie's global approval count for swarm plots.
    """
    rng = np.random.default_rng(seed)
    pool = sorted(global_election.resources)
    order = rng.permutation(len(pool))
    rows = []
    skipped = []
    benched = 0
    for idx in order:
        if benched >= sample_size:
            break
        x = pool[idx]
        try:
            local = build_local_election(global_election, {x}, gamma)
        except NoSupportersError:
            skipped.append(x)
            continue
        m = len(local.approval.resources)
        if m == 0:
            skipped.append(x)
            continue
        k_eff = min(k, m)
        for p in p_values:
            params = HuvParams(p, k_eff)
            greedy = solve_greedy(local.utility, params)
            cell_seed = int(
                np.random.SeedSequence(
                    seed, spawn_key=(x, _p_spawn_key(p))
                ).generate_state(1, np.uint64)[0]
            )
            annealed = solve_annealing(
                local.utility, params, AnnealingConfig(
                    steps=annealing.steps,
                    t_max=annealing.t_max,
                    t_min=annealing.t_min,
                    seed=cell_seed,
                )
            )
            rows.append(
                BenchRow(
                    movie=x,
                    p=p,
                    ratio=greedy.score / annealed.score,
                    greedy_score=greedy.score,
                    annealing_score=annealed.score,
                    global_approvals=global_election.approval_counts[x],
                )
            )
        benched += 1

    summary = {}
    for p in p_values:
        ratios = [row.ratio for row in rows if row.p == p]
        if ratios:
            std = statistics.stdev(ratios) if len(ratios) > 1 else 0.0
            summary[p] = (sum(ratios) / len(ratios), std)
    return BenchResult(rows=tuple(rows), summary=summary, skipped=tuple(sorted(skipped)))
