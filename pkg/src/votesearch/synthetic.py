"""Synthetic elections with planted category structure.

The movie universe is a grid: `categories` x `subcategories` cells, each
holding `movies_per_sub` items of decaying quality. Movie ids are dense and
0-based: (u, v, i) with 1-based labels maps to

    id = (u-1) * subcategories * movies_per_sub + (v-1) * movies_per_sub + (i-1)

Each voter gets a private taste: the preference profile (one strongly
favored category, a few liked, the rest rare) is independently permuted for
the category stage and, per category, for the subcategory stage. A single
approval is drawn category -> subcategory -> item, the item stage weighted
by the quality curve q(i) = -atan((i-13)/10) + 2. Repeating this
`draws_per_voter` times with set semantics yields slightly fewer distinct
approvals than draws.

Reproducibility contract: `generate_election` consumes its generator in a
fixed order per voter (one `permuted` call for the category profile, one
row-wise `permuted` call for the subcategory matrix, one uniform block of
shape (draws, 3)), so a seed pins the whole election. The histogram
experiment derives per-trial seeds from the master seed with SeedSequence
spawn keys: (0, trial, attempt) for election generation and (1, trial, p)
for the annealing runs, which keeps every cell reproducible in isolation
and the two purposes on disjoint streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .elections import INFINITY, ApprovalElection, HuvParams
from .search import build_local_election
from .solvers import AnnealingConfig, solve_annealing, solve_exact_p0, solve_greedy

DEFAULT_PROFILE = (0.5, 0.1, 0.1, 0.1, 0.1, 0.025, 0.025, 0.025, 0.025)

_QUALITY_RANGE = 25


def quality_factor(i: int) -> float:
    """Quality of the i-th item in a subcategory, i in 1..25.

    Decays from about 2.876 down to about 1.124; the midpoint item (13)
    sits exactly at 2. The curve is odd around the midpoint, so the 25
    values sum to 50.
    """
    if not 1 <= i <= _QUALITY_RANGE:
        raise ValueError(f"item index must be in 1..{_QUALITY_RANGE}, got {i}")
    return -math.atan((i - 13) / 10) + 2.0


def quality_profile(movies_per_sub: int = 25) -> np.ndarray:
    """Selection probabilities proportional to quality, normalized to 1."""
    q = np.array([quality_factor(i) for i in range(1, movies_per_sub + 1)])
    return q / math.fsum(q.tolist())


def categorical_index(u, cumulative) -> int | np.ndarray:
    """Invert a cumulative distribution: smallest index with u < cum[index].

    Accepts a scalar or an array of uniforms. Clamps to the last bucket so
    a cumulative vector that tops out slightly below 1.0 cannot produce an
    out-of-range index.
    """
    cum = np.asarray(cumulative)
    arr = np.asarray(u)
    idx = (arr[..., None] >= cum).sum(axis=-1)
    idx = np.minimum(idx, len(cum) - 1)
    if arr.ndim == 0:
        return int(idx)
    return idx


@dataclass(frozen=True)
class SyntheticConfig:
    """Geometry, population size, and taste profile of a synthetic election."""

    categories: int = 9
    subcategories: int = 9
    movies_per_sub: int = 25
    voters: int = 2000
    draws_per_voter: int = 162
    seed: int = 0
    preference_profile: tuple[float, ...] = DEFAULT_PROFILE

    def __post_init__(self):
        object.__setattr__(
            self, "preference_profile", tuple(float(w) for w in self.preference_profile)
        )
        for name in ("categories", "subcategories", "voters", "draws_per_voter"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not 1 <= self.movies_per_sub <= _QUALITY_RANGE:
            raise ValueError(
                f"movies_per_sub must be in 1..{_QUALITY_RANGE}, got {self.movies_per_sub}"
            )
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        profile = self.preference_profile
        if len(profile) != self.categories or len(profile) != self.subcategories:
            raise ValueError(
                "preference_profile length must equal both the category and "
                f"subcategory counts, got {len(profile)}"
            )
        if any(w < 0 for w in profile):
            raise ValueError("preference_profile weights must be nonnegative")
        if abs(math.fsum(profile) - 1.0) > 1e-9:
            raise ValueError("preference_profile must sum to 1")

    @property
    def num_movies(self) -> int:
        return self.categories * self.subcategories * self.movies_per_sub

    def movie_id(self, category: int, subcategory: int, item: int) -> int:
        """Dense 0-based id for the 1-based label (category, subcategory, item)."""
        if not 1 <= category <= self.categories:
            raise ValueError(f"category must be in 1..{self.categories}, got {category}")
        if not 1 <= subcategory <= self.subcategories:
            raise ValueError(
                f"subcategory must be in 1..{self.subcategories}, got {subcategory}"
            )
        if not 1 <= item <= self.movies_per_sub:
            raise ValueError(f"item must be in 1..{self.movies_per_sub}, got {item}")
        return (
            (category - 1) * self.subcategories * self.movies_per_sub
            + (subcategory - 1) * self.movies_per_sub
            + (item - 1)
        )

    def movie_label(self, movie: int) -> tuple[int, int, int]:
        """Inverse of movie_id; returns 1-based (category, subcategory, item)."""
        if not 0 <= movie < self.num_movies:
            raise ValueError(f"movie id must be in 0..{self.num_movies - 1}, got {movie}")
        category, rest = divmod(movie, self.subcategories * self.movies_per_sub)
        subcategory, item = divmod(rest, self.movies_per_sub)
        return category + 1, subcategory + 1, item + 1


@dataclass(frozen=True)
class SyntheticElection:
    """A generated election together with the config that labels its movies."""

    election: ApprovalElection
    config: SyntheticConfig


def generate_election(cfg: SyntheticConfig) -> SyntheticElection:
    """Sample a full approval election; deterministic per cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    base = np.array(cfg.preference_profile)
    sub_block = np.tile(base, (cfg.categories, 1))
    item_cum = np.cumsum(quality_profile(cfg.movies_per_sub))
    per_cat = cfg.subcategories * cfg.movies_per_sub

    approvals: dict[int, set[int]] = {}
    for voter in range(1, cfg.voters + 1):
        cat_cum = np.cumsum(rng.permuted(base))
        sub_cum = np.cumsum(rng.permuted(sub_block, axis=1), axis=1)
        u = rng.random((cfg.draws_per_voter, 3))
        cats = categorical_index(u[:, 0], cat_cum)
        subs = np.minimum(
            (u[:, 1][:, None] >= sub_cum[cats]).sum(axis=1), cfg.subcategories - 1
        )
        items = categorical_index(u[:, 2], item_cum)
        ids = cats * per_cat + subs * cfg.movies_per_sub + items
        approvals[voter] = set(int(m) for m in ids)

    election = ApprovalElection(
        approvals, num_agents=cfg.voters, resources=range(cfg.num_movies)
    )
    return SyntheticElection(election=election, config=cfg)


@dataclass(frozen=True)
class SubcategoryHistogram:
    """Committee members tallied into the category/subcategory grid.

    summary = (x, y, z): members in the query's own subcategory, in the
    rest of the query's category, and everywhere else.
    """

    counts: tuple[tuple[int, ...], ...]
    summary: tuple[int, int, int]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)


def subcategory_histogram(
    members: Iterable[int], cfg: SyntheticConfig, query: int
) -> SubcategoryHistogram:
    grid = np.zeros((cfg.categories, cfg.subcategories), dtype=int)
    for mid in members:
        u, v, _ = cfg.movie_label(mid)
        grid[u - 1, v - 1] += 1
    qu, qv, _ = cfg.movie_label(query)
    x = int(grid[qu - 1, qv - 1])
    y = int(grid[qu - 1].sum()) - x
    z = int(grid.sum()) - x - y
    return SubcategoryHistogram(
        counts=tuple(tuple(int(c) for c in row) for row in grid),
        summary=(x, y, z),
    )


@dataclass(frozen=True)
class ExperimentResult:
    config: SyntheticConfig
    query: int
    trials: int
    k: int
    gamma: float
    histograms: dict[tuple[int | float, str], SubcategoryHistogram]
    regenerated: tuple[tuple[int, int], ...]


def _derived_seed(master: int, spawn_key: tuple[int, ...]) -> int:
    return int(np.random.SeedSequence(master, spawn_key=spawn_key).generate_state(1, np.uint64)[0])


def run_histogram_experiment(
    cfg: SyntheticConfig,
    *,
    trials: int = 100,
    k: int = 10,
    p_values: Sequence[int | float] = (0, 1, 2, 3),
    algorithms: Sequence[str] = ("greedy", "annealing"),
    query: int | None = None,
    gamma: float = 2.0,
    annealing: AnnealingConfig = AnnealingConfig(),
    max_attempts: int = 100,
    progress: Callable[[int], None] | None = None,
) -> ExperimentResult:
    """Repeated search over fresh elections, tallied by subcategory.

    Per trial one election is generated (seed derived from the master seed,
    trial index, and attempt number; a trial whose query movie nobody
    approves is regenerated with the next attempt and logged). All (p,
    algorithm) cells of a trial share that election and its local
    derivation. p = 0 is solved exactly once and credited to every
    algorithm row; the annealing config's seed field is ignored and
    replaced by a per-(trial, p) derived seed.
    """
    if query is None:
        query = cfg.movie_id(1, 1, (cfg.movies_per_sub + 1) // 2)
    else:
        cfg.movie_label(query)  # range check
    for algo in algorithms:
        if algo not in ("greedy", "annealing"):
            raise ValueError(f"unknown algorithm {algo!r}")

    member_lists: dict[tuple[int | float, str], list[int]] = {
        (p, algo): [] for p in p_values for algo in algorithms
    }
    regenerated: list[tuple[int, int]] = []

    for trial in range(trials):
        attempt = 0
        while True:
            if attempt >= max_attempts:
                raise RuntimeError(
                    f"trial {trial}: query movie {query} had no supporters after "
                    f"{max_attempts} attempts"
                )
            seed = _derived_seed(cfg.seed, (0, trial, attempt))
            election = generate_election(replace(cfg, seed=seed)).election
            if election.approvers[query]:
                break
            regenerated.append((trial, attempt))
            attempt += 1

        local = build_local_election(election, {query}, gamma)
        k_eff = min(k, len(local.approval.resources))

        for p in p_values:
            if k_eff == 0:
                continue
            if p == 0:
                members = solve_exact_p0(local.utility, k_eff).members
                for algo in algorithms:
                    member_lists[(p, algo)].extend(members)
                continue
            params = HuvParams(p, k_eff)
            for algo in algorithms:
                if algo == "greedy":
                    committee = solve_greedy(local.utility, params)
                else:
                    p_key = 0 if p == INFINITY else int(p)
                    cell_seed = _derived_seed(cfg.seed, (1, trial, p_key))
                    committee = solve_annealing(
                        local.utility, params, replace(annealing, seed=cell_seed)
                    )
                member_lists[(p, algo)].extend(committee.members)

        if progress is not None:
            progress(trial)

    histograms = {
        cell: subcategory_histogram(ids, cfg, query)
        for cell, ids in member_lists.items()
    }
    return ExperimentResult(
        config=cfg,
        query=query,
        trials=trials,
        k=k,
        gamma=gamma,
        histograms=histograms,
        regenerated=tuple(regenerated),
    )
