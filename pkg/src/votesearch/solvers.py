"""Committee solvers.

Four routes to a winning committee:

* ``solve_exact_p0`` — optimal for p = 0, where the committee score is just
  the sum of member total utilities: sort resources by total utility, take
  the top k.
* ``solve_greedy`` — for general p, add the member with the largest marginal
  gain, k times. The committee score is nondecreasing and submodular in the
  member set when the weights are nonincreasing, so the classic (1 - 1/e)
  approximation guarantee applies. Uses lazy re-evaluation: stale gains from
  earlier rounds are valid upper bounds, so most candidates are skipped.
* ``solve_annealing`` — single-swap simulated annealing with Metropolis
  acceptance, an exponential temperature schedule, and best-ever-state
  tracking. Warm-started from the exact p = 0 committee. Deterministic for a
  given seed.
* ``solve_bruteforce`` — exhaustive enumeration, the testing oracle. Refuses
  instances above a combination cap.

Tie-breaking is deterministic everywhere: exact float comparison, then
ascending resource id (lexicographically smallest sorted member list for the
enumeration oracle). Sums over agents are canonicalized (values sorted before
summation, or fsum) so no solver output depends on agent labelling or dict
insertion order.
"""

from __future__ import annotations

import bisect
import math
import weakref
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .elections import (
    Committee,
    HuvParams,
    UtilityElection,
    huv_weights,
    score_committee,
)


@dataclass(frozen=True)
class AnnealingConfig:
    """Schedule and seed for the annealer. Defaults: 50000 steps, 9900 -> 0.6."""

    steps: int = 50_000
    t_max: float = 9_900.0
    t_min: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not (0.0 < self.t_min <= self.t_max):
            raise ValueError("need 0 < t_min <= t_max")


class _View:
    """Column-sparse array view of a utility election.

    Agents become rows 0..n-1 in ascending agent-id order, resources become
    columns in ascending resource-id order. Per column we keep the rows with
    positive utility and the matching values; totals are fsum-exact.
    """

    def __init__(self, e: UtilityElection):
        agents = sorted(e.utilities)
        self.resource_ids: list[int] = sorted(e.resources)
        index = {r: i for i, r in enumerate(self.resource_ids)}
        rows: list[list[int]] = [[] for _ in self.resource_ids]
        vals: list[list[float]] = [[] for _ in self.resource_ids]
        for row_no, agent in enumerate(agents):
            for r, u in e.utilities[agent].items():
                i = index[r]
                rows[i].append(row_no)
                vals[i].append(u)
        self.n = len(agents)
        self.m = len(self.resource_ids)
        self.col_rows = [np.asarray(x, dtype=np.intp) for x in rows]
        self.col_vals = [np.asarray(x, dtype=np.float64) for x in vals]
        self.totals = np.asarray(
            [math.fsum(x) for x in vals], dtype=np.float64
        )


_VIEW_CACHE: "weakref.WeakKeyDictionary[UtilityElection, _View]" = (
    weakref.WeakKeyDictionary()
)


def _view(e: UtilityElection) -> _View:
    view = _VIEW_CACHE.get(e)
    if view is None:
        view = _View(e)
        _VIEW_CACHE[e] = view
    return view


def _check_k(view: _View, k: int):
    if k > view.m:
        raise ValueError(f"committee size {k} exceeds {view.m} resources")


def solve_exact_p0(e: UtilityElection, k: int) -> Committee:
    """Optimal committee for p = 0: the k resources of largest total utility.

    Members are ordered by nonincreasing total utility, ties by ascending id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    view = _view(e)
    _check_k(view, k)
    order = sorted(
        range(view.m), key=lambda i: (-view.totals[i], view.resource_ids[i])
    )
    members = tuple(view.resource_ids[i] for i in order[:k])
    score = score_committee(e, (1.0,) * k, members)
    return Committee(members=members, score=score, algorithm="exact0")


def _sorted_sum(a: np.ndarray) -> float:
    # canonical summation: independent of the order values arrived in
    return float(np.sort(a).sum())


def solve_greedy(e: UtilityElection, params: HuvParams) -> Committee:
    """Lazy greedy maximization of the committee score.

    Each round picks the candidate with the largest marginal gain (ties by
    ascending resource id). Because gains only shrink as the committee grows,
    each candidate's previous gain is an upper bound; candidates are visited
    in bound order and the scan stops as soon as no remaining bound can beat
    the best recomputed gain. Members are returned in selection order.
    """
    view = _view(e)
    k = params.k
    _check_k(view, k)
    lam = np.asarray(huv_weights(params))
    n, m = view.n, view.m

    # Per-agent utilities of the selected members, each row sorted descending.
    chosen = np.zeros((n, k), dtype=np.float64)
    # Upper bounds; round zero's gain is exactly the total utility.
    ub = view.totals.copy()
    selected = np.zeros(m, dtype=bool)
    members: list[int] = []

    for t in range(len(members), k):
        if t == 0:
            suffix = np.zeros((n, 1))
        else:
            drop = lam[1 : t + 1] - lam[:t]  # <= 0 for nonincreasing weights
            weighted = chosen[:, :t] * drop
            suffix = np.zeros((n, t + 1))
            suffix[:, :t] = weighted[:, ::-1].cumsum(axis=1)[:, ::-1]

        order = np.lexsort((np.arange(m), -ub))
        best_gain = -math.inf
        best_i = -1
        for i in order:
            if selected[i]:
                continue
            if ub[i] < best_gain:
                break  # no remaining candidate can match best_gain
            rows = view.col_rows[i]
            if rows.size == 0:
                gain = 0.0
            else:
                vals = view.col_vals[i]
                pos = (chosen[rows, :t] > vals[:, None]).sum(axis=1)
                gain = _sorted_sum(lam[pos] * vals + suffix[rows, pos])
            ub[i] = gain
            if gain > best_gain or (gain == best_gain and i < best_i):
                best_gain, best_i = gain, int(i)

        selected[best_i] = True
        members.append(view.resource_ids[best_i])
        rows = view.col_rows[best_i]
        if rows.size:
            chosen[rows, t] = view.col_vals[best_i]
            chosen[rows, : t + 1] = -np.sort(-chosen[rows, : t + 1], axis=1)

    score = score_committee(e, huv_weights(params), members)
    return Committee(members=tuple(members), score=score, algorithm="greedy")


def solve_annealing(
    e: UtilityElection, params: HuvParams, config: AnnealingConfig | None = None
) -> Committee:
    """Single-swap simulated annealing over size-k member sets.

    State energy is the negated committee score. Each step replaces one
    uniformly random member with one uniformly random non-member and accepts
    by the Metropolis rule exp(-dE/T); the temperature decays exponentially
    from t_max to t_min over the configured number of steps. The best state
    ever seen is returned, so the warm start (the exact p = 0 committee) is
    never lost. All randomness comes from one numpy Generator seeded with
    config.seed, pre-drawn per step: slot choice, replacement choice, and the
    acceptance uniform.
    """
    cfg = config or AnnealingConfig()
    view = _view(e)
    k = params.k
    _check_k(view, k)
    lam = np.asarray(huv_weights(params))
    weights = huv_weights(params)
    n, m = view.n, view.m

    if k == m:
        members = tuple(view.resource_ids)
        return Committee(
            members=members,
            score=score_committee(e, weights, members),
            algorithm="annealing",
            seed=cfg.seed,
        )

    id_of = view.resource_ids
    start = solve_exact_p0(e, k).members
    pos_index = {r: i for i, r in enumerate(id_of)}
    member_pos = [pos_index[r] for r in start]
    in_committee = set(member_pos)
    non_members = sorted(i for i in range(m) if i not in in_committee)

    # utilities of current members, one column per committee slot
    current = np.zeros((n, k), dtype=np.float64)
    for slot, i in enumerate(member_pos):
        current[view.col_rows[i], slot] = view.col_vals[i]
    contrib = np.sort(current, axis=1)[:, ::-1] @ lam
    score = _sorted_sum(contrib)

    best_score = score
    best_pos = list(member_pos)

    rng = np.random.default_rng(cfg.seed)
    slots = rng.integers(0, k, size=cfg.steps)
    picks = rng.integers(0, m - k, size=cfg.steps)
    unifs = rng.random(cfg.steps)
    temps = cfg.t_max * (cfg.t_min / cfg.t_max) ** (
        np.arange(cfg.steps) / cfg.steps
    )

    for step in range(cfg.steps):
        slot = int(slots[step])
        out_pos = member_pos[slot]
        in_pos = non_members[int(picks[step])]

        rows_out = view.col_rows[out_pos]
        rows_in = view.col_rows[in_pos]
        if rows_out.size or rows_in.size:
            affected = np.unique(np.concatenate((rows_out, rows_in)))
            new_col = np.zeros(affected.size)
            if rows_in.size:
                at = np.searchsorted(rows_in, affected)
                at_ok = at < rows_in.size
                hit = np.zeros(affected.size, dtype=bool)
                hit[at_ok] = rows_in[at[at_ok]] == affected[at_ok]
                new_col[hit] = view.col_vals[in_pos][at[hit]]
            new_rows = current[affected].copy()
            new_rows[:, slot] = new_col
            new_contrib = np.sort(new_rows, axis=1)[:, ::-1] @ lam
            delta = _sorted_sum(new_contrib) - _sorted_sum(contrib[affected])
        else:
            affected = None
            delta = 0.0

        d_energy = -delta
        if d_energy <= 0.0 or unifs[step] < math.exp(-d_energy / temps[step]):
            if affected is not None:
                current[affected, slot] = new_col
                contrib[affected] = new_contrib
            score += delta
            member_pos[slot] = in_pos
            del non_members[int(picks[step])]
            bisect.insort(non_members, out_pos)
            if score > best_score:
                best_score = score
                best_pos = list(member_pos)

    members = tuple(id_of[i] for i in sorted(best_pos))
    return Committee(
        members=members,
        score=score_committee(e, weights, members),
        algorithm="annealing",
        seed=cfg.seed,
    )


def solve_bruteforce(
    e: UtilityElection, params: HuvParams, cap: int = 2_000_000
) -> Committee:
    """Exhaustive enumeration oracle.

    Scores every size-k subset and returns the maximum; ties resolve to the
    lexicographically smallest sorted member-id list. Instances with more
    than ``cap`` combinations are refused, as are dense instances beyond what
    a testing oracle should chew on (agents x resources > 5e7; k = 1 has a
    sparse path without that limit).
    """
    view = _view(e)
    k = params.k
    _check_k(view, k)
    ncomb = math.comb(view.m, k)
    if ncomb > cap:
        raise ValueError(
            f"{view.m} choose {k} = {ncomb} exceeds the enumeration cap {cap}"
        )
    weights = huv_weights(params)
    lam = np.asarray(weights)

    if k == 1:
        best_i = min(
            range(view.m), key=lambda i: (-view.totals[i], view.resource_ids[i])
        )
        members = (view.resource_ids[best_i],)
        return Committee(
            members=members,
            score=score_committee(e, weights, members),
            algorithm="bruteforce",
        )

    n, m = view.n, view.m
    if n * m > 50_000_000:
        raise ValueError(
            f"election too large for the enumeration oracle ({n} agents x {m} resources)"
        )
    dense = np.zeros((n, m), dtype=np.float64)
    for i in range(m):
        dense[view.col_rows[i], i] = view.col_vals[i]

    best_score = -math.inf
    best_combo: tuple[int, ...] | None = None
    chunk_size = max(1, 4_000_000 // max(1, n * k))
    combos = combinations(range(m), k)
    while True:
        block = list(islice(combos, chunk_size))
        if not block:
            break
        idx = np.asarray(block, dtype=np.intp)  # (c, k)
        sub = dense[:, idx]  # (n, c, k)
        per_agent = np.sort(sub, axis=2)[:, :, ::-1] @ lam  # (n, c)
        scores = np.sort(per_agent, axis=0).sum(axis=0)  # canonical agent sum
        j = int(np.argmax(scores)) if scores.size else 0
        if scores.size and scores[j] > best_score:
            best_score = float(scores[j])
            best_combo = block[j]

    assert best_combo is not None
    members = tuple(view.resource_ids[i] for i in best_combo)
    return Committee(
        members=members,
        score=score_committee(e, weights, members),
        algorithm="bruteforce",
    )
