"""Generalized sparsity families and feasible-replacement search.

A sparsity constraint restricts the tuple of supports (Z_1, ..., Z_T)
jointly.  Four down-closed families are supported: per-point caps,
per-point partition matroids, block sparsity (a cap on the distinct atoms
used within each block of data points), and average sparsity (per-point
caps plus a global cap on the total support size).

A *feasible replacement* for a candidate atom adds that atom to some
supports and removes at most one atom from each support, staying inside
the family.  ``best_replacement`` finds the gain-maximizing replacement
for each family; for average sparsity this reduces to a budgeted
exchange problem solved exactly in O(T log T) by ``solve_exchange``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import InfeasibleState, UnsupportedConstraint


@dataclass(frozen=True)
class IndividualSparsity:
    """Every support holds at most ``s`` atoms."""

    s: int

    def __post_init__(self):
        if self.s < 0:
            raise ValueError("per-point cap must be nonnegative")


@dataclass(frozen=True)
class PartitionMatroid:
    """Per-point partition-matroid caps.

    ``rules[t]`` is a tuple of (atom frozenset, cap) pairs; support t may
    use at most ``cap`` atoms from each set.  Category sets of one rule
    must be disjoint; atoms outside every category are unconstrained.  A
    single category covering all atoms recovers the uniform matroid.
    """

    rules: tuple[tuple[tuple[frozenset, int], ...], ...]

    def __post_init__(self):
        for t, rule in enumerate(self.rules):
            for cat, cap in rule:
                if cap < 0:
                    raise ValueError(f"rule {t}: negative cap")

    @staticmethod
    def uniform(num_points: int, num_atoms: int, s: int) -> "PartitionMatroid":
        rule = ((frozenset(range(num_atoms)), s),)
        return PartitionMatroid((rule,) * num_points)

    def independent(self, t: int, support) -> bool:
        zs = set(support)
        return all(len(zs & cat) <= cap for cat, cap in self.rules[t])


@dataclass(frozen=True)
class BlockSparsity:
    """Caps on the number of distinct atoms used within each block of points."""

    blocks: tuple[tuple[int, ...], ...]
    caps: tuple[int, ...]

    def __post_init__(self):
        if len(self.blocks) != len(self.caps):
            raise ValueError("one cap per block required")
        if any(cap < 0 for cap in self.caps):
            raise ValueError("caps must be nonnegative")
        seen: set[int] = set()
        for block in self.blocks:
            if seen & set(block):
                raise ValueError("blocks must be disjoint")
            seen |= set(block)
        object.__setattr__(self, "_num_points", len(seen))
        if seen != set(range(len(seen))):
            raise ValueError("blocks must partition 0..T-1")


@dataclass(frozen=True)
class AverageSparsity:
    """Per-point caps ``s_t`` plus a cap ``s_prime`` on the total support size."""

    s_t: tuple[int, ...]
    s_prime: int

    def __post_init__(self):
        if any(cap < 0 for cap in self.s_t) or self.s_prime < 0:
            raise ValueError("caps must be nonnegative")

    @staticmethod
    def uniform(num_points: int, s: int, s_prime: int) -> "AverageSparsity":
        return AverageSparsity((s,) * num_points, s_prime)


SparsityConstraint = Union[IndividualSparsity, PartitionMatroid, BlockSparsity, AverageSparsity]


def is_feasible(constraint: SparsityConstraint, supports: Sequence) -> bool:
    """Whether the support tuple belongs to the constraint family."""
    if isinstance(constraint, IndividualSparsity):
        return all(len(z) <= constraint.s for z in supports)
    if isinstance(constraint, PartitionMatroid):
        if len(supports) != len(constraint.rules):
            return False
        return all(constraint.independent(t, z) for t, z in enumerate(supports))
    if isinstance(constraint, BlockSparsity):
        for block, cap in zip(constraint.blocks, constraint.caps):
            used: set[int] = set()
            for t in block:
                used |= set(supports[t])
            if len(used) > cap:
                return False
        return True
    if isinstance(constraint, AverageSparsity):
        sizes = [len(z) for z in supports]
        return (
            all(size <= cap for size, cap in zip(sizes, constraint.s_t))
            and sum(sizes) <= constraint.s_prime
        )
    raise TypeError(f"unknown constraint type {type(constraint)!r}")


def replacement_sparsity_p(constraint: SparsityConstraint, k: int) -> int:
    """Number of replacements needed to reach any feasible target from any state.

    Per-point caps and partition matroids need k, block sparsity needs k,
    and average sparsity needs 3k - 1 in general; when every per-point cap
    is at least the global cap (so only the total binds) 2k - 1 suffice.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if isinstance(constraint, (IndividualSparsity, PartitionMatroid, BlockSparsity)):
        return k
    if isinstance(constraint, AverageSparsity):
        if all(cap >= constraint.s_prime for cap in constraint.s_t):
            return 2 * k - 1
        return 3 * k - 1
    raise TypeError(f"unknown constraint type {type(constraint)!r}")


@dataclass
class Replacement:
    """One feasible replacement: the candidate atom and per-point decisions.

    Each ``per_t`` entry is (t, removed atom or None, whether the
    candidate is added to Z_t).  Supports without an entry are unchanged.
    """

    added_atom: int
    per_t: list[tuple[int, int | None, bool]]
    gain: float


def apply_replacement(supports: Sequence, replacement: Replacement) -> list[set]:
    """Apply a replacement to supports given as index collections; returns sets."""
    new = [set(z) for z in supports]
    for t, removed, add in replacement.per_t:
        if removed is not None:
            new[t].discard(removed)
        if add:
            new[t].add(replacement.added_atom)
    return new


@dataclass
class ExchangeInstance:
    """Budgeted add/remove exchange problem over point indices 0..T-1.

    Choose A (points gaining ``gains[t]``) and B (points paying
    ``costs[t]``) to maximize sum(gains[A]) - sum(costs[B]) subject to
    A & tight <= B and |A| <= |B| + slack.  ``costs[t]`` may be +inf to
    mark a point with nothing to remove.
    """

    gains: np.ndarray
    costs: np.ndarray
    tight: frozenset
    slack: int

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        self.costs = np.asarray(self.costs, dtype=float)
        if self.gains.shape != self.costs.shape:
            raise ValueError("gains and costs must have equal length")
        if self.slack < 0:
            raise ValueError("slack must be nonnegative")

    @property
    def num_points(self) -> int:
        return len(self.gains)


def solve_exchange(instance: ExchangeInstance) -> tuple[set, set, float]:
    """Exactly solve the budgeted exchange problem in O(T log T).

    Greedy over three priority queues: additions at non-tight points by
    gain descending, removals by cost ascending, and tight points (whose
    addition forces their own removal) by net gain descending.  Each step
    takes the best strictly positive marginal move; removals triggered to
    respect the slack budget reopen their tight point for a later plain
    addition.  Returns (A, B, value); the empty solution is always
    feasible with value 0.
    """
    g = instance.gains
    c = instance.costs
    tight = instance.tight
    slack = instance.slack
    t_count = instance.num_points

    add_q: list[tuple[float, int]] = [(-g[t], t) for t in range(t_count) if t not in tight]
    remove_q: list[tuple[float, int]] = [(c[t], t) for t in range(t_count) if math.isfinite(c[t])]
    pair_q: list[tuple[float, int]] = [
        (-(g[t] - c[t]), t) for t in tight if math.isfinite(c[t])
    ]
    heapq.heapify(add_q)
    heapq.heapify(remove_q)
    heapq.heapify(pair_q)

    chosen_add: set[int] = set()
    chosen_remove: set[int] = set()

    def peek(queue, skip) -> int | None:
        while queue and queue[0][1] in skip:
            heapq.heappop(queue)
        return queue[0][1] if queue else None

    while True:
        at_budget = len(chosen_add) == len(chosen_remove) + slack
        alpha = peek(add_q, chosen_add)
        beta = peek(remove_q, chosen_remove)
        # Tight points whose removal was already spent belong to add_q now.
        gamma = peek(pair_q, chosen_add | chosen_remove)

        add_value = -math.inf
        if alpha is not None:
            if at_budget:
                add_value = g[alpha] - c[beta] if beta is not None else -math.inf
            else:
                add_value = g[alpha]
        pair_value = g[gamma] - c[gamma] if gamma is not None else -math.inf

        if max(add_value, pair_value) <= 0.0:
            break
        if add_value >= pair_value:
            chosen_add.add(alpha)
            heapq.heappop(add_q)
            if at_budget:
                chosen_remove.add(beta)
                heapq.heappop(remove_q)
                if beta in tight:
                    # Its cap is no longer binding; a plain addition may follow.
                    heapq.heappush(add_q, (-g[beta], beta))
        else:
            chosen_add.add(gamma)
            chosen_remove.add(gamma)
            heapq.heappop(pair_q)

    value = float(np.sum(g[sorted(chosen_add)])) - float(np.sum(c[sorted(chosen_remove)]))
    return chosen_add, chosen_remove, value


class RompGains:
    """Decomposable proxy gains for one candidate atom.

    ``add_gains[t]`` is the (already smoothness-scaled) gain of adding the
    candidate to Z_t; ``removal_costs[t][j]`` is the scaled cost of
    dropping the j-th atom of Z_t.  Entries for supports already holding
    the candidate must be zero.
    """

    decomposable = True

    def __init__(self, add_gains: np.ndarray, removal_costs: Sequence[np.ndarray]):
        self.add_gains = np.asarray(add_gains, dtype=float)
        self.removal_costs = removal_costs

    def add_gain(self, t: int) -> float:
        return float(self.add_gains[t])

    def removal_cost(self, t: int, position: int) -> float:
        return float(self.removal_costs[t][position])

    def swap_gain(self, t: int, position: int) -> float:
        return self.add_gain(t) - self.removal_cost(t, position)


class ExactGains:
    """Callback-based exact gains (used by the exact greedy selector).

    ``add(t)`` evaluates the objective change of adding the candidate to
    Z_t; ``swap(t, j)`` that of simultaneously dropping the j-th atom.
    Exact gains do not decompose into per-point add/remove terms, so only
    per-point families (individual caps, partition matroids) accept them.
    """

    decomposable = False

    def __init__(self, add: Callable[[int], float], swap: Callable[[int, int], float]):
        self.add = add
        self.swap = swap

    def add_gain(self, t: int) -> float:
        return float(self.add(t))

    def swap_gain(self, t: int, position: int) -> float:
        return float(self.swap(t, position))


def _cheapest_removal(
    gains, support: Sequence[int], t: int, positions=None
) -> tuple[int | None, float]:
    """Cheapest removal position among ``positions``; ties go to the lowest atom index."""
    best_pos: int | None = None
    best_cost = math.inf
    for pos in range(len(support)) if positions is None else positions:
        cost = gains.removal_cost(t, pos)
        if cost < best_cost or (cost == best_cost and best_pos is not None and support[pos] < support[best_pos]):
            best_pos, best_cost = pos, cost
    return best_pos, best_cost


def _individual_like(constraint, supports, atom, gains) -> Replacement:
    per_t: list[tuple[int, int | None, bool]] = []
    total = 0.0
    uniform = isinstance(constraint, IndividualSparsity)
    for t, support in enumerate(supports):
        if atom in support:
            continue
        if uniform:
            can_add = len(support) < constraint.s
        else:
            can_add = constraint.independent(t, list(support) + [atom])
        best = 0.0
        choice: tuple[int | None, bool] | None = None
        if can_add:
            # Adding dominates any swap here (the objective is monotone),
            # so swaps are only searched when the cap or category binds.
            gain = gains.add_gain(t)
            if gain > best:
                best, choice = gain, (None, True)
        else:
            if uniform:
                positions = range(len(support))
            else:
                positions = [
                    pos
                    for pos in range(len(support))
                    if constraint.independent(
                        t, [x for x in support if x != support[pos]] + [atom]
                    )
                ]
            if gains.decomposable:
                pos, _ = _cheapest_removal(gains, support, t, positions)
                positions = [] if pos is None else [pos]
            for pos in positions:
                removed = support[pos]
                if removed == atom:
                    continue
                gain = gains.swap_gain(t, pos)
                if gain > best:
                    best, choice = gain, (removed, True)
        if choice is not None:
            per_t.append((t, choice[0], choice[1]))
            total += best
    return Replacement(atom, per_t, total)


def _block(constraint, supports, atom, gains) -> Replacement:
    per_t: list[tuple[int, int | None, bool]] = []
    total = 0.0
    for block, cap in zip(constraint.blocks, constraint.caps):
        adds = {
            t: gains.add_gain(t)
            for t in block
            if atom not in supports[t] and gains.add_gain(t) > 0.0
        }
        base = sum(adds.values())
        if base <= 0.0:
            continue
        union: set[int] = set()
        for t in block:
            union |= set(supports[t])
        best = 0.0
        best_removed: int | None = None
        if atom in union or len(union) < cap:
            best = base
        for removed in sorted(union - {atom}):
            # Dropping one atom from every support that holds it frees one
            # union slot for the candidate.
            cost = 0.0
            for t in block:
                sup = supports[t]
                if removed in sup:
                    cost += gains.removal_cost(t, list(sup).index(removed))
            value = base - cost
            if value > best:
                best, best_removed = value, removed
        if best <= 0.0:
            continue
        total += best
        for t in sorted(block):
            removed_here = best_removed if best_removed in set(supports[t]) else None
            add_here = t in adds
            if removed_here is not None or add_here:
                per_t.append((t, removed_here, add_here))
    per_t.sort()
    return Replacement(atom, per_t, total)


def _average(constraint, supports, atom, gains) -> Replacement:
    t_count = len(supports)
    sizes = [len(z) for z in supports]
    slack = constraint.s_prime - sum(sizes)
    g = np.zeros(t_count)
    c = np.full(t_count, math.inf)
    cheapest: list[int | None] = [None] * t_count
    for t, support in enumerate(supports):
        if atom not in support:
            g[t] = max(0.0, gains.add_gain(t))
        pos, cost = _cheapest_removal(gains, support, t)
        if pos is not None:
            cheapest[t] = support[pos]
            c[t] = cost
    tight = frozenset(t for t in range(t_count) if sizes[t] == constraint.s_t[t])
    added, removed, value = solve_exchange(ExchangeInstance(g, c, tight, slack))
    per_t = []
    for t in sorted(added | removed):
        per_t.append((t, cheapest[t] if t in removed else None, t in added))
    return Replacement(atom, per_t, value)


def best_replacement(
    constraint: SparsityConstraint,
    supports: Sequence[Sequence[int]],
    atom: int,
    gains,
) -> Replacement:
    """Gain-maximizing feasible replacement for one candidate atom.

    ``supports`` are the current Z_t as ordered index sequences (the order
    fixes removal-cost positions).  Additions with nonpositive gain are
    always declined, so the returned gain is never negative and applying
    the replacement preserves feasibility.  Block and average families
    need decomposable gains; exact callback gains raise
    UnsupportedConstraint there because those families couple the
    per-point choices globally.
    """
    if not is_feasible(constraint, supports):
        raise InfeasibleState("current supports violate the constraint")
    if isinstance(constraint, (IndividualSparsity, PartitionMatroid)):
        return _individual_like(constraint, supports, atom, gains)
    if not gains.decomposable:
        raise UnsupportedConstraint(
            "exact gains only support per-point families; use decomposable gains"
        )
    if isinstance(constraint, BlockSparsity):
        return _block(constraint, supports, atom, gains)
    if isinstance(constraint, AverageSparsity):
        return _average(constraint, supports, atom, gains)
    raise TypeError(f"unknown constraint type {type(constraint)!r}")
