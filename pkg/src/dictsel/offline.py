"""Offline dictionary selectors.

Three selectors over a common selection state:

* ``modular_greedy`` ranks atoms by a per-atom surrogate that ignores
  atom interactions (sum of the top-s singleton utilities per point).
* ``replacement_greedy`` adds one atom per step via the best feasible
  replacement measured by exact objective differences; per-point
  families only.
* ``replacement_omp`` replaces the exact differences with gradient-based
  proxy gains weighted by a smoothness parameter, which makes the
  per-step search a linear-objective problem and extends to block and
  average sparsity.  The ``decay`` variant divides the smoothness
  parameter by sqrt(i) at iteration i so that late iterations keep
  making progress.

All selectors return a :class:`SelectionState` whose supports are
feasible after every iteration and whose objective never decreases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constraints import (
    AverageSparsity,
    ExactGains,
    ExchangeInstance,
    IndividualSparsity,
    PartitionMatroid,
    Replacement,
    RompGains,
    best_replacement,
    is_feasible,
    solve_exchange,
)
from .errors import RankDeficient, UnsupportedConstraint
from .linalg import SupportFactorization, atom_matrix, empty_factorization, factor_insert, factor_remove

_DENOM_TOL = 1e-12


@dataclass
class SelectorConfig:
    """Replacement-OMP options: dictionary size, smoothness, decay schedule.

    ``smoothness`` defaults to 1 + coherence, the exact largest squared
    singular value over atom pairs.  With ``decay`` the effective
    parameter at iteration i is ``smoothness / sqrt(i)``.
    """

    k: int
    smoothness: float | None = None
    decay: bool = False


@dataclass
class ReplacementRecord:
    """Per-point bookkeeping of one applied replacement (for diagnostics)."""

    iteration: int
    t: int
    f_before: float
    f_after: float
    grad_sq_added: float
    coeff_sq_removed: float


@dataclass
class SelectionState:
    """Selected atoms, per-point supports, and their factorization state."""

    atoms: list[int]
    supports: list[list[int]]
    factors: list[SupportFactorization]
    coeffs: list[np.ndarray]
    residuals: np.ndarray
    gradients: np.ndarray
    f_values: np.ndarray
    objective_history: list[float] = field(default_factory=list)
    trace: list[ReplacementRecord] | None = None

    @property
    def objective(self) -> float:
        return float(self.f_values.sum())


def _data_matrix(data) -> np.ndarray:
    return np.asarray(getattr(data, "matrix", data), dtype=float)


def _initial_state(a: np.ndarray, y: np.ndarray, trace: bool) -> SelectionState:
    t_count = y.shape[1]
    return SelectionState(
        atoms=[],
        supports=[[] for _ in range(t_count)],
        factors=[empty_factorization(a.shape[0]) for _ in range(t_count)],
        coeffs=[np.zeros(0) for _ in range(t_count)],
        residuals=y.copy(),
        gradients=a.T @ y,
        f_values=np.zeros(t_count),
        trace=[] if trace else None,
    )


def _refresh_point(state: SelectionState, a: np.ndarray, y: np.ndarray, t: int) -> None:
    fact = state.factors[t]
    state.coeffs[t] = fact.solve(y[:, t])
    state.residuals[:, t] = fact.residual(y[:, t])
    state.gradients[:, t] = a.T @ state.residuals[:, t]
    ysq = float(y[:, t] @ y[:, t])
    rsq = float(state.residuals[:, t] @ state.residuals[:, t])
    state.f_values[t] = 0.5 * (ysq - rsq)


def _apply_replacement(state, rep, a, y, iteration) -> None:
    for t, removed, add in rep.per_t:
        f_before = state.f_values[t]
        grad_sq = float(state.gradients[rep.added_atom, t] ** 2) if add else 0.0
        coeff_sq = 0.0
        fact = state.factors[t]
        support = list(state.supports[t])
        if removed is not None:
            pos = support.index(removed)
            coeff_sq = float(state.coeffs[t][pos] ** 2)
            fact = factor_remove(fact, pos)
            support.pop(pos)
        if add:
            try:
                fact = factor_insert(fact, a, rep.added_atom)
                support.append(rep.added_atom)
            except RankDeficient:
                # The candidate is dependent on the remaining support; the
                # removal alone is still feasible, so keep it and skip the add.
                grad_sq = 0.0
        state.factors[t] = fact
        state.supports[t] = support
        _refresh_point(state, a, y, t)
        if state.trace is not None:
            state.trace.append(
                ReplacementRecord(
                    iteration, t, f_before, float(state.f_values[t]), grad_sq, coeff_sq
                )
            )


def _zeroed_grad_sq(state: SelectionState) -> np.ndarray:
    """Squared gradient entries with the current supports zeroed exactly.

    Entries on a solved support vanish mathematically; zeroing removes the
    floating-point dust so no-op additions never carry positive gain.
    """
    g2 = state.gradients**2
    for t, support in enumerate(state.supports):
        if support:
            g2[support, t] = 0.0
    return g2


def _romp_gains_for_atom(scaled_g2, scaled_costs, atom):
    return RompGains(scaled_g2[atom], scaled_costs)


def _romp_gain_table(constraint, state, scaled_g2, scaled_costs, cheapest):
    n, t_count = scaled_g2.shape
    if isinstance(constraint, IndividualSparsity):
        sizes = np.array([len(z) for z in state.supports])
        penalty = np.where(sizes < constraint.s, 0.0, cheapest)
        return np.maximum(scaled_g2 - penalty[None, :], 0.0).sum(axis=1)
    if isinstance(constraint, AverageSparsity):
        sizes = [len(z) for z in state.supports]
        slack = constraint.s_prime - sum(sizes)
        tight = frozenset(
            t for t in range(t_count) if sizes[t] == constraint.s_t[t]
        )
        table = np.empty(n)
        for atom in range(n):
            _, _, value = solve_exchange(
                ExchangeInstance(scaled_g2[atom], cheapest, tight, slack)
            )
            table[atom] = value
        return table
    # Partition matroids and block sparsity: per-atom scalar search.
    table = np.empty(n)
    for atom in range(n):
        rep = best_replacement(
            constraint, state.supports, atom, _romp_gains_for_atom(scaled_g2, scaled_costs, atom)
        )
        table[atom] = rep.gain
    return table


def replacement_omp(data, ground_set, constraint, config: SelectorConfig, *, trace=False) -> SelectionState:
    """Proxy-gain selector: k steps of the best feasible replacement.

    Per step every atom's gain is assembled from cached gradients and
    coefficients (additions weighted by 1/M, removals by M, per-point
    contributions clipped at zero) and the best replacement is applied.
    Ties go to the lowest atom index.  When every gain is zero before the
    dictionary is full, the unselected atom with the largest squared
    gradient mass is added without touching any support, so the
    dictionary still reaches k atoms.
    """
    a = atom_matrix(ground_set)
    y = _data_matrix(data)
    n = a.shape[1]
    if not 1 <= config.k <= n:
        raise ValueError("need 1 <= k <= n")
    if config.smoothness is None:
        from .linalg import coherence

        base_m = 1.0 + coherence(ground_set)
    else:
        base_m = float(config.smoothness)
    if base_m <= 0:
        raise ValueError("smoothness must be positive")
    state = _initial_state(a, y, trace)
    for i in range(1, config.k + 1):
        m_i = base_m / math.sqrt(i) if config.decay else base_m
        g2 = _zeroed_grad_sq(state)
        scaled_g2 = g2 / m_i
        scaled_costs = [m_i * w**2 for w in state.coeffs]
        cheapest = np.array(
            [c.min() if c.size else math.inf for c in scaled_costs]
        )
        table = _romp_gain_table(constraint, state, scaled_g2, scaled_costs, cheapest)
        winner = int(np.argmax(table))
        if table[winner] > 0.0:
            rep = best_replacement(
                constraint,
                state.supports,
                winner,
                _romp_gains_for_atom(scaled_g2, scaled_costs, winner),
            )
            _apply_replacement(state, rep, a, y, i)
            if winner not in state.atoms:
                state.atoms.append(winner)
        else:
            unselected = [j for j in range(n) if j not in state.atoms]
            if not unselected:
                state.objective_history.append(state.objective)
                break
            mass = g2.sum(axis=1)
            fallback = min(unselected, key=lambda j: (-mass[j], j))
            state.atoms.append(fallback)
        state.objective_history.append(state.objective)
        assert is_feasible(constraint, state.supports)
    return state


def _rg_option_tables(state, a, y, s):
    """Exact per-(atom, point) best gains and option codes for per-point caps.

    Option code 0 means leave the support alone, 1 means plain addition,
    2 + j means swap against position j.  Gains use rank-one projection
    updates: adding atom b to a support with orthonormal basis Q changes
    the objective by <b, r>^2 / (2 * (1 - ||Q^T b||^2)).
    """
    n, t_count = a.shape[1], y.shape[1]
    best = np.zeros((n, t_count))
    code = np.zeros((n, t_count), dtype=np.int32)
    for t in range(t_count):
        support = state.supports[t]
        fact = state.factors[t]
        r = state.residuals[:, t]
        if len(support) < s:
            num = (a.T @ r) ** 2
            den = 1.0 - np.sum((fact.q.T @ a) ** 2, axis=0) if fact.m else np.ones(n)
            gain = np.where(den > _DENOM_TOL, num / (2.0 * np.clip(den, _DENOM_TOL, None)), 0.0)
            if support:
                gain[support] = 0.0
            sel = gain > 0.0
            best[sel, t] = gain[sel]
            code[sel, t] = 1
        else:
            rsq = float(r @ r)
            for pos in range(len(support)):
                sub = factor_remove(fact, pos)
                r_sub = sub.residual(y[:, t])
                base = 0.5 * (rsq - float(r_sub @ r_sub))  # f(Z - j) - f(Z), <= 0
                num = (a.T @ r_sub) ** 2
                den = 1.0 - np.sum((sub.q.T @ a) ** 2, axis=0) if sub.m else np.ones(n)
                regain = np.where(den > _DENOM_TOL, num / (2.0 * np.clip(den, _DENOM_TOL, None)), 0.0)
                gain = base + regain
                # Atoms already in the support gain nothing here; zero them
                # exactly so rounding noise cannot mark them as additions.
                gain[support] = 0.0
                sel = gain > best[:, t]
                best[sel, t] = gain[sel]
                code[sel, t] = 2 + pos
    return best, code


def replacement_greedy(data, ground_set, constraint, k: int, *, trace=False) -> SelectionState:
    """Exact-gain selector: k steps of the best feasible replacement.

    Gains are true objective differences, so every candidate replacement
    costs a least-squares update; use :func:`replacement_omp` when that
    is too slow.  Only per-point families are supported: block and
    average sparsity couple the points, and exact gains would force an
    exponential search over joint replacements.
    """
    if not isinstance(constraint, (IndividualSparsity, PartitionMatroid)):
        raise UnsupportedConstraint(
            "exact replacement search supports per-point families only"
        )
    a = atom_matrix(ground_set)
    y = _data_matrix(data)
    n = a.shape[1]
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    state = _initial_state(a, y, trace)
    uniform = isinstance(constraint, IndividualSparsity)
    for i in range(1, k + 1):
        if uniform:
            best, code = _rg_option_tables(state, a, y, constraint.s)
            table = best.sum(axis=1)
            winner = int(np.argmax(table))
            if table[winner] <= 0.0:
                state.objective_history.append(state.objective)
                break
            per_t = []
            for t in range(y.shape[1]):
                c = int(code[winner, t])
                if c == 1:
                    per_t.append((t, None, True))
                elif c >= 2:
                    per_t.append((t, state.supports[t][c - 2], True))
            rep = Replacement(winner, per_t, float(table[winner]))
        else:
            rep = None
            for atom in range(n):
                cand = best_replacement(
                    constraint, state.supports, atom, _exact_gains(state, a, y, atom)
                )
                if rep is None or cand.gain > rep.gain:
                    rep = cand
            if rep.gain <= 0.0:
                state.objective_history.append(state.objective)
                break
        _apply_replacement(state, rep, a, y, i)
        if rep.added_atom not in state.atoms:
            state.atoms.append(rep.added_atom)
        state.objective_history.append(state.objective)
        assert is_feasible(constraint, state.supports)
    return state


def _exact_gains(state, a, y, atom) -> ExactGains:
    def add(t):
        try:
            fact = factor_insert(state.factors[t], a, atom)
        except RankDeficient:
            return 0.0
        r_new = fact.residual(y[:, t])
        r_old = state.residuals[:, t]
        return 0.5 * (float(r_old @ r_old) - float(r_new @ r_new))

    def swap(t, pos):
        sub = factor_remove(state.factors[t], pos)
        try:
            fact = factor_insert(sub, a, atom)
        except RankDeficient:
            fact = sub
        r_new = fact.residual(y[:, t])
        r_old = state.residuals[:, t]
        return 0.5 * (float(r_old @ r_old) - float(r_new @ r_new))

    return ExactGains(add, swap)


def modular_greedy(data, ground_set, k: int, s: int) -> SelectionState:
    """Greedy selection on the modular surrogate (atom interactions ignored).

    Each atom's singleton utility for point t is 0.5 * <a, y_t>^2; the
    surrogate value of a dictionary is, per point, the sum of its top-s
    singleton utilities.  Greedy maximization over that surrogate, with
    final supports equal to each point's top-s selected atoms.
    """
    a = atom_matrix(ground_set)
    y = _data_matrix(data)
    n, t_count = a.shape[1], y.shape[1]
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if s < 0:
        raise ValueError("s must be nonnegative")
    singles = 0.5 * (a.T @ y) ** 2
    selected: list[int] = []
    for _ in range(k):
        if s == 0:
            marginal = np.zeros(n)
        elif len(selected) < s:
            marginal = singles.sum(axis=1).copy()
        else:
            chosen = singles[selected, :]
            threshold = np.partition(chosen, -s, axis=0)[-s]
            marginal = np.maximum(singles - threshold[None, :], 0.0).sum(axis=1)
        if selected:
            marginal[selected] = -np.inf
        selected.append(int(np.argmax(marginal)))
    state = _initial_state(a, y, trace=False)
    state.atoms = selected
    take = min(s, len(selected))
    for t in range(t_count):
        ranked = sorted(selected, key=lambda j: (-singles[j, t], j))
        for atom in ranked[:take]:
            try:
                state.factors[t] = factor_insert(state.factors[t], a, atom)
                state.supports[t].append(atom)
            except RankDeficient:
                continue
        _refresh_point(state, a, y, t)
    state.objective_history.append(state.objective)
    return state
