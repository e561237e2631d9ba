"""Optimality Gap between context-conditioned and context-free policies.

The gap is the expected optimal per-context return minus the best expected
return any single context-free policy achieves under the context weights.
The context-free maximum is taken over deterministic stationary policies by
exhaustive enumeration, so on instances where a stochastic context-free policy
would do better the reported gap is an upper bound on the true one (the
context-free return is a lower bound on the maximum over all policies).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..errors import TooLarge, WrongContextCount
from .cmdp import ContextMDP, FiniteCMDP
from .solve import (
    TIE_TOL,
    PolicyKind,
    TabularPolicy,
    optimal_action_sets,
    q_from_v,
    value_iteration,
)

ENUMERATION_CAP = 10**6
_CHUNK = 4096
_RETURN_TIE = 1e-12


@dataclass(frozen=True)
class GapReport:
    optimal_conditioned_return: float
    best_context_free_return: float
    gap: float
    best_context_free_policy: TabularPolicy
    conflict_states: list[int] = field(default_factory=list)
    conditioned_policy: TabularPolicy | None = None

    def format(self) -> str:
        actions = " ".join(f"s{s}->a{a}" for s, a in enumerate(self.best_context_free_policy.actions))
        conflicts = ", ".join(f"s{s}" for s in self.conflict_states) or "none"
        return "\n".join(
            [
                f"conditioned optimum   : {self.optimal_conditioned_return:.12g}",
                f"context-free optimum  : {self.best_context_free_return:.12g}",
                f"optimality gap        : {self.gap:.12g}",
                f"best context-free pi  : {actions}",
                f"conflict states       : {conflicts}",
            ]
        )


def conditioned_optimum(cmdp: FiniteCMDP, tol: float = 1e-10) -> float:
    total = 0.0
    for i, c in enumerate(cmdp.contexts):
        V, _, _ = value_iteration(cmdp, i, tol)
        total += c.weight * float(c.initial @ V)
    return total


def _policy_block(n_states: int, n_actions: int, start: int, stop: int) -> np.ndarray:
    """Policies ``start..stop-1`` in lexicographic order as an (B, S) array."""
    idx = np.arange(start, stop)
    return np.stack(np.unravel_index(idx, (n_actions,) * n_states), axis=1)


def _block_returns(cmdp: FiniteCMDP, policies: np.ndarray) -> np.ndarray:
    S = cmdp.n_states
    rows = np.arange(S)
    total = np.zeros(len(policies))
    for c in cmdp.contexts:
        P = c.transition[rows, policies]  # (B, S, S)
        r = c.reward[rows, policies]  # (B, S)
        if cmdp.horizon is None:
            V = np.linalg.solve(np.eye(S) - cmdp.gamma * P, r[..., None])[..., 0]
        else:
            V = np.zeros_like(r)
            for _ in range(cmdp.horizon):
                V = r + cmdp.gamma * np.einsum("bij,bj->bi", P, V)
        total += c.weight * (V @ c.initial)
    return total


def context_free_return(cmdp: FiniteCMDP, actions) -> float:
    """Weighted expected return of one deterministic context-free policy."""
    pol = np.asarray(actions, dtype=np.int64).reshape(1, cmdp.n_states)
    return float(_block_returns(cmdp, pol)[0])


def best_context_free(
    cmdp: FiniteCMDP, enumeration_cap: int = ENUMERATION_CAP
) -> tuple[float, TabularPolicy]:
    """Exhaustive search over deterministic stationary state-indexed policies.

    Ties are broken towards the lexicographically smallest action tuple.
    """
    count = cmdp.n_actions**cmdp.n_states
    if count > enumeration_cap:
        raise TooLarge(count, enumeration_cap)
    values = np.empty(count)
    for start in range(0, count, _CHUNK):
        stop = min(start + _CHUNK, count)
        values[start:stop] = _block_returns(
            cmdp, _policy_block(cmdp.n_states, cmdp.n_actions, start, stop)
        )
    best = values.max()
    winner = int(np.argmax(values >= best - _RETURN_TIE))
    actions = _policy_block(cmdp.n_states, cmdp.n_actions, winner, winner + 1)[0]
    return float(values[winner]), TabularPolicy(PolicyKind.CONTEXT_FREE, actions)


def _stage_q(cmdp: FiniteCMDP, index: int, tol: float) -> list[np.ndarray]:
    """Optimal Q-values per decision stage (a single stage for infinite horizon)."""
    mdp = cmdp.contexts[index]
    if cmdp.horizon is None:
        _, Q, _ = value_iteration(cmdp, index, tol)
        return [Q]
    V = np.zeros(cmdp.n_states)
    stages = []
    for _ in range(cmdp.horizon):
        Q = q_from_v(mdp, V, cmdp.gamma)
        stages.append(Q)
        V = Q.max(axis=1)
    return stages[::-1]


def reachable(mdp: ContextMDP, allowed: list[np.ndarray], stationary: bool) -> np.ndarray:
    """States reachable from the support of the initial distribution.

    ``allowed`` holds one (S, A) action mask per stage. Returns a boolean array
    of shape (stages, S); for a stationary problem the single row is the
    fixpoint of the successor relation.
    """
    S = mdp.initial.shape[0]
    support = mdp.transition > 0  # (S, A, S)
    if stationary:
        seen = mdp.initial > 0
        frontier = seen.copy()
        while frontier.any():
            succ = (support[frontier] & allowed[0][frontier][..., None]).any(axis=(0, 1))
            frontier = succ & ~seen
            seen |= succ
        return seen[None, :]
    out = np.zeros((len(allowed), S), dtype=bool)
    out[0] = mdp.initial > 0
    for t in range(1, len(allowed)):
        prev = out[t - 1]
        out[t] = (support[prev] & allowed[t - 1][prev][..., None]).any(axis=(0, 1))
    return out


def find_conflict_states(
    cmdp: FiniteCMDP, tol: float = TIE_TOL, reachability: str = "optimal"
) -> list[int]:
    """States reachable in both contexts whose optimal-action sets are disjoint.

    ``reachability="optimal"`` (default) follows only optimal actions from the
    initial support, i.e. the states an optimal policy can visit. With this
    notion an empty result means a common optimal policy exists, and with
    unique optimal actions the converse holds too. ``reachability="any"``
    allows every action; its empty result still implies a common optimum but
    it can report conflicts on states no optimal policy ever visits.
    """
    if cmdp.n_contexts != 2:
        raise WrongContextCount(f"conflict detection needs exactly 2 contexts, got {cmdp.n_contexts}")
    if reachability not in ("optimal", "any"):
        raise ValueError(f"unknown reachability {reachability!r}")
    stationary = cmdp.horizon is None
    masks, reach = [], []
    for i, c in enumerate(cmdp.contexts):
        stages = _stage_q(cmdp, i, min(tol, 1e-10))
        sets = [optimal_action_sets(Q, tol) for Q in stages]
        allowed = sets if reachability == "optimal" else [np.ones_like(m) for m in sets]
        masks.append(sets)
        reach.append(reachable(c, allowed, stationary))
    conflict = np.zeros(cmdp.n_states, dtype=bool)
    for t in range(len(masks[0])):
        both = reach[0][t] & reach[1][t]
        disjoint = ~(masks[0][t] & masks[1][t]).any(axis=1)
        conflict |= both & disjoint
    return [int(s) for s in np.flatnonzero(conflict)]


def _pairwise_conflicts(cmdp: FiniteCMDP) -> list[int]:
    if cmdp.n_contexts < 2:
        return []
    found: set[int] = set()
    for i, j in itertools.combinations(range(cmdp.n_contexts), 2):
        pair = FiniteCMDP(
            cmdp.n_states,
            cmdp.n_actions,
            tuple(
                ContextMDP(c.transition, c.reward, c.initial, 0.5)
                for c in (cmdp.contexts[i], cmdp.contexts[j])
            ),
            cmdp.gamma,
            cmdp.horizon,
        )
        found.update(find_conflict_states(pair))
    return sorted(found)


def optimality_gap(
    cmdp: FiniteCMDP, enumeration_cap: int = ENUMERATION_CAP, tol: float = 1e-10
) -> GapReport:
    """Compute the Optimality Gap together with its witnesses.

    Conflict states are exact for two contexts; with more contexts the union
    of all pairwise conflicts is reported.
    """
    conditioned = 0.0
    per_context = []
    for i, c in enumerate(cmdp.contexts):
        V, _, pi = value_iteration(cmdp, i, tol)
        conditioned += c.weight * float(c.initial @ V)
        per_context.append(pi.actions)
    free_return, free_policy = best_context_free(cmdp, enumeration_cap)
    gap = conditioned - free_return
    if cmdp.n_contexts == 2:
        conflicts = find_conflict_states(cmdp)
    else:
        conflicts = _pairwise_conflicts(cmdp)
    return GapReport(
        optimal_conditioned_return=conditioned,
        best_context_free_return=free_return,
        gap=gap,
        best_context_free_policy=free_policy,
        conflict_states=conflicts,
        conditioned_policy=TabularPolicy(PolicyKind.CONTEXT_CONDITIONED, np.array(per_context)),
    )
