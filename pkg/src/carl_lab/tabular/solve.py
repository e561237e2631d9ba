"""Per-context dynamic programming: value iteration and exact policy evaluation."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..errors import NoConvergence
from .cmdp import ContextMDP, FiniteCMDP

MAX_ITERATIONS = 10**6
TIE_TOL = 1e-9


class PolicyKind(str, enum.Enum):
    CONTEXT_FREE = "context_free"
    CONTEXT_CONDITIONED = "context_conditioned"


@dataclass(frozen=True)
class TabularPolicy:
    """Deterministic tabular policy.

    ``actions`` has shape ``(S,)`` for a context-free policy and ``(C, S)``
    for a context-conditioned one.
    """

    kind: PolicyKind
    actions: np.ndarray

    def __call__(self, state: int, context: int | None = None) -> int:
        if self.kind is PolicyKind.CONTEXT_FREE:
            return int(self.actions[state])
        if context is None:
            raise ValueError("a context-conditioned policy needs the context")
        return int(self.actions[context, state])

    def as_tuple(self) -> tuple:
        return tuple(self.actions.reshape(-1).tolist())


def greedy(Q: np.ndarray, tol: float = TIE_TOL) -> np.ndarray:
    """Lowest-index action among those within ``tol`` of the row maximum."""
    best = Q.max(axis=-1, keepdims=True)
    return np.argmax(Q >= best - tol, axis=-1)


def optimal_action_sets(Q: np.ndarray, tol: float = TIE_TOL) -> np.ndarray:
    """Boolean mask (..., A) of actions within ``tol`` of the best."""
    return Q >= Q.max(axis=-1, keepdims=True) - tol


def q_from_v(mdp: ContextMDP, V: np.ndarray, gamma: float) -> np.ndarray:
    return mdp.reward + gamma * mdp.transition @ V


def bellman_residual(mdp: ContextMDP, V: np.ndarray, gamma: float) -> float:
    return float(np.max(np.abs(q_from_v(mdp, V, gamma).max(axis=1) - V)))


def evaluate_policy(
    mdp: ContextMDP, actions: np.ndarray, gamma: float, horizon: int | None = None
) -> np.ndarray:
    """Exact value of a deterministic stationary policy.

    Infinite horizon solves ``(I - gamma P_pi) V = r_pi``; a finite horizon
    uses backward induction over ``horizon`` steps.
    """
    S = mdp.reward.shape[0]
    idx = np.arange(S)
    P = mdp.transition[idx, actions]
    r = mdp.reward[idx, actions]
    if horizon is None:
        return np.linalg.solve(np.eye(S) - gamma * P, r)
    V = np.zeros(S)
    for _ in range(horizon):
        V = r + gamma * P @ V
    return V


def value_iteration(
    cmdp: FiniteCMDP, context_index: int, tol: float = 1e-10
) -> tuple[np.ndarray, np.ndarray, TabularPolicy]:
    """Optimal values, Q-values and greedy policy for one context.

    For an infinite horizon the Bellman operator is iterated until the
    sup-norm residual is at most ``tol``; the greedy policy is then polished by
    policy iteration so the returned values are exact up to a linear solve.
    A finite horizon uses backward induction and returns the stage-0 values.
    """
    mdp = cmdp.contexts[context_index]
    gamma = cmdp.gamma
    S, A = cmdp.n_states, cmdp.n_actions

    if cmdp.horizon is not None:
        V = np.zeros(S)
        Q = np.zeros((S, A))
        for _ in range(cmdp.horizon):
            Q = q_from_v(mdp, V, gamma)
            V = Q.max(axis=1)
        return V, Q, TabularPolicy(PolicyKind.CONTEXT_FREE, greedy(Q))

    V = np.zeros(S)
    for _ in range(MAX_ITERATIONS):
        V_new = q_from_v(mdp, V, gamma).max(axis=1)
        delta = np.max(np.abs(V_new - V))
        V = V_new
        if delta <= tol:
            break
    else:
        raise NoConvergence(f"value iteration did not reach tol={tol} in {MAX_ITERATIONS} sweeps")

    policy = greedy(q_from_v(mdp, V, gamma))
    for _ in range(S * A + 1):
        V_pi = evaluate_policy(mdp, policy, gamma)
        Q = q_from_v(mdp, V_pi, gamma)
        improved = greedy(Q)
        # only switch where the improvement is real, otherwise keep the tie-broken choice
        idx = np.arange(S)
        gain = Q[idx, improved] - Q[idx, policy]
        if np.all(gain <= TIE_TOL):
            V = V_pi
            break
        policy = np.where(gain > TIE_TOL, improved, policy)
    Q = q_from_v(mdp, V, gamma)
    policy = greedy(Q)
    if bellman_residual(mdp, V, gamma) > tol:
        raise NoConvergence("Bellman residual above tolerance after policy polishing")
    return V, Q, TabularPolicy(PolicyKind.CONTEXT_FREE, policy)
