"""Exact solvers and Optimality Gap certification for finite cMDPs."""

from .cmdp import ContextMDP, FiniteCMDP, format_cmdp, load_cmdp, parse_cmdp, random_cmdp
from .gap import (
    GapReport,
    best_context_free,
    conditioned_optimum,
    context_free_return,
    find_conflict_states,
    optimality_gap,
)
from .instances import BUNDLED, bandit, identical, load_bundled, three_context, unreachable
from .solve import PolicyKind, TabularPolicy, bellman_residual, evaluate_policy, value_iteration

__all__ = [
    "BUNDLED",
    "ContextMDP",
    "FiniteCMDP",
    "GapReport",
    "PolicyKind",
    "TabularPolicy",
    "bandit",
    "bellman_residual",
    "best_context_free",
    "conditioned_optimum",
    "context_free_return",
    "evaluate_policy",
    "find_conflict_states",
    "format_cmdp",
    "identical",
    "load_bundled",
    "load_cmdp",
    "optimality_gap",
    "parse_cmdp",
    "random_cmdp",
    "three_context",
    "unreachable",
    "value_iteration",
]
