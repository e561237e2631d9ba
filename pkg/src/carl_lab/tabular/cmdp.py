"""Finite contextual MDPs and their plain-text file format.

File grammar (whitespace separated, ``#`` starts a comment, blank lines ignored)::

    <n_states> <n_actions> <n_contexts> <gamma> <horizon|inf>
    # then, once per context:
    <weight>
    <rho_0> ... <rho_{S-1}>                  # initial distribution
    <R[s,0]> ... <R[s,A-1]>                  # S lines, one per state
    <T[s,a,0]> ... <T[s,a,S-1]>              # S*A lines, state-major

Every probability row must sum to 1 within 1e-9.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ParseError

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ContextMDP:
    transition: np.ndarray  # (S, A, S)
    reward: np.ndarray  # (S, A)
    initial: np.ndarray  # (S,)
    weight: float


@dataclass(frozen=True)
class FiniteCMDP:
    n_states: int
    n_actions: int
    contexts: tuple[ContextMDP, ...]
    gamma: float
    horizon: int | None = None  # None means infinite horizon

    def __post_init__(self) -> None:
        S, A = self.n_states, self.n_actions
        if S < 1 or A < 1:
            raise ValueError("need at least one state and one action")
        if not self.contexts:
            raise ValueError("need at least one context")
        if self.horizon is None:
            if not 0.0 <= self.gamma < 1.0:
                raise ValueError(f"infinite horizon needs gamma in [0, 1), got {self.gamma}")
        else:
            if self.horizon < 1:
                raise ValueError("finite horizon must be >= 1")
            if not 0.0 <= self.gamma <= 1.0:
                raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        for i, c in enumerate(self.contexts):
            if c.transition.shape != (S, A, S):
                raise ValueError(f"context {i}: transition shape {c.transition.shape} != {(S, A, S)}")
            if c.reward.shape != (S, A):
                raise ValueError(f"context {i}: reward shape {c.reward.shape} != {(S, A)}")
            if c.initial.shape != (S,):
                raise ValueError(f"context {i}: initial shape {c.initial.shape} != {(S,)}")
            if np.any(c.transition < 0) or np.any(np.abs(c.transition.sum(-1) - 1) > 1e-12):
                raise ValueError(f"context {i}: transition rows must be distributions")
            if np.any(c.initial < 0) or abs(c.initial.sum() - 1) > 1e-12:
                raise ValueError(f"context {i}: initial distribution must sum to 1")
            if not np.all(np.isfinite(c.reward)):
                raise ValueError(f"context {i}: rewards must be finite")
            if c.weight < 0:
                raise ValueError(f"context {i}: negative weight")
        if abs(sum(c.weight for c in self.contexts) - 1) > 1e-12:
            raise ValueError("context weights must sum to 1")

    @classmethod
    def build(
        cls,
        transitions: Sequence,
        rewards: Sequence,
        initials: Sequence,
        weights: Sequence[float] | None = None,
        gamma: float = 0.9,
        horizon: int | None = None,
    ) -> "FiniteCMDP":
        T = [np.asarray(t, dtype=np.float64) for t in transitions]
        R = [np.asarray(r, dtype=np.float64) for r in rewards]
        rho = [np.asarray(p, dtype=np.float64) for p in initials]
        n = len(T)
        if weights is None:
            weights = [1.0 / n] * n
        contexts = tuple(
            ContextMDP(t, r, p, float(w)) for t, r, p, w in zip(T, R, rho, weights, strict=True)
        )
        S, A = T[0].shape[:2]
        return cls(S, A, contexts, float(gamma), horizon)

    @property
    def n_contexts(self) -> int:
        return len(self.contexts)


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _floats(tokens: list[str], n: int, what: str, lineno: int) -> np.ndarray:
    if len(tokens) != n:
        raise ParseError(f"{what}: expected {n} numbers, got {len(tokens)}", lineno)
    try:
        vals = np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise ParseError(f"{what}: {exc}", lineno) from None
    if not np.all(np.isfinite(vals)):
        raise ParseError(f"{what}: non-finite value", lineno)
    return vals


def _distribution(tokens, n, what, lineno) -> np.ndarray:
    row = _floats(tokens, n, what, lineno)
    if np.any(row < 0):
        raise ParseError(f"{what}: negative probability", lineno)
    if abs(row.sum() - 1.0) > ROW_SUM_TOL:
        raise ParseError(f"{what}: row sums to {row.sum()!r}, not 1", lineno)
    # absorb the sub-tolerance rounding so downstream invariants hold exactly
    return row / row.sum()


def parse_cmdp(text: str) -> FiniteCMDP:
    lines = list(_tokens(text))
    if not lines:
        raise ParseError("empty cMDP file")
    it = iter(lines)
    lineno, head = next(it)
    if len(head) != 5:
        raise ParseError("header needs: n_states n_actions n_contexts gamma horizon", lineno)
    try:
        S, A, C = int(head[0]), int(head[1]), int(head[2])
        gamma = float(head[3])
        horizon = None if head[4].lower() in ("inf", "infinite") else int(head[4])
    except ValueError as exc:
        raise ParseError(f"header: {exc}", lineno) from None
    if S < 1 or A < 1 or C < 1:
        raise ParseError("header counts must be positive", lineno)

    def take(what: str):
        try:
            return next(it)
        except StopIteration:
            raise ParseError(f"unexpected end of file while reading {what}") from None

    contexts = []
    for c in range(C):
        lineno, toks = take(f"context {c} weight")
        weight = float(_floats(toks, 1, f"context {c} weight", lineno)[0])
        if weight < 0:
            raise ParseError(f"context {c}: negative weight", lineno)
        lineno, toks = take(f"context {c} initial distribution")
        rho = _distribution(toks, S, f"context {c} initial distribution", lineno)
        R = np.empty((S, A))
        for s in range(S):
            lineno, toks = take(f"context {c} reward row {s}")
            R[s] = _floats(toks, A, f"context {c} reward row {s}", lineno)
        T = np.empty((S, A, S))
        for s in range(S):
            for a in range(A):
                lineno, toks = take(f"context {c} transition ({s}, {a})")
                T[s, a] = _distribution(toks, S, f"context {c} transition ({s}, {a})", lineno)
        contexts.append((T, R, rho, weight))
    extra = next(it, None)
    if extra is not None:
        raise ParseError("trailing content after last context", extra[0])
    total = sum(w for *_, w in contexts)
    if abs(total - 1.0) > ROW_SUM_TOL:
        raise ParseError(f"context weights sum to {total!r}, not 1")
    try:
        return FiniteCMDP(
            S,
            A,
            tuple(ContextMDP(T, R, rho, w / total) for T, R, rho, w in contexts),
            gamma,
            horizon,
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def load_cmdp(path: str | Path) -> FiniteCMDP:
    return parse_cmdp(Path(path).read_text(encoding="utf-8"))


def format_cmdp(cmdp: FiniteCMDP) -> str:
    out = io.StringIO()
    horizon = "inf" if cmdp.horizon is None else str(cmdp.horizon)
    out.write(f"{cmdp.n_states} {cmdp.n_actions} {cmdp.n_contexts} {cmdp.gamma!r} {horizon}\n")
    for i, c in enumerate(cmdp.contexts):
        out.write(f"# context {i}\n{c.weight!r}\n")
        out.write(" ".join(repr(float(v)) for v in c.initial) + "\n")
        for row in c.reward:
            out.write(" ".join(repr(float(v)) for v in row) + "\n")
        for s in range(cmdp.n_states):
            for a in range(cmdp.n_actions):
                out.write(" ".join(repr(float(v)) for v in c.transition[s, a]) + "\n")
    return out.getvalue()


def random_cmdp(
    rng: np.random.Generator,
    n_states: int,
    n_actions: int,
    n_contexts: int = 2,
    gamma: float = 0.9,
    sparsity: float = 0.5,
) -> FiniteCMDP:
    """Random instance with sparse transitions, so some states can be unreachable."""
    transitions, rewards, initials = [], [], []
    for _ in range(n_contexts):
        mask = rng.random((n_states, n_actions, n_states)) >= sparsity
        # each row keeps at least one successor
        forced = rng.integers(n_states, size=(n_states, n_actions))
        mask[np.arange(n_states)[:, None], np.arange(n_actions)[None, :], forced] = True
        T = rng.random((n_states, n_actions, n_states)) * mask
        T /= T.sum(-1, keepdims=True)
        rho = np.zeros(n_states)
        support = rng.random(n_states) < 0.4
        support[rng.integers(n_states)] = True
        rho[support] = rng.random(support.sum()) + 0.1
        rho /= rho.sum()
        transitions.append(T)
        rewards.append(rng.uniform(-1.0, 1.0, (n_states, n_actions)))
        initials.append(rho)
    w = rng.random(n_contexts) + 0.2
    return FiniteCMDP.build(transitions, rewards, initials, list(w / w.sum()), gamma)


__all__ = [
    "ContextMDP",
    "FiniteCMDP",
    "format_cmdp",
    "load_cmdp",
    "parse_cmdp",
    "random_cmdp",
]
