"""Independent reference implementations used as test oracles.

These are written from the defining equations, deliberately without sharing
code with the package, and are kept naive (plain loops, explicit sets).
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def pendulum_literal(theta, theta_dot, u, dt, g, l, m, max_speed):
    """Literal transcription of the pendulum update.

    thdot_{k+1} = thdot_k + (-(3g/(2l)) sin(th_k + pi) + (3/(m l^2)) u_k) dt
    th_{k+1}    = th_k + thdot_{k+1} dt
    followed by the speed clip.
    """
    u = min(max(u, -2.0), 2.0)
    new_thdot = theta_dot + (-(3 * g / (2 * l)) * math.sin(theta + math.pi) + (3 / (m * l**2)) * u) * dt
    new_th = theta + new_thdot * dt
    if new_thdot > max_speed:
        new_thdot = max_speed
    if new_thdot < -max_speed:
        new_thdot = -max_speed
    return new_th, new_thdot


def pendulum_cost(theta, theta_dot, u):
    u = min(max(u, -2.0), 2.0)
    wrapped = math.atan2(math.sin(theta), math.cos(theta))
    if wrapped == math.pi:
        wrapped = -math.pi
    return -(wrapped**2 + 0.1 * theta_dot**2 + 0.001 * u**2)


# ---------------------------------------------------------------- tabular


def naive_policy_value(T, R, gamma, actions, horizon=None, sweeps=20000):
    """Value of a deterministic policy by repeated Bellman backups."""
    S = len(actions)
    V = [0.0] * S
    n = horizon if horizon is not None else sweeps
    for _ in range(n):
        V = [
            R[s][actions[s]] + gamma * sum(T[s][actions[s]][t] * V[t] for t in range(S))
            for s in range(S)
        ]
    return V


def naive_optimal_value(T, R, gamma, horizon=None, sweeps=20000):
    S, A = len(R), len(R[0])
    V = [0.0] * S
    n = horizon if horizon is not None else sweeps
    for _ in range(n):
        V = [
            max(R[s][a] + gamma * sum(T[s][a][t] * V[t] for t in range(S)) for a in range(A))
            for s in range(S)
        ]
    return V


def enumeration_gap(cmdp):
    """(conditioned optimum, best context-free return, gap) by brute force."""
    S, A = cmdp.n_states, cmdp.n_actions
    exact = cmdp.horizon is None

    def value(c, actions):
        if exact:
            P = np.array([c.transition[s, actions[s]] for s in range(S)])
            r = np.array([c.reward[s, actions[s]] for s in range(S)])
            return np.linalg.solve(np.eye(S) - cmdp.gamma * P, r)
        return np.array(naive_policy_value(c.transition, c.reward, cmdp.gamma, actions, cmdp.horizon))

    returns = {}
    for actions in itertools.product(range(A), repeat=S):
        returns[actions] = [float(c.initial @ value(c, actions)) for c in cmdp.contexts]
    conditioned = sum(
        c.weight * max(r[i] for r in returns.values()) for i, c in enumerate(cmdp.contexts)
    )
    free = max(sum(c.weight * r[i] for i, c in enumerate(cmdp.contexts)) for r in returns.values())
    return conditioned, free, conditioned - free


# ---------------------------------------------------------------- regions


def _rect(x0, x1, y0, y1):
    return (x0, x1, y0, y1)


def _in_rect(r, x, y):
    return r[0] <= x <= r[1] and r[2] <= y <= r[3]


def region_oracle(mode, train_x, train_y, pivots, band_widths, x, y):
    """Region label from explicit set definitions.

    The train region is a union of closed rectangles (segments are degenerate
    rectangles); the hull is the train box.
    """
    (xlo, xhi), (ylo, yhi) = train_x, train_y
    px, py = pivots
    if mode == "A":
        pieces = [_rect(xlo, xhi, ylo, yhi)]
    elif mode == "B":
        wx, wy = band_widths
        pieces = [_rect(xlo, xhi, py, py + wy), _rect(px, px + wx, ylo, yhi)]
    else:
        pieces = [_rect(xlo, xhi, py, py), _rect(px, px, ylo, yhi)]
    hull = _rect(xlo, xhi, ylo, yhi)
    if any(_in_rect(p, x, y) for p in pieces):
        return "interpolation"
    if _in_rect(hull, x, y):
        return "combinatorial_interpolation"
    out_x = x < xlo or x > xhi
    out_y = y < ylo or y > yhi
    if out_x and out_y:
        return "extrapolation_both"
    return "extrapolation_x" if out_x else "extrapolation_y"
