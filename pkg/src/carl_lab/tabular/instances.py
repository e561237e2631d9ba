"""Small bundled cMDP instances.

``three_context`` is a reconstruction of a classic three-context toy problem:
the base context rewards action 0 in the start state, one context swaps where
the two actions lead and one swaps which absorbing state pays. Only the
structure is reproduced; the numbers are chosen here.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from .cmdp import FiniteCMDP, parse_cmdp

BUNDLED = ("bandit", "identical", "three_context", "unreachable")


def bandit() -> FiniteCMDP:
    """One state, two actions, horizon 1; the contexts reward opposite actions."""
    T = np.ones((1, 2, 1))
    return FiniteCMDP.build(
        [T, T], [[[1.0, 0.0]], [[0.0, 1.0]]], [[1.0], [1.0]], [0.5, 0.5], gamma=0.9, horizon=1
    )


def identical() -> FiniteCMDP:
    T = np.array([[[0.2, 0.8], [1.0, 0.0]], [[0.5, 0.5], [0.0, 1.0]]])
    R = np.array([[0.0, 0.3], [1.0, -0.5]])
    rho = np.array([1.0, 0.0])
    return FiniteCMDP.build([T, T], [R, R], [rho, rho], [0.5, 0.5], gamma=0.9)


def three_context() -> FiniteCMDP:
    # s0 start, s1 and s2 absorbing
    forward = np.zeros((3, 2, 3))
    forward[0, 0, 1] = forward[0, 1, 2] = 1.0
    forward[1, :, 1] = forward[2, :, 2] = 1.0
    swapped = forward.copy()
    swapped[0] = forward[0, ::-1]
    pays_s1 = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    pays_s2 = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    rho = np.array([1.0, 0.0, 0.0])
    return FiniteCMDP.build(
        [forward, swapped, forward],
        [pays_s1, pays_s1, pays_s2],
        [rho, rho, rho],
        [1 / 3, 1 / 3, 1 / 3],
        gamma=0.9,
    )


def unreachable() -> FiniteCMDP:
    """Contexts differ only in s1, which context 1 can never reach."""
    T = np.zeros((2, 2, 2))
    T[0, :, 0] = T[1, :, 1] = 1.0
    R_a = np.array([[1.0, 0.0], [1.0, 0.0]])
    R_b = np.array([[1.0, 0.0], [0.0, 1.0]])
    return FiniteCMDP.build(
        [T, T], [R_a, R_b], [[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5], gamma=0.9
    )


def load_bundled(name: str) -> FiniteCMDP:
    """Parse one of the bundled ``.cmdp`` files shipped with the package."""
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled instance {name!r}; choose from {BUNDLED}")
    text = resources.files("carl_lab.data").joinpath(f"{name}.cmdp").read_text(encoding="utf-8")
    return parse_cmdp(text)


def bundled_path(name: str):
    return resources.files("carl_lab.data").joinpath(f"{name}.cmdp")
