"""Contextual reinforcement-learning laboratory.

Subpackages: ``envs`` (contextual classic control), ``tabular`` (finite cMDPs
and the Optimality Gap), ``agents`` (DQN and TD3 on numpy networks) and
``runner`` (experiments and the ``carl-lab`` command line).
"""

__version__ = "0.1.0"
