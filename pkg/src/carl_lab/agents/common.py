"""Observation plumbing shared by the agents."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..context import Context, ContextSpace, VisibilityMode, context_part


class ObservationBuilder:
    """Turns (env state features, context) into the network's two inputs.

    The context part follows :func:`carl_lab.context.emit_observation`; each
    feature is then divided by its default (features whose default is 0 are
    left as is) so that dt=0.05 and g=10 arrive on the same scale.
    """

    def __init__(self, space: ContextSpace, mode: VisibilityMode | str, varying: Sequence[int] = ()):
        self.space = space
        self.mode = VisibilityMode(mode)
        self.varying = tuple(sorted(set(varying)))
        if self.mode is VisibilityMode.HIDDEN:
            idx: tuple[int, ...] = ()
        elif self.mode is VisibilityMode.CONCAT_ALL:
            idx = tuple(range(len(space)))
        else:
            idx = self.varying
        defaults = space.defaults[list(idx)] if idx else np.empty(0)
        self.scale = np.where(defaults != 0, np.abs(defaults), 1.0)
        self.context_dim = len(idx)

    def context_features(self, context: Context) -> np.ndarray:
        return context_part(context, self.mode, self.varying) / self.scale
