import os

import numpy as np
import pytest
from hypothesis import settings

from driftdiff.model import DDEProblem, Grid, TrigP0

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def stable_problem(a=0.3, D=1.0, L=1.0, d=1, n_x=16, n_t=16, frac=0.4, p0=None):
    """Problem and grid with dt = frac * dx^2 / (2 d D)."""
    dx = 2 * L / n_x
    dt = frac * dx ** 2 / (2 * d * D)
    kw = {} if p0 is None else {"p0": p0}
    problem = DDEProblem(a=a, D=D, L=L, T=dt * n_t, d=d, **kw)
    return problem, Grid.from_problem(problem, n_x, n_t)


def two_mode(d=1):
    if d == 1:
        return TrigP0.cosines(1.0, [((1,), 0.5), ((2,), 0.3)])
    return TrigP0.cosines(1.0, [((1,) + (0,) * (d - 1), 0.5), ((0,) * (d - 1) + (2,), 0.3)])
