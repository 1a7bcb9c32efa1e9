import time
from typing import NamedTuple

import numpy as np
import pytest

from warpflow.flows import FlowConfig, run_flow
from warpflow.surface import cos_bump
from warpflow.warped_space import parse_space_spec

BUILTIN_SPECS = (
    "euclidean:n=2",
    "hyperbolic:n=2",
    "dss:n=2,m=2,kappa=0",
    "dss:n=2,m=2,kappa=1",
    "dss:n=3,m=1,kappa=0",
    "dss:n=3,m=1,kappa=1",
)


@pytest.fixture(scope="session")
def spaces():
    return {spec: parse_space_spec(spec) for spec in BUILTIN_SPECS}


@pytest.fixture(scope="session")
def schwarzschild(spaces):
    return spaces["dss:n=2,m=2,kappa=0"]


@pytest.fixture(scope="session")
def ads(spaces):
    return spaces["dss:n=2,m=2,kappa=1"]


class TimedRun(NamedTuple):
    trace: object
    seconds: float


def _bump_run(space, q_bhw):
    r0 = float(space.r_of_phi(3.0))
    initial = cos_bump(space, r0, 0.15, 2, 513)
    config = FlowConfig(space=space, initial=initial, mode="imcf", grid=513, t_end=6.0, cadence=0.05, q_bhw=q_bhw)
    start = time.perf_counter()
    trace = run_flow(config)
    return TimedRun(trace, time.perf_counter() - start)


@pytest.fixture(scope="session")
def schwarzschild_bump_run(schwarzschild):
    return _bump_run(schwarzschild, False)


@pytest.fixture(scope="session")
def ads_bump_run(ads):
    return _bump_run(ads, True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
