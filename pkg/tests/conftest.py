import numpy as np
import pytest

import rhcontrol as rc
from rhcontrol import presets


def sin_mode(x):
    x = np.atleast_2d(x)
    return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])


@pytest.fixture(scope="session")
def mesh5():
    return rc.build_uniform_mesh(5, 5)


@pytest.fixture(scope="session")
def mesh33():
    return rc.build_uniform_mesh(33, 33)


@pytest.fixture(scope="session")
def heat_ops33(mesh33):
    return rc.build_spatial_operators(mesh33, nu=0.1)


@pytest.fixture(scope="session")
def benchmark_ops33(mesh33):
    a, b, _, nu = presets.COEFFICIENT_PRESETS["benchmark_unstable"]
    return rc.build_spatial_operators(mesh33, nu=nu, a=a, b=b)


@pytest.fixture(scope="session")
def acts4(mesh33):
    acts = rc.build_rectangular_actuators(**presets.ACTUATORS_4_8PCT)
    return rc.assemble_actuator_loads(mesh33, acts)


def tiny_context(n_actuators=1, nu=0.1, a=None, b=None, beta=2.0):
    """5x5-mesh problem small enough for dense oracles."""
    mesh = rc.build_uniform_mesh(5, 5)
    ops = rc.build_spatial_operators(mesh, nu=nu, a=a, b=b)
    parents = [((0.25, 0.75), (0.25, 0.75))]
    subdivisions = [(n_actuators, 1)]
    acts = rc.build_rectangular_actuators(parents, subdivisions)
    rc.assemble_actuator_loads(mesh, acts)
    acts.injection = "load"  # weak-form coupling; nonzero even on coarse meshes
    y0 = ops.restrict(rc.project_function(mesh, sin_mode))
    return rc.OcpContext(ops=ops, acts=acts, beta=beta), y0
