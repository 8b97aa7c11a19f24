"""Shipped coefficient presets and actuator layouts.

The "benchmark_unstable" preset is the unstable reaction-convection-diffusion
setup used throughout the experiments: nu = 0.1,
a(t,x) = -2.8 - 0.8|sin(t + x1)|, b(t,x) = (-0.01(x1+x2), 0.2 x1 x2 cos t),
y0 = 3 sin(pi x1) sin(pi x2). Actuator rectangles are config inputs; the two
shipped layouts give 4 actuators covering 8% of the domain and 13 actuators
covering 13%.
"""

import numpy as np


def a_benchmark(t, x):
    x = np.atleast_2d(x)
    return -2.8 - 0.8 * np.abs(np.sin(t + x[:, 0]))


def b_benchmark(t, x):
    x = np.atleast_2d(x)
    return np.column_stack([-0.01 * (x[:, 0] + x[:, 1]),
                            0.2 * x[:, 0] * x[:, 1] * np.cos(t)])


def y0_benchmark(x):
    x = np.atleast_2d(x)
    return 3.0 * np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])


def a_zero(t, x):
    return np.zeros(np.atleast_2d(x).shape[0])


def b_zero(t, x):
    return np.zeros((np.atleast_2d(x).shape[0], 2))


def y0_zero(x):
    return np.zeros(np.atleast_2d(x).shape[0])


COEFFICIENT_PRESETS = {
    # (a, b, y0, nu)
    "benchmark_unstable": (a_benchmark, b_benchmark, y0_benchmark, 0.1),
    "pure_heat": (None, None, lambda x: np.sin(np.pi * np.atleast_2d(x)[:, 0])
                  * np.sin(np.pi * np.atleast_2d(x)[:, 1]), 0.1),
    "zero": (None, None, y0_zero, 0.1),
}

# 4 actuators, two parent boxes split 2x1 each, total area 0.08
ACTUATORS_4_8PCT = {
    "parents": [((0.1, 0.3), (0.2, 0.4)), ((0.6, 0.8), (0.55, 0.75))],
    "subdivisions": [(2, 1), (2, 1)],
}

# 13 actuators: a central 3x2 block (6 actuators) plus a 7x1 strip near the
# bottom boundary (7 actuators, weakly coupled to the unstable mode),
# total area 0.13
ACTUATORS_13_13PCT = {
    "parents": [((0.25, 0.55), (0.45, 0.65)), ((0.05, 0.75), (0.05, 0.15))],
    "subdivisions": [(3, 2), (7, 1)],
}

ACTUATOR_PRESETS = {
    "four_8pct": ACTUATORS_4_8PCT,
    "thirteen_13pct": ACTUATORS_13_13PCT,
}
