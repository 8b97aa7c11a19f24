import numpy as np
import pytest

import rhcontrol as rc
from rhcontrol.timestepping import (CnSystem, ControlTrajectory, StateTrajectory,
                                    TimeGrid, objective_eval)

from conftest import sin_mode, tiny_context


def test_time_grid_basics():
    g = TimeGrid(0.0, 1.0, 0.0125)
    assert g.m == 80
    assert g.times[0] == 0.0 and g.times[-1] == pytest.approx(1.0)
    assert g.trapz_weights.sum() == pytest.approx(1.0)
    assert g.trapz_weights[0] == g.trapz_weights[-1] == 0.0125 / 2


def test_time_grid_rejects_incompatible():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0.3)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, -0.1)


def test_control_trajectory_norm_and_inner():
    g = TimeGrid(0.0, 1.0, 0.25)
    u = ControlTrajectory(g, np.ones((5, 2)))
    assert u.norm() == pytest.approx(np.sqrt(2.0))
    v = ControlTrajectory(g, 2.0 * np.ones((5, 2)))
    assert u.inner(v) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        ControlTrajectory(g, np.ones((4, 2)))


def test_zero_state_stays_zero(heat_ops33):
    ctx, _ = tiny_context()
    g = TimeGrid(0.0, 0.5, 0.05)
    u = ControlTrajectory.zeros(g, 1)
    y = rc.cn_state_solve(ctx.ops, ctx.acts, u, np.zeros(ctx.ops.n_int))
    assert np.abs(y.values).max() == 0.0


def test_analytic_heat_decay(heat_ops33, mesh33):
    y0 = heat_ops33.restrict(rc.project_function(mesh33, sin_mode))
    g = TimeGrid(0.0, 1.0, 0.0125)
    acts = rc.build_rectangular_actuators([((0.4, 0.6), (0.4, 0.6))], [(1, 1)])
    rc.assemble_actuator_loads(mesh33, acts)
    u = ControlTrajectory.zeros(g, 1)
    y = rc.cn_state_solve(heat_ops33, acts, u, y0)
    h0 = rc.sobolev_norms(y0, heat_ops33, "H")
    h1 = rc.sobolev_norms(y.values[-1], heat_ops33, "H")
    rate = -np.log(h1 / h0)
    assert rate == pytest.approx(0.1 * 2 * np.pi**2, rel=0.01)


def test_cn_second_order_in_time(mesh33, heat_ops33):
    # temporal error isolated by comparing against a fine-dt reference of the
    # same spatial discretization
    y0 = heat_ops33.restrict(rc.project_function(mesh33, sin_mode))
    acts = rc.build_rectangular_actuators([((0.4, 0.6), (0.4, 0.6))], [(1, 1)])
    rc.assemble_actuator_loads(mesh33, acts)

    def final_state(dt):
        g = TimeGrid(0.0, 1.0, dt)
        u = ControlTrajectory.zeros(g, 1)
        return rc.cn_state_solve(heat_ops33, acts, u, y0).values[-1]

    ref = final_state(0.0125 / 16)
    e1 = np.linalg.norm(final_state(0.0125) - ref)
    e2 = np.linalg.norm(final_state(0.0125 / 2) - ref)
    assert 3.0 <= e1 / e2 <= 5.0


def test_dissipative_norm_monotone(mesh33):
    a = lambda t, x: np.full(x.shape[0], 3.0)  # strongly dissipative
    ops = rc.build_spatial_operators(mesh33, nu=0.1, a=a)
    y0 = ops.restrict(rc.project_function(mesh33, sin_mode))
    acts = rc.build_rectangular_actuators([((0.4, 0.6), (0.4, 0.6))], [(1, 1)])
    rc.assemble_actuator_loads(mesh33, acts)
    g = TimeGrid(0.0, 0.5, 0.025)
    y = rc.cn_state_solve(ops, acts, ControlTrajectory.zeros(g, 1), y0)
    norms = [rc.sobolev_norms(v, ops, "H") for v in y.values]
    assert all(n1 <= n0 for n0, n1 in zip(norms, norms[1:]))


def test_grid_mismatch_rejected():
    ctx, y0 = tiny_context()
    g = TimeGrid(0.0, 0.5, 0.05)
    system = CnSystem(ctx.ops, 0.1)
    u = ControlTrajectory.zeros(g, 1)
    with pytest.raises(ValueError):
        rc.cn_state_solve(ctx.ops, ctx.acts, u, y0, system=system)


def test_adjoint_of_zero_state():
    ctx, _ = tiny_context()
    g = TimeGrid(0.0, 0.5, 0.05)
    y = StateTrajectory(g, np.zeros((g.m + 1, ctx.ops.n_int)))
    p = rc.cn_adjoint_solve(ctx.ops, y)
    assert np.abs(p.values).max() == 0.0


def test_adjoint_terminal_condition():
    ctx, y0 = tiny_context()
    g = TimeGrid(0.0, 0.5, 0.05)
    u = ControlTrajectory.zeros(g, 1)
    y = rc.cn_state_solve(ctx.ops, ctx.acts, u, y0)
    p = rc.cn_adjoint_solve(ctx.ops, y)
    assert np.abs(p.values[-1]).max() == 0.0
    assert np.abs(p.values[:-1]).max() > 0.0


def test_objective_trivial_cases():
    ctx, _ = tiny_context()
    g = TimeGrid(0.0, 1.0, 0.125)
    y = StateTrajectory(g, np.zeros((g.m + 1, ctx.ops.n_int)))
    u = ControlTrajectory.zeros(g, 1)
    assert objective_eval(ctx.ops, y, u, 2.0, "l2") == 0.0
    uv = np.zeros((g.m + 1, 2))
    uv[:, 0] = 1.0
    y2 = StateTrajectory(g, np.zeros((g.m + 1, ctx.ops.n_int)))
    assert objective_eval(ctx.ops, y2, ControlTrajectory(g, uv), 2.0, "l1") \
        == pytest.approx(1.0, abs=1e-14)


def test_objective_l1_l2_split_identity():
    from rhcontrol.theory import sql1_identity_check
    ctx, _ = tiny_context()
    g = TimeGrid(0.0, 1.0, 0.125)
    rng = np.random.default_rng(3)
    uv = rng.standard_normal((g.m + 1, 3))
    u = ControlTrajectory(g, uv)
    y = StateTrajectory(g, np.zeros((g.m + 1, ctx.ops.n_int)))
    j1 = objective_eval(ctx.ops, y, u, 1.0, "l1")
    j2 = objective_eval(ctx.ops, y, u, 1.0, "l2")
    w = g.trapz_weights
    absu = np.abs(uv)
    cross = sum(absu[:, i] * absu[:, j] for i in range(3) for j in range(i + 1, 3))
    assert j1 - j2 == pytest.approx(float(np.sum(w * cross)), abs=1e-12)
    assert sql1_identity_check(u, 1.0) < 1e-12


def test_objective_rejects_mismatched_grids():
    ctx, _ = tiny_context()
    y = StateTrajectory(TimeGrid(0.0, 1.0, 0.5), np.zeros((3, ctx.ops.n_int)))
    u = ControlTrajectory.zeros(TimeGrid(0.0, 1.0, 0.25), 1)
    with pytest.raises(ValueError):
        objective_eval(ctx.ops, y, u, 1.0, "l2")


def test_factor_cache_reused_across_windows():
    ctx, y0 = tiny_context()
    system = CnSystem(ctx.ops, 0.05)
    g1 = TimeGrid(0.0, 0.5, 0.05)
    rc.cn_state_solve(ctx.ops, ctx.acts, ControlTrajectory.zeros(g1, 1), y0, system=system)
    n_first = len(system._cache)
    g2 = TimeGrid(0.1, 0.5, 0.05)  # overlaps [0.1, 0.5] -> only 2 new midpoints
    rc.cn_state_solve(ctx.ops, ctx.acts, ControlTrajectory.zeros(g2, 1), y0, system=system)
    assert n_first == 10
    assert len(system._cache) == 12
