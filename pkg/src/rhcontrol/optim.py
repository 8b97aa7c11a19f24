"""Open-loop subproblem solvers.

The l2 cost is minimized with the Barzilai-Borwein gradient method on the
reduced problem; the squared-l1 cost with a proximal gradient method whose
trial step is the BB step of the smooth part, safeguarded by a nonmonotone
(trailing-max) acceptance rule with backtracking.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .actuators import ActuatorSet
from .mesh_fem import SpatialOperators
from .prox import ProxParams, prox_sql1
from .timestepping import (CnSystem, ControlTrajectory, StateTrajectory,
                           TimeGrid, cn_adjoint_solve, cn_state_solve,
                           objective_eval)


@dataclass
class SolverOptions:
    max_iters: int = 5000
    grad_tol: float = 1e-5        # l2 stop: control-space norm of reduced gradient
    rel_change_tol: float = 1e-4  # l1 stop: ||u+ - u|| / ||u+||
    memory: int = 10              # trailing-max window of the nonmonotone rule
    decrease_const: float = 1e-4
    backtrack_factor: float = 0.5
    step_min: float = 1e-8
    step_max: float = 1e8
    max_backtracks: int = 50

    def __post_init__(self):
        if min(self.max_iters, self.grad_tol, self.rel_change_tol, self.memory,
               self.decrease_const, self.step_min, self.step_max) <= 0:
            raise ValueError("solver options must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtracking factor must be in (0,1)")


@dataclass
class OcpSolution:
    u_star: ControlTrajectory
    y_star: StateTrajectory
    objective: float
    iterations: int
    converged: bool
    final_residual: float
    log: list = field(default_factory=list)  # (iter, objective, residual, step) rows


@dataclass
class OcpContext:
    """Everything one open-loop solve needs besides (t0, T, y0)."""

    ops: SpatialOperators
    acts: ActuatorSet
    beta: float
    system: Optional[CnSystem] = None

    def solver(self, dt: float) -> CnSystem:
        if self.system is None or abs(self.system.dt - dt) > 1e-14:
            self.system = CnSystem(self.ops, dt)
        return self.system


def _smooth_gradient(ctx: OcpContext, u: ControlTrajectory, y: StateTrajectory
                     ) -> np.ndarray:
    """Gradient of the tracking part in the trapezoidal control inner product."""
    p = cn_adjoint_solve(ctx.ops, y, system=ctx.solver(u.grid.dt))
    B_in = ctx.acts.B_active[ctx.ops.interior, :]
    pi = p.values  # pi[j] multiplies the step j -> j+1; pi[m] = 0
    m = u.grid.m
    g = np.empty_like(u.values)
    g[0] = -(B_in.T @ pi[0])
    g[m] = -(B_in.T @ pi[m - 1])
    if m > 1:
        g[1:m] = -0.5 * ((pi[0:m - 1] + pi[1:m]) @ B_in)
    return g


def _grad_and_state(u: ControlTrajectory, ctx: OcpContext, norm_kind: str,
                    y0: np.ndarray) -> tuple[ControlTrajectory, StateTrajectory]:
    y = cn_state_solve(ctx.ops, ctx.acts, u, y0, system=ctx.solver(u.grid.dt))
    g = _smooth_gradient(ctx, u, y)
    if norm_kind == "l2":
        g = g + ctx.beta * u.values
    elif norm_kind != "l1":
        raise ValueError(f"unknown norm kind {norm_kind!r}")
    return ControlTrajectory(u.grid, g), y


def reduced_gradient(u: ControlTrajectory, ctx: OcpContext, norm_kind: str,
                     y0: np.ndarray) -> ControlTrajectory:
    """Reduced gradient at u: -B^T p, plus beta*u for the smooth l2 cost."""
    return _grad_and_state(u, ctx, norm_kind, y0)[0]


def bb_stepsize(s: ControlTrajectory, g_diff: ControlTrajectory,
                opts: SolverOptions) -> float:
    """BB1 step <s,s>/<s,g_diff> clamped to [step_min, step_max]."""
    denom = s.inner(g_diff)
    if denom <= 0.0:
        return opts.step_max
    num = s.inner(s)
    if num == 0.0:
        return opts.step_max
    return float(np.clip(num / denom, opts.step_min, opts.step_max))


def _initial_stepsize(ctx: OcpContext, u, g, y0, norm_kind, opts) -> float:
    """1/L probe: curvature along the negative gradient from two gradients."""
    gnorm = g.norm()
    if gnorm == 0.0:
        return 1.0
    s = 1e-2 * max(1.0, u.norm()) / gnorm
    u_probe = ControlTrajectory(u.grid, u.values - s * g.values)
    g_probe = reduced_gradient(u_probe, ctx, norm_kind, y0)
    diff = ControlTrajectory(u.grid, g_probe.values - g.values)
    L = diff.norm() / (s * gnorm)
    if L <= 0 or not np.isfinite(L):
        return 1.0
    return float(np.clip(1.0 / L, opts.step_min, opts.step_max))


def solve_ocp_l2(ctx: OcpContext, y0: np.ndarray, t0: float, T: float, dt: float,
                 opts: SolverOptions = None,
                 u_init: ControlTrajectory = None) -> OcpSolution:
    """BB gradient method for the smooth (l2) open-loop problem."""
    opts = opts or SolverOptions()
    grid = TimeGrid(t0, T, dt)
    u = u_init if u_init is not None else ControlTrajectory.zeros(grid, ctx.acts.n_actuators)
    system = ctx.solver(dt)

    log = []
    g, y = _grad_and_state(u, ctx, "l2", y0)
    gnorm = g.norm()
    alpha = _initial_stepsize(ctx, u, g, y0, "l2", opts)
    it = 0
    while gnorm > opts.grad_tol and it < opts.max_iters:
        u_new = ControlTrajectory(grid, u.values - alpha * g.values)
        g_new, y_new = _grad_and_state(u_new, ctx, "l2", y0)
        s = ControlTrajectory(grid, u_new.values - u.values)
        g_diff = ControlTrajectory(grid, g_new.values - g.values)
        alpha = bb_stepsize(s, g_diff, opts)
        u, g, y = u_new, g_new, y_new
        gnorm = g.norm()
        it += 1
        log.append((it, objective_eval(ctx.ops, y, u, ctx.beta, "l2"), gnorm, alpha))

    obj = objective_eval(ctx.ops, y, u, ctx.beta, "l2")
    return OcpSolution(u_star=u, y_star=y, objective=obj, iterations=it,
                       converged=gnorm <= opts.grad_tol, final_residual=gnorm,
                       log=log)


def _apply_prox_sql1(u_vals: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Pointwise squared-l1 prox at every time node (time weights cancel)."""
    p = ProxParams(alpha_bar=alpha, beta=beta)
    out = np.empty_like(u_vals)
    for j in range(u_vals.shape[0]):
        out[j] = prox_sql1(u_vals[j], p)
    return out


def solve_ocp_l1(ctx: OcpContext, y0: np.ndarray, t0: float, T: float, dt: float,
                 opts: SolverOptions = None,
                 u_init: ControlTrajectory = None) -> OcpSolution:
    """Nonmonotone proximal gradient method for the squared-l1 cost."""
    opts = opts or SolverOptions()
    grid = TimeGrid(t0, T, dt)
    u = u_init if u_init is not None else ControlTrajectory.zeros(grid, ctx.acts.n_actuators)
    system = ctx.solver(dt)

    def state_and_obj(uu):
        yy = cn_state_solve(ctx.ops, ctx.acts, uu, y0, system=system)
        return yy, objective_eval(ctx.ops, yy, uu, ctx.beta, "l1")

    y, obj = state_and_obj(u)
    g = ControlTrajectory(grid, _smooth_gradient(ctx, u, y))
    alpha = _initial_stepsize(ctx, u, g, y0, "l1", opts)
    history = [obj]
    log = []
    it = 0
    converged = False
    residual = np.inf

    while it < opts.max_iters:
        ref = max(history[-opts.memory:])
        accepted = False
        a = alpha
        for _ in range(opts.max_backtracks):
            u_trial = ControlTrajectory(
                grid, _apply_prox_sql1(u.values - a * g.values, a, ctx.beta))
            step = ControlTrajectory(grid, u_trial.values - u.values)
            step_sq = step.inner(step)
            y_trial, obj_trial = state_and_obj(u_trial)
            if obj_trial <= ref - opts.decrease_const * step_sq / (2.0 * a):
                accepted = True
                break
            a *= opts.backtrack_factor
        if not accepted:
            break
        it += 1
        un = u_trial.norm()
        residual = np.sqrt(step_sq) / un if un > 0 else np.sqrt(step_sq)
        log.append((it, obj_trial, residual, a))

        g_new = ControlTrajectory(grid, _smooth_gradient(ctx, u_trial, y_trial))
        g_diff = ControlTrajectory(grid, g_new.values - g.values)
        alpha = bb_stepsize(step, g_diff, opts)
        u, y, obj, g = u_trial, y_trial, obj_trial, g_new
        history.append(obj)

        if residual <= opts.rel_change_tol or (un == 0.0 and step_sq == 0.0):
            converged = True
            break

    return OcpSolution(u_star=u, y_star=y, objective=obj, iterations=it,
                       converged=converged, final_residual=float(residual),
                       log=log)


def solve_ocp(ctx: OcpContext, y0, t0, T, dt, norm_kind: str,
              opts: SolverOptions = None, u_init=None) -> OcpSolution:
    if norm_kind == "l2":
        return solve_ocp_l2(ctx, y0, t0, T, dt, opts, u_init)
    if norm_kind == "l1":
        return solve_ocp_l1(ctx, y0, t0, T, dt, opts, u_init)
    raise ValueError(f"unknown norm kind {norm_kind!r}")


def finite_difference_gradcheck(ctx: OcpContext, y0: np.ndarray, t0: float,
                                T: float, dt: float, norm_kind: str,
                                trials: int = 5, h: float = 1e-2,
                                rng: np.random.Generator = None) -> float:
    """Max relative error of directional derivatives vs central differences."""
    rng = rng or np.random.default_rng(0)
    grid = TimeGrid(t0, T, dt)
    N = ctx.acts.n_actuators
    system = ctx.solver(dt)
    worst = 0.0
    for _ in range(trials):
        u = ControlTrajectory(grid, rng.standard_normal((grid.m + 1, N)))
        d = rng.standard_normal((grid.m + 1, N))
        d /= np.sqrt(np.sum(d**2))
        g = reduced_gradient(u, ctx, norm_kind, y0)
        deriv = g.inner(ControlTrajectory(grid, d))

        def obj_at(vals):
            uu = ControlTrajectory(grid, vals)
            yy = cn_state_solve(ctx.ops, ctx.acts, uu, y0, system=system)
            obj = objective_eval(ctx.ops, yy, uu, ctx.beta, norm_kind)
            if norm_kind == "l1":
                # smooth tracking part only; remove the control penalty
                w = grid.trapz_weights
                obj -= 0.5 * ctx.beta * float(
                    np.sum(w * np.sum(np.abs(vals), axis=1) ** 2))
            return obj

        fd = (obj_at(u.values + h * d) - obj_at(u.values - h * d)) / (2.0 * h)
        scale = max(abs(fd), abs(deriv), 1e-14)
        worst = max(worst, abs(fd - deriv) / scale)
    return worst
