"""Crank-Nicolson integration of the controlled state equation and its
exact discrete adjoint, plus the trapezoidal objective.

The time-dependent system matrix is sampled once per step at the interval
midpoint. Controls are nodal in time (piecewise linear), which makes the
backward sweep in :func:`cn_adjoint_solve` the algebraic transpose of the
forward scheme and the reduced gradients exact for the discrete objective.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .actuators import ActuatorSet
from .mesh_fem import SpatialOperators


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    T: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        m = self.T / self.dt
        if abs(m - round(m)) > 1e-12 * max(1.0, m) or round(m) < 1:
            raise ValueError(f"horizon T={self.T} is not a multiple of dt={self.dt}")

    @property
    def m(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.m + 1)

    @property
    def trapz_weights(self) -> np.ndarray:
        w = np.full(self.m + 1, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w


@dataclass
class ControlTrajectory:
    grid: TimeGrid
    values: np.ndarray  # (m+1, N)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[0] != self.grid.m + 1:
            raise ValueError("control values inconsistent with time grid")

    @classmethod
    def zeros(cls, grid: TimeGrid, n_actuators: int) -> "ControlTrajectory":
        return cls(grid, np.zeros((grid.m + 1, n_actuators)))

    def norm(self) -> float:
        """Trapezoidal L^2(t0, t0+T; R^N) norm."""
        w = self.grid.trapz_weights
        return float(np.sqrt(np.sum(w * np.sum(self.values**2, axis=1))))

    def inner(self, other: "ControlTrajectory") -> float:
        w = self.grid.trapz_weights
        return float(np.sum(w * np.sum(self.values * other.values, axis=1)))


@dataclass
class StateTrajectory:
    grid: TimeGrid
    values: np.ndarray  # (m+1, n_interior)

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[0] != self.grid.m + 1:
            raise ValueError("state values inconsistent with time grid")


class CnSystem:
    """Cache of per-midpoint CN step matrices and their LU factorizations.

    Keyed on the midpoint time in half-steps, so windows sharing the global
    dt grid reuse factorizations across receding horizon subproblems.
    """

    def __init__(self, ops: SpatialOperators, dt: float):
        self.ops = ops
        self.dt = dt
        self._cache: dict[int, tuple] = {}

    def _key(self, t_mid: float) -> int:
        return int(round(2.0 * t_mid / self.dt))

    def step_matrices(self, t_mid: float):
        """Return (lu of M + dt/2 A, csr of M - dt/2 A, csr transpose of the latter)."""
        key = self._key(t_mid)
        hit = self._cache.get(key)
        if hit is None:
            A = self.ops.system_matrix(t_mid)
            M = self.ops.M_in
            E_plus = (M + 0.5 * self.dt * A).tocsc()
            E_minus = (M - 0.5 * self.dt * A).tocsr()
            hit = (spla.splu(E_plus), E_minus, E_minus.T.tocsr())
            self._cache[key] = hit
        return hit


def cn_state_solve(ops: SpatialOperators, acts: ActuatorSet, u: ControlTrajectory,
                   y0: np.ndarray, system: CnSystem = None) -> StateTrajectory:
    """March (M + dt/2 A) y_{j+1} = (M - dt/2 A) y_j + dt/2 B (u_j + u_{j+1})."""
    grid = u.grid
    if system is None:
        system = CnSystem(ops, grid.dt)
    elif abs(system.dt - grid.dt) > 1e-14:
        raise ValueError("system cache was built for a different dt")
    y0 = np.asarray(y0, dtype=float)
    if y0.size == ops.mesh.n_nodes:
        y0 = ops.restrict(y0)
    if y0.size != ops.n_int:
        raise ValueError("initial state has wrong length")
    B_in = acts.B_active[ops.interior, :]

    ys = np.empty((grid.m + 1, ops.n_int))
    ys[0] = y0
    dt = grid.dt
    for j in range(grid.m):
        t_mid = grid.t0 + (j + 0.5) * dt
        lu, E_minus, _ = system.step_matrices(t_mid)
        rhs = E_minus @ ys[j] + (0.5 * dt) * (B_in @ (u.values[j] + u.values[j + 1]))
        ys[j + 1] = lu.solve(rhs)
    return StateTrajectory(grid, ys)


def cn_adjoint_solve(ops: SpatialOperators, y: StateTrajectory,
                     system: CnSystem = None) -> StateTrajectory:
    """Backward sweep with the transposed step matrices and loads K y.

    Returns the interval multipliers pi_0..pi_{m-1} together with the
    terminal condition pi_m = 0, on the same grid as y. The multiplier
    pi_j is attached to the step from t_j to t_{j+1}.
    """
    grid = y.grid
    if system is None:
        system = CnSystem(ops, grid.dt)
    K = ops.K_in
    w = grid.trapz_weights
    m = grid.m
    dt = grid.dt

    ps = np.zeros((m + 1, ops.n_int))
    carry = -w[m] * (K @ y.values[m])
    for j in range(m - 1, -1, -1):
        t_mid = grid.t0 + (j + 0.5) * dt
        lu, _, E_minus_T = system.step_matrices(t_mid)
        ps[j] = lu.solve(carry, trans="T")
        if j > 0:
            carry = E_minus_T @ ps[j] - w[j] * (K @ y.values[j])
    return StateTrajectory(grid, ps)


def objective_eval(ops: SpatialOperators, y: StateTrajectory, u: ControlTrajectory,
                   beta: float, norm_kind: str) -> float:
    """Trapezoidal quadrature of 1/2 ||y||_V^2 + beta/2 |u|_*^2."""
    if y.grid != u.grid:
        raise ValueError("state and control grids differ")
    if norm_kind == "l2":
        upen = np.sum(u.values**2, axis=1)
    elif norm_kind == "l1":
        upen = np.sum(np.abs(u.values), axis=1) ** 2
    else:
        raise ValueError(f"unknown norm kind {norm_kind!r}")
    venergy = np.einsum("ji,ji->j", y.values, (ops.K_in @ y.values.T).T)
    return float(np.sum(y.grid.trapz_weights * (0.5 * venergy + 0.5 * beta * upen)))
