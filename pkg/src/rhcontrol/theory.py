"""Numerical evaluation of the stability constants and inequalities:
observability-based lower bound gamma1(T), the decrescence bounds gamma2(T),
the horizon factors theta1/theta2/alpha(T), the certified decay pair
(eta, zeta), coefficient bounds, and residual checks.

Analytic constants the theory never pins down numerically (c_hat_nu, the
embedding constant, Theta1/Theta2/c4/c5, lambda, alpha_ell) are user-supplied;
the defaults below derive from the first Dirichlet eigenvalue 2*pi^2 of the
unit square or from empirical calibration.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .mesh_fem import Mesh, SpatialOperators, sobolev_norms, triangle_geometry, _edge_midpoints, _MID_VALS
from .timestepping import ControlTrajectory, StateTrajectory

FIRST_DIRICHLET_EIGENVALUE = 2.0 * math.pi**2


@dataclass
class TheoryConstants:
    c_hat_nu: float = 1.0            # observability constant; calibrate empirically
    i_HVprime: float = 1.0 / math.sqrt(FIRST_DIRICHLET_EIGENVALUE)
    N_ab: float = 0.0                # coefficient bound N(a,b)
    C_U: float = 1.0
    beta: float = 1.0
    alpha_ell: Optional[float] = None  # default: min(1/(2 c_p), beta/2)
    Theta1: float = 1.0
    Theta2: float = 1.0
    c4: float = 1.0
    c5: float = 1.0
    lambda_rate: float = 1.0
    nu: float = 0.1
    n_actuators: int = 1

    def __post_init__(self):
        if self.alpha_ell is None:
            poincare = 1.0 / FIRST_DIRICHLET_EIGENVALUE
            self.alpha_ell = min(0.5 / poincare, 0.5 * self.beta)
        for name in ("c_hat_nu", "i_HVprime", "C_U", "beta", "alpha_ell",
                     "Theta1", "Theta2", "c4", "c5", "lambda_rate", "nu"):
            if getattr(self, name) <= 0:
                raise ValueError(f"constant {name} must be positive")


def coefficient_bounds(a, b, t_samples, mesh: Mesh, r: int = 2) -> float:
    """N(a,b): sup_t ||a(t,.)||_{L^r} + sup |b|, by quadrature and sampling."""
    if r < 2:
        raise ValueError("r must be at least the space dimension (2)")
    sup_a = 0.0
    sup_b = 0.0
    areas, _ = triangle_geometry(mesh)
    mids = _edge_midpoints(mesh).reshape(-1, 2)
    w = np.repeat(areas / 3.0, 3)
    for t in t_samples:
        if a is not None:
            avals = np.abs(np.asarray(a(t, mids)))
            sup_a = max(sup_a, float(np.sum(w * avals**r)) ** (1.0 / r))
        if b is not None:
            bvals = np.asarray(b(t, mids))
            sup_b = max(sup_b, float(np.max(np.linalg.norm(bvals, axis=-1))))
    return sup_a + sup_b


def gamma1(T: float, c: TheoryConstants) -> float:
    """min{ T / (2 c_hat (T + 1 + T N(a,b))), beta / (2 i C_U) }."""
    if T <= 0:
        raise ValueError("T must be positive")
    first = T / (2.0 * c.c_hat_nu * (T + 1.0 + T * c.N_ab))
    second = c.beta / (2.0 * c.i_HVprime * c.C_U)
    return min(first, second)


def gamma2_eval(T: float, c: TheoryConstants, norm_kind: str,
                tracking: str = "H") -> float:
    """Closed-form decrescence bound gamma2(T) for either tracking norm.

    tracking "H": (Theta1 + beta*k*c4*Theta2)/(2 lambda) * (1 - e^{-lambda T})
    with k = N for l1 and k = 1 for l2.
    tracking "V": 1/(2 nu) * (1 + (c5*Theta1 + (1 + nu*k*beta)*c4*Theta2)
    / lambda * (1 - e^{-lambda T})).
    """
    if T < 0:
        raise ValueError("T must be nonnegative")
    if norm_kind == "l1":
        k = c.n_actuators
    elif norm_kind == "l2":
        k = 1
    else:
        raise ValueError(f"unknown norm kind {norm_kind!r}")
    lam = c.lambda_rate
    ramp = 1.0 - math.exp(-lam * T)
    if tracking == "H":
        return (c.Theta1 + c.beta * k * c.c4 * c.Theta2) / (2.0 * lam) * ramp
    if tracking == "V":
        return (1.0 + (c.c5 * c.Theta1 + (1.0 + c.nu * k * c.beta) * c.c4 * c.Theta2)
                / lam * ramp) / (2.0 * c.nu)
    raise ValueError(f"unknown tracking norm {tracking!r}")


def alpha_horizon(T: float, delta: float, gamma2_T: float,
                  alpha_ell: float) -> dict:
    """Suboptimality factor alpha(T) = 1 - gamma2^2/(alpha_ell^2 delta (T-delta))
    together with the two horizon estimates theta1 and theta2."""
    if not T > delta > 0:
        raise ValueError("need T > delta > 0")
    theta1 = 1.0 + gamma2_T / (alpha_ell * (T - delta))
    theta2 = gamma2_T / (alpha_ell * delta)
    alpha = 1.0 - theta2 * (theta1 - 1.0)
    return {"alpha": alpha, "theta1": theta1, "theta2": theta2}


def zeta_rate(alpha: float, delta: float, gamma1_delta: float,
              gamma2_T: float) -> tuple[float, float]:
    """Certified decay: eta = 1 - alpha*gamma1(delta)/gamma2(T), zeta = |ln eta|/delta."""
    eta = 1.0 - alpha * gamma1_delta / gamma2_T
    if not 0.0 < eta < 1.0:
        raise ValueError(f"eta={eta} outside (0,1): supplied constants certify no decay")
    return eta, abs(math.log(eta)) / delta


def observability_residual(ops: SpatialOperators, y: StateTrajectory,
                           f: Optional[StateTrajectory], T: float,
                           c: TheoryConstants) -> dict:
    """Check ||y0||_H^2 <= c_hat (1 + 1/T + N(a,b)) ||y||_{L2(V)}^2 + ||f||_{L2(V')}^2.

    f is the forcing as interior dof load vectors per time node (or None for
    the unforced equation). Also returns the smallest c_hat for which the
    inequality holds on this trajectory.
    """
    w = y.grid.trapz_weights
    venergy = np.einsum("ji,ji->j", y.values, (ops.K_in @ y.values.T).T)
    y_l2v_sq = float(np.sum(w * venergy))
    lhs = sobolev_norms(y.values[0], ops, "H") ** 2
    f_sq = 0.0
    if f is not None:
        vprime = np.array([sobolev_norms(v, ops, "Vprime") ** 2 for v in f.values])
        f_sq = float(np.sum(w * vprime))
    factor = 1.0 + 1.0 / T + c.N_ab
    rhs = c.c_hat_nu * factor * y_l2v_sq + f_sq
    if y_l2v_sq > 0:
        min_chat = max(lhs - f_sq, 0.0) / (factor * y_l2v_sq)
    else:
        min_chat = 0.0
    return {"lhs": lhs, "rhs": rhs, "min_chat": min_chat, "holds": lhs <= rhs}


def sql1_identity_check(u: ControlTrajectory, beta: float) -> float:
    """Residual of the algebraic split of the squared-l1 control cost into its
    squared-l2 part plus the switching (cross) penalty, with shared quadrature."""
    w = u.grid.trapz_weights
    absu = np.abs(u.values)
    l1_sq = np.sum(absu, axis=1) ** 2
    l2_sq = np.sum(u.values**2, axis=1)
    # explicit pairwise switching penalty sum_{i<j} |u_i u_j|
    n = absu.shape[1]
    iu, ju = np.triu_indices(n, k=1)
    cross = np.sum(absu[:, iu] * absu[:, ju], axis=1)
    lhs = 0.5 * beta * np.sum(w * l1_sq)
    rhs = 0.5 * beta * np.sum(w * l2_sq) + beta * np.sum(w * cross)
    return float(abs(lhs - rhs))
