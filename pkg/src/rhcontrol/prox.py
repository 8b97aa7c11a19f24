"""Closed-form proximal operators for the squared l1 and squared l2 penalties.

For g(u) = (beta/2)|u|_1^2 the prox with step alpha_bar is evaluated through
the scalars lambda_i = [sqrt(alpha_bar*beta/2)|x_i|/sqrt(mu*) - alpha_bar*beta]_+
where mu* is the unique positive zero of a non-increasing scalar function,
found by bisection. Components with lambda_i = 0 are hard zeros, so sparsity
counts are exact.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ProxParams:
    alpha_bar: float
    beta: float
    tol: float = 1e-10

    def __post_init__(self):
        if self.alpha_bar <= 0 or self.beta <= 0 or self.tol <= 0:
            raise ValueError("alpha_bar, beta, and tol must be positive")

    @property
    def ab(self) -> float:
        return self.alpha_bar * self.beta


def psi(mu: float, x: np.ndarray, p: ProxParams) -> float:
    """sum_i [sqrt(ab/2)|x_i|/sqrt(mu) - ab]_+ - 1, non-increasing in mu."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    terms = np.sqrt(0.5 * p.ab) * np.abs(x) / np.sqrt(mu) - p.ab
    return float(np.maximum(terms, 0.0).sum() - 1.0)


def _lambdas(mu: float, x: np.ndarray, p: ProxParams) -> np.ndarray:
    return np.maximum(np.sqrt(0.5 * p.ab) * np.abs(x) / np.sqrt(mu) - p.ab, 0.0)


def find_mu_star(x: np.ndarray, p: ProxParams) -> float:
    """Bisection for the positive zero of psi(. , x); requires x != 0."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise ValueError("mu* is undefined for x = 0")
    n = x.size
    # psi -> +inf as mu -> 0+ and -> -1 as mu -> inf, so a bracket exists
    hi = 0.5 * p.ab * np.max(np.abs(x)) ** 2 * n**2
    while psi(hi, x, p) > 0:
        hi *= 2.0
    lo = hi * 1e-16
    while psi(lo, x, p) <= 0:
        lo *= 0.5
        assert lo > 0, "bisection bracket collapsed"
    while True:
        mid = 0.5 * (lo + hi)
        v = psi(mid, x, p)
        if abs(v) <= p.tol or (hi - lo) <= p.tol * mid:
            return mid
        if v > 0:
            lo = mid
        else:
            hi = mid


def prox_sql1(x: np.ndarray, p: ProxParams) -> np.ndarray:
    """Prox of alpha_bar * (beta/2)|.|_1^2."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return np.zeros_like(x)
    lam = _lambdas(find_mu_star(x, p), x, p)
    out = np.zeros_like(x)
    active = lam > 0
    out[active] = lam[active] * x[active] / (lam[active] + p.ab)
    return out


def active_set_size(x: np.ndarray, p: ProxParams) -> int:
    """Number of nonzero components of prox_sql1(x)."""
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        return 0
    return int(np.count_nonzero(_lambdas(find_mu_star(x, p), x, p) > 0))


def prox_sql2(x: np.ndarray, p: ProxParams) -> np.ndarray:
    """Prox of alpha_bar * (beta/2)|.|_2^2: plain shrinkage."""
    return np.asarray(x, dtype=float) / (1.0 + p.ab)
