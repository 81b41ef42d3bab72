"""
Simulated economies: shocks, treatment assignment and the SAR equilibrium

    Y = rho W Y + beta D + X gamma + eps,   Y = (I - rho W)^{-1} (beta D + X gamma + eps)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg as sla
from scipy.special import expit, logit

from interdep.errors import InputError, ModelError, NumericError, ParameterError
from interdep.netgen import InteractionMatrix, UnitCharacteristics, stability_margin

__all__ = [
    "StructuralParams",
    "AssignmentSpec",
    "Population",
    "make_characteristics",
    "draw_shocks",
    "assign_exogenous",
    "assign_confounded",
    "solve_equilibrium",
    "simulate_population",
    "child_seeds",
    "MIN_STABILITY_MARGIN",
]

MIN_STABILITY_MARGIN = 0.01


@dataclass(frozen=True)
class StructuralParams:
    beta: float = 1.0
    rho: float = 0.4
    gamma: tuple = (0.5,)
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", tuple(float(g) for g in np.atleast_1d(self.gamma)))
        if not np.isfinite([self.beta, self.rho, *self.gamma]).all():
            raise ParameterError("structural parameters must be finite")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ParameterError(f"sigma must be positive, got {self.sigma!r}")

    def scaled(self, factor: float) -> "StructuralParams":
        return StructuralParams(self.beta * factor, self.rho, self.gamma, self.sigma)


@dataclass(frozen=True)
class AssignmentSpec:
    mode: Literal["exogenous", "confounded"] = "exogenous"
    p: float = 0.5
    kappa: float = 0.0

    def __post_init__(self):
        if self.mode not in ("exogenous", "confounded"):
            raise ParameterError(f"unknown assignment mode {self.mode!r}")
        if not 0.0 < self.p < 1.0:
            raise ParameterError(f"p must lie in (0, 1), got {self.p!r}")
        if not np.isfinite(self.kappa):
            raise ParameterError("kappa must be finite")


@dataclass(frozen=True)
class Population:
    """One simulated economy. Arrays are read-only."""

    chars: UnitCharacteristics
    eps: np.ndarray
    d: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        n = self.chars.n
        for name in ("eps", "d", "y"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != (n,):
                raise InputError(f"{name} must have shape ({n},), got {a.shape}")
            if not np.isfinite(a).all():
                raise InputError(f"{name} contains non-finite values")
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not np.isin(self.d, (0.0, 1.0)).all():
            raise InputError("treatment must be binary")

    @property
    def x(self) -> np.ndarray:
        return self.chars.econ


def child_seeds(seed, k: int) -> list:
    """``k`` independent child streams of ``seed`` without mutating it."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [
        np.random.SeedSequence(ss.entropy, spawn_key=(*ss.spawn_key, i), pool_size=ss.pool_size)
        for i in range(k)
    ]


def make_characteristics(n: int, d: int = 2, q: int = 1, seed=None) -> UnitCharacteristics:
    """Uniform positions on the unit hypercube and standardised normal attributes."""
    rng = np.random.default_rng(seed)
    coords = rng.random((n, d))
    econ = rng.standard_normal((n, q))
    if n > 1:
        econ = (econ - econ.mean(axis=0)) / econ.std(axis=0, ddof=1)
    return UnitCharacteristics(coords, econ)


def draw_shocks(n: int, sigma: float, seed=None) -> np.ndarray:
    """iid Normal(0, sigma^2) shocks. ``sigma=0`` yields exact zeros."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    if sigma < 0:
        raise ParameterError("sigma must be nonnegative")
    z = np.random.default_rng(seed).standard_normal(n)
    return sigma * z if sigma > 0 else np.zeros(n)


def _check_p(p):
    if not 0.0 < p < 1.0:
        raise ParameterError(f"p must lie in (0, 1), got {p!r}")


def assign_exogenous(n: int, p: float, seed=None) -> np.ndarray:
    """iid Bernoulli(p) treatment, drawn from its own RNG stream."""
    _check_p(p)
    return (np.random.default_rng(seed).random(n) < p).astype(float)


def confounded_propensity(eps, p: float, kappa: float, tol: float = 1e-10) -> np.ndarray:
    """Propensities logistic(a + kappa * eps / sd(eps)) with mean exactly p.

    The intercept ``a`` is found by bisection on the mean propensity.
    """
    _check_p(p)
    eps = np.asarray(eps, dtype=float)
    if not np.isfinite(eps).all():
        raise InputError("shocks contain non-finite values")
    sd = eps.std(ddof=1) if eps.size > 1 else 0.0
    if kappa == 0 or sd == 0:
        return np.full(eps.shape, float(p))
    z = kappa * eps / sd
    lo = logit(p) - np.abs(z).max() - 1.0
    hi = logit(p) + np.abs(z).max() + 1.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if expit(mid + z).mean() < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            return expit(0.5 * (lo + hi) + z)
    raise NumericError(f"intercept bisection stalled at [{lo}, {hi}]")


def assign_confounded(eps, p: float, kappa: float, seed=None) -> np.ndarray:
    """Bernoulli treatment whose propensity rises with the unit's own shock."""
    prop = confounded_propensity(eps, p, kappa)
    return (np.random.default_rng(seed).random(prop.size) < prop).astype(float)


def _design(x, n):
    x = np.zeros((n, 0)) if x is None else np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != n:
        raise InputError(f"x has {x.shape[0]} rows, expected {n}")
    return x


def structural_rhs(params: StructuralParams, d, x, eps) -> np.ndarray:
    """beta D + X gamma + eps."""
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    x = _design(x, n)
    gamma = np.asarray(params.gamma, dtype=float)
    if x.shape[1] != gamma.size:
        if not gamma.any() or x.shape[1] == 0:
            xg = np.zeros(n)
        else:
            raise InputError(f"x has {x.shape[1]} columns but gamma has {gamma.size}")
    else:
        xg = x @ gamma
    eps = np.zeros(n) if eps is None else np.asarray(eps, dtype=float)
    return params.beta * d + xg + eps


def require_stable(w: InteractionMatrix, rho: float) -> None:
    margin = stability_margin(w, rho)
    if margin <= MIN_STABILITY_MARGIN:
        raise ModelError(
            f"|rho| * spectral_radius = {1 - margin:.6g} leaves stability margin "
            f"{margin:.6g} <= {MIN_STABILITY_MARGIN}"
        )


def factorize(w: InteractionMatrix, rho: float):
    """LU factors of (I - rho W) after the stability check."""
    require_stable(w, rho)
    a = np.eye(w.n) - rho * w.w
    lu, piv = sla.lu_factor(a, check_finite=False)
    if np.any(np.diag(lu) == 0):
        raise NumericError("(I - rho W) is singular to working precision")
    return lu, piv


def solve_equilibrium(w: InteractionMatrix, params: StructuralParams, d, x, eps) -> np.ndarray:
    """Equilibrium outcomes solving (I - rho W) Y = beta D + X gamma + eps."""
    if not isinstance(w, InteractionMatrix):
        w = InteractionMatrix.from_array(w)
    rhs = structural_rhs(params, d, x, eps)
    if rhs.shape[0] != w.n:
        raise InputError(f"rhs has length {rhs.shape[0]}, W is {w.n} x {w.n}")
    lu_piv = factorize(w, params.rho)
    y = sla.lu_solve(lu_piv, rhs, check_finite=False)
    resid = np.abs(y - params.rho * (w.w @ y) - rhs).max()
    scale = np.abs(rhs).max()
    if resid > 1e-10 * scale and resid > 0:
        raise NumericError(f"equilibrium residual {resid:.3e} exceeds tolerance")
    return y


def simulate_population(
    chars: UnitCharacteristics,
    w: InteractionMatrix,
    params: StructuralParams,
    assignment: AssignmentSpec,
    seed=None,
) -> Population:
    """Draw shocks and treatment from independent child streams of ``seed``, then solve."""
    shock_ss, assign_ss = child_seeds(seed, 2)
    eps = draw_shocks(chars.n, params.sigma, shock_ss)
    if assignment.mode == "exogenous":
        d = assign_exogenous(chars.n, assignment.p, assign_ss)
    else:
        d = assign_confounded(eps, assignment.p, assignment.kappa, assign_ss)
    y = solve_equilibrium(w, params, d, chars.econ, eps)
    return Population(chars, eps, d, y)
