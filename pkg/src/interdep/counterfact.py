"""
Causal effects of a single unit's treatment under three counterfactual regimes.

* partial equilibrium (PE): other units' outcomes held fixed; the own effect is beta.
* local interaction (LI): neighbours respond once, outcomes follow (I + rho W)(...);
  the own effect is still beta because W has a zero diagonal, the spillover to j
  is beta * rho * W[j, i].
* network consistent (NC): full equilibrium adjustment; the own effect is
  beta * [(I - rho W)^{-1}]_ii and is unit specific.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np
import scipy.linalg as sla

from interdep.dgp import StructuralParams, factorize, structural_rhs
from interdep.errors import InputError, ParameterError
from interdep.netgen import InteractionMatrix

__all__ = [
    "CounterfactualReport",
    "SpilloverEntry",
    "effect_pe",
    "effect_li_own",
    "effect_li_spillover",
    "effect_nc",
    "li_outcomes",
    "multiplier",
    "report",
    "spillovers",
]


def _as_im(w) -> InteractionMatrix:
    return w if isinstance(w, InteractionMatrix) else InteractionMatrix.from_array(w)


@dataclass(frozen=True)
class CounterfactualReport:
    pe: float
    li_own: float
    nc: np.ndarray
    amplification: np.ndarray | None
    nc_mean: float

    @property
    def ratio(self) -> float | None:
        """Mean amplification nc_mean / pe, or None when pe is zero."""
        return None if self.pe == 0 else self.nc_mean / self.pe

    def scalars(self) -> dict:
        return {"pe": self.pe, "li_own": self.li_own, "nc_mean": self.nc_mean, "ratio": self.ratio}


@dataclass(frozen=True)
class SpilloverEntry:
    source: int
    target: int
    li: float
    nc: float


def effect_pe(params: StructuralParams) -> float:
    return float(params.beta)


def effect_li_own(params: StructuralParams) -> float:
    # e_i' (I + rho W) e_i = 1 whenever W_ii = 0
    return float(params.beta)


def li_outcomes(w, params: StructuralParams, d, x, eps) -> np.ndarray:
    """Outcomes after one round of neighbour response: (I + rho W)(beta D + X gamma + eps)."""
    w = np.asarray(w.w if isinstance(w, InteractionMatrix) else w, dtype=float)
    rhs = structural_rhs(params, d, x, eps)
    if rhs.shape[0] != w.shape[0]:
        raise InputError(f"rhs has length {rhs.shape[0]}, W is {w.shape[0]} x {w.shape[1]}")
    return rhs + params.rho * (w @ rhs)


def effect_li_spillover(params: StructuralParams, w, source: int, target: int) -> float:
    """First-order spillover on ``target`` from treating ``source``."""
    if source == target:
        raise ParameterError("own effect is effect_li_own; source and target must differ")
    w = w.w if isinstance(w, InteractionMatrix) else np.asarray(w, dtype=float)
    return float(params.beta * params.rho * w[target, source])


def effect_nc(w, params: StructuralParams, unit: int) -> float:
    """beta * [(I - rho W)^{-1}]_{unit, unit} from one solve against e_unit."""
    w = _as_im(w)
    lu_piv = factorize(w, params.rho)
    e = np.zeros(w.n)
    e[unit] = 1.0
    z = sla.lu_solve(lu_piv, e, check_finite=False)
    return float(params.beta * z[unit])


def multiplier(w, rho: float) -> np.ndarray:
    """The spatial multiplier (I - rho W)^{-1}, from a single LU factorisation."""
    w = _as_im(w)
    lu_piv = factorize(w, rho)
    return sla.lu_solve(lu_piv, np.eye(w.n), check_finite=False)


def report(w, params: StructuralParams) -> CounterfactualReport:
    w = _as_im(w)
    diag = np.diag(multiplier(w, params.rho)).copy()
    pe = effect_pe(params)
    nc = params.beta * diag
    amp = None if pe == 0 else nc / pe
    for a in (nc, amp):
        if a is not None:
            a.setflags(write=False)
    return CounterfactualReport(
        pe=pe, li_own=effect_li_own(params), nc=nc, amplification=amp, nc_mean=float(nc.mean())
    )


def spillovers(w, params: StructuralParams, pairs: Iterable[tuple[int, int]] | None = None):
    """Spillover entries for ``(source, target)`` pairs; all linked pairs by default."""
    w = _as_im(w)
    m = multiplier(w, params.rho)
    if pairs is None:
        targets, sources = np.nonzero(w.w)
        pairs = zip(sources.tolist(), targets.tolist())
    out = []
    for i, j in pairs:
        if i == j:
            raise ParameterError("spillover pairs must have distinct units")
        out.append(SpilloverEntry(i, j, effect_li_spillover(params, w, i, j), float(params.beta * m[j, i])))
    return out
