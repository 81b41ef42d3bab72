"""
Interaction matrices built from predetermined unit characteristics.

The network is a k-nearest-neighbour graph on a distance that mixes
geographic position and economic attributes. Weights are binary or
inverse-distance, optionally row-normalised so that ``W @ y`` is a
weighted average of neighbour outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from interdep.errors import InputError, NumericError, ParameterError

__all__ = [
    "UnitCharacteristics",
    "NetworkParams",
    "InteractionMatrix",
    "build_weights",
    "row_normalize",
    "spectral_radius",
    "stability_margin",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class UnitCharacteristics:
    """Predetermined characteristics of N units.

    Parameters
    ----------
    coords : (N, d) array
        Spatial positions.
    econ : (N, q) array
        Economic attributes, standardised.
    """

    coords: np.ndarray
    econ: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        econ = np.asarray(self.econ, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if econ.ndim == 1:
            econ = econ[:, None]
        if coords.ndim != 2 or econ.ndim != 2:
            raise InputError("coords and econ must be 2-d arrays")
        if coords.shape[0] != econ.shape[0]:
            raise InputError(
                f"coords has {coords.shape[0]} rows but econ has {econ.shape[0]}"
            )
        if coords.shape[0] < 2:
            raise InputError("need at least two units")
        if coords.shape[1] < 1:
            raise InputError("coords needs at least one column")
        if not (np.isfinite(coords).all() and np.isfinite(econ).all()):
            raise InputError("characteristics contain non-finite values")
        object.__setattr__(self, "coords", _frozen(coords))
        object.__setattr__(self, "econ", _frozen(econ))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def permute(self, perm) -> "UnitCharacteristics":
        perm = np.asarray(perm)
        return UnitCharacteristics(self.coords[perm], self.econ[perm])


@dataclass(frozen=True)
class NetworkParams:
    k: int = 4
    decay: float = 0.0
    econ_weight: float = 0.0
    row_normalize: bool = True

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ParameterError(f"k must be a positive integer, got {self.k!r}")
        if not np.isfinite(self.decay) or self.decay < 0:
            raise ParameterError(f"decay must be >= 0, got {self.decay!r}")
        if not 0.0 <= self.econ_weight <= 1.0:
            raise ParameterError(
                f"econ_weight must lie in [0, 1], got {self.econ_weight!r}"
            )


@dataclass(frozen=True)
class InteractionMatrix:
    """Nonnegative N x N weights with a zero diagonal.

    Build through :func:`build_weights` or :meth:`from_array`; the
    spectral radius is computed once and cached.
    """

    w: np.ndarray
    spectral_radius: float = field(default=None)

    def __post_init__(self):
        w = _check_weights(self.w)
        object.__setattr__(self, "w", _frozen(w))
        if self.spectral_radius is None:
            object.__setattr__(self, "spectral_radius", spectral_radius(self.w))

    @classmethod
    def from_array(cls, w) -> "InteractionMatrix":
        return cls(np.asarray(w, dtype=float))

    @property
    def n(self) -> int:
        return self.w.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.w if dtype is None else self.w.astype(dtype)


def _check_weights(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise InputError(f"weights must be a square matrix, got shape {w.shape}")
    if not np.isfinite(w).all():
        raise InputError("weights contain non-finite values")
    if (w < 0).any():
        raise InputError("weights must be nonnegative")
    if np.any(np.diag(w) != 0):
        raise InputError("weights must have a zero diagonal")
    return w


def _as_matrix(w) -> np.ndarray:
    if isinstance(w, InteractionMatrix):
        return w.w
    return np.asarray(w, dtype=float)


def mixed_distances(chars: UnitCharacteristics, econ_weight: float) -> np.ndarray:
    """Pairwise distance (1 - a) * |coords_i - coords_j| + a * |econ_i - econ_j|."""
    geo = np.linalg.norm(chars.coords[:, None, :] - chars.coords[None, :, :], axis=-1)
    eco = np.linalg.norm(chars.econ[:, None, :] - chars.econ[None, :, :], axis=-1)
    return (1.0 - econ_weight) * geo + econ_weight * eco


def build_weights(chars: UnitCharacteristics, params: NetworkParams) -> InteractionMatrix:
    """k-nearest-neighbour interaction matrix.

    Unit ``j`` receives positive weight in row ``i`` iff it is one of the
    ``k`` nearest units to ``i`` under the mixed distance. Ties go to the
    lower unit index. The raw weight is ``dist ** -decay`` (so ``decay=0``
    gives 0/1 links), followed by optional row normalisation.
    """
    n = chars.n
    if params.k >= n:
        raise ParameterError(f"k={params.k} must be smaller than N={n}")
    dist = mixed_distances(chars, params.econ_weight)
    np.fill_diagonal(dist, np.inf)
    # stable sort: equal distances keep index order
    nbrs = np.argsort(dist, axis=1, kind="stable")[:, : params.k]
    rows = np.repeat(np.arange(n), params.k)
    cols = nbrs.ravel()
    d = dist[rows, cols]
    if params.decay > 0 and np.any(d == 0):
        raise InputError("coincident units cannot receive inverse-distance weights")
    w = np.zeros((n, n))
    w[rows, cols] = np.power(d, -params.decay) if params.decay > 0 else 1.0
    if params.row_normalize:
        w = row_normalize(w)
    return InteractionMatrix(w)


def row_normalize(w) -> np.ndarray:
    """Divide every row with positive sum by that sum; zero rows pass through."""
    w = _check_weights(_as_matrix(w))
    s = w.sum(axis=1)
    out = w.copy()
    nz = s > 0
    out[nz] /= s[nz, None]
    return out


def _strip_trivial(a: np.ndarray) -> np.ndarray:
    # A zero row or zero column only contributes an eigenvalue 0.
    keep = np.ones(a.shape[0], dtype=bool)
    while True:
        sub = a[np.ix_(keep, keep)]
        dead = (sub.sum(axis=1) == 0) | (sub.sum(axis=0) == 0)
        if not dead.any():
            return sub
        idx = np.flatnonzero(keep)
        keep[idx[dead]] = False


def _perron_root(a: np.ndarray, tol: float, max_iter: int) -> float:
    # Power iteration on A + I: the shift makes the Perron root strictly
    # dominant even when A is periodic. Collatz-Wielandt bounds bracket it.
    a = _strip_trivial(a)
    n = a.shape[0]
    if n == 0:
        return 0.0
    x = np.ones(n) / np.sqrt(n)
    mu_prev = np.nan
    for _ in range(max_iter):
        y = a @ x + x
        ratio = y / x
        lo, hi = ratio.min(), ratio.max()
        if hi - lo <= tol * hi:
            return float(0.5 * (lo + hi)) - 1.0
        mu = x @ y
        y /= np.linalg.norm(y)
        resid = np.linalg.norm(a @ y + y - mu * y)
        if resid <= tol * mu and abs(mu - mu_prev) <= tol * mu:
            return float(mu) - 1.0
        mu_prev = mu
        x = y
        x[x <= 0] = np.finfo(float).tiny
    raise NumericError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(Collatz-Wielandt bracket [{lo - 1:.3e}, {hi - 1:.3e}])"
    )


def spectral_radius(w, tol: float = 1e-12, max_iter: int = 20000) -> float:
    """Largest eigenvalue modulus of a square matrix.

    Nonnegative matrices use shifted power iteration with Collatz-Wielandt
    stopping; other matrices fall back to implicitly restarted Arnoldi.
    Raises :class:`NumericError` when the iteration budget is exhausted.
    """
    a = _as_matrix(w)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InputError("matrix contains non-finite values")
    if not a.any():
        return 0.0
    if (a >= 0).all():
        return _perron_root(a, tol, max_iter)
    if a.shape[0] < 3:
        return float(np.abs(np.linalg.eigvals(a)).max())
    try:
        vals = eigs(a, k=1, which="LM", maxiter=max_iter, tol=tol,
                    return_eigenvectors=False, v0=np.ones(a.shape[0]))
    except ArpackNoConvergence as exc:
        raise NumericError(f"Arnoldi iteration did not converge: {exc}") from exc
    return float(np.abs(vals).max())


def stability_margin(w: InteractionMatrix, rho: float) -> float:
    """1 - |rho| * spectral_radius(W); positive means (I - rho W) is invertible."""
    r = w.spectral_radius if isinstance(w, InteractionMatrix) else spectral_radius(w)
    return 1.0 - abs(rho) * r
