"""
Monte Carlo experiments on a fixed network.

The network and unit characteristics are drawn once per experiment. Every
replication redraws shocks and treatment from a seed derived from
``(master seed, replication index)``, so results do not depend on the order
in which replications run or on how many worker processes run them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from interdep.counterfact import li_outcomes, report
from interdep.dgp import (
    AssignmentSpec,
    StructuralParams,
    assign_confounded,
    assign_exogenous,
    child_seeds,
    draw_shocks,
    make_characteristics,
    simulate_population,
    solve_equilibrium,
)
from interdep.errors import ExperimentError, InputError, InterdepError, ParameterError
from interdep.netgen import InteractionMatrix, NetworkParams, UnitCharacteristics, build_weights
from interdep.sarfit import fit_ols, fit_sar_ml, implied_effects

__all__ = [
    "ExperimentConfig",
    "SummaryRow",
    "MonteCarloSummary",
    "Draw",
    "ExperimentResult",
    "CheckReport",
    "ESTIMATORS",
    "build_world",
    "run_experiment",
    "summarize",
    "bias_amplification_ratio",
    "prop1_check",
    "prop2_check",
]

ESTIMATORS = ("sar_ml", "ols")
QUANTITIES = ("beta_hat", "rho_hat", "nc_hat_mean")

# spawn-key namespaces under the master seed
_WORLD, _REPS, _PROP1, _PROP2, _PAIRS = range(5)


@dataclass(frozen=True)
class ExperimentConfig:
    n_units: int = 200
    n_reps: int = 500
    seed: int = 42
    network: NetworkParams = field(default_factory=NetworkParams)
    params: StructuralParams = field(default_factory=StructuralParams)
    assignment: AssignmentSpec = field(default_factory=AssignmentSpec)
    estimators: tuple = ESTIMATORS
    coord_dim: int = 2
    intercept: bool = True

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.n_reps < 1:
            raise ParameterError("n_reps must be at least 1")
        if self.n_units < 2:
            raise ParameterError("n_units must be at least 2")
        if self.network.k >= self.n_units:
            raise ParameterError(f"k={self.network.k} must be smaller than n_units={self.n_units}")
        if self.seed < 0:
            raise ParameterError("seed must be nonnegative")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise ParameterError(f"estimators must be drawn from {ESTIMATORS}, got {self.estimators}")

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class SummaryRow:
    name: str
    truth: float
    mean: float
    bias: float
    sd: float
    rmse: float
    n: int


@dataclass(frozen=True)
class Draw:
    rep: int
    estimator: str
    beta_hat: float
    rho_hat: float
    nc_hat_mean: float
    flagged: bool


@dataclass(frozen=True)
class MonteCarloSummary:
    rows: tuple
    n_effective: dict
    n_flagged: dict
    bias_amp_ratio: float | None

    def row(self, name: str) -> SummaryRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    summary: MonteCarloSummary
    draws: tuple
    truths: dict
    chars: UnitCharacteristics
    w: InteractionMatrix

    def series(self, estimator: str, quantity: str) -> np.ndarray:
        """Non-flagged draws of one quantity, in replication order."""
        return np.array([getattr(d, quantity) for d in self.draws
                         if d.estimator == estimator and not d.flagged])


def summarize(draws, truth: float, name: str = "") -> SummaryRow:
    """Mean, bias, SD (n - 1 divisor) and RMSE of draws around ``truth``.

    A single draw has no observed dispersion and gets ``sd = 0``.
    """
    x = np.asarray(draws, dtype=float).reshape(-1)
    if x.size == 0:
        raise InputError("cannot summarise an empty set of draws")
    mean = float(x.mean())
    sd = float(x.std(ddof=1)) if x.size > 1 else 0.0
    rmse = float(np.sqrt(np.mean((x - truth) ** 2)))
    return SummaryRow(name, float(truth), mean, mean - truth, sd, rmse, int(x.size))


def bias_amplification_ratio(summary: MonteCarloSummary, estimator: str = "sar_ml") -> float | None:
    """bias(nc_hat_mean) / bias(beta_hat); None when the direct-effect bias is zero."""
    num = summary.row(f"{estimator}.nc_hat_mean").bias
    den = summary.row(f"{estimator}.beta_hat").bias
    if den == 0:
        return None
    return num / den


def build_world(cfg: ExperimentConfig) -> tuple[UnitCharacteristics, InteractionMatrix]:
    """Characteristics and the fixed network shared by all replications."""
    ss = np.random.SeedSequence(cfg.seed, spawn_key=(_WORLD,))
    chars = make_characteristics(cfg.n_units, d=cfg.coord_dim, q=len(cfg.params.gamma), seed=ss)
    return chars, build_weights(chars, cfg.network)


def design_matrix(chars: UnitCharacteristics, intercept: bool = True) -> np.ndarray:
    """Covariates handed to the estimators: optional constant, then the attributes."""
    x = chars.econ
    if intercept:
        x = np.hstack([np.ones((chars.n, 1)), x])
    return x


def rep_seed(seed: int, rep: int, namespace: int = _REPS) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(namespace, rep))


def _replicate(cfg: ExperimentConfig, chars, w, rep: int) -> list[Draw]:
    pop = simulate_population(chars, w, cfg.params, cfg.assignment, rep_seed(cfg.seed, rep))
    x = design_matrix(chars, cfg.intercept)
    out = []
    for name in cfg.estimators:
        nan = math.nan
        try:
            est = fit_sar_ml(pop.y, pop.d, x, w) if name == "sar_ml" else fit_ols(pop.y, pop.d, x)
        except InterdepError:
            out.append(Draw(rep, name, nan, nan, nan, True))
            continue
        nc_mean, flagged = nan, not est.converged
        if not flagged:
            try:
                nc_mean = implied_effects(est, w).nc_hat_mean
            except InterdepError:
                flagged = True
        out.append(Draw(rep, name, est.beta_hat, est.rho_hat, nc_mean, flagged))
    return out


def _replicate_chunk(cfg, chars, w, reps):
    return [d for r in reps for d in _replicate(cfg, chars, w, r)]


def _chunks(n: int, k: int) -> list[range]:
    size = max(1, math.ceil(n / k))
    return [range(i, min(i + size, n)) for i in range(0, n, size)]


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentResult:
    """Replicate, estimate, map to implied effects and summarise.

    Flagged replications (non-converged fits, unstable estimates) are
    excluded from the summary and counted in ``n_flagged``.
    """
    chars, w = build_world(cfg)
    truth_report = report(w, cfg.params)
    truths = {"beta_hat": cfg.params.beta, "rho_hat": cfg.params.rho,
              "nc_hat_mean": truth_report.nc_mean}
    if jobs > 1 and cfg.n_reps > 1:
        chunks = _chunks(cfg.n_reps, 4 * jobs)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = pool.map(_replicate_chunk, *zip(*[(cfg, chars, w, c) for c in chunks]))
            draws = [d for part in parts for d in part]
    else:
        draws = _replicate_chunk(cfg, chars, w, range(cfg.n_reps))

    rows, n_eff, n_flag = [], {}, {}
    for name in cfg.estimators:
        good = [d for d in draws if d.estimator == name and not d.flagged]
        n_eff[name] = len(good)
        n_flag[name] = sum(1 for d in draws if d.estimator == name and d.flagged)
        if not good:
            continue
        for q in QUANTITIES:
            rows.append(summarize([getattr(d, q) for d in good], truths[q], f"{name}.{q}"))
    if not rows:
        raise ExperimentError(f"all {cfg.n_reps} replications were flagged for every estimator")
    summary = MonteCarloSummary(tuple(rows), n_eff, n_flag, None)
    ref = "sar_ml" if n_eff.get("sar_ml") else next(k for k, v in n_eff.items() if v)
    summary = replace(summary, bias_amp_ratio=bias_amplification_ratio(summary, ref))
    return ExperimentResult(cfg, summary, tuple(draws), truths, chars, w)


@dataclass(frozen=True)
class CheckReport:
    name: str
    regime: str
    assignment: str
    truth: float
    estimate: float
    se: float
    n_reps: int
    passed: bool
    pairs: tuple = ()

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in
               ("name", "regime", "assignment", "truth", "estimate", "se", "n_reps", "passed")}
        if self.pairs:
            out["pairs"] = [dict(p) for p in self.pairs]
        return out


def _within(estimate: float, truth: float, se: float, z: float = 3.0) -> bool:
    return bool(abs(estimate - truth) <= z * se + 1e-12 * max(1.0, abs(truth)))


def _draw_assignment(cfg: ExperimentConfig, n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    shock_ss, assign_ss = child_seeds(seed, 2)
    eps = draw_shocks(n, cfg.params.sigma, shock_ss)
    a = cfg.assignment
    if a.mode == "exogenous":
        d = assign_exogenous(n, a.p, assign_ss)
    else:
        d = assign_confounded(eps, a.p, a.kappa, assign_ss)
    return eps, d


def prop1_check(cfg: ExperimentConfig, n_reps: int | None = None) -> CheckReport:
    """Partial-equilibrium contrast against beta.

    Each replication fixes the neighbour term m = W Y0 at the untreated
    equilibrium, regenerates outcomes as rho m + beta D + X gamma + eps, and
    takes the D coefficient of a regression on [1, D, X]. The mean over
    replications is compared with beta at three standard errors.
    """
    reps = n_reps or cfg.n_reps
    chars, w = build_world(cfg)
    p = cfg.params
    x = chars.econ
    z_base = np.hstack([np.ones((chars.n, 1)), x])
    est = []
    for r in range(reps):
        eps, d = _draw_assignment(cfg, chars.n, rep_seed(cfg.seed, r, _PROP1))
        if d.min() == d.max():
            continue
        y0 = solve_equilibrium(w, p, np.zeros(chars.n), x, eps)
        m = w.w @ y0
        y_pe = p.rho * m + p.beta * d + x @ np.asarray(p.gamma) + eps
        z = np.column_stack([d, z_base])
        coef, *_ = np.linalg.lstsq(z, y_pe, rcond=None)
        est.append(coef[0])
    est = np.asarray(est)
    if est.size < 2:
        raise ExperimentError("partial-equilibrium check needs at least two usable replications")
    mean, se = float(est.mean()), float(est.std(ddof=1) / math.sqrt(est.size))
    return CheckReport("prop1", "partial_equilibrium", cfg.assignment.mode, p.beta, mean, se,
                       int(est.size), _within(mean, p.beta, se))


def _sample_pairs(w: InteractionMatrix, n_pairs: int, seed) -> list[tuple[int, int]]:
    rng = np.random.default_rng(seed)
    targets, sources = np.nonzero(w.w)
    pick = rng.choice(sources.size, size=min(n_pairs, sources.size), replace=False)
    pairs = [(int(sources[k]), int(targets[k])) for k in np.sort(pick)]
    n = w.n
    while True:
        i, j = (int(v) for v in rng.choice(n, size=2, replace=False))
        if w.w[j, i] == 0:
            pairs.append((i, j))
            return pairs


def prop2_check(cfg: ExperimentConfig, n_reps: int | None = None, n_pairs: int = 5) -> CheckReport:
    """First-order spillovers beta * rho * W[j, i] under one-step neighbour response.

    Outcomes follow (I + rho W)(beta D + X gamma + eps). For ``n_pairs`` linked
    pairs plus one unlinked control pair, the difference in mean Y_j between
    replications with D_i = 1 and D_i = 0 is compared with the spillover at
    three standard errors; the check passes only if every pair does.
    """
    reps = n_reps or cfg.n_reps
    chars, w = build_world(cfg)
    p = cfg.params
    pairs = _sample_pairs(w, n_pairs, np.random.SeedSequence(cfg.seed, spawn_key=(_PAIRS,)))
    ys = np.empty((reps, chars.n))
    ds = np.empty((reps, chars.n))
    for r in range(reps):
        eps, d = _draw_assignment(cfg, chars.n, rep_seed(cfg.seed, r, _PROP2))
        ys[r] = li_outcomes(w, p, d, chars.econ, eps)
        ds[r] = d
    entries, ok = [], True
    for i, j in pairs:
        treated = ds[:, i] == 1
        y1, y0 = ys[treated, j], ys[~treated, j]
        truth = p.beta * p.rho * w.w[j, i]
        if y1.size < 2 or y0.size < 2:
            estimate, se, passed = math.nan, math.nan, False
        else:
            estimate = float(y1.mean() - y0.mean())
            se = float(math.sqrt(y1.var(ddof=1) / y1.size + y0.var(ddof=1) / y0.size))
            passed = _within(estimate, truth, se)
        ok &= passed
        entries.append({"source": i, "target": j, "weight": float(w.w[j, i]), "truth": float(truth),
                        "estimate": estimate, "se": se, "passed": passed})
    worst = max(entries, key=lambda e: abs(e["estimate"] - e["truth"]) / e["se"]
                if e["se"] and np.isfinite(e["se"]) else math.inf)
    return CheckReport("prop2", "local_interaction", cfg.assignment.mode, worst["truth"],
                       worst["estimate"], worst["se"], reps, bool(ok), tuple(entries))
