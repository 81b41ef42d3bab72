"""CSV/JSON readers and writers. Floats are written with 17 significant digits."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from interdep.dgp import Population
from interdep.errors import InputError
from interdep.netgen import InteractionMatrix, UnitCharacteristics


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_files(outdir, files: dict) -> list[Path]:
    """Write ``{name: text}`` only after every text has been rendered."""
    outdir = Path(outdir)
    written = []
    for name, text in files.items():
        atomic_write(outdir / name, text)
        written.append(outdir / name)
    return written


def _rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh) if r]


# -- interaction matrices ---------------------------------------------------

def weights_dense_csv(w) -> str:
    w = w.w if isinstance(w, InteractionMatrix) else np.asarray(w)
    return csv_text(None, w.tolist())


def weights_triples_csv(w) -> str:
    w = w.w if isinstance(w, InteractionMatrix) else np.asarray(w)
    i, j = np.nonzero(w)
    return csv_text(["i", "j", "w"], zip(i.tolist(), j.tolist(), w[i, j].tolist()))


def load_weights_dense(path) -> np.ndarray:
    rows = _rows(path)
    try:
        w = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise InputError(f"{path}: expected a square matrix, got {w.shape}")
    return w


def load_weights_triples(path, n: int | None = None) -> np.ndarray:
    rows = _rows(path)
    if not rows or rows[0] != ["i", "j", "w"]:
        raise InputError(f"{path}: expected header i,j,w")
    try:
        trip = [(int(i), int(j), float(v)) for i, j, v in rows[1:]]
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in trip), default=-1)
    w = np.zeros((n, n))
    for i, j, v in trip:
        w[i, j] = v
    return w


# -- populations ------------------------------------------------------------

def population_csv(pop: Population) -> str:
    d = pop.chars.coords.shape[1]
    q = pop.chars.econ.shape[1]
    header = (["unit"] + [f"coord{k + 1}" for k in range(d)]
              + [f"econ{k + 1}" for k in range(q)] + ["eps", "d", "y"])
    rows = [[i, *pop.chars.coords[i], *pop.chars.econ[i], pop.eps[i], int(pop.d[i]), pop.y[i]]
            for i in range(pop.chars.n)]
    return csv_text(header, rows)


def load_population(path) -> Population:
    rows = _rows(path)
    if not rows:
        raise InputError(f"{path}: empty file")
    header = rows[0]
    ci = [k for k, h in enumerate(header) if h.startswith("coord")]
    ei = [k for k, h in enumerate(header) if h.startswith("econ")]
    try:
        pos = {h: header.index(h) for h in ("unit", "eps", "d", "y")}
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    order = np.argsort(data[:, pos["unit"]], kind="stable")
    data = data[order]
    chars = UnitCharacteristics(data[:, ci], data[:, ei])
    return Population(chars, data[:, pos["eps"]], data[:, pos["d"]], data[:, pos["y"]])


# -- effects and estimates ---------------------------------------------------

def report_csv(rep) -> str:
    amp = rep.amplification
    rows = [[i, rep.nc[i], amp[i] if amp is not None else None] for i in range(rep.nc.size)]
    return csv_text(["unit", "nc", "amplification"], rows)


def implied_csv(effects) -> str:
    return csv_text(["unit", "nc_hat"], enumerate(effects.nc_hat.tolist()))


def histogram_rows(values, bins: int = 30, value_range=None) -> list[tuple[float, float, int]]:
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    return [(edges[k], edges[k + 1], int(counts[k])) for k in range(bins)]


def histogram_csv(values, bins: int = 30) -> str:
    return csv_text(["bin_left", "bin_right", "count"], histogram_rows(values, bins))


def series_histogram_csv(series: dict, bins: int = 30) -> str:
    """Histograms of several series on common bin edges."""
    pooled = np.concatenate([np.asarray(v, dtype=float) for v in series.values()])
    pooled = pooled[np.isfinite(pooled)]
    rng = (float(pooled.min()), float(pooled.max())) if pooled.size else None
    if rng is not None and rng[0] == rng[1]:
        rng = None
    rows = []
    for name, vals in series.items():
        rows += [(name, *r) for r in histogram_rows(vals, bins, rng)]
    return csv_text(["series", "bin_left", "bin_right", "count"], rows)


def mc_summary_csv(rows) -> str:
    """``rows`` are (estimand, SummaryRow) pairs."""
    return csv_text(["estimand", "truth", "mean", "bias", "sd", "rmse", "n_effective"],
                    [[name, r.truth, r.mean, r.bias, r.sd, r.rmse, r.n] for name, r in rows])


def mc_draws_csv(draws) -> str:
    """``draws`` are (estimator label, Draw) pairs."""
    return csv_text(["rep", "estimator", "beta_hat", "rho_hat", "nc_hat_mean", "flagged"],
                    [[d.rep, label, d.beta_hat, d.rho_hat, d.nc_hat_mean, int(d.flagged)]
                     for label, d in draws])
