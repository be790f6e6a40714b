"""Distribution-comparison metrics (Hellinger, Wasserstein-1) and moment
summaries used to score the density-based reconstruction against the Monte
Carlo baseline.

Histogram-vs-histogram comparisons rebin both inputs onto the merged edge
grid, which is exact (mass-conserving) for piecewise-constant densities.
Distances use the normalized-density convention.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np

from .marginalize import Marginal


class ZeroMassError(ValueError):
    """Distance undefined: an input has no probability mass."""


def _as_grid(dist):
    """Coerce a Marginal or (edges, values) pair to (edges, values)."""
    if isinstance(dist, Marginal):
        if len(dist.axes) != 1:
            raise ValueError("1-D metric got a 2-D marginal")
        return np.asarray(dist.edges[0], dtype=float), np.asarray(dist.values, dtype=float)
    edges, values = dist
    edges = np.asarray(edges, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(edges) != len(values) + 1:
        raise ValueError("need len(edges) == len(values) + 1")
    return edges, values


def _normalize(edges, values):
    w = np.diff(edges)
    mass = float(np.sum(values * w))
    if mass <= 0.0:
        raise ZeroMassError("distribution has zero mass")
    return values / mass


def _union_grid(e1, v1, e2, v2):
    """Rebin both piecewise-constant densities onto the merged edge grid."""
    edges = np.union1d(e1, e2)
    mids = 0.5 * (edges[:-1] + edges[1:])

    def lookup(e, v, x):
        idx = np.searchsorted(e, x, side="right") - 1
        out = np.zeros(len(x))
        ok = (idx >= 0) & (idx < len(v)) & (x >= e[0]) & (x <= e[-1])
        out[ok] = v[idx[ok]]
        return out

    return edges, lookup(e1, v1, mids), lookup(e2, v2, mids)


def hellinger_1d(P, Q) -> float:
    """Hellinger distance sqrt(0.5 * int (sqrt p - sqrt q)^2 dx) in [0, 1].

    Inputs are Marginals or (edges, values) histograms; both are normalized
    to unit mass and rebinned to the merged grid first.
    """
    e1, v1 = _as_grid(P)
    e2, v2 = _as_grid(Q)
    p = _normalize(e1, v1)
    q = _normalize(e2, v2)
    edges, pu, qu = _union_grid(e1, p, e2, q)
    w = np.diff(edges)
    bc = float(np.sum(np.sqrt(pu * qu) * w))
    return float(np.sqrt(max(0.0, 1.0 - bc)))


def _cdf_l1(edges, p, q) -> float:
    """Exact integral of |F_p - F_q| for piecewise-constant densities."""
    w = np.diff(edges)
    Fp = np.concatenate([[0.0], np.cumsum(p * w)])
    Fq = np.concatenate([[0.0], np.cumsum(q * w)])
    d0 = Fp[:-1] - Fq[:-1]
    d1 = Fp[1:] - Fq[1:]
    total = 0.0
    for a, b, L in zip(d0, d1, w):
        if L == 0.0:
            continue
        if a * b >= 0.0:
            total += 0.5 * abs(a + b) * L
        else:
            t = a / (a - b)  # zero crossing fraction
            total += 0.5 * L * (abs(a) * t + abs(b) * (1.0 - t))
    return float(total)


def wasserstein1_1d(P, Q) -> float:
    """First Wasserstein distance; in 1-D the L1 distance between CDFs.

    Accepts two sample arrays (empirical path, exact sorted-sample result)
    or two histograms/Marginals (piecewise-linear CDF path).
    """
    p_samples = isinstance(P, np.ndarray) and np.ndim(P) == 1
    q_samples = isinstance(Q, np.ndarray) and np.ndim(Q) == 1
    if p_samples != q_samples:
        raise TypeError("compare samples with samples or histograms with histograms")
    if p_samples:
        x = np.sort(np.asarray(P, dtype=float))
        y = np.sort(np.asarray(Q, dtype=float))
        if len(x) == 0 or len(y) == 0:
            raise ZeroMassError("empty sample set")
        if len(x) == len(y):
            return float(np.mean(np.abs(x - y)))
        # unequal sizes: integrate |F_x - F_y| over the merged support
        grid = np.union1d(x, y)
        Fx = np.searchsorted(x, grid, side="right") / len(x)
        Fy = np.searchsorted(y, grid, side="right") / len(y)
        return float(np.sum(np.abs(Fx - Fy)[:-1] * np.diff(grid)))
    e1, v1 = _as_grid(P)
    e2, v2 = _as_grid(Q)
    p = _normalize(e1, v1)
    q = _normalize(e2, v2)
    edges, pu, qu = _union_grid(e1, p, e2, q)
    return _cdf_l1(edges, pu, qu)


@dataclass
class MomentReport:
    """Mean and standard deviation per axis."""

    axes: tuple
    mean: np.ndarray
    std: np.ndarray

    def relative_difference(self, ref: "MomentReport"):
        """(|mean - ref.mean|, |std - ref.std|) / |ref.mean or ref.std|."""
        dm = np.abs(self.mean - ref.mean) / np.abs(ref.mean)
        ds = np.abs(self.std - ref.std) / np.abs(ref.std)
        return dm, ds


def moment_report(obj, axes=None) -> MomentReport:
    """Moments of a Marginal (density-weighted) or a sample array."""
    if isinstance(obj, Marginal):
        if len(obj.axes) != 1:
            raise ValueError("moment_report supports 1-D marginals")
        e, v = obj.edges[0], obj.values
        w = np.diff(e)
        mass = float(np.sum(v * w))
        if mass <= 0:
            raise ZeroMassError("zero-mass marginal")
        c = 0.5 * (e[:-1] + e[1:])
        mean = float(np.sum(c * v * w) / mass)
        var = float(np.sum((c - mean) ** 2 * v * w) / mass)
        return MomentReport(axes=obj.axes, mean=np.array([mean]), std=np.array([np.sqrt(var)]))
    x = np.asarray(obj, dtype=float)
    if x.size == 0:
        raise ZeroMassError("empty sample set")
    if x.ndim == 1:
        x = x[:, None]
    names = tuple(axes) if axes is not None else tuple(f"x{i}" for i in range(x.shape[1]))
    return MomentReport(axes=names, mean=x.mean(axis=0), std=x.std(axis=0, ddof=0))


@dataclass
class DistanceReport:
    """Per-snapshot metric series with aggregates.

    For Wasserstein averaging over snapshots the per-snapshot value can be
    normalized by the reference distribution's standard deviation there
    (configurable; how the time average is made comparable across epochs).
    """

    metric: str
    axis: str
    indep: np.ndarray
    values: np.ndarray
    normalized_by_ref_std: bool = False

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def std(self) -> float:
        return float(np.std(self.values))

    def write_csv(self, path):
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["indep", f"{self.metric}_{self.axis}"])
            for s, v in zip(self.indep, self.values):
                w.writerow([repr(float(s)), repr(float(v))])
            w.writerow(["mean", repr(self.mean)])
            w.writerow(["std", repr(self.std)])


def distance_series(marginals_p, marginals_q, metric: str = "hellinger",
                    axis: str = "", normalize_by_ref_std: bool = False) -> DistanceReport:
    """Metric between two aligned lists of 1-D marginals (Q is reference)."""
    if len(marginals_p) != len(marginals_q):
        raise ValueError("marginal lists must align snapshot-by-snapshot")
    fns = {"hellinger": hellinger_1d, "wasserstein": wasserstein1_1d}
    if metric not in fns:
        raise ValueError(f"unknown metric {metric!r}; pick one of {sorted(fns)}")
    fn = fns[metric]
    vals, indep = [], []
    for mp, mq in zip(marginals_p, marginals_q):
        v = fn(mp, mq)
        if metric == "wasserstein" and normalize_by_ref_std:
            v /= moment_report(mq).std[0]
        vals.append(v)
        indep.append(mp.indep)
    return DistanceReport(
        metric=metric, axis=axis, indep=np.asarray(indep),
        values=np.asarray(vals), normalized_by_ref_std=normalize_by_ref_std,
    )
