"""Alpha-shape hyperparameter selection: k-fold cross-validation scored by
containment + kept volume, searched with differential evolution, plus the
cheap nearest-neighbor heuristics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import differential_evolution

from .geometry import DegenerateInputError, alpha_shape, delaunay, nearest_neighbor_distances
from .interpolation import SimplexLocator


class NoFeasibleAlphaError(RuntimeError):
    """Every candidate alpha was rejected by cross-validation."""


class AllFoldsDegenerateError(RuntimeError):
    """No fold produced a usable triangulation."""


@dataclass(frozen=True)
class CrossValConfig:
    """K-fold split settings for the containment/volume score."""

    folds: int = 5
    seed: int = 0
    reject_on_outside: bool = True

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("need at least 2 folds")


@dataclass(frozen=True)
class DEConfig:
    """best-1-bin differential evolution hyperparameters."""

    bounds: tuple
    population: int = 40
    generations: int = 60
    mutation: float = 0.5
    recombination: float = 0.7
    strategy: str = "best1bin"
    workers: int = 1

    def __post_init__(self):
        lo, hi = self.bounds
        if not (0 < lo < hi):
            raise ValueError("bounds must satisfy 0 < alpha_min < alpha_max")
        if self.population < 4:
            raise ValueError("population must be >= 4")
        if not (0 < self.mutation < 2) or not (0 <= self.recombination <= 1):
            raise ValueError("mutation in (0, 2), recombination in [0, 1]")


def alpha_heuristic(points, mode: str = "mean") -> float:
    """Alpha from the distribution of nearest-neighbor distances.

    mode is one of min/max/mean/median. Scale-equivariant: scaling the
    points by c scales the result by c.
    """
    dists = nearest_neighbor_distances(points)
    if np.all(dists == 0.0):
        raise ValueError("all points coincide: nearest-neighbor distance is zero")
    stats = {
        "min": np.min,
        "max": np.max,
        "mean": np.mean,
        "median": np.median,
    }
    if mode not in stats:
        raise ValueError(f"unknown heuristic mode {mode!r}; pick one of {sorted(stats)}")
    return float(stats[mode](dists))


def _fold_assignment(n: int, k: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    folds = np.empty(n, dtype=int)
    folds[order] = np.arange(n) % k
    return folds


def cv_score(points, alpha: float, cfg: CrossValConfig | None = None) -> float:
    """Mean over folds of the alpha-shape kept volume; +inf when any
    held-out point falls outside the training complex (rejection).

    All fold triangulations share the full point set's rescaling frame so
    one alpha means the same thing in every fold.
    """
    cfg = cfg or CrossValConfig()
    pts = np.asarray(points, dtype=float)
    n, d = pts.shape
    if n < (d + 2) * cfg.folds / (cfg.folds - 1):
        raise ValueError("not enough points per fold to triangulate")
    offset = pts.min(axis=0)
    scale = pts.max(axis=0) - offset
    if np.any(scale <= 0):
        raise DegenerateInputError("points have zero extent along an axis")

    folds = _fold_assignment(n, cfg.folds, cfg.seed)
    scores = []
    skipped = 0
    for k in range(cfg.folds):
        train = pts[folds != k]
        test = pts[folds == k]
        try:
            tri = delaunay(train, frame=(offset, scale))
        except DegenerateInputError:
            warnings.warn(f"fold {k}: degenerate training set skipped", stacklevel=2)
            skipped += 1
            continue
        cx = alpha_shape(tri, alpha)
        if cfg.reject_on_outside:
            if cx.nsimplex == 0:
                return np.inf
            idx, _ = SimplexLocator(cx).locate(test)
            if np.any(idx < 0):
                return np.inf
        scores.append(cx.total_volume())
    if not scores:
        raise AllFoldsDegenerateError("every fold was degenerate")
    return float(np.mean(scores))


def de_minimize(objective, cfg: DEConfig, seed, x0: float | None = None):
    """Minimize a scalar objective over cfg.bounds with best-1-bin DE.

    Deterministic per seed; returns (x_star, score_star). x0, when given,
    warm-starts one member of the initial population.
    """
    rng = np.random.default_rng(seed)
    lo, hi = cfg.bounds
    init = rng.uniform(lo, hi, size=(cfg.population, 1))
    if x0 is not None:
        init[0, 0] = np.clip(x0, lo, hi)
    res = differential_evolution(
        lambda x: objective(float(x[0])),
        bounds=[cfg.bounds],
        strategy=cfg.strategy,
        maxiter=cfg.generations,
        popsize=cfg.population,
        mutation=cfg.mutation,
        recombination=cfg.recombination,
        init=init,
        seed=rng,
        polish=False,
        tol=0.0,
        workers=cfg.workers,
        updating="immediate" if cfg.workers == 1 else "deferred",
    )
    if not np.isfinite(res.fun):
        raise NoFeasibleAlphaError("objective was +inf for every candidate alpha")
    return float(res.x[0]), float(res.fun)


def select_alpha_cv(points, cv_cfg: CrossValConfig | None = None,
                    de_cfg: DEConfig | None = None, seed=0,
                    warm_start: float | None = None):
    """Pick alpha by minimizing the cross-validated kept volume.

    Default search bounds are (0.5x, 4x) the median nearest-neighbor
    distance of the rescaled point set.
    """
    pts = np.asarray(points, dtype=float)
    cv_cfg = cv_cfg or CrossValConfig()
    if de_cfg is None:
        offset = pts.min(axis=0)
        scale = pts.max(axis=0) - offset
        med = alpha_heuristic((pts - offset) / scale, "median")
        de_cfg = DEConfig(bounds=(0.5 * med, 4.0 * med))
    return de_minimize(lambda a: cv_score(pts, a, cv_cfg), de_cfg, seed, x0=warm_start)
