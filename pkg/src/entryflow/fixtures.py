"""Synthetic concave-with-hole point set used by the geometry and
interpolation test suites.

The set is a C-shaped annulus: points on jittered polar rings between an
inner hole and an outer radius, with an angular sector removed so the
outline is concave. Shape-level stand-in for scattered entry ensembles
whose support has holes; exact coordinates are deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


#: alpha (in the triangulation's rescaled space) that keeps the default
#: fixture's hole open while containing every sample point; calibrated once
#: against the hole-exclusion and containment checks.
TUNED_ALPHA = 0.12


@dataclass(frozen=True)
class ConcaveRingFixture:
    points: np.ndarray        # (n, 2)
    center: tuple[float, float]
    r_inner: float            # hole radius (no points inside)
    r_outer: float
    theta_min: float          # radians; the arc [theta_min, theta_max] holds points
    theta_max: float
    interior: np.ndarray      # mask of points safely away from all boundaries
    tuned_alpha: float = TUNED_ALPHA

    def holdout(self, k: int = 10, seed: int = 2024):
        """Deterministically split off k interior points for validation."""
        rng = np.random.default_rng(seed)
        candidates = np.nonzero(self.interior)[0]
        if len(candidates) < k:
            raise ValueError(f"only {len(candidates)} interior points, need {k}")
        test = rng.choice(candidates, size=k, replace=False)
        train = np.setdiff1d(np.arange(len(self.points)), test)
        return train, test

    def in_hole(self, xy, shrink: float = 1.0) -> np.ndarray:
        """Mask of query points inside the (optionally shrunk) hole."""
        xy = np.atleast_2d(xy)
        d = np.hypot(xy[:, 0] - self.center[0], xy[:, 1] - self.center[1])
        return d < self.r_inner * shrink


def concave_ring_fixture(
    center=(0.0, 1.6),
    r_inner: float = 0.45,
    r_outer: float = 1.1,
    gap_deg: float = 70.0,
    spacing: float = 0.18,
    jitter: float = 0.3,
    seed: int = 11,
) -> ConcaveRingFixture:
    """Generate the fixture on a jittered polar grid with ~`spacing` between
    neighbors. The angular gap is centered on +x; the hole is centered on
    `center`. Jitter breaks co-circular degeneracies while keeping the
    spacing scale.
    """
    rng = np.random.default_rng(seed)
    half_gap = np.radians(gap_deg) / 2.0
    t0, t1 = half_gap, 2.0 * np.pi - half_gap

    n_rings = max(2, int(round((r_outer - r_inner) / spacing)) + 1)
    radii = np.linspace(r_inner, r_outer, n_rings)
    pts = []
    for r in radii:
        arc = r * (t1 - t0)
        n = max(4, int(np.ceil(arc / spacing)) + 1)
        theta = np.linspace(t0, t1, n)
        step_t = (t1 - t0) / (n - 1)
        theta = theta + rng.uniform(-jitter, jitter, size=n) * step_t
        rr = r + rng.uniform(-jitter, jitter, size=n) * (radii[1] - radii[0])
        rr = np.clip(rr, r_inner, None)
        pts.append(np.column_stack([rr * np.cos(theta), rr * np.sin(theta)]))
    points = np.concatenate(pts, axis=0)
    points = points + np.asarray(center)

    rel = points - np.asarray(center)
    rad = np.hypot(rel[:, 0], rel[:, 1])
    ang = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2.0 * np.pi)
    margin_r = 0.18 * (r_outer - r_inner)
    margin_t = 2.5 * spacing / rad.clip(min=r_inner)
    interior = (
        (rad > r_inner + margin_r)
        & (rad < r_outer - margin_r)
        & (ang > t0 + margin_t)
        & (ang < t1 - margin_t)
    )
    return ConcaveRingFixture(
        points=points,
        center=tuple(center),
        r_inner=r_inner,
        r_outer=r_outer,
        theta_min=t0,
        theta_max=t1,
        interior=interior,
    )


def ridge_profile(points) -> np.ndarray:
    """The test function f = y**2 evaluated on (n, 2) points."""
    pts = np.atleast_2d(points)
    return pts[:, 1] ** 2


def ridge_profile_gradient(points) -> np.ndarray:
    """Exact gradient of f = y**2: (0, 2y)."""
    pts = np.atleast_2d(points)
    g = np.zeros_like(pts, dtype=float)
    g[:, 1] = 2.0 * pts[:, 1]
    return g
