"""d-dimensional Delaunay triangulation, simplex metrics, and alpha-shape pruning.

State-space axes differ by many orders of magnitude (meters vs radians), so
every triangulation rescales each axis to [0, 1] first. Circumradii and the
alpha threshold live in that scaled space; volumes are reported both scaled
and mapped back to original units via the product of axis lengths.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay as _SciPyDelaunay
from scipy.spatial import cKDTree


class DegenerateInputError(ValueError):
    """Point set is affinely dependent (or a simplex is degenerate)."""


# volume below DEGENERACY_FACTOR * (bbox diagonal)**d counts as degenerate
DEGENERACY_FACTOR = 1e-14


def simplex_volume(vertices) -> np.ndarray | float:
    """Volume of one or many d-simplices: |det(edge matrix)| / d!.

    vertices: (..., d+1, d). Degenerate simplices return 0.
    """
    v = np.asarray(vertices, dtype=float)
    scalar = v.ndim == 2
    if scalar:
        v = v[None]
    d = v.shape[-1]
    if v.shape[-2] != d + 1:
        raise ValueError(f"need d+1={d + 1} vertices for a {d}-simplex, got {v.shape[-2]}")
    edges = v[..., 1:, :] - v[..., :1, :]
    vol = np.abs(np.linalg.det(edges)) / math.factorial(d)
    return float(vol[0]) if scalar else vol


def circumradius(vertices) -> np.ndarray | float:
    """Circum-hypersphere radius of one or many d-simplices.

    Uses the Cayley-Menger matrix CM of pairwise squared distances:
    R = sqrt(-inv(CM)[0, 0] / 2). Degenerate simplices give inf when batched
    and raise DegenerateInputError for a single simplex.
    """
    v = np.asarray(vertices, dtype=float)
    scalar = v.ndim == 2
    if scalar:
        v = v[None]
    n, m, d = v.shape
    if m != d + 1:
        raise ValueError(f"need d+1={d + 1} vertices for a {d}-simplex, got {m}")

    diff = v[:, :, None, :] - v[:, None, :, :]
    dist2 = np.einsum("nijk,nijk->nij", diff, diff)
    cm = np.ones((n, d + 2, d + 2))
    cm[:, 0, 0] = 0.0
    cm[:, 1:, 1:] = dist2

    sigma = np.full(n, np.inf)
    e0 = np.zeros(d + 2)
    e0[0] = 1.0
    # batched solve; fall back to per-simplex on singular batches
    try:
        y = np.linalg.solve(cm, np.broadcast_to(e0, (n, d + 2))[..., None])[..., 0]
        r2 = -y[:, 0] / 2.0
        good = np.isfinite(r2) & (r2 > 0.0)
        sigma[good] = np.sqrt(r2[good])
    except np.linalg.LinAlgError:
        for i in range(n):
            try:
                yi = np.linalg.solve(cm[i], e0)
            except np.linalg.LinAlgError:
                continue
            r2 = -yi[0] / 2.0
            if np.isfinite(r2) and r2 > 0.0:
                sigma[i] = math.sqrt(r2)

    if scalar:
        if not np.isfinite(sigma[0]):
            raise DegenerateInputError("degenerate simplex: Cayley-Menger matrix is singular")
        return float(sigma[0])
    return sigma


@dataclass
class Triangulation:
    """Delaunay triangulation of a point set with per-axis [0, 1] rescaling.

    The Delaunay (empty circumsphere) property holds in the scaled
    coordinates `points_scaled`; `sigma` is the circumradius there.
    """

    points: np.ndarray          # (n, d) original coordinates
    points_scaled: np.ndarray   # (n, d) axis-rescaled coordinates
    offset: np.ndarray          # (d,) per-axis minimum
    scale: np.ndarray           # (d,) per-axis length (original units per scaled unit)
    simplices: np.ndarray       # (ns, d+1) vertex indices
    neighbors: np.ndarray       # (ns, d+1) shared-facet neighbors, -1 = none
    sigma: np.ndarray = field(default=None)        # (ns,) circumradius, scaled space
    volume_scaled: np.ndarray = field(default=None)
    volume: np.ndarray = field(default=None)       # original units

    @property
    def ndim(self) -> int:
        return self.points.shape[1]

    @property
    def nsimplex(self) -> int:
        return len(self.simplices)

    def simplex_vertices(self, scaled: bool = False) -> np.ndarray:
        pts = self.points_scaled if scaled else self.points
        return pts[self.simplices]


def delaunay(points, rescale: bool = True, frame=None) -> Triangulation:
    """Triangulate scattered d-dimensional points.

    Requires at least d+1 affinely independent points. Degenerate simplices
    (scaled volume below threshold) are dropped and neighbor links remapped.
    `frame=(offset, scale)` forces a shared rescaling frame so circumradii
    and alpha thresholds stay comparable across related triangulations.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("points must be a 2-D array (n, d)")
    n, d = pts.shape
    if n < d + 1:
        raise DegenerateInputError(f"need at least {d + 1} points in {d}-D, got {n}")

    if frame is not None:
        offset = np.asarray(frame[0], dtype=float)
        scale = np.asarray(frame[1], dtype=float)
        if np.any(scale <= 0.0):
            raise ValueError("frame scale must be positive on every axis")
        scaled = (pts - offset) / scale
    elif rescale:
        offset = pts.min(axis=0)
        scale = pts.max(axis=0) - offset
        if np.any(scale <= 0.0):
            flat = np.nonzero(scale <= 0.0)[0].tolist()
            raise DegenerateInputError(f"zero extent along axes {flat}: points are affinely dependent")
        scaled = (pts - offset) / scale
    else:
        offset = np.zeros(d)
        scale = np.ones(d)
        scaled = pts

    try:
        qh = _SciPyDelaunay(scaled)
    except Exception as exc:  # Qhull raises its own error type
        raise DegenerateInputError(f"Delaunay triangulation failed: {exc}") from exc

    simplices = qh.simplices.copy()
    neighbors = qh.neighbors.copy()

    verts_scaled = scaled[simplices]
    vol_scaled = simplex_volume(verts_scaled)
    thresh = DEGENERACY_FACTOR * math.sqrt(d) ** d
    keep = vol_scaled > thresh
    if not np.any(keep):
        raise DegenerateInputError("all simplices degenerate: points are affinely dependent")
    if not np.all(keep):
        remap = np.full(len(simplices) + 1, -1, dtype=int)  # [-1] stays -1
        remap[:-1][keep] = np.arange(int(keep.sum()))
        simplices = simplices[keep]
        neighbors = remap[neighbors[keep]]
        vol_scaled = vol_scaled[keep]
        verts_scaled = verts_scaled[keep]

    sigma = circumradius(verts_scaled)
    volume = vol_scaled * float(np.prod(scale))
    return Triangulation(
        points=pts,
        points_scaled=scaled,
        offset=offset,
        scale=scale,
        simplices=simplices,
        neighbors=neighbors,
        sigma=sigma,
        volume_scaled=vol_scaled,
        volume=volume,
    )


@dataclass
class AlphaComplex:
    """Subset of a Delaunay triangulation keeping simplices with sigma < alpha.

    Delaunay circumspheres are empty by construction, so the alpha test
    reduces to the circumradius comparison.
    """

    parent: Triangulation
    alpha: float
    kept: np.ndarray            # indices into parent.simplices

    @property
    def simplices(self) -> np.ndarray:
        return self.parent.simplices[self.kept]

    @property
    def sigma(self) -> np.ndarray:
        return self.parent.sigma[self.kept]

    @property
    def volume(self) -> np.ndarray:
        return self.parent.volume[self.kept]

    @property
    def volume_scaled(self) -> np.ndarray:
        return self.parent.volume_scaled[self.kept]

    @property
    def nsimplex(self) -> int:
        return len(self.kept)

    def total_volume(self, scaled: bool = False) -> float:
        vols = self.volume_scaled if scaled else self.volume
        return float(vols.sum())

    def simplex_vertices(self, scaled: bool = False) -> np.ndarray:
        pts = self.parent.points_scaled if scaled else self.parent.points
        return pts[self.simplices]

    def to_json(self) -> str:
        """Debug dump for external visualization."""
        return json.dumps(
            {
                "alpha": self.alpha,
                "vertices": self.parent.points.tolist(),
                "simplices": self.simplices.tolist(),
                "sigma": self.sigma.tolist(),
                "volume": self.volume.tolist(),
            }
        )


def alpha_shape(tri: Triangulation, alpha: float) -> AlphaComplex:
    """Prune a triangulation to the simplices with circumradius below alpha."""
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    kept = np.nonzero(tri.sigma < alpha)[0]
    return AlphaComplex(parent=tri, alpha=float(alpha), kept=kept)


def nearest_neighbor_distances(points) -> np.ndarray:
    """Distance from each point to its nearest other point."""
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least 2 points")
    dist, _ = cKDTree(pts).query(pts, k=2)
    return dist[:, 1]
