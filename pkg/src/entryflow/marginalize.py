"""Marginal densities from a snapshot: axis binning, buffered extended bins,
per-bin alpha-shape triangulation, barycenter integration of the
gradient-enhanced interpolant, and the core/extended volume rescaling.

Every bin's integral follows the same recipe: triangulate the extended
(buffered) subset, prune with the bin's alpha, sum density-at-barycenter
times simplex volume, then rescale by mean(V_core, V_ext)/V_ext to map the
extended-slab integral onto the core bin.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import DegenerateInputError, alpha_shape, delaunay, nearest_neighbor_distances
from .interpolation import interp_at_barycenters
from .propagation import Snapshot

DEFAULT_BUFFER = "auto"
# The extended-bin buffer exists to let the triangulation bridge the bin
# faces, and the Eq. 23 mean-volume rescale is unbiased when the buffer is
# about one local sample spacing (the core shape undershoots each face by
# ~half a spacing, the extended shape overshoots by buffer minus half a
# spacing). "auto" therefore sets buffer = median nearest-neighbor distance
# of the rescaled active cloud, expressed in bin widths, clipped to the
# range below.
BUFFER_FRACTION_RANGE = (0.05, 1.0)


class MarginalAxisError(KeyError):
    """Requested axis is not a marginalizable (uncertain) state axis."""


class EmptyAxisRangeError(ValueError):
    """Active samples have zero extent along the binning axis."""


def default_bin_count(n_samples: int) -> int:
    """Rice-rule-like default, ceil(2 N^(1/3))."""
    return int(math.ceil(2.0 * n_samples ** (1.0 / 3.0)))


@dataclass(frozen=True)
class AlphaPolicy:
    """How each bin picks its alpha (in the bin triangulation's scaled space).

    kind "heuristic": alpha = scale * <mode of nearest-neighbor distances>.
    kind "fixed": the given alpha everywhere.
    """

    kind: str = "heuristic"
    mode: str = "mean"       # min | max | mean | median
    scale: float = 4.0
    alpha: float | None = None

    def resolve(self, scaled_points) -> float:
        if self.kind == "fixed":
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("fixed alpha policy needs alpha > 0")
            return float(self.alpha)
        if self.kind != "heuristic":
            raise ValueError(f"unknown alpha policy kind {self.kind!r}")
        from .alpha_select import alpha_heuristic

        return self.scale * alpha_heuristic(scaled_points, self.mode)


@dataclass(frozen=True)
class BinSpec:
    """Equal-width bins over one or two axes with buffered extensions.

    buffer_fraction: per-axis buffer width in units of the bin width
    (scalar applies to every axis).
    """

    axes: tuple
    n_bins: tuple
    buffer_fraction: tuple = (0.25,)

    def __post_init__(self):
        if len(self.axes) not in (1, 2) or len(self.axes) != len(self.n_bins):
            raise ValueError("BinSpec supports 1 or 2 axes with matching bin counts")
        if any(nb < 1 for nb in self.n_bins):
            raise ValueError("bin counts must be >= 1")
        buf = self.buffer_fraction
        if np.isscalar(buf):
            buf = (float(buf),) * len(self.axes)
        object.__setattr__(self, "buffer_fraction", tuple(buf))
        if len(self.buffer_fraction) != len(self.axes):
            raise ValueError("need one buffer fraction per axis")
        if any(b < 0 for b in self.buffer_fraction):
            raise ValueError("buffer fractions must be >= 0")


@dataclass
class Marginal:
    """Binned 1-D or 2-D marginal density."""

    axes: tuple
    edges: tuple                 # one edge array per axis
    values: np.ndarray           # density; shape (nb,) or (nb1, nb2)
    flags: np.ndarray            # True where the bin could not be integrated
    indep: float = 0.0
    indep_name: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def bin_measure(self) -> float:
        return float(np.prod([e[1] - e[0] for e in self.edges]))

    @property
    def total_mass(self) -> float:
        return float(self.values.sum() * self.bin_measure)

    def centers(self, axis: int = 0) -> np.ndarray:
        e = self.edges[axis]
        return 0.5 * (e[:-1] + e[1:])

    def normalized(self) -> "Marginal":
        mass = self.total_mass
        if mass <= 0:
            raise ValueError("cannot normalize a zero-mass marginal")
        return Marginal(
            axes=self.axes, edges=self.edges, values=self.values / mass,
            flags=self.flags, indep=self.indep, indep_name=self.indep_name,
            meta=dict(self.meta),
        )


def _active_data(snapshot: Snapshot):
    mask = snapshot.active & ~snapshot.failed
    if snapshot.uncertain is None:
        unc = np.ones(snapshot.states.shape[1], dtype=bool)
    else:
        unc = np.asarray(snapshot.uncertain, dtype=bool)
    idx = np.nonzero(unc)[0]
    pts = snapshot.states[mask][:, idx]
    n = snapshot.n[mask]
    grads = snapshot.grad_n[mask][:, idx]
    names = tuple(snapshot.names[i] for i in idx)
    return pts, n, grads, names


def _axis_positions(names, axes):
    pos = []
    for a in axes:
        if a not in names:
            raise MarginalAxisError(
                f"axis {a!r} is not a marginalizable axis; available: {list(names)}"
            )
        pos.append(names.index(a))
    return pos


def bin_edges(values: np.ndarray, n_bins: int) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if not hi > lo:
        raise EmptyAxisRangeError("zero range along the binning axis")
    return np.linspace(lo, hi, n_bins + 1)


def bin_slices(snapshot: Snapshot, spec: BinSpec):
    """Assign active samples to core bins and buffered extended bins.

    Returns (edges_per_axis, list of (bin index tuple, core mask, extended
    mask)). Every active sample lands in exactly one core bin; extended
    masks are supersets including the buffer zones.
    """
    pts, _, _, names = _active_data(snapshot)
    if len(pts) == 0:
        raise EmptyAxisRangeError("snapshot has no active samples")
    pos = _axis_positions(names, spec.axes)
    edges = [bin_edges(pts[:, p], nb) for p, nb in zip(pos, spec.n_bins)]

    out = []
    ranges = [range(nb) for nb in spec.n_bins]
    idx_nd = np.meshgrid(*ranges, indexing="ij")
    for flat in range(int(np.prod(spec.n_bins))):
        ids = tuple(int(g.ravel()[flat]) for g in idx_nd)
        core = np.ones(len(pts), dtype=bool)
        ext = np.ones(len(pts), dtype=bool)
        for (p, e, i, nb, buf) in zip(pos, edges, ids, spec.n_bins, spec.buffer_fraction):
            lo, hi = e[i], e[i + 1]
            width = e[1] - e[0]
            x = pts[:, p]
            upper = x <= hi if i == nb - 1 else x < hi
            core &= (x >= lo) & upper
            ext &= (x >= lo - buf * width) & (x <= hi + buf * width)
        out.append((ids, core, ext))
    return edges, out


def bin_integral(points, n, grads, core_mask, ext_mask, alpha_policy: AlphaPolicy,
                 use_gradients: bool = True):
    """Integral W(B_i) of the density over one bin (Eq. 22/23 recipe).

    Returns (W, flagged, alpha_used). Bins whose extended subset cannot be
    triangulated contribute zero and are flagged.
    """
    d = points.shape[1]
    ext_pts = points[ext_mask]
    if len(ext_pts) < d + 2:
        return 0.0, True, np.nan
    try:
        tri_ext = delaunay(ext_pts)
    except DegenerateInputError:
        return 0.0, True, np.nan
    alpha = alpha_policy.resolve(tri_ext.points_scaled)
    cx_ext = alpha_shape(tri_ext, alpha)
    if cx_ext.nsimplex == 0:
        return 0.0, True, alpha

    _, vals = interp_at_barycenters(
        cx_ext, n[ext_mask], grads[ext_mask] if use_gradients else None
    )
    w_ext = float(np.clip(vals, 0.0, None) @ cx_ext.volume)
    v_ext = cx_ext.total_volume()
    if not v_ext > 0.0:
        return 0.0, True, alpha

    v_core = 0.0
    core_pts = points[core_mask]
    if len(core_pts) >= d + 2:
        try:
            tri_core = delaunay(core_pts, frame=(tri_ext.offset, tri_ext.scale))
            v_core = alpha_shape(tri_core, alpha).total_volume()
        except DegenerateInputError:
            v_core = 0.0
    # the true bin volume lies between the core-only and extended alpha
    # shapes; their arithmetic mean rescales the extended integral (Eq. 23)
    w = w_ext * (0.5 * (v_core + v_ext)) / v_ext
    return w, False, alpha


def _resolve_buffer(pts, pos, nb_per_axis, buffer_fraction):
    """Numeric per-axis buffer fractions; 'auto' = median NN spacing of the
    unit-box-rescaled cloud, in (rescaled) bin widths."""
    if buffer_fraction != "auto" and not isinstance(buffer_fraction, str):
        return buffer_fraction
    if buffer_fraction != "auto":
        raise ValueError(f"unknown buffer mode {buffer_fraction!r}")
    lo = pts.min(axis=0)
    extent = pts.max(axis=0) - lo
    extent[extent == 0.0] = 1.0
    med_nn = float(np.median(nearest_neighbor_distances((pts - lo) / extent)))
    out = []
    for p, nb in zip(pos, nb_per_axis):
        sb_scaled = 1.0 / nb  # bin width in the axis's rescaled units
        out.append(float(np.clip(med_nn / sb_scaled, *BUFFER_FRACTION_RANGE)))
    return tuple(out)


def _marginal(snapshot: Snapshot, spec: BinSpec, alpha_policy: AlphaPolicy,
              use_gradients: bool) -> Marginal:
    pts, n, grads, names = _active_data(snapshot)
    if len(pts) < pts.shape[1] + 1:
        raise EmptyAxisRangeError(
            f"need at least d+1={pts.shape[1] + 1} active samples, got {len(pts)}"
        )
    edges, slices = bin_slices(snapshot, spec)
    values = np.zeros(spec.n_bins)
    flags = np.zeros(spec.n_bins, dtype=bool)
    alphas = np.full(spec.n_bins, np.nan)
    measure = float(np.prod([e[1] - e[0] for e in edges]))
    for ids, core, ext in slices:
        if not np.any(core):
            continue
        w, flagged, alpha = bin_integral(pts, n, grads, core, ext, alpha_policy, use_gradients)
        values[ids] = w / measure
        flags[ids] = flagged
        alphas[ids] = alpha
    return Marginal(
        axes=spec.axes,
        edges=tuple(edges),
        values=values,
        flags=flags,
        indep=snapshot.indep,
        indep_name=snapshot.indep_name,
        meta={
            "n_active": int(len(pts)),
            "alpha_policy": alpha_policy.kind,
            "alphas": alphas.tolist(),
            "buffer_fraction": spec.buffer_fraction,
            "gradient_enhanced": bool(use_gradients),
        },
    )


def marginal_1d(snapshot: Snapshot, axis: str, n_bins: int | None = None,
                alpha_policy: AlphaPolicy | None = None,
                buffer_fraction=DEFAULT_BUFFER,
                use_gradients: bool = True) -> Marginal:
    """1-D marginal density along `axis` (values = W(B_i)/s_b)."""
    pts, _, _, names = _active_data(snapshot)
    nb = n_bins if n_bins is not None else default_bin_count(len(pts))
    pos = _axis_positions(names, (axis,))
    buf = _resolve_buffer(pts, pos, (nb,), buffer_fraction)
    spec = BinSpec(axes=(axis,), n_bins=(nb,), buffer_fraction=buf)
    return _marginal(snapshot, spec, alpha_policy or AlphaPolicy(), use_gradients)


def marginal_2d(snapshot: Snapshot, axes, n_bins=None,
                alpha_policy: AlphaPolicy | None = None,
                buffer_fraction=DEFAULT_BUFFER,
                use_gradients: bool = True) -> Marginal:
    """2-D marginal density over an axis pair (values = W/bin area)."""
    pts, _, _, names = _active_data(snapshot)
    if n_bins is None:
        n_bins = default_bin_count(len(pts))
    if np.isscalar(n_bins):
        n_bins = (int(n_bins), int(n_bins))
    pos = _axis_positions(names, tuple(axes))
    buf = _resolve_buffer(pts, pos, tuple(n_bins), buffer_fraction)
    spec = BinSpec(axes=tuple(axes), n_bins=tuple(n_bins), buffer_fraction=buf)
    return _marginal(snapshot, spec, alpha_policy or AlphaPolicy(), use_gradients)


def histogram_marginal(snapshot: Snapshot, axes, n_bins=None, weight_total: int | None = None) -> Marginal:
    """Monte Carlo frequency marginal on the same Marginal container.

    Active samples carry weight 1/N0 (N0 = total sample count), so a run
    with landed samples loses mass exactly like the density route.
    """
    pts, _, _, names = _active_data(snapshot)
    axes = (axes,) if isinstance(axes, str) else tuple(axes)
    pos = _axis_positions(names, axes)
    n0 = weight_total if weight_total is not None else len(snapshot)
    if n_bins is None:
        n_bins = default_bin_count(len(pts))
    if np.isscalar(n_bins):
        n_bins = (int(n_bins),) * len(axes)
    edges = [bin_edges(pts[:, p], nb) for p, nb in zip(pos, n_bins)]
    hist, _ = np.histogramdd(pts[:, pos], bins=edges)
    measure = float(np.prod([e[1] - e[0] for e in edges]))
    values = hist / (n0 * measure)
    if len(axes) == 1:
        values = values.reshape(-1)
    return Marginal(
        axes=axes, edges=tuple(edges), values=values,
        flags=np.zeros_like(values, dtype=bool),
        indep=snapshot.indep, indep_name=snapshot.indep_name,
        meta={"n_active": int(len(pts)), "kind": "histogram"},
    )


# --- CSV persistence ---


def write_marginal_csv(marg: Marginal, path: str):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if len(marg.axes) == 1:
            e = marg.edges[0]
            w.writerow([f"{marg.axes[0]}_lo", f"{marg.axes[0]}_hi", "value", "flag"])
            for i in range(len(marg.values)):
                w.writerow([repr(e[i]), repr(e[i + 1]), repr(float(marg.values[i])),
                            int(marg.flags[i])])
        else:
            e0, e1 = marg.edges
            w.writerow([
                f"{marg.axes[0]}_lo", f"{marg.axes[0]}_hi",
                f"{marg.axes[1]}_lo", f"{marg.axes[1]}_hi", "value", "flag",
            ])
            for i in range(marg.values.shape[0]):
                for j in range(marg.values.shape[1]):
                    w.writerow([
                        repr(e0[i]), repr(e0[i + 1]), repr(e1[j]), repr(e1[j + 1]),
                        repr(float(marg.values[i, j])), int(marg.flags[i, j]),
                    ])


def read_marginal_csv(path: str) -> Marginal:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], [r for r in rows[1:] if r]
    if len(header) == 4:
        axis = header[0][:-3]
        lo = np.array([float(r[0]) for r in body])
        hi = np.array([float(r[1]) for r in body])
        values = np.array([float(r[2]) for r in body])
        flags = np.array([bool(int(r[3])) for r in body])
        edges = np.append(lo, hi[-1])
        return Marginal(axes=(axis,), edges=(edges,), values=values, flags=flags)
    ax0, ax1 = header[0][:-3], header[2][:-3]
    e0 = np.unique([float(r[0]) for r in body] + [float(r[1]) for r in body])
    e1 = np.unique([float(r[2]) for r in body] + [float(r[3]) for r in body])
    values = np.zeros((len(e0) - 1, len(e1) - 1))
    flags = np.zeros_like(values, dtype=bool)
    for r in body:
        i = int(np.searchsorted(e0, float(r[0])))
        j = int(np.searchsorted(e1, float(r[2])))
        values[i, j] = float(r[4])
        flags[i, j] = bool(int(r[5]))
    return Marginal(axes=(ax0, ax1), edges=(e0, e1), values=values, flags=flags)
