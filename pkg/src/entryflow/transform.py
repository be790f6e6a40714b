"""Derived-quantity distributions (dynamic pressure, stagnation heat rate,
Mach) via change of variables with Jacobian density rescaling, and
threshold / deployment-window compliance probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .marginalize import Marginal

# Detra-Kemp-Riddell constants (stagnation-enthalpy term omitted)
DKR_K = 1.99876e8          # W/m^2
DKR_REF_RADIUS = 0.3048    # m (one foot; adopted over the 0.3040 variant)
DKR_REF_VELOCITY = 7924.8  # m/s

SINGULAR_DET = 1e-300


class SpeedOfSoundRangeError(ValueError):
    """Speed-of-sound fit returned a non-positive value."""


@dataclass(frozen=True)
class DerivedQuantitySpec:
    """Vehicle/planet constants for derived-load evaluation."""

    kind: str                      # dynamic_pressure | dkr_heat_rate | mach
    nose_radius: float = 1.0       # r_n, m
    heat_factor: float = 1.0       # averaging factor F_q in (0, 1]
    rho_sl: float = 1.225          # sea-level density, kg/m^3

    def __post_init__(self):
        if self.kind not in ("dynamic_pressure", "dkr_heat_rate", "mach"):
            raise ValueError(f"unknown derived quantity {self.kind!r}")
        if self.nose_radius <= 0:
            raise ValueError("nose_radius must be positive")
        if not (0 < self.heat_factor <= 1):
            raise ValueError("heat_factor must be in (0, 1]")


class MarsSpeedOfSound:
    """Cubic altitude fit v_s(h) = c0 + c1 h + c2 h^2 + c3 h^3 (m/s, h in m)."""

    def __init__(self, c0=223.8, c1=-0.2e-3, c2=-1.588e-8, c3=1.404e-13):
        self._poly = np.polynomial.Polynomial([c0, c1, c2, c3])

    def speed(self, h):
        return self._poly(np.asarray(h, dtype=float))


def dynamic_pressure(h, v, atmosphere, xi=1.0):
    """q = 0.5 rho(h, xi) v^2 (N/m^2)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("v must be nonnegative")
    rho = np.asarray(xi, dtype=float) * atmosphere.density(h)
    return 0.5 * rho * v**2


def dkr_heat_rate(h, v, spec: DerivedQuantitySpec, atmosphere, xi=1.0):
    """Simplified Detra-Kemp-Riddell stagnation heat rate (W/m^2)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("v must be nonnegative")
    rho = np.asarray(xi, dtype=float) * atmosphere.density(h)
    return (
        spec.heat_factor
        * DKR_K
        * np.sqrt(DKR_REF_RADIUS / spec.nose_radius)
        * np.sqrt(rho / spec.rho_sl)
        * (v / DKR_REF_VELOCITY) ** 3.15
    )


def mach(h, v, speed_of_sound) -> np.ndarray | float:
    """M = v / v_s(h)."""
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("v must be nonnegative")
    vs = speed_of_sound.speed(h)
    if np.any(np.asarray(vs) <= 0):
        raise SpeedOfSoundRangeError("v_s(h) <= 0: altitude outside the fit range")
    return v / vs


def heat_rate_map(spec: DerivedQuantitySpec, atmosphere, xi=1.0):
    """(h, v) -> (v, Qdot) map plus its Jacobian determinant.

    The map keeps v, so det J = -d Qdot/dh and |det J| = |Qdot * rho'/(2 rho)|.
    """

    def apply(h, v):
        return v, dkr_heat_rate(h, v, spec, atmosphere, xi=xi)

    def det(h, v):
        q = dkr_heat_rate(h, v, spec, atmosphere, xi=xi)
        rho = atmosphere.density(h)
        drho = atmosphere.ddensity_dh(h)
        return -q * drho / (2.0 * rho)

    return apply, det


def dynamic_pressure_map(atmosphere, xi=1.0):
    """(h, v) -> (v, qbar) map plus its Jacobian determinant."""

    def apply(h, v):
        return v, dynamic_pressure(h, v, atmosphere, xi=xi)

    def det(h, v):
        return -0.5 * np.asarray(xi, dtype=float) * atmosphere.ddensity_dh(h) * np.asarray(v) ** 2

    return apply, det


def transform_density_2d(points, n, apply_map, jacobian_det):
    """Push scattered 2-D density samples through a coordinate map.

    points: (m, 2) in the source plane (e.g. (h, v)); n: densities there.
    Returns (mapped points (m, 2), n / |det J|, excluded mask) where
    excluded marks samples with |det J| below the singularity floor.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = np.asarray(n, dtype=float)
    a, b = apply_map(pts[:, 0], pts[:, 1])
    det = np.asarray(jacobian_det(pts[:, 0], pts[:, 1]), dtype=float)
    excluded = np.abs(det) < SINGULAR_DET
    out_n = np.full(len(pts), np.nan)
    out_n[~excluded] = n[~excluded] / np.abs(det[~excluded])
    return np.column_stack([np.asarray(a, dtype=float), np.asarray(b, dtype=float)]), out_n, excluded


def derived_marginal_1d(marg_hv: Marginal, quantity, n_bins: int | None = None) -> Marginal:
    """1-D marginal of a derived quantity from a 2-D (h, v) marginal.

    Each 2-D cell's probability mass moves to the derived value at the cell
    center (mass rebinning; no Jacobian needed for masses).
    """
    if len(marg_hv.axes) != 2:
        raise ValueError("need a 2-D marginal")
    e0, e1 = marg_hv.edges
    c0 = 0.5 * (e0[:-1] + e0[1:])
    c1 = 0.5 * (e1[:-1] + e1[1:])
    H, V = np.meshgrid(c0, c1, indexing="ij")
    area = np.outer(np.diff(e0), np.diff(e1))
    masses = (marg_hv.values * area).ravel()
    q = np.asarray(quantity(H.ravel(), V.ravel()), dtype=float)
    if n_bins is None:
        n_bins = max(8, int(np.sqrt(q.size)))
    pos = masses > 0
    if not np.any(pos):
        edges = np.linspace(0.0, 1.0, n_bins + 1)
        return Marginal(axes=(getattr(quantity, "__name__", "derived"),),
                        edges=(edges,), values=np.zeros(n_bins),
                        flags=np.zeros(n_bins, dtype=bool),
                        indep=marg_hv.indep, indep_name=marg_hv.indep_name)
    lo, hi = q[pos].min(), q[pos].max()
    if hi <= lo:
        hi = lo + max(abs(lo), 1.0) * 1e-12
    edges = np.linspace(lo, hi, n_bins + 1)
    hist, _ = np.histogram(q, bins=edges, weights=masses)
    values = hist / np.diff(edges)
    return Marginal(
        axes=(getattr(quantity, "__name__", "derived"),), edges=(edges,),
        values=values, flags=np.zeros(n_bins, dtype=bool),
        indep=marg_hv.indep, indep_name=marg_hv.indep_name,
        meta={"source_axes": marg_hv.axes},
    )


@dataclass
class ComplianceResult:
    """Probability of crossing a threshold or satisfying a window.

    probability is normalized by the marginal's surviving mass for window
    compliance (conditional on still flying) and raw for threshold
    crossings; raw_mass/total_mass always record both ingredients.
    """

    probability: float
    raw_mass: float
    total_mass: float
    indep: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (-1e-9 <= self.probability <= 1.0 + 1e-9):
            raise ValueError("probability must lie in [0, 1]")
        self.probability = float(min(max(self.probability, 0.0), 1.0))


def _mass_in_interval(marg: Marginal, lo: float, hi: float) -> float:
    """Mass of a 1-D marginal inside [lo, hi], partial bins prorated linearly."""
    e = marg.edges[0]
    v = marg.values
    left = np.clip(np.maximum(e[:-1], lo), None, e[1:])
    right = np.clip(np.minimum(e[1:], hi), e[:-1], None)
    overlap = np.clip(right - left, 0.0, None)
    return float(np.sum(v * overlap))


def threshold_probability(marg: Marginal, threshold: float, side: str = "above") -> ComplianceResult:
    """Raw probability mass beyond a threshold (in [0, total mass])."""
    if len(marg.axes) != 1:
        raise ValueError("threshold_probability needs a 1-D marginal")
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    e = marg.edges[0]
    total = marg.total_mass
    if side == "above":
        raw = _mass_in_interval(marg, threshold, e[-1])
    else:
        raw = _mass_in_interval(marg, e[0], threshold)
    return ComplianceResult(
        probability=min(raw, 1.0), raw_mass=raw, total_mass=total,
        indep=marg.indep, meta={"threshold": threshold, "side": side, "axis": marg.axes[0]},
    )


def parachute_velocity_window(h, atmosphere, speed_of_sound,
                              q_window=(220.0, 880.0), mach_window=(1.2, 2.2),
                              xi: float = 1.0):
    """Velocity interval where both the dynamic-pressure and Mach windows
    hold at altitude h. Empty intersection returns (nan, nan)."""
    rho = float(np.asarray(xi) * atmosphere.density(h))
    v_q = (np.sqrt(2.0 * q_window[0] / rho), np.sqrt(2.0 * q_window[1] / rho))
    vs = float(speed_of_sound.speed(h))
    if vs <= 0:
        raise SpeedOfSoundRangeError("v_s(h) <= 0: altitude outside the fit range")
    v_m = (mach_window[0] * vs, mach_window[1] * vs)
    lo, hi = max(v_q[0], v_m[0]), min(v_q[1], v_m[1])
    if hi <= lo:
        return float("nan"), float("nan")
    return lo, hi


def parachute_window_probability(v_marginal: Marginal, h, atmosphere, speed_of_sound,
                                 q_window=(220.0, 880.0), mach_window=(1.2, 2.2),
                                 xi: float = 1.0) -> ComplianceResult:
    """Probability (conditional on surviving mass) that the velocity lies
    inside the intersection of the deployment windows at altitude h."""
    lo, hi = parachute_velocity_window(h, atmosphere, speed_of_sound, q_window, mach_window, xi)
    total = v_marginal.total_mass
    if np.isnan(lo) or total <= 0.0:
        return ComplianceResult(
            probability=0.0, raw_mass=0.0, total_mass=total, indep=v_marginal.indep,
            meta={"window": (lo, hi), "altitude_m": float(h)},
        )
    raw = _mass_in_interval(v_marginal, lo, hi)
    return ComplianceResult(
        probability=min(raw / total, 1.0), raw_mass=raw, total_mass=total,
        indep=v_marginal.indep, meta={"window": (lo, hi), "altitude_m": float(h)},
    )
