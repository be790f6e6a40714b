"""Atmosphere and gravity models plus planet/vehicle parameter bundles.

All models are immutable after construction and vectorize over numpy
inputs. Atmosphere variants expose rho(h) and its altitude derivative;
the uncertain-atmosphere correction coefficient xi multiplies the nominal
profile: rho(h, xi) = xi * rho_hat(h).
"""

from __future__ import annotations

import csv
import os
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")
US76_TABLE_PATH = os.path.join(_DATA_DIR, "us76_density.csv")


class AltitudeRangeError(ValueError):
    """Altitude outside the model's declared validity range."""


@dataclass(frozen=True)
class PlanetParams:
    """Planet constants: radius (m), gravitational parameter (m^3/s^2),
    rotation rate (rad/s), sea-level density (kg/m^3) for heat-rate scaling."""

    Rp: float
    mu: float
    omega: float = 0.0
    rho_sl: float = 1.225

    def __post_init__(self):
        if self.Rp <= 0 or self.mu <= 0 or self.rho_sl <= 0 or self.omega < 0:
            raise ValueError("planet parameters must be positive (omega >= 0)")


@dataclass(frozen=True)
class VehicleParams:
    """Aerodynamic constants. The ballistic coefficient rides in the
    augmented state; beta_nominal only seeds scenario means."""

    CL_over_CD: float = 0.0       # three-state lift-to-drag ratio
    alpha_lift: float = 0.0       # six-state modified lift coefficient, m^2/kg
    beta_nominal: float | None = None

    def __post_init__(self):
        if self.alpha_lift < 0:
            raise ValueError("alpha_lift must be >= 0")
        if self.beta_nominal is not None and self.beta_nominal <= 0:
            raise ValueError("beta_nominal must be > 0")


# --- atmosphere variants ---


class ExponentialAtmosphere:
    """rho(h) = rho0 * exp((H2 - h) / H1); valid at all altitudes."""

    def __init__(self, rho0: float, H1: float, H2: float = 0.0):
        if rho0 <= 0 or H1 <= 0:
            raise ValueError("rho0 and H1 must be positive")
        self.rho0 = float(rho0)
        self.H1 = float(H1)
        self.H2 = float(H2)
        self.h_min = -np.inf
        self.h_max = np.inf

    def density(self, h):
        return self.rho0 * np.exp((self.H2 - np.asarray(h, dtype=float)) / self.H1)

    def ddensity_dh(self, h):
        return -self.density(h) / self.H1


class TabulatedAtmosphere:
    """C2 cubic-spline interpolation of a tabulated density profile.

    The spline runs in log density so the profile stays positive over the
    ~12 decades an entry covers; the analytic spline derivative supplies
    d rho/dh. Evaluation outside the grid clamps to the edges (the strict
    range check lives in atmosphere_density).
    """

    def __init__(self, altitude_m, density_kg_m3):
        h = np.asarray(altitude_m, dtype=float)
        rho = np.asarray(density_kg_m3, dtype=float)
        if h.ndim != 1 or h.shape != rho.shape or len(h) < 4:
            raise ValueError("need matching 1-D altitude/density arrays with >= 4 rows")
        if np.any(np.diff(h) <= 0):
            raise ValueError("altitude grid must be strictly increasing")
        if np.any(rho <= 0):
            raise ValueError("tabulated densities must be positive")
        self.h_min = float(h[0])
        self.h_max = float(h[-1])
        self._spline = CubicSpline(h, np.log(rho))
        self._dspline = self._spline.derivative()

    def density(self, h):
        hc = np.clip(np.asarray(h, dtype=float), self.h_min, self.h_max)
        return np.exp(self._spline(hc))

    def ddensity_dh(self, h):
        hc = np.clip(np.asarray(h, dtype=float), self.h_min, self.h_max)
        return self._dspline(hc) * np.exp(self._spline(hc))

    @classmethod
    def from_csv(cls, path):
        """Load a two-column CSV (altitude_m, density_kg_m3); header required."""
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [c.strip() for c in header[:2]] != ["altitude_m", "density_kg_m3"]:
                raise ValueError(
                    f"{path}: expected header 'altitude_m,density_kg_m3', got {header}"
                )
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        data = np.asarray(rows)
        return cls(data[:, 0], data[:, 1])

    @classmethod
    def us76(cls):
        """The bundled US Standard Atmosphere 1976 table (0-1000 km)."""
        return cls.from_csv(US76_TABLE_PATH)


class PolynomialExpAtmosphere:
    """rho(h) = exp(c0 + c1 h + ... + c4 h^4), h in meters.

    Fit validity is limited (Mars MSL fit: 0-130 km); outside the range the
    altitude is clamped and a warning is emitted once.
    """

    def __init__(self, coeffs, h_min: float = 0.0, h_max: float = 130e3):
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (5,):
            raise ValueError("need exactly five coefficients c0..c4")
        self._c = c
        self._poly = np.polynomial.Polynomial(c)
        self._dpoly = self._poly.deriv()
        self.h_min = float(h_min)
        self.h_max = float(h_max)
        self._warned = False

    def _clamp(self, h):
        h = np.asarray(h, dtype=float)
        if (np.any(h < self.h_min) or np.any(h > self.h_max)) and not self._warned:
            warnings.warn(
                f"altitude outside polynomial fit range [{self.h_min}, {self.h_max}] m; clamping",
                stacklevel=3,
            )
            self._warned = True
        return np.clip(h, self.h_min, self.h_max)

    def density(self, h):
        return np.exp(self._poly(self._clamp(h)))

    def ddensity_dh(self, h):
        hc = self._clamp(h)
        return self._dpoly(hc) * np.exp(self._poly(hc))


AtmosphereModel = ExponentialAtmosphere | TabulatedAtmosphere | PolynomialExpAtmosphere


def atmosphere_density(model, h, xi=1.0):
    """Density with the atmospheric correction coefficient applied.

    Returns (rho, d rho/dh, d rho/dxi) = (xi*rho_hat, xi*rho_hat', rho_hat).
    Raises AltitudeRangeError outside the model's validity range.
    """
    h = np.asarray(h, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise ValueError("xi must be positive")
    if np.any(h < model.h_min) or np.any(h > model.h_max):
        raise AltitudeRangeError(
            f"altitude outside validity range [{model.h_min}, {model.h_max}] m"
        )
    rho_hat = model.density(h)
    drho_hat = model.ddensity_dh(h)
    return xi * rho_hat, xi * drho_hat, rho_hat


# --- gravity variants ---


class InverseSquareGravity:
    """g(r) = mu / r^2, purely radial."""

    def __init__(self, mu: float):
        if mu <= 0:
            raise ValueError("mu must be positive")
        self.mu = float(mu)

    def g(self, r):
        return self.mu / np.square(np.asarray(r, dtype=float))

    def dg_dr(self, r):
        return -2.0 * self.mu / np.asarray(r, dtype=float) ** 3

    def components(self, r, phi):
        """(g_r, g_phi): radial inward magnitude and northward transverse."""
        r = np.asarray(r, dtype=float)
        return self.mu / r**2, np.zeros(np.broadcast(r, np.asarray(phi)).shape)

    def dcomponents_dphi(self, r, phi):
        shape = np.broadcast(np.asarray(r), np.asarray(phi)).shape
        return np.zeros(shape), np.zeros(shape)


class J2Gravity:
    """Axisymmetric J2 field derived from the standard zonal potential.

    g_r is the inward radial magnitude, g_phi the northward transverse
    component (negative in the northern hemisphere: pull toward the
    equator). Reduces to InverseSquareGravity when J2 = 0.
    """

    EARTH_J2 = 1.08263e-3

    def __init__(self, mu: float, J2: float, Rp: float):
        if mu <= 0 or Rp <= 0:
            raise ValueError("mu and Rp must be positive")
        self.mu = float(mu)
        self.J2 = float(J2)
        self.Rp = float(Rp)

    def g(self, r):
        """Planar (equatorial) magnitude."""
        return self.components(r, 0.0)[0]

    def dg_dr(self, r):
        """Planar (equatorial) d g/dr."""
        r = np.asarray(r, dtype=float)
        return -2.0 * self.mu / r**3 - 6.0 * self.mu * self.J2 * self.Rp**2 / r**5

    def components(self, r, phi):
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        ratio2 = (self.Rp / r) ** 2
        s = np.sin(phi)
        g_r = self.mu / r**2 * (1.0 - 1.5 * self.J2 * ratio2 * (3.0 * s**2 - 1.0))
        g_phi = -3.0 * self.mu / r**2 * self.J2 * ratio2 * s * np.cos(phi)
        return g_r, g_phi

    def dcomponents_dphi(self, r, phi):
        r = np.asarray(r, dtype=float)
        phi = np.asarray(phi, dtype=float)
        ratio2 = (self.Rp / r) ** 2
        # d g_r/dphi = 3 g_phi; d g_phi/dphi = -3 mu J2 (Rp/r)^2 cos(2 phi) / r^2
        g_phi = -3.0 * self.mu / r**2 * self.J2 * ratio2 * np.sin(phi) * np.cos(phi)
        dgr = 3.0 * g_phi
        dgphi = -3.0 * self.mu / r**2 * self.J2 * ratio2 * np.cos(2.0 * phi)
        return dgr, dgphi


GravityModel = InverseSquareGravity | J2Gravity


@dataclass(frozen=True)
class Environment:
    """Bundle of the models a dynamics flavor needs."""

    atmosphere: object
    gravity: object
    planet: PlanetParams
