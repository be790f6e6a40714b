"""Right-hand sides for the augmented-state characteristic ODEs, the
state-space flow divergence that drives the density transport, and the
divergence gradient that drives the density-gradient transport.

Conventions:
  - log-density rate S = -div(f); dn/ds = S * n along a characteristic.
  - gradient rates are d/ds of dn/dx_i with n held fixed: (dS/dx_i) * n.
  - three-state flavor: y = (r, v, gamma, beta, xi), independent variable t.
  - six-state flavor: y = (lon, lat, v, gamma, chi, beta, xi), independent
    variable r (radius-domain, descending flight).

All expressions were derived symbolically offline and are pinned by the
finite-difference and sympy oracle tests (see docs/divergence_derivation.md).
Batched over states: (N, d) in, (N, d) or (N,) out.
"""

from __future__ import annotations

import numpy as np

from .environment import Environment, VehicleParams

EPS_GAMMA = 1e-6  # rad; |sin(gamma)| guard for the radius-domain flavor
EPS_PHI = 1e-6    # rad; |cos(phi)| guard near the poles


class SingularStateError(ValueError):
    """State hits a removable singularity of the equations of motion."""


class NearHorizontalError(SingularStateError):
    """|sin(gamma)| too small for radius-domain integration."""


class PolarSingularityError(SingularStateError):
    """|cos(phi)| too small: longitude rate undefined at the poles."""


def _batch(y):
    y = np.asarray(y, dtype=float)
    return (y[None, :], True) if y.ndim == 1 else (y, False)


class ThreeStateDynamics:
    """Planar entry over a non-rotating planet, time domain.

    States: radius r (m), velocity v (m/s), flight-path angle gamma (rad),
    ballistic coefficient beta (kg/m^2), atmosphere correction xi.
    """

    names = ("r", "v", "gamma", "beta", "xi")
    indep = "t"

    def __init__(self, env: Environment, veh: VehicleParams):
        self.env = env
        self.veh = veh

    # shared intermediate quantities for one batch of states
    def _terms(self, y):
        r, v, gam, beta, xi = y.T
        h = r - self.env.planet.Rp
        rho_hat = self.env.atmosphere.density(h)
        rho = xi * rho_hat
        g = self.env.gravity.g(r)
        return r, v, gam, beta, xi, rho_hat, rho, g

    def valid_mask(self, s, y):
        """Per-sample validity; invalid rows are flagged failed, not raised."""
        y2, _ = _batch(y)
        r, v, _, beta, xi = y2.T
        return np.isfinite(y2).all(axis=1) & (v > 0.0) & (r > 0.0) & (beta > 0.0) & (xi > 0.0)

    def validate(self, y):
        y2, _ = _batch(y)
        if not np.all(self.valid_mask(0.0, y2)):
            r, v, _, beta, xi = y2.T
            if np.any(v <= 0.0):
                raise SingularStateError("v must be positive (gamma-dot undefined at v = 0)")
            raise SingularStateError("r, beta, xi must be positive")

    def rhs(self, s, y):
        y2, single = _batch(y)
        r, v, gam, beta, xi, _, rho, g = self._terms(y2)
        sg, cg = np.sin(gam), np.cos(gam)
        out = np.zeros_like(y2)
        out[:, 0] = v * sg
        out[:, 1] = -rho * v**2 / (2.0 * beta) - g * sg
        out[:, 2] = (v / r - g / v) * cg + self.veh.CL_over_CD * rho * v / (2.0 * beta)
        return out[0] if single else out

    def divergence(self, s, y):
        """Trace of the state-flow Jacobian, sum_i d f_i / d y_i."""
        y2, single = _batch(y)
        r, v, gam, beta, xi, _, rho, g = self._terms(y2)
        div = -rho * v / beta - np.sin(gam) * (v / r - g / v)
        return div[0] if single else div

    def log_density_rate(self, s, y):
        """S = -div(f); dn/dt = S n."""
        return -self.divergence(s, y)

    def log_density_rate_gradient(self, s, y):
        """dS/dy_i for y = (r, v, gamma, beta, xi)."""
        y2, single = _batch(y)
        r, v, gam, beta, xi, rho_hat, rho, g = self._terms(y2)
        h = r - self.env.planet.Rp
        rho_r = xi * self.env.atmosphere.ddensity_dh(h)
        gp = self.env.gravity.dg_dr(r)
        sg, cg = np.sin(gam), np.cos(gam)
        grad = np.zeros_like(y2)
        grad[:, 0] = v * rho_r / beta - sg * (v / r**2 + gp / v)
        grad[:, 1] = rho / beta + sg * (1.0 / r + g / v**2)
        grad[:, 2] = cg * (v / r - g / v)
        grad[:, 3] = -rho * v / beta**2
        grad[:, 4] = v * rho_hat / beta
        return grad[0] if single else grad

    def transport(self, s, y):
        """(rhs, S, grad S) with shared intermediates, for the ensemble engine."""
        return (
            self.rhs(s, y),
            self.log_density_rate(s, y),
            self.log_density_rate_gradient(s, y),
        )

    def altitude(self, y):
        y2, single = _batch(y)
        h = y2[:, 0] - self.env.planet.Rp
        return h[0] if single else h


class SixStateDynamics:
    """Three-dimensional translational entry over a rotating planet with the
    radius as independent variable (descending flight, sin(gamma) < 0).

    States: longitude lon (rad), latitude lat (rad), velocity v (m/s),
    flight-path angle gamma (rad), heading chi (rad, from north toward
    east), ballistic coefficient beta (kg/m^2), atmosphere correction xi.
    """

    names = ("lon", "lat", "v", "gamma", "chi", "beta", "xi")
    indep = "r"

    def __init__(self, env: Environment, veh: VehicleParams,
                 eps_gamma: float = EPS_GAMMA, eps_phi: float = EPS_PHI):
        self.env = env
        self.veh = veh
        self.eps_gamma = float(eps_gamma)
        self.eps_phi = float(eps_phi)

    def valid_mask(self, s, y):
        y2, _ = _batch(y)
        _, phi, v, gam, _, beta, xi = y2.T
        return (
            np.isfinite(y2).all(axis=1)
            & (np.abs(np.sin(gam)) >= self.eps_gamma)
            & (np.abs(np.cos(phi)) >= self.eps_phi)
            & (v > 0.0) & (beta > 0.0) & (xi > 0.0)
        )

    def validate(self, y, r=None):
        y2, _ = _batch(y)
        _, phi, v, gam, _, beta, xi = y2.T
        if np.any(np.abs(np.sin(gam)) < self.eps_gamma):
            raise NearHorizontalError(
                f"|sin(gamma)| < {self.eps_gamma}: radius-domain parameterization breaks down"
            )
        if np.any(np.abs(np.cos(phi)) < self.eps_phi):
            raise PolarSingularityError(f"|cos(phi)| < {self.eps_phi}: polar singularity")
        if np.any(v <= 0.0) or np.any(beta <= 0.0) or np.any(xi <= 0.0):
            raise SingularStateError("v, beta, xi must be positive")

    def _terms(self, r, y):
        lon, phi, v, gam, chi, beta, xi = y.T
        h = r - self.env.planet.Rp
        rho_hat = np.broadcast_to(np.asarray(self.env.atmosphere.density(h), dtype=float), v.shape)
        rho = xi * rho_hat
        g_r, g_phi = self.env.gravity.components(r, phi)
        g_r = np.broadcast_to(np.asarray(g_r, dtype=float), v.shape)
        g_phi = np.broadcast_to(np.asarray(g_phi, dtype=float), v.shape)
        return lon, phi, v, gam, chi, beta, xi, rho_hat, rho, g_r, g_phi

    def rhs(self, r, y):
        y2, single = _batch(y)
        lon, phi, v, gam, chi, beta, xi, _, rho, g_r, g_phi = self._terms(r, y2)
        w = self.env.planet.omega
        a = self.veh.alpha_lift
        sg, cg, tg = np.sin(gam), np.cos(gam), np.tan(gam)
        sp, cp = np.sin(phi), np.cos(phi)
        sx, cx = np.sin(chi), np.cos(chi)
        out = np.zeros_like(y2)
        out[:, 0] = sx / (r * cp * tg)
        out[:, 1] = cx / (r * tg)
        out[:, 2] = (
            -v * rho / (2.0 * beta * sg)
            - (g_r - g_phi * cx / tg) / v
            + (r * w**2 * cp / v) * (cp - cx * sp / tg)
        )
        out[:, 3] = (
            a * rho / (2.0 * sg)
            - (g_r + g_phi * cx * tg - v**2 / r) / (v**2 * tg)
            + 2.0 * w * sx * cp / (v * sg)
            + (r * w**2 * cp / v**2) * (cp / tg + cx * sp)
        )
        out[:, 4] = (
            sx * np.tan(phi) / (r * tg)
            + (2.0 * w / v) * (sp / sg - cx * cp / cg)
            + sx * (r * w**2 * sp * cp - g_phi) / (v**2 * sg * cg)
        )
        return out[0] if single else out

    def divergence(self, r, y):
        """sum_i d f_i/d y_i; the lon and lat rows are divergence-free."""
        y2, single = _batch(y)
        lon, phi, v, gam, chi, beta, xi, _, rho, g_r, g_phi = self._terms(r, y2)
        w = self.env.planet.omega
        a = self.veh.alpha_lift
        sg, cg, tg = np.sin(gam), np.cos(gam), np.tan(gam)
        sp, cp = np.sin(phi), np.cos(phi)
        sx, cx = np.sin(chi), np.cos(chi)
        dfv_dv = (
            -rho / (2.0 * beta * sg)
            + (g_r - g_phi * cx / tg) / v**2
            - (r * w**2 * cp / v**2) * (cp - cx * sp / tg)
        )
        dfg_dg = (
            -a * rho * cg / (2.0 * sg**2)
            + (g_r - v**2 / r) / (v**2 * sg**2)
            - 2.0 * w * sx * cp * cg / (v * sg**2)
            - r * w**2 * cp**2 / (v**2 * sg**2)
        )
        dfx_dx = (
            cx * np.tan(phi) / (r * tg)
            + 2.0 * w * sx * cp / (v * cg)
            + cx * (r * w**2 * sp * cp - g_phi) / (v**2 * sg * cg)
        )
        div = dfv_dv + dfg_dg + dfx_dx
        return div[0] if single else div

    def log_density_rate(self, r, y):
        return -self.divergence(r, y)

    def log_density_rate_gradient(self, r, y):
        """dS/dy_i for y = (lon, lat, v, gamma, chi, beta, xi)."""
        y2, single = _batch(y)
        lon, phi, v, gam, chi, beta, xi, rho_hat, rho, g_r, g_phi = self._terms(r, y2)
        dgr_dphi, dgphi_dphi = self.env.gravity.dcomponents_dphi(r, phi)
        dgr_dphi = np.broadcast_to(np.asarray(dgr_dphi, dtype=float), v.shape)
        dgphi_dphi = np.broadcast_to(np.asarray(dgphi_dphi, dtype=float), v.shape)
        w = self.env.planet.omega
        a = self.veh.alpha_lift
        sg, cg, tg = np.sin(gam), np.cos(gam), np.tan(gam)
        sp, cp, tp = np.sin(phi), np.cos(phi), np.tan(phi)
        sx, cx = np.sin(chi), np.cos(chi)
        s2p, c2p = 2.0 * sp * cp, cp**2 - sp**2
        c2g = cg**2 - sg**2

        dA_phi = (dgr_dphi - dgphi_dphi * cx / tg) / v**2 + (r * w**2 / v**2) * (
            s2p + cx * c2p / tg
        )
        dB_phi = (
            dgr_dphi / (v**2 * sg**2)
            + 2.0 * w * sx * sp * cg / (v * sg**2)
            + r * w**2 * s2p / (v**2 * sg**2)
        )
        dC_phi = (
            cx / (r * tg * cp**2)
            - 2.0 * w * sx * sp / (v * cg)
            + cx * (r * w**2 * c2p - dgphi_dphi) / (v**2 * sg * cg)
        )

        dA_v = -2.0 * (g_r - g_phi * cx / tg) / v**3 + 2.0 * (r * w**2 * cp / v**3) * (
            cp - cx * sp / tg
        )
        dB_v = (
            -2.0 * g_r / (v**3 * sg**2)
            + 2.0 * w * sx * cp * cg / (v**2 * sg**2)
            + 2.0 * r * w**2 * cp**2 / (v**3 * sg**2)
        )
        dC_v = -2.0 * w * sx * cp / (v**2 * cg) - 2.0 * cx * (
            r * w**2 * sp * cp - g_phi
        ) / (v**3 * sg * cg)

        dA_g = (
            rho * cg / (2.0 * beta * sg**2)
            + g_phi * cx / (v**2 * sg**2)
            - r * w**2 * cp * cx * sp / (v**2 * sg**2)
        )
        dB_g = (
            (a * rho / 2.0) * (1.0 + cg**2) / sg**3
            - 2.0 * cg * (g_r / v**2 - 1.0 / r) / sg**3
            + (2.0 * w * sx * cp / v) * (1.0 + cg**2) / sg**3
            + 2.0 * r * w**2 * cp**2 * cg / (v**2 * sg**3)
        )
        dC_g = (
            -cx * tp / (r * sg**2)
            + 2.0 * w * sx * cp * sg / (v * cg**2)
            - cx * (r * w**2 * sp * cp - g_phi) * c2g / (v**2 * sg**2 * cg**2)
        )

        dA_x = sx * (g_phi - r * w**2 * sp * cp) / (v**2 * tg)
        dB_x = -2.0 * w * cx * cp * cg / (v * sg**2)
        dC_x = (
            -sx * tp / (r * tg)
            + 2.0 * w * cx * cp / (v * cg)
            - sx * (r * w**2 * sp * cp - g_phi) / (v**2 * sg * cg)
        )

        grad = np.zeros_like(y2)
        grad[:, 1] = -(dA_phi + dB_phi + dC_phi)
        grad[:, 2] = -(dA_v + dB_v + dC_v)
        grad[:, 3] = -(dA_g + dB_g + dC_g)
        grad[:, 4] = -(dA_x + dB_x + dC_x)
        grad[:, 5] = -rho / (2.0 * beta**2 * sg)
        grad[:, 6] = rho_hat / (2.0 * beta * sg) + a * rho_hat * cg / (2.0 * sg**2)
        return grad[0] if single else grad

    def transport(self, r, y):
        return (
            self.rhs(r, y),
            self.log_density_rate(r, y),
            self.log_density_rate_gradient(r, y),
        )

    def altitude(self, y, r=None):
        # altitude is a function of the independent variable, not the state
        if r is None:
            raise ValueError("six-state altitude comes from the independent variable r")
        return r - self.env.planet.Rp


# --- spec-level functional ops (validated, single state or batch) ---


def three_state_rhs(state, env: Environment, veh: VehicleParams):
    dyn = ThreeStateDynamics(env, veh)
    dyn.validate(state)
    return dyn.rhs(0.0, state)


def three_state_density_rate(state, n, env: Environment, veh: VehicleParams):
    """dn/dt = -div(f) n for density value(s) n >= 0."""
    if np.any(np.asarray(n) < 0):
        raise ValueError("n must be nonnegative")
    dyn = ThreeStateDynamics(env, veh)
    dyn.validate(state)
    return dyn.log_density_rate(0.0, state) * n


def three_state_density_gradient(state, n, env: Environment, veh: VehicleParams):
    """Rates of (dn/dr, dn/dv, dn/dgamma, dn/dbeta, dn/dxi); each ~ n."""
    if np.any(np.asarray(n) < 0):
        raise ValueError("n must be nonnegative")
    dyn = ThreeStateDynamics(env, veh)
    dyn.validate(state)
    grad = dyn.log_density_rate_gradient(0.0, state)
    return grad * np.asarray(n, dtype=float)[..., None] if np.ndim(n) else grad * n


def six_state_rhs(r, state, env: Environment, veh: VehicleParams):
    dyn = SixStateDynamics(env, veh)
    dyn.validate(state)
    return dyn.rhs(r, state)


def six_state_divergence(r, state, env: Environment, veh: VehicleParams):
    """Flow divergence for the dn/dr row: dn/dr = -divergence * n."""
    dyn = SixStateDynamics(env, veh)
    dyn.validate(state)
    return dyn.divergence(r, state)


class LinearDynamics:
    """xdot = A x transport benchmark: the density along any characteristic
    is n(t) = n0 * exp(-trace(A) t) in closed form."""

    indep = "t"

    def __init__(self, A):
        self.A = np.asarray(A, dtype=float)
        d = self.A.shape[0]
        if self.A.shape != (d, d):
            raise ValueError("A must be square")
        self.names = tuple(f"x{i}" for i in range(d))
        self._trace = float(np.trace(self.A))

    def validate(self, y):
        pass

    def valid_mask(self, s, y):
        y2, _ = _batch(y)
        return np.isfinite(y2).all(axis=1)

    def rhs(self, s, y):
        y2, single = _batch(y)
        out = y2 @ self.A.T
        return out[0] if single else out

    def divergence(self, s, y):
        y2, single = _batch(y)
        div = np.full(len(y2), self._trace)
        return div[0] if single else div

    def log_density_rate(self, s, y):
        return -self.divergence(s, y)

    def log_density_rate_gradient(self, s, y):
        y2, single = _batch(y)
        grad = np.zeros_like(y2)
        return grad[0] if single else grad

    def transport(self, s, y):
        return self.rhs(s, y), self.log_density_rate(s, y), self.log_density_rate_gradient(s, y)
