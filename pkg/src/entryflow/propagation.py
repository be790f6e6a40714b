"""Initial-PDF sampling, characteristic propagation (state + log-density +
density-gradient), snapshot recording, and the Monte Carlo baseline.

Two integration engines share the same trajectory semantics:
  - "rk4": fixed-step classic Runge-Kutta, vectorized across the whole
    ensemble. Deterministic and bitwise reproducible; scenario default.
  - "rk45": scipy's adaptive RK45 per sample with dense output. The density
    rows integrate in a second pass over the state pass's dense output, so
    Monte Carlo and continuum state trajectories stay bit-identical.

Density is transported in log form (dlogn/ds = S = -div f) with the
gradient carried as w = grad(n)/n (dw/ds = grad S - w S), which keeps
n positive over the many decades an entry covers.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import ndtri
from scipy.stats import qmc

GROUND_TOL_M = 1e-3  # ground-impact bisection tolerance


class PropagationError(RuntimeError):
    """Every sample failed, or the run cannot proceed."""


@dataclass(frozen=True)
class InitialDistribution:
    """Gaussian initial joint PDF over the augmented state.

    Components with zero variance are fixed (not part of the uncertain
    subspace); the PDF and its gradient live on the uncertain components.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        if cov.shape != (len(mean), len(mean)):
            raise ValueError("covariance shape must match mean length")
        if not np.allclose(cov, cov.T, rtol=1e-12, atol=0.0):
            raise ValueError("covariance must be symmetric")
        if np.any(np.diag(cov) < 0):
            raise ValueError("variances must be nonnegative")
        fixed = np.diag(cov) == 0.0
        if np.any(cov[fixed][:, ~fixed] != 0.0) or np.any(cov[~fixed][:, fixed] != 0.0):
            raise ValueError("fixed components must not correlate with uncertain ones")

    @classmethod
    def from_sigmas(cls, mean, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return cls(np.asarray(mean, dtype=float), np.diag(sigma**2))

    @property
    def uncertain(self) -> np.ndarray:
        return np.diag(self.covariance) > 0.0

    def logpdf_terms(self):
        """(uncertain indices, Cholesky factor, log normalization constant)."""
        u = np.nonzero(self.uncertain)[0]
        cov_u = self.covariance[np.ix_(u, u)]
        try:
            L = np.linalg.cholesky(cov_u)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance singular on the uncertain subspace") from exc
        log_norm = -0.5 * len(u) * math.log(2.0 * math.pi) - np.log(np.diag(L)).sum()
        return u, L, log_norm

    def density_and_gradient(self, states):
        """Gaussian pdf and gradient (over the full state; zero on fixed axes)."""
        u, L, log_norm = self.logpdf_terms()
        dx = np.atleast_2d(states)[:, u] - self.mean[u]
        z = np.linalg.solve(L, dx.T).T
        n = np.exp(log_norm - 0.5 * np.einsum("ij,ij->i", z, z))
        grad = np.zeros((len(dx), len(self.mean)))
        grad[:, u] = -np.linalg.solve(L.T, z.T).T * n[:, None]
        return n, grad


@dataclass
class DensitySample:
    """One transported characteristic: state, density value, density gradient."""

    state: np.ndarray
    n: float
    grad_n: np.ndarray
    active: bool = True
    failed: bool = False


@dataclass
class Snapshot:
    """Ensemble at one value of the independent variable."""

    indep: float
    states: np.ndarray          # (N, d)
    n: np.ndarray               # (N,)
    grad_n: np.ndarray          # (N, d)
    active: np.ndarray          # samples still flying
    failed: np.ndarray          # integrator failures (inactive and excluded)
    names: tuple
    indep_name: str = "t"
    uncertain: np.ndarray | None = None   # which axes carry dispersion

    def __len__(self):
        return len(self.states)

    @property
    def n_active(self) -> int:
        return int(self.active.sum())

    def samples(self):
        for i in range(len(self.states)):
            yield DensitySample(
                state=self.states[i],
                n=float(self.n[i]),
                grad_n=self.grad_n[i],
                active=bool(self.active[i]),
                failed=bool(self.failed[i]),
            )

    def axis_index(self, axis: str) -> int:
        try:
            return self.names.index(axis)
        except ValueError:
            raise KeyError(f"axis {axis!r} not in state; available: {list(self.names)}") from None


@dataclass(frozen=True)
class IntegratorConfig:
    """Scheme, tolerances/step, snapshot schedule, termination.

    snapshots must be strictly monotone; integration runs from the first to
    the last value. terminal_altitude (meters) arms the ground-impact event
    for time-domain flavors.
    """

    snapshots: np.ndarray
    scheme: str = "rk4"
    rtol: float = 1e-9
    atol: float = 1e-9
    max_step: float = 0.02
    terminal_altitude: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "snapshots", np.asarray(self.snapshots, dtype=float))
        d = np.diff(self.snapshots)
        if len(self.snapshots) < 2 or not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("snapshot schedule must be strictly monotone with >= 2 entries")
        if self.scheme not in ("rk4", "rk45"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.rtol <= 0 or self.atol <= 0 or self.max_step <= 0:
            raise ValueError("tolerances and max_step must be positive")


def sample_initial(dist: InitialDistribution, N: int, seed, mode: str = "pseudo",
                   names=None, indep_name: str = "t", indep0: float = 0.0) -> Snapshot:
    """Draw N initial samples with their Gaussian density and gradient.

    mode "pseudo" uses the seeded generator directly; "sobol" maps a
    scrambled low-discrepancy sequence through the Gaussian inverse CDF.
    Deterministic for a fixed (seed, mode).
    """
    u, L, log_norm = dist.logpdf_terms()
    du = len(u)
    if N < len(dist.mean) + 1:
        raise ValueError(f"need at least d+1={len(dist.mean) + 1} samples, got {N}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    if mode == "pseudo":
        z = np.random.default_rng(ss).standard_normal((N, du))
    elif mode == "sobol":
        sob = qmc.Sobol(d=du, scramble=True, seed=np.random.default_rng(ss))
        uu = sob.random(N)
        uu = np.clip(uu, 1e-12, 1.0 - 1e-12)
        z = ndtri(uu)
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")

    states = np.tile(dist.mean, (N, 1))
    states[:, u] += z @ L.T
    n = np.exp(log_norm - 0.5 * np.einsum("ij,ij->i", z, z))
    grad = np.zeros((N, len(dist.mean)))
    # grad n = -Sigma^{-1} (x - mu) n = -L^{-T} z n on the uncertain axes
    grad[:, u] = -np.linalg.solve(L.T, z.T).T * n[:, None]
    if names is None:
        names = tuple(f"x{i}" for i in range(len(dist.mean)))
    return Snapshot(
        indep=float(indep0),
        states=states,
        n=n,
        grad_n=grad,
        active=np.ones(N, dtype=bool),
        failed=np.zeros(N, dtype=bool),
        names=tuple(names),
        indep_name=indep_name,
        uncertain=dist.uncertain,
    )


# --- fixed-step vectorized ensemble engine ---


def _rk4_step(fun, s, y, h):
    """One classic RK4 step; h may be per-sample (k,) for a (k, m) batch."""
    hcol = h[:, None] if np.ndim(h) else h
    k1 = fun(s, y)
    k2 = fun(s + 0.5 * h, y + 0.5 * hcol * k1)
    k3 = fun(s + 0.5 * h, y + 0.5 * hcol * k2)
    k4 = fun(s + h, y + hcol * k3)
    return y + (hcol / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _locate_crossing(fun, altitude_of, s0, y0, h_step, target):
    """Bisect the step fraction until |altitude - target| <= GROUND_TOL_M.

    y0: (k, m) pre-step states whose post-step altitude crossed the target.
    Returns the refined states at the crossing.
    """
    lo = np.zeros(len(y0))
    hi = np.ones(len(y0))
    y_hit = _rk4_step(fun, s0, y0, h_step * hi)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        y_mid = _rk4_step(fun, s0, y0, h_step * mid)
        alt = altitude_of(y_mid)
        below = alt < target
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
        y_hit = np.where(below[:, None], y_mid, y_hit)
        if np.all(np.abs(alt - target) <= GROUND_TOL_M):
            break
    return y_hit


def _propagate_rk4(snap0, dyn, cfg, with_density):
    N, d = snap0.states.shape
    sched = cfg.snapshots
    with_term = cfg.terminal_altitude is not None

    if with_density:
        n0 = snap0.n
        if np.any(n0 <= 0):
            raise PropagationError("continuum transport needs n > 0 on every sample")
        Y = np.concatenate(
            [snap0.states, np.log(n0)[:, None], snap0.grad_n / n0[:, None]], axis=1
        )
    else:
        Y = snap0.states.copy()

    def fun(s, y):
        states = y[:, :d]
        if not with_density:
            return dyn.rhs(s, states)
        f, S, gS = dyn.transport(s, states)
        out = np.empty_like(y)
        out[:, :d] = f
        out[:, d] = S
        out[:, d + 1 :] = gS - y[:, d + 1 :] * S[:, None]
        return out

    active = snap0.active.copy()
    failed = snap0.failed.copy()
    invalid0 = ~dyn.valid_mask(sched[0], snap0.states)
    failed |= invalid0
    active &= ~invalid0
    out = [_snapshot_from(Y, snap0, sched[0], active, failed, d, with_density)]

    for s_a, s_b in zip(sched[:-1], sched[1:]):
        span = s_b - s_a
        nsub = max(1, int(math.ceil(abs(span) / cfg.max_step)))
        h = span / nsub
        s = s_a
        for _ in range(nsub):
            live = active & ~failed
            if not np.any(live):
                break
            y_pre = Y[live]
            y_new = _rk4_step(fun, s, y_pre, h)
            bad = ~np.isfinite(y_new).all(axis=1)
            bad |= ~dyn.valid_mask(s + h, y_new[:, :d])
            if with_term:
                alt_new = dyn.altitude(y_new[:, :d])
                crossed = (alt_new < cfg.terminal_altitude) & ~bad
                if np.any(crossed):
                    y_new[crossed] = _locate_crossing(
                        fun, lambda yy: dyn.altitude(yy[:, :d]),
                        s, y_pre[crossed], h, cfg.terminal_altitude,
                    )
            idx = np.nonzero(live)[0]
            if np.any(bad):
                # freeze failed samples at their pre-step values
                failed[idx[bad]] = True
                active[idx[bad]] = False
                y_new[bad] = y_pre[bad]
            Y[idx] = y_new
            if with_term:
                landed = np.zeros(len(idx), dtype=bool)
                landed[~bad] = dyn.altitude(y_new[~bad][:, :d]) <= cfg.terminal_altitude + GROUND_TOL_M
                active[idx[landed]] = False
            s += h
        out.append(_snapshot_from(Y, snap0, s_b, active, failed, d, with_density))

    if np.all(failed):
        raise PropagationError("all samples failed during propagation")
    return out


def _snapshot_from(Y, snap0, s, active, failed, d, with_density):
    states = Y[:, :d].copy()
    if with_density:
        n = np.exp(Y[:, d])
        grad = Y[:, d + 1 :] * n[:, None]
    else:
        n = np.zeros(len(Y))
        grad = np.zeros_like(states)
    return Snapshot(
        indep=float(s),
        states=states,
        n=n,
        grad_n=grad.copy(),
        active=active.copy(),
        failed=failed.copy(),
        names=snap0.names,
        indep_name=snap0.indep_name,
        uncertain=snap0.uncertain,
    )


# --- adaptive per-sample engine (scipy RK45, dense output) ---


def _propagate_rk45(snap0, dyn, cfg, with_density):
    N, d = snap0.states.shape
    sched = cfg.snapshots
    s0, s_end = float(sched[0]), float(sched[-1])
    with_term = cfg.terminal_altitude is not None

    def f_state(s, y):
        return dyn.rhs(s, y[None, :])[0]

    events = None
    if with_term:
        def ground(s, y):
            return dyn.altitude(y[None, :d])[0] - cfg.terminal_altitude
        ground.terminal = True
        ground.direction = -1
        events = [ground]

    states_out = np.repeat(snap0.states[:, None, :], len(sched), axis=1)
    logn_out = np.zeros((N, len(sched)))
    w_out = np.zeros((N, len(sched), d))
    active = np.repeat(snap0.active[:, None], len(sched), axis=1)
    failed = snap0.failed.copy()

    if with_density:
        if np.any(snap0.n <= 0):
            raise PropagationError("continuum transport needs n > 0 on every sample")
        logn_out[:, 0] = np.log(snap0.n)
        w_out[:, 0, :] = snap0.grad_n / snap0.n[:, None]

    for i in range(N):
        if failed[i] or not snap0.active[i]:
            continue
        if not dyn.valid_mask(s0, snap0.states[i : i + 1])[0]:
            failed[i] = True
            active[i, :] = False
            continue
        sol = solve_ivp(
            f_state, (s0, s_end), snap0.states[i], method="RK45",
            rtol=cfg.rtol, atol=cfg.atol, dense_output=True, events=events,
        )
        if sol.status == -1:
            failed[i] = True
            active[i, :] = False
            continue
        s_term = sol.t[-1] if sol.status == 1 else s_end
        forward = s_end >= s0
        inside = (sched <= s_term) if forward else (sched >= s_term)
        states_out[i, inside, :] = sol.sol(sched[inside]).T
        y_term = sol.y[:, -1]
        states_out[i, ~inside, :] = y_term
        if sol.status == 1:
            active[i, ~inside] = False

        if with_density:
            def f_dens(s, z):
                x = sol.sol(s)[None, :d]
                S = dyn.log_density_rate(s, x)[0]
                gS = dyn.log_density_rate_gradient(s, x)[0]
                out = np.empty(d + 1)
                out[0] = S
                out[1:] = gS - z[1:] * S
                return out

            z0 = np.concatenate([[logn_out[i, 0]], w_out[i, 0]])
            dsol = solve_ivp(
                f_dens, (s0, s_term), z0, method="RK45",
                rtol=cfg.rtol, atol=cfg.atol, dense_output=True,
            )
            if dsol.status != 0:
                failed[i] = True
                active[i, :] = False
                continue
            zz = dsol.sol(np.clip(sched, min(s0, s_term), max(s0, s_term))).T
            logn_out[i] = zz[:, 0]
            w_out[i] = zz[:, 1:]

    if np.all(failed | ~snap0.active):
        raise PropagationError("all samples failed during propagation")

    out = []
    for k, s in enumerate(sched):
        n = np.exp(logn_out[:, k]) if with_density else np.zeros(N)
        grad = w_out[:, k, :] * n[:, None] if with_density else np.zeros((N, d))
        out.append(
            Snapshot(
                indep=float(s), states=states_out[:, k, :].copy(), n=n,
                grad_n=grad, active=active[:, k].copy(), failed=failed.copy(),
                names=snap0.names, indep_name=snap0.indep_name, uncertain=snap0.uncertain,
            )
        )
    return out


def propagate_continuum(snap0: Snapshot, dyn, cfg: IntegratorConfig) -> list[Snapshot]:
    """Integrate state + log-density + density-gradient for every sample and
    record the ensemble at each scheduled value of the independent variable."""
    engine = _propagate_rk4 if cfg.scheme == "rk4" else _propagate_rk45
    return engine(snap0, dyn, cfg, with_density=True)


def propagate_mc(snap0: Snapshot, dyn, cfg: IntegratorConfig) -> list[Snapshot]:
    """Monte Carlo baseline: identical trajectory semantics, density rows
    skipped (n and grad_n zeroed in the outputs)."""
    engine = _propagate_rk4 if cfg.scheme == "rk4" else _propagate_rk45
    return engine(snap0, dyn, cfg, with_density=False)


# --- snapshot persistence (one CSV per snapshot + manifest handled by caller) ---


def snapshot_filename(k: int) -> str:
    return f"snapshot_{k:04d}.csv"


def write_snapshots(dirpath, snapshots: list[Snapshot]):
    os.makedirs(dirpath, exist_ok=True)
    for k, snap in enumerate(snapshots):
        path = os.path.join(dirpath, snapshot_filename(k))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            names = list(snap.names)
            w.writerow([snap.indep_name, *names, "n", *[f"grad_{c}" for c in names],
                        "active", "failed"])
            for i in range(len(snap)):
                w.writerow(
                    [repr(snap.indep), *map(repr, snap.states[i]), repr(float(snap.n[i])),
                     *map(repr, snap.grad_n[i]), int(snap.active[i]), int(snap.failed[i])]
                )


def read_snapshots(dirpath, names=None, uncertain=None) -> list[Snapshot]:
    files = sorted(
        f for f in os.listdir(dirpath) if f.startswith("snapshot_") and f.endswith(".csv")
    )
    if not files:
        raise FileNotFoundError(f"no snapshot_*.csv files in {dirpath}")
    out = []
    for f in files:
        with open(os.path.join(dirpath, f), newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            rows = [row for row in r if row]
        indep_name = header[0]
        d = (len(header) - 4) // 2
        cols = header[1 : 1 + d]
        data = np.asarray([[float(x) for x in row] for row in rows])
        out.append(
            Snapshot(
                indep=float(data[0, 0]),
                states=data[:, 1 : 1 + d],
                n=data[:, 1 + d],
                grad_n=data[:, 2 + d : 2 + 2 * d],
                active=data[:, 2 + 2 * d].astype(bool),
                failed=data[:, 3 + 2 * d].astype(bool),
                names=tuple(cols) if names is None else tuple(names),
                indep_name=indep_name,
                uncertain=uncertain,
            )
        )
    return out
