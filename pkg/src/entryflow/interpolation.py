"""Barycentric linear interpolation over an alpha complex, plus the
gradient-enhanced scheme that replaces nodal values with a reduced dual
Taylor expansion (order raised from 1 to 2 when exact first derivatives
are supplied).
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import AlphaComplex, DegenerateInputError, Triangulation, alpha_shape

INSIDE_TOL = 1e-10
_CHUNK = 2048


class OutsideDomainError(ValueError):
    """Query point lies in no kept simplex of the complex."""


def barycentric(simplex_vertices, x) -> np.ndarray:
    """Barycentric coordinates of x within a single d-simplex.

    Satisfies sum(lam) == 1 and lam @ vertices == x.
    """
    v = np.asarray(simplex_vertices, dtype=float)
    x = np.asarray(x, dtype=float)
    d = v.shape[1]
    T = (v[1:] - v[0]).T
    try:
        lam_rest = np.linalg.solve(T, x - v[0])
    except np.linalg.LinAlgError as exc:
        raise DegenerateInputError("degenerate simplex in barycentric solve") from exc
    lam = np.empty(d + 1)
    lam[1:] = lam_rest
    lam[0] = 1.0 - lam_rest.sum()
    return lam


def as_complex(cx) -> AlphaComplex:
    """Accept an AlphaComplex or treat a bare Triangulation as alpha = inf."""
    if isinstance(cx, AlphaComplex):
        return cx
    if isinstance(cx, Triangulation):
        return alpha_shape(cx, np.inf)
    raise TypeError(f"expected AlphaComplex or Triangulation, got {type(cx)!r}")


class SimplexLocator:
    """Vectorized point location over the kept simplices of a complex.

    Barycentric coordinates are affine-invariant, so location runs in the
    triangulation's rescaled coordinates for conditioning.
    """

    def __init__(self, cx):
        cx = as_complex(cx)
        self.cx = cx
        verts = cx.simplex_vertices(scaled=True)  # (ns, d+1, d)
        if len(verts) == 0:
            raise DegenerateInputError("complex has no kept simplices")
        self.v0 = verts[:, 0, :]
        edges = verts[:, 1:, :] - verts[:, :1, :]          # (ns, d, d) rows are edge vectors
        self.tinv = np.linalg.inv(np.swapaxes(edges, 1, 2))  # inverse of column-edge matrix
        self.offset = cx.parent.offset
        self.scale = cx.parent.scale

    def locate(self, x):
        """Return (simplex_position, lambdas) for queries x (m, d) in original coords.

        simplex_position indexes into the complex's kept list; -1 when the
        query is outside every kept simplex (lambdas still hold the best
        candidate's coordinates).
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xs = (x - self.offset) / self.scale
        m = len(xs)
        ns, d = self.v0.shape
        best_idx = np.full(m, -1, dtype=int)
        best_min = np.full(m, -np.inf)
        best_lam = np.zeros((m, d + 1))
        for lo in range(0, ns, _CHUNK):
            hi = min(lo + _CHUNK, ns)
            diff = xs[None, :, :] - self.v0[lo:hi, None, :]          # (c, m, d)
            lam_rest = np.einsum("sij,smj->smi", self.tinv[lo:hi], diff)
            lam0 = 1.0 - lam_rest.sum(axis=2, keepdims=True)
            lam = np.concatenate([lam0, lam_rest], axis=2)           # (c, m, d+1)
            lmin = lam.min(axis=2)                                   # (c, m)
            cand = lmin.argmax(axis=0)
            cand_min = lmin[cand, np.arange(m)]
            better = cand_min > best_min
            if np.any(better):
                best_min[better] = cand_min[better]
                best_idx[better] = cand[better] + lo
                best_lam[better] = lam[cand[better], np.nonzero(better)[0], :]
        inside = best_min >= -INSIDE_TOL
        best_idx[~inside] = -1
        return best_idx, best_lam


def _query(cx, x):
    """Normalize query input; returns (locator, x2d, scalar_input)."""
    loc = cx if isinstance(cx, SimplexLocator) else SimplexLocator(cx)
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    return loc, np.atleast_2d(x), scalar


def interp_linear(cx, values, x):
    """Piecewise-linear interpolation L(x) = sum_i lambda_i(x) f_i.

    `values` holds one nodal value per triangulation vertex. Scalar queries
    raise OutsideDomainError outside the complex; batched queries return NaN
    there (callers decide whether that means skip or zero).
    """
    loc, xq, scalar = _query(cx, x)
    values = np.asarray(values, dtype=float)
    idx, lam = loc.locate(xq)
    out = np.full(len(xq), np.nan)
    ok = idx >= 0
    if np.any(ok):
        verts = loc.cx.simplices[idx[ok]]  # (k, d+1)
        out[ok] = np.einsum("ki,ki->k", lam[ok], values[verts])
    if scalar:
        if not ok[0]:
            raise OutsideDomainError("query point outside the alpha complex")
        return float(out[0])
    return out


def dual_taylor_coefficients(m: int = 1, n: int = 1) -> tuple[float, float]:
    """Reduction coefficients (C_0, C_1) of the n-th order reduced dual
    Taylor expansion of the m-th kind, truncated at first derivatives."""
    if m < 1 or n < 0:
        raise ValueError("orders must satisfy m >= 1, n >= 0")
    norm = math.comb(m + n, m)
    c0 = math.comb(m + n, m) / norm
    c1 = math.comb(m + n - 1, m) / norm if n >= 1 else 0.0
    return float(c0), float(c1)


def reduced_dual_taylor(position, f, grad_f, x, m: int = 1, n: int = 1):
    """Evaluate D_x^{mn}[f] at x from nodal value(s) and first derivative(s).

    position/grad_f: (d,) or (k, d); f scalar or (k,); x: (d,).
    For m = n = 1 this is f + 0.5 * (x - position) @ grad_f.
    """
    c0, c1 = dual_taylor_coefficients(m, n)
    p = np.asarray(position, dtype=float)
    g = np.asarray(grad_f, dtype=float)
    x = np.asarray(x, dtype=float)
    dot = ((x - p) * g).sum(axis=-1)
    return c0 * np.asarray(f, dtype=float) + c1 * dot


def interp_gradient_enhanced(cx, values, grads, x, m: int = 1, n: int = 1):
    """Gradient-enhanced interpolation: nodal values are replaced by their
    reduced dual Taylor expansion toward the query point before the
    barycentric average. Exact for quadratics when exact gradients are given;
    identical to interp_linear when all gradients vanish.
    """
    loc, xq, scalar = _query(cx, x)
    values = np.asarray(values, dtype=float)
    grads = np.asarray(grads, dtype=float)
    c0, c1 = dual_taylor_coefficients(m, n)
    idx, lam = loc.locate(xq)
    out = np.full(len(xq), np.nan)
    ok = idx >= 0
    if np.any(ok):
        verts = loc.cx.simplices[idx[ok]]                      # (k, d+1)
        pos = loc.cx.parent.points[verts]                      # (k, d+1, d)
        offs = xq[ok][:, None, :] - pos
        dval = c0 * values[verts] + c1 * np.einsum("kid,kid->ki", offs, grads[verts])
        out[ok] = np.einsum("ki,ki->k", lam[ok], dval)
    if scalar:
        if not ok[0]:
            raise OutsideDomainError("query point outside the alpha complex")
        return float(out[0])
    return out


def interp_at_barycenters(cx, values, grads=None, m: int = 1, n: int = 1):
    """Interpolated density at every kept simplex barycenter.

    The barycenter of a simplex lies inside it with uniform barycentric
    weights 1/(d+1), so no point location is needed. Used by the
    marginalization integral.
    """
    cx = as_complex(cx)
    values = np.asarray(values, dtype=float)
    verts = cx.simplices                       # (ns, d+1)
    pos = cx.parent.points[verts]              # (ns, d+1, d)
    centers = pos.mean(axis=1)                 # (ns, d)
    nodal = values[verts]
    if grads is None:
        dval = nodal
    else:
        c0, c1 = dual_taylor_coefficients(m, n)
        offs = centers[:, None, :] - pos
        dval = c0 * nodal + c1 * np.einsum("kid,kid->ki", offs, np.asarray(grads, dtype=float)[verts])
    return centers, dval.mean(axis=1)
