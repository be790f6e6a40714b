"""Dev scratch: verify hand-structured six-state gradient-of-S forms against sympy."""
import sympy as sp

lam, phi, v, g_, chi, b, xi, r, w, a = sp.symbols(
    "lambda phi v gamma chi beta xi r omega alpha", real=True
)
rh = sp.Function("rhohat")(r)
rho = xi * rh
gr = sp.Function("g_r")(r, phi)
gp = sp.Function("g_p")(r, phi)
grp = sp.Derivative(gr, phi)
gpp = sp.Derivative(gp, phi)

sg, cg, tg = sp.sin(g_), sp.cos(g_), sp.tan(g_)
sphi, cphi, tphi = sp.sin(phi), sp.cos(phi), sp.tan(phi)
sx, cx = sp.sin(chi), sp.cos(chi)

f_lam = sx / (r * cphi * tg)
f_phi = cx / (r * tg)
f_v = -v * rho / (2 * b * sg) - (gr - gp * cx / tg) / v + (r * w**2 * cphi / v) * (
    cphi - cx * sphi / tg
)
f_gam = (
    a * rho / (2 * sg)
    - (gr + gp * cx * tg - v**2 / r) / (v**2 * tg)
    + 2 * w * sx * cphi / (v * sg)
    + (r * w**2 * cphi / v**2) * (cphi / tg + cx * sphi)
)
f_chi = (
    sx * tphi / (r * tg)
    + (2 * w / v) * (sphi / sg - cx * cphi / cg)
    + sx * (r * w**2 * sphi * cphi - gp) / (v**2 * sg * cg)
)

states = [lam, phi, v, g_, chi, b, xi]
rates = [f_lam, f_phi, f_v, f_gam, f_chi, sp.Integer(0), sp.Integer(0)]
S = -sum(sp.diff(f, x) for f, x in zip(rates, states))

s2p = 2 * sphi * cphi      # sin(2 phi)
c2p = cphi**2 - sphi**2    # cos(2 phi)
c2g = cg**2 - sg**2        # cos(2 gamma)

dA_phi = (grp - gpp * cx / tg) / v**2 + (r * w**2 / v**2) * (s2p + cx * c2p / tg)
dB_phi = grp / (v**2 * sg**2) + 2 * w * sx * sphi * cg / (v * sg**2) + r * w**2 * s2p / (
    v**2 * sg**2
)
dC_phi = cx / (r * tg * cphi**2) - 2 * w * sx * sphi / (v * cg) + cx * (
    r * w**2 * c2p - gpp
) / (v**2 * sg * cg)

dA_v = -2 * (gr - gp * cx / tg) / v**3 + 2 * (r * w**2 * cphi / v**3) * (
    cphi - cx * sphi / tg
)
dB_v = -2 * gr / (v**3 * sg**2) + 2 * w * sx * cphi * cg / (v**2 * sg**2) + 2 * r * w**2 * cphi**2 / (
    v**3 * sg**2
)
dC_v = -2 * w * sx * cphi / (v**2 * cg) - 2 * cx * (r * w**2 * sphi * cphi - gp) / (
    v**3 * sg * cg
)

dA_g = rho * cg / (2 * b * sg**2) + gp * cx / (v**2 * sg**2) - r * w**2 * cphi * cx * sphi / (
    v**2 * sg**2
)
dB_g = (
    (a * rho / 2) * (1 + cg**2) / sg**3
    - 2 * cg * (gr / v**2 - 1 / r) / sg**3
    + (2 * w * sx * cphi / v) * (1 + cg**2) / sg**3
    + 2 * r * w**2 * cphi**2 * cg / (v**2 * sg**3)
)
dC_g = (
    -cx * tphi / (r * sg**2)
    + 2 * w * sx * cphi * sg / (v * cg**2)
    - cx * (r * w**2 * sphi * cphi - gp) * c2g / (v**2 * sg**2 * cg**2)
)

dA_x = sx * (gp - r * w**2 * sphi * cphi) / (v**2 * tg)
dB_x = -2 * w * cx * cphi * cg / (v * sg**2)
dC_x = (
    -sx * tphi / (r * tg)
    + 2 * w * cx * cphi / (v * cg)
    - sx * (r * w**2 * sphi * cphi - gp) / (v**2 * sg * cg)
)

hand = {
    lam: sp.Integer(0),
    phi: -(dA_phi + dB_phi + dC_phi),
    v: -(dA_v + dB_v + dC_v),
    g_: -(dA_g + dB_g + dC_g),
    chi: -(dA_x + dB_x + dC_x),
    b: -rho / (2 * b**2 * sg),
    xi: rh / (2 * b * sg) + a * rh * cg / (2 * sg**2),
}
for x in states:
    diff = sp.simplify(sp.diff(S, x) - hand[x])
    print(f"dS/d{x} hand match:", diff == 0, "" if diff == 0 else diff)
