"""Dev scratch: symbolic divergence + gradient for the radius-domain six-state system."""
import sympy as sp

lam, phi, v, g_, chi, b, xi, r, w, a = sp.symbols(
    "lambda phi v gamma chi beta xi r omega alpha", real=True
)
ghat = sp.Function("rhohat")(r)          # nominal density profile
rho = xi * ghat
gr = sp.Function("g_r")(r, phi)          # radial gravity (inward positive)
gp = sp.Function("g_p")(r, phi)          # northward transverse gravity

sg, cg, tg = sp.sin(g_), sp.cos(g_), sp.tan(g_)
sp_, cp_, tp_ = sp.sin(phi), sp.cos(phi), sp.tan(phi)
sx, cx = sp.sin(chi), sp.cos(chi)

f_lam = sx / (r * cp_ * tg)
f_phi = cx / (r * tg)
# v-row g_p sign follows the potential-consistent convention (northward positive)
f_v = -v * rho / (2 * b * sg) - (gr - gp * cx / tg) / v + (r * w**2 * cp_ / v) * (
    cp_ - cx * sp_ / tg
)
f_gam = (
    a * rho / (2 * sg)
    - (gr + gp * cx * tg - v**2 / r) / (v**2 * tg)
    + 2 * w * sx * cp_ / (v * sg)
    + (r * w**2 * cp_ / v**2) * (cp_ / tg + cx * sp_)
)
f_chi = (
    sx * tp_ / (r * tg)
    + (2 * w / v) * (sp_ / sg - cx * cp_ / cg)
    + sx * (r * w**2 * sp_ * cp_ - gp) / (v**2 * sg * cg)
)

states = [lam, phi, v, g_, chi, b, xi]
rates = [f_lam, f_phi, f_v, f_gam, f_chi, sp.Integer(0), sp.Integer(0)]

div = sum(sp.diff(f, x) for f, x in zip(rates, states))
S = -div

# hand-written divergence pieces
A = -rho / (2 * b * sg) + (gr - gp * cx / tg) / v**2 - (r * w**2 * cp_ / v**2) * (
    cp_ - cx * sp_ / tg
)
B = (
    -a * rho * cg / (2 * sg**2)
    + (gr - v**2 / r) / (v**2 * sg**2)
    - 2 * w * sx * cp_ * cg / (v * sg**2)
    - r * w**2 * cp_**2 / (v**2 * sg**2)
)
C = (
    cx * tp_ / (r * tg)
    + 2 * w * sx * cp_ / (v * cg)
    + cx * (r * w**2 * sp_ * cp_ - gp) / (v**2 * sg * cg)
)
print("div hand match:", sp.simplify(div - (A + B + C)) == 0)

# gradient of S wrt state variables
names = ["lambda", "phi", "v", "gamma", "chi", "beta", "xi"]
for x, nm in zip(states, names):
    expr = sp.simplify(sp.diff(S, x))
    print(f"--- dS/d{nm}:")
    print(sp.factor_terms(expr))
