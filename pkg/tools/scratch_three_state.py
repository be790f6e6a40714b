"""Dev scratch: symbolic check of the three-state divergence and its gradient."""
import sympy as sp

r, v, g_, b, xi, mu, Rp = sp.symbols("r v gamma beta xi mu Rp", positive=True)
rho0, H1, cLcD = sp.symbols("rho0 H1 CLCD", positive=True)

# exponential atmosphere with correction coefficient and inverse-square gravity
rho = xi * rho0 * sp.exp(-(r - Rp) / H1)
g = mu / r**2

rdot = v * sp.sin(g_)
vdot = -rho * v**2 / (2 * b) - g * sp.sin(g_)
gdot = (v / r - g / v) * sp.cos(g_) + cLcD * rho * v / (2 * b)

states = [r, v, g_, b, xi]
rates = [rdot, vdot, gdot, sp.Integer(0), sp.Integer(0)]

div = sum(sp.diff(f, x) for f, x in zip(rates, states))
S = sp.simplify(-div)
print("S = -div =", S)

# candidate closed form
S_hand = rho * v / b + sp.sin(g_) * (v / r - g / v)
print("match S:", sp.simplify(S - S_hand) == 0)

# gradient of S wrt each state variable
for x in states:
    print(f"dS/d{x} =", sp.simplify(sp.diff(S, x)))

# hand forms (rho_r = d rho/d r, written via rho itself)
rho_r = sp.diff(rho, r)
rho_xi = sp.diff(rho, xi)
gp = sp.diff(g, r)
hand = {
    r: v * rho_r / b + sp.sin(g_) * (-v / r**2 - gp / v),
    v: rho / b + sp.sin(g_) * (1 / r + g / v**2),
    g_: sp.cos(g_) * (v / r - g / v),
    b: -rho * v / b**2,
    xi: v * rho_xi / b,
}
for x in states:
    ok = sp.simplify(sp.diff(S, x) - hand[x]) == 0
    print(f"hand dS/d{x} match:", ok)
