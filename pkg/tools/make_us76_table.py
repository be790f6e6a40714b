#!/usr/bin/env python3
"""One-time generator for the bundled US Standard Atmosphere 1976 density table.

0-86 km geometric altitude: evaluated from the published seven-layer
geopotential temperature/pressure equations. 86-1000 km: log-linear
interpolation of the published standard-table density anchors (the upper
atmosphere's species-diffusion integration is not re-derived here; entry
trajectories accumulate negligible drag above ~120 km).

Writes src/entryflow/data/us76_density.csv (altitude_m, density_kg_m3,
0-1000 km at 1 km steps).
"""

import csv
import math
import pathlib

G0 = 9.80665          # m/s^2
R_AIR = 287.0529      # J/(kg K), R* / M0
R_EARTH_GP = 6356766.0  # m, geopotential conversion radius

# base geopotential altitude (m), lapse rate (K/m), base temperature (K)
LAYERS = [
    (0.0, -0.0065, 288.15),
    (11000.0, 0.0, 216.65),
    (20000.0, 0.001, 216.65),
    (32000.0, 0.0028, 228.65),
    (47000.0, 0.0, 270.65),
    (51000.0, -0.0028, 270.65),
    (71000.0, -0.002, 214.65),
]
P0 = 101325.0  # Pa at sea level

# published standard-table densities (geometric altitude km -> kg/m^3)
UPPER_ANCHORS = [
    (86, 6.958e-6), (90, 3.416e-6), (95, 1.393e-6), (100, 5.604e-7),
    (110, 9.708e-8), (120, 2.222e-8), (130, 8.152e-9), (140, 3.831e-9),
    (150, 2.076e-9), (160, 1.233e-9), (170, 7.815e-10), (180, 5.194e-10),
    (190, 3.581e-10), (200, 2.541e-10), (210, 1.846e-10), (220, 1.367e-10),
    (230, 1.029e-10), (240, 7.858e-11), (250, 6.073e-11), (260, 4.742e-11),
    (280, 2.971e-11), (300, 1.916e-11), (320, 1.264e-11), (340, 8.503e-12),
    (360, 5.805e-12), (380, 4.013e-12), (400, 2.803e-12), (450, 1.184e-12),
    (500, 5.215e-13), (550, 2.384e-13), (600, 1.137e-13), (650, 5.712e-14),
    (700, 3.070e-14), (750, 1.788e-14), (800, 1.136e-14), (850, 7.824e-15),
    (900, 5.759e-15), (950, 4.453e-15), (1000, 3.561e-15),
]


def _layer_pressures():
    """Base pressure of each layer from the hydrostatic recursions."""
    bases = [P0]
    for i in range(1, len(LAYERS)):
        hb, lb, tb = LAYERS[i - 1]
        h_top = LAYERS[i][0]
        p = bases[-1]
        if lb == 0.0:
            p_top = p * math.exp(-G0 * (h_top - hb) / (R_AIR * tb))
        else:
            p_top = p * (tb / (tb + lb * (h_top - hb))) ** (G0 / (R_AIR * lb))
        bases.append(p_top)
    return bases


_BASE_P = _layer_pressures()


def density_low(z_m: float) -> float:
    """US76 density for geometric altitude below 86 km."""
    h = z_m * R_EARTH_GP / (z_m + R_EARTH_GP)  # geopotential altitude
    idx = 0
    for i, (hb, _, _) in enumerate(LAYERS):
        if h >= hb:
            idx = i
    hb, lb, tb = LAYERS[idx]
    pb = _BASE_P[idx]
    if lb == 0.0:
        t = tb
        p = pb * math.exp(-G0 * (h - hb) / (R_AIR * tb))
    else:
        t = tb + lb * (h - hb)
        p = pb * (tb / t) ** (G0 / (R_AIR * lb))
    return p / (R_AIR * t)


def density_high(z_m: float) -> float:
    """Log-linear interpolation of the published upper-atmosphere anchors."""
    z_km = z_m / 1000.0
    for (z0, r0), (z1, r1) in zip(UPPER_ANCHORS, UPPER_ANCHORS[1:]):
        if z0 <= z_km <= z1:
            f = (z_km - z0) / (z1 - z0)
            return math.exp((1 - f) * math.log(r0) + f * math.log(r1))
    raise ValueError(f"altitude {z_km} km outside anchor range")


def main():
    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "entryflow" / "data" / "us76_density.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["altitude_m", "density_kg_m3"])
        for km in range(0, 1001):
            z = km * 1000.0
            rho = density_low(z) if z < 86000.0 else density_high(z)
            w.writerow([f"{z:.1f}", f"{rho:.6e}"])
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
