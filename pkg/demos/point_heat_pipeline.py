"""Point-controlled heat: certificates at a continued-fraction actuator.

The 1-D heat equation with a point actuator is stabilizable at every rate
exactly when the actuation point is irrational; at rational points some
sine mode is invisible.  The benchmark point is built from a continued
fraction with explosively growing partial quotients, which defeats null
controllability while leaving every mode (barely) visible.  Certificate
constants come from two routes: a spectral inequality on each projection
range, and a truncated observability inequality assembled from Fattorini
distances between decaying exponentials.
"""

import math

import numpy as np

from stabcert import (WeakObsCertificate, check_certificate,
                      constants_from_spectral_inequality,
                      constants_from_truncated_obs, continued_fraction_point,
                      estimate_spectral_constant, fattorini_distance,
                      fit_semigroup_bound, pick_family_entry,
                      point_control_heat, point_heat_truncated_obs_constant,
                      spectral_projection_family, truncate)
from stabcert.lrconstants import ModeVanishesError

# --- the actuation point ----------------------------------------------------
cf = continued_fraction_point(depth=3)
print("continued-fraction actuation point:")
print("  partial quotients:", cf.partial_quotients,
      "then ln a_3 =", f"{cf.log_partial_quotients[0]:.4g}")
print("  convergents:", [str(c) for c in cf.convergents])
print(f"  float value x0 = {cf.x0:.12f}")

# --- the truncation and its projection family ------------------------------
c_shift = 5.0
spec = point_control_heat(cf.x0, c_shift, 16)
lti = truncate(spec, 16)
fam = spectral_projection_family(
    spec, cut_rule=lambda k: (k * np.pi) ** 2 - c_shift + 1e-9, k_max=6)
bound = fit_semigroup_bound(lti)
print(f"\nsemigroup envelope: M = {bound.m_big:.3f}, "
      f"delta0 = {bound.delta0:.2e}")

alpha = 2.0
k = pick_family_entry(fam, alpha)
_, m_k, alpha_k = fam.entry(k)
print(f"projection entry for alpha={alpha}: k={k}, tail rate "
      f"alpha_k={alpha_k:.3f}")

# route one: spectral inequality on the projection range
c_k = estimate_spectral_constant(spec, fam, k)
b_norm = float(np.linalg.norm(lti.b_matrix, 2))
d1, c1 = constants_from_spectral_inequality(bound, m_k, alpha_k, c_k,
                                            b_norm, alpha)
print(f"\nspectral route:      C_k={c_k:.4f} -> D={d1:.4f}, C={c1:.4f} "
      f"(valid T > 1)")

# route two: truncated observability via Fattorini distances
t0 = 0.5
rates = [(j * np.pi) ** 2 - c_shift for j in (1, 2)]
d_1 = fattorini_distance(rates, t0, 1, [2])
print(f"Fattorini distance of the slowest exponential to the next: "
      f"{d_1:.6f}")
ck_t0 = point_heat_truncated_obs_constant(cf.x0, c_shift, k, t0)
d2, c2 = constants_from_truncated_obs(bound, t0, ck_t0, m_k, alpha_k,
                                      b_norm, alpha)
print(f"truncated-obs route: C(k,T0)={ck_t0:.4f} -> D={d2:.4f}, C={c2:.4f} "
      f"(valid T >= {2 * t0})")

# both routes certify on their validity ranges
for name, d_c, c_c, t_min in (("spectral", d1, c1, 1.0 + 1e-9),
                              ("truncated-obs", d2, c2, 2 * t0)):
    for horizon in (1.0, 2.0, 4.0):
        if horizon < t_min:
            continue
        cert = WeakObsCertificate(horizon=horizon, alpha=alpha, d_const=d_c,
                                  c_const=c_c)
        res = check_certificate(lti, cert)
        print(f"  {name:>13} route at T={horizon}: {res.status}")

# --- the rational counterpoint ----------------------------------------------
try:
    point_heat_truncated_obs_constant(0.5, c_shift, 2, t0)
except ModeVanishesError as exc:
    print(f"\nrational actuation point x0=1/2 is refused: {exc}")
