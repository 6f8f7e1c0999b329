# %% [markdown]
# # Gapped graphene bands
#
# `E^2 - (C_p - W)E - m(m + C_p - W) - K^2 = 0` near the Dirac points. With `W = 0`
# and `m = 0` this is the ordinary cone.

# %%
import numpy as np

from dirac_morse.graphene import (BandParams, band_surface, dirac_magnitude, dirac_point_gap,
                                  lattice_geometry, resolve_w_eval)
from dirac_morse.radial import TABLE1_PARAMS

geo = lattice_geometry(1.42)
print("|K| =", dirac_magnitude(1.42), "1/angstrom")
print(geo.dirac_points)

# %%
grid = band_surface(geo, BandParams(0.0), resolution=(64, 64))
K = np.hypot(grid.kx, grid.ky)
print("cone error:", np.abs(grid.E_plus - K).max())

# %% [markdown]
# The gap at the Dirac point depends on the Morse term's evaluation point and on the
# unit of the wavevector. None of the presets reproduces the reference gap.

# %%
for w in ("zero", "de", "lattice"):
    W = resolve_w_eval(w, TABLE1_PARAMS)
    for units in ("identity", "physical"):
        rep = dirac_point_gap(geo, BandParams(TABLE1_PARAMS.m_tilde, TABLE1_PARAMS.C_p, W, units))
        print(f"W={w:<8} {units:<9} gap={rep['gap']:.6f} deviation={rep['deviation']:.4f}")
