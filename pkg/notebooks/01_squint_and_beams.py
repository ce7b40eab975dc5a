# %% [markdown]
# # Beam squint of a fixed phase profile
#
# A 32-element half-wavelength array is phased for 10 degrees at 24 GHz.
# Fed at any other carrier, the same phases steer the beam elsewhere.

# %%
import numpy as np

from fr3lab.array import angle_grid, beampattern, build_ula, pointing_weights
from fr3lab.squint import apparent_angle, intra_band_spread

geom = build_ula(32, 24e9)
weights = pointing_weights(geom, 10.0)

# %% [markdown]
# Closed-form peak direction against the numerical pattern peak.

# %%
grid = angle_grid(-89.99, 89.99, 0.01)
for f in (24e9, 18e9, 12e9, 6e9):
    pat = beampattern(geom, weights, f, grid)
    print(f"{f / 1e9:5.1f} GHz  closed form {apparent_angle(24e9, f, 10.0):7.3f}  numeric {pat.peak_angle:7.2f}")

# %% [markdown]
# Within one carrier the band edges squint too. Fractional bandwidth and
# pointing angle set the size of the effect.

# %%
for fc, bw in ((24e9, 400e6), (6e9, 100e6), (18e9, 300e6)):
    r = intra_band_spread(geom, 24e9, fc, bw, 10.0)
    lo, hi = r.edge_angles
    print(f"{fc / 1e9:4.0f} GHz / {bw / 1e6:3.0f} MHz: centre {r.apparent_center_angle:6.3f}, "
          f"edges {lo:6.3f} .. {hi:6.3f}, max deviation {r.max_deviation_from_center:.3f} deg")

# %%
devs = [intra_band_spread(geom, 24e9, 24e9, 400e6, t).max_deviation_from_center for t in (5, 20, 40, 60)]
print("deviation vs pointing angle:", np.round(devs, 3))
