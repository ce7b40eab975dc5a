# %% [markdown]
# # Drone tracking: 6 GHz against 24 GHz
#
# The shipped calibration places a glass blockage between 20 and 25 m that
# only hurts the upper carrier. The hybrid policy switches carriers per
# distance.

# %%
import numpy as np

from fr3lab.tracking import coverage_radius, load_paper_calibration, rmse_curve

link, regimes = load_paper_calibration()
for r in regimes:
    print(f"{r.name:11s} covers 0.1 m accuracy out to {coverage_radius(link, r, 0.1):6.2f} m")

# %%
curve = rmse_curve(link, regimes, np.arange(14.0, 28.0, 1.0))
print(f"{'d m':>5} " + " ".join(f"{r.name:>11}" for r in regimes) + "   hybrid")
for i, d in enumerate(curve.distances):
    vals = " ".join(f"{curve.rmse[r.name][i]:11.3f}" for r in regimes)
    print(f"{d:5.1f} {vals}   {curve.chosen_regime[i]}")
