# %% [markdown]
# # Sensing slots and waveform statistics
#
# First a small radar-as-a-service scenario: two bands, twenty slots, one
# band partly held by communication traffic.

# %%
from fr3lab.config import ScheduleBlock, schedule_objects
from fr3lab.raas import build_schedule, verify_schedule

grid, missions = schedule_objects(ScheduleBlock().resolved())
sched = build_schedule(grid, missions)
for a in sched.assignments:
    print(f"{a.node_id:15s} frame {a.frame} slots {a.first_slot}-{a.first_slot + a.n_slots - 1} band {a.band}")
print("rejections:", [(r.node_id, r.reason) for r in sched.rejections])
print("verifier:", verify_schedule(grid, missions, sched) or "clean")

# %% [markdown]
# Payload randomness and the ambiguity function. Constant-modulus symbols
# keep sidelobes steadier than high-kurtosis ones.

# %%
from fr3lab.drt import FrameLayout, af_sidelobe_stats, reference_constellation

layout = FrameLayout.comb(64, 14, 8)
for name in ("qpsk", "16qam", "64qam", "gaussian"):
    s = af_sidelobe_stats(reference_constellation(name), layout, 200, seed=1)
    print(f"{name:8s} kurtosis {s.kurtosis:.3f}  sidelobe var {s.sidelobe_variance:.3e} +/- {s.variance_stderr:.1e}")
