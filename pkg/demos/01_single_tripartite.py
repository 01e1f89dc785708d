# Demo: one tripartite synapse storing a transient stimulus.
#
# A 0.2 s, 100 uA pulse drives the presynaptic neuron. Presynaptic glutamate
# gates astrocytic IP3 production, calcium climbs over seconds, and the
# resulting astrocytic current makes the postsynaptic neuron fire long after
# the stimulus ended. A persistent stimulus is shown alongside for contrast.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from astrosyn import simulate_tripartite
from astrosyn.integrate import constant, pulse
from astrosyn.io import sliding_rate

DURATION = 6.0

runs = {
    "short stimulus (0.2 s)": simulate_tripartite(pulse(100.0, t_off=0.2),
                                                   duration=DURATION, stride=20),
    "persistent stimulus": simulate_tripartite(constant(100.0),
                                               duration=DURATION, stride=20),
}

fig, axes = plt.subplots(3, 1, figsize=(9, 8), sharex=True)
for label, traj in runs.items():
    t_pre, r_pre = sliding_rate(traj.event_times("spike:pre"), DURATION)
    t_post, r_post = sliding_rate(traj.event_times("spike:post"), DURATION)
    axes[0].plot(t_pre, r_pre, label=label)
    axes[1].plot(traj.times, traj.states[:, 4])
    axes[2].plot(t_post, r_post)
    post = traj.event_times("spike:post")
    onset = post[0] if post.size else np.nan
    print(f"{label}: {traj.event_times('spike:pre').size} pre spikes, "
          f"{post.size} post spikes, post onset at {onset:.2f} s")

axes[0].set_ylabel("presynaptic rate [Hz]")
axes[0].legend()
axes[1].set_ylabel("astrocytic Ca2+ [uM]")
axes[2].set_ylabel("postsynaptic rate [Hz]")
axes[2].set_xlabel("time [s]")
fig.tight_layout()
fig.savefig("demo01_tripartite.png", dpi=130)
print("wrote demo01_tripartite.png")
