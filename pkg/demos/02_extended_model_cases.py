# Demo: the reduced astrocyte + firing-rate cascade under the three input
# regimes, plus the short-pulse variant.
#
# Cases 2 and 3 share the exact same astrocyte trajectory (same input), yet
# the postsynaptic rate differs by almost two orders of magnitude: weak
# gliotransmission keeps eta*I_astro below the firing threshold.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from astrosyn.reduced import run_case

cases = {
    "case1 (no input)": run_case("case1", stride=50),
    "case2 (input, strong glio)": run_case("case2", stride=50),
    "case3 (input, weak glio)": run_case("case3", stride=50),
    "pulse (0.2 s input)": run_case("pulse", stride=50),
}

fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
panels = [("ip3 [uM]", 0), ("ca [uM]", 1), ("receptor fraction", 2), ("rate [Hz]", 3)]
for ax, (label, col) in zip(axes.ravel(), panels):
    for name, traj in cases.items():
        ax.plot(traj.times, traj.states[:, col], label=name)
    ax.set_ylabel(label)
for ax in axes[1]:
    ax.set_xlabel("time [s]")
axes[0, 0].legend(fontsize=7)
fig.tight_layout()
fig.savefig("demo02_extended_cases.png", dpi=130)

for name, traj in cases.items():
    end = traj.states[-1]
    print(f"{name}: end state ip3={end[0]:.4f} ca={end[1]:.5f} "
          f"h={end[2]:.4f} rate={end[3]:.2f} Hz")
print("wrote demo02_extended_cases.png")
