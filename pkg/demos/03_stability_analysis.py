# Demo: stability toolkit on the astrocyte dynamics.
#
# Computes the unforced and forced equilibria with their linearization
# eigenvalues, evaluates the ultimate-bound box, and runs randomized
# positivity / boundedness checks. Also plots a few trajectories started far
# outside the box collapsing into it.

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from astrosyn import AstrocyteParams
from astrosyn.stability import (
    build_stability_report,
    check_ultimate_boundedness,
    ultimate_bound,
)
from astrosyn.tripartite import astro_rhs

p = AstrocyteParams()

for u in (0.0, 5.0):
    rep = build_stability_report(p, u=u, n_trials=20, seed=7)
    lams = ", ".join(f"{z.real:.4f}{z.imag:+.4f}j" for z in rep.eigenvalues)
    print(f"u = {u}: equilibrium (ip3, ca, h) = "
          f"({rep.equilibrium.ip3:.4f}, {rep.equilibrium.ca:.5f}, {rep.equilibrium.h:.4f})")
    print(f"        eigenvalues: {lams}")
    print(f"        residual {rep.equilibrium_residual:.1e}, "
          f"positivity={rep.positivity.passed}, boundedness={rep.boundedness.passed}")

bounds = ultimate_bound(p)
print(f"ultimate bound: ip3 <= {bounds.mu1:.2f} uM, ca <= {bounds.mu2:.2f} uM, h <= 1")

verdict = check_ultimate_boundedness(p, n_trials=50, seed=3)
print(f"50 random trajectories settle into the box by "
      f"{verdict.details['worst_settle_time']:.1f} s (mean "
      f"{verdict.details['mean_settle_time']:.1f} s)")

# a few trajectories from 3x outside the bound, integrated by hand
rng = np.random.default_rng(1)
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
dt, n = 1e-3, 90000
for _ in range(6):
    x = np.array([rng.uniform(0, 3 * bounds.mu1), rng.uniform(0, 3 * bounds.mu2),
                  rng.uniform(0, 1)])
    path = np.empty((n, 2))
    for k in range(n):
        k1 = np.array(astro_rhs(*x, 5.0, p))
        k2 = np.array(astro_rhs(*(x + 0.5 * dt * k1), 5.0, p))
        k3 = np.array(astro_rhs(*(x + 0.5 * dt * k2), 5.0, p))
        k4 = np.array(astro_rhs(*(x + dt * k3), 5.0, p))
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        path[k] = x[:2]
    ax1.plot(np.arange(n) * dt, path[:, 0], lw=0.8)
    ax2.plot(np.arange(n) * dt, path[:, 1], lw=0.8)
ax1.axhline(bounds.mu1, color="k", ls="--", label="bound")
ax2.axhline(bounds.mu2, color="k", ls="--")
ax1.set_xlabel("time [s]"); ax1.set_ylabel("ip3 [uM]"); ax1.legend()
ax2.set_xlabel("time [s]"); ax2.set_ylabel("ca [uM]")
fig.tight_layout()
fig.savefig("demo03_stability.png", dpi=130)
print("wrote demo03_stability.png")
