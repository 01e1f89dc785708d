# Demo: the dual-layer working-memory network under strong, weak, and no
# gliotransmission.
#
# Full scale (1296 neurons + 324 astrocytes, 4 s at dt = 0.1 ms) takes a few
# minutes; pass --quick for a small network that runs in seconds but is too
# small to show the population statistics.

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from astrosyn.network import (
    NetworkParams,
    build_network,
    compute_rates,
    protocol_for_preset,
    rate_timeseries,
    run_protocol,
)

parser = argparse.ArgumentParser()
parser.add_argument("--quick", action="store_true", help="run a 16-neuron toy network")
args = parser.parse_args()

if args.quick:
    params = NetworkParams(n_neurons=16, n_astrocytes=4, synapses_per_neuron=3, seed=1)
    proto_kwargs = {"target_set": tuple(range(5, 11)), "t_delay": 1.0, "t_recall": 0.5}
else:
    params = NetworkParams(seed=1234)
    proto_kwargs = {}

topology = build_network(params)
print(f"network: {params.n_neurons} neurons, {params.n_astrocytes} astrocytes, "
      f"{topology.pre.size} synapses")

fig, axes = plt.subplots(3, 2, figsize=(11, 9), sharex=True)
for row, preset in enumerate(("wm-strong", "wm-weak", "wm-none")):
    protocol = protocol_for_preset(preset, **proto_kwargs)
    raster = run_protocol(topology, protocol, dt=1e-4, seed=99)
    windows = protocol.windows()
    delay = compute_rates(raster, windows["delay"])
    recall = compute_rates(raster, windows["recall"])
    print(f"{preset}: delay T={delay.group_rates['target']:.1f} Hz, "
          f"NT={delay.group_rates['non_target']:.2f} Hz "
          f"(ratio {delay.separation_ratio:.1f}); recall ratio "
          f"{recall.separation_ratio:.1f}")

    tgt = raster.target_mask[raster.spike_neurons]
    ax = axes[row, 0]
    ax.plot(raster.spike_times[~tgt], raster.spike_neurons[~tgt], ".k", ms=1)
    ax.plot(raster.spike_times[tgt], raster.spike_neurons[tgt], ".r", ms=1)
    ax.set_ylabel(f"{preset}\nneuron")
    t, rt, rn = rate_timeseries(raster)
    axes[row, 1].plot(t, rt, "r", label="target")
    axes[row, 1].plot(t, rn, "k", label="non-target")
    axes[row, 1].set_ylabel("rate [Hz]")
for ax in axes[2]:
    ax.set_xlabel("time [s]")
axes[0, 1].legend()
fig.tight_layout()
fig.savefig("demo04_working_memory.png", dpi=130)
print("wrote demo04_working_memory.png")
