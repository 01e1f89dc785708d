"""Scenario runner: dispatches a validated configuration to the matching
simulation, writes all artifact files plus a reproducibility manifest."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, ExperimentConfig, subseed
from .integrate import Trajectory, constant, pulse
from .network import build_network, protocol_for_preset, run_protocol
from .reduced import CASES, EXTENDED_LABELS, run_case
from .stability import build_stability_report
from .tripartite import TRIPARTITE_LABELS, i_astro_smooth, simulate_tripartite

PRESETS = {
    "case1": "extended model, no astrocyte stimulation",
    "case2": "extended model, persistent input, strong gliotransmission",
    "case3": "extended model, persistent input, weak (25%) gliotransmission",
    "pulse": "extended model, 0.2 s input pulse, strong gliotransmission",
    "tripartite-short": "full tripartite synapse, 0.2 s / 100 uA presynaptic stimulus",
    "tripartite-persistent": "full tripartite synapse, persistent 100 uA stimulus",
    "wm-strong": "working-memory network, strong gliotransmission, no recall cue",
    "wm-weak": "working-memory network, weak gliotransmission with recall cue",
    "wm-none": "working-memory network, gliotransmission removed",
    "stability-report": "equilibria, eigenvalues, bounds, and property verdicts",
}


def run_experiment(config: ExperimentConfig) -> list:
    """Run the configured scenario; returns the list of files written."""
    if config.scenario not in PRESETS:
        raise ConfigError(f"unknown scenario {config.scenario!r}")
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [io.write_manifest(out / "manifest.txt", config.to_dict(), config.seed)]

    if config.scenario in CASES:
        written += _run_reduced(config, out)
    elif config.scenario.startswith("tripartite"):
        written += _run_tripartite(config, out)
    elif config.scenario.startswith("wm-"):
        written += _run_wm(config, out)
    else:
        written += _run_stability(config, out)
    return written


def _run_reduced(config, out):
    traj = run_case(config.scenario, duration=config.duration,
                    dt=config.dt or 1e-3, p_astro=config.astro_params(),
                    p_rate=config.rate_params())
    written = []
    if config.exports.get("timeseries", True):
        # append the astrocytic current as a derived column
        current = np.asarray(i_astro_smooth(traj.states[:, 1]))[:, None]
        augmented = Trajectory(dt=traj.dt, times=traj.times,
                               states=np.hstack([traj.states, current]))
        paths = io.export_timeseries(augmented, out / "timeseries.csv",
                                     stride=config.stride,
                                     labels=list(EXTENDED_LABELS) + ["i_astro [uA]"])
        written += [p for p in paths if p]
    if config.exports.get("plotdata", True):
        written.append(io.emit_plotdata(traj, "traces", out / "plotdata"))
    return written


def _run_tripartite(config, out):
    opts = dict(config.tripartite)
    amplitude = float(opts.pop("i_app_amplitude", 100.0))
    t_off = opts.pop("i_app_duration", 0.2)
    eta = float(opts.pop("eta", 1.0))
    if config.scenario == "tripartite-persistent":
        stim = constant(amplitude)
    else:
        stim = pulse(amplitude, t_off=float(t_off if t_off is not None else 0.2))
    traj = simulate_tripartite(
        stim, duration=config.duration or 6.0, dt=config.dt or 1e-4, eta=eta,
        p_pre=config.neuron_params(), p_post=config.neuron_params(),
        p_astro=config.astro_params(),
        j_glu_mode=opts.pop("j_glu_mode", "sharp"),
        k_s=float(opts.pop("k_s", 0.05)),
        use_smooth_i_astro=bool(opts.pop("use_smooth_i_astro", False)),
        stride=config.stride,
    )
    written = []
    if config.exports.get("timeseries", True):
        paths = io.export_timeseries(traj, out / "timeseries.csv",
                                     labels=list(TRIPARTITE_LABELS))
        written += [p for p in paths if p]
    if config.exports.get("plotdata", True):
        written.append(io.emit_plotdata(traj, "traces", out / "plotdata"))
    return written


def _run_wm(config, out):
    topology = build_network(config.network_params())
    protocol = config.protocol_spec(dataclasses.asdict(protocol_for_preset(config.scenario)))
    raster = run_protocol(topology, protocol, dt=config.dt or 1e-4,
                          seed=subseed(config.seed, "noise"),
                          p_neuron=config.neuron_params(),
                          p_astro=config.astro_params(),
                          astro_stride=config.astro_stride)
    written = [
        io.export_raster_csv(raster, out / "spikes.csv"),
        io.export_rate_summary_json(raster, out / "rate_summary.json"),
        io.export_astro_traces_csv(raster, out / "astro_ca.csv"),
    ]
    if config.exports.get("plotdata", True):
        written.append(io.emit_plotdata(raster, "raster", out / "plotdata_raster"))
        written.append(io.emit_plotdata(raster, "rates", out / "plotdata_rates"))
    return written


def _run_stability(config, out):
    p_astro = config.astro_params()
    n_trials = int(config.stability.get("n_trials", 100))
    levels = config.stability.get("input_levels", [0.0, p_astro.a_glu])
    reports = [
        build_stability_report(p_astro, u=float(u), n_trials=n_trials,
                               seed=subseed(config.seed, f"stability:{u}"))
        for u in levels
    ]
    path = out / "stability_report.json"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump({"inputs": [r.to_dict() for r in reports]}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    return [path]
