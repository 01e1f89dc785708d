"""File exports: trajectory CSVs, spike rasters, rate summaries, and
plot-ready columnar data with a small declarative manifest.

All floats are written with 17 significant digits so values round-trip
exactly; manifests contain no timestamps, keeping outputs byte-identical
for identical configurations and seeds.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

from .integrate import Trajectory
from .network import RasterData, compute_rates, rate_timeseries

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else _fmt(cell)
                              for cell in row) + "\n")
    return path


def export_timeseries(traj: Trajectory, path, stride: int = 1, labels=None):
    """Write a trajectory as CSV (time plus one column per state).

    Samples are decimated by ``stride``; events go to a ``*_events.csv``
    sidecar, undecimated. Returns (csv_path, events_path_or_None).
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    path = Path(path)
    n_states = traj.states.shape[1]
    if labels is None:
        labels = [f"state{i}" for i in range(n_states)]
    if len(labels) != n_states:
        raise ValueError("one label per state column required")
    idx = np.arange(0, traj.n_samples, stride)
    rows = ([traj.times[i]] + list(traj.states[i]) for i in idx)
    csv_path = _write_csv(path, ["t [s]"] + list(labels), rows)
    events_path = None
    if traj.events:
        events_path = path.with_name(path.stem + "_events.csv")
        _write_csv(events_path, ["t [s]", "tag"],
                   ([t, tag] for t, tag in traj.events))
    return csv_path, events_path


def sliding_rate(spike_times, duration: float, window: float = 0.25,
                 step: float = 0.05):
    """Sliding-window firing rate (Hz) of one spike train."""
    spike_times = np.asarray(spike_times)
    starts = np.arange(0.0, max(duration - window, step), step)
    centers = starts + window / 2.0
    rates = np.array([np.count_nonzero((spike_times >= s) & (spike_times < s + window))
                      for s in starts]) / window
    return centers, rates


def _plot_manifest(path: Path, kind, panels):
    manifest = {"kind": kind, "panels": panels}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def emit_plotdata(result, kind: str, path) -> Path:
    """Write plot-tool-agnostic columnar files plus a plot manifest.

    ``kind='traces'`` accepts a composed-synapse trajectory (writes the
    presynaptic rate, calcium, and postsynaptic rate panels) or a reduced
    4-state trajectory (single panel file). ``kind='raster'`` and
    ``kind='rates'`` accept protocol RasterData. ``path`` is a directory.
    """
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "traces":
        if not isinstance(result, Trajectory):
            raise TypeError("kind='traces' requires a Trajectory")
        if result.states.shape[1] == 9:
            duration = result.times[-1]
            panels = []
            for tag, fname, ylab in (("spike:pre", "pre_rate.csv", "rate [Hz]"),
                                     ("spike:post", "post_rate.csv", "rate [Hz]")):
                t, r = sliding_rate(result.event_times(tag), duration)
                _write_csv(out / fname, ["t [s]", ylab], zip(t, r))
                panels.append({"file": fname, "x": "t [s]", "y": ylab})
            _write_csv(out / "ca.csv", ["t [s]", "ca [uM]"],
                       zip(result.times, result.states[:, 4]))
            panels.insert(1, {"file": "ca.csv", "x": "t [s]", "y": "ca [uM]"})
            return _plot_manifest(out / "plot_manifest.json", kind, panels)
        _write_csv(out / "traces.csv",
                   ["t [s]"] + [f"state{i}" for i in range(result.states.shape[1])],
                   ([result.times[i]] + list(result.states[i])
                    for i in range(result.n_samples)))
        return _plot_manifest(out / "plot_manifest.json", kind,
                              [{"file": "traces.csv", "x": "t [s]", "y": "states"}])
    if kind == "raster":
        if not isinstance(result, RasterData):
            raise TypeError("kind='raster' requires RasterData")
        labels = result.group_labels()
        _write_csv(out / "raster.csv", ["t [s]", "neuron_id", "group"],
                   ([t, str(int(i)), labels[i]]
                    for t, i in zip(result.spike_times, result.spike_neurons)))
        return _plot_manifest(out / "plot_manifest.json", kind,
                              [{"file": "raster.csv", "x": "t [s]", "y": "neuron_id",
                                "group_by": "group"}])
    if kind == "rates":
        if not isinstance(result, RasterData):
            raise TypeError("kind='rates' requires RasterData")
        rows = []
        for name, win in result.protocol.windows().items():
            summary = compute_rates(result, win)
            for group, rate in summary.group_rates.items():
                rows.append([name, win[0], win[1], group, rate])
        _write_csv(out / "rates.csv",
                   ["window", "t0 [s]", "t1 [s]", "group", "mean_rate [Hz]"], rows)
        t, rt, rn = rate_timeseries(result)
        _write_csv(out / "rates_timeseries.csv",
                   ["t [s]", "target_rate [Hz]", "non_target_rate [Hz]"],
                   zip(t, rt, rn))
        return _plot_manifest(out / "plot_manifest.json", kind,
                              [{"file": "rates.csv", "x": "window", "y": "mean_rate [Hz]"},
                               {"file": "rates_timeseries.csv", "x": "t [s]",
                                "y": "rate [Hz]", "group_by": "group"}])
    raise ValueError(f"unknown plot kind {kind!r}")


def export_raster_csv(raster: RasterData, path) -> Path:
    """Spike list: neuron_id, time_s, group."""
    labels = raster.group_labels()
    return _write_csv(Path(path), ["neuron_id", "time [s]", "group"],
                      ([str(int(i)), t, labels[i]]
                       for t, i in zip(raster.spike_times, raster.spike_neurons)))


def export_rate_summary_json(raster: RasterData, path) -> Path:
    """Per-window group rates and separation ratios as JSON."""
    payload = {}
    for name, win in raster.protocol.windows().items():
        summary = compute_rates(raster, win)
        payload[name] = {
            "window": list(win),
            "rates_hz": summary.group_rates,
            "separation_ratio": summary.separation_ratio,
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def export_astro_traces_csv(raster: RasterData, path) -> Path:
    """Decimated per-astrocyte calcium traces, one column per astrocyte."""
    header = ["t [s]"] + [f"astro{j} ca [uM]" for j in range(raster.astro_ca.shape[1])]
    rows = ([raster.astro_times[i]] + list(raster.astro_ca[i])
            for i in range(raster.astro_times.size))
    return _write_csv(Path(path), header, rows)


def write_manifest(path, config_echo: dict, seed: int) -> Path:
    """Plain-text run manifest: resolved config, seed, library versions.

    Deliberately timestamp-free so repeated runs are byte-identical.
    """
    import yaml

    from . import __version__

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"astrosyn {__version__}",
        f"python {sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}",
        f"numpy {np.__version__}",
        f"seed {seed}",
        "config:",
        yaml.safe_dump(config_echo, sort_keys=True, default_flow_style=False).rstrip(),
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
