"""Dual-layer working-memory network: a neuron grid wired by
distance-biased synapses, an astrocyte grid coupled by gap junctions, and
the stimulation / delay / recall protocol with rate statistics.

Geometry: neurons on a square grid, astrocytes on a half-resolution grid,
each astrocyte owning the 2x2 neuron block beneath it. Gap junctions are
4-neighborhood grid adjacency (degree 2 at corners, 3 at edges, 4 inside).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrate import IntegrationError
from .tripartite import MS_PER_S, ASTRO_REST, AstrocyteParams, NeuronParams, astro_rhs

RATE_FLOOR = 0.5  # Hz; keeps separation ratios decidable when a group is silent


@dataclass(frozen=True)
class NetworkParams:
    """Dual-layer topology constants (defaults: 36x36 neurons over an 18x18
    astrocyte grid, 28 outgoing synapses per neuron, 80% excitatory)."""

    n_neurons: int = 1296
    n_astrocytes: int = 324
    synapses_per_neuron: int = 28   # outgoing synapses drawn per neuron
    spatial_scale: float = 5.0      # grid-distance scale of exp(-r/scale)
    gap_junction_min: int = 2
    gap_junction_max: int = 4
    ei_ratio: float = 4.0           # excitatory:inhibitory count ratio
    seed: int = 0

    def __post_init__(self):
        if self.n_neurons != 4 * self.n_astrocytes:
            raise ValueError("n_neurons must equal 4 * n_astrocytes")
        for name in ("n_neurons", "n_astrocytes"):
            n = getattr(self, name)
            if math.isqrt(n) ** 2 != n:
                raise ValueError(f"{name} must be a perfect square")
        if self.synapses_per_neuron < 1 or self.synapses_per_neuron >= self.n_neurons:
            raise ValueError("synapses_per_neuron out of range")
        if self.spatial_scale <= 0 or self.ei_ratio <= 0:
            raise ValueError("spatial_scale and ei_ratio must be positive")

    @property
    def side(self) -> int:
        return math.isqrt(self.n_neurons)

    @property
    def astro_side(self) -> int:
        return math.isqrt(self.n_astrocytes)

    @property
    def n_inhibitory(self) -> int:
        return int(self.n_neurons / (self.ei_ratio + 1.0))


@dataclass
class NetworkTopology:
    """Wiring produced by build_network; fully determined by the seed."""

    params: NetworkParams
    positions: np.ndarray       # (N, 2) neuron grid coordinates (row, col)
    pre: np.ndarray             # (E,) presynaptic neuron per directed edge
    post: np.ndarray            # (E,) postsynaptic neuron per directed edge
    is_excitatory: np.ndarray   # (N,) bool
    owned: np.ndarray           # (A, 4) neuron indices per astrocyte domain
    gap_edges: np.ndarray       # (M, 2) undirected astrocyte pairs
    astro_neighbors: np.ndarray  # (A, 4) neighbor indices padded with self

    @property
    def n_neurons(self) -> int:
        return self.params.n_neurons

    @property
    def n_astrocytes(self) -> int:
        return self.params.n_astrocytes

    def astro_of_neuron(self) -> np.ndarray:
        owner = np.empty(self.n_neurons, dtype=np.int64)
        owner[self.owned.ravel()] = np.repeat(np.arange(self.n_astrocytes), 4)
        return owner

    def gap_degrees(self) -> np.ndarray:
        return np.bincount(self.gap_edges.ravel(), minlength=self.n_astrocytes)


def build_network(p: NetworkParams) -> NetworkTopology:
    """Construct the dual-layer topology.

    Out-synapse targets are sampled without replacement with probability
    proportional to exp(-r/spatial_scale), r the Euclidean grid distance
    (self-connections excluded). A random 1/(ei_ratio+1) fraction of neurons
    is inhibitory.
    """
    rng = np.random.default_rng(p.seed)
    side = p.side
    rows, cols = np.divmod(np.arange(p.n_neurons), side)
    positions = np.stack([rows, cols], axis=1)

    diff = positions[:, None, :] - positions[None, :, :]
    weights = np.exp(-np.sqrt((diff ** 2).sum(axis=2)) / p.spatial_scale)
    np.fill_diagonal(weights, 0.0)

    pre = np.repeat(np.arange(p.n_neurons), p.synapses_per_neuron)
    post = np.empty(p.n_neurons * p.synapses_per_neuron, dtype=np.int64)
    k = p.synapses_per_neuron
    for i in range(p.n_neurons):
        prob = weights[i] / weights[i].sum()
        post[i * k:(i + 1) * k] = rng.choice(p.n_neurons, size=k, replace=False, p=prob)

    is_excitatory = np.ones(p.n_neurons, dtype=bool)
    is_excitatory[rng.choice(p.n_neurons, size=p.n_inhibitory, replace=False)] = False

    aside = p.astro_side
    arows, acols = np.divmod(np.arange(p.n_astrocytes), aside)
    base = 2 * arows * side + 2 * acols
    owned = np.stack([base, base + 1, base + side, base + side + 1], axis=1)

    edges = []
    for a in range(p.n_astrocytes):
        r, c = arows[a], acols[a]
        if r + 1 < aside:
            edges.append((a, (r + 1) * aside + c))
        if c + 1 < aside:
            edges.append((a, r * aside + c + 1))
    gap_edges = np.array(edges, dtype=np.int64)

    neighbors = np.tile(np.arange(p.n_astrocytes)[:, None], (1, 4))
    fill = np.zeros(p.n_astrocytes, dtype=np.int64)
    for a, b in gap_edges:
        neighbors[a, fill[a]] = b
        fill[a] += 1
        neighbors[b, fill[b]] = a
        fill[b] += 1

    topo = NetworkTopology(params=p, positions=positions, pre=pre, post=post,
                           is_excitatory=is_excitatory, owned=owned,
                           gap_edges=gap_edges, astro_neighbors=neighbors)
    degrees = topo.gap_degrees()
    if degrees.min() < p.gap_junction_min or degrees.max() > p.gap_junction_max:
        raise ValueError("gap-junction degrees violate the configured range")
    return topo


def astro_coupling_terms(states, topology, p: AstrocyteParams):
    """Diffusive gap-junction increments (d_ip3, d_ca), one per astrocyte.

    ``states`` is (A, 3); ``topology`` is a NetworkTopology or a raw (M, 2)
    undirected edge array. The pairwise exchange is antisymmetric, so the
    increments sum to zero over the population.
    """
    states = np.asarray(states, dtype=float)
    edges = topology.gap_edges if isinstance(topology, NetworkTopology) else np.asarray(topology)
    n = states.shape[0]
    ip3, ca = states[:, 0], states[:, 1]
    a, b = edges[:, 0], edges[:, 1]
    d_ip3 = np.zeros(n)
    d_ca = np.zeros(n)
    flux_ip3 = ip3[b] - ip3[a]
    flux_ca = ca[b] - ca[a]
    np.add.at(d_ip3, a, flux_ip3)
    np.add.at(d_ip3, b, -flux_ip3)
    np.add.at(d_ca, a, flux_ca)
    np.add.at(d_ca, b, -flux_ca)
    return p.d_ip3 * d_ip3, p.d_ca * d_ca


@dataclass(frozen=True)
class ProtocolSpec:
    """Stimulation / delay / recall schedule and input amplitudes."""

    t_stim: float = 0.2           # s
    t_delay: float = 2.8          # s
    t_recall: float = 1.0         # s
    target_set: tuple = ()        # empty -> central 6x6 patch
    stim_amplitude: float = 100.0  # uA, target drive during stimulation
    cue_amplitude: float = 2.5    # uA, population drive during recall
    cue_noise_sd: float = 1.0     # uA, per-step Gaussian noise on the cue
    eta: float = 1.0              # gliotransmission strength
    apply_cue: bool = True        # strong-gliotransmission preset runs cueless

    def __post_init__(self):
        if min(self.t_stim, self.t_delay, self.t_recall) <= 0:
            raise ValueError("all protocol durations must be positive")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    @property
    def duration(self) -> float:
        return self.t_stim + self.t_delay + self.t_recall

    def windows(self) -> dict:
        t1 = self.t_stim
        t2 = self.t_stim + self.t_delay
        return {"stim": (0.0, t1), "delay": (t1, t2), "recall": (t2, self.duration)}

    def resolve_targets(self, params: NetworkParams) -> np.ndarray:
        if self.target_set:
            targets = np.asarray(sorted(self.target_set), dtype=np.int64)
            if targets.size == 0 or targets.min() < 0 or targets.max() >= params.n_neurons:
                raise ValueError("target_set indices out of range")
            return targets
        side = params.side
        lo = side // 2 - 3
        rows, cols = np.divmod(np.arange(params.n_neurons), side)
        patch = (rows >= lo) & (rows < lo + 6) & (cols >= lo) & (cols < lo + 6)
        return np.flatnonzero(patch)


@dataclass
class RasterData:
    """Spike events plus decimated astrocyte traces from one protocol run."""

    spike_times: np.ndarray     # s
    spike_neurons: np.ndarray   # neuron index per spike
    target_mask: np.ndarray     # (N,) bool
    astro_times: np.ndarray     # s, decimated
    astro_ca: np.ndarray        # (n_samples, A) uM
    protocol: ProtocolSpec
    dt: float
    duration: float

    def __post_init__(self):
        if self.spike_times.size and (
                self.spike_times.min() < 0 or self.spike_times.max() > self.duration + 1e-12):
            raise ValueError("spike times outside the protocol duration")

    @property
    def n_neurons(self) -> int:
        return self.target_mask.size

    def group_labels(self) -> np.ndarray:
        return np.where(self.target_mask, "target", "non_target")


def run_protocol(topology: NetworkTopology, protocol: ProtocolSpec,
                 dt: float = 1e-4, seed: int = 0,
                 p_neuron: NeuronParams | None = None,
                 p_astro: AstrocyteParams | None = None,
                 astro_stride: int = 100) -> RasterData:
    """Integrate the full dual-layer network through the protocol.

    Per step: neurons advance by RK4 with synaptic/astrocytic inputs held
    from the previous step, spike resets apply, the glutamate and synaptic
    gating re-evaluate, then astrocytes advance by RK4 (gap coupling inside
    the stage derivatives, per-domain glutamate input held). An astrocyte's
    IP3 production fires when any owned excitatory neuron's glutamate
    exceeds the gate threshold; its eta-scaled current is delivered equally
    to the four owned neurons.
    """
    pn = p_neuron or NeuronParams()
    pa = p_astro or AstrocyteParams()
    par = topology.params
    N, A = par.n_neurons, par.n_astrocytes
    rng = np.random.default_rng(seed)

    targets = protocol.resolve_targets(par)
    target_mask = np.zeros(N, dtype=bool)
    target_mask[targets] = True

    V = np.full(N, -70.0)
    U = np.full(N, -14.0)
    G = np.zeros(N)
    ax1 = np.full(A, ASTRO_REST.ip3)
    ax2 = np.full(A, ASTRO_REST.ca)
    ax3 = np.full(A, ASTRO_REST.h)

    release = np.zeros(N)
    i_syn_in = np.zeros(N)
    i_astro_in = np.zeros(N)
    u_astro = np.zeros(A)

    edge_pre = topology.pre
    edge_post = topology.post
    edge_rev = np.where(topology.is_excitatory[edge_pre], pn.e_syn_exc, pn.e_syn_inh)
    owned = topology.owned
    owned_exc = topology.is_excitatory[owned]
    nbr = topology.astro_neighbors
    owner_flat = owned.ravel()

    a_c, b_c, c_c, d_c = pn.a, pn.b, pn.c, pn.d
    alpha_glu, k_glu, thr = pn.alpha_glu, pn.k_glu, pn.spike_threshold
    eta_syn, inv_ks = pn.eta_syn, 1.0 / pn.k_syn
    a_glu, g_thr = pa.a_glu, pa.g_thr
    d_ip3_c, d_ca_c = pa.d_ip3, pa.d_ca
    eta = protocol.eta

    n_stim = int(round(protocol.t_stim / dt))
    n_delay_end = int(round((protocol.t_stim + protocol.t_delay) / dt))
    n_steps = int(round(protocol.duration / dt))

    def astro_deriv(x1, x2, x3):
        da1, da2, da3 = astro_rhs(x1, x2, x3, u_astro, pa)
        da1 = da1 + d_ip3_c * (x1[nbr].sum(axis=1) - 4.0 * x1)
        da2 = da2 + d_ca_c * (x2[nbr].sum(axis=1) - 4.0 * x2)
        return da1, da2, da3

    spike_t, spike_i = [], []
    astro_times, astro_ca = [0.0], [ax2.copy()]

    for i in range(n_steps):
        if i < n_stim:
            i_ext = np.zeros(N)
            i_ext[targets] = protocol.stim_amplitude
        elif i >= n_delay_end and protocol.apply_cue:
            i_ext = protocol.cue_amplitude \
                + protocol.cue_noise_sd * rng.standard_normal(N)
        else:
            i_ext = 0.0
        i_total = i_ext + i_syn_in + i_astro_in

        def ndot(v, u, g):
            return (MS_PER_S * (0.04 * v * v + 5.0 * v - u + 140.0 + i_total),
                    MS_PER_S * a_c * (b_c * v - u),
                    -alpha_glu * g + k_glu * release)

        kv1, ku1, kg1 = ndot(V, U, G)
        kv2, ku2, kg2 = ndot(V + 0.5 * dt * kv1, U + 0.5 * dt * ku1, G + 0.5 * dt * kg1)
        kv3, ku3, kg3 = ndot(V + 0.5 * dt * kv2, U + 0.5 * dt * ku2, G + 0.5 * dt * kg2)
        kv4, ku4, kg4 = ndot(V + dt * kv3, U + dt * ku3, G + dt * kg3)
        V = V + dt / 6.0 * (kv1 + 2 * kv2 + 2 * kv3 + kv4)
        U = U + dt / 6.0 * (ku1 + 2 * ku2 + 2 * ku3 + ku4)
        G = G + dt / 6.0 * (kg1 + 2 * kg2 + 2 * kg3 + kg4)
        if not np.isfinite(V).all():
            raise _phase_error(i, n_stim, n_delay_end, dt)

        spiked = V >= thr
        if spiked.any():
            idx = np.flatnonzero(spiked)
            spike_i.append(idx)
            spike_t.append(np.full(idx.size, (i + 1) * dt))
            V[idx] = c_c
            U[idx] += d_c
        release = spiked.astype(float)

        # couplings for the next step
        gate = 0.5 * (1.0 + np.tanh(0.5 * inv_ks * V))
        gw = gate[edge_pre]
        acc_rev = np.bincount(edge_post, weights=edge_rev * gw, minlength=N)
        acc_gate = np.bincount(edge_post, weights=gw, minlength=N)
        i_syn_in = eta_syn * (acc_rev - V * acc_gate)
        u_astro = a_glu * ((G[owned] >= g_thr) & owned_exc).any(axis=1).astype(float)

        ka1 = astro_deriv(ax1, ax2, ax3)
        ka2 = astro_deriv(ax1 + 0.5 * dt * ka1[0], ax2 + 0.5 * dt * ka1[1], ax3 + 0.5 * dt * ka1[2])
        ka3 = astro_deriv(ax1 + 0.5 * dt * ka2[0], ax2 + 0.5 * dt * ka2[1], ax3 + 0.5 * dt * ka2[2])
        ka4 = astro_deriv(ax1 + dt * ka3[0], ax2 + dt * ka3[1], ax3 + dt * ka3[2])
        ax1 = ax1 + dt / 6.0 * (ka1[0] + 2 * ka2[0] + 2 * ka3[0] + ka4[0])
        ax2 = ax2 + dt / 6.0 * (ka1[1] + 2 * ka2[1] + 2 * ka3[1] + ka4[1])
        ax3 = ax3 + dt / 6.0 * (ka1[2] + 2 * ka2[2] + 2 * ka3[2] + ka4[2])

        y = 1000.0 * ax2 - 196.69
        ia = np.where(y > 1.0, 2.11 * np.log(np.maximum(y, 1.0)), 0.0)
        i_astro_in = np.zeros(N)
        i_astro_in[owner_flat] = np.repeat(eta * ia, 4)

        if (i + 1) % astro_stride == 0:
            astro_times.append((i + 1) * dt)
            astro_ca.append(ax2.copy())

    return RasterData(
        spike_times=np.concatenate(spike_t) if spike_t else np.empty(0),
        spike_neurons=np.concatenate(spike_i) if spike_i else np.empty(0, dtype=np.int64),
        target_mask=target_mask,
        astro_times=np.asarray(astro_times),
        astro_ca=np.asarray(astro_ca),
        protocol=protocol, dt=dt, duration=protocol.duration,
    )


def _phase_error(step, n_stim, n_delay_end, dt):
    phase = "stim" if step < n_stim else ("delay" if step < n_delay_end else "recall")
    return IntegrationError(
        f"non-finite membrane potential during {phase} phase at step {step} (t={step * dt:.4f}s)",
        t=step * dt)


@dataclass
class RateSummary:
    """Mean rates per group over one window, plus the separation ratio."""

    window: tuple
    group_rates: dict                 # group name -> mean rate, Hz
    per_neuron: np.ndarray            # Hz, full population
    separation_ratio: float | None    # target / max(non_target, RATE_FLOOR)


def compute_rates(raster: RasterData, window, groups=None) -> RateSummary:
    """Window-averaged firing rates: spike count / (window length * size).

    ``groups`` maps names to neuron index arrays; defaults to the raster's
    target / non_target split, for which the separation ratio is reported.
    """
    t0, t1 = window
    if t1 <= t0:
        raise ValueError("window must satisfy t1 > t0")
    if groups is None:
        groups = {"target": np.flatnonzero(raster.target_mask),
                  "non_target": np.flatnonzero(~raster.target_mask)}
    mask = (raster.spike_times >= t0) & (raster.spike_times < t1)
    counts = np.bincount(raster.spike_neurons[mask], minlength=raster.n_neurons)
    per_neuron = counts / (t1 - t0)
    group_rates = {}
    for name, idx in groups.items():
        idx = np.asarray(idx)
        group_rates[name] = float(per_neuron[idx].mean()) if idx.size else 0.0
    ratio = None
    if "target" in group_rates and "non_target" in group_rates:
        ratio = group_rates["target"] / max(group_rates["non_target"], RATE_FLOOR)
    return RateSummary(window=(t0, t1), group_rates=group_rates,
                       per_neuron=per_neuron, separation_ratio=ratio)


def rate_timeseries(raster: RasterData, bin_width: float = 0.1):
    """Binned mean rates of the target and non-target groups over time.

    Returns (bin_centers, target_rates, non_target_rates) in Hz.
    """
    edges = np.arange(0.0, raster.duration + bin_width / 2, bin_width)
    centers = 0.5 * (edges[:-1] + edges[1:])
    tgt = raster.target_mask[raster.spike_neurons]
    n_t = max(int(raster.target_mask.sum()), 1)
    n_n = max(int((~raster.target_mask).sum()), 1)
    t_counts, _ = np.histogram(raster.spike_times[tgt], bins=edges)
    n_counts, _ = np.histogram(raster.spike_times[~tgt], bins=edges)
    return centers, t_counts / bin_width / n_t, n_counts / bin_width / n_n


# named presets for the three gliotransmission regimes
WM_PRESETS = {
    "wm-strong": {"eta": 1.0, "apply_cue": False},
    "wm-weak": {"eta": 0.25, "apply_cue": True},
    "wm-none": {"eta": 0.0, "apply_cue": True},
}


def protocol_for_preset(name: str, **overrides) -> ProtocolSpec:
    if name not in WM_PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {sorted(WM_PRESETS)}")
    kwargs = dict(WM_PRESETS[name])
    kwargs.update(overrides)
    return ProtocolSpec(**kwargs)
