import numpy as np
import pytest

from astrosyn.network import (
    NetworkParams,
    ProtocolSpec,
    RasterData,
    astro_coupling_terms,
    build_network,
    compute_rates,
    protocol_for_preset,
    rate_timeseries,
    run_protocol,
)
from astrosyn.stability import ultimate_bound
from astrosyn.tripartite import AstrocyteParams

P_A = AstrocyteParams()

TINY = NetworkParams(n_neurons=16, n_astrocytes=4, synapses_per_neuron=3, seed=11)


def full_scale_params(seed=0):
    return NetworkParams(seed=seed)


def test_param_invariants_enforced():
    with pytest.raises(ValueError):
        NetworkParams(n_neurons=1200, n_astrocytes=300)  # not perfect squares
    with pytest.raises(ValueError):
        NetworkParams(n_neurons=1296, n_astrocytes=400)  # not a 4:1 split
    with pytest.raises(ValueError):
        NetworkParams(n_neurons=16, n_astrocytes=4, synapses_per_neuron=16)


def test_tiny_topology_structure():
    topo = build_network(TINY)
    assert topo.pre.size == 16 * 3
    assert topo.post.size == 16 * 3
    # no self-synapses, no duplicate directed edges
    assert (topo.pre != topo.post).all()
    assert len({(a, b) for a, b in zip(topo.pre, topo.post)}) == topo.pre.size
    # every neuron belongs to exactly one astrocyte domain
    assert sorted(topo.owned.ravel().tolist()) == list(range(16))
    # 2x2 astro grid: all four astrocytes sit in corners, degree 2
    assert (topo.gap_degrees() == 2).all()


def test_full_scale_topology_counts():
    topo = build_network(full_scale_params(seed=1234))
    assert topo.params.n_neurons == 1296 and topo.params.n_astrocytes == 324
    assert topo.pre.size == 1296 * 28
    assert int(topo.is_excitatory.sum()) == 1037
    assert int((~topo.is_excitatory).sum()) == 259
    degrees = topo.gap_degrees()
    assert degrees.min() == 2 and degrees.max() == 4
    # corners have 2 neighbors, interior astrocytes 4
    assert degrees[0] == 2 and degrees[17] == 2
    assert degrees[19] == 4  # row 1, col 1 of the 18x18 grid
    assert (topo.pre != topo.post).all()


def test_distance_bias_favors_near_targets():
    topo = build_network(full_scale_params(seed=7))
    d = np.linalg.norm(topo.positions[topo.pre] - topo.positions[topo.post], axis=1)
    # with scale 5 on a 36x36 grid nearly all draws stay local
    assert np.median(d) < 8.0
    assert d.mean() < 10.0


def test_topology_determinism():
    a = build_network(full_scale_params(seed=42))
    b = build_network(full_scale_params(seed=42))
    assert a.post.tobytes() == b.post.tobytes()
    assert a.is_excitatory.tobytes() == b.is_excitatory.tobytes()
    c = build_network(full_scale_params(seed=43))
    assert a.post.tobytes() != c.post.tobytes()


# --- gap-junction coupling -------------------------------------------------

def test_uniform_field_has_zero_coupling():
    topo = build_network(TINY)
    states = np.tile([1.3, 0.4, 0.8], (4, 1))
    d_ip3, d_ca = astro_coupling_terms(states, topo, P_A)
    np.testing.assert_allclose(d_ip3, 0.0, atol=1e-15)
    np.testing.assert_allclose(d_ca, 0.0, atol=1e-15)


def test_two_astrocyte_exchange():
    # single gap junction, ip3 = (1, 0): increments are -d_ip3 and +d_ip3
    edges = np.array([[0, 1]])
    states = np.array([[1.0, 0.0, 0.5], [0.0, 0.0, 0.5]])
    d_ip3, d_ca = astro_coupling_terms(states, edges, P_A)
    np.testing.assert_allclose(d_ip3, [-0.1, 0.1], rtol=1e-12)
    np.testing.assert_allclose(d_ca, [0.0, 0.0], atol=1e-15)


def test_coupling_conserves_total():
    topo = build_network(full_scale_params(seed=3))
    rng = np.random.default_rng(0)
    states = np.column_stack([rng.uniform(0, 40, 324), rng.uniform(0, 19, 324),
                              rng.uniform(0, 1, 324)])
    d_ip3, d_ca = astro_coupling_terms(states, topo, P_A)
    assert abs(d_ip3.sum()) < 1e-10
    assert abs(d_ca.sum()) < 1e-10


# --- protocol --------------------------------------------------------------

def tiny_protocol(**overrides):
    kwargs = dict(t_stim=0.1, t_delay=0.3, t_recall=0.2,
                  target_set=(5, 6, 9, 10), stim_amplitude=100.0)
    kwargs.update(overrides)
    return ProtocolSpec(**kwargs)


def test_protocol_validation():
    with pytest.raises(ValueError):
        ProtocolSpec(t_stim=0.0)
    with pytest.raises(ValueError):
        ProtocolSpec(eta=2.0)
    with pytest.raises(ValueError):
        tiny_protocol(target_set=(99,)).resolve_targets(TINY)


def test_default_target_patch_is_central_6x6():
    p = ProtocolSpec()
    targets = p.resolve_targets(full_scale_params())
    assert targets.size == 36
    rows, cols = np.divmod(targets, 36)
    assert rows.min() == 15 and rows.max() == 20
    assert cols.min() == 15 and cols.max() == 20


def test_tiny_protocol_runs_and_is_deterministic():
    topo = build_network(TINY)
    proto = tiny_protocol()
    a = run_protocol(topo, proto, dt=1e-4, seed=5)
    b = run_protocol(topo, proto, dt=1e-4, seed=5)
    assert a.spike_times.tobytes() == b.spike_times.tobytes()
    assert a.spike_neurons.tobytes() == b.spike_neurons.tobytes()
    assert a.astro_ca.tobytes() == b.astro_ca.tobytes()
    # stimulated targets must fire during the stimulation window
    stim_spikes = a.spike_neurons[a.spike_times <= 0.1]
    assert stim_spikes.size > 0
    assert set(np.unique(stim_spikes)) <= {5, 6, 9, 10}
    assert a.spike_times.min() >= 0.0 and a.spike_times.max() <= proto.duration + 1e-12


def test_astro_trajectories_stay_positive_and_bounded():
    # post-hoc audit of the network run with the single-cell bounds
    topo = build_network(TINY)
    raster = run_protocol(topo, tiny_protocol(), dt=1e-4, seed=5, astro_stride=20)
    bound = ultimate_bound(P_A)
    assert raster.astro_ca.min() >= -1e-9
    assert raster.astro_ca.max() <= bound.mu2 + 1e-9
    assert np.isfinite(raster.astro_ca).all()


def test_raster_rejects_out_of_range_times():
    with pytest.raises(ValueError):
        RasterData(spike_times=np.array([9.9]), spike_neurons=np.array([0]),
                   target_mask=np.zeros(4, bool), astro_times=np.zeros(1),
                   astro_ca=np.zeros((1, 1)), protocol=tiny_protocol(),
                   dt=1e-4, duration=0.6)


# --- rates -------------------------------------------------------------

def synthetic_raster(spike_times, spike_neurons, n_neurons=4, targets=(0, 1)):
    mask = np.zeros(n_neurons, bool)
    mask[list(targets)] = True
    return RasterData(spike_times=np.asarray(spike_times, float),
                      spike_neurons=np.asarray(spike_neurons),
                      target_mask=mask, astro_times=np.zeros(1),
                      astro_ca=np.zeros((1, 1)), protocol=tiny_protocol(),
                      dt=1e-4, duration=0.6)


def test_rates_empty_raster():
    r = synthetic_raster([], np.empty(0, int))
    summary = compute_rates(r, (0.0, 0.6))
    assert summary.group_rates == {"target": 0.0, "non_target": 0.0}
    assert summary.separation_ratio == 0.0


def test_rates_single_neuron_definition():
    # 10 spikes of one neuron in a 1 s window -> 10 Hz for its group of one
    times = np.linspace(0.01, 0.59, 10)
    r = synthetic_raster(times, np.zeros(10, int), targets=(0,))
    summary = compute_rates(r, (0.0, 0.6), groups={"solo": np.array([0])})
    assert summary.group_rates["solo"] == pytest.approx(10 / 0.6)
    assert summary.separation_ratio is None


def test_rates_window_validation():
    r = synthetic_raster([], np.empty(0, int))
    with pytest.raises(ValueError):
        compute_rates(r, (0.5, 0.5))


def test_rate_timeseries_shapes():
    times = [0.05, 0.15, 0.25, 0.35]
    r = synthetic_raster(times, [0, 1, 2, 3])
    centers, rt, rn = rate_timeseries(r, bin_width=0.2)
    assert centers.size == rt.size == rn.size == 3
    assert rt[0] > 0 and rn[1] > 0


def test_presets():
    assert protocol_for_preset("wm-strong").apply_cue is False
    assert protocol_for_preset("wm-weak").eta == 0.25
    assert protocol_for_preset("wm-none").eta == 0.0
    with pytest.raises(ValueError):
        protocol_for_preset("wm-medium")
    # overrides pass through
    p = protocol_for_preset("wm-weak", cue_amplitude=3.0)
    assert p.cue_amplitude == 3.0
