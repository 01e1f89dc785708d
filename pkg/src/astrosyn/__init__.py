"""astrosyn: deterministic simulation and stability analysis of
neuron-astrocyte (tripartite) synapses, from a single synapse to a
dual-layer working-memory network."""

__version__ = "0.1.0"

from .integrate import IntegrationError, Trajectory, constant, pulse, rk4_step, simulate
from .tripartite import (
    AstrocyteParams,
    AstrocyteState,
    NeuronParams,
    NeuronState,
    apply_spike_reset,
    astro_rhs,
    astrocyte_derivative,
    i_astro,
    i_astro_smooth,
    i_syn,
    j_glu,
    neuron_derivative,
    simulate_tripartite,
)
from .reduced import (
    FiringRateParams,
    firing_rate_derivative,
    firing_rate_fixed_point,
    run_case,
    simulate_extended,
)
from .stability import (
    BoundTriple,
    PropertyVerdict,
    StabilityReport,
    build_stability_report,
    check_positivity,
    check_ultimate_boundedness,
    eigenvalues,
    find_equilibrium,
    jacobian,
    ultimate_bound,
)
from .network import (
    NetworkParams,
    NetworkTopology,
    ProtocolSpec,
    RasterData,
    astro_coupling_terms,
    build_network,
    compute_rates,
    protocol_for_preset,
    rate_timeseries,
    run_protocol,
)
