"""Tripartite synapse model: Izhikevich neurons with glutamate release, a
three-state astrocyte (IP3, Ca2+, active receptor fraction), and the
couplings between them (glutamate-gated IP3 production, calcium-dependent
astrocytic current, sigmoidal synaptic current).

Unit conventions: concentrations in uM, time in seconds, potentials in mV,
currents in uA. The membrane equations (dV, dU) follow the classical
per-millisecond Izhikevich convention; composed simulations convert them to
the shared seconds axis (factor MS_PER_S). Glutamate and astrocyte rates are
per second as tabulated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .integrate import Trajectory, simulate

MS_PER_S = 1000.0  # converts per-ms membrane rates to the seconds time axis


@dataclass(frozen=True)
class NeuronParams:
    """Fast-spiking Izhikevich constants plus glutamate-release and synapse terms."""

    a: float = 0.1               # recovery rate (per ms)
    b: float = 0.2               # recovery coupling
    c: float = -65.0             # reset potential, mV
    d: float = 2.0               # recovery increment per spike
    alpha_glu: float = 10.0      # glutamate clearance, 1/s
    k_glu: float = 600.0         # release rate while spiking, uM/s
    spike_threshold: float = 30.0  # mV
    eta_syn: float = 0.025       # synaptic weight
    e_syn_exc: float = 0.0       # excitatory reversal, mV
    e_syn_inh: float = -90.0     # inhibitory reversal, mV
    k_syn: float = 0.2           # presynaptic sigmoid steepness, mV
    is_excitatory: bool = True

    def __post_init__(self):
        if self.alpha_glu <= 0 or self.k_glu <= 0:
            raise ValueError("alpha_glu and k_glu must be positive")

    @property
    def e_syn(self) -> float:
        return self.e_syn_exc if self.is_excitatory else self.e_syn_inh


class NeuronState(NamedTuple):
    v: float    # membrane potential, mV
    u: float    # recovery variable
    glu: float  # normalized cleft glutamate


@dataclass(frozen=True)
class AstrocyteParams:
    """Li-Rinzel-family astrocyte constants (uM / seconds), plus the
    glutamate-gate and gap-junction diffusion terms."""

    tau_ip3: float = 1.0 / 0.14  # IP3 relaxation time, s
    ip3_star: float = 0.16       # baseline IP3, uM
    v1: float = 6.0              # max channel (CICR) rate, 1/s
    v2: float = 0.11             # leak rate, 1/s
    v3: float = 2.2              # max pump uptake, uM/s
    v4: float = 0.3              # max Ca-regulated IP3 production, uM/s
    v6: float = 0.2              # IP3-dependent influx, uM/s
    k1: float = 0.5              # Ca efflux rate, 1/s
    k2: float = 1.0              # uM
    k3: float = 0.1              # uM
    k4: float = 1.1              # uM
    c0: float = 2.0              # total free Ca, uM
    c1: float = 0.185            # ER-to-cytosol volume ratio
    d1: float = 0.13             # uM
    d2: float = 1.049            # uM
    d3: float = 0.9434           # uM (tabulated as 943.4 nM)
    d5: float = 0.082            # uM (tabulated as 82 nM)
    a2: float = 0.14             # receptor inactivation rate, 1/(uM s)
    alpha: float = 0.8           # regulated fraction of IP3 production
    a_glu: float = 5.0           # max glutamate-driven IP3 flux, uM/s
    g_thr: float = 0.7           # glutamate gate threshold (normalized)
    d_ca: float = 0.05           # gap-junction Ca diffusion, 1/s
    d_ip3: float = 0.1           # gap-junction IP3 diffusion, 1/s

    def __post_init__(self):
        for name in ("tau_ip3", "ip3_star", "v1", "v2", "v3", "v4", "v6",
                     "k1", "k2", "k3", "k4", "c0", "c1", "d1", "d2", "d3",
                     "d5", "a2", "a_glu", "g_thr", "d_ca", "d_ip3"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.v1 <= self.v2:
            # mu2 of the ultimate bound loses positivity in this regime
            warnings.warn("v1 <= v2: the ultimate-bound formula for Ca is not positive",
                          stacklevel=2)


class AstrocyteState(NamedTuple):
    ip3: float  # uM
    ca: float   # uM
    h: float    # active IP3-receptor fraction, in [0, 1]


def _sigmoid(z):
    # expit via tanh identity; overflow-free for any argument
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def neuron_derivative(state, i_total: float, p: NeuronParams, release=None):
    """Raw model-unit time derivatives of (v, u, glu).

    dv, du are per millisecond (classical Izhikevich form); dglu is per
    second. ``release`` overrides the Heaviside release term (used by
    composed simulations, which hold it at the previous step's spike
    outcome); by default it is evaluated on the instantaneous v.
    """
    v, u, glu = state
    dv = 0.04 * v * v + 5.0 * v - u + 140.0 + i_total
    du = p.a * (p.b * v - u)
    if release is None:
        release = 1.0 if v >= p.spike_threshold else 0.0
    dglu = -p.alpha_glu * glu + p.k_glu * release
    return NeuronState(dv, du, dglu)


def apply_spike_reset(state, p: NeuronParams):
    """Discrete spike map: if v >= threshold, v <- c and u <- u + d."""
    v, u, glu = state
    if v >= p.spike_threshold:
        return NeuronState(p.c, u + p.d, glu), True
    return NeuronState(v, u, glu), False


def i_syn(pre, post, p_pre: NeuronParams) -> float:
    """Synaptic current onto the postsynaptic neuron, uA.

    Sigmoidal reversal-potential form; the reversal is chosen by the
    presynaptic neuron's excitatory/inhibitory flag.
    """
    gate = _sigmoid(pre[0] / p_pre.k_syn)
    return p_pre.eta_syn * (p_pre.e_syn - post[0]) * gate


def j_glu(glu, p: AstrocyteParams, mode: str = "sharp", k_s: float = 0.05):
    """Glutamate-induced IP3 production flux, uM/s, clamped to [0, a_glu].

    ``sharp`` is the Heaviside gate at g_thr; ``smooth`` replaces it with a
    tanh of steepness 1/k_s (midpoint value a_glu/2 at the threshold).
    """
    if mode not in ("sharp", "smooth"):
        raise ValueError(f"unknown j_glu mode: {mode!r}")
    if mode == "smooth" and k_s <= 0:
        raise ValueError("k_s must be positive")
    if isinstance(glu, np.ndarray):
        if mode == "sharp":
            out = p.a_glu * (glu >= p.g_thr).astype(float)
        else:
            out = p.a_glu * 0.5 * (1.0 + np.tanh((glu - p.g_thr) / k_s))
        return np.clip(out, 0.0, p.a_glu)
    g = float(glu)
    if mode == "sharp":
        return p.a_glu if g >= p.g_thr else 0.0
    val = p.a_glu * 0.5 * (1.0 + math.tanh((g - p.g_thr) / k_s))
    return min(max(val, 0.0), p.a_glu)


def astro_rhs(ip3, ca, h, u, p: AstrocyteParams):
    """Astrocyte time derivatives (d_ip3, d_ca, d_h), elementwise.

    Accepts scalars or same-shaped arrays; ``u`` is the IP3 production input
    in [0, a_glu]. Implements the three-state dynamics verbatim, including
    the cubed channel-flux grouping.
    """
    drive = p.c0 / p.c1 - (1.0 + 1.0 / p.c1) * ca  # ER-to-cytosol gradient term
    d_ip3 = (p.ip3_star - ip3) / p.tau_ip3 \
        + p.v4 * (ca + (1.0 - p.alpha) * p.k4) / (ca + p.k4) + u
    channel = p.c1 * p.v1 * (ip3 * ca * h) ** 3 * drive \
        / ((ip3 + p.d1) ** 3 * (ca + p.d5) ** 3)
    pump = p.v3 * ca * ca / (p.k3 * p.k3 + ca * ca)
    influx = p.v6 * ip3 * ip3 / (p.k2 * p.k2 + ip3 * ip3)
    leak = p.c1 * p.v2 * drive
    d_ca = -p.k1 * ca + channel - pump + influx + leak
    d_h = p.a2 * (p.d2 * (ip3 + p.d1) / (ip3 + p.d3) * (1.0 - h) - ca * h)
    return d_ip3, d_ca, d_h


def astrocyte_derivative(state, u: float, p: AstrocyteParams) -> AstrocyteState:
    """Scalar astrocyte derivative for a single cell."""
    d_ip3, d_ca, d_h = astro_rhs(state[0], state[1], state[2], u, p)
    return AstrocyteState(float(d_ip3), float(d_ca), float(d_h))


def i_astro(ca):
    """Astrocytic current onto the postsynaptic neuron, uA (exact form).

    y = ca[uM]*1000 - 196.69; returns 2.11*ln(y) gated to zero for y <= 1,
    so the log is never evaluated on a non-positive argument.
    """
    if isinstance(ca, np.ndarray):
        y = 1000.0 * ca - 196.69
        return np.where(y > 1.0, 2.11 * np.log(np.maximum(y, 1.0)), 0.0)
    y = 1000.0 * float(ca) - 196.69
    return 2.11 * math.log(y) if y > 1.0 else 0.0


def i_astro_smooth(ca):
    """Continuously differentiable tanh fit of i_astro (intended ca range
    0.05..0.7 uM)."""
    if isinstance(ca, np.ndarray):
        return 6.3611 * np.tanh(14.682 * ca - 3.3582) + 6.3611
    return 6.3611 * math.tanh(14.682 * float(ca) - 3.3582) + 6.3611


# state layout of the composed 9-dimensional tripartite system
TRIPARTITE_LABELS = (
    "v_pre [mV]", "u_pre [mV]", "glu_pre [-]",
    "ip3 [uM]", "ca [uM]", "h [-]",
    "v_post [mV]", "u_post [mV]", "glu_post [-]",
)

# default initial conditions: neuron resting point and unforced astrocyte
# equilibrium (the resting point solves 0.04 v^2 + (5-b) v + 140 = 0)
NEURON_REST = NeuronState(-70.0, -14.0, 0.0)
ASTRO_REST = AstrocyteState(0.6858, 0.06612, 0.8882)


def simulate_tripartite(i_app, duration: float, dt: float = 1e-4, eta: float = 1.0,
                        p_pre: NeuronParams | None = None,
                        p_post: NeuronParams | None = None,
                        p_astro: AstrocyteParams | None = None,
                        j_glu_mode: str = "sharp", k_s: float = 0.05,
                        use_smooth_i_astro: bool = False,
                        x0=None, stride: int = 1) -> Trajectory:
    """Integrate the composed pre-neuron / astrocyte / post-neuron system.

    ``i_app(t)`` is the external current into the presynaptic neuron
    (piecewise constant over steps). Couplings: presynaptic glutamate gates
    IP3 production; astrocytic Ca drives eta-scaled i_astro into the
    postsynaptic neuron; pre drives post through i_syn. Spike events are
    recorded with tags ``spike:pre`` and ``spike:post``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    p_pre = p_pre or NeuronParams()
    p_post = p_post or NeuronParams()
    p_astro = p_astro or AstrocyteParams()
    if x0 is None:
        x0 = np.array(NEURON_REST + ASTRO_REST + NEURON_REST)

    pa, pb, pc, pd = p_pre.a, p_pre.b, p_pre.c, p_pre.d
    qa, qb, qc, qd = p_post.a, p_post.b, p_post.c, p_post.d
    alpha_glu_p, k_glu_p = p_pre.alpha_glu, p_pre.k_glu
    alpha_glu_q, k_glu_q = p_post.alpha_glu, p_post.k_glu
    thr_p, thr_q = p_pre.spike_threshold, p_post.spike_threshold
    eta_syn_w, e_rev, k_s_syn = p_pre.eta_syn, p_pre.e_syn, p_pre.k_syn
    current_fn = i_astro_smooth if use_smooth_i_astro else i_astro
    release = [0.0, 0.0]       # held Heaviside terms: pre, post
    step = [0]
    i_app_held = [float(i_app(0.0))]  # forcing is constant over each step

    def deriv(t, y):
        vp, up, gp, x1, x2, x3, vq, uq, gq = y
        syn = eta_syn_w * (e_rev - vq) * 0.5 * (1.0 + math.tanh(0.5 * vp / k_s_syn))
        i_post = eta * current_fn(x2) + syn
        u_in = j_glu(gp, p_astro, mode=j_glu_mode, k_s=k_s)
        da1, da2, da3 = astro_rhs(x1, x2, x3, u_in, p_astro)
        return (
            MS_PER_S * (0.04 * vp * vp + 5.0 * vp - up + 140.0 + i_app_held[0]),
            MS_PER_S * pa * (pb * vp - up),
            -alpha_glu_p * gp + k_glu_p * release[0],
            da1, da2, da3,
            MS_PER_S * (0.04 * vq * vq + 5.0 * vq - uq + 140.0 + i_post),
            MS_PER_S * qa * (qb * vq - uq),
            -alpha_glu_q * gq + k_glu_q * release[1],
        )

    def on_step(y):
        tags = ()
        if y[0] >= thr_p:
            y[0] = pc
            y[1] += pd
            release[0] = 1.0
            tags += ("spike:pre",)
        else:
            release[0] = 0.0
        if y[6] >= thr_q:
            y[6] = qc
            y[7] += qd
            release[1] = 1.0
            tags += ("spike:post",)
        else:
            release[1] = 0.0
        step[0] += 1
        i_app_held[0] = float(i_app(step[0] * dt))
        return y, tags

    return simulate(deriv, x0, duration, dt=dt, event_handler=on_step, stride=stride)
