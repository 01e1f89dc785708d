"""Extended astrocyte model: the three-state astrocyte driving a reduced
postsynaptic firing-rate state.

The firing-rate equation is the gated-affine form
    dx4/dt = -x4 + 0.5*(tanh(eta*I - I_thr) + 1)*(p1*eta*I + p2)
with I the astrocytic current. Note the gate is small but nonzero below
threshold, so the rate settles at a tiny negative value (~ -0.0165 Hz at
I = 0); this is a property of the model and is deliberately not clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrate import Trajectory, constant, pulse, simulate
from .tripartite import AstrocyteParams, astro_rhs, i_astro, i_astro_smooth


@dataclass(frozen=True)
class FiringRateParams:
    eta: float = 1.0          # gliotransmission strength, in [0, 1]
    i_thr: float = 3.9        # firing-onset threshold, uA
    p1: float = 16.82         # rate gain, Hz/uA
    p2: float = -40.29        # rate offset, Hz
    gate_scale: float = 1.0   # tanh gate steepness, 1/uA

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")


def firing_rate_derivative(x4: float, i_astro_value: float, p: FiringRateParams) -> float:
    """Time derivative of the postsynaptic firing rate, Hz/s."""
    drive = p.eta * i_astro_value
    gate = 0.5 * (math.tanh(p.gate_scale * (drive - p.i_thr)) + 1.0)
    return -x4 + gate * (p.p1 * drive + p.p2)


def firing_rate_fixed_point(i_astro_value: float, p: FiringRateParams) -> float:
    """Closed-form equilibrium of x4 for a constant astrocytic current."""
    drive = p.eta * i_astro_value
    gate = 0.5 * (math.tanh(p.gate_scale * (drive - p.i_thr)) + 1.0)
    return gate * (p.p1 * drive + p.p2)


EXTENDED_LABELS = ("ip3 [uM]", "ca [uM]", "h [-]", "rate [Hz]")

# default start: baseline IP3, low calcium, mostly de-inactivated receptors
EXTENDED_X0 = (0.16, 0.05, 0.9, 0.0)


def simulate_extended(glu_input, eta: float = 1.0, duration: float = 60.0,
                      dt: float = 1e-3,
                      p_astro: AstrocyteParams | None = None,
                      p_rate: FiringRateParams | None = None,
                      use_exact_i_astro: bool = False,
                      x0=EXTENDED_X0, stride: int = 1) -> Trajectory:
    """Integrate the 4-state cascade (astrocyte feeding the firing rate).

    ``glu_input(t)`` is the IP3-production input in [0, a_glu], held
    constant over each step. The astrocytic current uses the smooth tanh
    fit by default; ``use_exact_i_astro`` switches to the gated-log form.
    ``eta`` overrides the gliotransmission strength of ``p_rate``.
    """
    p_astro = p_astro or AstrocyteParams()
    base = p_rate or FiringRateParams()
    p_rate = FiringRateParams(eta=eta, i_thr=base.i_thr, p1=base.p1,
                              p2=base.p2, gate_scale=base.gate_scale)
    current_fn = i_astro if use_exact_i_astro else i_astro_smooth
    held_u = [float(glu_input(0.0))]
    step = [0]

    def deriv(t, y):
        x1, x2, x3, x4 = y
        da1, da2, da3 = astro_rhs(x1, x2, x3, held_u[0], p_astro)
        return (da1, da2, da3,
                firing_rate_derivative(x4, current_fn(x2), p_rate))

    def on_step(y):
        step[0] += 1
        held_u[0] = float(glu_input(step[0] * dt))
        return y, ()

    return simulate(deriv, np.asarray(x0, float), duration, dt=dt,
                    event_handler=on_step, stride=stride)


# scenario presets (input profile factory, eta, default duration)
CASES = {
    "case1": (lambda p: constant(0.0), 1.0, 60.0),
    "case2": (lambda p: constant(p.a_glu), 1.0, 60.0),
    "case3": (lambda p: constant(p.a_glu), 0.25, 60.0),
    "pulse": (lambda p: pulse(p.a_glu, t_off=0.2), 1.0, 10.0),
}


def run_case(name: str, duration: float | None = None, dt: float = 1e-3,
             p_astro: AstrocyteParams | None = None,
             p_rate: FiringRateParams | None = None,
             stride: int = 1) -> Trajectory:
    """Run one of the named extended-model scenarios.

    case1: no stimulation; case2: persistent a_glu input, strong
    gliotransmission; case3: same input, weak (25%) gliotransmission;
    pulse: a 0.2 s input pulse with strong gliotransmission.
    """
    if name not in CASES:
        raise ValueError(f"unknown case {name!r}; expected one of {sorted(CASES)}")
    p_astro = p_astro or AstrocyteParams()
    profile_factory, eta, default_duration = CASES[name]
    return simulate_extended(profile_factory(p_astro), eta=eta,
                             duration=default_duration if duration is None else duration,
                             dt=dt, p_astro=p_astro, p_rate=p_rate, stride=stride)
