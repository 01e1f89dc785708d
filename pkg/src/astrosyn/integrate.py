"""Fixed-step RK4 integration with post-step discrete event handling.

Deterministic by construction: identical inputs produce byte-identical
trajectories. Events (e.g. spike resets) are applied after each full step,
never via within-step root finding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class IntegrationError(RuntimeError):
    """Raised when an integration step produces a non-finite state entry."""

    def __init__(self, message, t=None, index=None):
        super().__init__(message)
        self.t = t
        self.index = index


@dataclass
class Trajectory:
    """Uniformly sampled multi-variable time series with event annotations.

    ``dt`` is the sample spacing (integration dt times the storage stride).
    ``states`` has one row per sample; ``events`` is a list of
    ``(time, tag)`` pairs and is never decimated.
    """

    dt: float
    times: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times and states must have the same length")
        if len(self.times) > 1:
            gaps = np.diff(self.times)
            if not np.allclose(gaps, self.dt, rtol=1e-9, atol=1e-12) or (gaps <= 0).any():
                raise ValueError("times must increase uniformly by dt")
        if not np.isfinite(self.states).all():
            raise ValueError("trajectory contains non-finite samples")

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    def event_times(self, tag: str) -> np.ndarray:
        """Times of all events carrying exactly the given tag."""
        return np.array([t for t, name in self.events if name == tag])

    def final_state(self) -> np.ndarray:
        return self.states[-1]


def rk4_step(state, derivative, t: float, dt: float):
    """One classical 4th-order Runge-Kutta step from t to t+dt.

    ``derivative(t, y) -> dy/dt``. The input state is not mutated.
    Raises IntegrationError if the updated state has a non-finite entry.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    y = np.asarray(state, dtype=float)
    k1 = np.asarray(derivative(t, y), dtype=float)
    k2 = np.asarray(derivative(t + 0.5 * dt, y + (0.5 * dt) * k1), dtype=float)
    k3 = np.asarray(derivative(t + 0.5 * dt, y + (0.5 * dt) * k2), dtype=float)
    k4 = np.asarray(derivative(t + dt, y + dt * k3), dtype=float)
    out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(out).all():
        bad = int(np.flatnonzero(~np.isfinite(out))[0])
        raise IntegrationError(
            f"non-finite state entry {bad} after step at t={t:.6g}", t=t, index=bad
        )
    return out


def simulate(derivative, x0, duration: float, dt: float = 1e-4,
             event_handler=None, t0: float = 0.0, stride: int = 1) -> Trajectory:
    """Integrate dx/dt = derivative(t, x) over [t0, t0+duration] at fixed dt.

    ``event_handler(state) -> (state, tags)`` runs after every accepted step;
    each returned tag is recorded with the post-step timestamp. Samples may be
    decimated by an integer ``stride`` for storage; events never are.
    """
    if duration < dt:
        raise ValueError("duration must be at least dt")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    y = np.array(x0, dtype=float)
    n_steps = int(round(duration / dt))
    samples = [y.copy()]
    events = []
    for i in range(n_steps):
        t = t0 + i * dt
        try:
            y = rk4_step(y, derivative, t, dt)
        except IntegrationError as err:
            raise IntegrationError(
                f"integration failed at step {i}: {err}", t=err.t, index=err.index
            ) from err
        t_next = t0 + (i + 1) * dt
        if event_handler is not None:
            y, tags = event_handler(y)
            y = np.asarray(y, dtype=float)
            if tags:
                events.extend((t_next, tag) for tag in tags)
        if (i + 1) % stride == 0:
            samples.append(y.copy())
    sample_idx = np.arange(0, n_steps + 1, stride)
    times = t0 + sample_idx * dt
    return Trajectory(dt=dt * stride, times=times, states=np.array(samples), events=events)


def constant(value: float):
    """Time profile that is constant everywhere."""
    def profile(t):
        return value
    return profile


def pulse(amplitude: float, t_off: float, t_on: float = 0.0, baseline: float = 0.0):
    """Rectangular pulse: amplitude on [t_on, t_off), baseline elsewhere."""
    def profile(t):
        return amplitude if t_on <= t < t_off else baseline
    return profile
