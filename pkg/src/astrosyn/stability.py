"""Numerical stability toolkit for the astrocyte dynamics: equilibria,
linearization eigenvalues, the ultimate-bound set, and randomized
positivity/boundedness verdicts.

The property checks integrate all trials as one vectorized batch; each
trial's randomness comes from its own (seed, trial) stream, so verdicts are
seed-deterministic regardless of how trials would be scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tripartite import AstrocyteParams, AstrocyteState, astro_rhs

STATE_NAMES = ("ip3", "ca", "h")


class EquilibriumError(RuntimeError):
    """Newton iteration and the relaxation fallback both failed to converge."""


def _rhs(x, u, p):
    d1, d2, d3 = astro_rhs(x[0], x[1], x[2], u, p)
    return np.array([d1, d2, d3])


def jacobian(p: AstrocyteParams, x, u: float = 0.0) -> np.ndarray:
    """3x3 Jacobian of the astrocyte right-hand side by central differences.

    Step size per coordinate: max(1e-6, 1e-6*|x_i|).
    """
    x = np.asarray(x, dtype=float)
    J = np.empty((3, 3))
    for i in range(3):
        h = max(1e-6, 1e-6 * abs(x[i]))
        e = np.zeros(3)
        e[i] = h
        J[:, i] = (_rhs(x + e, u, p) - _rhs(x - e, u, p)) / (2.0 * h)
        if not np.isfinite(J[:, i]).all():
            raise ValueError(f"non-finite Jacobian column for state {STATE_NAMES[i]!r}")
    return J


def _relax(x, u, p, duration=200.0, dt=1e-3):
    # long-horizon RK4 relaxation used when Newton leaves the orthant
    x1, x2, x3 = float(x[0]), float(x[1]), float(x[2])
    for _ in range(int(round(duration / dt))):
        a1 = astro_rhs(x1, x2, x3, u, p)
        a2 = astro_rhs(x1 + 0.5 * dt * a1[0], x2 + 0.5 * dt * a1[1], x3 + 0.5 * dt * a1[2], u, p)
        a3 = astro_rhs(x1 + 0.5 * dt * a2[0], x2 + 0.5 * dt * a2[1], x3 + 0.5 * dt * a2[2], u, p)
        a4 = astro_rhs(x1 + dt * a3[0], x2 + dt * a3[1], x3 + dt * a3[2], u, p)
        x1 += dt / 6.0 * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0])
        x2 += dt / 6.0 * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1])
        x3 += dt / 6.0 * (a1[2] + 2 * a2[2] + 2 * a3[2] + a4[2])
    return np.array([x1, x2, x3])


def find_equilibrium(p: AstrocyteParams, u: float = 0.0, guess=None,
                     tol: float = 1e-8, max_iter: int = 100) -> AstrocyteState:
    """Equilibrium of the astrocyte dynamics under constant input u.

    Damped Newton iteration (halving factor, rejecting steps that leave the
    nonnegative orthant or increase the residual) with a 200 s relaxation
    fallback. Returns a point with full right-hand-side norm below ``tol``.
    """
    if guess is None:
        # balance of the IP3 line with the production term near its midpoint
        guess = (p.ip3_star + p.tau_ip3 * (0.2 + u), 0.1, 0.9)
    x = np.asarray(guess, dtype=float)
    if (x < 0).any():
        raise ValueError("guess must lie in the nonnegative orthant")
    used_fallback = False
    for _ in range(max_iter):
        f = _rhs(x, u, p)
        norm = np.linalg.norm(f)
        if norm < tol:
            return AstrocyteState(*x)
        try:
            step = np.linalg.solve(jacobian(p, x, u), -f)
        except np.linalg.LinAlgError:
            step = None
        moved = False
        if step is not None:
            lam = 1.0
            for _ in range(14):
                cand = x + lam * step
                if (cand >= 0).all():
                    cand_norm = np.linalg.norm(_rhs(cand, u, p))
                    if np.isfinite(cand_norm) and cand_norm < norm:
                        x = cand
                        moved = True
                        break
                lam *= 0.5
        if not moved:
            if used_fallback:
                break
            x = _relax(np.maximum(x, 0.0), u, p)
            used_fallback = True
    norm = np.linalg.norm(_rhs(x, u, p))
    if norm < tol:
        return AstrocyteState(*x)
    raise EquilibriumError(f"equilibrium search stalled; best residual {norm:.3e}")


def eigenvalues(m) -> np.ndarray:
    """Eigenvalues of a 3x3 real matrix via its characteristic cubic.

    Returns three complex numbers sorted by real part (then imaginary part)
    ascending. Roots are Newton-polished on the polynomial and checked to a
    relative residual of 1e-8.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    minors = ((m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
              + (m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0])
              + (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))
    det = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
           - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
           + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    # monic characteristic polynomial lam^3 + a lam^2 + b lam + c
    a, b, c = -tr, minors, -det
    # depressed cubic t^3 + pt + q with lam = t - a/3 (Cardano)
    pc = b - a * a / 3.0
    qc = 2.0 * a ** 3 / 27.0 - a * b / 3.0 + c
    disc = (qc / 2.0) ** 2 + (pc / 3.0) ** 3
    s = np.sqrt(complex(disc))
    u3 = -qc / 2.0 + s
    if abs(u3) < abs(-qc / 2.0 - s):
        u3 = -qc / 2.0 - s  # avoid catastrophic cancellation
    if u3 == 0:
        roots_t = np.zeros(3, dtype=complex)  # triple root
    else:
        u = u3 ** (1.0 / 3.0)
        v = -pc / (3.0 * u)
        w = complex(-0.5, math.sqrt(3.0) / 2.0)
        roots_t = np.array([u + v, w * u + w.conjugate() * v,
                            w.conjugate() * u + w * v])
    lam = roots_t - a / 3.0
    for _ in range(3):  # Newton polish on the characteristic polynomial
        val = ((lam + a) * lam + b) * lam + c
        der = (3.0 * lam + 2.0 * a) * lam + b
        safe = np.abs(der) > 0
        lam = lam - np.where(safe, val / np.where(safe, der, 1.0), 0.0)
    # snap numerically-real roots, then enforce exact conjugate pairing
    near_real = np.abs(lam.imag) < 1e-9 * (1.0 + np.abs(lam))
    lam = np.where(near_real, lam.real + 0.0j, lam)
    complex_idx = np.flatnonzero(lam.imag != 0.0)
    if complex_idx.size == 2:
        z = 0.5 * (lam[complex_idx[0]] + lam[complex_idx[1]].conjugate())
        lam[complex_idx[0]] = complex(z.real, -abs(z.imag))
        lam[complex_idx[1]] = complex(z.real, abs(z.imag))
    lam = lam[np.lexsort((lam.imag, lam.real))]
    residual = np.abs(((lam + a) * lam + b) * lam + c)
    denom = max(1.0, np.linalg.norm(m, "fro") ** 3)
    if (residual / denom > 1e-8).any():
        raise ArithmeticError("characteristic-polynomial residual exceeds 1e-8")
    return lam


def eigenvector(m, lam) -> np.ndarray:
    """Unit eigenvector of a 3x3 matrix for a (simple) eigenvalue."""
    A = np.asarray(m, dtype=complex) - lam * np.eye(3)
    candidates = [np.cross(A[0], A[1]), np.cross(A[0], A[2]), np.cross(A[1], A[2])]
    v = max(candidates, key=np.linalg.norm)
    n = np.linalg.norm(v)
    if n == 0:
        raise ArithmeticError("eigenvector construction failed (repeated eigenvalue?)")
    return v / n


@dataclass(frozen=True)
class BoundTriple:
    """Component bounds of the attracting box: ip3 <= mu1, ca <= mu2, h <= 1."""

    mu1: float
    mu2: float
    x3_max: float = 1.0

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool((x >= -tol).all() and x[0] <= self.mu1 + tol
                    and x[1] <= self.mu2 + tol and x[2] <= self.x3_max + tol)


def ultimate_bound(p: AstrocyteParams, a_glu: float | None = None) -> BoundTriple:
    """Closed-form ultimate bounds for input levels up to a_glu."""
    if a_glu is None:
        a_glu = p.a_glu
    mu1 = p.ip3_star + p.tau_ip3 * (p.v4 + a_glu)
    mu2 = (p.v6 + p.c0 * (p.v1 - p.v2)) / (p.k1 + p.v2 * (1.0 + p.c1))
    return BoundTriple(mu1=mu1, mu2=mu2, x3_max=1.0)


@dataclass
class PropertyVerdict:
    """Outcome of a randomized trajectory property check."""

    passed: bool
    n_trials: int
    counterexample: dict | None = None
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_dict(self):
        out = {"passed": self.passed, "n_trials": self.n_trials,
               "counterexample": self.counterexample}
        out.update({k: v for k, v in self.details.items()})
        return out


def _trial_rngs(seed, n_trials):
    return [np.random.default_rng(np.random.SeedSequence([seed, i]))
            for i in range(n_trials)]


def _step_inputs(rngs, a_glu, duration, segment=1.0):
    # per-trial piecewise-constant admissible inputs, one value per segment
    n_seg = int(math.ceil(duration / segment)) + 1
    vals = np.stack([rng.uniform(0.0, a_glu, n_seg) for rng in rngs])
    return vals, segment


def _batch_rk4(x1, x2, x3, u, dt, p, rhs):
    k1 = rhs(x1, x2, x3, u, p)
    k2 = rhs(x1 + 0.5 * dt * k1[0], x2 + 0.5 * dt * k1[1], x3 + 0.5 * dt * k1[2], u, p)
    k3 = rhs(x1 + 0.5 * dt * k2[0], x2 + 0.5 * dt * k2[1], x3 + 0.5 * dt * k2[2], u, p)
    k4 = rhs(x1 + dt * k3[0], x2 + dt * k3[1], x3 + dt * k3[2], u, p)
    x1 = x1 + dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    x2 = x2 + dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    x3 = x3 + dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return x1, x2, x3


def check_positivity(p: AstrocyteParams, u_profile=None, n_trials: int = 100,
                     seed: int = 0, duration: float = 60.0, dt: float = 1e-3,
                     threshold: float = -1e-9, rhs=None) -> PropertyVerdict:
    """Randomized forward-invariance check of the nonnegative orthant.

    Initial conditions are drawn per trial, uniform on [0, 2*mu1] x
    [0, 2*mu2] x [0, 1]. ``u_profile`` may be None (per-trial random step
    inputs in [0, a_glu]), a constant, or a shared callable t -> u. The
    verdict fails on any state excursion below ``threshold``. ``rhs`` can
    override the dynamics (used by the test-suite mutation detector).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rhs = rhs or astro_rhs
    bounds = ultimate_bound(p)
    rngs = _trial_rngs(seed, n_trials)
    x1 = np.array([r.uniform(0.0, 2.0 * bounds.mu1) for r in rngs])
    x2 = np.array([r.uniform(0.0, 2.0 * bounds.mu2) for r in rngs])
    x3 = np.array([r.uniform(0.0, 1.0) for r in rngs])
    step_vals = None
    if u_profile is None:
        step_vals, seg = _step_inputs(rngs, p.a_glu, duration)
    n_steps = int(round(duration / dt))
    mins = np.array([x1.min(), x2.min(), x3.min()])
    counterexample = None
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(n_steps):
            t = i * dt
            if step_vals is not None:
                u = step_vals[:, int(t / seg)]
            elif callable(u_profile):
                u = float(u_profile(t))
            else:
                u = float(u_profile)
            x1, x2, x3 = _batch_rk4(x1, x2, x3, u, dt, p, rhs)
            mins = np.minimum(mins, [x1.min(), x2.min(), x3.min()])
            state = np.stack([x1, x2, x3])
            bad = (state < threshold) | ~np.isfinite(state)
            if bad.any():
                coord, trial = np.argwhere(bad)[0]
                counterexample = {
                    "trial": int(trial), "t": (i + 1) * dt,
                    "coordinate": STATE_NAMES[coord],
                    "state": [float(x1[trial]), float(x2[trial]), float(x3[trial])],
                }
                break
    return PropertyVerdict(
        passed=counterexample is None, n_trials=n_trials,
        counterexample=counterexample,
        details={"min_values": mins.tolist(), "duration": duration, "dt": dt},
    )


def check_ultimate_boundedness(p: AstrocyteParams, a_glu: float | None = None,
                               n_trials: int = 100, seed: int = 0,
                               horizon: float = 120.0, dt: float = 1e-3,
                               ics=None, tol: float = 1e-9,
                               rhs=None) -> PropertyVerdict:
    """Randomized check that trajectories settle into the ultimate-bound box.

    Initial ip3/ca are drawn up to 3x their bounds (h uniform on [0, 1]);
    inputs are per-trial admissible step profiles. A trial passes when it is
    inside the box for the entire final half of the horizon; the reported
    settle time is the last time it was observed outside.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    rhs = rhs or astro_rhs
    bounds = ultimate_bound(p, a_glu)
    a_glu = p.a_glu if a_glu is None else a_glu
    rngs = _trial_rngs(seed, n_trials)
    if ics is not None:
        ics = np.asarray(ics, dtype=float)
        if ics.shape != (n_trials, 3):
            raise ValueError("ics must have shape (n_trials, 3)")
        if (ics[:, 2] < 0).any() or (ics[:, 2] > 1).any():
            raise ValueError("h initial conditions must lie in [0, 1]")
        if (ics[:, :2] < 0).any():
            raise ValueError("ip3/ca initial conditions must be nonnegative")
        x1, x2, x3 = ics[:, 0].copy(), ics[:, 1].copy(), ics[:, 2].copy()
    else:
        x1 = np.array([r.uniform(0.0, 3.0 * bounds.mu1) for r in rngs])
        x2 = np.array([r.uniform(0.0, 3.0 * bounds.mu2) for r in rngs])
        x3 = np.array([r.uniform(0.0, 1.0) for r in rngs])
    step_vals, seg = _step_inputs(rngs, a_glu, horizon)

    def outside(x1, x2, x3):
        return ((x1 > bounds.mu1 + tol) | (x2 > bounds.mu2 + tol)
                | (x3 > bounds.x3_max + tol)
                | (x1 < -tol) | (x2 < -tol) | (x3 < -tol))

    last_outside = np.where(outside(x1, x2, x3), 0.0, -np.inf)
    counterexample = None
    n_steps = int(round(horizon / dt))
    settle_deadline = horizon / 2.0
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for i in range(n_steps):
            t = i * dt
            u = step_vals[:, int(t / seg)]
            x1, x2, x3 = _batch_rk4(x1, x2, x3, u, dt, p, rhs)
            out = outside(x1, x2, x3) | ~np.isfinite(x1) | ~np.isfinite(x2) | ~np.isfinite(x3)
            if out.any():
                t_next = (i + 1) * dt
                last_outside[out] = t_next
                if t_next > settle_deadline and counterexample is None:
                    trial = int(np.flatnonzero(out)[0])
                    counterexample = {
                        "trial": trial, "t": t_next,
                        "state": [float(x1[trial]), float(x2[trial]), float(x3[trial])],
                    }
    settle = np.maximum(last_outside, 0.0)
    passed = bool((last_outside <= settle_deadline).all())
    return PropertyVerdict(
        passed=passed, n_trials=n_trials,
        counterexample=counterexample,
        details={
            "mu1": bounds.mu1, "mu2": bounds.mu2,
            "worst_settle_time": float(settle.max()),
            "mean_settle_time": float(settle.mean()),
            "horizon": horizon, "dt": dt,
        },
    )


@dataclass
class StabilityReport:
    """Equilibrium, linearization, bounds, and property verdicts for one
    constant input level."""

    input_level: float
    equilibrium: AstrocyteState
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    mu1: float
    mu2: float
    x3_bound: float
    equilibrium_residual: float
    eigen_residuals: np.ndarray
    positivity: PropertyVerdict | None = None
    boundedness: PropertyVerdict | None = None

    def to_dict(self):
        return {
            "input_level": self.input_level,
            "equilibrium": {"ip3": self.equilibrium.ip3, "ca": self.equilibrium.ca,
                            "h": self.equilibrium.h},
            "jacobian": self.jacobian.tolist(),
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "mu1": self.mu1,
            "mu2": self.mu2,
            "x3_bound": self.x3_bound,
            "equilibrium_residual": self.equilibrium_residual,
            "eigen_residuals": self.eigen_residuals.tolist(),
            "positivity": self.positivity.to_dict() if self.positivity else None,
            "boundedness": self.boundedness.to_dict() if self.boundedness else None,
        }


def build_stability_report(p: AstrocyteParams, u: float = 0.0, guess=None,
                           n_trials: int = 100, seed: int = 0,
                           run_checks: bool = True) -> StabilityReport:
    """Assemble the full stability report for one constant input level."""
    eq = find_equilibrium(p, u=u, guess=guess)
    J = jacobian(p, eq, u)
    lams = eigenvalues(J)
    eig_res = np.array([np.linalg.norm(J @ eigenvector(J, lam) - lam * eigenvector(J, lam))
                        for lam in lams])
    if (eig_res > 1e-8).any():
        raise ArithmeticError("eigenpair residual exceeds 1e-8")
    bounds = ultimate_bound(p)
    residual = float(np.linalg.norm(_rhs(np.asarray(eq), u, p)))
    positivity = boundedness = None
    if run_checks:
        positivity = check_positivity(p, u_profile=u, n_trials=n_trials, seed=seed)
        boundedness = check_ultimate_boundedness(p, n_trials=n_trials, seed=seed)
    return StabilityReport(
        input_level=u, equilibrium=eq, jacobian=J, eigenvalues=lams,
        mu1=bounds.mu1, mu2=bounds.mu2, x3_bound=bounds.x3_max,
        equilibrium_residual=residual, eigen_residuals=eig_res,
        positivity=positivity, boundedness=boundedness,
    )
