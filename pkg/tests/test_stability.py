import numpy as np
import pytest

from astrosyn.stability import (
    build_stability_report,
    check_positivity,
    check_ultimate_boundedness,
    eigenvalues,
    eigenvector,
    find_equilibrium,
    jacobian,
    ultimate_bound,
)
from astrosyn.tripartite import AstrocyteParams, astro_rhs

P = AstrocyteParams()

EQ0 = np.array([0.6858, 0.06612, 0.8882])
EQ5 = np.array([36.77, 0.4061, 0.7165])
EIG0 = np.array([-4.2324, -0.12 - 0.023j, -0.12 + 0.023j])
EIG5 = np.array([-0.27 - 0.89j, -0.27 + 0.89j, -0.14])


def analytic_jacobian(x, p=P):
    """Hand-derived partial derivatives of the astrocyte right-hand side.

    Line 1: d(ip3)/d(ip3) = -1/tau; d/d(ca) = v4*alpha*k4/(ca+k4)^2.
    Line 2: the channel term T = c1 v1 (x1 x2 x3)^3 P / ((x1+d1)^3 (x2+d5)^3)
    with P = c0/c1 - (1+1/c1) x2 differentiates via logarithmic derivatives
    in x1 and x3 and a quotient rule in x2; pump and influx are Hill forms.
    Line 3 differentiates directly.
    """
    x1, x2, x3 = x
    drive = p.c0 / p.c1 - (1.0 + 1.0 / p.c1) * x2
    ddrive = -(1.0 + 1.0 / p.c1)
    T = p.c1 * p.v1 * (x1 * x2 * x3) ** 3 * drive / ((x1 + p.d1) ** 3 * (x2 + p.d5) ** 3)

    J = np.zeros((3, 3))
    J[0, 0] = -1.0 / p.tau_ip3
    J[0, 1] = p.v4 * p.alpha * p.k4 / (x2 + p.k4) ** 2
    J[0, 2] = 0.0

    dT_dx1 = 3.0 * T * p.d1 / (x1 * (x1 + p.d1))
    dT_dx2 = (p.c1 * p.v1 * (x1 / (x1 + p.d1)) ** 3 * x3 ** 3
              * ((3.0 * x2 ** 2 * drive + x2 ** 3 * ddrive) * (x2 + p.d5)
                 - 3.0 * x2 ** 3 * drive) / (x2 + p.d5) ** 4)
    dT_dx3 = 3.0 * T / x3
    J[1, 0] = dT_dx1 + p.v6 * 2.0 * x1 * p.k2 ** 2 / (p.k2 ** 2 + x1 ** 2) ** 2
    J[1, 1] = (-p.k1 + dT_dx2
               - p.v3 * 2.0 * x2 * p.k3 ** 2 / (p.k3 ** 2 + x2 ** 2) ** 2
               + p.c1 * p.v2 * ddrive)
    J[1, 2] = dT_dx3

    J[2, 0] = p.a2 * p.d2 * (1.0 - x3) * (p.d3 - p.d1) / (x1 + p.d3) ** 2
    J[2, 1] = -p.a2 * x3
    J[2, 2] = -p.a2 * (p.d2 * (x1 + p.d1) / (x1 + p.d3) + x2)
    return J


# --- equilibria -----------------------------------------------------------

def test_unforced_equilibrium_matches_reference():
    eq = find_equilibrium(P, u=0.0, guess=(0.5, 0.1, 0.9))
    np.testing.assert_allclose(np.asarray(eq), EQ0, rtol=1e-3)
    residual = np.array(astro_rhs(eq.ip3, eq.ca, eq.h, 0.0, P))
    assert np.linalg.norm(residual) < 1e-8


def test_forced_equilibrium_matches_reference():
    eq = find_equilibrium(P, u=5.0, guess=(30.0, 0.4, 0.7))
    np.testing.assert_allclose(np.asarray(eq), EQ5, rtol=1e-3)
    residual = np.array(astro_rhs(eq.ip3, eq.ca, eq.h, 5.0, P))
    assert np.linalg.norm(residual) < 1e-8


def test_default_guess_converges():
    eq = find_equilibrium(P, u=0.0)
    np.testing.assert_allclose(np.asarray(eq), EQ0, rtol=1e-3)


def test_negative_guess_rejected():
    with pytest.raises(ValueError):
        find_equilibrium(P, guess=(-1.0, 0.1, 0.9))


def test_fallback_from_poor_guess():
    # start far from the root, outside Newton's basin
    eq = find_equilibrium(P, u=0.0, guess=(120.0, 50.0, 0.0))
    np.testing.assert_allclose(np.asarray(eq), EQ0, rtol=1e-3)


# --- jacobian -------------------------------------------------------------

def test_fd_jacobian_matches_analytic_partials():
    rng = np.random.default_rng(42)
    for _ in range(20):
        x = np.array([rng.uniform(0.1, 40.0), rng.uniform(0.05, 15.0),
                      rng.uniform(0.05, 0.95)])
        J_fd = jacobian(P, x, u=rng.uniform(0, 5))
        J_an = analytic_jacobian(x)
        np.testing.assert_allclose(J_fd, J_an, rtol=1e-4, atol=1e-9)


def test_dh_dh_is_negative_everywhere():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = np.array([rng.uniform(0.01, 50), rng.uniform(0.01, 20), rng.uniform(0, 1)])
        assert jacobian(P, x)[2, 2] < 0.0
        assert analytic_jacobian(x)[2, 2] == pytest.approx(
            -P.a2 * (P.d2 * (x[0] + P.d1) / (x[0] + P.d3) + x[1]), rel=1e-12)


# --- eigenvalues ----------------------------------------------------------

def test_identity_matrix():
    np.testing.assert_allclose(eigenvalues(np.eye(3)), [1.0, 1.0, 1.0], atol=1e-12)


def test_diagonal_sorted_ascending():
    lam = eigenvalues(np.diag([-1.0, -2.0, -3.0]))
    np.testing.assert_allclose(lam, [-3.0, -2.0, -1.0], atol=1e-12)
    assert lam.imag.max() == 0.0


def test_companion_matrix_of_factored_cubic():
    # (lam-1)(lam-2)(lam-3) = lam^3 - 6 lam^2 + 11 lam - 6
    companion = np.array([[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    np.testing.assert_allclose(eigenvalues(companion), [1.0, 2.0, 3.0], atol=1e-9)


def test_matches_numpy_eigvals_on_random_matrices():
    rng = np.random.default_rng(9)
    for _ in range(200):
        m = rng.normal(scale=rng.choice([0.1, 1.0, 10.0]), size=(3, 3))
        ours = eigenvalues(m)
        ref = np.sort_complex(np.linalg.eigvals(m))
        np.testing.assert_allclose(ours, ref, rtol=1e-7, atol=1e-8 * (1 + np.abs(ref).max()))


def test_eigenvalue_input_validation():
    with pytest.raises(ValueError):
        eigenvalues(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        eigenvalues(np.full((3, 3), np.nan))


def test_reference_eigenvalues_unforced():
    eq = find_equilibrium(P, u=0.0)
    lam = eigenvalues(jacobian(P, eq, 0.0))
    np.testing.assert_allclose(lam, np.sort_complex(EIG0), rtol=0.05)
    assert (lam.real < 0).all()  # locally asymptotically stable


def test_reference_eigenvalues_forced():
    eq = find_equilibrium(P, u=5.0)
    lam = eigenvalues(jacobian(P, eq, 5.0))
    np.testing.assert_allclose(lam, np.sort_complex(EIG5), rtol=0.05)
    assert (lam.real < 0).all()


def test_eigenvector_residual():
    eq = find_equilibrium(P, u=0.0)
    J = jacobian(P, eq, 0.0)
    for lam in eigenvalues(J):
        v = eigenvector(J, lam)
        assert np.linalg.norm(J @ v - lam * v) < 1e-8


# --- ultimate bound -------------------------------------------------------

def test_bound_values_against_hand_evaluation():
    # mu1 = ip3* + tau*(v4 + a_glu); mu2 = (v6 + c0(v1-v2)) / (k1 + v2(1+c1))
    b = ultimate_bound(P, a_glu=5.0)
    assert b.mu1 == pytest.approx(0.16 + (1.0 / 0.14) * (0.3 + 5.0), rel=1e-12)
    assert b.mu1 == pytest.approx(38.02, abs=0.01)
    assert b.mu2 == pytest.approx((0.2 + 2.0 * (6.0 - 0.11)) / (0.5 + 0.11 * 1.185), rel=1e-12)
    assert b.mu2 == pytest.approx(19.01, abs=0.01)
    assert ultimate_bound(P, a_glu=0.0).mu1 == pytest.approx(2.303, abs=1e-3)


def test_both_equilibria_inside_omega():
    b = ultimate_bound(P)
    assert b.contains(EQ0) and b.contains(EQ5)


# --- property checks ------------------------------------------------------

def test_positivity_from_origin():
    verdict = check_positivity(P, u_profile=0.0, n_trials=1, seed=0, duration=5.0)
    assert verdict.passed


def test_positivity_random_trials():
    verdict = check_positivity(P, u_profile=5.0, n_trials=20, seed=3, duration=20.0)
    assert verdict.passed
    assert min(verdict.details["min_values"]) >= -1e-9


def test_positivity_mutation_detector():
    # sign-flipped calcium dynamics must be caught with a counterexample;
    # seed 25 starts trial 0 at ca ~ 0.012 uM, inside the region the flipped
    # flow pushes through the boundary (the flip also creates a spurious
    # interior attractor, so high-calcium starts would not expose it)
    def mutated(x1, x2, x3, u, p):
        d1, d2, d3 = astro_rhs(x1, x2, x3, u, p)
        return d1, -d2, d3

    verdict = check_positivity(P, u_profile=0.0, n_trials=1, seed=25,
                               duration=20.0, rhs=mutated)
    assert not verdict.passed
    assert verdict.counterexample["coordinate"] == "ca"
    assert verdict.counterexample["state"][1] < -1e-9

    clean = check_positivity(P, u_profile=0.0, n_trials=1, seed=25, duration=20.0)
    assert clean.passed


def test_boundedness_far_start():
    ics = np.array([[100.0, 50.0, 0.5]])
    verdict = check_ultimate_boundedness(P, n_trials=1, seed=0, ics=ics, dt=5e-3)
    assert verdict.passed
    assert 0.0 < verdict.details["worst_settle_time"] <= 60.0


def test_boundedness_starting_inside_stays_inside():
    b = ultimate_bound(P)
    rng = np.random.default_rng(5)
    ics = np.column_stack([rng.uniform(0, b.mu1, 8), rng.uniform(0, b.mu2, 8),
                           rng.uniform(0, 1, 8)])
    verdict = check_ultimate_boundedness(P, n_trials=8, seed=5, ics=ics,
                                         horizon=60.0, dt=5e-3)
    assert verdict.passed
    assert verdict.details["worst_settle_time"] == 0.0


def test_boundedness_rejects_h_outside_unit_interval():
    with pytest.raises(ValueError):
        check_ultimate_boundedness(P, n_trials=1, ics=np.array([[1.0, 1.0, 1.5]]))


def test_boundedness_random_small_batch():
    verdict = check_ultimate_boundedness(P, n_trials=10, seed=7, dt=5e-3)
    assert verdict.passed


def test_verdict_requires_trials():
    with pytest.raises(ValueError):
        check_positivity(P, n_trials=0)


# --- report ---------------------------------------------------------------

def test_report_structure_and_invariants():
    report = build_stability_report(P, u=0.0, n_trials=4, seed=1)
    assert report.equilibrium_residual < 1e-8
    assert (report.eigen_residuals < 1e-8).all()
    assert report.mu1 == pytest.approx(38.017, abs=1e-2)
    d = report.to_dict()
    assert d["positivity"]["passed"] and d["boundedness"]["passed"]
    assert len(d["eigenvalues"]) == 3
