import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import solve_continuous_are

from stabcert import feedback, systems, weakobs
from stabcert.semigroup import observability_gramian

SCALAR_01 = systems.build_system([[0.0]], [[1.0]])


def simulate_terminal(sys, signal, y0, horizon):
    def rhs(t, y):
        return sys.a_matrix @ y + sys.b_matrix @ signal.evaluate(t)

    sol = solve_ivp(rhs, [0.0, horizon], np.asarray(y0, dtype=float),
                    rtol=1e-11, atol=1e-13)
    return sol.y[:, -1]


# ---------------------------------------------------------------------------
# shifted Riccati synthesis
# ---------------------------------------------------------------------------

def test_scalar_riccati_closed_form():
    res = feedback.solve_shifted_riccati(SCALAR_01, 1.0)
    root2 = math.sqrt(2.0)
    assert res.riccati_p[0, 0] == pytest.approx(1.0 + root2, abs=1e-10)
    assert res.gain_k[0, 0] == pytest.approx(-(1.0 + root2), abs=1e-10)
    assert res.measured_rate == pytest.approx(1.0 + root2, abs=1e-10)
    # the shifted loop decays at exactly sqrt(2)
    assert res.measured_rate - res.mu == pytest.approx(root2, abs=1e-10)
    assert res.residual <= 1e-12


def test_scalar_lyapunov_case():
    res = feedback.solve_shifted_riccati(
        systems.build_system([[-3.0]], [[0.0]]), 1.0)
    assert res.riccati_p[0, 0] == pytest.approx(0.25, abs=1e-12)
    assert res.gain_k[0, 0] == 0.0
    assert res.measured_rate == pytest.approx(3.0, abs=1e-12)


def test_unstabilizable_mode_reported():
    with pytest.raises(feedback.UnstabilizableError) as err:
        feedback.solve_shifted_riccati(systems.build_system([[0.0]], [[0.0]]),
                                       1.0)
    assert err.value.eigenvalue.real >= 0.9


def test_dense_riccati_invariants():
    rng = np.random.default_rng(17)
    for mu in (0.5, 1.0, 3.0):
        for _ in range(5):
            n = int(rng.integers(2, 7))
            s = systems.build_system(rng.standard_normal((n, n)),
                                     rng.standard_normal((n, 2)))
            res = feedback.solve_shifted_riccati(s, mu)
            p = res.riccati_p
            assert np.abs(p - p.T).max() <= 1e-10 * max(np.abs(p).max(), 1)
            assert np.linalg.eigvalsh(p).min() >= -1e-10 * np.abs(p).max()
            assert res.residual <= 1e-8 * (1.0 + np.linalg.norm(p) ** 2)
            a_cl = s.a_matrix + s.b_matrix @ res.gain_k
            assert np.max(np.linalg.eigvals(a_cl).real) <= -mu + 1e-8


def test_riccati_matches_scipy_reference():
    rng = np.random.default_rng(8)
    n = 5
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, 2))
    s = systems.build_system(a, b)
    mu = 1.5
    res = feedback.solve_shifted_riccati(s, mu)
    ref = solve_continuous_are(a + mu * np.eye(n), b, np.eye(n), np.eye(2))
    assert np.allclose(res.riccati_p, ref, rtol=1e-8, atol=1e-9)


def test_unshift_identity():
    rng = np.random.default_rng(23)
    s = systems.build_system(rng.standard_normal((4, 4)),
                             rng.standard_normal((4, 1)))
    mu = 2.0
    res = feedback.solve_shifted_riccati(s, mu)
    a_cl = s.a_matrix + s.b_matrix @ res.gain_k
    a_cl_shift = (s.a_matrix + mu * np.eye(4)) + s.b_matrix @ res.gain_k
    # the unshift identity holds at matrix level: the loops differ by mu*I
    scale = max(np.abs(a_cl).max(), 1.0)
    assert np.abs((a_cl_shift - a_cl) - mu * np.eye(4)).max() <= 1e-12 * scale
    # the spectra then shift exactly, up to the eigenproblem's conditioning
    ev = np.sort_complex(np.linalg.eigvals(a_cl))
    ev_shift = np.sort_complex(np.linalg.eigvals(a_cl_shift)) - mu
    _, vecs = np.linalg.eig(a_cl)
    tol = 1e-13 * scale * max(np.linalg.cond(vecs), 1.0)
    assert np.max(np.abs(ev - ev_shift)) <= tol


# ---------------------------------------------------------------------------
# closed-loop rate measurement
# ---------------------------------------------------------------------------

def test_rate_of_normal_stable_matrix():
    s = systems.build_system(np.diag([-1.0, -2.0]), np.ones((2, 1)))
    rate, overshoot = feedback.closed_loop_rate(s, np.zeros((1, 2)))
    assert rate == pytest.approx(1.0, abs=1e-12)
    assert overshoot == pytest.approx(1.0, abs=1e-12)


def test_rate_matches_riccati_eigenvalue():
    res = feedback.solve_shifted_riccati(SCALAR_01, 1.0)
    rate, _ = feedback.closed_loop_rate(SCALAR_01, res.gain_k)
    assert rate == pytest.approx(res.measured_rate, abs=1e-10)


def test_jordan_block_transient_overshoot():
    s = systems.build_system(np.array([[-1.0, 1.0], [0.0, -1.0]]),
                             np.ones((2, 1)))
    rate, overshoot = feedback.closed_loop_rate(s, np.zeros((1, 2)))
    assert rate == pytest.approx(1.0, abs=1e-12)
    assert overshoot > 1.0


# ---------------------------------------------------------------------------
# minimum-norm steering
# ---------------------------------------------------------------------------

def test_exact_null_scalar():
    sig = feedback.min_norm_eps_null(SCALAR_01, 1.0, 0.0, [1.0])
    assert sig.evaluate(0.3)[0] == pytest.approx(-1.0, abs=1e-12)
    assert sig.l2_norm == pytest.approx(1.0, abs=1e-12)
    terminal = simulate_terminal(SCALAR_01, sig, [1.0], 1.0)
    assert abs(terminal[0]) <= 1e-9


def test_free_dynamics_suffice():
    s = systems.build_system([[-1.0]], [[1.0]])
    sig = feedback.min_norm_eps_null(s, 1.0, 0.9, [1.0])
    assert sig.l2_norm == 0.0
    assert np.all(sig.evaluate(0.5) == 0.0)


def test_two_mode_exact_null_simulated():
    s = systems.build_system(np.diag([-1.0, -2.0]), np.array([[1.0], [1.0]]))
    y0 = [1.0, -0.4]
    sig = feedback.min_norm_eps_null(s, 1.0, 0.0, y0)
    terminal = simulate_terminal(s, sig, y0, 1.0)
    assert np.linalg.norm(terminal) <= 1e-9


def test_partial_steering_hits_target_from_below():
    s = systems.build_system(np.diag([0.3, -0.5]), np.array([[1.0], [0.7]]))
    y0 = np.array([1.0, 1.0])
    eps = 0.25
    sig = feedback.min_norm_eps_null(s, 1.0, eps, y0)
    terminal = simulate_terminal(s, sig, y0, 1.0)
    assert np.linalg.norm(terminal) <= eps * np.linalg.norm(y0) * (1 + 1e-7)


def test_control_norm_monotone_in_eps():
    s = systems.build_system(np.diag([0.2, -1.0]), np.array([[1.0], [1.0]]))
    y0 = [1.0, 0.5]
    norms = [feedback.min_norm_eps_null(s, 1.0, eps, y0).l2_norm
             for eps in (0.0, 0.05, 0.2, 0.5, 0.9)]
    assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))


def test_min_norm_local_optimality():
    rng = np.random.default_rng(12)
    s = systems.build_system(np.diag([0.4, -0.8]), np.array([[1.0], [1.0]]))
    y0 = np.array([1.0, -1.0])
    horizon, eps = 1.0, 0.3
    sig = feedback.min_norm_eps_null(s, horizon, eps, y0)
    gram = observability_gramian(s, horizon).matrix
    z = np.array([math.exp(0.4), -math.exp(-0.8)])
    eta = sig.segments[0].eta
    eta0 = np.linalg.solve(gram, z)          # exact-null interior point
    target = eps * np.linalg.norm(y0)
    base = eta @ gram @ eta
    found = 0
    trials = 0
    while found < 20 and trials < 400:
        trials += 1
        w = rng.standard_normal(2)
        cand = eta + 0.05 * w + 0.1 * rng.random() * (eta0 - eta)
        if np.linalg.norm(z - gram @ cand) <= target:
            found += 1
            assert cand @ gram @ cand >= base * (1 - 1e-9)
    assert found == 20


def test_steering_errors():
    s0 = systems.build_system([[0.0]], [[0.0]])
    with pytest.raises(feedback.SteeringError):
        feedback.min_norm_eps_null(s0, 1.0, 0.0, [1.0])     # singular Gramian
    with pytest.raises(feedback.SteeringError):
        feedback.min_norm_eps_null(s0, 1.0, 0.5, [1.0])     # unreachable ball


def test_l2_norm_consistent_with_quadrature():
    s = systems.build_system(np.diag([0.1, -1.5]), np.array([[1.0], [0.5]]))
    sig = feedback.min_norm_eps_null(s, 1.2, 0.1, [1.0, 1.0])
    assert sig.l2_norm_by_quadrature() == pytest.approx(sig.l2_norm,
                                                        rel=1e-9)


# ---------------------------------------------------------------------------
# concatenated control
# ---------------------------------------------------------------------------

def test_concatenated_scalar_contraction():
    eps = math.exp(-2.0)
    sig, rep = feedback.concatenated_control(SCALAR_01, 1.0, 1.0, eps,
                                             [1.0], 6)
    for i, norm in enumerate(rep.state_norms):
        assert norm <= eps**i * (1.0 + 1e-9)
    for u0, u1 in zip(rep.control_norms, rep.control_norms[1:]):
        assert u1 <= u0 * eps * (1 + 1e-6)
    assert rep.contraction_ok and rep.geometric_ok
    assert math.isfinite(rep.weighted_l2)
    assert len(sig.segments) == 6
    assert sig.breakpoints == tuple(float(i) for i in range(7))


def test_concatenated_free_decay_needs_no_control():
    s = systems.build_system([[-3.0]], [[1.0]])
    eps = math.exp(-2.0)       # free decay e^-3 beats the target e^-2
    _, rep = feedback.concatenated_control(s, 1.0, 1.0, eps, [1.0], 4)
    assert all(c == 0.0 for c in rep.control_norms)
    assert rep.state_norms[-1] == pytest.approx(math.exp(-12.0), rel=1e-12)


def test_concatenated_contraction_precondition():
    with pytest.raises(ValueError):
        feedback.concatenated_control(SCALAR_01, 1.0, 1.0,
                                      1.5 * math.exp(-2.0), [1.0], 3)


# ---------------------------------------------------------------------------
# certificate-backed synthesis
# ---------------------------------------------------------------------------

def test_certificate_to_feedback_selects_index():
    fam = weakobs.sweep_alpha(SCALAR_01, [1.0, 2.0, 4.0, 8.0],
                              [0.5, 1.0, 2.0, 4.0])
    res = feedback.certificate_to_feedback(SCALAR_01, fam, 1.5)
    assert res.certificate_chain["k"] == 3
    assert res.certificate_chain["alpha"] == 4.0
    assert res.measured_rate >= 1.5
    res_low = feedback.certificate_to_feedback(SCALAR_01, fam, 0.5)
    assert res_low.certificate_chain["k"] == 1


def test_certificate_to_feedback_requires_entries():
    fam = weakobs.sweep_alpha(SCALAR_01, [2.0], [0.5, 1.0])
    with pytest.raises(ValueError):
        feedback.certificate_to_feedback(SCALAR_01, fam, 5.0)
