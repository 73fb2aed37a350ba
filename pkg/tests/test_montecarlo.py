import numpy as np
import pytest

from weaklab import (
    AAVScenario,
    DiscreteExperiment,
    DomainError,
    EmptyConditionalError,
    StateVector,
    basis_state,
    binned_grid_experiment,
    binned_position,
    aav_postselection_probability,
    composite_experiment,
    cost_slope,
    coupled_state,
    default_grid,
    eta_phase_unitary,
    gaussian_meter,
    general_meter_conditional_expectation,
    general_meter_experiment,
    general_meter_protocol,
    hermitian_operator,
    identity_operator,
    postselection_probability,
    qubit_experiment,
    qubit_protocol,
    sample_cost_curve,
    simulate_weak_experiment,
    trials_for_precision,
    weak_value_finite,
)

SIGMA_X = hermitian_operator([[0, 1], [1, 0]])
SIGMA_Z = hermitian_operator([[1, 0], [0, -1]])
S0 = StateVector([1.0, 0.0])
F_DIAG = StateVector([1.0, 1.0]).unit()


def phase_family_experiment(eta, eps):
    p = qubit_protocol(S0, SIGMA_X, eps, coupling_unitary=eta_phase_unitary(S0, eta))
    return qubit_experiment(p, F_DIAG)


def test_phase_family_estimate_matches_analytic_limit():
    exp = phase_family_experiment(-1.0, 0.05)
    report = simulate_weak_experiment(exp, 10**6, seed=42)
    assert abs(report.normalized_estimate - (-1.0)) <= 3 * report.stderr / 0.05
    assert report.n_postselected <= report.n_total


def test_trivial_postselection_on_eigenstate():
    p = qubit_protocol(S0, SIGMA_Z, 0.03)
    exp = qubit_experiment(p, S0)
    report = simulate_weak_experiment(exp, 200_000, seed=5)
    assert report.n_postselected == report.n_total  # postselection always succeeds
    assert abs(report.normalized_estimate - 1.0) <= 3 * report.stderr / 0.03


def test_conditional_average_beyond_the_spectrum_at_adequate_coupling():
    # analytic limit 100 for a +-1 observable; at coupling 1e-3 the
    # exact conditional value is ~99 and the estimator reaches it while
    # every recorded value stays inside the meter spectrum {-1/2, +1/2}
    f = StateVector([0.01, 1.0]).unit()
    assert abs(weak_value_finite(S0, SIGMA_X, None, f) - 100.0) <= 1e-10
    p = qubit_protocol(S0, SIGMA_X, 1e-3)
    exp = qubit_experiment(p, f)
    report = simulate_weak_experiment(exp, 10**7, seed=11)
    norm_stderr = report.stderr / 1e-3
    assert abs(report.normalized_estimate - 100.0) <= 4 * norm_stderr
    assert set(np.round(exp.values[exp.recorded], 12)) <= {-0.5, 0.5}
    assert abs(report.mean_meter) <= 0.5


def test_simulation_is_deterministic():
    exp = phase_family_experiment(1j, 0.05)
    a = simulate_weak_experiment(exp, 300_000, seed=123)
    b = simulate_weak_experiment(exp, 300_000, seed=123)
    assert a == b
    c = simulate_weak_experiment(exp, 300_000, seed=124)
    assert c != a


def test_postselection_rate_matches_born_probability():
    eps = 0.08
    p = qubit_protocol(S0, SIGMA_X, eps, coupling_unitary=eta_phase_unitary(S0, 1.0))
    exp = qubit_experiment(p, F_DIAG)
    n = 400_000
    report = simulate_weak_experiment(exp, n, seed=9)
    born = postselection_probability(p, F_DIAG)
    assert abs(exp.postselection_probability - born) <= 1e-12
    sd = np.sqrt(born * (1 - born) * n)
    assert abs(report.n_postselected - born * n) <= 4 * sd


def test_estimator_consistency_across_seeds():
    exp = phase_family_experiment(-1.0, 0.05)
    estimates = []
    stderrs = []
    for seed in range(32):
        rep = simulate_weak_experiment(exp, 200_000, seed=seed)
        estimates.append(rep.normalized_estimate)
        stderrs.append(rep.stderr / 0.05)
    pooled = float(np.sqrt(np.mean(np.square(stderrs)) / len(stderrs)))
    assert abs(float(np.mean(estimates)) - (-1.0)) <= 4 * pooled


def test_estimate_matches_exact_conditional_mean():
    exp = phase_family_experiment(np.exp(1j * np.pi / 3), 0.05)
    report = simulate_weak_experiment(exp, 10**6, seed=31)
    exact = exp.conditional_mean() / 0.05
    assert abs(report.normalized_estimate - exact) <= 4 * report.stderr / 0.05


def test_empty_conditional_raises():
    f = StateVector([0.01, 1.0]).unit()
    p = qubit_protocol(S0, SIGMA_X, 0.001)
    exp = qubit_experiment(p, f)  # postselection probability ~1e-4
    with pytest.raises(EmptyConditionalError):
        simulate_weak_experiment(exp, 5, seed=2)


def test_near_orthogonal_postselection_warns():
    p = qubit_protocol(S0, SIGMA_X, 0.05)
    with pytest.warns(RuntimeWarning):
        qubit_experiment(p, basis_state(2, 1))


def test_experiment_probability_validation():
    with pytest.raises(DomainError):
        DiscreteExperiment(
            values=np.array([0.5, -0.5]),
            recorded=np.array([True, True]),
            probs=np.array([0.5, 0.4]),
            epsilon=0.1,
        )


# ---------------------------------------------------------------------------
# other meters


def test_general_meter_experiment_against_exact_quotient():
    f = StateVector([1.0, 0.3 - 0.4j]).unit()
    p = general_meter_protocol(S0, SIGMA_X, f, 0.7, 0.05)
    exp = general_meter_experiment(p)
    exact = general_meter_conditional_expectation(p)
    assert abs(exp.conditional_mean() / 0.05 - exact) <= 1e-10
    report = simulate_weak_experiment(exp, 10**6, seed=17)
    assert abs(report.normalized_estimate - exact) <= 4 * report.stderr / 0.05


def test_binned_grid_experiment_is_distribution_faithful():
    sc = AAVScenario(S0, SIGMA_X, F_DIAG, gaussian_meter(1.0), default_grid(), 3e-2)
    bp = binned_position(0.5, sc.grid)
    exp = binned_grid_experiment(sc, bp)
    assert abs(exp.postselection_probability - aav_postselection_probability(sc)) <= 1e-9
    report = simulate_weak_experiment(exp, 300_000, seed=77)
    exact = exp.conditional_mean() / sc.epsilon
    assert abs(report.normalized_estimate - exact) <= 4 * report.stderr / sc.epsilon
    again = simulate_weak_experiment(exp, 300_000, seed=77)
    assert report == again


def test_binned_values_are_bin_eigenvalues():
    sc = AAVScenario(S0, SIGMA_X, F_DIAG, gaussian_meter(1.0), default_grid(), 3e-2)
    bp = binned_position(0.5, sc.grid)
    exp = binned_grid_experiment(sc, bp)
    remainders = np.abs(exp.values / 0.5 - np.round(exp.values / 0.5))
    assert np.max(remainders) <= 1e-12


# ---------------------------------------------------------------------------
# sample cost


def make_phase_experiment(eps):
    return phase_family_experiment(1.0, eps)


def test_sample_cost_scales_inverse_square():
    points = sample_cost_curve(make_phase_experiment, 0.05, (0.2, 0.1, 0.05), seed=3)
    assert all(not p.cap_exceeded for p in points)
    slope = cost_slope(points)
    assert -2.4 <= slope <= -1.6
    # halving the coupling multiplies the cost by four, within a factor two
    ratio = points[2].trials_needed / points[1].trials_needed
    assert 2.0 <= ratio <= 8.0


def test_zero_variance_meter_needs_constant_trials():
    # observable = identity and coupling 1/sqrt(2) align the meter with
    # one readout eigenvector: every trial records the same value
    eps = 1.0 / np.sqrt(2.0)
    p = qubit_protocol(S0, identity_operator(2), eps)
    exp = qubit_experiment(p, S0)
    point = trials_for_precision(exp, 0.05, seed=4)
    assert point.trials_needed == 4096
    assert point.achieved_precision == 0.0


def test_trial_cap_is_reported_not_raised():
    exp = phase_family_experiment(1.0, 0.01)
    point = trials_for_precision(exp, 1e-6, seed=6, trial_cap=20_000)
    assert point.cap_exceeded
    assert point.trials_needed <= 20_000
    assert point.achieved_precision > 1e-6


def test_composite_experiment_merges_degenerate_readout_values():
    # readout with a doubly degenerate eigenvalue collapses to one atom
    # per (value, postselection flag)
    p = qubit_protocol(S0, SIGMA_X, 0.1)
    exp = composite_experiment(coupled_state(p), p.layout, identity_operator(2), F_DIAG, 0.1)
    assert len(exp.values) == 2
    assert set(exp.values) == {1.0}
