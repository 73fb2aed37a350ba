import numpy as np
import pytest

from weaklab import (
    AAVScenario,
    CompactBumpMeter,
    DensityMatrix,
    DomainError,
    ResolutionError,
    StateVector,
    binned_position,
    deficit_curve,
    default_grid,
    gaussian_meter,
    hermitian_operator,
    post_measurement_system_state,
    trace_distance,
    translate,
    weakness_deficit,
)
from weaklab.weakness import active_bin_count, binned_inner_by_segment, prepared_state_matrix

SIGMA_Z = hermitian_operator([[1, 0], [0, -1]])
S_TILTED = StateVector([0.6, 0.8])
F_ANY = StateVector([0.8, 0.6])


def bump_scenario(eps, meter=None):
    meter = CompactBumpMeter(width=1.9) if meter is None else meter
    return AAVScenario(S_TILTED, SIGMA_Z, F_ANY, meter, default_grid(), eps)


# ---------------------------------------------------------------------------
# binned position operator


def test_bin_width_must_exceed_spacing():
    grid = default_grid()
    with pytest.raises(ResolutionError):
        binned_position(grid.spacing / 2, grid)


def test_single_bin_support_acts_as_one_eigenvalue():
    grid = default_grid()
    bp = binned_position(0.5, grid)
    g = np.where((grid.points >= 0.7) & (grid.points < 0.9), 1.0, 0.0)
    assert np.allclose(bp.apply(g), 0.5 * g)


def test_bin_eigenvalues_are_exact_multiples():
    bp = binned_position(0.25, default_grid())
    for k in (-3, 0, 7):
        assert bp.eigenvalue(k) == 0.25 * k


def test_bins_resolve_the_identity_on_grid_functions():
    grid = default_grid()
    bp = binned_position(1.0, grid)
    m = gaussian_meter(1.0).sample(grid)
    masses = [float(np.real(v)) for _k, v in binned_inner_by_segment(bp, m, m)]
    assert abs(sum(masses) - 1.0) <= 1e-8
    # every grid point belongs to exactly one bin
    counts = np.zeros(grid.n_points, dtype=int)
    for _k, mask in bp.segments():
        counts += mask.astype(int)
    assert np.all(counts == 1)


def test_binned_operator_stays_within_one_bin_of_position():
    grid = default_grid()
    bp = binned_position(0.5, grid)
    deviation = np.max(np.abs(bp.bin_width * bp.bin_index - grid.points))
    assert deviation <= 0.5 + 1e-12


# ---------------------------------------------------------------------------
# post-measurement state


def test_zero_coupling_returns_prepared_state():
    sc = bump_scenario(0.0)
    bp = binned_position(1.0, sc.grid)
    after = post_measurement_system_state(sc, bp)
    # express the prepared state in the ascending eigenbasis the post
    # state is reported in
    _values, vectors = np.linalg.eigh(SIGMA_Z.entries)
    sigma = vectors.conj().T @ S_TILTED.amplitudes
    prepared = np.outer(sigma, sigma.conj())
    assert np.max(np.abs(after.entries - prepared)) <= 1e-10


def test_post_state_structure_and_oracle_equivalence():
    sc = bump_scenario(1e-2)
    bp = binned_position(1.0, sc.grid)
    after = post_measurement_system_state(sc, bp)
    d = after.entries
    assert np.max(np.abs(d - d.conj().T)) <= 1e-12
    assert abs(np.trace(d).real - 1.0) <= 1e-8
    assert abs(d[0, 1]) <= np.sqrt(abs(d[0, 0] * d[1, 1])) + 1e-12
    # independent route: bin projectors resolve the identity, so the
    # bin-summed overlaps collapse to whole-line overlaps
    values, vectors = np.linalg.eigh(SIGMA_Z.entries)
    sigma = vectors.conj().T @ S_TILTED.amplitudes
    rows = [translate(sc.meter, sc.epsilon * a).sample(sc.grid) for a in values]
    w = sc.grid.weights
    oracle = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            overlap = np.sum(w * np.conj(rows[j]) * rows[i])
            oracle[i, j] = overlap * np.conj(sigma[j]) * sigma[i]
    assert np.max(np.abs(d - oracle)) <= 1e-12


def test_scalar_observable_never_disturbs():
    scalar = hermitian_operator(0.7 * np.eye(2))
    for eps in (0.0, 1e-2, 1e-1):
        sc = AAVScenario(S_TILTED, scalar, F_ANY, CompactBumpMeter(width=1.9), default_grid(), eps)
        bp = binned_position(1.0, sc.grid)
        assert weakness_deficit(sc, bp) <= 1e-10


def test_post_state_requires_matching_grid():
    sc = bump_scenario(1e-2)
    other = binned_position(1.0, default_grid(n_points=4096))
    with pytest.raises(DomainError):
        post_measurement_system_state(sc, other)


# ---------------------------------------------------------------------------
# deficit decay


def test_deficit_vanishes_at_zero_coupling():
    sc = bump_scenario(0.0)
    assert weakness_deficit(sc, binned_position(1.0, sc.grid)) <= 1e-10


def test_deficit_strictly_decreasing_for_compact_meter():
    sc = bump_scenario(1e-1)
    bp = binned_position(1.0, sc.grid)
    curve = deficit_curve(sc, bp, (1e-1, 1e-2, 1e-3))
    values = [d for _e, d in curve]
    assert values[0] > values[1] > values[2]
    assert values[2] < 1e-3


def test_deficit_decreasing_for_gaussian_meter():
    sc = AAVScenario(S_TILTED, SIGMA_Z, F_ANY, gaussian_meter(1.0), default_grid(), 1e-1)
    bp = binned_position(1.0, sc.grid)
    curve = deficit_curve(sc, bp, (1e-1, 1e-2, 1e-3))
    values = [d for _e, d in curve]
    assert values[0] > values[1] > values[2]


def test_deficit_order_of_magnitude_drop_per_decade():
    for meter in (CompactBumpMeter(width=1.9), gaussian_meter(1.0)):
        sc = bump_scenario(1e-1, meter=meter)
        bp = binned_position(1.0, sc.grid)
        d1 = weakness_deficit(sc.with_epsilon(1e-1), bp)
        d2 = weakness_deficit(sc.with_epsilon(1e-2), bp)
        d3 = weakness_deficit(sc.with_epsilon(1e-3), bp)
        assert d2 < d1 and d3 < d2


def test_post_state_validates_as_density_matrix():
    sc = bump_scenario(5e-2)
    bp = binned_position(1.0, sc.grid)
    state = post_measurement_system_state(sc, bp)
    assert isinstance(state, DensityMatrix)
    assert np.min(np.linalg.eigvalsh(state.entries)) >= -1e-9


def test_active_bin_count_constant_below_threshold():
    # support radius 1.9 leaves a 0.1 margin inside the outermost bins,
    # so translations by eps * |eigenvalue| <= 0.1 never open a new bin
    grid = default_grid()
    bp = binned_position(1.0, grid)
    meter = CompactBumpMeter(width=1.9)
    counts = set()
    for eps in (0.09, 0.05, 0.01, 0.001):
        for alpha in (-1.0, 1.0):
            vals = translate(meter, eps * alpha).sample(grid)
            counts.add(active_bin_count(bp, vals))
    assert len(counts) == 1


def test_deficit_matches_distance_between_density_matrices():
    sc = bump_scenario(3e-2)
    bp = binned_position(1.0, sc.grid)
    after = post_measurement_system_state(sc, bp)
    prepared = prepared_state_matrix(sc)
    assert abs(weakness_deficit(sc, bp) - trace_distance(after, prepared)) <= 1e-12
