import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from weaklab import (
    DensityMatrix,
    DomainError,
    Operator,
    ResolutionOfIdentity,
    StateVector,
    TagError,
    basis_state,
    born_probability,
    hermitian_eigensystem,
    identity_operator,
    projective_measure,
    projector,
    tensor_op,
    tensor_state,
)
from conftest import random_hermitian, random_state


def eigenprojector_resolution(op):
    values, basis = hermitian_eigensystem(op)
    return ResolutionOfIdentity(tuple(projector(b) for b in basis))


def test_projector_basis_vector():
    p = projector(StateVector([1.0, 0.0]))
    assert np.allclose(p.entries, [[1, 0], [0, 0]])


def test_projector_handles_unnormalized_input():
    p = projector(StateVector([1.0, 1.0]))
    assert np.allclose(p.entries, [[0.5, 0.5], [0.5, 0.5]])
    # same ray, same projector
    q = projector(StateVector([2.0j, 2.0j]))
    assert np.allclose(p.entries, q.entries, atol=1e-14)


def test_projector_action_is_overlap_times_vector(rng):
    v = random_state(rng, 4)
    w = random_state(rng, 4)
    lhs = projector(v).apply(w).amplitudes
    rhs = np.vdot(v.amplitudes, w.amplitudes) * v.amplitudes
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_projector_rejects_zero_vector():
    with pytest.raises(DomainError):
        projector(StateVector([0.0, 0.0]))


def test_born_probability_certainty(rng):
    v = random_state(rng, 3)
    rho = DensityMatrix(projector(v))
    assert abs(born_probability(rho, projector(v)) - 1.0) <= 1e-12


def test_born_probability_maximally_mixed():
    rho = DensityMatrix(Operator(np.eye(2) / 2, frozenset({"hermitian"})))
    assert abs(born_probability(rho, projector(basis_state(2, 0))) - 0.5) <= 1e-12


def test_born_probability_superposition_component():
    v = StateVector([1.0, 1.0]).unit()
    rho = DensityMatrix(projector(v))
    assert abs(born_probability(rho, projector(basis_state(2, 0))) - 0.5) <= 1e-12


def test_born_probability_requires_projector_tag(rng):
    rho = DensityMatrix(projector(random_state(rng, 2)))
    with pytest.raises(TagError):
        born_probability(rho, random_hermitian(rng, 2))


@settings(max_examples=20, deadline=None)
@given(
    re=arrays(np.float64, (3,), elements=st.floats(-2, 2, allow_nan=False)),
    im=arrays(np.float64, (3,), elements=st.floats(-2, 2, allow_nan=False)),
)
def test_pure_and_mixed_born_rules_agree(re, im):
    amps = re + 1j * im
    if np.linalg.norm(amps) < 1e-3:
        amps = amps + 1.0
    v = StateVector(amps)
    rho = DensityMatrix(projector(v))
    e = projector(StateVector([1.0, 2.0, -1.0j]))
    direct = e.apply(v).norm ** 2 / v.norm**2
    assert abs(born_probability(rho, e) - direct) <= 1e-12


def test_projective_measure_on_eigenvector(rng):
    op = random_hermitian(rng, 3)
    res = eigenprojector_resolution(op)
    _values, basis = hermitian_eigensystem(op)
    outcomes = projective_measure(basis[1], res)
    probs = [o.probability for o in outcomes]
    assert abs(probs[1] - 1.0) <= 1e-10
    assert probs[0] <= 1e-10 and probs[2] <= 1e-10


def test_projective_measure_entangled_meter_readout():
    e = StateVector(
        (tensor_state(basis_state(2, 0), basis_state(2, 0)).amplitudes
         + tensor_state(basis_state(2, 1), basis_state(2, 1)).amplitudes)
        / np.sqrt(2)
    )
    res = ResolutionOfIdentity(
        (
            tensor_op(identity_operator(2), projector(basis_state(2, 0))),
            tensor_op(identity_operator(2), projector(basis_state(2, 1))),
        )
    )
    outcomes = projective_measure(e, res)
    for i, outcome in enumerate(outcomes):
        assert abs(outcome.probability - 0.5) <= 1e-12
        expected = tensor_state(basis_state(2, i), basis_state(2, i)).amplitudes / np.sqrt(2)
        assert np.allclose(outcome.post_state.amplitudes, expected, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(
    re=arrays(np.float64, (4,), elements=st.floats(-2, 2, allow_nan=False)),
    im=arrays(np.float64, (4,), elements=st.floats(-2, 2, allow_nan=False)),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_projective_measure_probabilities_sum_to_one(re, im, seed):
    amps = re + 1j * im
    if np.linalg.norm(amps) < 1e-3:
        amps = amps + 1.0
    v = StateVector(amps)
    res = eigenprojector_resolution(random_hermitian(np.random.default_rng(seed), 4))
    outcomes = projective_measure(v, res)
    assert abs(sum(o.probability for o in outcomes) - 1.0) <= 1e-10


def test_measurement_is_repeatable(rng):
    v = random_state(rng, 3)
    res = eigenprojector_resolution(random_hermitian(rng, 3))
    outcomes = projective_measure(v, res)
    best = max(outcomes, key=lambda o: o.probability)
    again = projective_measure(best.post_state.unit(), res)
    assert abs(again[best.index].probability - 1.0) <= 1e-10


def test_trivial_resolution_leaves_state_fixed(rng):
    v = random_state(rng, 3)
    res = ResolutionOfIdentity((identity_operator(3),))
    (outcome,) = projective_measure(v, res)
    assert abs(outcome.probability - 1.0) <= 1e-12
    assert np.allclose(outcome.post_state.amplitudes, v.amplitudes)


def test_low_probability_outcomes_are_retained():
    v = StateVector([1.0, 1e-9])
    res = ResolutionOfIdentity((projector(basis_state(2, 0)), projector(basis_state(2, 1))))
    outcomes = projective_measure(v, res)
    assert len(outcomes) == 2
    assert outcomes[1].probability < 1e-15


def test_resolution_validation():
    p0 = projector(basis_state(2, 0))
    with pytest.raises(DomainError):
        ResolutionOfIdentity((p0,))  # does not sum to identity
    with pytest.raises(DomainError):
        ResolutionOfIdentity((p0, projector(StateVector([1.0, 1.0]))))  # not orthogonal
    with pytest.raises(TagError):
        ResolutionOfIdentity((p0, Operator(np.diag([0.0, 1.0]))))  # untagged member
