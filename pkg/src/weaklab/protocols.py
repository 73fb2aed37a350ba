"""Finite-dimensional weak-measurement protocols.

A two-level meter is coupled to the system so weakly (strength
``epsilon``) that reading the meter observable barely disturbs the
system state, yet the epsilon-normalized meter average reproduces the
expectation of the system observable.  Conditioning that average on a
successful postselection and taking the weak-coupling limit produces a
"weak value" -- and the central point of this module is that the limit
depends on the protocol: every unitary ``V`` fixing the prepared state
yields a different, equally legitimate protocol with a different limit.

The coupling-strength dependence of every quantity here is exact
(closed-form states, spectral-synthesis exponentials); nothing is
series-truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convergence import loglog_slope
from .errors import (
    DegeneratePostselectionError,
    DomainError,
    LayoutError,
    ProtocolError,
    TagError,
    UndefinedWeakValueError,
)
from .qlin import (
    Operator,
    StateVector,
    TensorLayout,
    hermitian_expi,
    hermitian_eigensystem,
    identity_operator,
    inner,
    tensor_op,
    tensor_state,
)
from .states import projector

V_FIXES_STATE_ATOL = 1e-10
METER_CENTER_ATOL = 1e-10
COUPLING_NORMALIZATION_ATOL = 1e-9
POSTSELECTION_FLOOR = 1e-14
ORTHOGONAL_OVERLAP_FLOOR = 1e-10

#: Default coupling-strength schedule for limit fits: two decades, well
#: clear of double-precision cancellation at the small end.
DEFAULT_EPS_SCHEDULE = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)


def default_meter_observable(off_diagonal: complex = 0.5, corner: float = 0.0) -> Operator:
    """Two-level meter readout with zero upper-left entry.

    The vanishing (0, 0) entry is what makes the epsilon-normalized
    average converge; the off-diagonal defaults to 1/2 so the limit is
    the bare observable expectation.  The (1, 1) entry only enters at
    second order and defaults to zero.
    """
    b = np.array([[0.0, off_diagonal], [np.conj(off_diagonal), corner]], dtype=np.complex128)
    return Operator(b, frozenset({"hermitian"}))


def orthogonal_partner(s: StateVector) -> StateVector:
    """Deterministic unit vector orthogonal to a two-dimensional state."""
    if s.dim != 2:
        raise LayoutError("orthogonal_partner is defined for dimension 2")
    a, b = s.unit().amplitudes
    return StateVector(np.array([-np.conj(b), np.conj(a)]))


def eta_phase_unitary(s: StateVector, eta: complex) -> Operator:
    """Unitary acting as identity on ``s`` and as the phase ``eta`` on its
    orthogonal complement (dimension 2, ``|eta| = 1``)."""
    if abs(abs(eta) - 1.0) > 1e-12:
        raise DomainError(f"eta must lie on the unit circle, got |eta| = {abs(eta)}")
    su = s.unit()
    perp = orthogonal_partner(su)
    entries = projector(su).entries + eta * projector(perp).entries
    return Operator(entries, frozenset({"unitary"}))


def unitary_fixing_state(s: StateVector, source: StateVector, target: StateVector) -> Operator:
    """Unitary ``V`` with ``V s = s`` mapping ``source`` to ``target``.

    ``source`` and ``target`` must have equal-norm components orthogonal
    to ``s``; the map is completed deterministically on the rest of the
    orthogonal complement (Gram-Schmidt seeded by the standard basis),
    which witnesses constructively that such a ``V`` always exists.
    """
    su = s.unit()
    dim = su.dim

    def perp_part(v: StateVector) -> np.ndarray:
        return v.amplitudes - inner(su, v) * su.amplitudes

    u = perp_part(source)
    w = perp_part(target)
    nu, nw = np.linalg.norm(u), np.linalg.norm(w)
    if abs(nu - nw) > 1e-10 * max(1.0, nu):
        raise DomainError("source and target have different components orthogonal to s")
    if nu < 1e-12:
        return identity_operator(dim)

    def complete_basis(first: np.ndarray) -> list[np.ndarray]:
        basis = [first / np.linalg.norm(first)]
        anchors = [su.amplitudes] + basis
        for j in range(dim):
            cand = np.zeros(dim, dtype=np.complex128)
            cand[j] = 1.0
            for b in anchors:
                cand = cand - np.vdot(b, cand) * b
            n = np.linalg.norm(cand)
            if n > 1e-8:
                cand /= n
                basis.append(cand)
                anchors.append(cand)
            if len(basis) == dim - 1:
                break
        return basis

    b_in = complete_basis(u)
    b_out = complete_basis(w)
    entries = np.outer(su.amplitudes, su.amplitudes.conj())
    for bi, bo in zip(b_in, b_out):
        entries += np.outer(bo, bi.conj())
    return Operator(entries, frozenset({"unitary"}))


@dataclass(frozen=True)
class QubitMeterProtocol:
    """Weak measurement of ``observable`` on ``s`` through a two-level meter.

    ``coupling_unitary`` is the protocol choice: any unitary fixing the
    prepared state (checked to 1e-10).  It leaves the weakness of the
    measurement and the unconditional average untouched but changes the
    postselected limit.
    """

    s: StateVector
    observable: Operator
    coupling_unitary: Operator
    meter_obs: Operator
    epsilon: float

    def __post_init__(self):
        if not self.s.is_unit():
            raise DomainError("prepared state must be normalized")
        if not self.observable.is_tagged("hermitian"):
            raise TagError("observable must be hermitian")
        if not self.coupling_unitary.is_tagged("unitary"):
            raise TagError("coupling unitary must carry the unitary tag")
        if self.observable.dim != self.s.dim or self.coupling_unitary.dim != self.s.dim:
            raise LayoutError("system operators must match the state dimension")
        if self.meter_obs.dim != 2 or not self.meter_obs.is_tagged("hermitian"):
            raise TagError("meter observable must be a 2x2 hermitian operator")
        if not self.epsilon > 0.0:
            raise DomainError("coupling strength must be positive")
        moved = self.coupling_unitary.apply(self.s)
        dev = float(np.linalg.norm(moved.amplitudes - self.s.amplitudes))
        if dev > V_FIXES_STATE_ATOL:
            raise DomainError(f"coupling unitary moves the prepared state by {dev:.3e}")

    @property
    def layout(self) -> TensorLayout:
        return TensorLayout(self.s.dim, 2)

    def with_epsilon(self, epsilon: float) -> "QubitMeterProtocol":
        return QubitMeterProtocol(self.s, self.observable, self.coupling_unitary, self.meter_obs, epsilon)


def qubit_protocol(
    s: StateVector,
    observable: Operator,
    epsilon: float,
    coupling_unitary: Operator | None = None,
    meter_obs: Operator | None = None,
) -> QubitMeterProtocol:
    """Convenience constructor with identity coupling and the default meter."""
    v = coupling_unitary if coupling_unitary is not None else identity_operator(s.dim)
    b = meter_obs if meter_obs is not None else default_meter_observable()
    return QubitMeterProtocol(s.unit(), observable, v, b, epsilon)


def coupled_state(p: QubitMeterProtocol) -> StateVector:
    """Entangled system-meter state prepared by the protocol.

    The meter rides in its first basis state with amplitude
    ``sqrt(1 - eps^2)`` and carries ``V A s`` in its second with
    amplitude ``eps``; the result is exactly normalized.
    """
    eps = p.epsilon
    if not 0.0 < eps < 1.0:
        raise DomainError(f"coupled state requires 0 < epsilon < 1, got {eps}")
    a_s = p.observable.apply(p.s)
    if a_s.norm == 0.0:
        raise DomainError("observable annihilates the prepared state")
    va_s = p.coupling_unitary.apply(a_s)
    m0 = np.array([1.0, 0.0], dtype=np.complex128)
    m1 = np.array([0.0, 1.0], dtype=np.complex128)
    raw = math.sqrt(1.0 - eps * eps) * np.kron(p.s.amplitudes, m0) + eps * np.kron(va_s.amplitudes, m1)
    denom = math.sqrt(1.0 - eps * eps + eps * eps * a_s.norm**2)
    return StateVector(raw / denom)


def _sandwich(state: StateVector, op_sys: Operator, op_met: Operator) -> float:
    composite = tensor_op(op_sys, op_met)
    val = np.vdot(state.amplitudes, composite.entries @ state.amplitudes)
    return float(np.real(val))


def normalized_meter_expectation(p: QubitMeterProtocol) -> float:
    """Meter average in the coupled state, divided by the coupling strength.

    Requires a vanishing (0, 0) meter entry; otherwise the constant
    offset acts like a systematic misalignment and the normalized
    average has no weak-coupling limit.
    """
    if abs(p.meter_obs.entries[0, 0]) > 1e-12:
        raise ProtocolError("meter observable must have zero (0, 0) entry for normalized averages")
    r = coupled_state(p)
    ident = identity_operator(p.s.dim)
    return _sandwich(r, ident, p.meter_obs) / p.epsilon


def conditional_meter_expectation(p: QubitMeterProtocol, final_state: StateVector) -> float:
    """Meter average conditioned on postselecting the system to ``final_state``.

    Evaluated exactly at the protocol's coupling strength as the quotient
    of the joint expectation (postselector times meter observable) by the
    postselection probability.
    """
    r = coupled_state(p)
    p_f = projector(final_state)
    ident2 = identity_operator(2)
    weight = _sandwich(r, p_f, ident2)
    if weight < POSTSELECTION_FLOOR:
        raise DegeneratePostselectionError(f"postselection probability {weight:.3e} is numerically zero")
    return _sandwich(r, p_f, p.meter_obs) / weight


def postselection_probability(p: QubitMeterProtocol, final_state: StateVector) -> float:
    """Probability that the postselection succeeds in the coupled state."""
    r = coupled_state(p)
    return _sandwich(r, projector(final_state), identity_operator(2))


def _overlap_or_raise(s: StateVector, final_state: StateVector) -> complex:
    ov = inner(final_state.unit(), s.unit())
    if abs(ov) ** 2 < ORTHOGONAL_OVERLAP_FLOOR:
        raise UndefinedWeakValueError(
            "postselection state is (numerically) orthogonal to the prepared state"
        )
    return ov


def complex_weak_value(
    s: StateVector,
    observable: Operator,
    final_state: StateVector,
    coupling_unitary: Operator | None = None,
) -> complex:
    """The complex ratio ``<f, V A s> / <f, s>`` underlying all the limits here."""
    su = s.unit()
    fu = final_state.unit()
    ov = _overlap_or_raise(su, fu)
    moved = observable.apply(su)
    if coupling_unitary is not None:
        moved = coupling_unitary.apply(moved)
    return inner(fu, moved) / ov


def weak_value_finite(
    s: StateVector,
    observable: Operator,
    coupling_unitary: Operator | None,
    final_state: StateVector,
) -> float:
    """Weak-coupling limit of the postselected, normalized meter average.

    With identity coupling this is the usual postselected value
    ``Re(<f, A s> / <f, s>)``; a nontrivial state-fixing unitary replaces
    ``A s`` by ``V A s`` and generally changes the number, which is the
    sense in which these limits are protocol-dependent.
    """
    if coupling_unitary is not None:
        su = s.unit()
        moved = coupling_unitary.apply(su)
        dev = float(np.linalg.norm(moved.amplitudes - su.amplitudes))
        if dev > V_FIXES_STATE_ATOL:
            raise DomainError(f"coupling unitary moves the prepared state by {dev:.3e}")
    return float(np.real(complex_weak_value(s, observable, final_state, coupling_unitary)))


def strong_conditional_expectation(
    s: StateVector, observable: Operator, final_state: StateVector
) -> float:
    """Average of a projective measurement of the observable, conditioned on
    a subsequent successful postselection.

    This is an honest conditional expectation, hence always a convex
    combination of eigenvalues -- unlike the weak-protocol limits, which
    can leave the spectrum entirely.
    """
    su = s.unit()
    fu = final_state.unit()
    values, basis = hermitian_eigensystem(observable)
    num = 0.0
    den = 0.0
    for alpha, a in zip(values, basis):
        w = abs(inner(a, su)) ** 2 * abs(inner(fu, a)) ** 2
        num += alpha * w
        den += w
    if den < POSTSELECTION_FLOOR:
        raise DegeneratePostselectionError("postselection never succeeds after the strong measurement")
    return num / den


@dataclass(frozen=True)
class GeneralMeterProtocol:
    """Weak measurement through an arbitrary finite-dimensional meter.

    The system couples to a meter generator ``G`` via the interaction
    ``epsilon * (A x G)`` and a meter observable ``B`` is read out.
    Admissibility requires a centered readout (``<m, B m> = 0``) and the
    coupling normalization ``2 Im <m, B G m> = 1``, which makes the
    epsilon-normalized average converge to the observable expectation.
    The leftover real part ``Re <m, B G m>`` is a free protocol knob.
    """

    s: StateVector
    observable: Operator
    final_state: StateVector
    meter_state: StateVector
    meter_obs: Operator
    generator: Operator
    epsilon: float

    def __post_init__(self):
        if not self.s.is_unit() or not self.meter_state.is_unit():
            raise DomainError("system and meter states must be normalized")
        if not self.observable.is_tagged("hermitian"):
            raise TagError("observable must be hermitian")
        if not self.meter_obs.is_tagged("hermitian") or not self.generator.is_tagged("hermitian"):
            raise TagError("meter observable and generator must be hermitian")
        if self.meter_obs.dim != self.meter_state.dim or self.generator.dim != self.meter_state.dim:
            raise LayoutError("meter operators must match the meter state dimension")
        if not self.epsilon > 0.0:
            raise DomainError("coupling strength must be positive")
        m = self.meter_state.amplitudes
        centered = complex(np.vdot(m, self.meter_obs.entries @ m))
        if abs(centered) > METER_CENTER_ATOL:
            raise ProtocolError(f"meter readout is not centered: <m, B m> = {centered:.3e}")
        if abs(2.0 * self._bg_moment().imag - 1.0) > COUPLING_NORMALIZATION_ATOL:
            raise ProtocolError("coupling normalization 2 Im<m, B G m> = 1 violated")

    def _bg_moment(self) -> complex:
        m = self.meter_state.amplitudes
        return complex(np.vdot(m, self.meter_obs.entries @ (self.generator.entries @ m)))

    @property
    def readout_skew(self) -> float:
        """The free protocol parameter ``Re <m, B G m>``."""
        return float(self._bg_moment().real)

    @property
    def layout(self) -> TensorLayout:
        return TensorLayout(self.s.dim, self.meter_state.dim)

    def with_epsilon(self, epsilon: float) -> "GeneralMeterProtocol":
        return GeneralMeterProtocol(
            self.s, self.observable, self.final_state, self.meter_state,
            self.meter_obs, self.generator, epsilon,
        )


def skewed_qubit_meter(skew: float) -> tuple[StateVector, Operator, Operator]:
    """Two-level meter (state, readout, generator) realizing a given skew.

    The generator exchanges the two meter levels and the readout's
    off-diagonal is ``skew + i/2``, which satisfies the centering and
    normalization conditions for every real ``skew``.
    """
    m = StateVector(np.array([1.0, 0.0]))
    g = Operator(np.array([[0.0, 1.0], [1.0, 0.0]]), frozenset({"hermitian"}))
    b = Operator(
        np.array([[0.0, skew + 0.5j], [skew - 0.5j, 0.0]]),
        frozenset({"hermitian"}),
    )
    return m, b, g


def general_meter_protocol(
    s: StateVector,
    observable: Operator,
    final_state: StateVector,
    skew: float,
    epsilon: float,
) -> GeneralMeterProtocol:
    m, b, g = skewed_qubit_meter(skew)
    return GeneralMeterProtocol(s.unit(), observable, final_state, m, b, g, epsilon)


def general_meter_coupled_state(p: GeneralMeterProtocol) -> StateVector:
    """Apply the exact interaction unitary to the product start state."""
    coupling = tensor_op(p.observable, p.generator)
    evolution = hermitian_expi(coupling, p.epsilon)
    return evolution.apply(tensor_state(p.s, p.meter_state))


def general_meter_conditional_expectation(p: GeneralMeterProtocol) -> float:
    """Postselected, epsilon-normalized meter average at finite coupling."""
    u = general_meter_coupled_state(p)
    p_f = projector(p.final_state)
    ident = identity_operator(p.meter_state.dim)
    weight = _sandwich(u, p_f, ident)
    if weight < POSTSELECTION_FLOOR:
        raise DegeneratePostselectionError(f"postselection probability {weight:.3e} is numerically zero")
    return _sandwich(u, p_f, p.meter_obs) / (p.epsilon * weight)


def general_meter_weak_value(
    p: GeneralMeterProtocol,
    check_schedule=None,
    slope_floor: float = 0.9,
) -> float:
    """Weak-coupling limit of the postselected average for this meter.

    Closed form: ``Re(wv) + 2 * skew * Im(wv)`` with
    ``wv = <f, A s> / <f, s>``.  When ``check_schedule`` is given, the
    finite-coupling quotient is also evaluated (via exact exponentials)
    across that schedule and the first-order approach to the closed form
    is verified by a log-log slope fit.
    """
    wv = complex_weak_value(p.s, p.observable, p.final_state)
    limit = float(wv.real + 2.0 * p.readout_skew * wv.imag)
    if check_schedule is not None:
        errors = [
            abs(general_meter_conditional_expectation(p.with_epsilon(e)) - limit)
            for e in check_schedule
        ]
        slope = loglog_slope(list(check_schedule), errors)
        if slope < slope_floor:
            raise ProtocolError(
                f"finite-coupling quotient approaches the limit with slope {slope:.3f} < {slope_floor}"
            )
    return limit
