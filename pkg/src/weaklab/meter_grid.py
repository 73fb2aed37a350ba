"""Position-meter protocol on a discretized real line.

The meter is a square-integrable wavefunction; the interaction
``epsilon * (A x P)`` translates each spectral branch of the system
observable by ``epsilon`` times its eigenvalue, and the position average
of the translated packet is read out.  Meter functions are closed-form
evaluators, so translation, dilation and phase twisting are exact; the
only discretization error is the fixed trapezoid quadrature on a uniform
grid.  The momentum operator itself is never differenced numerically:
its one role, generating translations, is applied in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegeneratePostselectionError,
    DomainError,
    GridSupportError,
    LayoutError,
    TagError,
    UndefinedWeakValueError,
)
from .qlin import Operator, StateVector, hermitian_eigensystem, inner
from .protocols import ORTHOGONAL_OVERLAP_FLOOR, V_FIXES_STATE_ATOL

METER_NORM_ATOL = 1e-8
METER_CENTER_ATOL = 1e-8
BOUNDARY_MASS_LIMIT = 1e-6
BOUNDARY_CELLS = 4

DEFAULT_GRID_POINTS = 8192
DEFAULT_GRID_HALFWIDTH_SIGMAS = 16.0


@dataclass(frozen=True)
class Grid:
    """Uniform position grid with ``n_points`` samples from ``q_min``.

    The spacing is ``(q_max - q_min) / n_points`` and the sample points
    are ``q_min + i*h`` for ``i = 0 .. n_points-1``.  Quadrature uses
    trapezoid weights (half weight at the two end samples); for the
    decaying integrands used here the end corrections vanish and the
    rule converges superalgebraically.
    """

    q_min: float
    q_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 2:
            raise DomainError("a grid needs at least two points")
        if not self.q_min < self.q_max:
            raise DomainError("grid requires q_min < q_max")

    @property
    def spacing(self) -> float:
        return (self.q_max - self.q_min) / self.n_points

    @property
    def points(self) -> np.ndarray:
        return self.q_min + self.spacing * np.arange(self.n_points)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.q_min, self.q_max, self.n_points * factor)

    def scaled(self, factor: float) -> "Grid":
        """Grid dilated by ``1/factor`` (used to trade coupling for meter width)."""
        return Grid(self.q_min / factor, self.q_max / factor, self.n_points)


def default_grid(sigma: float = 1.0, n_points: int = DEFAULT_GRID_POINTS) -> Grid:
    half = DEFAULT_GRID_HALFWIDTH_SIGMAS * sigma
    return Grid(-half, half, n_points)


class MeterFunction:
    """Closed-form meter wavefunction ``q -> m(q)``.

    Subclasses provide vectorized ``values`` and ``derivative`` and say
    whether the function is real-valued.  Instances are immutable.
    """

    is_real: bool = True

    def values(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def sample(self, grid: Grid) -> np.ndarray:
        return np.asarray(self.values(grid.points), dtype=np.complex128)


@dataclass(frozen=True)
class GaussianMeter(MeterFunction):
    """Square root of a centered normal density with standard deviation sigma."""

    sigma: float = 1.0
    is_real = True

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise DomainError("sigma must be positive")

    def values(self, q):
        q = np.asarray(q, dtype=float)
        amp = (2.0 * math.pi * self.sigma**2) ** (-0.25)
        return amp * np.exp(-(q**2) / (4.0 * self.sigma**2))

    def derivative(self, q):
        q = np.asarray(q, dtype=float)
        return self.values(q) * (-q / (2.0 * self.sigma**2))


def _bump_profile(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    interior = np.abs(u) < 1.0
    ui = u[interior]
    out[interior] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


def _bump_norm_constant(width: float) -> float:
    # Dense reference quadrature for the fixed profile; the profile is
    # smooth with all derivatives vanishing at the support edge, so the
    # trapezoid value converges superalgebraically.
    u = np.linspace(-1.0, 1.0, 1 << 17)
    vals = _bump_profile(u) ** 2
    integral = float(np.trapezoid(vals, u)) * width
    return 1.0 / math.sqrt(integral)


@dataclass(frozen=True)
class CompactBumpMeter(MeterFunction):
    """Smooth bump supported on ``[center - width, center + width]``."""

    center: float = 0.0
    width: float = 2.0
    is_real = True

    def __post_init__(self):
        if not self.width > 0.0:
            raise DomainError("width must be positive")
        object.__setattr__(self, "_norm_const", _bump_norm_constant(self.width))

    def values(self, q):
        q = np.asarray(q, dtype=float)
        u = (q - self.center) / self.width
        return self._norm_const * _bump_profile(u)

    def derivative(self, q):
        q = np.asarray(q, dtype=float)
        u = (q - self.center) / self.width
        out = np.zeros_like(u)
        interior = np.abs(u) < 1.0
        ui = u[interior]
        out[interior] = (
            self._norm_const
            * np.exp(-1.0 / (1.0 - ui * ui))
            * (-2.0 * ui / (1.0 - ui * ui) ** 2)
            / self.width
        )
        return out


@dataclass(frozen=True)
class PhaseTwistedMeter(MeterFunction):
    """A real base meter multiplied by a unimodular quadratic phase.

    Position statistics are unchanged, but the twist feeds the imaginary
    part of the complex postselected ratio into the readout: the limit
    shifts by ``+2 * twist * Im(w)``.  The sign of the exponent is fixed
    by that convention (equivalently, by requiring the mixed moment
    ``<m, Q P m>`` to equal ``twist + i/2`` for a unit-variance base).
    """

    base: MeterFunction
    twist: float
    is_real = False

    def __post_init__(self):
        if not self.base.is_real:
            raise DomainError("phase twisting is defined for real-valued base meters")

    def values(self, q):
        q = np.asarray(q, dtype=float)
        return np.exp(0.5j * self.twist * q**2) * self.base.values(q)

    def derivative(self, q):
        q = np.asarray(q, dtype=float)
        phase = np.exp(0.5j * self.twist * q**2)
        return phase * (self.base.derivative(q) + 1j * self.twist * q * self.base.values(q))


@dataclass(frozen=True)
class TranslatedMeter(MeterFunction):
    """Exact translate ``q -> base(q - shift)`` (re-evaluation, no interpolation)."""

    base: MeterFunction
    shift: float

    def __post_init__(self):
        object.__setattr__(self, "is_real", self.base.is_real)

    def values(self, q):
        return self.base.values(np.asarray(q, dtype=float) - self.shift)

    def derivative(self, q):
        return self.base.derivative(np.asarray(q, dtype=float) - self.shift)


@dataclass(frozen=True)
class ScaledMeter(MeterFunction):
    """Norm-preserving dilation ``q -> base(q * factor) * sqrt(factor)``."""

    base: MeterFunction
    factor: float

    def __post_init__(self):
        if not self.factor > 0.0:
            raise DomainError("scale factor must be positive")
        object.__setattr__(self, "is_real", self.base.is_real)

    def values(self, q):
        q = np.asarray(q, dtype=float)
        return self.base.values(q * self.factor) * math.sqrt(self.factor)

    def derivative(self, q):
        q = np.asarray(q, dtype=float)
        return self.base.derivative(q * self.factor) * self.factor**1.5


def gaussian_meter(sigma: float) -> MeterFunction:
    return GaussianMeter(sigma)


def translate(m: MeterFunction, beta: float) -> MeterFunction:
    if beta == 0.0:
        return m
    return TranslatedMeter(m, beta)


def phase_twist(m0: MeterFunction, delta: float) -> MeterFunction:
    if delta == 0.0:
        return m0
    return PhaseTwistedMeter(m0, delta)


def scale_meter(m: MeterFunction, eps: float) -> MeterFunction:
    if eps == 1.0:
        return m
    return ScaledMeter(m, eps)


def quad(grid: Grid, values: np.ndarray) -> complex:
    """Trapezoid quadrature with a fixed summation order (pairwise sum)."""
    return complex(np.sum(grid.weights * values))


def grid_inner(grid: Grid, a: np.ndarray, b: np.ndarray) -> complex:
    return quad(grid, np.conj(a) * b)


def grid_norm_sq(grid: Grid, a: np.ndarray) -> float:
    return float(np.real(quad(grid, np.abs(a) ** 2)))


def position_moment(grid: Grid, a: np.ndarray, power: int = 1) -> complex:
    return quad(grid, np.conj(a) * grid.points**power * a)


def momentum_inner(grid: Grid, m: MeterFunction, weight_power: int = 0) -> complex:
    """Matrix element ``<m, Q^k P m>`` using the closed-form derivative."""
    vals = m.sample(grid)
    dvals = np.asarray(m.derivative(grid.points), dtype=np.complex128)
    return quad(grid, np.conj(vals) * grid.points**weight_power * (-1j) * dvals)


def check_meter_on_grid(m: MeterFunction, grid: Grid) -> np.ndarray:
    """Sample and validate an initial meter state: unit mass (1e-8),
    centered reading (1e-8), negligible boundary mass (1e-6)."""
    vals = m.sample(grid)
    check_support(grid, vals)
    nsq = grid_norm_sq(grid, vals)
    if abs(nsq - 1.0) > METER_NORM_ATOL:
        raise DomainError(f"meter mass on the grid is {nsq}, not 1")
    mean = float(np.real(position_moment(grid, vals)))
    if abs(mean) > METER_CENTER_ATOL:
        raise DomainError(f"initial meter reading {mean:.3e} is not centered")
    return vals


def check_support(grid: Grid, values: np.ndarray) -> None:
    """Boundary guard: mass in the outer cells must stay below 1e-6."""
    w = grid.weights
    mass = float(
        np.sum(w[:BOUNDARY_CELLS] * np.abs(values[:BOUNDARY_CELLS]) ** 2)
        + np.sum(w[-BOUNDARY_CELLS:] * np.abs(values[-BOUNDARY_CELLS:]) ** 2)
    )
    if mass > BOUNDARY_MASS_LIMIT:
        raise GridSupportError(
            f"meter mass {mass:.3e} within {BOUNDARY_CELLS} cells of the grid boundary"
        )


@dataclass(frozen=True)
class AAVScenario:
    """Position-meter weak measurement scenario on a grid.

    ``coupling_unitary`` (optional) must fix the prepared state, exactly
    as in the finite protocols; the meter is validated as an admissible
    initial state on the declared grid.
    """

    s: StateVector
    observable: Operator
    final_state: StateVector
    meter: MeterFunction
    grid: Grid
    epsilon: float
    coupling_unitary: Operator | None = None

    def __post_init__(self):
        if not self.s.is_unit():
            raise DomainError("prepared state must be normalized")
        if not self.observable.is_tagged("hermitian"):
            raise TagError("observable must be hermitian")
        if self.observable.dim != self.s.dim:
            raise LayoutError("observable must match the state dimension")
        # zero coupling is allowed here so disturbance checks can pin the
        # uncoupled edge exactly
        if self.epsilon < 0.0:
            raise DomainError("coupling strength must be nonnegative")
        if self.coupling_unitary is not None:
            if self.coupling_unitary.dim != self.s.dim:
                raise LayoutError("coupling unitary must match the state dimension")
            moved = self.coupling_unitary.apply(self.s)
            dev = float(np.linalg.norm(moved.amplitudes - self.s.amplitudes))
            if dev > V_FIXES_STATE_ATOL:
                raise DomainError(f"coupling unitary moves the prepared state by {dev:.3e}")
        check_meter_on_grid(self.meter, self.grid)

    def with_epsilon(self, epsilon: float) -> "AAVScenario":
        return AAVScenario(
            self.s, self.observable, self.final_state, self.meter,
            self.grid, epsilon, self.coupling_unitary,
        )

    def with_grid(self, grid: Grid) -> "AAVScenario":
        return AAVScenario(
            self.s, self.observable, self.final_state, self.meter,
            grid, self.epsilon, self.coupling_unitary,
        )


@dataclass(frozen=True)
class BranchDecomposition:
    """Spectral branches of the coupled state.

    The interaction sends the product start state to a sum over
    eigenbranches: system eigenvector (rotated by the coupling unitary
    if present) tensored with the meter translated by ``epsilon`` times
    the eigenvalue.
    """

    eigenvalues: np.ndarray
    system_vectors: np.ndarray  # column j = (rotated) eigenvector j
    coefficients: np.ndarray  # overlap of the prepared state with eigenvector j
    meter_values: np.ndarray  # row j = translated meter sampled on the grid

    @property
    def n_branches(self) -> int:
        return self.eigenvalues.shape[0]


def branch_decomposition(sc: AAVScenario, hamiltonian_scale: float | None = None,
                         meter: MeterFunction | None = None,
                         grid: Grid | None = None) -> BranchDecomposition:
    scale = sc.epsilon if hamiltonian_scale is None else hamiltonian_scale
    meter = sc.meter if meter is None else meter
    grid = sc.grid if grid is None else grid
    values, basis = hermitian_eigensystem(sc.observable)
    coeffs = np.array([inner(a, sc.s) for a in basis])
    columns = []
    for a in basis:
        vec = a.amplitudes
        if sc.coupling_unitary is not None:
            vec = sc.coupling_unitary.entries @ vec
        columns.append(vec)
    meter_rows = []
    for alpha in values:
        shifted = translate(meter, scale * alpha).sample(grid)
        check_support(grid, shifted)
        meter_rows.append(shifted)
    return BranchDecomposition(
        eigenvalues=values,
        system_vectors=np.column_stack(columns),
        coefficients=coeffs,
        meter_values=np.array(meter_rows),
    )


def postselected_packet(final_state: StateVector, decomp: BranchDecomposition) -> np.ndarray:
    """Meter wavepacket left behind by a successful postselection.

    Projecting the coupled state onto the final system state leaves the
    meter in the branch-weighted superposition of translates computed
    here on the grid.
    """
    f = final_state.unit().amplitudes
    weights = (f.conj() @ decomp.system_vectors) * decomp.coefficients
    return weights @ decomp.meter_values


def aav_conditional_expectation(sc: AAVScenario) -> float:
    """Postselected position average divided by the coupling strength.

    Exact branch decomposition plus grid quadrature; no expansion in the
    coupling strength is performed anywhere.
    """
    ov = inner(sc.final_state.unit(), sc.s)
    if abs(ov) ** 2 < ORTHOGONAL_OVERLAP_FLOOR:
        raise UndefinedWeakValueError("postselection state is orthogonal to the prepared state")
    decomp = branch_decomposition(sc)
    packet = postselected_packet(sc.final_state, decomp)
    weight = grid_norm_sq(sc.grid, packet)
    if weight < 1e-14:
        raise DegeneratePostselectionError(
            f"postselection probability {weight:.3e} is numerically zero"
        )
    numerator = float(np.real(position_moment(sc.grid, packet)))
    return numerator / (sc.epsilon * weight)


def aav_postselection_probability(sc: AAVScenario) -> float:
    decomp = branch_decomposition(sc)
    packet = postselected_packet(sc.final_state, decomp)
    return grid_norm_sq(sc.grid, packet)


def aav_unconditional_expectation(sc: AAVScenario) -> float:
    """Unconditional position average divided by the coupling strength.

    Converges to the bare observable expectation for every admissible
    meter and every state-fixing coupling unitary.
    """
    decomp = branch_decomposition(sc)
    probs = np.abs(decomp.coefficients) ** 2
    num = 0.0
    den = 0.0
    q = sc.grid.points
    for j in range(decomp.n_branches):
        row = decomp.meter_values[j]
        num += probs[j] * float(np.real(quad(sc.grid, np.conj(row) * q * row)))
        den += probs[j] * grid_norm_sq(sc.grid, row)
    return num / (sc.epsilon * den)


def aav_weak_value_analytic(
    s: StateVector,
    observable: Operator,
    coupling_unitary: Operator | None,
    final_state: StateVector,
    delta: float = 0.0,
) -> float:
    """Closed-form weak-coupling limit of the position-meter protocol.

    ``Re(w) + 2*delta*Im(w)`` with ``w = <f, V A s> / <f, V s>`` and
    ``delta`` the phase twist of the meter; twist zero and identity
    coupling give the usual postselected value.
    """
    su = s.unit()
    fu = final_state.unit()
    moved = observable.apply(su)
    fixed = su
    if coupling_unitary is not None:
        moved = coupling_unitary.apply(moved)
        fixed = coupling_unitary.apply(su)
    ov = inner(fu, fixed)
    if abs(ov) ** 2 < ORTHOGONAL_OVERLAP_FLOOR:
        raise UndefinedWeakValueError("postselection state is orthogonal to the prepared state")
    w = inner(fu, moved) / ov
    return float(w.real + 2.0 * delta * w.imag)


def hamiltonian_equivalence_check(
    s: StateVector,
    observable: Operator,
    final_state: StateVector,
    meter: MeterFunction,
    eps: float,
    grid: Grid | None = None,
) -> tuple[float, float]:
    """Two routes to the same postselected average.

    Left: weaken the interaction by ``eps`` and keep the meter, then
    normalize by ``eps``.  Right: keep the full-strength interaction but
    widen the meter by ``1/eps`` (norm-preserving dilation) on the
    correspondingly dilated grid, with no normalization.  The two sides
    agree identically up to roundoff; both are returned.
    """
    grid = default_grid() if grid is None else grid
    lhs_sc = AAVScenario(s.unit(), observable, final_state, meter, grid, eps)
    lhs = aav_conditional_expectation(lhs_sc)

    wide_meter = scale_meter(meter, eps)
    wide_grid = grid.scaled(eps)
    decomp = branch_decomposition(lhs_sc, hamiltonian_scale=1.0, meter=wide_meter, grid=wide_grid)
    packet = postselected_packet(final_state, decomp)
    weight = grid_norm_sq(wide_grid, packet)
    rhs = float(np.real(position_moment(wide_grid, packet))) / weight
    return lhs, rhs
