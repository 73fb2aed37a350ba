"""Rigorous weakness check via a binned position observable.

Reading a continuous position observable leaves the post-measurement
state undefined, so the position operator is replaced by its pure-point
surrogate ``B g (q) = bin_width * floor(q / bin_width) * g(q)``, whose
eigenspaces are the functions supported on one bin.  Measuring that
observable (without recording the outcome) leaves the system in a mixed
state assembled bin by bin; the distance of that state from the prepared
one is the measurement's disturbance, and it decays as the coupling is
switched off.  Only the decay to zero is guaranteed; rates reported here
are empirical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResolutionError
from .meter_grid import AAVScenario, Grid, branch_decomposition
from .qlin import DensityMatrix, Operator, trace_distance

POSITIVITY_REPAIR_FLOOR = -1e-9
ACTIVE_BIN_MASS = 1e-28


@dataclass(frozen=True)
class BinnedPosition:
    """Partition of the grid into position bins of width ``bin_width``.

    Bin ``k`` covers ``[k*bin_width, (k+1)*bin_width)`` and carries the
    eigenvalue ``k*bin_width``; every grid point belongs to exactly one
    bin, so the bin projectors form a resolution of the identity on grid
    functions and the binned operator differs from the position operator
    by at most ``bin_width`` in the sup sense.
    """

    bin_width: float
    grid: Grid
    bin_index: np.ndarray

    @property
    def active_indices(self) -> np.ndarray:
        return np.unique(self.bin_index)

    def eigenvalue(self, k: int) -> float:
        return self.bin_width * k

    def segments(self) -> list[tuple[int, np.ndarray]]:
        """(bin label, boolean mask over grid points) for every occupied bin."""
        return [(int(k), self.bin_index == k) for k in self.active_indices]

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.bin_width * self.bin_index * values


def binned_position(bin_width: float, grid: Grid) -> BinnedPosition:
    """Build the binned-position resolution; bins must exceed the spacing.

    When the bin width is an integer number of grid cells and the origin
    lies on the grid, bin membership is computed by integer arithmetic so
    boundaries fall exactly on grid points; otherwise a plain floor of
    ``q / bin_width`` is used.
    """
    if not bin_width > grid.spacing:
        raise ResolutionError(
            f"bin width {bin_width} must exceed the grid spacing {grid.spacing}"
        )
    h = grid.spacing
    cells = bin_width / h
    origin = grid.q_min / h
    if abs(cells - round(cells)) < 1e-9 * cells and abs(origin - round(origin)) < 1e-6:
        n_per = int(round(cells))
        idx = np.floor_divide(np.arange(grid.n_points) + int(round(origin)), n_per)
    else:
        idx = np.floor(grid.points / bin_width).astype(np.int64)
    idx = idx.astype(np.int64)
    idx.setflags(write=False)
    return BinnedPosition(bin_width=bin_width, grid=grid, bin_index=idx)


def binned_inner_by_segment(
    bp: BinnedPosition, a: np.ndarray, b: np.ndarray
) -> list[tuple[int, complex]]:
    """Per-bin inner products ``<P_k a, P_k b>`` in ascending bin order."""
    w = bp.grid.weights
    prod = w * np.conj(a) * b
    return [(k, complex(np.sum(prod[mask]))) for k, mask in bp.segments()]


def active_bin_count(bp: BinnedPosition, values: np.ndarray, mass_floor: float = ACTIVE_BIN_MASS) -> int:
    """Number of bins holding more than ``mass_floor`` of the packet's mass."""
    w = bp.grid.weights
    mass = w * np.abs(values) ** 2
    return sum(1 for _k, m in ((k, float(np.sum(mass[msk]))) for k, msk in bp.segments()) if m > mass_floor)


def post_measurement_system_state(sc: AAVScenario, bp: BinnedPosition) -> DensityMatrix:
    """System state after the (unrecorded) binned meter measurement.

    Expressed in the basis of rotated observable eigenvectors; built as
    the bin-by-bin sum of translate overlaps weighted by the branch
    coefficients.  Eigenvalues in ``[-1e-9, 0)`` caused by quadrature
    wobble are clamped to zero; anything more negative is an error.
    """
    if bp.grid != sc.grid:
        raise DomainError("binned position and scenario must share one grid")
    decomp = branch_decomposition(sc)
    n = decomp.n_branches
    gram = np.zeros((n, n), dtype=np.complex128)
    for a in range(n):
        for b in range(a, n):
            total = 0.0 + 0.0j
            for _k, seg_val in binned_inner_by_segment(bp, decomp.meter_values[a], decomp.meter_values[b]):
                total += seg_val
            gram[a, b] = total
            if b != a:
                gram[b, a] = np.conj(total)
    sigma = decomp.coefficients
    # Element (i, j) pairs branch i against branch j with the conjugate
    # weight on j; the gram factor enters with its arguments swapped.
    matrix = gram.T * np.outer(sigma, np.conj(sigma))
    matrix = 0.5 * (matrix + matrix.conj().T)
    eigvals = np.linalg.eigvalsh(matrix)
    lowest = float(eigvals[0])
    if lowest < POSITIVITY_REPAIR_FLOOR:
        raise DomainError(f"post-measurement state has eigenvalue {lowest:.3e}; grid too coarse")
    if lowest < 0.0:
        values, vectors = np.linalg.eigh(matrix)
        values = np.clip(values, 0.0, None)
        matrix = (vectors * values[np.newaxis, :]) @ vectors.conj().T
    return DensityMatrix(Operator(matrix, frozenset({"hermitian"})), atol=1e-8)


def prepared_state_matrix(sc: AAVScenario) -> DensityMatrix:
    """The prepared state as a density matrix in the same rotated basis."""
    decomp = branch_decomposition(sc)
    sigma = decomp.coefficients
    matrix = np.outer(sigma, np.conj(sigma))
    return DensityMatrix(Operator(matrix, frozenset({"hermitian"})), atol=1e-8)


def weakness_deficit(sc: AAVScenario, bp: BinnedPosition) -> float:
    """Disturbance of the system by the binned meter measurement.

    Distance between the post-measurement system state and the prepared
    state; zero at zero coupling and decaying with the coupling strength.
    """
    after = post_measurement_system_state(sc, bp)
    before = prepared_state_matrix(sc)
    return trace_distance(after, before)


def deficit_curve(sc: AAVScenario, bp: BinnedPosition, eps_values) -> list[tuple[float, float]]:
    """Deficit at each coupling strength, in the given order."""
    return [(float(e), weakness_deficit(sc.with_epsilon(float(e)), bp)) for e in eps_values]
