"""Dense complex linear algebra for finite-dimensional quantum models.

Conventions
-----------
* Inner products ``inner(v, w)`` are conjugate-linear in the first
  argument and linear in the second.
* Composite system-meter spaces are indexed system-major: the composite
  coordinate of (system ``i``, meter ``j``) is ``k = i * dim_meter + j``.
  This convention is fixed once in :class:`TensorLayout` and used
  everywhere in the package.
* All structural checks are absolute double-precision tolerances,
  documented per check: hermiticity 1e-12, unitarity 1e-10, projector
  idempotency 1e-10, density-matrix trace 1e-10 (eigenvalue floor
  -1e-10), eigensystem residuals 1e-10, unit-norm states 1e-12.
* Values are immutable after construction (backing arrays are marked
  read-only), so they are safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LayoutError, TagError

HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-10
PROJECTOR_ATOL = 1e-10
DENSITY_TRACE_ATOL = 1e-10
DENSITY_EIGEN_FLOOR = -1e-10
EIGEN_RESIDUAL_ATOL = 1e-10
EIGEN_CLUSTER_WIDTH = 1e-9
UNIT_NORM_ATOL = 1e-12

KNOWN_TAGS = frozenset({"hermitian", "unitary", "projector"})


def _frozen_complex_array(data, shape_kind: str) -> np.ndarray:
    arr = np.array(data, dtype=np.complex128)
    if shape_kind == "vector":
        if arr.ndim != 1 or arr.size == 0:
            raise LayoutError(f"expected a nonempty 1-d amplitude array, got shape {arr.shape}")
    elif shape_kind == "matrix":
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.size == 0:
            raise LayoutError(f"expected a nonempty square matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """A vector in a finite complex Hilbert space.

    Any nonzero multiple describes the same physical (ray) state; the
    ``unit`` method returns the normalized representative.  Grid-sampled
    meter wavefunctions are stored in the same type.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen_complex_array(self.amplitudes, "vector"))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_unit(self, atol: float = UNIT_NORM_ATOL) -> bool:
        return abs(self.norm**2 - 1.0) <= 3.0 * atol or abs(self.norm - 1.0) <= atol

    def unit(self) -> "StateVector":
        """Normalized representative of the ray; error on the zero vector."""
        n = self.norm
        if n == 0.0:
            raise DomainError("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n)


def inner(v: StateVector, w: StateVector) -> complex:
    """Inner product, conjugate-linear in the first argument."""
    if v.dim != w.dim:
        raise LayoutError(f"inner product of dimensions {v.dim} and {w.dim}")
    return complex(np.vdot(v.amplitudes, w.amplitudes))


def basis_state(dim: int, index: int) -> StateVector:
    amp = np.zeros(dim, dtype=np.complex128)
    amp[index] = 1.0
    return StateVector(amp)


@dataclass(frozen=True, eq=False)
class Operator:
    """A dense complex square matrix with declared structure tags.

    Tags are validated at construction: ``hermitian`` means
    ``max|E - E^dagger| <= 1e-12``; ``unitary`` means
    ``max|E E^dagger - I| <= 1e-10``; ``projector`` implies hermitian and
    ``max|E^2 - E| <= 1e-10``.
    """

    entries: np.ndarray
    tags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen_complex_array(self.entries, "matrix"))
        tags = frozenset(self.tags)
        unknown = tags - KNOWN_TAGS
        if unknown:
            raise TagError(f"unknown operator tags {sorted(unknown)}")
        if "projector" in tags:
            tags = tags | {"hermitian"}
        object.__setattr__(self, "tags", tags)
        e = self.entries
        if "hermitian" in tags:
            dev = float(np.max(np.abs(e - e.conj().T)))
            if dev > HERMITIAN_ATOL:
                raise TagError(f"hermitian tag violated by {dev:.3e}")
        if "unitary" in tags:
            dev = float(np.max(np.abs(e @ e.conj().T - np.eye(self.dim))))
            if dev > UNITARY_ATOL:
                raise TagError(f"unitary tag violated by {dev:.3e}")
        if "projector" in tags:
            dev = float(np.max(np.abs(e @ e - e)))
            if dev > PROJECTOR_ATOL:
                raise TagError(f"projector tag violated by {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_tagged(self, tag: str) -> bool:
        return tag in self.tags

    def apply(self, v: StateVector) -> StateVector:
        if self.dim != v.dim:
            raise LayoutError(f"operator of dim {self.dim} applied to vector of dim {v.dim}")
        return StateVector(self.entries @ v.amplitudes)


def hermitian_operator(entries) -> Operator:
    return Operator(entries, frozenset({"hermitian"}))


def unitary_operator(entries) -> Operator:
    return Operator(entries, frozenset({"unitary"}))


def identity_operator(dim: int) -> Operator:
    return Operator(np.eye(dim), frozenset({"hermitian", "unitary", "projector"}))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive, trace-one operator representing a (possibly mixed) state.

    ``atol`` widens the trace check for matrices assembled from grid
    quadrature, where the unit normalization itself holds to ~1e-8.
    """

    op: Operator
    atol: float = DENSITY_TRACE_ATOL

    def __post_init__(self):
        if not self.op.is_tagged("hermitian"):
            raise TagError("density matrix requires a hermitian operator")
        tr = complex(np.trace(self.op.entries))
        if abs(tr - 1.0) > self.atol:
            raise DomainError(f"density matrix trace {tr} deviates from 1 beyond {self.atol}")
        lowest = float(np.min(np.linalg.eigvalsh(self.op.entries)))
        if lowest < DENSITY_EIGEN_FLOOR:
            raise DomainError(f"density matrix has eigenvalue {lowest:.3e} below {DENSITY_EIGEN_FLOOR}")

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def entries(self) -> np.ndarray:
        return self.op.entries

    def purity(self) -> float:
        e = self.entries
        return float(np.real(np.trace(e @ e)))


@dataclass(frozen=True)
class TensorLayout:
    """Factorization bookkeeping for a system (x) meter space.

    The composite index of (system ``i``, meter ``j``) is
    ``i * dim_meter + j`` (system-major), matching ``numpy.kron`` order
    with the system factor first.
    """

    dim_system: int
    dim_meter: int

    def __post_init__(self):
        if self.dim_system < 1 or self.dim_meter < 1:
            raise LayoutError("factor dimensions must be positive")

    @property
    def dim_total(self) -> int:
        return self.dim_system * self.dim_meter

    def composite_index(self, i: int, j: int) -> int:
        return i * self.dim_meter + j

    def check_total(self, dim: int) -> None:
        if dim != self.dim_total:
            raise LayoutError(
                f"composite dimension {dim} does not match layout "
                f"{self.dim_system}x{self.dim_meter}"
            )


def tensor_state(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product of states under the system-major convention."""
    return StateVector(np.kron(a.amplitudes, b.amplitudes))


def tensor_op(a: Operator, b: Operator) -> Operator:
    """Kronecker product of operators; shared structure tags propagate."""
    tags = frozenset(t for t in ("hermitian", "unitary", "projector") if t in a.tags and t in b.tags)
    return Operator(np.kron(a.entries, b.entries), tags)


def partial_trace_meter(op: Operator, layout: TensorLayout) -> Operator:
    """Trace out the meter factor of an operator on the composite space.

    The result has matrix elements ``sum_j L[(i, j), (i', j)]`` and the
    same total trace as the input.
    """
    layout.check_total(op.dim)
    blocks = op.entries.reshape(layout.dim_system, layout.dim_meter, layout.dim_system, layout.dim_meter)
    reduced = np.einsum("iaja->ij", blocks)
    tags = frozenset({"hermitian"}) if op.is_tagged("hermitian") else frozenset()
    return Operator(reduced, tags)


def partial_trace_system(op: Operator, layout: TensorLayout) -> Operator:
    """Trace out the system factor; counterpart of :func:`partial_trace_meter`."""
    layout.check_total(op.dim)
    blocks = op.entries.reshape(layout.dim_system, layout.dim_meter, layout.dim_system, layout.dim_meter)
    reduced = np.einsum("akaj->kj", blocks)
    tags = frozenset({"hermitian"}) if op.is_tagged("hermitian") else frozenset()
    return Operator(reduced, tags)


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Distance ``sqrt(tr (rho - sigma)^2)`` between two density matrices."""
    if rho.dim != sigma.dim:
        raise LayoutError(f"trace distance of dimensions {rho.dim} and {sigma.dim}")
    delta = rho.entries - sigma.entries
    return float(np.sqrt(max(0.0, float(np.real(np.trace(delta @ delta))))))


def _canonical_phase(vec: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(vec)))
    pivot = vec[k]
    if pivot == 0:
        return vec
    return vec * (abs(pivot) / pivot)


def hermitian_eigensystem(op: Operator) -> tuple[np.ndarray, list[StateVector]]:
    """Eigenvalues (ascending) and an orthonormal eigenbasis of a hermitian operator.

    Eigenvalues closer than 1e-9 are treated as one degenerate cluster;
    inside a cluster the basis is rebuilt deterministically by
    Gram-Schmidt over the cluster projector applied to the standard
    basis, so the output depends only on spectral projectors.  Every
    vector's global phase is fixed by making its largest component real
    and positive.
    """
    if not op.is_tagged("hermitian"):
        raise TagError("eigensystem requires the hermitian tag")
    values, vectors = np.linalg.eigh(op.entries)
    dim = op.dim
    out_vectors: list[np.ndarray] = []
    start = 0
    while start < dim:
        stop = start + 1
        while stop < dim and values[stop] - values[stop - 1] <= EIGEN_CLUSTER_WIDTH:
            stop += 1
        size = stop - start
        if size == 1:
            out_vectors.append(_canonical_phase(vectors[:, start]))
        else:
            cluster = vectors[:, start:stop]
            projector = cluster @ cluster.conj().T
            chosen: list[np.ndarray] = []
            for j in range(dim):
                w = projector[:, j].copy()
                for b in chosen:
                    w -= np.vdot(b, w) * b
                nw = np.linalg.norm(w)
                if nw > 1e-6:
                    chosen.append(_canonical_phase(w / nw))
                if len(chosen) == size:
                    break
            out_vectors.extend(chosen)
        start = stop
    basis = [StateVector(v) for v in out_vectors]
    return values.astype(float), basis


def hermitian_expi(op: Operator, scale: float) -> Operator:
    """Unitary ``exp(-i * scale * H)`` of a hermitian ``H`` by spectral synthesis.

    No series truncation is involved: the exponential is assembled from
    the exact eigendecomposition, so all coupling-strength dependence
    stays exact to machine precision.
    """
    if not op.is_tagged("hermitian"):
        raise TagError("matrix exponential here requires the hermitian tag")
    values, vectors = np.linalg.eigh(op.entries)
    phases = np.exp(-1j * scale * values)
    u = (vectors * phases[np.newaxis, :]) @ vectors.conj().T
    return Operator(u, frozenset({"unitary"}))


def schmidt_rank(v: StateVector, layout: TensorLayout, tol: float = 1e-9) -> int:
    """Number of Schmidt coefficients of ``v`` above ``tol`` (relative)."""
    layout.check_total(v.dim)
    matrix = v.amplitudes.reshape(layout.dim_system, layout.dim_meter)
    singulars = np.linalg.svd(matrix, compute_uv=False)
    if singulars.size == 0 or singulars[0] == 0.0:
        return 0
    return int(np.sum(singulars > tol * singulars[0]))
