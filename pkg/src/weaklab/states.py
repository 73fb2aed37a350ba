"""Projective measurement postulates: projectors, Born rule, outcomes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, LayoutError, TagError
from .qlin import DensityMatrix, Operator, StateVector

RESOLUTION_ATOL = 1e-10
PROBABILITY_SLACK = 1e-10


def projector(v: StateVector) -> Operator:
    """Rank-one projector onto the ray of ``v``.

    The input need not be normalized: the projector of ``c*v`` equals the
    projector of ``v`` for every nonzero complex ``c``.
    """
    n2 = float(np.real(np.vdot(v.amplitudes, v.amplitudes)))
    if n2 == 0.0:
        raise DomainError("projector of the zero vector is undefined")
    entries = np.outer(v.amplitudes, v.amplitudes.conj()) / n2
    return Operator(entries, frozenset({"hermitian", "projector"}))


@dataclass(frozen=True)
class ResolutionOfIdentity:
    """Pairwise-orthogonal projectors summing to the identity.

    Construction checks pairwise products and the completeness sum to
    1e-10; both are required for the outcome probabilities below to be
    a genuine probability distribution.
    """

    projectors: tuple

    def __post_init__(self):
        projs = tuple(self.projectors)
        if not projs:
            raise DomainError("a resolution of the identity needs at least one projector")
        dim = projs[0].dim
        for p in projs:
            if not p.is_tagged("projector"):
                raise TagError("every member of a resolution must carry the projector tag")
            if p.dim != dim:
                raise LayoutError("resolution members have mismatched dimensions")
        total = np.zeros((dim, dim), dtype=np.complex128)
        for i, p in enumerate(projs):
            total += p.entries
            for q in projs[i + 1 :]:
                if float(np.max(np.abs(p.entries @ q.entries))) > RESOLUTION_ATOL:
                    raise DomainError("resolution projectors are not pairwise orthogonal")
        if float(np.max(np.abs(total - np.eye(dim)))) > RESOLUTION_ATOL:
            raise DomainError("resolution projectors do not sum to the identity")
        object.__setattr__(self, "projectors", projs)

    @property
    def dim(self) -> int:
        return self.projectors[0].dim

    def __len__(self) -> int:
        return len(self.projectors)


@dataclass(frozen=True)
class MeasurementOutcome:
    """One branch of a projective measurement.

    ``post_state`` is the raw projected vector (not renormalized), so
    downstream conditioning can keep exact amplitudes.  Outcomes with
    probability below any threshold are retained; pruning would silently
    change postselection denominators.
    """

    index: int
    probability: float
    post_state: StateVector


def born_probability(rho: DensityMatrix, subspace: Operator) -> float:
    """Probability ``tr(rho P)`` that a measurement finds the state in ``P``."""
    if not subspace.is_tagged("projector"):
        raise TagError("born_probability requires a projector-tagged operator")
    if rho.dim != subspace.dim:
        raise LayoutError(f"state dim {rho.dim} vs projector dim {subspace.dim}")
    p = float(np.real(np.trace(rho.entries @ subspace.entries)))
    if p < -PROBABILITY_SLACK or p > 1.0 + PROBABILITY_SLACK:
        raise DomainError(f"born probability {p} outside [0, 1] beyond tolerance")
    return min(1.0, max(0.0, p))


def projective_measure(v: StateVector, resolution: ResolutionOfIdentity) -> list[MeasurementOutcome]:
    """All outcomes of measuring ``v`` with the given resolution.

    Outcome ``i`` has probability ``|P_i v|^2 / |v|^2`` and post state
    ``P_i v``; the probabilities sum to one.
    """
    if v.dim != resolution.dim:
        raise LayoutError(f"state dim {v.dim} vs resolution dim {resolution.dim}")
    n2 = v.norm**2
    if n2 == 0.0:
        raise DomainError("cannot measure the zero vector")
    outcomes = []
    for i, p in enumerate(resolution.projectors):
        projected = p.apply(v)
        prob = projected.norm**2 / n2
        outcomes.append(MeasurementOutcome(index=i, probability=min(1.0, prob), post_state=projected))
    return outcomes
