"""Stochastic simulation of individual weak-measurement trials.

Each trial prepares the coupled state, jointly samples the commuting
pair (meter eigenvalue, postselection outcome) from the exact Born
distribution, and records the meter value only when the postselection
succeeds.  Joint sampling is valid because the postselector commutes
with the meter readout, and it reduces each trial to one categorical
draw -- so trials are vectorized as multinomial counts over the outcome
atoms.

Randomness comes from a counter-based generator (Philox) with one
stream per fixed-size chunk of trials, derived from (seed, chunk index);
partial sums are combined in chunk order, so results are bit-identical
for a given seed regardless of how chunks would be distributed across
workers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .convergence import loglog_slope
from .errors import DomainError, EmptyConditionalError, LayoutError
from .meter_grid import AAVScenario, branch_decomposition, postselected_packet
from .protocols import GeneralMeterProtocol, QubitMeterProtocol, coupled_state, general_meter_coupled_state
from .qlin import StateVector, TensorLayout, hermitian_eigensystem, inner
from .weakness import BinnedPosition, binned_inner_by_segment

CHUNK_TRIALS = 1 << 20
DEFAULT_TRIAL_CAP = 10**8
MIN_PILOT_POSTSELECTED = 256
NEAR_ORTHOGONAL_WARNING = 1e-10
VALUE_MERGE_ATOL = 1e-9


@dataclass(frozen=True)
class DiscreteExperiment:
    """Exact outcome distribution of one weak-measurement trial.

    ``values[i]`` is the meter eigenvalue recorded when atom ``i`` fires,
    ``recorded[i]`` says whether the postselection succeeded there, and
    ``probs`` is the joint Born distribution over atoms.
    """

    values: np.ndarray
    recorded: np.ndarray
    probs: np.ndarray
    epsilon: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        recorded = np.asarray(self.recorded, dtype=bool)
        probs = np.asarray(self.probs, dtype=float)
        if values.shape != recorded.shape or values.shape != probs.shape or values.ndim != 1:
            raise LayoutError("experiment atoms must be three equal-length 1-d arrays")
        if np.any(probs < -1e-12):
            raise DomainError("negative outcome probability")
        probs = np.clip(probs, 0.0, None)
        total = float(probs.sum())
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"outcome probabilities sum to {total}, not 1")
        probs = probs / total
        for arr in (values, recorded, probs):
            arr.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "recorded", recorded)
        object.__setattr__(self, "probs", probs)
        if not self.epsilon > 0.0:
            raise DomainError("coupling strength must be positive")

    @property
    def postselection_probability(self) -> float:
        return float(self.probs[self.recorded].sum())

    def conditional_mean(self) -> float:
        """Exact meter average given successful postselection."""
        w = self.probs[self.recorded]
        return float(np.dot(w, self.values[self.recorded]) / w.sum())


@dataclass(frozen=True)
class TrialBatchReport:
    """Summary of one simulated batch.

    ``stderr`` is the sample standard deviation of the recorded meter
    values over the square root of the postselected count;
    ``normalized_estimate`` is the conditional mean divided by the
    coupling strength.
    """

    n_total: int
    n_postselected: int
    mean_meter: float
    stderr: float
    normalized_estimate: float
    seed: int


def _merge_atoms(values, recorded, probs, epsilon) -> DiscreteExperiment:
    order = np.lexsort((np.asarray(recorded, dtype=int), np.asarray(values, dtype=float)))
    values = np.asarray(values, dtype=float)[order]
    recorded = np.asarray(recorded, dtype=bool)[order]
    probs = np.asarray(probs, dtype=float)[order]
    out_v, out_r, out_p = [], [], []
    for v, r, p in zip(values, recorded, probs):
        if out_v and abs(v - out_v[-1]) <= VALUE_MERGE_ATOL and r == out_r[-1]:
            out_p[-1] += p
        else:
            out_v.append(float(v))
            out_r.append(bool(r))
            out_p.append(float(p))
    return DiscreteExperiment(np.array(out_v), np.array(out_r), np.array(out_p), epsilon)


def _warn_if_nearly_orthogonal(s: StateVector, final_state: StateVector) -> None:
    overlap = abs(inner(final_state.unit(), s.unit())) ** 2
    if overlap < NEAR_ORTHOGONAL_WARNING:
        warnings.warn(
            "postselection state is nearly orthogonal to the prepared state; "
            "required trial counts explode",
            RuntimeWarning,
            stacklevel=3,
        )


def composite_experiment(
    composite: StateVector,
    layout: TensorLayout,
    meter_obs,
    final_state: StateVector,
    epsilon: float,
) -> DiscreteExperiment:
    """Joint distribution of (meter eigenvalue, postselection) outcomes.

    Works for any finite meter: the composite state is resolved over the
    meter eigenbasis and each branch is split by the postselector.
    Atoms with equal eigenvalue merge, so degenerate readouts behave as
    one projective outcome.
    """
    layout.check_total(composite.dim)
    f = final_state.unit().amplitudes
    if f.shape[0] != layout.dim_system:
        raise LayoutError("final state must live on the system factor")
    eigenvalues, basis = hermitian_eigensystem(meter_obs)
    matrix = composite.amplitudes.reshape(layout.dim_system, layout.dim_meter)
    values, recorded, probs = [], [], []
    for beta, b in zip(eigenvalues, basis):
        branch = matrix @ b.amplitudes.conj()
        p_total = float(np.real(np.vdot(branch, branch)))
        p_pass = float(abs(np.vdot(f, branch)) ** 2)
        p_pass = min(p_pass, p_total)
        values.extend([float(beta), float(beta)])
        recorded.extend([True, False])
        probs.extend([p_pass, p_total - p_pass])
    return _merge_atoms(values, recorded, probs, epsilon)


def qubit_experiment(p: QubitMeterProtocol, final_state: StateVector) -> DiscreteExperiment:
    """Outcome distribution for the two-level-meter protocol."""
    _warn_if_nearly_orthogonal(p.s, final_state)
    return composite_experiment(coupled_state(p), p.layout, p.meter_obs, final_state, p.epsilon)


def general_meter_experiment(p: GeneralMeterProtocol) -> DiscreteExperiment:
    """Outcome distribution for the finite general-meter protocol."""
    _warn_if_nearly_orthogonal(p.s, p.final_state)
    return composite_experiment(
        general_meter_coupled_state(p), p.layout, p.meter_obs, p.final_state, p.epsilon
    )


def binned_grid_experiment(sc: AAVScenario, bp: BinnedPosition) -> DiscreteExperiment:
    """Outcome distribution for the position-meter protocol read through bins.

    Bin probabilities come from per-bin quadrature of the postselected
    packet (success) and of every branch translate (failure side).
    """
    _warn_if_nearly_orthogonal(sc.s, sc.final_state)
    decomp = branch_decomposition(sc)
    packet = postselected_packet(sc.final_state, decomp)
    pass_by_bin: dict[int, float] = {}
    for k, val in binned_inner_by_segment(bp, packet, packet):
        pass_by_bin[k] = float(np.real(val))
    total_by_bin: dict[int, float] = dict.fromkeys(pass_by_bin, 0.0)
    weights = np.abs(decomp.coefficients) ** 2
    for j in range(decomp.n_branches):
        row = decomp.meter_values[j]
        for k, val in binned_inner_by_segment(bp, row, row):
            total_by_bin[k] = total_by_bin.get(k, 0.0) + weights[j] * float(np.real(val))
    values, recorded, probs = [], [], []
    for k in sorted(total_by_bin):
        p_pass = max(0.0, pass_by_bin.get(k, 0.0))
        p_total = max(p_pass, total_by_bin[k])
        values.extend([bp.eigenvalue(k), bp.eigenvalue(k)])
        recorded.extend([True, False])
        probs.extend([p_pass, p_total - p_pass])
    return _merge_atoms(values, recorded, probs, sc.epsilon)


def _chunk_generator(seed: int, chunk_index: int) -> Generator:
    return Generator(Philox(key=seed).jumped(chunk_index))


def _simulate_counts(exp: DiscreteExperiment, n_trials: int, seed: int, first_chunk: int) -> np.ndarray:
    counts = np.zeros(exp.probs.shape[0], dtype=np.int64)
    remaining = n_trials
    chunk = first_chunk
    while remaining > 0:
        n = min(CHUNK_TRIALS, remaining)
        counts += _chunk_generator(seed, chunk).multinomial(n, exp.probs)
        remaining -= n
        chunk += 1
    return counts


def _report_from_counts(exp: DiscreteExperiment, counts: np.ndarray, n_total: int, seed: int) -> TrialBatchReport:
    rec = exp.recorded
    n_ps = int(counts[rec].sum())
    if n_ps == 0:
        raise EmptyConditionalError(f"no trial out of {n_total} survived postselection")
    vals = exp.values[rec]
    c = counts[rec].astype(float)
    s1 = float(np.dot(c, vals))
    s2 = float(np.dot(c, vals**2))
    mean = s1 / n_ps
    if n_ps > 1:
        var = max(0.0, (s2 - n_ps * mean * mean) / (n_ps - 1))
        stderr = math.sqrt(var / n_ps)
    else:
        stderr = math.inf
    return TrialBatchReport(
        n_total=n_total,
        n_postselected=n_ps,
        mean_meter=mean,
        stderr=stderr,
        normalized_estimate=mean / exp.epsilon,
        seed=seed,
    )


def simulate_weak_experiment(exp: DiscreteExperiment, n_trials: int, seed: int) -> TrialBatchReport:
    """Run ``n_trials`` independent trials and report the conditional mean.

    Deterministic for a fixed (experiment, n_trials, seed): the trial
    stream is partitioned into fixed chunks with one counter-based
    substream each, and sums are combined in chunk order.
    """
    if n_trials < 1:
        raise DomainError("need at least one trial")
    counts = _simulate_counts(exp, n_trials, seed, first_chunk=0)
    return _report_from_counts(exp, counts, n_trials, seed)


@dataclass(frozen=True)
class CostPoint:
    """Trials needed at one coupling strength for a target precision."""

    epsilon: float
    trials_needed: int
    cap_exceeded: bool
    achieved_precision: float


def trials_for_precision(
    exp: DiscreteExperiment,
    target_precision: float,
    seed: int,
    trial_cap: int = DEFAULT_TRIAL_CAP,
) -> CostPoint:
    """Empirical trial count driving the normalized standard error below target.

    Runs pilot batches until the postselected sample is informative,
    then extends the run to the empirically estimated requirement
    ``(sd / (eps * target))^2 / postselection-rate`` and verifies the
    criterion; doubles further if the estimate fell short.  If the cap
    is reached first, the point is flagged rather than raised.
    """
    if not target_precision > 0.0:
        raise DomainError("target precision must be positive")
    counts = np.zeros(exp.probs.shape[0], dtype=np.int64)
    n_total = 0
    chunk = 0
    batch = 4096

    def run(extra: int) -> None:
        nonlocal counts, n_total, chunk
        extra = min(extra, trial_cap - n_total)
        if extra <= 0:
            return
        counts = counts + _simulate_counts(exp, extra, seed, first_chunk=chunk)
        chunk += (extra + CHUNK_TRIALS - 1) // CHUNK_TRIALS
        n_total += extra

    run(batch)
    while int(counts[exp.recorded].sum()) < MIN_PILOT_POSTSELECTED and n_total < trial_cap:
        batch *= 4
        run(batch)

    def normalized_stderr() -> float:
        report = _report_from_counts(exp, counts, n_total, seed)
        return report.stderr / exp.epsilon

    while True:
        if int(counts[exp.recorded].sum()) == 0:
            return CostPoint(exp.epsilon, n_total, True, math.inf)
        current = normalized_stderr()
        if current <= target_precision:
            return CostPoint(exp.epsilon, n_total, False, current)
        if n_total >= trial_cap:
            return CostPoint(exp.epsilon, n_total, True, current)
        report = _report_from_counts(exp, counts, n_total, seed)
        if report.n_postselected < 2:
            run(n_total)  # no variance estimate yet; double
            continue
        sd = report.stderr * math.sqrt(report.n_postselected)
        rate = report.n_postselected / n_total
        needed = int(math.ceil((sd / (exp.epsilon * target_precision)) ** 2 / rate))
        extra = needed - n_total
        if extra <= 0:
            extra = n_total  # variance estimate fell short; double instead
        run(extra)


def sample_cost_curve(
    make_experiment,
    target_precision: float,
    eps_list,
    seed: int,
    trial_cap: int = DEFAULT_TRIAL_CAP,
) -> list[CostPoint]:
    """Trial cost at each coupling strength.

    ``make_experiment`` maps a coupling strength to its outcome
    distribution; each strength gets an independent substream of the
    seed.  The cost is expected to grow like the inverse square of the
    coupling.
    """
    points = []
    for i, eps in enumerate(eps_list):
        exp = make_experiment(float(eps))
        points.append(trials_for_precision(exp, target_precision, seed + 1000003 * i, trial_cap))
    return points


def cost_slope(points: list[CostPoint]) -> float:
    """Log-log slope of trials against coupling strength."""
    eps = [p.epsilon for p in points]
    trials = [float(p.trials_needed) for p in points]
    return loglog_slope(eps, trials)
