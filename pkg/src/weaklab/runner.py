"""Execute parsed scenarios: analytic, finite-coupling, Monte Carlo, deficit.

Every run writes one CSV results table plus a plain-text manifest that
embeds the resolved scenario, so re-running from the manifest reproduces
the numeric columns bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainError
from .meter_grid import (
    AAVScenario,
    CompactBumpMeter,
    GaussianMeter,
    Grid,
    aav_conditional_expectation,
    aav_weak_value_analytic,
    phase_twist,
)
from .montecarlo import (
    binned_grid_experiment,
    general_meter_experiment,
    qubit_experiment,
    simulate_weak_experiment,
)
from .protocols import (
    conditional_meter_expectation,
    default_meter_observable,
    eta_phase_unitary,
    general_meter_conditional_expectation,
    general_meter_protocol,
    general_meter_weak_value,
    qubit_protocol,
    weak_value_finite,
)
from .qlin import Operator, StateVector
from .scenario import ScenarioFile, format_complex
from .weakness import binned_position, weakness_deficit

CSV_COLUMNS = (
    "name",
    "sweep_param",
    "sweep_value",
    "eps",
    "analytic",
    "finite_eps",
    "mc_estimate",
    "mc_stderr",
    "n_trials",
    "n_postselected",
    "deficit",
)


@dataclass(frozen=True)
class ResultRow:
    name: str
    sweep_param: str
    sweep_value: str
    eps: float
    analytic: float
    finite_eps: float
    mc_estimate: float | None
    mc_stderr: float | None
    n_trials: int | None
    n_postselected: int | None
    deficit: float | None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _system_objects(sf: ScenarioFile):
    s = StateVector(sf.s).unit()
    f = StateVector(sf.final_state)
    observable = Operator(sf.observable, frozenset({"hermitian"}))
    if sf.v_kind == "identity":
        v = None
    elif sf.v_kind == "eta_phase":
        v = eta_phase_unitary(s, sf.eta)
    else:
        v = Operator(sf.v_matrix, frozenset({"unitary"}))
    return s, observable, v, f


def _grid_meter(sf: ScenarioFile):
    if sf.meter_kind == "gaussian":
        return GaussianMeter(sf.meter_param), 0.0
    if sf.meter_kind == "compact":
        return CompactBumpMeter(width=sf.meter_param), 0.0
    if sf.meter_kind == "twisted":
        return phase_twist(GaussianMeter(sf.meter_param), sf.delta), sf.delta
    raise DomainError(f"meter kind {sf.meter_kind!r} is not a grid meter")


def execute_rows(sf: ScenarioFile, grid_points_override: int | None = None) -> list[ResultRow]:
    """All result rows for one scenario: sweep points times coupling list."""
    rows = []
    for sweep_value, bound in sf.sweep_points():
        sweep_tag = "" if sf.sweep_param is None else format_complex(sweep_value)
        for eps in bound.eps_list:
            rows.append(_execute_point(bound, float(eps), sweep_tag, grid_points_override))
    return rows


def _execute_point(
    sf: ScenarioFile, eps: float, sweep_tag: str, grid_points_override: int | None
) -> ResultRow:
    s, observable, v, f = _system_objects(sf)
    mc_report = None
    deficit_value = None

    if sf.protocol == "qubit":
        analytic = weak_value_finite(s, observable, v, f)
        protocol = qubit_protocol(
            s, observable, eps,
            coupling_unitary=v,
            meter_obs=default_meter_observable(corner=sf.meter_b11),
        )
        # The table reports the eps-normalized conditional mean so the
        # finite, analytic and Monte Carlo columns share one scale.
        finite = conditional_meter_expectation(protocol, f) / eps
        if sf.trials > 0:
            mc_report = simulate_weak_experiment(qubit_experiment(protocol, f), sf.trials, sf.seed)
    elif sf.protocol == "grid":
        meter, delta = _grid_meter(sf)
        q_min, q_max, n_points = sf.grid_spec
        if grid_points_override is not None:
            n_points = grid_points_override
        grid = Grid(q_min, q_max, n_points)
        analytic = aav_weak_value_analytic(s, observable, v, f, delta)
        sc = AAVScenario(s, observable, f, meter, grid, eps, v)
        finite = aav_conditional_expectation(sc)
        if sf.trials > 0 or sf.deficit:
            bp = binned_position(sf.bin_width, grid)
            if sf.trials > 0:
                mc_report = simulate_weak_experiment(binned_grid_experiment(sc, bp), sf.trials, sf.seed)
            if sf.deficit:
                deficit_value = weakness_deficit(sc, bp)
    elif sf.protocol == "finite_meter":
        protocol = general_meter_protocol(s, observable, f, sf.rho, eps)
        analytic = general_meter_weak_value(protocol)
        finite = general_meter_conditional_expectation(protocol)
        if sf.trials > 0:
            mc_report = simulate_weak_experiment(general_meter_experiment(protocol), sf.trials, sf.seed)
    else:
        raise DomainError(f"unknown protocol {sf.protocol!r}")

    return ResultRow(
        name=sf.name,
        sweep_param=sf.sweep_param or "",
        sweep_value=sweep_tag,
        eps=eps,
        analytic=analytic,
        finite_eps=finite,
        mc_estimate=None if mc_report is None else mc_report.normalized_estimate,
        mc_stderr=None if mc_report is None else mc_report.stderr / eps,
        n_trials=None if mc_report is None else mc_report.n_total,
        n_postselected=None if mc_report is None else mc_report.n_postselected,
        deficit=deficit_value,
    )


def rows_to_csv(rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow(
            [
                r.name,
                r.sweep_param,
                r.sweep_value,
                _fmt(r.eps),
                _fmt(r.analytic),
                _fmt(r.finite_eps),
                _fmt(r.mc_estimate),
                _fmt(r.mc_stderr),
                _fmt(r.n_trials),
                _fmt(r.n_postselected),
                _fmt(r.deficit),
            ]
        )
    return buf.getvalue()


def manifest_text(sf: ScenarioFile, command: str, extra: dict) -> str:
    import numpy

    from . import __version__

    digest = hashlib.sha256(sf.source_text.encode("utf-8")).hexdigest()
    lines = [
        f"weaklab_version = {__version__}",
        f"numpy_version = {numpy.__version__}",
        f"command = {command}",
        f"scenario_name = {sf.name}",
        f"scenario_sha256 = {digest}",
        f"seed = {sf.seed}",
        f"trials = {sf.trials}",
        f"eps = {', '.join(format(e, '.17g') for e in sf.eps_list)}",
        f"grid = {sf.grid_spec[0]:.17g} {sf.grid_spec[1]:.17g} {sf.grid_spec[2]}",
    ]
    for key, value in extra.items():
        lines.append(f"{key} = {value}")
    lines.append("")
    lines.append("# scenario source as loaded (strip the leading '| ' to re-run;")
    lines.append("# command-line overrides are recorded in the header above)")
    lines.extend("| " + ln for ln in sf.source_text.splitlines())
    lines.append("")
    return "\n".join(lines)


def write_outputs(
    sf: ScenarioFile,
    rows: list[ResultRow],
    out_dir,
    command: str,
    extra: dict | None = None,
) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{sf.name}_results.csv"
    manifest_path = out / f"{sf.name}_manifest.txt"
    csv_path.write_text(rows_to_csv(rows), encoding="utf-8")
    manifest_path.write_text(manifest_text(sf, command, extra or {}), encoding="utf-8")
    return csv_path, manifest_path
