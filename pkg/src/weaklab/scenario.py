"""Declarative scenario files: one weak-measurement experiment per file.

Format: ``key = value`` lines, ``#`` comments, blank lines ignored.
Complex literals are written ``re+imi`` (examples: ``1+0i``, ``-0.5+0.866i``,
``0-1i``); bare reals are accepted.  Vectors separate entries with
commas, matrices separate rows with ``;``.

Recognized keys::

    name       identifier used for output files
    protocol   qubit | grid | finite_meter
    dim        system dimension (validates all vectors/matrices)
    s, f       prepared / postselection state, complex vector
    A          observable, complex hermitian matrix
    V          identity | eta_phase | explicit complex matrix
    eta        unit-circle slot used when V = eta_phase (sweepable)
    meter      qubit [b11]
               | gaussian SIGMA
               | compact WIDTH
               | twisted gaussian SIGMA      (twist angle taken from delta)
               | skewed                      (two-level meter, skew from rho)
    delta      real phase-twist slot (sweepable)
    rho        real readout-skew slot (sweepable)
    eps        comma list of coupling strengths
    grid       Q_MIN Q_MAX N_POINTS          (grid protocol only)
    bin_width  position bin width for deficits and grid Monte Carlo
    trials     Monte Carlo trials per row (0 disables)
    seed       64-bit Monte Carlo seed
    sweep      SLOT : v1, v2, ...            (slot is eta, delta or rho)
    deficit    true | false
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import ScenarioParseError
from .protocols import DEFAULT_EPS_SCHEDULE

SWEEPABLE_SLOTS = ("eta", "delta", "rho")

_COMPLEX_RE = re.compile(
    r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"(?:\s*([+-])\s*((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*i)?\s*$"
)


def parse_complex(text: str, line: int | None = None, field: str | None = None) -> complex:
    m = _COMPLEX_RE.match(text)
    if not m:
        raise ScenarioParseError(f"cannot parse complex literal {text!r}", line, field)
    real = float(m.group(1))
    imag = 0.0
    if m.group(2) is not None:
        imag = float(m.group(3))
        if m.group(2) == "-":
            imag = -imag
    return complex(real, imag)


def format_complex(z: complex) -> str:
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real:.17g}{sign}{abs(z.imag):.17g}i"


def parse_vector(text: str, line: int | None = None, field: str | None = None) -> np.ndarray:
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ScenarioParseError("empty vector", line, field)
    return np.array([parse_complex(p, line, field) for p in parts], dtype=np.complex128)


def parse_matrix(text: str, line: int | None = None, field: str | None = None) -> np.ndarray:
    rows = [r for r in text.split(";") if r.strip()]
    data = []
    for r in rows:
        entries = [e for e in r.split() if e.strip()]
        data.append([parse_complex(e, line, field) for e in entries])
    if not data or any(len(r) != len(data) for r in data):
        raise ScenarioParseError("matrix must be square with ';'-separated rows", line, field)
    return np.array(data, dtype=np.complex128)


@dataclass(frozen=True)
class ScenarioFile:
    """Parsed scenario; parameter slots stay symbolic until bound."""

    name: str
    protocol: str
    dim: int
    s: np.ndarray
    observable: np.ndarray
    final_state: np.ndarray
    v_kind: str  # "identity" | "eta_phase" | "matrix"
    v_matrix: np.ndarray | None
    meter_kind: str  # "qubit" | "gaussian" | "compact" | "twisted" | "skewed"
    meter_param: float
    meter_b11: float
    eta: complex
    delta: float
    rho: float
    eps_list: tuple
    grid_spec: tuple  # (q_min, q_max, n_points)
    bin_width: float | None
    trials: int
    seed: int
    sweep_param: str | None
    sweep_values: tuple
    deficit: bool
    source_text: str

    def bound(self, **slots) -> "ScenarioFile":
        """Copy with parameter slots replaced."""
        allowed = {k: v for k, v in slots.items() if k in SWEEPABLE_SLOTS}
        if len(allowed) != len(slots):
            bad = sorted(set(slots) - set(SWEEPABLE_SLOTS))
            raise ScenarioParseError(f"unknown parameter slot(s) {bad}", field="sweep")
        return replace(self, **allowed)

    def sweep_points(self) -> list[tuple[complex, "ScenarioFile"]]:
        """One bound scenario per sweep value (a single point when no sweep)."""
        if self.sweep_param is None:
            return [(complex("nan"), self)]
        out = []
        for value in self.sweep_values:
            if self.sweep_param == "eta":
                out.append((value, self.bound(eta=value)))
            else:
                out.append((value, self.bound(**{self.sweep_param: float(value.real)})))
        return out


_DEFAULTS = {
    "name": "scenario",
    "protocol": "qubit",
    "v": "identity",
    "meter": "qubit",
    "eta": complex(1.0, 0.0),
    "delta": 0.0,
    "rho": 0.0,
    "trials": 0,
    "seed": 20090930,
    "deficit": False,
    "grid": (-16.0, 16.0, 8192),
    "bin_width": None,
}


def parse_scenario_text(text: str) -> ScenarioFile:
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ScenarioParseError(f"expected 'key = value', got {stripped!r}", lineno)
        key, value = stripped.split("=", 1)
        key = key.strip().lower()
        if key in raw:
            raise ScenarioParseError(f"duplicate key {key!r}", lineno, key)
        raw[key] = (value.strip(), lineno)

    def take(key: str, default=None):
        if key in raw:
            return raw.pop(key)
        return (default, None)

    name, _ = take("name", _DEFAULTS["name"])
    protocol, ln = take("protocol", _DEFAULTS["protocol"])
    protocol = protocol.lower()
    if protocol not in ("qubit", "grid", "finite_meter"):
        raise ScenarioParseError(f"unknown protocol {protocol!r}", ln, "protocol")

    dim_text, ln = take("dim")
    if dim_text is None:
        raise ScenarioParseError("missing required key", None, "dim")
    try:
        dim = int(dim_text)
    except ValueError:
        raise ScenarioParseError(f"dim must be an integer, got {dim_text!r}", ln, "dim") from None
    if dim < 2:
        raise ScenarioParseError("dim must be at least 2", ln, "dim")

    def required_vector(key: str) -> np.ndarray:
        txt, ln = take(key)
        if txt is None:
            raise ScenarioParseError("missing required key", None, key)
        vec = parse_vector(txt, ln, key)
        if vec.shape[0] != dim:
            raise ScenarioParseError(f"expected {dim} entries, got {vec.shape[0]}", ln, key)
        return vec

    s = required_vector("s")
    f = required_vector("f")
    a_text, ln = take("a")
    if a_text is None:
        raise ScenarioParseError("missing required key", None, "A")
    observable = parse_matrix(a_text, ln, "A")
    if observable.shape != (dim, dim):
        raise ScenarioParseError(f"expected a {dim}x{dim} matrix, got {observable.shape}", ln, "A")

    v_text, ln = take("v", _DEFAULTS["v"])
    v_kind, v_matrix = "identity", None
    if v_text.lower() in ("identity", "i"):
        pass
    elif v_text.lower() == "eta_phase":
        v_kind = "eta_phase"
        if dim != 2:
            raise ScenarioParseError("eta_phase coupling requires dim = 2", ln, "V")
    else:
        v_kind = "matrix"
        v_matrix = parse_matrix(v_text, ln, "V")
        if v_matrix.shape != (dim, dim):
            raise ScenarioParseError(f"expected a {dim}x{dim} matrix, got {v_matrix.shape}", ln, "V")

    meter_text, ln = take("meter", _DEFAULTS["meter"])
    meter_parts = meter_text.split()
    meter_kind = meter_parts[0].lower()
    meter_param = 1.0
    meter_b11 = 0.0
    if meter_kind == "qubit":
        if len(meter_parts) > 1:
            meter_b11 = float(meter_parts[1])
    elif meter_kind in ("gaussian", "compact"):
        if len(meter_parts) != 2:
            raise ScenarioParseError(f"meter {meter_kind} needs one width parameter", ln, "meter")
        meter_param = float(meter_parts[1])
    elif meter_kind == "twisted":
        if len(meter_parts) != 3 or meter_parts[1].lower() != "gaussian":
            raise ScenarioParseError("twisted meter is written 'twisted gaussian SIGMA'", ln, "meter")
        meter_param = float(meter_parts[2])
    elif meter_kind == "skewed":
        if len(meter_parts) != 1:
            raise ScenarioParseError("skewed meter takes no parameters (skew comes from rho)", ln, "meter")
    else:
        raise ScenarioParseError(f"unknown meter kind {meter_parts[0]!r}", ln, "meter")

    eta_text, ln = take("eta")
    eta = _DEFAULTS["eta"] if eta_text is None else parse_complex(eta_text, ln, "eta")

    def take_float(key: str, default: float) -> float:
        txt, ln = take(key)
        if txt is None:
            return default
        try:
            return float(txt)
        except ValueError:
            raise ScenarioParseError(f"expected a real number, got {txt!r}", ln, key) from None

    delta = take_float("delta", _DEFAULTS["delta"])
    rho = take_float("rho", _DEFAULTS["rho"])

    eps_text, ln = take("eps")
    if eps_text is None:
        eps_list = tuple(DEFAULT_EPS_SCHEDULE)
    else:
        try:
            eps_list = tuple(float(p) for p in eps_text.split(",") if p.strip())
        except ValueError:
            raise ScenarioParseError(f"bad coupling list {eps_text!r}", ln, "eps") from None
        if not eps_list or any(e <= 0 for e in eps_list):
            raise ScenarioParseError("eps must be a list of positive reals", ln, "eps")

    grid_text, ln = take("grid")
    if grid_text is None:
        grid_spec = _DEFAULTS["grid"]
    else:
        parts = grid_text.split()
        if len(parts) != 3:
            raise ScenarioParseError("grid is written 'Q_MIN Q_MAX N_POINTS'", ln, "grid")
        try:
            grid_spec = (float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError:
            raise ScenarioParseError(f"bad grid specification {grid_text!r}", ln, "grid") from None

    bin_text, ln = take("bin_width")
    bin_width = None if bin_text is None else float(bin_text)

    trials_text, ln = take("trials")
    trials = _DEFAULTS["trials"] if trials_text is None else int(trials_text)
    if trials < 0:
        raise ScenarioParseError("trials must be nonnegative", ln, "trials")

    seed_text, ln = take("seed")
    seed = _DEFAULTS["seed"] if seed_text is None else int(seed_text)

    sweep_text, ln = take("sweep")
    sweep_param = None
    sweep_values: tuple = ()
    if sweep_text is not None:
        if ":" not in sweep_text:
            raise ScenarioParseError("sweep is written 'SLOT : v1, v2, ...'", ln, "sweep")
        param, values_text = sweep_text.split(":", 1)
        sweep_param = param.strip().lower()
        if sweep_param not in SWEEPABLE_SLOTS:
            raise ScenarioParseError(
                f"unknown parameter slot {sweep_param!r}; sweepable slots are {SWEEPABLE_SLOTS}",
                ln,
                "sweep",
            )
        sweep_values = tuple(
            parse_complex(v, ln, "sweep") for v in values_text.split(",") if v.strip()
        )
        if not sweep_values:
            raise ScenarioParseError("sweep needs at least one value", ln, "sweep")

    deficit_text, ln = take("deficit")
    if deficit_text is None:
        deficit = _DEFAULTS["deficit"]
    elif deficit_text.lower() in ("true", "yes", "1"):
        deficit = True
    elif deficit_text.lower() in ("false", "no", "0"):
        deficit = False
    else:
        raise ScenarioParseError(f"deficit must be true or false, got {deficit_text!r}", ln, "deficit")

    if raw:
        key, (_val, ln) = next(iter(raw.items()))
        raise ScenarioParseError(f"unknown key {key!r}", ln, key)

    if protocol == "grid" and meter_kind == "qubit":
        raise ScenarioParseError("grid protocol needs a gaussian, compact or twisted meter", None, "meter")
    if protocol == "finite_meter" and meter_kind != "skewed":
        raise ScenarioParseError("finite_meter protocol uses the skewed meter", None, "meter")
    if protocol == "qubit" and meter_kind != "qubit":
        raise ScenarioParseError("qubit protocol uses the qubit meter", None, "meter")
    if deficit and protocol != "grid":
        raise ScenarioParseError("deficits are defined for the grid protocol", None, "deficit")
    if (deficit or (trials > 0 and protocol == "grid")) and bin_width is None:
        raise ScenarioParseError("bin_width is required for deficits and grid Monte Carlo", None, "bin_width")

    return ScenarioFile(
        name=name,
        protocol=protocol,
        dim=dim,
        s=s,
        observable=observable,
        final_state=f,
        v_kind=v_kind,
        v_matrix=v_matrix,
        meter_kind=meter_kind,
        meter_param=meter_param,
        meter_b11=meter_b11,
        eta=eta,
        delta=delta,
        rho=rho,
        eps_list=eps_list,
        grid_spec=grid_spec,
        bin_width=bin_width,
        trials=trials,
        seed=seed,
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        deficit=deficit,
        source_text=text,
    )


def load_scenario(path) -> ScenarioFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file: {exc}") from exc
    return parse_scenario_text(text)
