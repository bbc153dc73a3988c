"""Flat ``key = value`` run configuration.

All quantities are dimensionless: energies in units of ``omega0`` and times
in units of ``t_s = 1/omega0``. Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bath import BathSpec, QuadratureConfig
from .master import EvolutionConfig
from .qubit import DensityMatrix, DriveParams, ground_state, maximally_mixed, \
    superposition_state, thermal_state
from .tn import TruncationConfig

ENGINES = ("tdme", "adme", "unitary", "tn", "analytic")
INITIAL_STATES = ("thermal", "superposition", "mixed", "ground", "bloch")
BACKENDS = ("auto", "cython", "python")
TN_DESK_N = 50


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (type, default, description)
SCHEMA = {
    "engine": (str, "tdme", "tdme | adme | unitary | tn | analytic"),
    "lambda_Omega": (float, 1.0, "Omega / omega0"),
    "lambda_omega": (float, 10.0, "omega / omega0"),
    "a": (float, 5e-3, "Ohmic coupling"),
    "wc_over_omega0": (float, 2.0, "cutoff frequency"),
    "TB_over_omega0": (float, 4.0, "bath temperature"),
    "TS_over_omega0": (float, 0.5, "initial system temperature (thermal state)"),
    "initial_state": (str, "thermal", "thermal | superposition | mixed | ground | bloch"),
    "bloch_x": (float, 0.0, "custom Bloch vector (initial_state = bloch)"),
    "bloch_y": (float, 0.0, ""),
    "bloch_z": (float, 0.0, ""),
    "t_end_over_ts": (float, 10.0, "final time"),
    "dt_over_ts": (float, 1e-3, "RK4 step"),
    "store_stride": (int, 10, "store every n-th step"),
    "lamb_shift": (_bool, True, "include the Lamb-shift Hamiltonian"),
    "picture": (str, "schroedinger", "schroedinger | interaction (tdme, analytic)"),
    "backend": (str, "auto", "auto | cython | python"),
    "pv_epsilon": (float, 1e-3, "principal-value excision half-width"),
    "quad_rel_tol": (float, 1e-10, "quadrature relative tolerance"),
    "quad_max_panels": (int, 200, "adaptive quadrature subdivisions"),
    "tail_cutoff_factor": (float, 40.0, "PV upper limit 2E + factor * w_c"),
    "tn_N": (int, 30, "number of bath modes"),
    "tn_large": (_bool, False, f"allow tn_N > {TN_DESK_N}"),
    "tn_w_max_over_omega0": (float, 8.0, "highest bath frequency"),
    "tn_dt_over_ts": (float, 1e-2, "TEBD step"),
    "svd_cutoff": (float, 1e-9, "relative singular-value cutoff"),
    "chi_max": (int, 64, "maximal bond dimension"),
    "max_discarded": (float, 1e-3, "abort above this accumulated discarded weight"),
    "occupancy_cutoff": (float, 4.0, "c in d_j = max(2, ceil(c nbar_j) + 2)"),
    "d_max": (int, 0, "cap on local oscillator dimension (0: none)"),
    "max_gibbs_loss": (float, 0.05, "largest thermal weight a truncated mode may drop"),
    "workers": (int, 0, "sweep worker processes (0: all cores)"),
}


@dataclass(frozen=True)
class RunConfig:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    # derived objects ----------------------------------------------------------

    @property
    def drive(self) -> DriveParams:
        return DriveParams.from_ratios(self["lambda_Omega"], self["lambda_omega"])

    @property
    def bath(self) -> BathSpec:
        return BathSpec(a=self["a"], wc=self["wc_over_omega0"], T=self["TB_over_omega0"])

    @property
    def quad(self) -> QuadratureConfig:
        return QuadratureConfig(pv_epsilon=self["pv_epsilon"],
                                quad_rel_tol=self["quad_rel_tol"],
                                quad_max_panels=self["quad_max_panels"],
                                tail_cutoff_factor=self["tail_cutoff_factor"])

    def evolution(self, solver: str = None) -> EvolutionConfig:
        solver = solver or self["engine"]
        backend = None if self["backend"] == "auto" else self["backend"]
        return EvolutionConfig(solver=solver, lamb_shift=self["lamb_shift"],
                               picture=self["picture"], dt=self["dt_over_ts"],
                               t_end=self["t_end_over_ts"], stride=self["store_stride"],
                               backend=backend, quad=self.quad)

    @property
    def truncation(self) -> TruncationConfig:
        return TruncationConfig(svd_cutoff=self["svd_cutoff"], chi_max=self["chi_max"],
                                max_discarded=self["max_discarded"],
                                occupancy_cutoff=self["occupancy_cutoff"],
                                d_max=self["d_max"] or None,
                                max_gibbs_loss=self["max_gibbs_loss"])

    def initial_state(self) -> DensityMatrix:
        kind = self["initial_state"]
        if kind == "thermal":
            return thermal_state(self["TS_over_omega0"], self.drive)
        if kind == "superposition":
            return superposition_state()
        if kind == "mixed":
            return maximally_mixed()
        if kind == "ground":
            return ground_state()
        return DensityMatrix.from_bloch((self["bloch_x"], self["bloch_y"], self["bloch_z"]))

    def with_values(self, **updates) -> "RunConfig":
        return resolve({**self.values, **updates})

    def header_lines(self) -> list:
        return [f"{k} = {format_value(self.values[k])}" for k in SCHEMA]


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_text(text: str, source: str = "<config>") -> dict:
    """Raw ``key -> string`` mapping; rejects malformed lines and unknown keys."""
    out = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}: expected 'key = value', got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
        out[key] = value
    return out


def resolve(raw: dict) -> RunConfig:
    """Convert and validate values, filling in defaults."""
    vals = {}
    for key, (kind, default, _) in SCHEMA.items():
        if key not in raw:
            vals[key] = default
            continue
        value = raw[key]
        try:
            vals[key] = kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: cannot parse {value!r} as {kind.__name__.lstrip('_')}")
    unknown = set(raw) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r}")
    _validate(vals)
    return RunConfig(vals)


def _validate(v: dict) -> None:
    def need(cond, key, msg):
        if not cond:
            raise ConfigError(f"{key}: {msg} (got {format_value(v[key])})")

    need(v["engine"] in ENGINES, "engine", f"must be one of {ENGINES}")
    need(v["initial_state"] in INITIAL_STATES, "initial_state",
         f"must be one of {INITIAL_STATES}")
    need(v["picture"] in ("schroedinger", "interaction"), "picture",
         "must be schroedinger or interaction")
    need(v["backend"] in BACKENDS, "backend", f"must be one of {BACKENDS}")
    for key in ("lambda_omega", "a", "wc_over_omega0", "TB_over_omega0",
                "TS_over_omega0", "t_end_over_ts", "dt_over_ts", "pv_epsilon",
                "quad_rel_tol", "tail_cutoff_factor", "tn_w_max_over_omega0",
                "tn_dt_over_ts", "max_discarded", "occupancy_cutoff"):
        need(math.isfinite(v[key]) and v[key] > 0, key, "must be > 0")
    need(math.isfinite(v["lambda_Omega"]) and v["lambda_Omega"] >= 0, "lambda_Omega",
         "must be >= 0")
    need(v["dt_over_ts"] <= 1e-2, "dt_over_ts", "must be <= 1e-2")
    for key in ("store_stride", "quad_max_panels", "tn_N", "chi_max"):
        need(v[key] >= 1, key, "must be >= 1")
    need(v["d_max"] == 0 or v["d_max"] >= 2, "d_max", "must be 0 or >= 2")
    need(v["workers"] >= 0, "workers", "must be >= 0")
    need(0 <= v["svd_cutoff"] < 1, "svd_cutoff", "must lie in [0, 1)")
    need(0 < v["max_gibbs_loss"] <= 1, "max_gibbs_loss", "must lie in (0, 1]")
    need(v["tn_N"] <= TN_DESK_N or v["tn_large"], "tn_N",
         f"above {TN_DESK_N} requires tn_large = true")
    if v["engine"] == "analytic":
        need(v["picture"] == "interaction", "picture",
             "engine analytic requires picture = interaction")
    if v["picture"] == "interaction":
        need(v["engine"] in ("tdme", "analytic"), "picture",
             "interaction picture is only available for engines tdme and analytic")
    if v["initial_state"] == "bloch":
        n2 = v["bloch_x"] ** 2 + v["bloch_y"] ** 2 + v["bloch_z"] ** 2
        need(n2 <= 1 + 1e-12, "bloch_x", "Bloch vector must have length <= 1")


def load(path: str = None, overrides=None) -> RunConfig:
    raw = {}
    if path:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc.strerror}")
        raw = parse_text(text, path)
    raw.update(parse_overrides(overrides))
    return resolve(raw)
