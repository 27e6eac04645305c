"""Run configuration: JSON schema, validation and unit conversion.

Configs are strict: unknown keys are rejected at every level, and the
fully-defaulted configuration is echoed into the output metadata so a
run is reproducible from its summary alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .correlated import SpatialModel
from .quadrature import QuadratureSpec
from .spectral import OhmicDrude, SuperOhmicExp
from .units import PS_UNITS, UnitSystem

__all__ = ["RunConfig", "ConfigError", "load_config", "validate_config"]

THEORY_NAMES = ("variational", "redfield", "polaron", "forster")

_SCHEMA = {
    "system": {"epsilon_cm1": float, "V_cm1": float},
    "bath": {"type": str, "lambda_cm1": float, "omega_c_cm1": float,
             "T_kelvin": float},
    "theory": str,
    "initial_condition": str,
    "time": {"t_max_ps": float, "dt_ps": float},
    "sweep": {"parameter": str, "values": list},
    "correlated": {"kernel": str, "d_over_v_ps": float},
    "quadrature": {"rtol": float, "atol": float, "max_subdivisions": int,
                   "cutoff_mult": float},
    "output": {"trajectory_csv": str, "kernels_csv": str,
               "summary_json": str},
}

_DEFAULTS = {
    "theory": "variational",
    "initial_condition": "displaced",
    "time": {"dt_ps": None},
    "quadrature": {"rtol": 1e-9, "atol": 1e-12, "max_subdivisions": 200,
                   "cutoff_mult": 40.0},
}

SWEEPABLE = ("lambda_cm1", "T_kelvin", "epsilon_cm1", "V_cm1", "d_over_v_ps")


class ConfigError(ValueError):
    pass


def _check_keys(section, data, schema):
    unknown = set(data) - set(schema)
    if unknown:
        raise ConfigError("unknown key(s) %s in '%s'"
                          % (sorted(unknown), section))


def _coerce(section, key, value, expect):
    if expect is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("'%s.%s' must be a number" % (section, key))
        return float(value)
    if not isinstance(value, expect):
        raise ConfigError("'%s.%s' must be %s" % (section, key,
                                                  expect.__name__))
    return value


@dataclass
class RunConfig:
    """Validated, fully-defaulted run description (cm^-1 / K / ps)."""

    epsilon_cm1: float
    v_cm1: float
    bath_type: str
    lambda_cm1: float
    omega_c_cm1: float
    t_kelvin: float
    t_max_ps: float
    dt_ps: float | None = None
    theory: str = "variational"
    initial_condition: str = "displaced"
    sweep_parameter: str | None = None
    sweep_values: list = field(default_factory=list)
    correlated_kernel: str | None = None
    d_over_v_ps: float | None = None
    quad: QuadratureSpec = QuadratureSpec()
    raw: dict = field(default_factory=dict)

    def density(self, units: UnitSystem = PS_UNITS):
        cls = {"super_ohmic": SuperOhmicExp, "ohmic_drude": OhmicDrude}[
            self.bath_type]
        return cls.from_cm1(self.lambda_cm1, self.omega_c_cm1, units)

    def spatial(self, units: UnitSystem = PS_UNITS):
        if self.correlated_kernel is None:
            return None
        d = self.d_over_v_ps
        d_int = d if (d == 0.0 or math.isinf(d)) else units.time_to_internal(d)
        return SpatialModel(self.correlated_kernel, d_int)

    def beta(self, units: UnitSystem = PS_UNITS):
        return units.inverse_temperature(self.t_kelvin)

    def as_dict(self):
        """Fully-defaulted config echo for metadata."""
        out = {
            "system": {"epsilon_cm1": self.epsilon_cm1, "V_cm1": self.v_cm1},
            "bath": {"type": self.bath_type, "lambda_cm1": self.lambda_cm1,
                     "omega_c_cm1": self.omega_c_cm1,
                     "T_kelvin": self.t_kelvin},
            "theory": self.theory,
            "initial_condition": self.initial_condition,
            "time": {"t_max_ps": self.t_max_ps, "dt_ps": self.dt_ps},
            "quadrature": {"rtol": self.quad.rtol, "atol": self.quad.atol,
                           "max_subdivisions": self.quad.limit,
                           "cutoff_mult": self.quad.cutoff_mult},
        }
        if self.sweep_parameter:
            out["sweep"] = {"parameter": self.sweep_parameter,
                            "values": list(self.sweep_values)}
        if self.correlated_kernel:
            out["correlated"] = {"kernel": self.correlated_kernel,
                                 "d_over_v_ps": self.d_over_v_ps}
        return out


def validate_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys("<root>", data, _SCHEMA)
    for required in ("system", "bath", "time"):
        if required not in data:
            raise ConfigError("missing required section '%s'" % required)

    def section(name, required_keys):
        block = data.get(name, {})
        if not isinstance(block, dict):
            raise ConfigError("'%s' must be an object" % name)
        _check_keys(name, block, _SCHEMA[name])
        out = {}
        for key, expect in _SCHEMA[name].items():
            if key in block:
                out[key] = _coerce(name, key, block[key], expect)
            elif key in _DEFAULTS.get(name, {}):
                out[key] = _DEFAULTS[name][key]
            elif key in required_keys:
                raise ConfigError("missing required key '%s.%s'" % (name, key))
        return out

    system = section("system", ("epsilon_cm1", "V_cm1"))
    bath = section("bath", ("type", "lambda_cm1", "omega_c_cm1", "T_kelvin"))
    time_block = section("time", ("t_max_ps",))
    if bath["type"] not in ("super_ohmic", "ohmic_drude"):
        raise ConfigError("bath.type must be 'super_ohmic' or 'ohmic_drude'")
    if bath["T_kelvin"] < 0:
        raise ConfigError("bath.T_kelvin must be >= 0")
    if time_block["t_max_ps"] <= 0:
        raise ConfigError("time.t_max_ps must be positive")

    theory = data.get("theory", _DEFAULTS["theory"])
    if theory not in THEORY_NAMES:
        raise ConfigError("theory must be one of %s" % (THEORY_NAMES,))
    init = data.get("initial_condition", _DEFAULTS["initial_condition"])
    if init not in ("displaced", "bare"):
        raise ConfigError("initial_condition must be 'displaced' or 'bare'")

    sweep_parameter = None
    sweep_values = []
    if "sweep" in data:
        sweep = section("sweep", ("parameter", "values"))
        sweep_parameter = sweep["parameter"]
        if sweep_parameter not in SWEEPABLE:
            raise ConfigError("sweep.parameter must be one of %s"
                              % (SWEEPABLE,))
        sweep_values = [_coerce("sweep", "values[]", x, float)
                        for x in sweep["values"]]
        if not sweep_values:
            raise ConfigError("sweep.values must be non-empty")

    corr_kernel = None
    d_over_v = None
    if "correlated" in data:
        corr = section("correlated", ("kernel", "d_over_v_ps"))
        corr_kernel = corr["kernel"]
        if corr_kernel not in ("1d", "3d"):
            raise ConfigError("correlated.kernel must be '1d' or '3d'")
        d_over_v = corr["d_over_v_ps"]
        if d_over_v < 0:
            raise ConfigError("correlated.d_over_v_ps must be >= 0")

    q = section("quadrature", ())
    quad = QuadratureSpec(rtol=q["rtol"], atol=q["atol"],
                          limit=q["max_subdivisions"],
                          cutoff_mult=q["cutoff_mult"])

    return RunConfig(
        epsilon_cm1=system["epsilon_cm1"], v_cm1=system["V_cm1"],
        bath_type=bath["type"], lambda_cm1=bath["lambda_cm1"],
        omega_c_cm1=bath["omega_c_cm1"], t_kelvin=bath["T_kelvin"],
        t_max_ps=time_block["t_max_ps"], dt_ps=time_block.get("dt_ps"),
        theory=theory, initial_condition=init,
        sweep_parameter=sweep_parameter, sweep_values=sweep_values,
        correlated_kernel=corr_kernel, d_over_v_ps=d_over_v,
        quad=quad, raw=data)


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as err:
        raise ConfigError("invalid JSON in %s: %s" % (path, err)) from err
    return validate_config(data)
