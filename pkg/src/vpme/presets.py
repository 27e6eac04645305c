"""Bundled parameter sets for the published figure regimes.

fig1a-fig1d: super-Ohmic panels at eps = V = 100 cm^-1, T = 300 K
  (a) lambda3=20,  omega_c=300 (V/omega_c < 1: all three theories agree)
  (b) lambda3=200, omega_c=200 (polaron regime)
  (c) lambda3=20,  omega_c=53  (V/omega_c > 1: polaron fails)
  (d) lambda3=50,  omega_c=53  (no limiting case applies)
fig2 / fig3: Ohmic reorganization-energy family (variational / limits)
fig4: two-site FMO reduction at 77 K and 300 K
fig5: super-Ohmic bath-relaxation runs (T = 0 main panel, 300 K inset)
fig6: transfer-rate sweep at V = 20 cm^-1
"""

from __future__ import annotations

import copy

__all__ = ["PRESETS", "preset_config"]


def _superohmic(lam, wc, theory="variational", t_max=1.0, eps=100.0,
                v=100.0, t_kelvin=300.0, **extra):
    cfg = {
        "system": {"epsilon_cm1": eps, "V_cm1": v},
        "bath": {"type": "super_ohmic", "lambda_cm1": lam,
                 "omega_c_cm1": wc, "T_kelvin": t_kelvin},
        "theory": theory,
        "time": {"t_max_ps": t_max},
    }
    cfg.update(extra)
    return cfg


def _ohmic(lam, wc=53.0, theory="variational", t_max=1.0, eps=100.0,
           v=100.0, t_kelvin=300.0, **extra):
    cfg = {
        "system": {"epsilon_cm1": eps, "V_cm1": v},
        "bath": {"type": "ohmic_drude", "lambda_cm1": lam,
                 "omega_c_cm1": wc, "T_kelvin": t_kelvin},
        "theory": theory,
        "time": {"t_max_ps": t_max},
    }
    cfg.update(extra)
    return cfg


PRESETS = {
    "fig1a": _superohmic(20.0, 300.0),
    "fig1b": _superohmic(200.0, 200.0),
    "fig1c": _superohmic(20.0, 53.0),
    "fig1d": _superohmic(50.0, 53.0),
    "fig2": _ohmic(5.0, sweep={"parameter": "lambda_cm1",
                               "values": [1.0, 5.0, 20.0, 100.0, 200.0,
                                          500.0]}),
    "fig3_redfield": _ohmic(5.0, theory="redfield",
                            sweep={"parameter": "lambda_cm1",
                                   "values": [1.0, 5.0, 20.0, 100.0, 200.0,
                                              500.0]}),
    "fig3_polaron": _ohmic(5.0, theory="polaron",
                           sweep={"parameter": "lambda_cm1",
                                  "values": [1.0, 5.0, 20.0, 100.0, 200.0,
                                             500.0]}),
    "fig4_fmo_77K": _ohmic(35.0, wc=106.0, eps=-120.0, v=-87.7,
                           t_kelvin=77.0, t_max=1.0),
    "fig4_fmo_300K": _ohmic(35.0, wc=106.0, eps=-120.0, v=-87.7,
                            t_kelvin=300.0, t_max=1.0),
    "fig5": _superohmic(50.0, 53.0, t_kelvin=0.0, t_max=3.0,
                        initial_condition="bare"),
    "fig5_displaced": _superohmic(50.0, 53.0, t_kelvin=0.0, t_max=3.0,
                                  initial_condition="displaced"),
    "fig5_300K": _superohmic(50.0, 53.0, t_kelvin=300.0, t_max=2.0,
                             initial_condition="bare"),
    "fig6": _ohmic(5.0, v=20.0, t_max=50.0,
                   sweep={"parameter": "lambda_cm1",
                          "values": [0.1, 0.5, 2.0, 5.0, 10.0, 20.0, 50.0,
                                     100.0, 200.0, 500.0]}),
}


def preset_config(name) -> dict:
    if name not in PRESETS:
        raise KeyError("unknown preset %r; available: %s"
                       % (name, ", ".join(sorted(PRESETS))))
    return copy.deepcopy(PRESETS[name])
