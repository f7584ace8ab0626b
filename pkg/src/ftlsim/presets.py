"""Built-in benchmark scenarios.

One preset per published experiment: the two-state Cauchy datum, the four
Dirichlet runs (two constant-data rarefaction/shock cases, the re-updating
two-block case, and the staged time-dependent case with a closed-form final
state), the two second-order Riemann tests, and the two corridor-evacuation
data.  Values are the experiment definitions; final times for the corridor
runs are fixed here since the sources quote iteration counts instead.
"""

from __future__ import annotations

import copy

_GREENSHIELDS = {"kind": "greenshields", "v_max": 1.0, "rho_max": 1.0}

PRESETS: dict[str, dict] = {
    "lwr-test1": {
        "name": "lwr-test1",
        "model": "lwr_cauchy",
        "velocity": _GREENSHIELDS,
        "initial": {"breakpoints": [-1.0, 0.0, 1.0], "values": [0.4, 0.8]},
        "n": 200,
        "t_final": 0.5,
        "reference": "riemann_composition",
        "snapshots_at": [0.0, 0.25, 0.5],
    },
    "ibvp-test1bc": {
        "name": "ibvp-test1bc",
        "model": "lwr_ibvp",
        "velocity": _GREENSHIELDS,
        "initial": {"breakpoints": [0.0, 1.0], "values": [0.2]},
        "boundary0": {"times": [0.0], "values": [0.4]},
        "boundary1": {"times": [0.0], "values": [0.0]},
        "n": 100,
        "m": 20,
        "t_final": 1.0,
        "reference": "godunov",
        "snapshots_at": [0.0, 0.5, 1.0],
    },
    "ibvp-test2bc": {
        "name": "ibvp-test2bc",
        "model": "lwr_ibvp",
        "velocity": _GREENSHIELDS,
        "initial": {"breakpoints": [0.0, 1.0], "values": [0.2]},
        "boundary0": {"times": [0.0], "values": [0.4]},
        "boundary1": {"times": [0.0], "values": [1.0]},
        "n": 100,
        "m": 20,
        "t_final": 1.0,
        "reference": "godunov",
        "snapshots_at": [0.0, 0.5, 1.0],
    },
    "ibvp-pp": {
        "name": "ibvp-pp",
        "model": "lwr_ibvp",
        "velocity": _GREENSHIELDS,
        "initial": {"breakpoints": [0.0, 0.5, 1.0], "values": [0.8, 0.1]},
        "boundary0": {"times": [0.0], "values": [0.3]},
        "boundary1": {"times": [0.0], "values": [0.1]},
        "n": 100,
        "m": 20,
        "t_final": 1.0,
        "reference": "godunov",
        "snapshots_at": [0.0, 0.5, 1.0],
    },
    "ibvp-ptd": {
        "name": "ibvp-ptd",
        "model": "lwr_ibvp",
        "velocity": _GREENSHIELDS,
        "initial": {"breakpoints": [0.0, 1.0], "values": [0.3]},
        "boundary0": {"times": [0.0, 1.0], "values": [0.1, 0.6]},
        "boundary1": {"times": [0.0, 1.0], "values": [0.9, 0.1]},
        "n": 400,
        "m": 40,
        "t_final": 2.0,
        "reference": "exact_ptd",
        "snapshots_at": [0.0, 1.0, 2.0],
    },
    "arz-test1": {
        "name": "arz-test1",
        "model": "arz",
        "velocity": _GREENSHIELDS,
        "pressure": {"kind": "log_scaled", "coefficient": 1.4427},
        "initial": {"breakpoints": [-1.0, 0.0, 1.0], "values": [0.5, 0.1]},
        "initial_velocity": [1.2, 1.6],
        "allow_negative_markers": True,
        "n": 200,
        "t_final": 0.2,
        "snapshots_at": [0.0, 0.1, 0.2],
    },
    "arz-test2": {
        "name": "arz-test2",
        "model": "arz",
        "velocity": _GREENSHIELDS,
        "pressure": {"kind": "linear", "slope": 6.0},
        "initial": {"breakpoints": [-1.0, 0.0, 1.0], "values": [0.05, 0.05]},
        "initial_velocity": [0.05, 0.5],
        "n": 200,
        "t_final": 1.0,
        "snapshots_at": [0.0, 0.5, 1.0],
    },
    "hughes-steps": {
        "name": "hughes-steps",
        "model": "hughes",
        "velocity": _GREENSHIELDS,
        "cost": {"kind": "reciprocal_velocity"},
        "initial": {
            "breakpoints": [-0.8, -0.5, -0.3, 0.3, 0.4, 0.75],
            "values": [0.8, 0.0, 0.6, 0.0, 0.9],
        },
        "n": 200,
        "t_final": 1.0,
        "reference": "godunov",
        "snapshots_at": [0.0, 0.5, 1.0],
    },
    "hughes-comp": {
        "name": "hughes-comp",
        "model": "hughes",
        "velocity": _GREENSHIELDS,
        "cost": {"kind": "reciprocal_velocity"},
        "initial": {"breakpoints": [-1.0, 0.0, 1.0], "values": [0.3, 0.7]},
        "n": 1000,
        "t_final": 0.5,
        "reference": "godunov",
        "snapshots_at": [0.0, 0.25, 0.5],
    },
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return copy.deepcopy(PRESETS[name])
