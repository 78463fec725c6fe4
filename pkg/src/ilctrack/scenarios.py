"""Declarative experiment scenarios: schema, JSON (de)serialization, built-ins.

A scenario bundles one plant (rational matrices or a state-space triple),
named trajectory cases with their initial inputs, the gain operator, grid,
iteration budget, optional lambda override and disturbance bounds, and the
RNG seed that makes every probe draw and disturbance stream reproducible.

The file format is plain JSON: polynomials are ascending coefficient
arrays, rational entries are {"num": [...], "den": [...]} records, and
trajectory terms are {c, m, a, omega, phi} records, so the built-in
scenarios can be reviewed line by line against their printed fractions.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .ilc import DisturbanceModel, GainOperator, dtype_gain, validate_gain
from .laplace import ExogenousInput, SignalExpr, Term, signal_vector, zero_signal
from .ratmat import RationalMatrix
from .simulate import Grid
from .trackability import ConditionError, Plant, statespace_plant

__all__ = [
    "Case",
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "save_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "builtin_scenario",
    "builtin_scenario_names",
]


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate."""


@dataclass(frozen=True)
class Case:
    """One named experiment: desired trajectory plus initial input."""

    yd: tuple  # tuple of SignalExpr
    u0: tuple  # tuple of SignalExpr


@dataclass
class Scenario:
    """A full experiment description; plant and gain come pre-validated."""

    name: str
    plant: Plant
    gain: GainOperator
    cases: dict
    grid: Grid
    iterations: int
    seed: int = 0
    lam: float | None = None
    disturbance: DisturbanceModel | None = None
    plant_spec: dict = field(default_factory=dict, repr=False)
    gain_spec: dict = field(default_factory=dict, repr=False)

    def case(self, name):
        try:
            return self.cases[name]
        except KeyError:
            raise ScenarioError(
                f"unknown case {name!r}; available: {sorted(self.cases)}"
            ) from None


# -- JSON encoding helpers -------------------------------------------------


def _terms_to_json(expr):
    return [
        {"c": t.c, "m": t.m, "a": t.a, "omega": t.omega, "phi": t.phi}
        for t in expr.terms
    ]


def _terms_from_json(items, where):
    try:
        return SignalExpr([Term(**item) for item in items])
    except TypeError as exc:
        raise ScenarioError(f"bad trajectory term in {where}: {exc}") from None


def _signal_to_json(exprs):
    return [_terms_to_json(f) for f in exprs]


def _signal_from_json(items, where):
    if not isinstance(items, list):
        raise ScenarioError(f"{where}: expected a list of channel term lists")
    return tuple(_terms_from_json(ch, where) for ch in items)


def _ratmat_to_json(g):
    return [
        [
            {"num": list(g[i, j].num.coeffs), "den": list(g[i, j].den.coeffs)}
            for j in range(g.cols)
        ]
        for i in range(g.rows)
    ]


def _ratmat_from_json(rows, where):
    try:
        parsed = [[(e["num"], e["den"]) for e in row] for row in rows]
        return RationalMatrix.from_rows(parsed)
    except (TypeError, KeyError, ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"bad rational matrix in {where}: {exc}") from None


def scenario_to_dict(sc):
    data = {
        "name": sc.name,
        "seed": sc.seed,
        "grid": {"T": sc.grid.T, "N": sc.grid.N},
        "iterations": sc.iterations,
        "lambda": sc.lam,
        "plant": dict(sc.plant_spec),
        "gain": dict(sc.gain_spec),
        "cases": {
            name: {"y_d": _signal_to_json(c.yd), "u0": _signal_to_json(c.u0)}
            for name, c in sc.cases.items()
        },
    }
    if sc.disturbance is not None:
        data["disturbance"] = {
            "beta_theta": sc.disturbance.beta_theta,
            "beta_thetahat": sc.disturbance.beta_thetahat,
        }
    return data


def scenario_from_dict(data, name=None):
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be an object")
    try:
        name = name or data["name"]
        grid_spec = data["grid"]
        grid = Grid(float(grid_spec["T"]), int(grid_spec["N"]))
        iterations = int(data.get("iterations", 100))
        seed = int(data.get("seed", 0))
        lam = data.get("lambda")
        lam = None if lam is None else float(lam)
        plant_spec = data["plant"]
        gain_spec = data["gain"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"missing or malformed scenario field: {exc}") from None

    plant = _plant_from_spec(plant_spec)
    gain = _gain_from_spec(gain_spec, plant)

    cases = {}
    for cname, cdata in data.get("cases", {}).items():
        yd = _signal_from_json(cdata.get("y_d", []), f"case {cname} y_d")
        if len(yd) != plant.q:
            raise ScenarioError(
                f"case {cname}: trajectory has {len(yd)} channels, plant has {plant.q} outputs"
            )
        u0 = _signal_from_json(cdata.get("u0", []), f"case {cname} u0")
        if not u0:
            u0 = zero_signal(plant.p)
        if len(u0) != plant.p:
            raise ScenarioError(
                f"case {cname}: initial input has {len(u0)} channels, plant has {plant.p} inputs"
            )
        cases[cname] = Case(yd=yd, u0=u0)

    disturbance = None
    if "disturbance" in data and data["disturbance"] is not None:
        d = data["disturbance"]
        disturbance = DisturbanceModel(
            float(d.get("beta_theta", 0.0)), float(d.get("beta_thetahat", 0.0)), seed=seed
        )

    return Scenario(
        name=name,
        plant=plant,
        gain=gain,
        cases=cases,
        grid=grid,
        iterations=iterations,
        seed=seed,
        lam=lam,
        disturbance=disturbance,
        plant_spec=plant_spec,
        gain_spec=gain_spec,
    )


def _plant_from_spec(spec):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ScenarioError("plant spec needs a 'type' field")
    kind = spec["type"]
    try:
        if kind == "rational":
            g1 = _ratmat_from_json(spec["G1"], "G1")
            g2 = _ratmat_from_json(spec["G2"], "G2")
            d0 = np.asarray(spec.get("d0", [0.0] * g2.cols), dtype=float)
            dhat = spec.get("dhat")
            dhat = _signal_from_json(dhat, "dhat") if dhat else None
            exo = ExogenousInput(d0, dhat)
            return Plant(g1, g2, exo)
        if kind == "state_space":
            A = np.asarray(spec["A"], dtype=float)
            B = np.asarray(spec["B"], dtype=float)
            C = np.asarray(spec["C"], dtype=float)
            x0 = spec.get("x0")
            w = spec.get("w")
            w = _signal_from_json(w, "w") if w else None
            return statespace_plant(A, B, C, x0=x0, w=w)
    except ScenarioError:
        raise
    except ConditionError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"malformed plant spec: {exc}") from None
    raise ScenarioError(f"unknown plant type {kind!r}")


def _gain_from_spec(spec, plant):
    if not isinstance(spec, dict):
        raise ScenarioError("gain spec must be an object")
    try:
        if "d_type_upsilon" in spec:
            gain = dtype_gain(np.asarray(spec["d_type_upsilon"], dtype=float))
            if gain.p != plant.p or gain.q != plant.q:
                raise ScenarioError("gain dimensions do not match the plant")
            return gain
        if "rational" in spec:
            raw = _ratmat_from_json(spec["rational"], "gain")
            return validate_gain(raw, plant)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"gain rejected: {exc}") from None
    raise ScenarioError("gain spec needs 'd_type_upsilon' or 'rational'")


def load_scenario(path):
    """Load and eagerly validate a scenario file (conditions C1-C4 included)."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"scenario parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return scenario_from_dict(data)


def save_scenario(sc, path):
    with open(path, "w", newline="\n") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2)
        fh.write("\n")


# -- built-in scenarios ----------------------------------------------------


def _rf(num, den):
    return {"num": list(num), "den": list(den)}


def _sine(amplitude, omega):
    return [{"c": float(amplitude), "m": 0, "a": 0.0, "omega": float(omega), "phi": -np.pi / 2}]


def _const(value):
    if value == 0.0:
        return []
    return [{"c": float(value), "m": 0, "a": 0.0, "omega": 0.0, "phi": 0.0}]


def _example1_dict():
    # Three-output, two-input plant; denominators share (s+1)(s+2)(s+3).
    den2 = [20.0, 30.0, 10.0]  # 10 (s^2 + 3 s + 2)
    den2b = [200.0, 300.0, 100.0]  # 100 (s^2 + 3 s + 2)
    den3 = [300.0, 550.0, 300.0, 50.0]  # 50 (s^3 + 6 s^2 + 11 s + 6)
    g1 = [
        [_rf([-17.0, 12.0], den2), _rf([-17.0, 12.0], den2)],
        [_rf([82.0, 111.0], den2b), _rf([82.0, 111.0], den2b)],
        [_rf([-216.0, -133.0, 25.0], den3), _rf([-144.0, -25.0, 61.0], den3)],
    ]
    g2 = [
        [
            _rf([1.0], [1.0, 1.0]),
            _rf([1.0], [1.0, 1.0]),
            _rf([-39.0, 1.0], [20.0, 30.0, 10.0]),
        ],
        [
            _rf([1.0], [10.0, 10.0]),
            _rf([1.0], [10.0, 10.0]),
            _rf([3.0, 5.0], [10.0, 15.0, 5.0]),
        ],
        [
            _rf([1.0], [5.0, 5.0]),
            _rf([7.0, 5.0], [15.0, 20.0, 5.0]),
            _rf([-29.0, -20.0, 1.0], [30.0, 55.0, 30.0, 5.0]),
        ],
    ]

    # First channel pairs a cosine/exponential mix with the sine channels so
    # that the channel-ratio identity of the plant's range holds (cases a, b);
    # case c detunes the sine weight, which breaks trackability.
    c0 = 57420.0 / 3809.0
    ch1 = [
        {"c": c0, "m": 0, "a": 0.0, "omega": 1.0, "phi": 0.0},
        {"c": -c0, "m": 0, "a": -82.0 / 111.0, "omega": 0.0, "phi": 0.0},
    ]
    ch1_a = ch1 + [{"c": -1240.0 / 3809.0, "m": 0, "a": 0.0, "omega": 1.0, "phi": -np.pi / 2}]
    ch1_c = ch1 + [{"c": -2.0 / 5.0, "m": 0, "a": 0.0, "omega": 1.0, "phi": -np.pi / 2}]
    yd_a = [ch1_a, _sine(10.0, 1.0), _sine(10.0, np.pi / 5.0)]
    yd_c = [ch1_c, _sine(10.0, 1.0), _sine(10.0, np.pi / 5.0)]

    upsilon = [[0.6849, 0.6335, -1.25], [-0.2807, -0.2596, 1.25]]
    return {
        "name": "example1",
        "seed": 20260809,
        "grid": {"T": 10.0, "N": 2001},
        "iterations": 100,
        "lambda": None,
        "plant": {"type": "rational", "G1": g1, "G2": g2, "d0": [0.0, 0.0, 0.0]},
        "gain": {"d_type_upsilon": upsilon},
        "cases": {
            "a": {"y_d": yd_a, "u0": [[], []]},
            "b": {"y_d": yd_a, "u0": [_const(10.0), _const(-10.0)]},
            "c": {"y_d": yd_c, "u0": [[], []]},
        },
        "disturbance": {"beta_theta": 0.0, "beta_thetahat": 0.0},
    }


def _example2_dict():
    den3 = [120.0, 220.0, 120.0, 20.0]  # 20 (s^3 + 6 s^2 + 11 s + 6)
    den3b = [600.0, 1100.0, 600.0, 100.0]  # 100 (...)
    den3c = [60.0, 110.0, 60.0, 10.0]  # 10 (...)
    den3d = [300.0, 550.0, 300.0, 50.0]  # 50 (...)
    g1 = [
        [
            _rf([195.0, 155.0, 24.0], den3),
            _rf([-348.0, 523.0, 111.0], den3b),
            _rf([45.0, 42.0, 5.0], den3c),
        ],
        [
            _rf([273.0, 361.0, 120.0], den3b),
            _rf([-240.0, -53.0, 111.0], den3b),
            _rf([99.0, 156.0, 61.0], den3d),
        ],
    ]
    g2 = [
        [
            _rf([1.0], [1.0, 1.0]),
            _rf([21.0, 1.0], [30.0, 40.0, 10.0]),
            _rf([-9.0, 9.0, 2.0], [12.0, 22.0, 12.0, 2.0]),
        ],
        [
            _rf([1.0], [10.0, 10.0]),
            _rf([6.0, 5.0], [15.0, 20.0, 5.0]),
            _rf([-27.0, -9.0, 10.0], [60.0, 110.0, 60.0, 10.0]),
        ],
    ]
    yd = [_sine(10.0, 1.0), _sine(10.0, np.pi / 5.0)]
    upsilon = [[0.6, 0.1], [0.1, 0.1], [-0.5, 0.4]]
    return {
        "name": "example2",
        "seed": 20260810,
        "grid": {"T": 10.0, "N": 2001},
        "iterations": 200,
        "lambda": None,
        "plant": {"type": "rational", "G1": g1, "G2": g2, "d0": [0.0, 0.0, 0.0]},
        "gain": {"d_type_upsilon": upsilon},
        "cases": {
            "d": {"y_d": yd, "u0": [[], [], []]},
            "e": {"y_d": yd, "u0": [_const(10.0), _const(-10.0), _const(5.0)]},
        },
    }


def _dtype_ss_dict():
    # Second-order state-space plant with CB = 1; Upsilon = 1 gives a
    # deadbeat-limit spectral radius of 0.
    return {
        "name": "dtype-ss",
        "seed": 7,
        "grid": {"T": 10.0, "N": 2001},
        "iterations": 150,
        "lambda": None,
        "plant": {
            "type": "state_space",
            "A": [[0.0, 1.0], [-2.0, -3.0]],
            "B": [[0.0], [1.0]],
            "C": [[0.0, 1.0]],
            "x0": [0.0, 0.0],
        },
        "gain": {"d_type_upsilon": [[1.0]]},
        "cases": {"s": {"y_d": [_sine(10.0, 1.0)], "u0": [[]]}},
    }


_BUILTINS = {
    "example1": _example1_dict,
    "example2": _example2_dict,
    "dtype-ss": _dtype_ss_dict,
}


def builtin_scenario_names():
    return sorted(_BUILTINS)


def builtin_scenario(name):
    """Construct one of the shipped scenarios by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise ScenarioError(
            f"unknown built-in scenario {name!r}; available: {builtin_scenario_names()}"
        ) from None
    return scenario_from_dict(factory())


def builtin_scenario_dict(name):
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ScenarioError(
            f"unknown built-in scenario {name!r}; available: {builtin_scenario_names()}"
        ) from None
