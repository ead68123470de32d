"""Run configuration: JSON schema, validation, realization, hashing.

A config document describes the gasket (n, level), the problem data (fields
a, g, u, the composition function h, the nonlinearity and its constants), the
solver options, and optionally a perturbation schedule for sweeps.  Parsing
collects every violation instead of stopping at the first.  The effective
config (all defaults filled in) is what gets hashed and echoed into run
directories, so every output is self-describing.

Vertex fields come from a small registry: a constant, an explicit per-vertex
array, or a clamped affine function of the Cartesian coordinates.  Scalar
functions (h) add polynomials; nonlinearities have their own named families.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
import numpy as np

from .energy import build_form
from .geometry import PrefractalGraph, build_prefractal, embed_coordinates
from .problem import Bounds, Nonlinearity, build_problem
from .solvers import SolverOptions

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "parse_config_dict",
    "effective_dict",
    "config_hash",
    "realize",
    "realize_field",
    "realize_scalar_fn",
    "realize_nonlinearity",
]

FIELD_KINDS = ("constant", "vertex_array", "affine_coord")
SCALAR_KINDS = ("constant", "affine", "polynomial")
NONLINEARITY_KINDS = ("power", "polynomial", "tanh_power")


class ConfigError(ValueError):
    """Raised with every schema violation found, not just the first."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("\n".join(violations))


_BOUND_DEFAULTS = {
    "M": 1.0,
    "M1": 1.0,
    "beta": 1.0,
    "eta": 0.0,
}

_SOLVER_DEFAULTS = SolverOptions().to_dict()

_HARNESS_DEFAULTS = {
    "schedule": "g_scale",
    "delta": 1.0,
    "n_max": 8,
    "solver": "min",
    "w": {"kind": "constant", "value": 0.0},
    "final_tol": 1e-4,
    "sample_fields": 8,
}


@dataclass
class RunConfig:
    gasket: dict
    problem: dict
    solver: dict
    harness: dict
    seed: int
    raw: dict = field(repr=False, default_factory=dict)

    def solver_options(self) -> SolverOptions:
        data = {k: v for k, v in self.solver.items() if k != "r"}
        return SolverOptions(**data)

    @property
    def r(self) -> float:
        """Ball/sphere radius; defaults to M1/(2N+3) so the embedding bound
        keeps in-ball fields within the forcing box |v| <= M1."""
        r = self.solver.get("r")
        if r is not None:
            return float(r)
        n = self.gasket["n"]
        return self.problem["bounds"]["M1"] / (2.0 * n + 3.0)


def _check_number(block: dict, key: str, errors: list, where: str, *,
                  required=False, default=None, positive=False,
                  nonnegative=False, integer=False, minimum=None):
    if key not in block:
        if required:
            errors.append(f"{where}.{key}: required field is missing")
            return None
        block[key] = default
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errors.append(f"{where}.{key}: expected a number, got {v!r}")
        return None
    if integer and int(v) != v:
        errors.append(f"{where}.{key}: expected an integer, got {v!r}")
        return None
    if positive and not v > 0:
        errors.append(f"{where}.{key}: must be positive, got {v}")
        return None
    if nonnegative and v < 0:
        errors.append(f"{where}.{key}: must be nonnegative, got {v}")
        return None
    if minimum is not None and v < minimum:
        errors.append(f"{where}.{key}: must be at least {minimum}, got {v}")
        return None
    block[key] = int(v) if integer else float(v)
    return block[key]


def _check_field_spec(spec, errors: list, where: str, default=None):
    if spec is None:
        spec = {"kind": "constant", "value": float(default)}
    if not isinstance(spec, dict) or "kind" not in spec:
        errors.append(f"{where}: expected an object with a 'kind'")
        return spec
    kind = spec["kind"]
    if kind not in FIELD_KINDS:
        errors.append(f"{where}.kind: {kind!r} is not one of {FIELD_KINDS}")
    elif kind == "constant":
        if not isinstance(spec.get("value"), (int, float)):
            errors.append(f"{where}.value: constant field needs a number")
    elif kind == "vertex_array":
        if not isinstance(spec.get("values"), list):
            errors.append(f"{where}.values: vertex_array needs a list")
    elif kind == "affine_coord":
        if not isinstance(spec.get("intercept"), (int, float)):
            errors.append(f"{where}.intercept: affine_coord needs a number")
        if not isinstance(spec.get("coeffs"), list):
            errors.append(f"{where}.coeffs: affine_coord needs a coefficient list")
    return spec


def _check_scalar_spec(spec, errors: list, where: str):
    if spec is None:
        spec = {"kind": "constant", "value": 1.0}
    if not isinstance(spec, dict) or "kind" not in spec:
        errors.append(f"{where}: expected an object with a 'kind'")
        return spec
    kind = spec["kind"]
    if kind not in SCALAR_KINDS:
        errors.append(f"{where}.kind: {kind!r} is not one of {SCALAR_KINDS}")
    elif kind == "constant" and not isinstance(spec.get("value"), (int, float)):
        errors.append(f"{where}.value: constant needs a number")
    elif kind == "affine":
        for k in ("intercept", "slope"):
            if not isinstance(spec.get(k), (int, float)):
                errors.append(f"{where}.{k}: affine needs a number")
    elif kind == "polynomial" and not isinstance(spec.get("coeffs"), list):
        errors.append(f"{where}.coeffs: polynomial needs a coefficient list")
    return spec


def parse_config_dict(raw: dict) -> RunConfig:
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a JSON object"])
    data = json.loads(json.dumps(raw))  # deep copy, JSON-normalized

    gasket = data.setdefault("gasket", {})
    _check_number(gasket, "n", errors, "gasket", required=True, integer=True, minimum=2)
    _check_number(gasket, "level", errors, "gasket", required=True, integer=True,
                  nonnegative=True)

    problem = data.setdefault("problem", {})
    problem["a"] = _check_field_spec(problem.get("a"), errors, "problem.a", 0.0)
    problem["g"] = _check_field_spec(problem.get("g"), errors, "problem.g", 1.0)
    problem["u"] = _check_field_spec(problem.get("u"), errors, "problem.u", 0.0)
    problem["h"] = _check_scalar_spec(problem.get("h"), errors, "problem.h")

    nl = problem.setdefault("nonlinearity", {})
    kind = nl.setdefault("kind", "power")
    if kind not in NONLINEARITY_KINDS:
        errors.append(
            f"problem.nonlinearity.kind: {kind!r} is not one of {NONLINEARITY_KINDS}"
        )
    theta = _check_number(nl, "theta", errors, "problem.nonlinearity",
                          required=True)
    if kind == "power":
        _check_number(nl, "scale", errors, "problem.nonlinearity", default=1.0,
                      positive=True)
    elif kind == "polynomial":
        if not isinstance(nl.get("coeffs"), list):
            errors.append("problem.nonlinearity.coeffs: polynomial needs a list")
    elif kind == "tanh_power":
        _check_number(nl, "eta", errors, "problem.nonlinearity", required=True,
                      nonnegative=True)
        _check_number(nl, "delta", errors, "problem.nonlinearity", required=True,
                      positive=True)
        _check_number(nl, "lam", errors, "problem.nonlinearity", required=True,
                      nonnegative=True)

    bounds = problem.setdefault("bounds", {})
    for key, default in _BOUND_DEFAULTS.items():
        _check_number(bounds, key, errors, "problem.bounds", default=default)
    if theta is not None:
        eps_default = 0.5 * (theta - 2.0) if theta > 2.0 else 0.5
        c_default = 0.5 * (0.5 - 1.0 / theta) if theta > 2.0 else 0.1
    else:
        eps_default, c_default = 0.5, 0.1
    eps = _check_number(bounds, "epsilon", errors, "problem.bounds",
                        default=eps_default, positive=True)
    c = _check_number(bounds, "c", errors, "problem.bounds",
                      default=c_default, positive=True)
    if bounds.get("M") is not None and not bounds["M"] > 0:
        errors.append("problem.bounds.M: must be positive")
    if bounds.get("M1") is not None and not bounds["M1"] > 0:
        errors.append("problem.bounds.M1: must be positive")
    if theta is not None and eps is not None and not theta > 2.0 + eps:
        errors.append(
            f"problem.nonlinearity.theta: superquadratic growth requires "
            f"theta > 2 + epsilon = {2.0 + eps}, got {theta}"
        )
    if theta is not None and c is not None and theta > 2.0:
        if 0.5 - 1.0 / theta < c:
            errors.append(
                f"problem.bounds.c: requires 1/2 - 1/theta >= c, but "
                f"{0.5 - 1.0 / theta} < {c}"
            )

    solver = data.setdefault("solver", {})
    for key, default in _SOLVER_DEFAULTS.items():
        if key in ("max_iters", "path_points", "seed"):
            _check_number(solver, key, errors, "solver", default=default,
                          integer=True)
        elif key in ("newton_polish", "check_coercivity"):
            v = solver.setdefault(key, default)
            if not isinstance(v, bool):
                errors.append(f"solver.{key}: expected true/false, got {v!r}")
        else:
            _check_number(solver, key, errors, "solver", default=default)
    if "r" in solver and solver["r"] is not None:
        _check_number(solver, "r", errors, "solver", positive=True)
    else:
        solver["r"] = None
    if solver.get("grad_tol") is not None and not solver["grad_tol"] > 0:
        errors.append("solver.grad_tol: must be positive")
    if solver.get("path_points") is not None and solver["path_points"] < 3:
        errors.append("solver.path_points: must be at least 3")

    harness = data.setdefault("harness", {})
    for key, default in _HARNESS_DEFAULTS.items():
        if key == "w":
            harness["w"] = _check_field_spec(harness.get("w"), errors,
                                             "harness.w", 0.0)
        elif key in ("schedule", "solver"):
            harness.setdefault(key, default)
        elif key in ("n_max", "sample_fields"):
            _check_number(harness, key, errors, "harness", default=default,
                          integer=True, minimum=1)
        else:
            _check_number(harness, key, errors, "harness", default=default)
    if harness["schedule"] not in ("g_scale", "u_drift", "g_and_u"):
        errors.append(
            f"harness.schedule: {harness['schedule']!r} is not a known family"
        )
    if harness["solver"] not in ("min", "ball", "mpa", "double"):
        errors.append(f"harness.solver: {harness['solver']!r} is not a solver kind")

    _check_number(data, "seed", errors, "top level", default=0, integer=True)

    if errors:
        raise ConfigError(errors)

    return RunConfig(
        gasket=gasket,
        problem=problem,
        solver=solver,
        harness=harness,
        seed=data["seed"],
        raw=data,
    )


def parse_config(path) -> RunConfig:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}: not valid JSON ({exc})"]) from exc
    return parse_config_dict(raw)


def effective_dict(config: RunConfig) -> dict:
    return {
        "format_version": 1,
        "gasket": config.gasket,
        "problem": config.problem,
        "solver": config.solver,
        "harness": config.harness,
        "seed": config.seed,
    }


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(effective_dict(config), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# realization


def realize_field(spec: dict, graph: PrefractalGraph) -> np.ndarray:
    kind = spec["kind"]
    if kind == "constant":
        return np.full(graph.n_vertices, float(spec["value"]))
    if kind == "vertex_array":
        values = np.asarray(spec["values"], dtype=float)
        if values.shape != (graph.n_vertices,):
            raise ConfigError(
                [
                    f"vertex_array: {len(values)} values for a graph with "
                    f"{graph.n_vertices} vertices"
                ]
            )
        return values
    if kind == "affine_coord":
        coeffs = np.asarray(spec["coeffs"], dtype=float)
        xyz = embed_coordinates(graph)
        if coeffs.shape != (xyz.shape[1],):
            raise ConfigError(
                [
                    f"affine_coord: expected {xyz.shape[1]} coefficients, "
                    f"got {len(coeffs)}"
                ]
            )
        values = float(spec["intercept"]) + xyz @ coeffs
        clamp = spec.get("clamp")
        if clamp is not None:
            values = np.clip(values, float(clamp[0]), float(clamp[1]))
        return values
    raise ConfigError([f"unknown field kind {kind!r}"])


def realize_scalar_fn(spec: dict):
    kind = spec["kind"]
    if kind == "constant":
        value = float(spec["value"])
        return lambda v: np.full_like(np.asarray(v, dtype=float), value)
    if kind == "affine":
        intercept = float(spec["intercept"])
        slope = float(spec["slope"])
        clamp = spec.get("clamp")

        def h(v):
            out = intercept + slope * np.asarray(v, dtype=float)
            if clamp is not None:
                out = np.clip(out, float(clamp[0]), float(clamp[1]))
            return out

        return h
    if kind == "polynomial":
        poly = np.polynomial.Polynomial([float(c) for c in spec["coeffs"]])
        return lambda v: poly(np.asarray(v, dtype=float))
    raise ConfigError([f"unknown scalar kind {kind!r}"])


def realize_nonlinearity(spec: dict) -> Nonlinearity:
    kind = spec["kind"]
    if kind == "power":
        return Nonlinearity.power(spec["theta"], spec.get("scale", 1.0))
    if kind == "polynomial":
        return Nonlinearity.polynomial(spec["coeffs"], spec["theta"])
    if kind == "tanh_power":
        return Nonlinearity.tanh_power(
            spec["eta"], spec["delta"], spec["lam"], spec["theta"]
        )
    raise ConfigError([f"unknown nonlinearity kind {kind!r}"])


def realize(config: RunConfig):
    """Build (graph, form, problem) from a validated config."""
    graph = build_prefractal(config.gasket["n"], config.gasket["level"])
    form = build_form(graph)
    problem = build_problem(
        form,
        nonlinearity=realize_nonlinearity(config.problem["nonlinearity"]),
        a=realize_field(config.problem["a"], graph),
        g=realize_field(config.problem["g"], graph),
        u=realize_field(config.problem["u"], graph),
        h=realize_scalar_fn(config.problem["h"]),
        bounds=Bounds(**config.problem["bounds"]),
        h_params=config.problem["h"],
    )
    return graph, form, problem
