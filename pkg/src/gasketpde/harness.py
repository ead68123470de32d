"""Sequences of perturbed problems and the critical-point convergence experiment.

A schedule attaches to a base (limit) problem a family of instances indexed by
n = 1..n_max whose data converges back to the base with explicit 1/n rates:
g_n = g0 (1 + delta/n), u_n = u0 + (delta/n) w, constant growth exponent.
Index 0 is the base itself.  On top of that the module estimates the uniform
convergence of the action functionals and their derivatives over a declared
finite sample, checks the saddle/dip geometry uniformly in n, and runs the
experiment that tracks how per-index critical points drift toward the limit
critical point.  Uniform statements over the whole space are not certifiable
numerically; everything here is labeled as a sampled estimate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import VertexField, random_dirichlet
from .problem import Nonlinearity, ProblemInstance, build_problem
from . import solvers as slv

__all__ = [
    "PerturbationSchedule",
    "ProblemSequence",
    "ConvergenceEstimates",
    "HypothesisEntry",
    "HypothesisReport",
    "ConvergenceRow",
    "ConvergenceTable",
    "build_sequence",
    "uniform_convergence_estimate",
    "hypothesis_check",
    "run_convergence_experiment",
]

SCHEDULES = ("g_scale", "u_drift", "g_and_u")
SOLVER_KINDS = ("min", "ball", "mpa", "double")


@dataclass(frozen=True)
class PerturbationSchedule:
    """Named 1/n perturbation family applied to the base problem data."""

    name: str
    delta: float
    w: Optional[np.ndarray] = None  # drift direction for u, per vertex
    delta_theta: float = 0.0

    def __post_init__(self):
        if self.name not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.name!r}; pick from {SCHEDULES}")
        if self.name in ("u_drift", "g_and_u") and self.w is None:
            raise ValueError(f"schedule {self.name!r} needs a drift direction w")


@dataclass(eq=False)
class ProblemSequence:
    base: ProblemInstance
    schedule: PerturbationSchedule
    n_max: int
    _cache: dict = field(default_factory=dict, repr=False)

    def instance(self, n: int) -> ProblemInstance:
        """Index 0 is the base; instances are built lazily and cached."""
        if n < 0 or n > self.n_max:
            raise IndexError(f"index {n} outside 0..{self.n_max}")
        if n == 0:
            return self.base
        if n not in self._cache:
            self._cache[n] = _perturbed_instance(self.base, self.schedule, n)
        return self._cache[n]

    def indices(self):
        return range(1, self.n_max + 1)


def _perturbed_data(base: ProblemInstance, schedule: PerturbationSchedule, n: int):
    g = base.g.copy()
    u = base.u_data.copy()
    if schedule.name in ("g_scale", "g_and_u"):
        g = base.g * (1.0 + schedule.delta / n)
    if schedule.name in ("u_drift", "g_and_u"):
        u = base.u_data + (schedule.delta / n) * schedule.w
    return g, u


def _perturbed_instance(
    base: ProblemInstance, schedule: PerturbationSchedule, n: int
) -> ProblemInstance:
    g, u = _perturbed_data(base, schedule, n)
    if np.any(g <= 0.0):
        raise ValueError(f"schedule drives g nonpositive at index n = {n}")
    if np.any(np.abs(u) > base.bounds.M):
        raise ValueError(
            f"schedule drives |u| beyond M = {base.bounds.M} at index n = {n}"
        )
    nonlin = base.nonlinearity
    if schedule.delta_theta != 0.0:
        if nonlin.kind != "power":
            raise ValueError(
                "per-index growth exponents are only supported for the power "
                "nonlinearity family"
            )
        theta_n = nonlin.params["theta"] + schedule.delta_theta / n
        nonlin = Nonlinearity.power(theta_n, nonlin.params.get("scale", 1.0))
    return build_problem(
        base.form,
        nonlinearity=nonlin,
        a=base.a,
        g=g,
        u=u,
        h=base.h,
        bounds=base.bounds,
        h_params=base.h_params,
    )


def build_sequence(
    base: ProblemInstance, schedule: PerturbationSchedule, n_max: int
) -> ProblemSequence:
    """Validate the worst index eagerly, then generate lazily."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    for n in range(1, n_max + 1):
        g, u = _perturbed_data(base, schedule, n)
        if np.any(g <= 0.0):
            raise ValueError(f"schedule drives g nonpositive at index n = {n}")
        if np.any(np.abs(u) > base.bounds.M):
            raise ValueError(
                f"schedule drives |u| beyond M = {base.bounds.M} at index n = {n}"
            )
    return ProblemSequence(base, schedule, n_max)


@dataclass
class ConvergenceEstimates:
    """Per-index sampled sup gaps between the perturbed and limit functionals."""

    value_sup: np.ndarray  # sup over the sample of |Phi_n - Phi_0|
    deriv_sup: np.ndarray  # sup over the sample of the dual-norm gap
    fitted_rate_constant: float  # C in the least-squares fit value_sup ~ C/n
    fitted_rate_constant_deriv: float
    monotone_value: bool
    monotone_deriv: bool
    sample_size: int

    def rate_band(self) -> tuple[float, float]:
        """Spread of n * value_sup relative to the fitted constant."""
        prods = self.value_sup * np.arange(1, len(self.value_sup) + 1)
        if self.fitted_rate_constant == 0.0:
            return (1.0, 1.0) if np.all(prods == 0.0) else (0.0, math.inf)
        return (
            float(np.min(prods) / self.fitted_rate_constant),
            float(np.max(prods) / self.fitted_rate_constant),
        )


def uniform_convergence_estimate(
    seq: ProblemSequence, sample: list
) -> ConvergenceEstimates:
    if not sample:
        raise ValueError("need a nonempty sample of fields")
    base = seq.base
    xs = [base.interior_values(x) for x in sample]
    value_sup = np.zeros(seq.n_max)
    deriv_sup = np.zeros(seq.n_max)
    base_vals = [base.action_interior(x) for x in xs]
    base_res = [base.residual_interior(x) for x in xs]
    for n in seq.indices():
        pn = seq.instance(n)
        vgap = 0.0
        dgap = 0.0
        for x, v0, r0 in zip(xs, base_vals, base_res):
            vgap = max(vgap, abs(pn.action_interior(x) - v0))
            dr = pn.residual_interior(x) - r0
            if base.n_interior:
                p = base._factorized()(dr)
                dgap = max(dgap, math.sqrt(max(float(p @ dr), 0.0)))
        value_sup[n - 1] = vgap
        deriv_sup[n - 1] = dgap

    inv_n = 1.0 / np.arange(1, seq.n_max + 1)

    def fit(y):
        denom = float(inv_n @ inv_n)
        return float((y @ inv_n) / denom) if denom else 0.0

    return ConvergenceEstimates(
        value_sup=value_sup,
        deriv_sup=deriv_sup,
        fitted_rate_constant=fit(value_sup),
        fitted_rate_constant_deriv=fit(deriv_sup),
        monotone_value=bool(np.all(np.diff(value_sup) <= 1e-15)),
        monotone_deriv=bool(np.all(np.diff(deriv_sup) <= 1e-15)),
        sample_size=len(xs),
    )


@dataclass
class HypothesisEntry:
    name: str
    quantity: float
    bound: float
    passed: bool
    per_index: list[float]
    sampling: str
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "quantity": self.quantity,
            "bound": self.bound,
            "passed": self.passed,
            "per_index": self.per_index,
            "sampling": self.sampling,
            "detail": self.detail,
        }


@dataclass
class HypothesisReport:
    entries: dict[str, HypothesisEntry]
    r: float
    x_star_norm: float

    def passed(self, *names: str) -> bool:
        return all(self.entries[n].passed for n in names)

    @property
    def mountain_pass_ok(self) -> bool:
        return self.passed("zero_at_origin", "sphere_uniformly_positive", "far_point_negative")

    @property
    def two_point_ok(self) -> bool:
        return self.mountain_pass_ok and self.passed("ball_dip")

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "x_star_norm": self.x_star_norm,
            "entries": {k: e.to_dict() for k, e in sorted(self.entries.items())},
        }


def hypothesis_check(
    seq: ProblemSequence,
    r: float,
    x_star,
    n_directions: int = 32,
    n_ball_shells: int = 8,
    seed: int = 0,
    dip_floor: float = 1.0,
    big_radius: float | None = None,
) -> HypothesisReport:
    """Uniform-in-n sampled check of the saddle and dip geometry.

    Shared sampled directions are reused across all indices so the margins
    are comparable; ``dip_floor`` is the -R lower bound the in-ball dips must
    stay above.
    """
    base = seq.base
    rng = np.random.default_rng(seed)
    dirs = slv._direction_stream(base, rng, n_directions)
    star = base.interior_values(x_star)
    star_norm = base.energy_norm_interior(star)
    if big_radius is None:
        big_radius = 4.0 * max(r, star_norm)
    shells = np.linspace(0.0, r, n_ball_shells + 1)[1:]
    big_shells = np.linspace(0.0, big_radius, 4 * n_ball_shells + 1)[1:]

    zeros, spheres, balls, stars, bigs = [], [], [], [], []
    for n in range(0, seq.n_max + 1):
        pn = seq.instance(n)
        zeros.append(pn.action_interior(np.zeros(pn.n_interior)))
        spheres.append(min(pn.action_interior(r * d) for d in dirs))
        balls.append(
            min(
                [0.0]
                + [pn.action_interior(s * d) for d in dirs for s in shells]
            )
        )
        stars.append(pn.action_interior(star))
        bigs.append(
            min(
                [0.0]
                + [pn.action_interior(s * d) for d in dirs for s in big_shells]
            )
        )

    sampling = (
        f"{len(dirs)} shared directions, {n_ball_shells} shells, "
        f"indices 0..{seq.n_max}, seed {seed}"
    )
    entries = {
        "zero_at_origin": HypothesisEntry(
            "zero_at_origin",
            max(abs(z) for z in zeros),
            0.0,
            all(z == 0.0 for z in zeros),
            zeros,
            sampling,
            "action at the zero field, every index",
        ),
        "sphere_uniformly_positive": HypothesisEntry(
            "sphere_uniformly_positive",
            min(spheres),
            0.0,
            min(spheres) > 0.0,
            spheres,
            sampling,
            f"uniform margin 2*eps-hat = {min(spheres)} at radius r = {r}",
        ),
        "far_point_negative": HypothesisEntry(
            "far_point_negative",
            max(stars),
            0.0,
            max(stars) < 0.0 and star_norm > r,
            stars,
            sampling,
            f"shared far endpoint with norm {star_norm} > r = {r}",
        ),
        "ball_dip": HypothesisEntry(
            "ball_dip",
            max(balls),
            0.0,
            all(-dip_floor < bmin < 0.0 for bmin in balls),
            balls,
            sampling,
            f"in-ball sampled infima must sit in (-{dip_floor}, 0)",
        ),
        "bounded_below_sampled": HypothesisEntry(
            "bounded_below_sampled",
            min(bigs),
            -math.inf,
            all(math.isfinite(v) for v in bigs),
            bigs,
            sampling,
            f"sampled lower bound on the ball of radius {big_radius}",
        ),
    }
    return HypothesisReport(entries, r, star_norm)


@dataclass
class ConvergenceRow:
    n: int
    value_limit_functional: float  # J_0 at this index's critical point
    distance_to_limit: float  # energy norm
    dual_norm_limit_functional: float  # derivative of J_0 at this point
    value_sup_estimate: float
    deriv_sup_estimate: float
    converged: bool
    iterations: int
    value_saddle: float = math.nan
    distance_saddle: float = math.nan


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    solver_kind: str
    final_distance: float
    final_ok: bool
    final_tol: float
    estimates: ConvergenceEstimates
    elapsed_seconds: float  # in-memory diagnostics only, never persisted

    CSV_HEADER = (
        "n",
        "value_J0",
        "distance_to_limit",
        "dual_norm_J0",
        "sup_value_gap",
        "sup_deriv_gap",
        "converged",
        "iterations",
    )

    def csv_rows(self):
        for row in self.rows:
            yield (
                row.n,
                row.value_limit_functional,
                row.distance_to_limit,
                row.dual_norm_limit_functional,
                row.value_sup_estimate,
                row.deriv_sup_estimate,
                int(row.converged),
                row.iterations,
            )

    def summary(self) -> dict:
        lo, hi = self.estimates.rate_band()
        return {
            "solver": self.solver_kind,
            "n_max": len(self.rows) - 1,
            "final_distance": self.final_distance,
            "final_ok": self.final_ok,
            "final_tol": self.final_tol,
            "fitted_rate_constant": self.estimates.fitted_rate_constant,
            "rate_band": [lo, hi],
            "monotone_value_gap": self.estimates.monotone_value,
        }


def _solve_index(problem, kind, opts, r, x_star, start, via):
    if kind == "min":
        return slv.minimize(problem, opts, start=start)
    if kind == "ball":
        return slv.minimize_in_ball(problem, r, opts, start=start)
    if kind == "mpa":
        return slv.mountain_pass(problem, x_star, opts, via=via)
    raise ValueError(f"unknown solver kind {kind!r}")


def run_convergence_experiment(
    seq: ProblemSequence,
    solver_kind: str,
    opts: slv.SolverOptions = slv.SolverOptions(),
    r: float | None = None,
    x_star=None,
    final_tol: float = 1e-4,
    n_sample_fields: int = 8,
    sample_radius: float | None = None,
    seed: int = 0,
) -> ConvergenceTable:
    """Warm-started per-index solves against an independently solved limit.

    The limit problem (index 0) is solved cold; index n starts from the
    solution of index n-1 (index 1 from the limit solution).  Distances,
    limit-functional values and derivative norms are all evaluated under the
    limit problem, independently of the per-index solves.
    """
    if solver_kind not in SOLVER_KINDS:
        raise ValueError(f"solver kind must be one of {SOLVER_KINDS}")
    t0 = time.perf_counter()
    base = seq.base
    double_kind = solver_kind == "double"
    kind = "ball" if double_kind else solver_kind

    if (kind in ("ball", "mpa") or double_kind) and r is None:
        raise ValueError(f"solver kind {solver_kind!r} needs a radius r")
    probe = None
    if kind == "ball" or (kind == "mpa" and x_star is None) or double_kind:
        probe = slv.geometry_probe(base, r, 32, seed=seed)
    if kind == "mpa" and x_star is None:
        if probe.x_star is None:
            raise ValueError("no far negative-action endpoint found for the path")
        x_star = probe.x_star

    def cold_start():
        if kind == "ball" and probe is not None and probe.ball_witness is not None:
            return probe.ball_witness
        return None

    def solve(problem, start, via):
        if double_kind:
            dres = slv.double_critical_points(
                problem, r, x_star, opts, probe_directions=32, start=start, via=via
            )
            return dres.minimizer, dres.saddle
        return _solve_index(problem, kind, opts, r, x_star, start, via), None

    limit_res, limit_saddle = solve(base, cold_start(), None)
    x0 = base.interior_values(limit_res.x)
    s0 = base.interior_values(limit_saddle.x) if limit_saddle else None

    rows = [
        ConvergenceRow(
            n=0,
            value_limit_functional=limit_res.value,
            distance_to_limit=0.0,
            dual_norm_limit_functional=limit_res.dual_grad_norm,
            value_sup_estimate=0.0,
            deriv_sup_estimate=0.0,
            converged=limit_res.converged,
            iterations=limit_res.iterations,
            value_saddle=limit_saddle.value if limit_saddle else math.nan,
            distance_saddle=0.0 if limit_saddle else math.nan,
        )
    ]

    solutions = []
    prev = limit_res.x
    prev_saddle = limit_saddle.x if limit_saddle else None
    for n in seq.indices():
        pn = seq.instance(n)
        res, res_saddle = solve(pn, prev, prev_saddle)
        xn = base.interior_values(res.x)
        _, dual0 = base.riesz_interior(xn)
        row = ConvergenceRow(
            n=n,
            value_limit_functional=base.action_interior(xn),
            distance_to_limit=base.energy_norm_interior(xn - x0),
            dual_norm_limit_functional=dual0,
            value_sup_estimate=math.nan,
            deriv_sup_estimate=math.nan,
            converged=res.converged,
            iterations=res.iterations,
        )
        if res_saddle is not None and s0 is not None:
            sn = base.interior_values(res_saddle.x)
            row.value_saddle = base.action_interior(sn)
            row.distance_saddle = base.energy_norm_interior(sn - s0)
        rows.append(row)
        solutions.append(res.x)
        prev = res.x
        if res_saddle is not None:
            prev_saddle = res_saddle.x

    # sampled uniform-convergence estimates over solutions plus random fields
    rng = np.random.default_rng(seed)
    if sample_radius is None:
        sample_radius = max(
            [1.0] + [base.energy_norm_interior(base.interior_values(s)) for s in solutions]
        )
    sample = [limit_res.x] + solutions
    for _ in range(n_sample_fields):
        d = random_dirichlet(base.graph, rng)
        nrm = base.energy_norm_interior(base.interior_values(d))
        if nrm > 0:
            d = VertexField(base.graph, d.values * (sample_radius / nrm))
        sample.append(d)
    estimates = uniform_convergence_estimate(seq, sample)
    for row in rows[1:]:
        row.value_sup_estimate = float(estimates.value_sup[row.n - 1])
        row.deriv_sup_estimate = float(estimates.deriv_sup[row.n - 1])

    final_distance = rows[-1].distance_to_limit
    return ConvergenceTable(
        rows=rows,
        solver_kind=solver_kind,
        final_distance=final_distance,
        final_ok=final_distance <= final_tol,
        final_tol=final_tol,
        estimates=estimates,
        elapsed_seconds=time.perf_counter() - t0,
    )
