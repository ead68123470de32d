"""Critical-point finders: descent minimization, ball-constrained descent,
mountain-pass saddle search, geometry probes, and a brute-force oracle.

All solvers work in interior coordinates with the energy inner product: the
descent direction is the Riesz representative of the derivative (one sparse
solve against the interior stiffness matrix), so the quadratic part of the
action has identity Hessian in this metric and convergence rates do not
degrade with the refinement level.  Everything is deterministic for a fixed
seed: direction streams are drawn sequentially so smaller samples are
prefixes of larger ones.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import VertexField
from .problem import ProblemInstance

__all__ = [
    "SolverOptions",
    "CriticalPointResult",
    "GeometryReport",
    "DoubleResult",
    "PalaisSmaleReport",
    "GeometryHypothesisError",
    "minimize",
    "minimize_in_ball",
    "mountain_pass",
    "double_critical_points",
    "geometry_probe",
    "palais_smale_diagnostic",
    "brute_force_critical_points",
]


class GeometryHypothesisError(RuntimeError):
    """The sampled saddle geometry degenerated mid-run (path collapse)."""


@dataclass(frozen=True)
class SolverOptions:
    grad_tol: float = 1e-8
    max_iters: int = 1000
    step_init: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    path_points: int = 41
    seed: int = 0
    value_floor: float = -1e12
    newton_polish: bool = True
    polish_threshold: float = 1e-3
    check_coercivity: bool = True

    def __post_init__(self):
        if not (self.grad_tol > 0 and math.isfinite(self.grad_tol)):
            raise ValueError("grad_tol must be positive and finite")
        if self.path_points < 3:
            raise ValueError("path_points must be at least 3")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not (0 < self.backtrack < 1):
            raise ValueError("backtrack factor must lie in (0, 1)")
        for name in ("step_init", "armijo", "value_floor"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def to_dict(self) -> dict:
        return {
            "grad_tol": self.grad_tol,
            "max_iters": self.max_iters,
            "step_init": self.step_init,
            "backtrack": self.backtrack,
            "armijo": self.armijo,
            "path_points": self.path_points,
            "seed": self.seed,
            "value_floor": self.value_floor,
            "newton_polish": self.newton_polish,
            "polish_threshold": self.polish_threshold,
            "check_coercivity": self.check_coercivity,
        }


@dataclass
class CriticalPointResult:
    x: VertexField
    value: float
    dual_grad_norm: float
    iterations: int
    converged: bool
    classification: str  # "minimizer" | "mountain_pass" | "critical_point"
    trace: list[tuple[int, float, float]]
    message: str = ""
    flags: dict = field(default_factory=dict)

    @property
    def energy_norm(self) -> float:
        return self.flags["energy_norm"]


def _result(
    problem: ProblemInstance,
    xi: np.ndarray,
    iterations: int,
    converged: bool,
    classification: str,
    trace: list,
    message: str = "",
    flags: dict | None = None,
) -> CriticalPointResult:
    # recompute value and dual norm independently of the solver loop
    _, dual = problem.riesz_interior(xi)
    value = problem.action_interior(xi)
    flags = dict(flags or {})
    flags.setdefault("energy_norm", problem.energy_norm_interior(xi))
    return CriticalPointResult(
        x=problem.field_from_interior(xi),
        value=value,
        dual_grad_norm=dual,
        iterations=iterations,
        converged=converged,
        classification=classification,
        trace=trace,
        message=message,
        flags=flags,
    )


def _coercivity_probe(problem: ProblemInstance, opts: SolverOptions) -> None:
    """Cheap ray scan; warns when the action heads to -inf along a sample ray."""
    if problem.n_interior == 0:
        return
    rng = np.random.default_rng(opts.seed)
    dirs = [np.ones(problem.n_interior)]
    for _ in range(3):
        dirs.append(rng.standard_normal(problem.n_interior))
    for d in dirs:
        nrm = problem.energy_norm_interior(d)
        if nrm == 0:
            continue
        d = d / nrm
        vals = [problem.action_interior(s * d) for s in (10.0, 100.0, 1000.0)]
        if vals[-1] < min(-1e6, vals[0]) and vals[2] < vals[1] < vals[0]:
            warnings.warn(
                "action decreases without bound along a sampled ray; "
                "unconstrained minimization may diverge",
                stacklevel=3,
            )
            return


def _armijo_step(problem, xi, d, j0, slope, opts):
    """Backtracking line search; returns (step, new_point, new_value) or None."""
    t = opts.step_init
    while True:
        xt = xi + t * d
        jt = problem.action_interior(xt)
        if jt <= j0 + opts.armijo * t * slope:
            return t, xt, jt
        t *= opts.backtrack
        if t < 1e-14 * opts.step_init:
            return None


def minimize(
    problem: ProblemInstance,
    opts: SolverOptions = SolverOptions(),
    start: VertexField | np.ndarray | None = None,
) -> CriticalPointResult:
    """Backtracking descent on the energy-preconditioned gradient.

    The value trace is strictly nonincreasing; divergence below
    ``opts.value_floor`` is reported as unboundedness instead of ground truth.
    """
    if start is None:
        xi = np.zeros(problem.n_interior)
    else:
        xi = problem.interior_values(start)
    if opts.check_coercivity:
        _coercivity_probe(problem, opts)

    trace: list[tuple[int, float, float]] = []
    message = ""
    converged = False
    unbounded = False
    it = 0
    for it in range(opts.max_iters):
        p, dual = problem.riesz_interior(xi)
        j0 = problem.action_interior(xi)
        trace.append((it, j0, dual))
        if dual <= opts.grad_tol:
            converged = True
            break
        step = _armijo_step(problem, xi, -p, j0, -dual * dual, opts)
        if step is None:
            message = "line search stalled at machine precision"
            break
        _, xi, jt = step
        if jt < opts.value_floor:
            unbounded = True
            message = (
                "value fell below the configured floor; action appears "
                "unbounded below along the descent path"
            )
            break
    else:
        message = "max_iters exceeded"

    res = _result(
        problem,
        xi,
        it + 1,
        converged,
        "minimizer",
        trace,
        message,
        {"unbounded": unbounded},
    )
    return res


def minimize_in_ball(
    problem: ProblemInstance,
    r: float,
    opts: SolverOptions = SolverOptions(),
    start: VertexField | np.ndarray | None = None,
) -> CriticalPointResult:
    """Projected descent onto the closed energy-norm ball of radius r.

    Returns an interior critical point when one is reached; when the iterate
    pins to the sphere for the final 10 iterations the result is flagged
    ``boundary_minimizer`` (the interior-minimum hypothesis failed).
    """
    if r <= 0:
        raise ValueError("ball radius must be positive")
    if start is None:
        xi = np.zeros(problem.n_interior)
    else:
        xi = problem.interior_values(start)
    nrm = problem.energy_norm_interior(xi)
    if nrm > r:
        xi = xi * (r / nrm)

    def project(z):
        n = problem.energy_norm_interior(z)
        if n > r:
            return z * (r / n), True
        return z, False

    trace: list[tuple[int, float, float]] = []
    converged = False
    message = ""
    on_sphere_run = 0
    max_norm_seen = problem.energy_norm_interior(xi)
    it = 0
    for it in range(opts.max_iters):
        p, dual = problem.riesz_interior(xi)
        j0 = problem.action_interior(xi)
        trace.append((it, j0, dual))
        interior_pt = problem.energy_norm_interior(xi) < r * (1.0 - 1e-10)
        if dual <= opts.grad_tol and interior_pt:
            converged = True
            break

        # backtrack on the projected step
        t = opts.step_init
        accepted = None
        while t >= 1e-14 * opts.step_init:
            zt, projected = project(xi - t * p)
            jt = problem.action_interior(zt)
            ok = (
                jt <= j0 - opts.armijo * t * dual * dual
                if not projected
                else jt < j0
            )
            if ok:
                accepted = (zt, jt, projected)
                break
            t *= opts.backtrack
        if accepted is None:
            if not interior_pt:
                message = (
                    "minimizer pinned to the sphere; interior-minimum "
                    "hypothesis violated"
                )
            else:
                message = "line search stalled at machine precision"
            break
        xi, jt, projected = accepted
        max_norm_seen = max(max_norm_seen, problem.energy_norm_interior(xi))
        on_sphere_run = on_sphere_run + 1 if projected else 0
        if on_sphere_run >= 10:
            message = (
                "minimizer pinned to the sphere; interior-minimum hypothesis "
                "violated"
            )
            break
        if jt < opts.value_floor:
            message = "value fell below the configured floor"
            break
    else:
        message = "max_iters exceeded"

    flags = {
        "boundary_minimizer": "pinned to the sphere" in message,
        "radius": r,
        "max_iterate_norm": max_norm_seen,
    }
    return _result(
        problem, xi, it + 1, converged, "minimizer", trace, message, flags
    )


# ---------------------------------------------------------------------------
# mountain pass


def _path_lengths(problem, nodes):
    return [
        problem.energy_norm_interior(nodes[k + 1] - nodes[k])
        for k in range(len(nodes) - 1)
    ]


def _redistribute(problem, nodes):
    """Resample the polyline so nodes are equispaced in energy arclength."""
    seg = _path_lengths(problem, nodes)
    total = sum(seg)
    if total == 0.0:
        return nodes
    p = len(nodes)
    targets = np.linspace(0.0, total, p)
    out = [nodes[0]]
    cum = 0.0
    k = 0
    for t in targets[1:-1]:
        while k < len(seg) - 1 and cum + seg[k] < t:
            cum += seg[k]
            k += 1
        frac = 0.0 if seg[k] == 0 else (t - cum) / seg[k]
        out.append(nodes[k] + frac * (nodes[k + 1] - nodes[k]))
    out.append(nodes[-1])
    return out


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _locate_path_max(problem, nodes):
    """Maximum of the action along the piecewise-linear path.

    Returns (node index of the discrete max, located point, located value).
    The continuous refinement runs a golden-section search over the two
    segments adjacent to the max node; a maximum at an endpoint node means
    the mountain geometry collapsed.
    """
    values = [problem.action_interior(z) for z in nodes]
    k = int(np.argmax(values))
    if k in (0, len(nodes) - 1):
        raise GeometryHypothesisError(
            "path maximum migrated to an endpoint; the sampled mountain "
            "geometry does not separate the endpoints"
        )
    seg = _path_lengths(problem, nodes)
    cum = np.concatenate([[0.0], np.cumsum(seg)])

    def point(s):
        i = int(min(np.searchsorted(cum, s, side="right") - 1, len(seg) - 1))
        frac = 0.0 if seg[i] == 0 else (s - cum[i]) / seg[i]
        return nodes[i] + frac * (nodes[i + 1] - nodes[i])

    a, b = float(cum[k - 1]), float(cum[k + 1])
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = problem.action_interior(point(c))
    fd = problem.action_interior(point(d))
    for _ in range(32):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = problem.action_interior(point(c))
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = problem.action_interior(point(d))
    z = point(0.5 * (a + b))
    jz = problem.action_interior(z)
    if jz < values[k]:
        z, jz = nodes[k], values[k]
    return k, z, jz


def _fd_jacobian(problem, xi):
    n = len(xi)
    jac = np.empty((n, n))
    for j in range(n):
        h = 1e-6 * (1.0 + abs(xi[j]))
        e = np.zeros(n)
        e[j] = h
        jac[:, j] = (
            problem.residual_interior(xi + e) - problem.residual_interior(xi - e)
        ) / (2.0 * h)
    return jac


def _newton_polish(problem, xi, opts, max_newton: int = 40):
    """Damped Newton on the interior gradient system; returns (point, ok)."""
    x = xi.copy()
    for _ in range(max_newton):
        _, dual = problem.riesz_interior(x)
        if dual <= opts.grad_tol:
            return x, True
        r = problem.residual_interior(x)
        jac = _fd_jacobian(problem, x)
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            delta, *_ = np.linalg.lstsq(jac, -r, rcond=None)
        rn0 = float(np.linalg.norm(r))
        t = 1.0
        while t > 1e-12:
            xt = x + t * delta
            if float(np.linalg.norm(problem.residual_interior(xt))) < (1 - 1e-4 * t) * rn0:
                x = xt
                break
            t *= 0.5
        else:
            return x, False
    _, dual = problem.riesz_interior(x)
    return x, dual <= opts.grad_tol


def mountain_pass(
    problem: ProblemInstance,
    x_star: VertexField | np.ndarray,
    opts: SolverOptions = SolverOptions(),
    via: VertexField | np.ndarray | None = None,
) -> CriticalPointResult:
    """Path-deformation saddle search between 0 and a negative-action point.

    The segment from 0 to x_star is discretized into ``opts.path_points``
    nodes; each sweep locates the path maximum, takes one backtracked descent
    step on that node, and redistributes nodes to equal energy-norm spacing.
    The run converges when the max node's dual gradient norm drops below
    ``grad_tol``; once it drops below ``polish_threshold`` a damped-Newton
    polish is attempted and accepted only if it stays in the same
    neighbourhood and remains nontrivial.  A path maximum migrating to an
    endpoint means the sampled mountain geometry failed; that raises
    GeometryHypothesisError.
    """
    star = problem.interior_values(x_star)
    j_star = problem.action_interior(star)
    j_zero = problem.action_interior(np.zeros(problem.n_interior))
    if j_star > 0:
        raise ValueError(
            f"endpoint must have nonpositive action, got J(x_star) = {j_star}"
        )
    floor = max(j_zero, j_star)

    # sampled mountain geometry: some sphere r < ||x_star|| should separate
    # the endpoints from above; only the sampled version is checkable
    star_norm = problem.energy_norm_interior(star)
    rng = np.random.default_rng(opts.seed)
    dirs = _direction_stream(problem, rng, 16)
    separated = any(
        min(problem.action_interior(frac * star_norm * d) for d in dirs) > floor
        for frac in (0.01, 0.1, 0.3)
    )
    if not separated:
        warnings.warn(
            "sampled mountain geometry not confirmed: no probed sphere keeps "
            "the action above both endpoints",
            stacklevel=2,
        )

    p = opts.path_points
    if via is None:
        nodes = [(k / (p - 1)) * star for k in range(p)]
    else:
        mid = problem.interior_values(via)
        half = p // 2
        first = [(k / half) * mid for k in range(half)]
        second = [
            mid + (k / (p - 1 - half)) * (star - mid) for k in range(p - half)
        ]
        nodes = _redistribute(problem, first + second)

    trace: list[tuple[int, float, float]] = []
    converged = False
    message = ""
    last_polish_dual = math.inf
    stagnant = 0
    best_dual = math.inf
    xi = nodes[len(nodes) // 2]
    it = 0
    for it in range(opts.max_iters):
        k, xi, jz = _locate_path_max(problem, nodes)
        grad, dual = problem.riesz_interior(xi)
        trace.append((it, jz, dual))
        if dual <= opts.grad_tol:
            converged = True
            break
        if dual < best_dual * (1.0 - 1e-3):
            best_dual, stagnant = dual, 0
        else:
            stagnant += 1

        # Newton endgame once the located maximum is near-critical or the
        # deformation stops making progress
        want_polish = opts.newton_polish and (
            (dual <= opts.polish_threshold and dual < 0.5 * last_polish_dual)
            or stagnant >= 25
        )
        if want_polish:
            last_polish_dual = dual
            stagnant = 0
            spacing = max(_path_lengths(problem, nodes)) + 1e-30
            cand, ok = _newton_polish(problem, xi, opts)
            if ok:
                near = problem.energy_norm_interior(cand - xi) <= 4.0 * spacing
                nontrivial = problem.energy_norm_interior(cand) > 1e-6
                above = problem.action_interior(cand) >= floor - 1e-10
                if near and nontrivial and above:
                    xi = cand
                    converged = True
                    _, dual = problem.riesz_interior(xi)
                    trace.append((it + 1, problem.action_interior(xi), dual))
                    break

        step = _armijo_step(problem, xi, -grad, jz, -dual * dual, opts)
        if step is None:
            message = "line search stalled at the path maximum"
            break
        nodes[k] = step[1]
        nodes = _redistribute(problem, nodes)
    else:
        message = "max_iters exceeded"

    flags = {"endpoint_floor": floor}
    res = _result(
        problem, xi, it + 1, converged, "mountain_pass", trace, message, flags
    )
    res.flags["above_endpoints"] = res.value >= floor - 1e-10
    return res


@dataclass
class SmallRayReport:
    """Quadratic-vs-linear behaviour of J along one unit-magnitude ray."""

    tau: float
    alpha: float
    s_dip: float
    predicted_min: float
    sampled_min: float
    sampled_s: float


@dataclass
class GeometryReport:
    r: float
    sphere_inf: float
    sphere_witness: Optional[VertexField]
    ball_inf: float
    ball_witness: Optional[VertexField]
    x_star: Optional[VertexField]
    x_star_value: float
    x_star_norm: float
    sphere_positive: bool
    ball_negative: bool
    far_negative_found: bool
    small_ray: Optional[SmallRayReport]
    n_directions: int


def _direction_stream(problem, rng, n_directions):
    """Structured plateau directions first, then a deterministic random stream."""
    ones = np.ones(problem.n_interior)
    dirs = [ones, -ones]
    while len(dirs) < n_directions:
        dirs.append(rng.standard_normal(problem.n_interior))
    out = []
    for d in dirs[:n_directions]:
        nrm = problem.energy_norm_interior(d)
        if nrm > 0:
            out.append(d / nrm)
    return out


def geometry_probe(
    problem: ProblemInstance,
    r: float,
    n_directions: int = 64,
    s_grid: np.ndarray | None = None,
    seed: int = 0,
    n_ball_shells: int = 12,
) -> GeometryReport:
    """Sampled sphere/ball infima plus a scan for a far negative-action point.

    Larger ``n_directions`` with the same seed extends the sample, so the
    sphere estimate can only decrease under nested refinement.
    """
    if r <= 0:
        raise ValueError("probe radius must be positive")
    if n_directions < 16:
        raise ValueError("need at least 16 probe directions")
    rng = np.random.default_rng(seed)
    dirs = _direction_stream(problem, rng, n_directions)

    sphere_vals = [problem.action_interior(r * d) for d in dirs]
    ks = int(np.argmin(sphere_vals))
    sphere_inf = float(sphere_vals[ks])

    ball_inf, ball_arg = 0.0, None  # the origin belongs to the ball
    shells = np.linspace(0.0, r, n_ball_shells + 1)[1:]
    for d in dirs:
        for s in shells:
            v = problem.action_interior(s * d)
            if v < ball_inf:
                ball_inf, ball_arg = v, s * d

    # scan rays over unit-magnitude fields for a far point with J < 0
    if s_grid is None:
        s_grid = np.geomspace(1e-4, 1e4, 161)
    candidates = [np.ones(problem.n_interior), -np.ones(problem.n_interior)]
    for _ in range(8):
        z = rng.standard_normal(problem.n_interior)
        candidates.append(np.sign(z) + z)  # |entries| >= 1
    x_star = None
    x_star_value = math.nan
    x_star_norm = math.nan
    for cand in candidates:
        for s in s_grid:
            z = s * cand
            nrm = problem.energy_norm_interior(z)
            if nrm <= r:
                continue
            v = problem.action_interior(z)
            if v < 0.0:
                x_star, x_star_value, x_star_norm = z, v, nrm
                break
        if x_star is not None:
            break

    small_ray = None
    if problem.n_interior:
        x0 = np.ones(problem.n_interior)
        x0_full = problem.field_from_interior(x0).values
        w = problem.form.weights
        tau = problem.energy_norm_interior(x0) ** 2 - float(
            (w * problem.a) @ (x0_full * x0_full)
        )
        alpha = (
            problem.bounds.eta
            * problem.g_lo
            * problem.h_lo
            * float(w @ np.abs(x0_full))
        )
        if alpha > 0 and tau > 0:
            s_dip = alpha / tau
            ss = np.linspace(0.0, 4.0 * s_dip, 65)[1:]
            vals = [problem.action_interior(s * x0) for s in ss]
            kmin = int(np.argmin(vals))
            small_ray = SmallRayReport(
                tau=tau,
                alpha=alpha,
                s_dip=s_dip,
                predicted_min=-(alpha * alpha) / (2.0 * tau),
                sampled_min=float(vals[kmin]),
                sampled_s=float(ss[kmin]),
            )
        else:
            small_ray = SmallRayReport(tau, alpha, 0.0, 0.0, 0.0, 0.0)

    return GeometryReport(
        r=r,
        sphere_inf=sphere_inf,
        sphere_witness=problem.field_from_interior(r * dirs[ks]),
        ball_inf=float(ball_inf),
        ball_witness=(
            problem.field_from_interior(ball_arg) if ball_arg is not None else None
        ),
        x_star=(problem.field_from_interior(x_star) if x_star is not None else None),
        x_star_value=float(x_star_value),
        x_star_norm=float(x_star_norm),
        sphere_positive=sphere_inf > 0.0,
        ball_negative=ball_inf < 0.0,
        far_negative_found=x_star is not None,
        small_ray=small_ray,
        n_directions=n_directions,
    )


@dataclass
class DoubleResult:
    minimizer: CriticalPointResult
    saddle: CriticalPointResult
    geometry: GeometryReport
    distinct: bool
    distance: float
    messages: list[str]


def double_critical_points(
    problem: ProblemInstance,
    r: float,
    x_star: VertexField | np.ndarray | None = None,
    opts: SolverOptions = SolverOptions(),
    probe_directions: int = 64,
    start: VertexField | np.ndarray | None = None,
    via: VertexField | np.ndarray | None = None,
) -> DoubleResult:
    """Ball minimizer plus mountain-pass saddle under the two-point geometry.

    Refuses to run unless the sampled geometry shows a negative dip inside
    the ball, a positive sphere, and a far endpoint with nonpositive action.
    """
    probe = geometry_probe(problem, r, probe_directions, seed=opts.seed)
    if x_star is None:
        if probe.x_star is None:
            raise ValueError(
                "no far point with negative action found; two-point geometry "
                "precondition fails"
            )
        star = probe.x_star
        star_norm, star_val = probe.x_star_norm, probe.x_star_value
    else:
        star = x_star
        si = problem.interior_values(x_star)
        star_norm = problem.energy_norm_interior(si)
        star_val = problem.action_interior(si)

    problems = []
    if not probe.ball_negative:
        problems.append(f"sampled ball infimum {probe.ball_inf} is not negative")
    if not probe.sphere_positive:
        problems.append(f"sampled sphere infimum {probe.sphere_inf} is not positive")
    if not star_norm > r:
        problems.append(f"far endpoint norm {star_norm} does not exceed r = {r}")
    if star_val > 0:
        problems.append(f"far endpoint action {star_val} is positive")
    if problems:
        raise ValueError(
            "two-point geometry precondition fails: " + "; ".join(problems)
        )

    if start is None:
        start = probe.ball_witness
    res_min = minimize_in_ball(problem, r, opts, start=start)
    res_mp = mountain_pass(problem, star, opts, via=via)

    d = problem.energy_norm_interior(
        problem.interior_values(res_min.x) - problem.interior_values(res_mp.x)
    )
    messages = []
    distinct = d > 1e-3
    if not distinct:
        messages.append(f"solutions coincide within 1e-3 (distance {d})")
    for name, res in (("minimizer", res_min), ("saddle", res_mp)):
        if res.flags.get("energy_norm", 0.0) <= 1e-6:
            messages.append(f"{name} is numerically trivial")
    return DoubleResult(res_min, res_mp, probe, distinct, float(d), messages)


# ---------------------------------------------------------------------------
# diagnostics and the oracle


@dataclass
class PalaisSmaleReport:
    values_sup: float
    grad_norms: list[float]
    grad_tail_max: float
    radius_bound: float
    radius_ok: bool
    cluster_size: int
    cluster_fraction: float
    cluster_tol: float
    limit_candidate: Optional[VertexField]


def palais_smale_diagnostic(
    problem: ProblemInstance,
    fields: list,
    cluster_tol: float | None = None,
) -> PalaisSmaleReport:
    """Bounded values, vanishing derivative tail, and clustering evidence.

    The superquadratic-growth constants give an explicit radius bound
    c t^2 - t/(2+eps) <= sup|J|, which every element is checked against.
    """
    if not fields:
        raise ValueError("need a nonempty sequence")
    xs = [problem.interior_values(x) for x in fields]
    values = [problem.action_interior(x) for x in xs]
    duals = [problem.riesz_interior(x)[1] for x in xs]
    norms_ = [problem.energy_norm_interior(x) for x in xs]

    b = max(abs(v) for v in values)
    eps, c = problem.bounds.epsilon, problem.bounds.c
    inv = 1.0 / (2.0 + eps)
    radius_bound = (inv + math.sqrt(inv * inv + 4.0 * c * b)) / (2.0 * c)
    radius_ok = all(c * t * t - inv * t <= b + 1e-12 for t in norms_)

    if cluster_tol is None:
        cluster_tol = 1e-3 * (1.0 + max(norms_))
    centers: list[list[int]] = []
    for k, x in enumerate(xs):
        placed = False
        for group in centers:
            if problem.energy_norm_interior(x - xs[group[0]]) <= cluster_tol:
                group.append(k)
                placed = True
                break
        if not placed:
            centers.append([k])
    best = max(centers, key=len)
    centroid = np.mean([xs[k] for k in best], axis=0)

    tail = duals[-5:]
    return PalaisSmaleReport(
        values_sup=b,
        grad_norms=[float(d) for d in duals],
        grad_tail_max=float(max(tail)),
        radius_bound=radius_bound,
        radius_ok=radius_ok,
        cluster_size=len(best),
        cluster_fraction=len(best) / len(xs),
        cluster_tol=float(cluster_tol),
        limit_candidate=problem.field_from_interior(centroid),
    )


def brute_force_critical_points(
    problem: ProblemInstance,
    box,
    resolution: int,
    opts: SolverOptions = SolverOptions(),
    norm_threshold: float | None = None,
    max_grid_points: int = 10**8,
) -> list[CriticalPointResult]:
    """Exhaustive dual-gradient-norm scan over a per-DOF box, Newton-polished.

    Grid-local minima of the dual norm (optionally below ``norm_threshold``)
    seed a damped Newton solve of the gradient system; converged roots are
    deduplicated at energy distance 1e-6 and returned sorted by action value.
    Only instances with at most 4 interior degrees of freedom are accepted.
    """
    n = problem.n_interior
    if n == 0 or n > 4:
        raise ValueError("oracle requires between 1 and 4 interior DOFs")
    if resolution < 3:
        raise ValueError("resolution must be at least 3")
    if resolution**n > max_grid_points:
        raise ValueError(
            f"grid of {resolution ** n} points exceeds the {max_grid_points} cap"
        )
    box = np.asarray(box, dtype=float)
    if box.shape == (2,):
        box = np.tile(box, (n, 1))
    if box.shape != (n, 2) or np.any(box[:, 0] >= box[:, 1]):
        raise ValueError("box must be (lo, hi) or one nondegenerate pair per DOF")

    axes = [np.linspace(lo, hi, resolution) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)

    k_dense = problem.k_int.toarray()
    k_inv = np.linalg.inv(k_dense)
    res_grid = (
        pts @ k_dense.T
        - pts * problem.wa_int
        - problem.wgh_int * np.asarray(problem.nonlinearity.f(pts))
    )
    dual_sq = np.einsum("ij,jk,ik->i", res_grid, k_inv, res_grid)
    dual_grid = np.sqrt(np.maximum(dual_sq, 0.0)).reshape([resolution] * n)

    # grid-local minima along every axis
    local_min = np.ones_like(dual_grid, dtype=bool)
    for ax in range(n):
        lower = np.ones_like(dual_grid, dtype=bool)
        upper = np.ones_like(dual_grid, dtype=bool)
        sl = [slice(None)] * n
        sr = [slice(None)] * n
        sl[ax] = slice(1, None)
        sr[ax] = slice(None, -1)
        lower[tuple(sl)] = dual_grid[tuple(sl)] <= dual_grid[tuple(sr)]
        upper[tuple(sr)] = dual_grid[tuple(sr)] <= dual_grid[tuple(sl)]
        local_min &= lower & upper

    seeds_idx = np.argwhere(local_min)
    seeds = []
    for idx in seeds_idx:
        val = dual_grid[tuple(idx)]
        if norm_threshold is not None and val > norm_threshold:
            continue
        seeds.append((float(val), tuple(idx)))
    seeds.sort()

    found: list[np.ndarray] = []
    results: list[CriticalPointResult] = []
    step_sizes = [(hi - lo) / (resolution - 1) for lo, hi in box]
    margin = max(step_sizes)
    for _, idx in seeds:
        x0 = np.array([axes[d][idx[d]] for d in range(n)])
        root, ok = _newton_polish(problem, x0, opts)
        if not ok:
            continue
        if np.any(root < box[:, 0] - margin) or np.any(root > box[:, 1] + margin):
            continue
        if any(
            problem.energy_norm_interior(root - prev) <= 1e-6 for prev in found
        ):
            continue
        found.append(root)
        results.append(
            _result(
                problem,
                root,
                0,
                True,
                "critical_point",
                [],
                "oracle root",
                {"seed_grid_index": [int(v) for v in idx]},
            )
        )

    results.sort(key=lambda r: (r.value, tuple(r.x.values)))
    return results
