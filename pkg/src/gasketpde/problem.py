"""Problem data, action functional, gradient, and hypothesis checkers.

A problem instance bundles a weight field a <= 0, a positive field g, a
parameter field u with |u| <= M composed through a positive function h on
[-M, M], and a nonlinearity (f, F, theta).  The action of a vertex function x
vanishing on the boundary is

    J(x) = 1/2 energy(x) - 1/2 int a x^2 dmu - int g F(x) h(u) dmu,

and its critical points are the discrete weak solutions: the directional
derivative J'(x)(w) = bilinear(x, w) - int a x w dmu - int g f(x) h(u) w dmu
vanishes for every test field w that is zero on the boundary.

The hypothesis checkers are sampling-based: they certify inequalities on a
declared grid and report concrete witnesses on failure, never a proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate as scipy_integrate
from scipy.sparse import linalg as sparse_linalg

from .energy import DiscreteForm, VertexField, _values_on
from .geometry import PrefractalGraph

__all__ = [
    "ProblemValidationError",
    "Nonlinearity",
    "Bounds",
    "ProblemInstance",
    "RieszGradient",
    "AssumptionGrid",
    "AssumptionCheck",
    "AssumptionReport",
    "build_problem",
    "action",
    "directional_derivative",
    "gradient",
    "check_assumptions",
    "growth_estimate",
]


class ProblemValidationError(ValueError):
    """Raised with the full list of constraint violations."""

    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(eq=False)
class Nonlinearity:
    """Continuous f with antiderivative F, F(0) = 0, and growth exponent theta.

    When no closed-form antiderivative is given, F falls back to adaptive
    quadrature of f from 0 with absolute tolerance 1e-12.
    """

    f: Callable[[np.ndarray], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]
    theta: float
    closed_form_F: bool = True
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    @classmethod
    def power(cls, theta: float, scale: float = 1.0) -> "Nonlinearity":
        """f(v) = scale * |v|**(theta-2) * v, F(v) = scale * |v|**theta / theta."""
        if theta <= 2:
            raise ValueError("power nonlinearity needs theta > 2")

        def f(v):
            v = np.asarray(v, dtype=float)
            return scale * np.abs(v) ** (theta - 2.0) * v

        def F(v):
            v = np.asarray(v, dtype=float)
            return (scale / theta) * np.abs(v) ** theta

        return cls(f, F, theta, True, "power", {"theta": theta, "scale": scale})

    @classmethod
    def polynomial(cls, coeffs, theta: float) -> "Nonlinearity":
        """f(v) = sum_k coeffs[k] v**k; F integrates termwise from 0."""
        coeffs = [float(c) for c in coeffs]
        poly = np.polynomial.Polynomial(coeffs)
        anti = poly.integ(lbnd=0.0)

        def f(v):
            return poly(np.asarray(v, dtype=float))

        def F(v):
            return anti(np.asarray(v, dtype=float))

        return cls(f, F, theta, True, "polynomial", {"coeffs": coeffs, "theta": theta})

    @classmethod
    def tanh_power(
        cls, eta: float, delta: float, lam: float, theta: float
    ) -> "Nonlinearity":
        """Smoothed sign profile plus a superquadratic power:

        f(v) = eta * tanh(v/delta) + lam * |v|**(theta-2) * v,
        F(v) = eta * delta * log cosh(v/delta) + (lam/theta) * |v|**theta.

        Past the smoothing width delta the antiderivative grows like eta*|v|,
        which is what produces a negative dip of the action near the origin.
        """
        if delta <= 0:
            raise ValueError("smoothing width delta must be positive")
        if theta <= 2:
            raise ValueError("tanh_power needs theta > 2")

        def f(v):
            v = np.asarray(v, dtype=float)
            return eta * np.tanh(v / delta) + lam * np.abs(v) ** (theta - 2.0) * v

        def F(v):
            v = np.asarray(v, dtype=float)
            z = np.abs(v) / delta
            # log cosh z = z + log1p(exp(-2z)) - log 2, stable for large z
            logcosh = z + np.log1p(np.exp(-2.0 * z)) - math.log(2.0)
            return eta * delta * logcosh + (lam / theta) * np.abs(v) ** theta

        return cls(
            f,
            F,
            theta,
            True,
            "tanh_power",
            {"eta": eta, "delta": delta, "lam": lam, "theta": theta},
        )

    @classmethod
    def from_callable(
        cls, f: Callable, theta: float, F: Callable | None = None
    ) -> "Nonlinearity":
        if F is not None:
            return cls(f, F, theta, True, "custom", {})

        def quad_F(v):
            v = np.asarray(v, dtype=float)
            flat = v.ravel()
            out = np.empty_like(flat)
            for k, val in enumerate(flat):
                out[k] = scipy_integrate.quad(
                    lambda t: float(np.asarray(f(t))), 0.0, float(val), epsabs=1e-12
                )[0]
            return out.reshape(v.shape) if v.shape else float(out[0])

        return cls(f, quad_F, theta, False, "custom", {})


@dataclass(frozen=True)
class Bounds:
    """Constants entering the hypothesis checks.

    M bounds the parameter field, M1 and beta control the forcing bound,
    eta the linear minorant of F near 0, and theta > 2 + epsilon with
    1/2 - 1/theta >= c quantify superquadratic growth.
    """

    M: float = 1.0
    M1: float = 1.0
    beta: float = 1.0
    eta: float = 0.0
    epsilon: float = 0.5
    c: float = 0.2


class RieszGradient(NamedTuple):
    field: VertexField
    dual_norm: float


@dataclass(eq=False)
class ProblemInstance:
    """Validated, immutable problem data with cached interior factorization."""

    form: DiscreteForm
    a: np.ndarray
    g: np.ndarray
    u_data: np.ndarray
    h: Callable[[np.ndarray], np.ndarray]
    nonlinearity: Nonlinearity
    bounds: Bounds
    g_lo: float
    g_hi: float
    h_lo: float
    h_hi: float
    h_params: dict = field(default_factory=dict)
    _lu: object = field(default=None, repr=False)

    def __post_init__(self):
        w = self.form.weights
        self.h_of_u = np.asarray(self.h(self.u_data), dtype=float)
        self.wa = w * self.a
        self.wgh = w * self.g * self.h_of_u
        self.interior = self.form.interior
        self.k_int = self.form.interior_matrix()
        self.wa_int = self.wa[self.interior]
        self.wgh_int = self.wgh[self.interior]

    @property
    def graph(self) -> PrefractalGraph:
        return self.form.graph

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    def _factorized(self):
        if self._lu is None and self.n_interior:
            self._lu = sparse_linalg.factorized(self.k_int.tocsc())
        return self._lu

    # interior-coordinate workhorses used by the solvers -------------------

    def field_from_interior(self, xi: np.ndarray) -> VertexField:
        values = np.zeros(self.graph.n_vertices)
        values[self.interior] = xi
        return VertexField(self.graph, values)

    def interior_values(self, x) -> np.ndarray:
        v = _values_on(self.graph, x)
        if np.any(v[self.form.boundary] != 0.0):
            raise ValueError("field must vanish on the boundary")
        return v[self.interior].copy()

    def action_interior(self, xi: np.ndarray) -> float:
        quad = 0.5 * float(xi @ (self.k_int @ xi)) - 0.5 * float(
            self.wa_int @ (xi * xi)
        )
        nonlin = float(self.wgh_int @ np.asarray(self.nonlinearity.F(xi)))
        return quad - nonlin

    def residual_interior(self, xi: np.ndarray) -> np.ndarray:
        return (
            self.k_int @ xi
            - self.wa_int * xi
            - self.wgh_int * np.asarray(self.nonlinearity.f(xi))
        )

    def riesz_interior(self, xi: np.ndarray) -> tuple[np.ndarray, float]:
        """Energy-inner-product representative of J'(x) and the dual norm."""
        if self.n_interior == 0:
            return np.zeros(0), 0.0
        r = self.residual_interior(xi)
        p = self._factorized()(r)
        dual_sq = float(p @ r)
        return p, math.sqrt(max(dual_sq, 0.0))

    def energy_norm_interior(self, xi: np.ndarray) -> float:
        if self.n_interior == 0:
            return 0.0
        return math.sqrt(max(float(xi @ (self.k_int @ xi)), 0.0))


def _as_vertex_array(form: DiscreteForm, value, name: str) -> np.ndarray:
    n = form.graph.n_vertices
    if np.isscalar(value):
        return np.full(n, float(value))
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ProblemValidationError(
            [f"{name}: expected scalar or {n} per-vertex values, got shape {arr.shape}"]
        )
    return arr


def build_problem(
    form: DiscreteForm,
    *,
    nonlinearity: Nonlinearity,
    a=0.0,
    g=1.0,
    u=0.0,
    h: Callable | None = None,
    bounds: Bounds = Bounds(),
    h_grid: int = 201,
    h_params: dict | None = None,
) -> ProblemInstance:
    """Validate the full problem data, collecting every violation at once."""
    violations: list[str] = []
    a_arr = _as_vertex_array(form, a, "a")
    g_arr = _as_vertex_array(form, g, "g")
    u_arr = _as_vertex_array(form, u, "u")
    if h is None:
        h = lambda v: np.ones_like(np.asarray(v, dtype=float))

    if bounds.M <= 0:
        violations.append("bounds.M: must be positive")
    if bounds.M1 <= 0:
        violations.append("bounds.M1: must be positive")
    if bounds.beta < 0:
        violations.append("bounds.beta: must be nonnegative")
    if bounds.eta < 0:
        violations.append("bounds.eta: must be nonnegative")
    if bounds.epsilon <= 0:
        violations.append("bounds.epsilon: must be positive")
    if bounds.c <= 0:
        violations.append("bounds.c: must be positive")

    theta = nonlinearity.theta
    if theta <= 2.0 + bounds.epsilon:
        violations.append(
            f"nonlinearity.theta: superquadratic growth requires "
            f"theta > 2 + epsilon = {2.0 + bounds.epsilon} (got {theta})"
        )
    elif 0.5 - 1.0 / theta < bounds.c:
        violations.append(
            f"bounds.c: requires 1/2 - 1/theta >= c, but "
            f"{0.5 - 1.0 / theta} < {bounds.c}"
        )

    bad = np.nonzero(a_arr > 0.0)[0]
    if len(bad):
        violations.append(
            f"a: must be nonpositive at every vertex (sign condition); "
            f"first violation at vertex {bad[0]} (value {a_arr[bad[0]]})"
        )
    bad = np.nonzero(g_arr <= 0.0)[0]
    if len(bad):
        violations.append(
            f"g: must be strictly positive; first violation at vertex {bad[0]} "
            f"(value {g_arr[bad[0]]})"
        )
    if bounds.M > 0:
        bad = np.nonzero(np.abs(u_arr) > bounds.M)[0]
        if len(bad):
            violations.append(
                f"u: |u| <= M = {bounds.M} required (h is only defined there); "
                f"first violation at vertex {bad[0]} (value {u_arr[bad[0]]})"
            )

    h_lo = h_hi = float("nan")
    if bounds.M > 0:
        grid = np.linspace(-bounds.M, bounds.M, h_grid)
        hv = np.asarray(h(grid), dtype=float)
        if hv.shape != grid.shape:
            violations.append("h: must map a sample grid to matching values")
        else:
            h_lo, h_hi = float(np.min(hv)), float(np.max(hv))
            if h_lo <= 0.0:
                k = int(np.argmin(hv))
                violations.append(
                    f"h: must be strictly positive on [-M, M]; h({grid[k]}) = {hv[k]}"
                )

    f0 = float(np.asarray(nonlinearity.F(0.0)))
    if abs(f0) > 1e-12:
        violations.append(f"nonlinearity.F: F(0) must be 0, got {f0}")

    if violations:
        raise ProblemValidationError(violations)

    return ProblemInstance(
        form=form,
        a=a_arr,
        g=g_arr,
        u_data=u_arr,
        h=h,
        nonlinearity=nonlinearity,
        bounds=bounds,
        g_lo=float(np.min(g_arr)),
        g_hi=float(np.max(g_arr)),
        h_lo=h_lo,
        h_hi=h_hi,
        h_params=dict(h_params or {}),
    )


def action(problem: ProblemInstance, x) -> float:
    return problem.action_interior(problem.interior_values(x))


def directional_derivative(problem: ProblemInstance, x, w) -> float:
    """J'(x)(w) for a test field w vanishing on the boundary."""
    xi = problem.interior_values(x)
    wi = problem.interior_values(w)
    return float(problem.residual_interior(xi) @ wi)


def gradient(problem: ProblemInstance, x) -> RieszGradient:
    """Representative p with bilinear(p, .) = J'(x)(.) and its energy norm."""
    xi = problem.interior_values(x)
    p, dual = problem.riesz_interior(xi)
    return RieszGradient(problem.field_from_interior(p), dual)


# ---------------------------------------------------------------------------
# sampling-based hypothesis checks


@dataclass(frozen=True)
class AssumptionGrid:
    n_points: int = 401
    v_max: float = 4.0
    n_u: int = 201


@dataclass
class AssumptionCheck:
    name: str
    status: str  # "pass" | "fail" | "unknown"
    sampling: str
    witnesses: list = field(default_factory=list)
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "sampling": self.sampling,
            "witnesses": self.witnesses,
            "detail": self.detail,
        }


@dataclass
class AssumptionReport:
    checks: dict[str, AssumptionCheck]

    @property
    def all_pass(self) -> bool:
        return all(c.status == "pass" for c in self.checks.values())

    def to_dict(self) -> dict:
        return {name: c.to_dict() for name, c in sorted(self.checks.items())}


_SLACK = 1e-12


def check_assumptions(
    problem: ProblemInstance, grid: AssumptionGrid = AssumptionGrid()
) -> AssumptionReport:
    """Grid-certified status of the five structural hypotheses.

    Results mean "holds at every sampled point", never a proof; each failure
    carries a witness with both sides of the violated inequality.
    """
    checks: dict[str, AssumptionCheck] = {}
    b = problem.bounds
    nl = problem.nonlinearity

    # a <= 0 vertexwise
    bad = np.nonzero(problem.a > 0.0)[0]
    checks["nonpositive_a"] = AssumptionCheck(
        name="nonpositive_a",
        status="fail" if len(bad) else "pass",
        sampling=f"all {problem.graph.n_vertices} vertices",
        witnesses=[
            {"vertex": int(k), "a": float(problem.a[k])} for k in bad[:5]
        ],
    )

    # positive two-sided bounds on g (vertexwise) and h (on [-M, M])
    wit = []
    if problem.g_lo <= 0.0:
        k = int(np.argmin(problem.g))
        wit.append({"vertex": k, "g": float(problem.g[k]), "needs": "> 0"})
    ugrid = np.linspace(-b.M, b.M, grid.n_u)
    hv = np.asarray(problem.h(ugrid), dtype=float)
    if np.min(hv) <= 0.0:
        k = int(np.argmin(hv))
        wit.append({"u": float(ugrid[k]), "h": float(hv[k]), "needs": "> 0"})
    checks["coefficient_bounds"] = AssumptionCheck(
        name="coefficient_bounds",
        status="fail" if wit else "pass",
        sampling=f"g on all vertices; h on {grid.n_u} points of [-M, M]",
        witnesses=wit,
        detail=(
            f"g in [{problem.g_lo}, {problem.g_hi}], "
            f"h in [{float(np.min(hv))}, {float(np.max(hv))}]"
        ),
    )

    # 0 < theta F(v) <= v f(v) away from 0, theta > 2 + eps, 1/2 - 1/theta >= c
    v = np.linspace(-grid.v_max, grid.v_max, grid.n_points)
    v = v[v != 0.0]
    th_f = nl.theta * np.asarray(nl.F(v))
    vf = v * np.asarray(nl.f(v))
    wit = []
    bad = np.nonzero(~((th_f > 0.0) & (th_f <= vf + _SLACK * np.maximum(1.0, np.abs(vf)))))[0]
    for k in bad[:5]:
        wit.append({"v": float(v[k]), "theta_F": float(th_f[k]), "v_f": float(vf[k])})
    extra = []
    if not nl.theta > 2.0 + b.epsilon:
        extra.append(f"theta = {nl.theta} must exceed 2 + epsilon = {2 + b.epsilon}")
    if 0.5 - 1.0 / nl.theta < b.c:
        extra.append(f"1/2 - 1/theta = {0.5 - 1 / nl.theta} below c = {b.c}")
    checks["superquadratic_growth"] = AssumptionCheck(
        name="superquadratic_growth",
        status="fail" if (len(bad) or extra) else "pass",
        sampling=f"{len(v)} nonzero points of [-{grid.v_max}, {grid.v_max}]",
        witnesses=wit,
        detail="; ".join(extra),
    )

    # max |g f h| over the box below M1 / (2 (beta+1) (2N+3)^2)
    cap = b.M1 / (2.0 * (b.beta + 1.0) * problem.form.embedding_constant**2)
    vg = np.linspace(-b.M1, b.M1, grid.n_points)
    fmaxk = int(np.argmax(np.abs(np.asarray(nl.f(vg)))))
    hmaxk = int(np.argmax(hv))
    gmaxk = int(np.argmax(problem.g))
    lhs = (
        float(problem.g[gmaxk])
        * abs(float(np.asarray(nl.f(vg[fmaxk]))))
        * float(hv[hmaxk])
    )
    checks["forcing_bound"] = AssumptionCheck(
        name="forcing_bound",
        status="pass" if lhs <= cap + _SLACK else "fail",
        sampling=(
            f"|v| <= M1 on {grid.n_points} points, |u| <= M on {grid.n_u} points, "
            "g on all vertices (factors are separable and positive)"
        ),
        witnesses=(
            []
            if lhs <= cap + _SLACK
            else [
                {
                    "vertex": gmaxk,
                    "v": float(vg[fmaxk]),
                    "u": float(ugrid[hmaxk]),
                    "max_gfh": lhs,
                    "bound": cap,
                }
            ]
        ),
        detail=f"max |g f h| = {lhs}, bound = {cap}",
    )

    # F(v) >= eta |v| on [-1, 1]
    v1 = np.linspace(-1.0, 1.0, grid.n_points)
    fv1 = np.asarray(nl.F(v1))
    gap = fv1 - b.eta * np.abs(v1)
    bad = np.nonzero(gap < -_SLACK)[0]
    checks["linear_minorant"] = AssumptionCheck(
        name="linear_minorant",
        status="fail" if len(bad) else "pass",
        sampling=f"{grid.n_points} points of [-1, 1]",
        witnesses=[
            {"v": float(v1[k]), "F": float(fv1[k]), "eta_abs_v": float(b.eta * abs(v1[k]))}
            for k in bad[:5]
        ],
    )

    return AssumptionReport(checks)


def growth_estimate(
    nonlinearity: Nonlinearity,
    v_range: tuple[float, float],
    n_samples: int = 4001,
) -> tuple[float, float]:
    """Fit (b1, b2) with F(v) >= b1 |v|**theta - b2 at all sample points.

    b1 is the smallest sampled ratio F/|v|**theta over |v| >= 1 (clipped at 0)
    and b2 absorbs the worst deficit on |v| <= 1.
    """
    lo, hi = float(v_range[0]), float(v_range[1])
    if not lo < hi:
        raise ValueError("empty range")
    v = np.linspace(lo, hi, n_samples)
    outer = v[np.abs(v) >= 1.0]
    if len(outer) == 0:
        raise ValueError("range must reach |v| >= 1 to calibrate the power tail")
    theta = nonlinearity.theta
    b1 = max(float(np.min(np.asarray(nonlinearity.F(outer)) / np.abs(outer) ** theta)), 0.0)
    inner = v[np.abs(v) <= 1.0]
    if len(inner):
        deficit = b1 * np.abs(inner) ** theta - np.asarray(nonlinearity.F(inner))
        b2 = max(0.0, float(np.max(deficit)))
    else:
        b2 = 0.0
    check = np.asarray(nonlinearity.F(v)) - (b1 * np.abs(v) ** theta - b2)
    if np.min(check) < -1e-9:
        raise AssertionError("fitted growth constants fail on their own samples")
    return b1, b2
