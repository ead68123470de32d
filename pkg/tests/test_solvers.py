import math
import warnings

import numpy as np
import pytest

import gasketpde as gp
from conftest import DIP_RADIUS, make_dip_problem

QUIET = gp.SolverOptions(grad_tol=1e-10, check_coercivity=False)


def quadratic_problem(form, a=0.0):
    return gp.build_problem(
        form, nonlinearity=gp.Nonlinearity.polynomial([0.0], 4.0), a=a
    )


def start_field(graph, rng, scale=1.0):
    return gp.random_dirichlet(graph, rng, scale)


# ---------------------------------------------------------------------------
# minimize


def test_minimize_pure_quadratic(forms):
    prob = quadratic_problem(forms[2])
    rng = np.random.default_rng(0)
    res = gp.minimize(prob, QUIET, start=start_field(forms[2].graph, rng, 5.0))
    assert res.converged
    assert res.value == pytest.approx(0.0, abs=1e-18)
    assert res.flags["energy_norm"] <= 1e-9
    assert res.classification == "minimizer"


def test_minimize_trace_monotone(cubic_m1):
    rng = np.random.default_rng(1)
    res = gp.minimize(cubic_m1, QUIET, start=start_field(cubic_m1.graph, rng, 0.5))
    values = [v for _, v, _ in res.trace]
    assert all(values[i + 1] <= values[i] for i in range(len(values) - 1))
    assert res.converged


def test_minimize_result_value_is_recomputed_action(cubic_m1):
    rng = np.random.default_rng(2)
    res = gp.minimize(cubic_m1, QUIET, start=start_field(cubic_m1.graph, rng, 0.5))
    assert res.value == pytest.approx(gp.action(cubic_m1, res.x), abs=1e-12)
    # independent re-evaluation of the converged gradient
    assert gp.gradient(cubic_m1, res.x).dual_norm <= QUIET.grad_tol


def test_minimize_warns_on_unbounded_rays(cubic_m1):
    with pytest.warns(UserWarning, match="unbounded"):
        gp.minimize(
            cubic_m1,
            gp.SolverOptions(grad_tol=1e-10, check_coercivity=True),
        )


def test_minimize_detects_divergence(cubic_m1):
    # start far out on the unbounded side and force descent to run away
    opts = gp.SolverOptions(
        grad_tol=1e-14, max_iters=500, value_floor=-1e6, check_coercivity=False
    )
    start = np.zeros(cubic_m1.graph.n_vertices)
    start[cubic_m1.interior] = 30.0
    res = gp.minimize(cubic_m1, opts, start=gp.VertexField(cubic_m1.graph, start))
    assert res.flags["unbounded"]
    assert not res.converged
    assert res.value < -1e6


def test_minimize_max_iters_flagged(cubic_m1):
    rng = np.random.default_rng(3)
    opts = gp.SolverOptions(grad_tol=1e-16, max_iters=3, check_coercivity=False)
    res = gp.minimize(cubic_m1, opts, start=start_field(cubic_m1.graph, rng, 0.5))
    assert not res.converged
    assert "max_iters" in res.message


# ---------------------------------------------------------------------------
# minimize_in_ball


def test_ball_pure_quadratic_interior(forms):
    prob = quadratic_problem(forms[2])
    rng = np.random.default_rng(4)
    res = gp.minimize_in_ball(prob, 1.0, QUIET, start=start_field(forms[2].graph, rng))
    assert res.converged
    assert res.value == pytest.approx(0.0, abs=1e-18)
    assert not res.flags["boundary_minimizer"]


def test_ball_iterates_respect_radius(dip_m2):
    rng = np.random.default_rng(5)
    start = start_field(dip_m2.graph, rng, 10.0)  # projected onto the ball first
    res = gp.minimize_in_ball(dip_m2, DIP_RADIUS, QUIET, start=start)
    assert res.flags["max_iterate_norm"] <= DIP_RADIUS + 1e-12
    assert res.converged


def test_ball_finds_negative_dip(dip_m2):
    probe = gp.geometry_probe(dip_m2, DIP_RADIUS, 32, seed=0)
    res = gp.minimize_in_ball(dip_m2, DIP_RADIUS, QUIET, start=probe.ball_witness)
    assert res.converged
    assert res.value < 0.0
    assert res.flags["energy_norm"] < DIP_RADIUS * (1 - 1e-9)


def test_ball_boundary_minimizer_flag(forms):
    # constant forcing pulls the minimizer outside a small ball
    form = forms[2]
    prob = gp.build_problem(
        form, nonlinearity=gp.Nonlinearity.polynomial([1.0], 4.0)
    )
    res = gp.minimize_in_ball(prob, 1e-4, QUIET)
    assert res.flags["boundary_minimizer"]
    assert not res.converged
    assert "pinned to the sphere" in res.message


def test_ball_rejects_bad_radius(cubic_m1):
    with pytest.raises(ValueError):
        gp.minimize_in_ball(cubic_m1, -1.0, QUIET)


# ---------------------------------------------------------------------------
# mountain pass


def test_mountain_pass_m1_symmetric_saddle(cubic_m1):
    probe = gp.geometry_probe(cubic_m1, 1.0, 32, seed=1)
    res = gp.mountain_pass(cubic_m1, probe.x_star, QUIET)
    assert res.converged
    assert res.classification == "mountain_pass"
    assert res.value == pytest.approx(37.5, rel=1e-10)
    xi = res.x.values[cubic_m1.interior]
    assert np.allclose(np.abs(xi), math.sqrt(15.0), atol=1e-8)
    assert res.flags["above_endpoints"]
    assert res.value >= max(0.0, gp.action(cubic_m1, probe.x_star)) - 1e-10


def test_mountain_pass_value_above_endpoints(cubic_m1):
    probe = gp.geometry_probe(cubic_m1, 1.0, 32, seed=1)
    res = gp.mountain_pass(cubic_m1, probe.x_star, QUIET)
    assert res.value >= max(
        0.0, gp.action(cubic_m1, probe.x_star)
    ) - 1e-10
    assert res.dual_grad_norm <= QUIET.grad_tol


def test_mountain_pass_odd_symmetry(cubic_m1):
    # odd f with symmetric data: negating the saddle preserves the action
    probe = gp.geometry_probe(cubic_m1, 1.0, 32, seed=1)
    res = gp.mountain_pass(cubic_m1, probe.x_star, QUIET)
    mirrored = gp.VertexField(cubic_m1.graph, -res.x.values)
    assert gp.action(cubic_m1, mirrored) == pytest.approx(res.value, abs=1e-10)


def test_mountain_pass_rejects_positive_endpoint(cubic_m1):
    rng = np.random.default_rng(6)
    bad = start_field(cubic_m1.graph, rng)  # random small field has J > 0
    assert gp.action(cubic_m1, bad) > 0
    with pytest.raises(ValueError, match="nonpositive"):
        gp.mountain_pass(cubic_m1, bad, QUIET)


def test_mountain_pass_collapse_detected(forms):
    # endpoint just past the dip: the whole segment is downhill, no mountain
    prob = make_dip_problem(forms[2])
    probe = gp.geometry_probe(prob, DIP_RADIUS, 32, seed=0)
    dip = probe.ball_witness.values.copy()
    short = gp.VertexField(prob.graph, 2.0 * dip)
    assert gp.action(prob, short) < 0
    with pytest.raises(gp.GeometryHypothesisError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            gp.mountain_pass(prob, short, QUIET)


def test_mountain_pass_without_polish_still_localizes(cubic_m1):
    probe = gp.geometry_probe(cubic_m1, 1.0, 32, seed=1)
    opts = gp.SolverOptions(
        grad_tol=1e-6, newton_polish=False, max_iters=400, check_coercivity=False
    )
    res = gp.mountain_pass(cubic_m1, probe.x_star, opts)
    assert res.value == pytest.approx(37.5, rel=1e-6)


# ---------------------------------------------------------------------------
# geometry probe


def test_probe_quadratic_has_no_far_point(forms):
    prob = quadratic_problem(forms[2])
    probe = gp.geometry_probe(prob, 1.0, 16, seed=0)
    assert probe.sphere_positive
    assert not probe.far_negative_found
    assert probe.ball_inf == 0.0
    assert not probe.ball_negative


def test_probe_cubic_finds_far_point(cubic_m1):
    probe = gp.geometry_probe(cubic_m1, 1.0, 32, seed=0)
    assert probe.far_negative_found
    assert probe.x_star_norm > 1.0
    assert probe.x_star_value < 0.0
    assert gp.action(cubic_m1, probe.x_star) == pytest.approx(
        probe.x_star_value, rel=1e-12
    )


def test_probe_nested_sampling_monotone(cubic_m1):
    small = gp.geometry_probe(cubic_m1, 1.0, 16, seed=42)
    big = gp.geometry_probe(cubic_m1, 1.0, 64, seed=42)
    assert big.sphere_inf <= small.sphere_inf + 1e-15


def test_probe_small_ray_prediction(dip_m2):
    probe = gp.geometry_probe(dip_m2, DIP_RADIUS, 32, seed=0)
    ray = probe.small_ray
    assert ray.alpha > 0
    assert ray.predicted_min < 0
    # the sampled dip should be at least as deep as the predicted lower bound
    assert ray.sampled_min <= 0.5 * ray.predicted_min
    assert ray.sampled_min < 0


def test_probe_validates_arguments(cubic_m1):
    with pytest.raises(ValueError):
        gp.geometry_probe(cubic_m1, -1.0, 32)
    with pytest.raises(ValueError):
        gp.geometry_probe(cubic_m1, 1.0, 8)


# ---------------------------------------------------------------------------
# double critical points


def test_double_refuses_pure_quadratic(forms):
    prob = quadratic_problem(forms[2])
    star = np.zeros(prob.graph.n_vertices)
    star[prob.interior] = 10.0
    with pytest.raises(ValueError, match="precondition"):
        gp.double_critical_points(prob, 1.0, gp.VertexField(prob.graph, star), QUIET)


def test_double_two_signed_points(dip_m2):
    res = gp.double_critical_points(dip_m2, DIP_RADIUS, None, QUIET)
    assert res.minimizer.value < 0.0 < res.saddle.value
    assert res.distinct
    assert res.distance > 1e-3
    assert res.minimizer.flags["energy_norm"] > 1e-6
    assert res.saddle.flags["energy_norm"] > 1e-6
    assert res.geometry.sphere_inf > 0 > res.geometry.ball_inf


# ---------------------------------------------------------------------------
# Palais-Smale diagnostic


def test_ps_constant_sequence(cubic_m1):
    zero = gp.VertexField.zeros(cubic_m1.graph)
    report = gp.palais_smale_diagnostic(cubic_m1, [zero] * 6)
    assert report.values_sup == 0.0
    assert report.grad_tail_max == 0.0
    assert report.cluster_size == 6
    assert report.radius_ok


def test_ps_descent_trace(cubic_m1):
    rng = np.random.default_rng(8)
    sequence = []
    xi = cubic_m1.interior_values(start_field(cubic_m1.graph, rng, 0.5))
    opts = gp.SolverOptions(grad_tol=1e-10, check_coercivity=False, max_iters=60)
    res = gp.minimize(cubic_m1, opts, start=cubic_m1.field_from_interior(xi))
    # replay the trace as a field sequence via repeated partial solves
    fields = [cubic_m1.field_from_interior(xi)]
    for k in range(1, 6):
        partial = gp.minimize(
            cubic_m1,
            gp.SolverOptions(grad_tol=1e-10, max_iters=k, check_coercivity=False),
            start=fields[0],
        )
        fields.append(partial.x)
    fields.append(res.x)
    report = gp.palais_smale_diagnostic(cubic_m1, fields)
    assert report.grad_norms[-1] <= report.grad_norms[0]
    assert report.radius_ok
    assert report.cluster_size >= 2
    assert report.limit_candidate is not None


def test_ps_radius_bound_formula(cubic_m1):
    rng = np.random.default_rng(9)
    fields = [start_field(cubic_m1.graph, rng, 0.3) for _ in range(5)]
    report = gp.palais_smale_diagnostic(cubic_m1, fields)
    b = report.values_sup
    c = cubic_m1.bounds.c
    inv = 1.0 / (2.0 + cubic_m1.bounds.epsilon)
    t = report.radius_bound
    assert c * t * t - inv * t == pytest.approx(b, rel=1e-9)


def test_ps_rejects_empty(cubic_m1):
    with pytest.raises(ValueError):
        gp.palais_smale_diagnostic(cubic_m1, [])


# ---------------------------------------------------------------------------
# brute force oracle


def test_oracle_quadratic_unique_zero(forms):
    prob = quadratic_problem(forms[1])
    roots = gp.brute_force_critical_points(prob, (-2.0, 2.0), 21, QUIET)
    assert len(roots) == 1
    assert roots[0].flags["energy_norm"] <= 1e-10
    assert roots[0].value == pytest.approx(0.0, abs=1e-18)


def test_oracle_cubic_contains_known_points(cubic_m1):
    roots = gp.brute_force_critical_points(cubic_m1, (-5.0, 5.0), 21, QUIET)
    values = sorted(r.value for r in roots)
    assert values[0] == pytest.approx(0.0, abs=1e-12)
    t = math.sqrt(15.0)
    sym = np.array([t, t, t])
    best = min(
        np.max(np.abs(r.x.values[cubic_m1.interior] - sym)) for r in roots
    )
    assert best < 1e-8
    assert any(r.value > 0 and r.flags["energy_norm"] > 1e-6 for r in roots)


def test_oracle_stable_under_refinement(cubic_m1):
    coarse = gp.brute_force_critical_points(cubic_m1, (-5.0, 5.0), 21, QUIET)
    fine = gp.brute_force_critical_points(cubic_m1, (-5.0, 5.0), 41, QUIET)
    assert len(coarse) == len(fine)
    for a, b in zip(coarse, fine):
        d = cubic_m1.energy_norm_interior(
            a.x.values[cubic_m1.interior] - b.x.values[cubic_m1.interior]
        )
        assert d <= 1e-6


def test_oracle_guards(cubic_m1, forms):
    with pytest.raises(ValueError, match="interior DOFs"):
        prob = gp.build_problem(forms[2], nonlinearity=gp.Nonlinearity.power(4.0))
        gp.brute_force_critical_points(prob, (-1.0, 1.0), 5, QUIET)
    with pytest.raises(ValueError, match="cap"):
        gp.brute_force_critical_points(
            cubic_m1, (-1.0, 1.0), 1000, QUIET, max_grid_points=10**6
        )
    with pytest.raises(ValueError):
        gp.brute_force_critical_points(cubic_m1, (2.0, -2.0), 11, QUIET)


def test_oracle_per_dof_boxes(cubic_m1):
    roots = gp.brute_force_critical_points(
        cubic_m1, [(-5.0, 5.0), (-5.0, 5.0), (-5.0, 5.0)], 21, QUIET
    )
    assert any(r.value == pytest.approx(37.5, rel=1e-9) for r in roots)


# ---------------------------------------------------------------------------
# determinism


def test_solver_determinism(cubic_m1):
    probe1 = gp.geometry_probe(cubic_m1, 1.0, 32, seed=5)
    probe2 = gp.geometry_probe(cubic_m1, 1.0, 32, seed=5)
    assert probe1.sphere_inf == probe2.sphere_inf
    assert np.array_equal(probe1.x_star.values, probe2.x_star.values)

    res1 = gp.mountain_pass(cubic_m1, probe1.x_star, QUIET)
    res2 = gp.mountain_pass(cubic_m1, probe2.x_star, QUIET)
    assert res1.trace == res2.trace
    assert np.array_equal(res1.x.values, res2.x.values)
    assert res1.value == res2.value
