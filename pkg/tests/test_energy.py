import math

import numpy as np
import pytest

import gasketpde as gp
from gasketpde.energy import restriction_indices


def test_energy_of_corner_indicator(graphs, forms):
    # one unit corner value on the full triangle: two unit jumps, one flat edge
    g, form = graphs[0], forms[0]
    u = gp.VertexField(g, [1.0, 0.0, 0.0])
    assert gp.energy(form, u) == pytest.approx(2.0, abs=1e-14)


def test_energy_of_constants_vanishes(forms):
    for form in forms.values():
        u = np.full(form.graph.n_vertices, 7.0)
        assert gp.energy(form, u) == pytest.approx(0.0, abs=1e-12)


def test_energy_quadratic_scaling(forms):
    rng = np.random.default_rng(11)
    form = forms[2]
    u = rng.standard_normal(form.graph.n_vertices)
    assert gp.energy(form, 3.0 * u) == pytest.approx(9.0 * gp.energy(form, u), rel=1e-12)


def test_stiffness_matrix_matches_edge_sum(forms):
    rng = np.random.default_rng(3)
    form = forms[3]
    g = form.graph
    for _ in range(5):
        u = rng.standard_normal(g.n_vertices)
        v = rng.standard_normal(g.n_vertices)
        assert float(u @ (form.stiffness @ v)) == pytest.approx(
            gp.bilinear(form, u, v), rel=1e-11, abs=1e-11
        )


def test_bilinear_symmetric_and_polarization(forms):
    rng = np.random.default_rng(5)
    form = forms[2]
    n = form.graph.n_vertices
    for _ in range(10):
        u, v = rng.standard_normal(n), rng.standard_normal(n)
        buv = gp.bilinear(form, u, v)
        assert buv == pytest.approx(gp.bilinear(form, v, u), rel=1e-12, abs=1e-12)
        polar = 0.25 * (gp.energy(form, u + v) - gp.energy(form, u - v))
        assert buv == pytest.approx(polar, rel=1e-9, abs=1e-10)
        assert gp.bilinear(form, u, np.full(n, 4.2)) == pytest.approx(0.0, abs=1e-10)


def test_stiffness_psd_with_constant_kernel(forms):
    rng = np.random.default_rng(7)
    form = forms[3]
    n = form.graph.n_vertices
    for _ in range(1000):
        u = rng.standard_normal(n)
        e = gp.energy(form, u)
        assert e >= -1e-12
        # vanishing energy forces a constant on a connected graph
        if e < 1e-20:
            assert np.ptp(u) < 1e-10


def test_measure_weights_level0(graphs):
    w = gp.measure_weights(graphs[0])
    assert np.allclose(w.values, 1.0 / 3.0, atol=1e-15)


def test_measure_weights_level1(graphs):
    g = graphs[1]
    w = gp.measure_weights(g).values
    boundary = set(g.boundary.tolist())
    for v in range(g.n_vertices):
        expect = 1.0 / 9.0 if v in boundary else 2.0 / 9.0
        assert w[v] == pytest.approx(expect, abs=1e-15)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)


def test_weights_sum_to_one_n3_n4():
    for n in (3, 4):
        for m in range(5):
            g = gp.build_prefractal(n, m)
            assert abs(gp.measure_weights(g).values.sum() - 1.0) <= 1e-12


def test_integrate_constant_and_linearity(graphs):
    g = graphs[2]
    rng = np.random.default_rng(2)
    assert gp.integrate(g, np.ones(g.n_vertices)) == pytest.approx(1.0, abs=1e-12)
    u, v = rng.standard_normal(g.n_vertices), rng.standard_normal(g.n_vertices)
    lhs = gp.integrate(g, 2 * u + 3 * v)
    assert lhs == pytest.approx(2 * gp.integrate(g, u) + 3 * gp.integrate(g, v), rel=1e-12)


def test_integrate_single_cell_indicator(graphs):
    # corner cell at level 1: corner (1/9) plus two midpoints (2/9 each)
    g = graphs[1]
    cell = next(c for c in g.cells if g.index[(2, 0, 0)] in c)
    u = np.zeros(g.n_vertices)
    u[list(cell)] = 1.0
    assert gp.integrate(g, u) == pytest.approx(5.0 / 9.0, abs=1e-14)


def test_integrate_matches_cell_mean_rule(graphs):
    # the weights realize: integral = sum over cells of N^-m * vertex mean
    rng = np.random.default_rng(13)
    for m in (1, 2, 3):
        g = gp.build_prefractal(3, m)
        u = rng.standard_normal(g.n_vertices)
        by_cells = sum(
            3.0**-m * np.mean(u[list(cell)]) for cell in g.cells
        )
        assert gp.integrate(g, u) == pytest.approx(by_cells, rel=1e-12)


def test_harmonic_extension_hand_values(graphs):
    u = gp.VertexField(graphs[0], [0.0, 0.0, 1.0])  # value 1 on corner (1,0,0)
    ext = gp.harmonic_extension(graphs[0], graphs[1], u)
    g1 = graphs[1]
    assert ext.values[g1.index[(2, 0, 0)]] == pytest.approx(1.0, abs=1e-14)
    assert ext.values[g1.index[(1, 1, 0)]] == pytest.approx(2.0 / 5.0, abs=1e-12)
    assert ext.values[g1.index[(1, 0, 1)]] == pytest.approx(2.0 / 5.0, abs=1e-12)
    assert ext.values[g1.index[(0, 1, 1)]] == pytest.approx(1.0 / 5.0, abs=1e-12)


def test_harmonic_extension_constant(graphs, forms):
    u = gp.VertexField(graphs[1], np.full(6, 3.3))
    ext = gp.harmonic_extension(graphs[1], graphs[2], u)
    assert np.allclose(ext.values, 3.3, atol=1e-12)
    assert gp.energy(forms[2], ext) == pytest.approx(0.0, abs=1e-12)


def test_harmonic_extension_energy_invariance(graphs, forms):
    rng = np.random.default_rng(21)
    for m in range(5):
        coarse, fine = graphs[m], graphs[m + 1]
        for _ in range(10):
            u = rng.standard_normal(coarse.n_vertices)
            ext = gp.harmonic_extension(coarse, fine, u, forms[m + 1])
            e0 = gp.energy(forms[m], u)
            e1 = gp.energy(forms[m + 1], ext)
            assert abs(e1 - e0) <= 1e-9 * max(1.0, abs(e0))


def test_energy_invariance_other_branching():
    for n in (2, 4):
        coarse = gp.build_prefractal(n, 1)
        fine = gp.build_prefractal(n, 2)
        fc, ff = gp.build_form(coarse), gp.build_form(fine)
        rng = np.random.default_rng(n)
        for _ in range(5):
            u = rng.standard_normal(coarse.n_vertices)
            ext = gp.harmonic_extension(coarse, fine, u, ff)
            assert gp.energy(ff, ext) == pytest.approx(gp.energy(fc, u), rel=1e-11)


def test_extension_min_max_principle(graphs):
    rng = np.random.default_rng(4)
    for _ in range(20):
        u = rng.standard_normal(graphs[1].n_vertices)
        ext = gp.harmonic_extension(graphs[1], graphs[2], u)
        assert ext.values.min() >= u.min() - 1e-12
        assert ext.values.max() <= u.max() + 1e-12


def test_extension_restricts_back_exactly(graphs):
    rng = np.random.default_rng(6)
    u = rng.standard_normal(graphs[2].n_vertices)
    ext = gp.harmonic_extension(graphs[2], graphs[3], u)
    old = restriction_indices(graphs[2], graphs[3])
    assert np.array_equal(ext.values[old], u)


def test_dirichlet_laplacian_pairing(graphs, forms):
    rng = np.random.default_rng(8)
    for m in (1, 2, 3, 4):
        form = forms[m]
        lap = gp.dirichlet_laplacian(form)
        interior = form.interior
        for _ in range(5):
            u = rng.standard_normal(form.graph.n_vertices)
            v = gp.random_dirichlet(form.graph, rng)
            lhs = (form.weights[interior] * (lap @ u)) @ v.values[interior]
            rhs = -gp.bilinear(form, u, v.values)
            assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_laplacian_kills_constants_and_harmonics(graphs, forms):
    form = forms[2]
    lap = gp.dirichlet_laplacian(form)
    assert np.max(np.abs(lap @ np.ones(form.graph.n_vertices))) < 1e-10

    # harmonic interior solve from boundary data 1, 2, 3
    k = form.stiffness.tocsr()
    interior, boundary = form.interior, form.boundary
    u = np.zeros(form.graph.n_vertices)
    u[boundary] = [1.0, 2.0, 3.0]
    import scipy.sparse.linalg as sla

    u[interior] = sla.spsolve(
        k[interior][:, interior].tocsc(), -k[interior][:, boundary] @ u[boundary]
    )
    assert np.max(np.abs(lap @ u)) < 1e-10


def test_laplacian_empty_interior_signal(graphs, forms):
    lap = gp.dirichlet_laplacian(forms[0])
    assert lap.shape == (0, 3)


def test_norms_report(graphs, forms):
    form = forms[2]
    zero = gp.VertexField.zeros(graphs[2])
    rep = gp.norms(form, zero)
    assert rep.energy_norm == rep.sup_norm == rep.l2_norm == 0.0

    rng = np.random.default_rng(9)
    u = gp.random_dirichlet(graphs[2], rng)
    rep = gp.norms(form, u)
    assert rep.embedding_ok is True
    assert rep.l2_norm <= rep.sup_norm + 1e-15
    assert rep.sup_norm <= rep.embedding_constant * rep.energy_norm + 1e-12

    free = gp.VertexField(graphs[2], rng.standard_normal(graphs[2].n_vertices))
    assert gp.norms(form, free).embedding_ok is None


def test_embedding_chain_on_random_dirichlet(graphs, forms):
    rng = np.random.default_rng(10)
    for m in (1, 2, 3, 4):
        for _ in range(50):
            u = gp.random_dirichlet(graphs[m], rng, scale=rng.uniform(0.1, 10))
            rep = gp.norms(forms[m], u)
            assert rep.l2_norm <= rep.sup_norm + 1e-15
            assert rep.sup_norm <= (2 * 3 + 3) * rep.energy_norm + 1e-12


def test_graph_mismatch_rejected(graphs, forms):
    u = gp.VertexField(graphs[1], np.zeros(6))
    with pytest.raises(gp.GraphMismatchError):
        gp.energy(forms[2], u)
    with pytest.raises(gp.GraphMismatchError):
        gp.harmonic_extension(graphs[1], graphs[3], np.zeros(6))


def test_scale_factor_value(forms):
    for m, form in forms.items():
        assert form.scale == pytest.approx((5.0 / 3.0) ** m, rel=1e-15)
        assert form.embedding_constant == 9.0
