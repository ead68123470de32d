import numpy as np
import pytest

import gasketpde as gp


@pytest.fixture(scope="session")
def graphs():
    """Gaskets on 3 corners, levels 0..5, shared across the whole run."""
    return {m: gp.build_prefractal(3, m) for m in range(6)}


@pytest.fixture(scope="session")
def forms(graphs):
    return {m: gp.build_form(g) for m, g in graphs.items()}


@pytest.fixture(scope="session")
def cubic_m1(forms):
    """f(v) = v^3 on the level-1 gasket: 3 interior DOFs, hand-checkable."""
    return gp.build_problem(forms[1], nonlinearity=gp.Nonlinearity.power(4.0))


def make_dip_problem(form):
    """Two-critical-point configuration: smoothed-sign dip plus quartic tail."""
    graph = form.graph
    xyz = gp.embed_coordinates(graph)
    u0 = -0.25 + 0.5 * xyz[:, 0]
    h = lambda v: 1.0 + 0.1 * np.asarray(v, dtype=float)
    nl = gp.Nonlinearity.tanh_power(eta=0.0065, delta=5e-6, lam=1.0, theta=4.0)
    bounds = gp.Bounds(M=1.0, M1=1.0, beta=1.0, eta=0.0065, epsilon=1.0, c=0.25)
    return gp.build_problem(
        form, nonlinearity=nl, a=-0.05, g=1.0, u=u0, h=h, bounds=bounds
    )


DIP_RADIUS = 0.02


@pytest.fixture(scope="session")
def dip_m2(forms):
    return make_dip_problem(forms[2])
