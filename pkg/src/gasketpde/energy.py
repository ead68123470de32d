"""Discrete Dirichlet energy, self-similar measure quadrature, harmonic extension.

The level-m energy of a vertex function u is

    scale * sum over unordered edges {x, y} of (u(x) - u(y))**2,

with scale = ((N+2)/N)**m.  Each edge is counted once; this is the convention
under which harmonically extending u from level m to level m+1 leaves the
energy exactly unchanged, which is the whole point of the scale factor.

The measure gives every level-m cell mass N**(-m), split equally among the
cell's N vertices, so a corner vertex carries N**(-(m+1)) and an interior
junction (shared by two cells) twice that.  Total mass is 1 by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from .geometry import PrefractalGraph

__all__ = [
    "GraphMismatchError",
    "VertexField",
    "DiscreteForm",
    "NormReport",
    "build_form",
    "energy",
    "bilinear",
    "measure_weights",
    "integrate",
    "restriction_indices",
    "harmonic_extension",
    "dirichlet_laplacian",
    "norms",
    "random_dirichlet",
]


class GraphMismatchError(ValueError):
    """A field was paired with a form or graph it does not live on."""


@dataclass(eq=False)
class VertexField:
    """One real value per vertex of a fixed prefractal graph."""

    graph: PrefractalGraph
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.graph.n_vertices,):
            raise ValueError(
                f"expected {self.graph.n_vertices} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    @classmethod
    def zeros(cls, graph: PrefractalGraph) -> "VertexField":
        return cls(graph, np.zeros(graph.n_vertices))

    @property
    def is_dirichlet(self) -> bool:
        return bool(np.all(self.values[self.graph.boundary] == 0.0))

    def copy(self) -> "VertexField":
        return VertexField(self.graph, self.values.copy())


def _values_on(graph: PrefractalGraph, u) -> np.ndarray:
    """Accept a VertexField (checking its graph) or a bare array."""
    if isinstance(u, VertexField):
        if u.graph is not graph:
            raise GraphMismatchError("field lives on a different graph")
        return u.values
    v = np.asarray(u, dtype=float)
    if v.shape != (graph.n_vertices,):
        raise GraphMismatchError(
            f"expected {graph.n_vertices} values, got shape {v.shape}"
        )
    return v


@dataclass(eq=False)
class DiscreteForm:
    """Stiffness matrix, measure weights and norms for one prefractal level."""

    graph: PrefractalGraph
    stiffness: sparse.csr_matrix
    scale: float  # ((N+2)/N)**m renormalization
    weights: np.ndarray  # measure quadrature weights, sum to 1
    embedding_constant: float  # 2N+3
    interior: np.ndarray
    boundary: np.ndarray
    _interior_matrix: Optional[sparse.csr_matrix] = field(default=None, repr=False)

    def interior_matrix(self) -> sparse.csr_matrix:
        if self._interior_matrix is None:
            k = self.stiffness.tocsr()
            self._interior_matrix = k[self.interior][:, self.interior].tocsr()
        return self._interior_matrix


def build_form(graph: PrefractalGraph) -> DiscreteForm:
    n = graph.n_vertices
    scale = ((graph.n_maps + 2) / graph.n_maps) ** graph.level
    i, j = graph.edges[:, 0], graph.edges[:, 1]
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    ones = np.ones(len(i))
    data = scale * np.concatenate([-ones, -ones, ones, ones])
    stiffness = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()

    incidence = graph.cells_of_vertex()
    weights = incidence * float(graph.n_maps) ** (-(graph.level + 1))

    return DiscreteForm(
        graph=graph,
        stiffness=stiffness,
        scale=scale,
        weights=weights,
        embedding_constant=2.0 * graph.n_maps + 3.0,
        interior=graph.interior,
        boundary=graph.boundary.copy(),
    )


def energy(form: DiscreteForm, u) -> float:
    """Renormalized Dirichlet energy; equals bilinear(form, u, u).

    Computed as the literal edge-difference sum, which vanishes exactly on
    constants; the stiffness matrix reproduces it up to rounding.
    """
    return bilinear(form, u, u)


def bilinear(form: DiscreteForm, u, v) -> float:
    a = _values_on(form.graph, u)
    b = _values_on(form.graph, v)
    i, j = form.graph.edges[:, 0], form.graph.edges[:, 1]
    return float(form.scale * np.sum((a[i] - a[j]) * (b[i] - b[j])))


def measure_weights(graph: PrefractalGraph) -> VertexField:
    incidence = graph.cells_of_vertex()
    w = incidence * float(graph.n_maps) ** (-(graph.level + 1))
    return VertexField(graph, w)


def integrate(graph: PrefractalGraph, u, weights: np.ndarray | None = None) -> float:
    """Quadrature against the self-similar measure; integrate(1) == 1."""
    v = _values_on(graph, u)
    if weights is None:
        weights = measure_weights(graph).values
    return float(weights @ v)


def restriction_indices(
    coarse: PrefractalGraph, fine: PrefractalGraph
) -> np.ndarray:
    """For each coarse vertex, its index in the fine graph (coords doubled)."""
    if fine.n_maps != coarse.n_maps:
        raise GraphMismatchError("graphs built from different simplices")
    if fine.level != coarse.level + 1:
        raise GraphMismatchError("fine graph must be exactly one level deeper")
    out = np.empty(coarse.n_vertices, dtype=np.int64)
    for k, c in enumerate(coarse.coords):
        out[k] = fine.index[tuple(int(x) * 2 for x in c)]
    return out


def harmonic_extension(
    coarse: PrefractalGraph,
    fine: PrefractalGraph,
    u,
    fine_form: DiscreteForm | None = None,
) -> VertexField:
    """Extend u from V_m to V_{m+1} by minimizing the level-(m+1) energy.

    New vertices solve the linear system K_nn x_n = -K_no u_o; the result has
    the same renormalized energy as u on the coarse graph.
    """
    u_old = _values_on(coarse, u)
    old = restriction_indices(coarse, fine)
    if fine_form is None:
        fine_form = build_form(fine)
    k = fine_form.stiffness.tocsr()

    mask = np.ones(fine.n_vertices, dtype=bool)
    mask[old] = False
    new = np.nonzero(mask)[0]

    values = np.zeros(fine.n_vertices)
    values[old] = u_old
    if len(new):
        k_nn = k[new][:, new].tocsc()
        rhs = -(k[new][:, old] @ u_old)
        try:
            values[new] = sparse_linalg.spsolve(k_nn, rhs)
        except Exception as exc:  # pragma: no cover - connected cells keep k_nn SPD
            raise RuntimeError("singular local extension system") from exc
    return VertexField(fine, values)


def dirichlet_laplacian(form: DiscreteForm) -> sparse.csr_matrix:
    """Weak Laplacian on interior vertices: rows of -K scaled by 1/weight.

    Maps a full vertex vector to interior values; the measure-weighted pairing
    of the output against any field vanishing on the boundary reproduces
    -bilinear(u, v).  An empty interior (level 0) yields the 0 x n matrix.
    """
    interior = form.interior
    n = form.graph.n_vertices
    if len(interior) == 0:
        return sparse.csr_matrix((0, n))
    rows = form.stiffness.tocsr()[interior]
    inv_w = sparse.diags(-1.0 / form.weights[interior])
    return (inv_w @ rows).tocsr()


@dataclass(frozen=True)
class NormReport:
    energy_norm: float
    sup_norm: float
    l2_norm: float
    embedding_constant: float
    embedding_ok: Optional[bool]  # None when the field is not Dirichlet


def norms(form: DiscreteForm, u) -> NormReport:
    v = _values_on(form.graph, u)
    e = math.sqrt(max(energy(form, v), 0.0))
    sup = float(np.max(np.abs(v))) if len(v) else 0.0
    l2 = math.sqrt(max(integrate(form.graph, v * v, form.weights), 0.0))
    dirichlet = bool(np.all(v[form.boundary] == 0.0))
    ok = (sup <= form.embedding_constant * e + 1e-12) if dirichlet else None
    return NormReport(e, sup, l2, form.embedding_constant, ok)


def random_dirichlet(
    graph: PrefractalGraph, rng: np.random.Generator, scale: float = 1.0
) -> VertexField:
    """Gaussian values on interior vertices, zero on the boundary."""
    values = np.zeros(graph.n_vertices)
    interior = graph.interior
    values[interior] = scale * rng.standard_normal(len(interior))
    return VertexField(graph, values)
