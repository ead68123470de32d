"""Exact level-m prefractal gaskets in barycentric coordinates.

The gasket on N points is the attractor of the N midpoint maps toward the
vertices of a regular unit simplex.  At refinement level m every vertex is a
tuple of N nonnegative integers summing to 2**m (barycentric numerators over
the common denominator 2**m), so coincidences between images of different map
words dedup exactly in integer arithmetic -- no floating-point tolerance
enters the construction.  Cells are the images of the full vertex set under
length-m words; two vertices are adjacent iff they lie in a common cell,
which for the gasket is the same as being at Euclidean distance 2**(-m).

The Cartesian embedding onto a regular unit simplex is attached for export
and diagnostics only; topology never depends on it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ResourceLimitError",
    "SimplexSpec",
    "BaryVertex",
    "PrefractalGraph",
    "build_prefractal",
    "embed_coordinates",
    "simplex_vertex_count",
    "unit_simplex_points",
]

DEFAULT_MAX_VERTICES = 2_000_000

_DISTANCE_TOL = 1e-12


class ResourceLimitError(Exception):
    """Requested refinement level exceeds the configured size budget."""


def unit_simplex_points(n: int) -> np.ndarray:
    """Vertices of a regular simplex with unit edge length in R^(n-1).

    Built by recursive orthogonal extension: vertex k sits above the
    centroid of vertices 0..k-1 at the height restoring unit distance.
    """
    if n < 2:
        raise ValueError("a simplex needs at least 2 vertices")
    dim = n - 1
    pts = np.zeros((n, dim))
    for k in range(1, n):
        centroid = pts[:k].mean(axis=0)
        r2 = float(np.sum((pts[0] - centroid) ** 2))
        pts[k] = centroid
        pts[k, k - 1] += math.sqrt(1.0 - r2)
    return pts


def simplex_vertex_count(n_maps: int, level: int) -> int:
    """Exact |V_m|: each refinement glues N copies at C(N,2) pair midpoints."""
    pairs = n_maps * (n_maps - 1) // 2
    count = n_maps
    for _ in range(level):
        count = n_maps * count - pairs
    return count


@dataclass(frozen=True, eq=False)
class SimplexSpec:
    """N midpoint maps toward the rows of ``points`` (pairwise unit distance)."""

    n_maps: int
    points: np.ndarray

    def __post_init__(self):
        if self.n_maps < 2:
            raise ValueError("n_maps must be at least 2")
        p = np.asarray(self.points, dtype=float)
        if p.shape != (self.n_maps, self.n_maps - 1):
            raise ValueError(
                f"points must have shape ({self.n_maps}, {self.n_maps - 1})"
            )
        object.__setattr__(self, "points", p)
        for i in range(self.n_maps):
            for j in range(i + 1, self.n_maps):
                d = float(np.linalg.norm(p[i] - p[j]))
                if abs(d - 1.0) > _DISTANCE_TOL:
                    raise ValueError(
                        f"simplex points {i},{j} at distance {d!r}, expected 1"
                    )

    @classmethod
    def regular(cls, n_maps: int) -> "SimplexSpec":
        return cls(n_maps, unit_simplex_points(n_maps))


@dataclass(frozen=True)
class BaryVertex:
    """Barycentric numerators at denominator 2**level.

    The reduced form (common powers of 2 divided out) is canonical, so
    vertex identity across levels is decidable without rescaling both sides.
    """

    level: int
    coords: tuple[int, ...]

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if any(c < 0 for c in self.coords):
            raise ValueError("barycentric numerators must be nonnegative")
        if sum(self.coords) != 2**self.level:
            raise ValueError(
                f"numerators must sum to 2**level = {2 ** self.level}"
            )

    def reduced(self) -> "BaryVertex":
        level, coords = self.level, self.coords
        while level > 0 and all(c % 2 == 0 for c in coords):
            level -= 1
            coords = tuple(c // 2 for c in coords)
        return BaryVertex(level, coords)

    def at_level(self, level: int) -> "BaryVertex":
        if level < self.level:
            raise ValueError("cannot rescale to a coarser denominator")
        factor = 2 ** (level - self.level)
        return BaryVertex(level, tuple(c * factor for c in self.coords))


@dataclass(eq=False)
class PrefractalGraph:
    """Level-m gasket graph: vertices, cell-local edges, cells, boundary.

    Vertex order is lexicographic on the integer coordinate tuples, so every
    derived object (matrices, result files) is reproducible bit for bit.
    """

    spec: SimplexSpec
    level: int
    vertices: list[BaryVertex]
    coords: np.ndarray  # (n, N) integer numerators at denominator 2**level
    edges: np.ndarray  # (E, 2) vertex indices, i < j, lexicographically sorted
    cells: np.ndarray  # (N**m, N) vertex indices, word order
    boundary: np.ndarray  # (N,) indices of the simplex corners
    index: dict[tuple[int, ...], int] = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_maps(self) -> int:
        return self.spec.n_maps

    @property
    def denominator(self) -> int:
        return 2**self.level

    @property
    def interior(self) -> np.ndarray:
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[self.boundary] = False
        return np.nonzero(mask)[0]

    def vertex_index(self, vertex: BaryVertex) -> int:
        """Index of a vertex given at any level, via its canonical reduced form."""
        reduced = vertex.reduced()
        if reduced.level > self.level:
            raise KeyError(f"{vertex} is not a level-{self.level} vertex")
        scaled = reduced.at_level(self.level)
        try:
            return self.index[scaled.coords]
        except KeyError:
            raise KeyError(f"{vertex} is not a level-{self.level} vertex") from None

    def cells_of_vertex(self) -> np.ndarray:
        """Number of cells incident to each vertex (1 on corners, 2 inside)."""
        return np.bincount(self.cells.ravel(), minlength=self.n_vertices)


def build_prefractal(
    n_maps: int, level: int, max_vertices: int = DEFAULT_MAX_VERTICES
) -> PrefractalGraph:
    """Enumerate all length-``level`` word images of the simplex corners.

    The image of corner j under the word (i_1, ..., i_m) has numerators
    e_j + sum_t 2**(m-t) e_{i_t}; duplicates collapse by exact tuple equality.
    """
    if n_maps < 2:
        raise ValueError("n_maps must be at least 2")
    if level < 0:
        raise ValueError("level must be nonnegative")
    predicted = simplex_vertex_count(n_maps, level)
    if predicted > max_vertices:
        raise ResourceLimitError(
            f"level {level} needs {predicted} vertices, budget is {max_vertices}"
        )

    spec = SimplexSpec.regular(n_maps)
    index: dict[tuple[int, ...], int] = {}
    raw_cells: list[tuple[int, ...]] = []
    for word in itertools.product(range(n_maps), repeat=level):
        base = [0] * n_maps
        for t, i in enumerate(word):
            base[i] += 2 ** (level - 1 - t)
        cell = []
        for j in range(n_maps):
            c = tuple(base[b] + (1 if b == j else 0) for b in range(n_maps))
            cell.append(index.setdefault(c, len(index)))
        raw_cells.append(tuple(cell))

    ordered = sorted(index)
    new_of_old = np.empty(len(ordered), dtype=np.int64)
    for pos, c in enumerate(ordered):
        new_of_old[index[c]] = pos
    final_index = {c: pos for pos, c in enumerate(ordered)}

    cells = new_of_old[np.asarray(raw_cells, dtype=np.int64)]
    edge_set = set()
    for cell in cells:
        for a, b in itertools.combinations(sorted(cell.tolist()), 2):
            edge_set.add((a, b))
    edges = np.asarray(sorted(edge_set), dtype=np.int64)

    denom = 2**level
    boundary = np.asarray(
        sorted(
            final_index[tuple(denom if b == i else 0 for b in range(n_maps))]
            for i in range(n_maps)
        ),
        dtype=np.int64,
    )

    return PrefractalGraph(
        spec=spec,
        level=level,
        vertices=[BaryVertex(level, c) for c in ordered],
        coords=np.asarray(ordered, dtype=np.int64),
        edges=edges,
        cells=cells,
        boundary=boundary,
        index=final_index,
    )


def embed_coordinates(graph: PrefractalGraph) -> np.ndarray:
    """Cartesian points, one row per vertex: (coords / 2**m) @ simplex points."""
    return (graph.coords / graph.denominator) @ graph.spec.points


def same_topology(a: PrefractalGraph, b: PrefractalGraph) -> bool:
    return a.n_maps == b.n_maps and a.level == b.level
