"""Result persistence: graph dumps, solution files, traces, matrix export.

All files are deterministic functions of their inputs: floats go through
Python's shortest round-trip repr (JSON) or 17-significant-digit formatting
(CSV/triplets), keys are sorted, and no wall-clock data is written, so a rerun
with the same config and seed reproduces every byte.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .energy import DiscreteForm, VertexField, norms
from .geometry import PrefractalGraph, embed_coordinates

__all__ = [
    "FORMAT_VERSION",
    "AddressMismatchError",
    "graph_to_dict",
    "save_graph",
    "save_solution",
    "load_field",
    "load_solution",
    "save_trace",
    "dump_stiffness",
    "write_csv",
]

FORMAT_VERSION = 1


class AddressMismatchError(ValueError):
    """Stored vertex addresses do not match the target graph."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def graph_to_dict(graph: PrefractalGraph) -> dict:
    xyz = embed_coordinates(graph)
    return {
        "format_version": FORMAT_VERSION,
        "n_maps": graph.n_maps,
        "level": graph.level,
        "denominator": graph.denominator,
        "vertices": [[int(c) for c in row] for row in graph.coords],
        "coordinates": [[float(v) for v in row] for row in xyz],
        "edges": [[int(a), int(b)] for a, b in graph.edges],
        "cells": [[int(k) for k in cell] for cell in graph.cells],
        "boundary": [int(k) for k in graph.boundary],
    }


def save_graph(graph: PrefractalGraph, path) -> Path:
    return _write_json(path, graph_to_dict(graph))


def save_solution(
    path,
    result,
    form: DiscreteForm,
    config_hash: str = "",
    seed: int | None = None,
    extra: dict | None = None,
) -> Path:
    """Persist a critical-point result with addresses, scalars and metadata."""
    graph = form.graph
    values = result.x.values
    report = norms(form, values)
    payload = {
        "format_version": FORMAT_VERSION,
        "metadata": {
            "config_hash": config_hash,
            "seed": seed,
            "package_version": __version__,
        },
        "gasket": {"n_maps": graph.n_maps, "level": graph.level},
        "denominator": graph.denominator,
        "addresses": [[int(c) for c in row] for row in graph.coords],
        "values": [float(v) for v in values],
        "scalars": {
            "action": float(result.value),
            "dual_grad_norm": float(result.dual_grad_norm),
            "energy_norm": report.energy_norm,
            "sup_norm": report.sup_norm,
            "l2_norm": report.l2_norm,
        },
        "classification": result.classification,
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "message": result.message,
    }
    if extra:
        payload["extra"] = extra
    return _write_json(path, payload)


def _check_addresses(payload: dict, graph: PrefractalGraph) -> None:
    gasket = payload.get("gasket", {})
    if gasket.get("n_maps") != graph.n_maps or gasket.get("level") != graph.level:
        raise AddressMismatchError(
            f"file holds a level-{gasket.get('level')} gasket on "
            f"{gasket.get('n_maps')} maps, target graph is level {graph.level} "
            f"on {graph.n_maps}"
        )
    addresses = payload.get("addresses")
    if addresses is None or len(addresses) != graph.n_vertices:
        raise AddressMismatchError("vertex count differs from the target graph")
    for row, expect in zip(addresses, graph.coords):
        if [int(c) for c in row] != [int(c) for c in expect]:
            raise AddressMismatchError(f"address {row} not in graph order")


def load_field(path, graph: PrefractalGraph) -> VertexField:
    with open(path) as fh:
        payload = json.load(fh)
    _check_addresses(payload, graph)
    return VertexField(graph, np.asarray(payload["values"], dtype=float))


def load_solution(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def save_trace(path, trace) -> Path:
    return write_csv(path, ("iteration", "value", "grad_norm"), trace)


def dump_stiffness(form: DiscreteForm, path) -> Path:
    """Coordinate triplets (row, col, value), one per line, row-major order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coo = form.stiffness.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {_fmt(coo.data[k])}\n")
    return path


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [
                    _fmt(v) if isinstance(v, float) else v
                    for v in row
                ]
            )
    return path
