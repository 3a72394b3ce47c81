"""Portable file formats: mesh documents (JSON), estimate tables and
solution fields (comma separated).

Mesh coordinates round-trip bit-exactly: JSON emits Python float reprs
(shortest decimal that reparses to the same double, up to 17 significant
digits) and reading converts straight back to float64.  Table and solution
files use 17-significant-digit decimals, locale independent.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import UsageError
from .geometry import LevelMesh, RELATIVE_TOLERANCE
from .renorm import RenormEstimate
from .solver import Solution

_FMT = "{:.17g}"


def write_mesh(mesh: LevelMesh, path) -> None:
    doc = {
        "family": mesh.family,
        "level": mesh.level,
        "dimension": mesh.dimension,
        "vertices": [[float(c) for c in v] for v in mesh.vertices],
        "edges": [[int(i), int(j)] for i, j in mesh.edges],
        "cells": [[int(i), int(j), int(k)] for i, j, k in mesh.cells],
        "boundary": [int(i) for i in mesh.boundary_indices],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_mesh(path) -> LevelMesh:
    with open(path, "r", encoding="ascii") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"malformed mesh document: {exc}") from None
    try:
        vertices = np.array(doc["vertices"], dtype=np.float64).reshape(-1, doc["dimension"])
        edges = np.array(doc["edges"], dtype=np.int64).reshape(-1, 2)
        cells = np.array(doc["cells"], dtype=np.int64).reshape(-1, 3)
        boundary = np.array(doc["boundary"], dtype=np.int64)
        family = str(doc["family"])
        level = int(doc["level"])
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed mesh document: {exc}") from None
    lengths = np.linalg.norm(vertices[edges[:, 0]] - vertices[edges[:, 1]], axis=1)
    if lengths.size == 0 or lengths.min() <= 0.0:
        raise UsageError("mesh document has no usable edges")
    return LevelMesh(
        family=family,
        level=level,
        vertices=vertices,
        edges=edges,
        cells=cells,
        boundary_indices=boundary,
        dedup_tolerance=RELATIVE_TOLERANCE * float(lengths.min()),
    )


def write_table(estimates: list[RenormEstimate], path) -> None:
    """One row per level pair: pair, max, mean, min, excluded_count."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("pair,max,mean,min,excluded_count\n")
        for est in estimates:
            a, b = est.level_pair
            fh.write(
                f"{a}:{b},{_FMT.format(est.max)},{_FMT.format(est.mean)},"
                f"{_FMT.format(est.min)},{est.excluded_count}\n"
            )


def write_solution(mesh: LevelMesh, solution: Solution, path, extra=None) -> None:
    """Header metadata lines prefixed '#', then coordinate/value rows."""
    meta = {
        "family": mesh.family,
        "level": solution.level,
        "method": solution.method,
        "constant": "" if solution.renorm_constant_applied is None
        else _FMT.format(solution.renorm_constant_applied),
        "residual": _FMT.format(solution.solver_residual),
    }
    if extra:
        meta.update(extra)
    with open(path, "w", encoding="ascii") as fh:
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        for point, value in zip(mesh.vertices, solution.values):
            coords = ",".join(_FMT.format(c) for c in point)
            fh.write(f"{coords},{_FMT.format(value)}\n")
