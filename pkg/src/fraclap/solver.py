"""Dirichlet problems via boundary/interior block partitioning.

The interior block of the (symmetric PSD) operator is positive definite on
connected meshes with a nonempty boundary, so the reduced system is solved
with a sparse direct factorization; a conjugate-gradient path takes over
above a size threshold where factorization becomes wasteful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolveError, UsageError
from .geometry import LevelMesh, _frozen
from .graphs import SparseMatrix
from .kernels import _cg_core
from .measures import StiffnessMatrix

# Below this many unknowns a direct factorization is cheap and deterministic;
# beyond it conjugate gradient with a tight tolerance is used instead.
DIRECT_SOLVE_LIMIT = 100_000
RESIDUAL_BOUND = 1e-10
CG_RELATIVE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class DirichletProblem:
    """Operator, load and boundary data for one solve."""

    operator: SparseMatrix
    load: np.ndarray
    boundary_values: dict[int, float]
    mesh: LevelMesh

    def __post_init__(self):
        op = _as_sparse(self.operator)
        load = _frozen(self.load, np.float64)
        n = self.mesh.num_vertices
        if op.shape != (n, n):
            raise UsageError("operator shape does not match the mesh")
        if load.shape != (n,):
            raise UsageError("load length does not match the mesh")
        expected = set(int(i) for i in self.mesh.boundary_indices)
        got = set(int(i) for i in self.boundary_values)
        if expected != got:
            raise UsageError(
                f"boundary values must cover exactly the boundary indices {sorted(expected)}"
            )
        object.__setattr__(self, "operator", op)
        object.__setattr__(self, "load", load)
        object.__setattr__(self, "boundary_values", dict(self.boundary_values))


@dataclass(frozen=True)
class Solution:
    """Nodal solution with solve metadata."""

    values: np.ndarray = field(repr=False)
    method: str
    level: int
    renorm_constant_applied: float | None
    solver_residual: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, np.float64))


def _as_sparse(op) -> SparseMatrix:
    if isinstance(op, StiffnessMatrix):
        return op.matrix
    if isinstance(op, SparseMatrix):
        return op
    raise UsageError("operator must be a SparseMatrix or StiffnessMatrix")


def partition(op, boundary):
    """Split a square operator into interior-interior and interior-boundary
    blocks.

    Returns ``(A_II, A_I0, interior_idx, boundary_idx)``.
    """
    a = _as_sparse(op)
    if a.nrows != a.ncols:
        raise UsageError("partition requires a square operator")
    boundary_idx = np.unique(np.asarray(list(boundary), dtype=np.int64))
    if boundary_idx.size and (boundary_idx.min() < 0 or boundary_idx.max() >= a.nrows):
        raise UsageError("boundary index out of range")
    interior_idx = np.setdiff1d(np.arange(a.nrows), boundary_idx)
    if interior_idx.size == 0:
        raise SolveError("empty interior: every vertex is a boundary vertex")
    csr = a.to_csr()
    a_ii = SparseMatrix.from_scipy(csr[interior_idx][:, interior_idx])
    a_i0 = SparseMatrix.from_scipy(csr[interior_idx][:, boundary_idx])
    return a_ii, a_i0, interior_idx, boundary_idx


def linear_solve(a, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    Guarantees ``|A x - b|_inf <= 1e-10 * max(1, |b|_inf)`` or raises.
    """
    a = _as_sparse(a)
    b = np.asarray(b, dtype=np.float64)
    if a.nrows != a.ncols or b.shape != (a.nrows,):
        raise UsageError("system dimensions do not agree")
    csr = a.to_csr()
    sym_gap = 0.0
    diff = (csr - csr.T).tocoo()
    if diff.nnz:
        sym_gap = float(np.abs(diff.data).max())
    scale = float(np.abs(a.vals).max()) if a.nnz else 0.0
    if sym_gap > 1e-12 * max(scale, 1.0):
        raise SolveError("operator is not symmetric")
    tol = RESIDUAL_BOUND * max(1.0, float(np.abs(b).max()))
    if a.nrows <= DIRECT_SOLVE_LIMIT:
        try:
            lu = spla.splu(csr.tocsc())
            x = lu.solve(b)
        except RuntimeError as exc:
            raise SolveError(f"direct factorization failed: {exc}") from None
        if not np.isfinite(x).all():
            raise SolveError("singular interior block")
        # one step of iterative refinement if rounding left a residual
        r = b - csr @ x
        if np.abs(r).max() > tol:
            x = x + lu.solve(r)
    else:
        x = np.zeros(a.nrows)
        iters, status, _ = _cg_core(
            csr.indptr,
            csr.indices,
            np.ascontiguousarray(csr.data, dtype=np.float64),
            b,
            x,
            CG_RELATIVE_TOLERANCE,
            20 * a.nrows,
        )
        if status == 2:
            raise SolveError("non-positive curvature encountered; operator not SPD")
        if status == 1:
            raise SolveError(f"conjugate gradient did not converge in {iters} iterations")
    residual = float(np.abs(b - csr @ x).max())
    if residual > tol:
        raise SolveError(f"residual {residual:.3e} exceeds the solver contract")
    return x


def solve_dirichlet(
    problem: DirichletProblem,
    method: str = "dirichlet",
    renorm_constant: float | None = None,
) -> Solution:
    """Solve the interior block system and report the solution."""
    mesh = problem.mesh
    a_ii, a_i0, interior_idx, boundary_idx = partition(
        problem.operator, mesh.boundary_indices
    )
    u0 = np.array([problem.boundary_values[int(i)] for i in boundary_idx])
    rhs = problem.load[interior_idx] - a_i0.matvec(u0)
    x = linear_solve(a_ii, rhs)
    residual = float(np.abs(a_ii.matvec(x) - rhs).max())
    values = np.empty(mesh.num_vertices)
    values[boundary_idx] = u0
    values[interior_idx] = x
    return Solution(
        values=values,
        method=method,
        level=mesh.level,
        renorm_constant_applied=renorm_constant,
        solver_residual=residual,
    )
