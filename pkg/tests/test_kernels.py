"""Unit tests for the dedup/match/CG kernels, including oracle comparisons
and jit-versus-interpreted equivalence."""

import os
import subprocess
import sys

import numpy as np
import pytest

from fraclap.jit import NUMBA_ENABLED
from fraclap.kernels import _cg_core, _dedup_core, _match_core


def brute_force_dedup(points, tol):
    """Quadratic reference: first-occurrence order, closest match wins."""
    uniq = []
    assign = []
    for p in points:
        best, best_d = -1, np.inf
        for k, q in enumerate(uniq):
            d = np.linalg.norm(p - q)
            if d < best_d:
                best, best_d = k, d
        if best >= 0 and best_d <= tol:
            assign.append(best)
        else:
            uniq.append(p)
            assign.append(len(uniq) - 1)
    return np.array(assign), np.array(uniq)


def clustered_points(rng, n_clusters, per_cluster, dim, spread):
    centers = rng.uniform(-1, 1, size=(n_clusters, dim))
    pts = np.repeat(centers, per_cluster, axis=0)
    pts = pts + rng.uniform(-spread, spread, size=pts.shape)
    return rng.permutation(pts)


@pytest.mark.parametrize("dim", [2, 3])
def test_dedup_matches_brute_force(dim):
    rng = np.random.default_rng(7 + dim)
    tol = 1e-6
    # jitter far below tol/10 so merges are unambiguous
    pts = clustered_points(rng, 60, 4, dim, spread=1e-9)
    assign, uniq_rows, amb_i, amb_j = _dedup_core(np.ascontiguousarray(pts), tol)
    ref_assign, ref_uniq = brute_force_dedup(pts, tol)
    assert amb_i == -1 and amb_j == -1
    assert uniq_rows.size == ref_uniq.shape[0]
    np.testing.assert_array_equal(assign, ref_assign)
    np.testing.assert_allclose(pts[uniq_rows], ref_uniq, rtol=0, atol=0)


def test_dedup_keeps_distant_points_separate():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assign, uniq_rows, amb_i, _ = _dedup_core(pts, 1e-9)
    assert uniq_rows.size == 3
    np.testing.assert_array_equal(assign, [0, 1, 2])
    assert amb_i == -1


def test_dedup_flags_gray_zone_merge():
    tol = 1e-6
    pts = np.array([[0.0, 0.0], [0.5 * tol, 0.0]])
    assign, uniq_rows, amb_i, amb_j = _dedup_core(pts, tol)
    assert uniq_rows.size == 1
    assert (amb_i, amb_j) == (1, 0)


def test_dedup_clean_merge_below_tenth():
    tol = 1e-6
    pts = np.array([[0.0, 0.0], [0.05 * tol, 0.0]])
    assign, uniq_rows, amb_i, _ = _dedup_core(pts, tol)
    assert uniq_rows.size == 1 and amb_i == -1


def test_dedup_separates_just_over_tolerance():
    tol = 1e-6
    pts = np.array([[0.0, 0.0], [1.001 * tol, 0.0]])
    _, uniq_rows, amb_i, _ = _dedup_core(pts, tol)
    assert uniq_rows.size == 2 and amb_i == -1


def test_dedup_first_occurrence_order():
    tol = 1e-6
    pts = np.array([[3.0, 0.0], [1.0, 0.0], [3.0, 0.0], [2.0, 0.0], [1.0, 0.0]])
    assign, uniq_rows, _, _ = _dedup_core(pts, tol)
    np.testing.assert_array_equal(uniq_rows, [0, 1, 3])
    np.testing.assert_array_equal(assign, [0, 1, 0, 2, 1])


def test_match_finds_shared_points():
    rng = np.random.default_rng(11)
    ref = rng.uniform(-1, 1, size=(200, 2))
    perm = rng.permutation(200)[:50]
    query = ref[perm] + rng.uniform(-1e-12, 1e-12, size=(50, 2))
    idx, d2 = _match_core(ref, query, 1e-9)
    np.testing.assert_array_equal(idx, perm)
    assert d2.max() <= 1e-18


def test_match_reports_unmatched():
    ref = np.array([[0.0, 0.0], [1.0, 0.0]])
    query = np.array([[0.5, 0.5]])
    idx, _ = _match_core(ref, query, 1e-9)
    assert idx[0] == -1


def test_match_3d():
    rng = np.random.default_rng(3)
    ref = rng.uniform(-1, 1, size=(100, 3))
    idx, _ = _match_core(ref, ref[::-1].copy(), 1e-12)
    np.testing.assert_array_equal(idx, np.arange(100)[::-1])


def _random_spd_csr(rng, n):
    import scipy.sparse as sp

    a = sp.random(n, n, density=0.1, random_state=np.random.RandomState(5))
    a = a + a.T + n * sp.eye(n)
    return a.tocsr()


def test_cg_matches_dense_solve():
    rng = np.random.default_rng(5)
    a = _random_spd_csr(rng, 80)
    b = rng.normal(size=80)
    x = np.zeros(80)
    iters, status, res = _cg_core(
        a.indptr, a.indices, np.ascontiguousarray(a.data), b, x, 1e-14, 2000
    )
    assert status == 0
    np.testing.assert_allclose(x, np.linalg.solve(a.toarray(), b), atol=1e-10)


def test_cg_zero_rhs():
    import scipy.sparse as sp

    a = sp.eye(4).tocsr()
    b = np.zeros(4)
    x = np.ones(4)
    iters, status, res = _cg_core(
        a.indptr, a.indices, np.ascontiguousarray(a.data), b, x, 1e-12, 10
    )
    assert status == 0 and res == 0.0
    np.testing.assert_array_equal(x, 0.0)


def test_cg_detects_non_spd():
    import scipy.sparse as sp

    a = (-sp.eye(5)).tocsr()
    b = np.ones(5)
    x = np.zeros(5)
    _, status, _ = _cg_core(
        a.indptr, a.indices, np.ascontiguousarray(a.data), b, x, 1e-12, 100
    )
    assert status == 2


@pytest.mark.skipif(not NUMBA_ENABLED, reason="jit and fallback are the same path")
def test_jit_and_interpreted_agree():
    rng = np.random.default_rng(13)
    pts = clustered_points(rng, 40, 3, 3, spread=1e-10)
    tol = 1e-6
    jit_out = _dedup_core(np.ascontiguousarray(pts), tol)
    py_out = _dedup_core.py_func(np.ascontiguousarray(pts), tol)
    for a, b in zip(jit_out, py_out):
        np.testing.assert_array_equal(a, b)


def test_fallback_mode_builds_identical_meshes():
    code = (
        "from fraclap.geometry import build_level\n"
        "m = build_level('sierpinski', 3)\n"
        "print(m.num_vertices, m.num_edges, m.num_cells)\n"
        "print(repr(float(m.vertices.sum())))\n"
    )
    env = dict(os.environ, FRACLAP_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env
    )
    assert out.returncode == 0, out.stderr
    from fraclap.geometry import build_level

    m = build_level("sierpinski", 3)
    lines = out.stdout.strip().splitlines()
    assert lines[0] == f"{m.num_vertices} {m.num_edges} {m.num_cells}"
    assert lines[1] == repr(float(m.vertices.sum()))
