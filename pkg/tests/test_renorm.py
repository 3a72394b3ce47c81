"""Renormalization estimates and renormalized solves."""

import numpy as np
import pytest

from fraclap.errors import AssemblyError, SolveError, UsageError
from fraclap.geometry import build_level, embed
from fraclap.graphs import graph_laplacian
from fraclap.measures import fd_graph_stiffness, fem_edge_stiffness
from fraclap.renorm import (
    RenormEstimate,
    _operator_and_load,
    _ratio_statistics,
    _solve_model,
    auto_constant,
    default_estimate_pair,
    estimate_energy_ratio,
    estimate_laplacian_ratio,
    renormalize,
    solve_online,
)

SQRT3 = np.sqrt(3.0)


# -- estimators ------------------------------------------------------------------

def test_laplacian_ratio_sierpinski():
    est = estimate_laplacian_ratio("sierpinski", 3)
    assert est.level_pair == (3, 4)
    assert est.direction == "fine_over_coarse"
    assert est.excluded_count == 0
    assert abs(est.max - 5.0) <= 1e-3
    assert abs(est.mean - 5.0) <= 1e-3


def test_energy_ratio_sierpinski():
    est = estimate_energy_ratio("sierpinski", 3, "graph_energy")
    assert abs(est.mean - 5.0 / 3.0) <= 1e-3
    assert abs(est.max - est.min) <= 1e-3 * est.mean


def test_fem_ratios_sierpinski():
    for form in ("fem_edge", "fem_area"):
        est = estimate_energy_ratio("sierpinski", 4, form)
        assert abs(est.mean - 1.25) <= 1e-3, form


def test_fem_edge_ratio_koch():
    est = estimate_energy_ratio("koch", 3, "fem_edge")
    assert abs(est.mean - 16.0 / 9.0) <= 1e-3


def test_fem_edge_ratio_hata():
    est = estimate_energy_ratio("hata2d", 3, "fem_edge")
    assert abs(est.mean - 5.0 / 3.0) <= 1e-3


def test_hata_fd_ratios_positive_and_finite():
    est = estimate_laplacian_ratio("hata2d", 2)
    assert np.isfinite(est.ratios).all()
    assert est.min > 0.0


def test_hata3d_fd_positive_and_stable():
    a = estimate_laplacian_ratio("hata3d", 2)
    b = estimate_laplacian_ratio("hata3d", 3)
    assert a.min > 0.0 and b.min > 0.0
    assert abs(a.mean - b.mean) < 0.5


def test_estimate_statistics_ordering():
    est = estimate_laplacian_ratio("hata2d", 2)
    assert est.max >= est.mean >= est.min


def test_estimate_requires_level_one():
    with pytest.raises(UsageError):
        estimate_laplacian_ratio("sierpinski", 0)


def test_estimate_rejects_unknown_formulation():
    with pytest.raises(UsageError):
        estimate_energy_ratio("sierpinski", 2, "spectral")


def test_fem_area_estimate_requires_cells():
    with pytest.raises(AssemblyError):
        estimate_energy_ratio("koch", 2, "fem_area")


def test_reciprocity_between_fd_and_energy():
    # the two model problems differ only by the measure factor per level
    for n in (3, 4, 5):
        q = estimate_laplacian_ratio("sierpinski", n).mean
        r = estimate_energy_ratio("sierpinski", n, "graph_energy").mean
        assert abs(q / 3.0 - r) <= 1e-6


def test_level_stability():
    cases = [
        ("sierpinski", "fd", (3, 4)),
        ("sierpinski", "graph_energy", (3, 4)),
        ("sierpinski", "fem_edge", (4, 5)),
        ("sierpinski", "fem_area", (4, 5)),
        ("koch", "fem_edge", (3, 4)),
        ("hata2d", "fem_edge", (3, 4)),
    ]
    for family, form, (n1, n2) in cases:
        if form == "fd":
            a = estimate_laplacian_ratio(family, n1).mean
            b = estimate_laplacian_ratio(family, n2).mean
        else:
            a = estimate_energy_ratio(family, n1, form).mean
            b = estimate_energy_ratio(family, n2, form).mean
        assert abs(a - b) <= 1e-3, (family, form)


def test_ratio_field_constancy_on_sierpinski():
    for n in (3, 4, 5):
        est = estimate_laplacian_ratio("sierpinski", n)
        assert est.max - est.min <= 1e-3 * est.mean


def test_scaling_neutrality():
    # multiplying the operator by a constant at both levels cancels exactly
    family, n, form = "sierpinski", 2, "fem_edge"
    coarse, fine = build_level(family, n), build_level(family, n + 1)
    emb = embed(coarse, fine)
    ratios = {}
    for c in (1.0, 7.5):
        zs = []
        for mesh in (coarse, fine):
            stiff, load = _operator_and_load(mesh, form)
            scaled = type(stiff)(stiff.matrix.scaled(c), stiff.formulation, stiff.level)
            zs.append(_solve_model(mesh, scaled, load))
        r, excluded = _ratio_statistics(zs[0], zs[1], emb, coarse.interior_indices)
        assert excluded == 0
        ratios[c] = r
    np.testing.assert_allclose(ratios[7.5], ratios[1.0], rtol=1e-12)


def test_denominator_guard_excludes_near_zeros():
    z_c = np.array([1.0, 1e-20, 2.0, 0.5])
    z_f = np.ones(4)

    class FakeEmb:
        index_map = np.arange(4)

    ratios, excluded = _ratio_statistics(z_c, z_f, FakeEmb, np.arange(4))
    assert excluded == 1
    assert ratios.size == 3


# -- renormalize --------------------------------------------------------------------

def test_renormalize_identity_constant():
    stiff = fd_graph_stiffness(build_level("sierpinski", 2))
    out = renormalize(stiff, 1.0, 2)
    np.testing.assert_array_equal(out.scaled.vals, stiff.matrix.vals)


def test_renormalize_scales_entries():
    stiff = fd_graph_stiffness(build_level("sierpinski", 2))
    out = renormalize(stiff, 5.0, 2)
    np.testing.assert_allclose(out.scaled.vals, 25.0 * stiff.matrix.vals, rtol=1e-15)
    assert out.factor == 25.0


def test_renormalized_edge_stiffness_relation():
    # constant 5/4 on the edge stiffness equals (5/2)^n times the Laplacian
    n = 3
    m = build_level("sierpinski", n)
    out = renormalize(fem_edge_stiffness(m), 1.25, n)
    lap = graph_laplacian(m).scaled(2.5**n)
    gap = np.abs(out.scaled.to_dense() - lap.to_dense()).max()
    assert gap <= 1e-12 * np.abs(out.scaled.vals).max()


def test_renormalize_rejects_nonpositive_constant():
    stiff = fd_graph_stiffness(build_level("koch", 1))
    with pytest.raises(UsageError):
        renormalize(stiff, 0.0, 1)


# -- solve_online ----------------------------------------------------------------------

def _zero_bc(mesh, values=None):
    vals = values if values is not None else [0.0] * mesh.boundary_indices.size
    return {int(i): float(v) for i, v in zip(mesh.boundary_indices, vals)}


def test_homogeneous_solution_independent_of_constant():
    m = build_level("sierpinski", 3)
    g = np.zeros(m.num_vertices)
    h = _zero_bc(m, [1.0, 0.0, 0.0])
    u1 = solve_online("sierpinski", 3, "rfd", 5.0, g, h).values
    u2 = solve_online("sierpinski", 3, "rfd", 0.7, g, h).values
    np.testing.assert_allclose(u1, u2, atol=1e-12)


def test_doubling_constant_scales_forced_solution():
    n = 3
    m = build_level("sierpinski", n)
    g = np.ones(m.num_vertices)
    h = _zero_bc(m)
    u1 = solve_online("sierpinski", n, "rfd", 5.0, g, h).values
    u2 = solve_online("sierpinski", n, "rfd", 10.0, g, h).values
    np.testing.assert_allclose(u2, u1 / 2.0**n, atol=1e-13)


def test_fem_edge_half_load_flag():
    n = 2
    m = build_level("sierpinski", n)
    g = np.ones(m.num_vertices)
    h = _zero_bc(m)
    half = solve_online("sierpinski", n, "rfem1d", 1.25, g, h).values
    full = solve_online("sierpinski", n, "rfem1d", 1.25, g, h,
                        fem_edge_half_load=False).values
    np.testing.assert_allclose(full, 2.0 * half, atol=1e-13)


def test_solve_online_records_metadata():
    m = build_level("koch", 2)
    sol = solve_online("koch", 2, "rfem1d", 16 / 9,
                       np.zeros(m.num_vertices), _zero_bc(m, [1.0, 0.0]))
    assert sol.method == "rfem1d"
    assert sol.level == 2
    assert sol.renorm_constant_applied == pytest.approx(16 / 9)


def test_solve_online_rejects_area_on_curve():
    m = build_level("koch", 2)
    with pytest.raises(AssemblyError):
        solve_online("koch", 2, "rfem2d", 1.0,
                     np.zeros(m.num_vertices), _zero_bc(m, [1.0, 0.0]))


def test_solve_online_rejects_unknown_method():
    m = build_level("koch", 1)
    with pytest.raises(UsageError):
        solve_online("koch", 1, "spectral", 1.0,
                     np.zeros(m.num_vertices), _zero_bc(m, [1.0, 0.0]))


def test_solve_online_boundary_exact():
    m = build_level("sierpinski", 4)
    g = np.ones(m.num_vertices)
    sol = solve_online("sierpinski", 4, "rfem2d", 1.25, g,
                       _zero_bc(m, [1.0, 0.25, -0.5]))
    assert sol.values[0] == 1.0
    assert sol.values[1] == 0.25
    assert sol.values[2] == -0.5


# -- auto constant ------------------------------------------------------------------------

def test_default_estimate_pair():
    assert default_estimate_pair(5) == (3, 4)
    assert default_estimate_pair(3) == (1, 2)
    assert default_estimate_pair(1) == (1, 2)


def test_auto_constant_matches_estimator():
    c, pair = auto_constant("sierpinski", "rfd", 5)
    assert pair == (3, 4)
    assert c == pytest.approx(estimate_laplacian_ratio("sierpinski", 3).mean)
    c, pair = auto_constant("sierpinski", "rfem1d", 6)
    assert c == pytest.approx(estimate_energy_ratio("sierpinski", 4, "fem_edge").mean)
