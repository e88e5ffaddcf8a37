import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from varfrac.domain import (Disk, GridDomain, Interval, Rectangle, build_grid, build_grid_around,
                            build_pairset, integrate, integrate_pairs, pairset,
                            shape_from_spec)
from varfrac.errors import DomainError


def test_one_dimensional_layout():
    g = build_grid(1, (-2, 2), 0.5, Interval(-1, 1))
    assert g.n == 8
    assert g.n_omega == 4
    assert np.all(g.weights == 0.5)
    np.testing.assert_allclose(g.nodes[:, 0], np.arange(-1.75, 2, 0.5))


def test_omega_touching_boundary_rejected():
    with pytest.raises(DomainError, match="touches"):
        build_grid(1, (-1, 1), 0.5, Interval(-1, 1))


@pytest.mark.parametrize("kwargs", [
    {"dim": 1, "box": (-2, 2), "h": 0.3},
    {"dim": 1, "box": (2, -2), "h": 0.5},
    {"dim": 1, "box": (-2, 2), "h": 0.0},
    {"dim": 3, "box": (-2, 2), "h": 0.5},
])
def test_bad_grid_arguments(kwargs):
    with pytest.raises(DomainError):
        build_grid(omega_predicate=Interval(-1, 1), **kwargs)


def test_empty_omega_rejected():
    with pytest.raises(DomainError, match="no grid node"):
        build_grid(1, (-2, 2), 0.5, Interval(0.01, 0.2))


def test_disk_area_against_monte_carlo():
    g = build_grid(2, [(-2, 2), (-2, 2)], 0.25, Disk((0.0, 0.0), 1.0))
    rng = np.random.default_rng(7)
    pts = rng.uniform(-2, 2, size=(400_000, 2))
    mc = 16.0 * np.mean(np.sum(pts**2, axis=1) < 1.0)
    assert abs(g.measure - mc) / mc < 0.05
    assert abs(g.measure - np.pi) / np.pi < 0.05


def test_measure_converges_under_refinement():
    g = build_grid(2, [(-2, 2), (-2, 2)], 0.25, Disk((0.0, 0.0), 1.0))
    fine = g.refine()
    assert abs(fine.measure - np.pi) <= abs(g.measure - np.pi) + 2 * fine.h
    assert abs(fine.measure - g.measure) <= 4 * g.h


def test_invariants_of_built_grid(grid1d):
    lo, hi = grid1d.box[0]
    inner = grid1d.nodes[grid1d.in_omega, 0]
    assert np.all((inner > lo) & (inner < hi))
    assert np.all(grid1d.weights > 0)
    assert grid1d.n_ext > 0


def test_collar_defaults_to_diameter():
    g = build_grid_around(Interval(-1, 1), n=64)
    assert g.box[0] == pytest.approx((-3.0, 3.0))
    assert g.h == pytest.approx(6 / 64)


def test_rectangle_and_shapes_from_spec():
    r = shape_from_spec({"shape": "rectangle", "lo": [0, 0], "hi": [1, 2]})
    assert isinstance(r, Rectangle) and r.dim == 2
    g = build_grid_around(r, h=0.25)
    assert g.measure == pytest.approx(2.0)
    assert isinstance(shape_from_spec({"shape": "disk", "radius": 0.5}), Disk)
    with pytest.raises(DomainError):
        shape_from_spec({"shape": "torus"})


# -- pairs ---------------------------------------------------------------------

def _brute_pairs(g):
    out = []
    for i, j in itertools.product(range(g.n), repeat=2):
        if i != j and (g.in_omega[i] or g.in_omega[j]):
            out.append((i, j))
    return out


def test_pair_count_small_example():
    # n = 8, n_ext = 4: 64 ordered pairs minus 8 diagonal minus 12 off-diagonal
    # exterior x exterior pairs
    g = build_grid(1, (-2, 2), 0.5, Interval(-1, 1))
    ps = build_pairset(g)
    assert (g.n, g.n_ext) == (8, 4)
    assert len(ps) == 44 == len(_brute_pairs(g))


def test_pair_count_all_interior():
    # hypothetical grid without exterior nodes, built past the validator
    g0 = build_grid(1, (-2, 2), 0.5, Interval(-1, 1))
    g = GridDomain(1, g0.box, g0.h, g0.nodes, g0.weights, np.ones(g0.n, dtype=bool))
    assert len(build_pairset(g)) == g.n * g.n - g.n


def test_pairset_exhaustive_n16():
    g = build_grid(1, (-2, 2), 0.25, Interval(-1, 1))
    assert (g.n, g.n_ext) == (16, 8)
    ps = build_pairset(g)
    got = list(zip(ps.i.tolist(), ps.j.tolist()))
    assert got == _brute_pairs(g)  # same set, ascending order
    stored = set(got)
    assert all((j, i) in stored for i, j in got)
    assert all(i != j for i, j in got)
    np.testing.assert_array_equal(ps.weight, ps.weight[ps.swap_index])
    np.testing.assert_array_equal(ps.i[ps.swap_index], ps.j)


def test_q_decomposition(grid1d):
    q = pairset(grid1d, "Q")
    om = pairset(grid1d, "omega")
    mixed = np.sum(grid1d.in_omega[q.i] & ~grid1d.in_omega[q.j])
    assert len(om) + 2 * mixed == len(q)
    assert len(pairset(grid1d, "box")) == grid1d.n * (grid1d.n - 1)


def test_unknown_region():
    g = build_grid(1, (-2, 2), 0.5, Interval(-1, 1))
    with pytest.raises(DomainError):
        build_pairset(g, "everything")


# -- quadrature ------------------------------------------------------------------

def test_integrate_constants_and_odd_function(grid1d):
    assert abs(integrate(grid1d, np.ones(grid1d.n)) - 2.0) <= 2 * grid1d.h
    assert integrate(grid1d, np.zeros(grid1d.n)) == 0.0
    assert abs(integrate(grid1d, grid1d.nodes[:, 0])) < 1e-12


def test_integrate_length_mismatch(grid1d):
    with pytest.raises(DomainError):
        integrate(grid1d, np.ones(3))
    with pytest.raises(DomainError):
        integrate_pairs(pairset(grid1d), np.ones(3))


def test_integrate_pairs_total_weight(grid1d):
    ps = pairset(grid1d)
    assert integrate_pairs(ps, np.ones(len(ps))) == pytest.approx(ps.weight.sum())


@settings(max_examples=25, deadline=None)
@given(lo=st.floats(-2.0, -0.2), width=st.floats(0.3, 2.0), n=st.integers(8, 40))
def test_pairset_invariants_random_intervals(lo, width, n):
    try:
        g = build_grid_around(Interval(lo, lo + width), n=n)
    except DomainError:
        return  # coarse grid with no node inside Omega
    ps = build_pairset(g)
    assert not np.any(~g.in_omega[ps.i] & ~g.in_omega[ps.j])
    assert not np.any(ps.i == ps.j)
    assert len(ps) == g.n**2 - g.n - g.n_ext * (g.n_ext - 1)
    np.testing.assert_array_equal(ps.i[ps.swap_index], ps.j)
