import numpy as np
import pytest

from r4bp.equilibria import find_all, find_collinear, find_l2, hill_regions
from r4bp.model import SystemConfig, effective_potential, gradient, potential_derivatives

X_L2_019 = -0.97889578383541342  # frozen after the first verified run


def test_census_at_mu_019(cfg019):
    pts = find_all(cfg019)
    assert len(pts) == 8
    assert sum(p.label == "collinear" for p in pts) == 2
    for p in pts:
        assert np.hypot(*gradient(cfg019, p.position)) < 1e-12
        assert p.jacobi_value == pytest.approx(2 * effective_potential(cfg019, p.position))


def test_set_closed_under_reflection(cfg019):
    pts = {(round(p.x, 9), round(p.y, 9)) for p in find_all(cfg019)}
    assert pts == {(x, round(-y, 9) + 0.0) for x, y in pts}


def test_equal_masses_census():
    pts = find_all(SystemConfig(1 / 3))
    assert len(pts) == 10
    # three symmetry axes; the x-axis carries the centroid and three more
    col = [p for p in pts if p.label == "collinear"]
    assert len(col) == 4
    assert any(abs(p.x) < 1e-12 for p in col)


def test_rotating_kepler_axis_roots():
    cfg = SystemConfig(0.0)
    for x in (1.0, -1.0):
        assert gradient(cfg, (x, 0.0))[0] == pytest.approx(0.0, abs=1e-15)


def test_l2_is_far_side_point(cfg019, l2_019):
    col = find_collinear(cfg019)
    assert l2_019.x == min(p.x for p in col)
    assert l2_019.x < cfg019.positions[1, 0]
    assert l2_019.x == pytest.approx(X_L2_019, abs=1e-12)


def test_l2_stable_under_grid_refinement(cfg019):
    coarse = find_collinear(cfg019, n_grid=1500)
    fine = find_collinear(cfg019, n_grid=24000)
    assert len(coarse) == len(fine)
    for a, b in zip(coarse, fine):
        assert abs(a.x - b.x) < 1e-10


def test_mu_out_of_range():
    with pytest.raises(ValueError):
        find_collinear(SystemConfig(0.0))


def test_hill_large_c_four_components(cfg019):
    hr = hill_regions(cfg019, 1e3, bounds=(-40, 40, -40, 40), resolution=801)
    assert hr.n_allowed_components == 4


def test_hill_below_minimum_is_all_allowed(cfg019):
    cmin = min(p.jacobi_value for p in find_all(cfg019))
    hr = hill_regions(cfg019, cmin - 1e-3, resolution=201)
    assert hr.n_forbidden_cells == 0


def test_hill_l2_on_boundary(cfg019, l2_019):
    # L2 is a local minimum of Omega here, so at C(L2) the forbidden island
    # around it shrinks to the point; raising C by one cell's worth of growth
    # must forbid a cell next to L2, lowering it must leave all allowed
    d = potential_derivatives(cfg019, l2_019.position, 2)
    assert 1 + d[(2, 0)] > 0 and 1 + d[(0, 2)] > 0
    res = 401
    h = 4.0 / (res - 1)
    grow = (1 + max(d[(2, 0)], d[(0, 2)])) * h * h
    C = l2_019.jacobi_value
    up = hill_regions(cfg019, C + grow, resolution=res)
    i, j = up.cell_index(l2_019.x, 0.0)
    assert not up.allowed[i - 1:i + 2, j - 1:j + 2].all()
    down = hill_regions(cfg019, C - 1e-9, resolution=res)
    assert down.allowed[i - 1:i + 2, j - 1:j + 2].all()


def test_hill_resolution_validation(cfg019):
    with pytest.raises(ValueError):
        hill_regions(cfg019, 3.0, resolution=1)


def test_component_count_changes_only_at_critical_values(cfg019):
    crit = sorted({round(p.jacobi_value, 10) for p in find_all(cfg019)})
    Cs = np.linspace(crit[0] - 0.3, crit[-1] + 0.3, 41)
    counts = [hill_regions(cfg019, C, bounds=(-3, 3, -3, 3), resolution=241).n_allowed_components for C in Cs]
    for k in range(len(Cs) - 1):
        if counts[k] != counts[k + 1]:
            assert any(Cs[k] <= c <= Cs[k + 1] for c in crit), (Cs[k], Cs[k + 1])
