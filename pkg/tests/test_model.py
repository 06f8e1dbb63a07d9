import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from r4bp.model import (
    CollisionError,
    State,
    SystemConfig,
    effective_potential,
    gradient,
    hamiltonian_from_jacobi,
    hamiltonian_taylor_coefficients,
    jacobi_constant,
    jacobi_from_hamiltonian,
    make_rhs,
    potential_derivatives,
    reflect_trajectory,
    vector_field,
)


def test_primary_layout_and_masses():
    cfg = SystemConfig(0.019)
    (p1, m1), (p2, m2), (p3, m3) = cfg.primaries
    assert m1 + m2 + m3 == pytest.approx(1.0)
    assert m2 == m3 == 0.019
    # centre of mass at the origin, equilateral triangle of unit side
    com = sum(m * np.array(p) for p, m in cfg.primaries)
    assert np.allclose(com, 0.0, atol=1e-15)
    pts = cfg.positions
    sides = [np.linalg.norm(pts[i] - pts[j]) for i, j in ((0, 1), (1, 2), (0, 2))]
    assert np.allclose(sides, 1.0)


@pytest.mark.parametrize("mu", [-0.01, 0.34, float("nan")])
def test_config_rejects_bad_mu(mu):
    with pytest.raises(ValueError):
        SystemConfig(mu)


def test_omega_rotating_kepler():
    assert effective_potential(SystemConfig(0.0), (1.0, 0.0)) == pytest.approx(1.5, abs=1e-15)


def test_omega_equal_masses_at_centre():
    assert effective_potential(SystemConfig(1 / 3), (0.0, 0.0)) == pytest.approx(math.sqrt(3), rel=1e-14)


def test_omega_against_high_precision_sum():
    cfg = SystemConfig(0.019)
    mpmath.mp.dps = 40
    mu = mpmath.mpf("0.019")
    s3 = mpmath.sqrt(3)
    x, y = mpmath.mpf("1.5"), mpmath.mpf("0.5")
    prim = [((s3 * mu, 0), 1 - 2 * mu), ((-s3 * (1 - 2 * mu) / 2, mpmath.mpf(-0.5)), mu),
            ((-s3 * (1 - 2 * mu) / 2, mpmath.mpf(0.5)), mu)]
    ref = (x * x + y * y) / 2 + sum(m / mpmath.sqrt((x - u) ** 2 + (y - v) ** 2) for (u, v), m in prim)
    assert effective_potential(cfg, (1.5, 0.5)) == pytest.approx(float(ref), rel=1e-14)


def test_collision_raises():
    cfg = SystemConfig(0.019)
    with pytest.raises(CollisionError) as info:
        effective_potential(cfg, tuple(cfg.positions[1]))
    assert info.value.primary == 1


def test_vector_field_rotating_kepler_rest_point():
    assert vector_field(SystemConfig(0.0), (1.0, 0.0, 0.0, 0.0)) == pytest.approx((0.0, 0.0, 0.0, 0.0), abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(
    mu=st.floats(0.001, 1 / 3),
    x=st.floats(-2, 2),
    y=st.floats(-2, 2),
)
def test_gradient_matches_finite_differences(mu, x, y):
    cfg = SystemConfig(mu)
    if np.min(np.hypot(x - cfg.positions[:, 0], y - cfg.positions[:, 1])) < 0.05:
        return
    h = 1e-6
    fx = (effective_potential(cfg, (x + h, y)) - effective_potential(cfg, (x - h, y))) / (2 * h)
    fy = (effective_potential(cfg, (x, y + h)) - effective_potential(cfg, (x, y - h))) / (2 * h)
    gx, gy = gradient(cfg, (x, y))
    scale = max(1.0, abs(gx), abs(gy))
    assert abs(gx - fx) < 1e-6 * scale
    assert abs(gy - fy) < 1e-6 * scale


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-1.8, 1.8), y=st.floats(-1.8, 1.8))
def test_potential_derivatives_match_finite_differences(x, y):
    cfg = SystemConfig(0.019)
    if np.min(np.hypot(x - cfg.positions[:, 0], y - cfg.positions[:, 1])) < 0.2:
        return
    h = 1e-4
    d = potential_derivatives(cfg, (x, y), 4)
    for n in range(1, 5):
        for i in range(n + 1):
            j = n - i
            # differentiate the order-(n-1) partial numerically
            if i > 0:
                lo = potential_derivatives(cfg, (x - h, y), max(n - 1, 1))[(i - 1, j)]
                hi = potential_derivatives(cfg, (x + h, y), max(n - 1, 1))[(i - 1, j)]
            else:
                lo = potential_derivatives(cfg, (x, y - h), max(n - 1, 1))[(i, j - 1)]
                hi = potential_derivatives(cfg, (x, y + h), max(n - 1, 1))[(i, j - 1)]
            fd = (hi - lo) / (2 * h)
            assert abs(d[(i, j)] - fd) <= 1e-5 * max(1.0, abs(d[(i, j)]))


def test_mixed_partial_vanishes_on_axis(l2_019, cfg019):
    d = potential_derivatives(cfg019, l2_019.position, 4)
    for i, j in d:
        if j % 2:
            assert abs(d[(i, j)]) < 1e-12


def test_taylor_coefficients_at_l2(critical):
    cfg = SystemConfig(critical.mu_b)
    c3 = hamiltonian_taylor_coefficients(cfg, (critical.x_l2, 0.0), 3)
    c4 = hamiltonian_taylor_coefficients(cfg, (critical.x_l2, 0.0), 4)
    ref = {(3, 0): -0.962, (1, 2): 1.370, (4, 0): -1.007, (2, 2): 3.150, (0, 4): -0.4686}
    got = {**c3, **c4}
    for k, v in ref.items():
        assert got[k] == pytest.approx(v, rel=5e-2)


def test_taylor_convention_is_minus_u_over_factorials(cfg019, l2_019):
    d = potential_derivatives(cfg019, l2_019.position, 4)
    c = hamiltonian_taylor_coefficients(cfg019, l2_019.position, 4)
    assert c[(2, 2)] == pytest.approx(-d[(2, 2)] / 4)
    assert c[(4, 0)] == pytest.approx(-d[(4, 0)] / 24)


def test_jacobi_examples(l2_019, cfg019):
    s = State(l2_019.x, 0.0, 0.0, 0.0)
    assert jacobi_constant(cfg019, s) == pytest.approx(2 * effective_potential(cfg019, l2_019.position))
    assert jacobi_constant(SystemConfig(1 / 3), (0, 0, 1, 0)) == pytest.approx(2 * math.sqrt(3) - 1, rel=1e-14)
    assert jacobi_from_hamiltonian(hamiltonian_from_jacobi(3.1)) == pytest.approx(3.1)


def test_reflection_examples():
    assert reflect_trajectory((1, 0, 0, 0.3)) == (1, 0, 0, 0.3)
    assert reflect_trajectory((0.5, 0.2, -0.1, 0.4)) == (0.5, -0.2, 0.1, 0.4)


@settings(max_examples=50, deadline=None)
@given(st.tuples(*[st.floats(-1.5, 1.5)] * 4))
def test_vector_field_is_reversible(s):
    cfg = SystemConfig(0.019)
    if np.min(np.hypot(s[0] - cfg.positions[:, 0], s[1] - cfg.positions[:, 1])) < 0.05:
        return
    f = np.array(vector_field(cfg, s))
    g = np.array(vector_field(cfg, reflect_trajectory(s)))
    R = np.diag([1, -1, -1, 1])
    assert np.allclose(g, -R @ f, atol=1e-12)
    assert np.allclose(make_rhs(cfg)(0.0, np.array(s)), f, atol=1e-12)
