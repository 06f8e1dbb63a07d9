import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from r4bp.equilibria import find_all, find_l2
from r4bp.linstab import (
    DOUBLE,
    QUADRUPLE,
    TWO_PAIRS,
    NotCollinearError,
    analyze,
    analyze_ab,
    charpoly_coefficients,
    discriminant,
    discriminant_at_l2,
    hamiltonian_matrix,
)
from r4bp.model import SystemConfig

MU_B_FROZEN = 0.0027096304892  # golden after the first verified run


def test_matrix_layout_and_trace():
    A = hamiltonian_matrix(0.3, -0.7)
    expected = [[0, 1, 1, 0], [-1, 0, 0, 1], [0.3, 0, 0, 1], [0, -0.7, -1, 0]]
    assert np.array_equal(A, np.array(expected, dtype=float))
    assert np.trace(A) == 0.0


@pytest.mark.parametrize("mu, regime", [(0.001, TWO_PAIRS), (0.019, QUADRUPLE), (0.2, QUADRUPLE)])
def test_regime_at_l2(mu, regime):
    cfg = SystemConfig(mu)
    lin = analyze(cfg, find_l2(cfg))
    assert lin.regime == regime
    if regime == TWO_PAIRS:
        assert all(abs(z.real) < 1e-12 for z in lin.eigenvalues)
    else:
        assert lin.alpha > 0 and lin.omega > 0


def test_roots_satisfy_quartic(cfg019, l2_019):
    lin = analyze(cfg019, l2_019)
    c = charpoly_coefficients(lin.a, lin.b)
    for z in lin.eigenvalues:
        assert abs(np.polyval(c, z)) < 1e-10
    # numpy agrees on the spectrum
    ref = np.sort_complex(np.linalg.eigvals(lin.matrix_A))
    assert np.allclose(np.sort_complex(np.array(lin.eigenvalues)), ref, atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_spectrum_symmetric(a, b):
    lams = np.array(analyze_ab(a, b).eigenvalues)
    for z in lams:
        assert np.min(np.abs(lams + z)) < 1e-7
        assert np.min(np.abs(lams - np.conj(z))) < 1e-7


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_discriminant_identity(a, b):
    _, _, p, _, q = charpoly_coefficients(a, b)
    assert discriminant(a, b) == pytest.approx(p * p - 4 * q, abs=1e-10)


def test_discriminant_zero_at_origin():
    assert discriminant(0.0, 0.0) == 0.0


def test_not_collinear_rejected(cfg019):
    off = next(p for p in find_all(cfg019) if p.label != "collinear")
    with pytest.raises(NotCollinearError):
        analyze(cfg019, off)


def test_mu_b(critical):
    assert abs(critical.mu_b - 0.0027) < 5e-4
    assert critical.mu_b == pytest.approx(MU_B_FROZEN, abs=1e-9)
    assert abs(critical.discriminant) < 1e-8
    assert discriminant_at_l2(critical.mu_b - 1e-4) > 0
    assert discriminant_at_l2(critical.mu_b + 1e-4) < 0


def test_double_pair_at_mu_b(critical):
    lin = analyze_ab(critical.a, critical.b)
    for z in lin.eigenvalues:
        assert abs(z * z + critical.omega**2) < 1e-6
    # not semisimple: A - i omega I has rank 3
    sv = np.linalg.svd(lin.matrix_A - 1j * critical.omega * np.eye(4), compute_uv=False)
    assert sv[2] > 1e-3 and sv[3] < 1e-6


def test_regime_changes_with_sign_of_d():
    for mu in np.linspace(0.0015, 0.004, 11):
        lin = analyze(SystemConfig(mu), find_l2(SystemConfig(mu)))
        assert (lin.regime == TWO_PAIRS) == (lin.discriminant > 0)


def test_exact_zero_discriminant_is_double():
    assert analyze_ab(0.0, 0.0).regime == DOUBLE
    assert analyze_ab(0.0, 0.0).omega == pytest.approx(1.0)
