import math

import numpy as np
import pytest

from r4bp.linstab import analyze_ab, find_mu_b, hamiltonian_matrix, second_partials_at_l2
from r4bp.nf_algebra import CartesianPoly4, LaurentFourierPoly as Poly, poisson_bracket, split_mean
from r4bp.normal_form import (
    J4,
    NormalFormError,
    P_ZERO_ENTRIES,
    ROUNDED_TAYLOR,
    TruncatedSystem,
    VersalParams,
    burgoyne_decompose,
    deprit_normal_form,
    lie_transform_defect,
    normal_matrix,
    rescale_orders,
    versal_charpoly,
    versal_eigenvalues,
    versal_generators,
    versal_matrix,
    versal_params,
    versal_polar_hamiltonian,
)

P_REFERENCE = {(0, 0): -0.3928, (0, 3): -0.7631, (1, 1): -0.9680, (1, 2): -1.8807,
               (2, 1): 2.005, (2, 2): 1.3490, (3, 0): 0.8134, (3, 3): 0.5474}
H_REFERENCE = (2.19104, 1.41252, 16.2535, 8.35177, 4.24874, 0.00392, 2.82504, 4.24874, 1.41252)

# golden values from the first verified run (all other entries oracle-checked below)
H_ROUNDED_FROZEN = (2.19144, 1.41263, 16.2552, 8.35247, 4.24919, 0.0039118, 2.82525, 4.24919, 1.41263)
H_COMPUTED_FROZEN = (2.20221, 1.41264, 16.3319, 8.38811, 4.25159, -0.016999, 2.82527, 4.25159, 1.41264)


def _h_close(got, ref, h6_abs=5e-3):
    for k, (g, p) in enumerate(zip(got, ref)):
        if k == 5:
            assert abs(g - p) < h6_abs, (k, g, p)
        else:
            assert abs(g - p) <= 5e-2 * abs(p), (k, g, p)


def test_linear_normal_form(nf_computed):
    nf = nf_computed.linear
    assert nf.N31 == pytest.approx(-1.82, abs=5e-3)
    assert nf.eps_sign == -1
    res = nf.invariant_residuals()
    for key in ("A=Sigma+N", "N^2=0", "[Sigma,N]=0", "P^T J P=J"):
        assert res[key] < 1e-10, key
    assert res["B pattern"] < 1e-8
    assert res["P sparsity"] < 1e-10
    assert np.abs(nf.N).max() > 0.1


def test_p_matches_reference(nf_computed):
    P = nf_computed.linear.P
    for (i, j), v in P_REFERENCE.items():
        assert abs(P[i, j] - v) <= 5e-2 * abs(v), (i, j, P[i, j])
    for i, j in P_ZERO_ENTRIES:
        assert abs(P[i, j]) < 1e-10


def test_b_pattern(nf_computed):
    nf = nf_computed.linear
    B = np.linalg.solve(nf.P, nf.A @ nf.P)
    w = nf.omega
    assert np.allclose(B, normal_matrix(w, nf.eps_sign), atol=1e-8)
    assert B[1, 0] == pytest.approx(w) and B[2, 0] == pytest.approx(-1)


def test_burgoyne_needs_resonance(critical):
    a, b, _ = second_partials_at_l2(0.019)
    with pytest.raises(NormalFormError):
        burgoyne_decompose(hamiltonian_matrix(a, b), critical.omega)


def test_taylor_coefficients_at_mu_b(nf_computed):
    for k, v in ROUNDED_TAYLOR.items():
        assert nf_computed.taylor[k] == pytest.approx(v, rel=1e-2), k


def test_first_order_is_secular_free(nf_computed):
    r = nf_computed.result
    star, _ = split_mean(r.H1_polar)
    assert star.max_abs_coef() < 1e-12
    assert not r.H01


def test_h_from_rounded_taylor(nf_rounded):
    h = nf_rounded.result.h
    _h_close(h, H_REFERENCE)
    assert h == pytest.approx(H_ROUNDED_FROZEN, rel=1e-4)


def test_h_from_full_precision_taylor(nf_computed):
    h = nf_computed.result.h
    assert h == pytest.approx(H_COMPUTED_FROZEN, rel=1e-4, abs=1e-6)
    # all entries but h6 agree with the reference ones; h6 is a near-cancellation
    ref = list(H_REFERENCE)
    got = list(h)
    del ref[5], got[5]
    for g, p in zip(got, ref):
        assert abs(g - p) <= 5e-2 * abs(p)


def test_h6_sensitivity_to_taylor_rounding(nf_computed, nf_rounded):
    # rounding the Taylor input to four digits moves h6 by ~0.02 while h1
    # moves by 0.5 percent; the reference h6 is in the rounded regime
    d6 = abs(nf_computed.result.h[5] - nf_rounded.result.h[5])
    d1 = abs(nf_computed.result.h[0] - nf_rounded.result.h[0])
    assert d6 > 1e-2 and d1 < 2e-2
    assert abs(nf_rounded.result.h[5] - H_REFERENCE[5]) < 1e-4


def test_h_structural_symmetries(nf_computed):
    h = nf_computed.result.h
    assert h[1] == pytest.approx(h[8], rel=1e-10)
    assert h[4] == pytest.approx(h[7], rel=1e-10)
    assert h[6] == pytest.approx(2 * h[1], rel=1e-10)


def test_h02_commutes_with_theta(nf_computed):
    H02 = nf_computed.result.H02
    assert H02.is_theta_free()
    assert not poisson_bracket(H02, Poly.Theta())


def test_zero_perturbation(nf_computed):
    res = deprit_normal_form(nf_computed.linear, CartesianPoly4(), CartesianPoly4())
    assert not res.W1 and not res.W2 and not res.H02


def test_lie_transform_third_order(nf_computed):
    res = nf_computed.result
    rng = np.random.default_rng(0)
    ys = [np.array([rng.uniform(0.3, 1.0), rng.uniform(0, 2 * np.pi), rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3)])
          for _ in range(3)]
    for y in ys:
        ratios = [lie_transform_defect(res, y, e) / e**3 for e in (1e-2, 1e-3, 1e-4)]
        # bounded and settling, not growing like 1/eps
        assert max(ratios) < 50, ratios
        assert ratios[2] < 2 * ratios[1] + 1e-3, ratios


def test_versal_params_simple():
    nu = versal_params(0.0, 0.0)
    assert nu.nu1 == pytest.approx(0.0, abs=1e-15) and nu.nu2 == pytest.approx(0.0, abs=1e-15)
    assert versal_charpoly(nu) == pytest.approx((1, 0, 2, 0, 1))


def test_nu2_vanishes_at_mu_b(critical):
    assert abs(versal_params(critical.a, critical.b).nu2) < 1e-6


def _mus_near_mu_b(mu_b):
    return np.linspace(mu_b * 0.7, mu_b * 1.3, 20)


def test_versal_eigenvalue_formula(critical):
    for mu in _mus_near_mu_b(critical.mu_b):
        a, b, _ = second_partials_at_l2(mu)
        ref = np.array(analyze_ab(a, b).eigenvalues)
        got = versal_eigenvalues(versal_params(a, b))
        for z in got:
            assert np.min(np.abs(ref - z)) < 1e-6, (mu, z)


def test_versal_charpoly_matches(critical):
    for mu in _mus_near_mu_b(critical.mu_b):
        a, b, _ = second_partials_at_l2(mu)
        nu = versal_params(a, b)
        s = (1 + nu.nu1) ** 2
        assert 2 * (s + nu.nu2) == pytest.approx(2 - a - b, abs=1e-10)
        assert (s - nu.nu2) ** 2 == pytest.approx(a + b + a * b + 1, abs=1e-10)
        M = versal_matrix(nu)
        assert np.allclose(np.poly(M), versal_charpoly(nu), atol=1e-10)


def test_versal_unfolding_directions():
    e1, e2 = versal_generators()
    B0 = versal_matrix(VersalParams(0.0, 0.0))
    for e in (e1, e2):
        assert np.abs(B0.T @ e - e @ B0.T).max() == 0.0
    nu = VersalParams(0.03, -0.02)
    assert np.allclose(versal_matrix(nu), B0 + nu.nu1 * e1 + nu.nu2 * e2)
    assert np.allclose(np.poly(B0), [1, 0, 2, 0, 1])
    # Hamiltonian matrix of a quadratic form: J S symmetric-generated
    S = J4.T @ versal_matrix(nu)
    assert np.allclose(S, S.T)


def test_versal_polar_hamiltonian():
    nu = VersalParams(0.1, -0.2)
    H = versal_polar_hamiltonian(nu)
    assert H.coefficient(0, 1, 1) == 0
    assert H.coefficient(2, 0, 0) == pytest.approx(-0.1)
    assert H.coefficient(0, 0, 1) == pytest.approx(1.1)


def test_truncated_equilibria():
    sysm = TruncatedSystem(-0.3, 2.19104)
    r_star = math.sqrt(0.3 / (4 * 2.19104))
    eqs = sysm.equilibria()
    assert eqs[-1] == pytest.approx(r_star, rel=1e-14)
    assert abs(sysm.radial_force(r_star)) < 1e-14
    assert sysm.classify() == "connected"
    assert TruncatedSystem(0.0, 2.19).classify() == "shrunk"
    assert TruncatedSystem(0.2, 2.19).equilibria() == [0.0]
    loop = sysm.homoclinic_loop()
    assert len(loop) and np.allclose(sysm.energy(loop[:, 0], loop[:, 1]), 0.0, atol=1e-12)
    assert len(TruncatedSystem(0.1, 2.19).homoclinic_loop()) == 0


def test_truncated_with_angular_momentum():
    sysm = TruncatedSystem(-0.3, 2.0, Theta=0.01)
    for r in sysm.equilibria():
        assert abs(sysm.radial_force(r)) < 1e-12
    with pytest.raises(ValueError):
        TruncatedSystem(-0.3, -1.0)


def test_rescaling_gives_truncated_model(nf_computed):
    H02 = nf_computed.result.H02
    h1 = nf_computed.result.h[0]
    nu = -0.2
    orders = rescale_orders(nu, H02)
    assert min(orders) == 0
    K = orders[1]
    expected = Poly.R(2) / 2 + Poly.monomial(i=-2, k=2) / 2 + Poly.r(2).scale(nu / 2) + Poly.r(4).scale(h1)
    assert (K - expected).max_abs_coef() < 1e-12
    assert orders[0] == Poly.Theta()
    assert set(orders) == {0, 1, 2, 3, 4, 5}
