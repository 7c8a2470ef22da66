import numpy as np
import pytest

from msf import functions as fn
from msf import operators as op
from msf.assembly import (ResonanceError, assemble, axis_hamiltonians, build_Hs, build_integrals, build_K,
                          commutes_residual, fit_commutator_constant, minimal_resonance, resonance_check,
                          superintegrability_residuals)
from msf.deformation import DeformationProfile
from msf.master import catalog_lookup, superpotential


@pytest.fixture(scope="module")
def asm1(ex1, prof1):
    return assemble(ex1, 2.0, profile=prof1)


@pytest.fixture(scope="module")
def asm2(ex2, prof2):
    return assemble(ex2, 2.0, profile=prof2)


def test_separable_hamiltonian_at_origin(ex1, prof1):
    Hs = build_Hs(ex1, prof1)
    assert Hs.coefficient(0, 0, ([0.0], [0.0]))[0] == pytest.approx(-1.5, abs=1e-12)
    assert Hs.coefficient(2, 0, ([0.3], [0.7]))[0] == -1.0
    assert Hs.coefficient(0, 2, ([0.3], [0.7]))[0] == -1.0
    assert Hs.coefficient(1, 1, ([0.3], [0.7]))[0] == 0.0


def test_undeformed_limit_is_symmetric(ex1, W1):
    Hs = build_Hs(ex1, DeformationProfile.undeformed(W1))
    pts = (np.linspace(-2, 2, 9), np.linspace(2, -2, 9))
    swapped = (pts[1], pts[0])
    np.testing.assert_allclose(Hs.coefficient(0, 0, pts), Hs.coefficient(0, 0, swapped), atol=1e-12)


def test_shifted_oscillator_partner_value():
    sys = catalog_lookup("oscillator-like", alpha=1.0, beta=2.0, m=1)
    W = superpotential(sys).W
    Hr, _ = axis_hamiltonians(sys, DeformationProfile.undeformed(W))
    assert float(Hr.coeff(0)(1.0)) == pytest.approx(-1.0, abs=1e-12)


def test_K_commutes_with_Hs(asm1, asm2):
    for asm in (asm1, asm2):
        assert asm.K.leading_order()[0] == 2
        assert commutes_residual(asm.Hs, asm.K, asm.probe_points()) < 1e-12


def test_K_application_oracle(asm1, rng):
    g = fn.exp_(fn.poly([0.0, 0.1, -0.5]))
    h = fn.exp_(fn.poly([0.0, -0.2, -0.4]))
    rs, rps = rng.uniform(-2, 2, 10), rng.uniform(-2, 2, 10)
    got = op.apply(asm1.K, g, (rs, rps), h)
    want = op.apply(asm1.Hr, g, rs) * h(rps) - g(rs) * op.apply(asm1.Hrp, h, rps)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-12)


def test_K_needs_two_axes(asm1):
    with pytest.raises(op.AxisError):
        build_K(asm1.Hr, asm1.Hr)


@pytest.mark.parametrize("m,n,lx,ly,expected", [
    (1, 1, 2.0, 2.0, True),
    (1, 2, 4.0, 2.0, True),
    (1, 1, 2.0, 4.0, False),
])
def test_resonance_examples(m, n, lx, ly, expected):
    assert resonance_check(m, n, lx, ly) is expected


def test_resonance_rejects_nonpositive():
    with pytest.raises(ValueError):
        resonance_check(0, 1, 2.0, 2.0)


def test_minimal_resonance():
    res = minimal_resonance(4.0, 6.0)
    assert (res.m, res.n) == (3, 2)
    assert res.satisfied
    with pytest.raises(ResonanceError):
        minimal_resonance(1.0, np.sqrt(2.0) * 1000)


def test_integral_orders(asm1, asm2):
    assert asm1.orders == (2, 3, 4)
    assert asm2.orders[0] == 2 and asm2.orders[1] in (7, 8) and asm2.orders[2] == 8
    assert asm1.a1_top_cancelled
    assert asm1.naive_order_A1 == 4


def test_same_axis_ladders_rejected(W1, prof1):
    X = op.ladder_pair(W1, op.R)
    Y = (op.make_S_ladders(W1, prof1, 1, op.R), op.make_S_ladders(W1, prof1, -1, op.R))
    with pytest.raises(op.AxisError):
        build_integrals(X, Y, 1, 1)


def test_integrals_refuse_broken_resonance(W1, prof1):
    X = op.ladder_pair(W1, op.R)
    Y = (op.make_S_ladders(W1, prof1, 1, op.RP), op.make_S_ladders(W1, prof1, -1, op.RP))
    with pytest.raises(ResonanceError):
        build_integrals(X, Y, 1, 1, spacings=(2.0, 4.0))


def test_superintegrability_oscillator_like(asm1):
    res = superintegrability_residuals(asm1)
    for key in ("[Hs,K]", "[Hs,A1]", "[Hs,A2]", "[K,A1]-cA2"):
        assert res[key] < 1e-8, key
    assert res["c"] == pytest.approx(4.0, rel=1e-9)


def test_fitted_constant_recovers_a_scaled_target(asm1):
    pts = asm1.probe_points(50, seed=3)
    c, res = fit_commutator_constant(asm1.K, asm1.A1, asm1.A2 * 0.5, pts)
    assert c == pytest.approx(8.0, rel=1e-9)
    assert res < 1e-8


def test_half_line_integrals_do_not_commute(asm2):
    # the third-order M ladders do not step H2 on the half line, so the assembled integrals fail
    res = superintegrability_residuals(asm2)
    assert res["[Hs,K]"] < 1e-12
    assert res["[Hs,A1]"] > 1.0
    assert res["[Hs,A2]"] > 1.0
