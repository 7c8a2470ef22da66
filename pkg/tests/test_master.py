import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msf import functions as fn
from msf.master import (FULL_LINE, HALF_LINE, CatalogError, WeightSpec, catalog_families, catalog_lookup,
                        change_of_variable, energy, generic_system, ladder_spacing, partner_potentials,
                        potential_vm, shape_invariance_check, superpotential)


def test_catalog_example1(ex1):
    assert ex1.A == (1.0, 0.0, 0.0)
    assert ex1.weight.kind == "gaussian"
    assert ex1.r_domain == fn.REAL_LINE
    x = np.linspace(-2, 2, 5)
    assert np.allclose(ex1.weight.value(x), np.exp(-x ** 2))


def test_catalog_example2():
    s = catalog_lookup("radial-oscillator-like", alpha=0.5, beta=1.0, m=1)
    assert s.A == (0.0, 1.0, 0.0)
    assert s.x_interval.lo == 0.0 and s.x_interval.lo_closed
    x = np.array([0.5, 1.0, 3.0])
    assert np.allclose(s.weight.value(x), x ** 0.5 * np.exp(-x))


def test_shifted_oscillator_alias():
    a = catalog_lookup("shifted-oscillator", omega=2.0, b=0.0)
    b = catalog_lookup("oscillator-like", beta=2.0, alpha=0.0)
    assert a == b
    r = np.linspace(-3, 3, 7)
    assert np.allclose(partner_potentials(superpotential(a))[1](r), r ** 2 - 1)


@pytest.mark.parametrize("kw", [dict(beta=0.0), dict(beta=-1.0)])
def test_catalog_rejects_bad_beta(kw):
    with pytest.raises((CatalogError, ValueError)):
        catalog_lookup("oscillator-like", **kw)


def test_catalog_rejects_alpha():
    with pytest.raises((CatalogError, ValueError)):
        catalog_lookup("radial-oscillator-like", alpha=-1.0, beta=1.0)


def test_unknown_family():
    with pytest.raises(CatalogError):
        catalog_lookup("morse")


def test_catalog_listing():
    assert {"oscillator-like", "radial-oscillator-like", "shifted-oscillator"} <= set(catalog_families())


def test_change_of_variable_maps():
    s = catalog_lookup("oscillator-like", beta=2.0, alpha=1.0)
    assert change_of_variable(s).x_of_r(3.0) == pytest.approx(2.0)
    s2 = catalog_lookup("radial-oscillator-like", alpha=0.5, beta=1.0)
    assert change_of_variable(s2).x_of_r(2.0) == pytest.approx(1.0)
    s0 = catalog_lookup("oscillator-like", beta=2.0, alpha=0.0)
    r = np.linspace(-2, 2, 9)
    assert np.array_equal(change_of_variable(s0).x_of_r(r), r)


def test_generic_change_of_variable_is_sinh():
    # A = 1 + x^2 gives dx/dr = sqrt(1 + x^2), x(0) = 0, so x = sinh r
    s = generic_system((1.0, 0.0, 1.0), WeightSpec("gaussian", 0.0, 1.0), fn.REAL_LINE, x_ref=0.0,
                       r_window=(-3.0, 3.0))
    cov = change_of_variable(s)
    r = np.linspace(-2.5, 2.5, 11)
    assert np.allclose(cov.x_of_r(r), np.sinh(r), rtol=1e-9, atol=1e-10)
    assert np.max(np.abs(cov.x_of_r.derivative()(r) - np.sqrt(1 + cov.x_of_r(r) ** 2))) < 1e-9


def test_negative_master_function_rejected():
    with pytest.raises(CatalogError):
        generic_system((-1.0, 0.0, 1.0), WeightSpec("gaussian", 0.0, 1.0), fn.REAL_LINE)


def test_superpotential_examples():
    W = superpotential(catalog_lookup("oscillator-like", beta=2.0, alpha=0.0)).W
    assert W(1.5) == pytest.approx(1.5)
    W = superpotential(catalog_lookup("radial-oscillator-like", alpha=0.5, beta=4.0, m=1)).W
    assert W(1.0) == pytest.approx(0.0, abs=1e-15)
    r = np.linspace(0.3, 4, 20)
    assert np.allclose(W(r), -1 / r + r)
    W = superpotential(catalog_lookup("oscillator-like", beta=2.0, alpha=1.0)).W
    assert W(1.0) == pytest.approx(0.0, abs=1e-15)


def test_potential_examples(ex2):
    v = potential_vm(catalog_lookup("oscillator-like", beta=2.0, alpha=0.0))
    assert v(0.0) == pytest.approx(1.0)
    # constant term is -beta(alpha+m)/2 + beta/2 = -1, so v = 2/r^2 + r^2 - 1
    v2 = potential_vm(ex2)
    r = np.linspace(0.4, 3, 15)
    assert np.allclose(v2(r), 2 / r ** 2 + r ** 2 - 1)
    assert v2(1.0) == pytest.approx(2.0)


def test_partner_potentials(ex1, ex2, W2):
    v1, v2 = partner_potentials(superpotential(ex1))
    r = np.linspace(-3, 3, 13)
    assert np.allclose(v1(r), r ** 2 + 1) and np.allclose(v2(r), r ** 2 - 1)
    assert v2(0.0) == -1.0
    assert np.allclose(v1(r) - v2(r), 2 * superpotential(ex1).W.derivative()(r))
    _, w2 = partner_potentials(superpotential(ex2))
    assert w2(1.0) == pytest.approx((-1 + 1) ** 2 - (1 + 1))


def test_energy_examples():
    assert energy(catalog_lookup("oscillator-like", beta=2.0, m=0), 0, 0) == pytest.approx(2.0)
    assert energy(catalog_lookup("radial-oscillator-like", alpha=0.5, beta=4.0, m=1), 3, 1) == pytest.approx(12.0)
    for s in (catalog_lookup("oscillator-like", beta=3.0, m=2), catalog_lookup("radial-oscillator-like", beta=1.0, m=3)):
        assert energy(s, s.m - 1) == 0.0


def test_energy_precondition():
    with pytest.raises(ValueError):
        energy(catalog_lookup("oscillator-like", beta=2.0, m=2), 0, 2)


def test_shape_invariance(ex1, ex2):
    assert shape_invariance_check(ex1) == (True, pytest.approx(2.0))
    assert shape_invariance_check(ex2) == (True, pytest.approx(4.0))
    flag, _ = shape_invariance_check(ex2, shift=lambda s: s)
    assert not flag


@pytest.mark.parametrize("beta,step", [(2.0, 2.0), (4.0, 4.0), (1.0, 1.0)])
def test_ladder_spacing(beta, step):
    fam = "radial-oscillator-like" if beta == 4.0 else "oscillator-like"
    assert ladder_spacing(catalog_lookup(fam, alpha=0.5, beta=beta, m=1)) == pytest.approx(step)


def test_ladder_spacing_refuses_generic():
    s = generic_system((1.0, 0.0, 1.0), WeightSpec("gaussian", 0.0, 1.0), fn.REAL_LINE)
    with pytest.raises(CatalogError):
        ladder_spacing(s)


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(0.2, 5), st.integers(0, 4), st.sampled_from([FULL_LINE, HALF_LINE]))
def test_vm_identity_random_parameters(alpha, beta, m, family):
    if family == HALF_LINE:
        alpha = abs(alpha) - 0.9
    s = catalog_lookup(family, alpha=alpha, beta=beta, m=m)
    W = superpotential(s).W
    r = np.random.default_rng(0).uniform(0.2 if family == HALF_LINE else -4, 4, 100)
    assert np.allclose(potential_vm(s)(r), (W * W + W.derivative())(r), rtol=1e-12, atol=1e-9)


def test_generic_vm_identity():
    s = generic_system((1.0, 0.0, 1.0), WeightSpec("gaussian", 0.0, 1.0), fn.REAL_LINE, m=1,
                       r_window=(-2.0, 2.0))
    W = superpotential(s).W
    r = np.linspace(-1.5, 1.5, 21)
    assert np.allclose(potential_vm(s)(r), (W * W + W.derivative())(r), atol=1e-9)
