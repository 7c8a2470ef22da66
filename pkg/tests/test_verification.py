import json

import numpy as np
import pytest

from msf import functions as fn
from msf import operators as op
from msf.deformation import deform, deformed_potential
from msf.master import partner_potentials, potential_vm, superpotential
from msf.verification import (Check, GridError, GridSpec, VerificationReport, convergence_order, default_grid,
                              discretize_and_eigen, eigenvalue_csv, emit_report, expected_levels,
                              isospectrality_check, match_levels, profile_csv, spectrum_check)


@pytest.fixture(scope="module")
def grid1(ex1):
    return default_grid(ex1)


def test_oscillator_partner_levels(ex1):
    grid = GridSpec(-10.0, 10.0, 2000)
    v1, v2 = partner_potentials(superpotential(ex1))
    e2 = discretize_and_eigen(v2, grid, 5).eigenvalues
    e1 = discretize_and_eigen(v1, grid, 5).eigenvalues
    np.testing.assert_allclose(e2, [0, 2, 4, 6, 8], atol=2e-3)
    np.testing.assert_allclose(e1, [2, 4, 6, 8, 10], atol=3e-3)


def test_fourth_order_stencil_is_more_accurate(ex1):
    grid = GridSpec(-10.0, 10.0, 400)
    v = potential_vm(ex1)
    exact = expected_levels(ex1, 3)
    e2 = discretize_and_eigen(v, grid, 3, order=2).eigenvalues
    e4 = discretize_and_eigen(v, grid, 3, order=4).eigenvalues
    assert np.max(np.abs(np.subtract(e4, exact))) < np.max(np.abs(np.subtract(e2, exact))) / 10


def test_half_line_spacing(ex2):
    chk = spectrum_check(ex2)
    assert chk.passed
    np.testing.assert_allclose(chk.metadata["gaps"], 4.0, atol=1e-2)


def test_expected_levels(ex1, ex2):
    assert expected_levels(ex1, 3) == pytest.approx([2.0, 4.0, 6.0])
    assert expected_levels(ex1, 3, partner=2) == pytest.approx([0.0, 2.0, 4.0])
    assert expected_levels(ex2, 2)[1] - expected_levels(ex2, 2)[0] == pytest.approx(4.0)


def test_second_order_convergence(ex1):
    order = convergence_order(potential_vm(ex1), GridSpec(-10.0, 10.0, 500), 2.0)
    assert 1.7 <= order <= 2.3


def test_spectrum_check_oscillator(ex1):
    chk = spectrum_check(ex1)
    assert chk.passed and chk.tolerance == 5e-3


def test_isospectrality_oscillator_like(ex1, prof1, grid1):
    chk = isospectrality_check(prof1, ex1, grid1)
    assert chk.passed, chk.residual
    assert not chk.metadata["unmatched"]
    # the deformed partner gains the ground level 0 of H2
    assert chk.metadata["extra_bound_state"]
    assert chk.metadata["extra_energy"] == pytest.approx(0.0, abs=5e-3)


def test_isospectrality_large_constant(ex1, grid1):
    chk = isospectrality_check(deform(ex1, 1e12), ex1, grid1)
    assert chk.passed


def test_isospectrality_half_line(ex2, prof2):
    assert isospectrality_check(prof2, ex2).passed


def test_isospectrality_catches_a_corrupted_potential(ex1, prof1, grid1):
    bad = deformed_potential(prof1) + fn.poly([0.0, 0.1])
    chk = isospectrality_check(prof1, ex1, grid1, potential=bad)
    assert not chk.passed


def test_match_levels_greedy():
    pairs, unmatched, left = match_levels([1.0, 2.0], [0.0, 1.001, 2.5], 0.01)
    assert pairs[0] == (1.0, 1.001)
    assert unmatched == [2.0]
    assert 0.0 in left


def test_pointwise_residual_of_zero_operator():
    assert op.pointwise_residual(op.zero_op(), np.linspace(0, 1, 5)) == 0.0


def test_report_summary():
    good = Check("a", 1e-12, 1e-9)
    bad = Check("b", 1.0, 1e-9)
    assert VerificationReport({}, [good]).summary()["pass"]
    mixed = VerificationReport({}, [good, bad]).summary()
    assert not mixed["pass"] and mixed["failing"] == ["b"]
    with pytest.raises(ValueError):
        emit_report([], {})


def test_eigenvalue_csv_rows(ex1, prof1, grid1):
    chk = isospectrality_check(prof1, ex1, grid1, k=4)
    lines = eigenvalue_csv(chk).strip().splitlines()
    assert lines[0] == "index,eigenvalue_H1,eigenvalue_Hprime,matched"
    assert len(lines) - 1 == 4


def test_profile_csv(prof1):
    lines = profile_csv(prof1, [0.0, 1.0]).strip().splitlines()
    assert lines[0] == "r,v2,vprime,lambda,omega"
    assert float(lines[1].split(",")[3]) == pytest.approx(0.5)


def test_report_round_trip_is_byte_identical(tmp_path, ex1, prof1, grid1):
    checks = [spectrum_check(ex1, grid1), isospectrality_check(prof1, ex1, grid1),
              Check("inf", float("inf"), 1.0)]
    path = tmp_path / "report.json"
    rep = emit_report(checks, {"family": ex1.family}, path, timestamp="2000-01-01T00:00:00+00:00")
    text = path.read_text()
    assert text == rep.to_json()
    again = VerificationReport.from_json(text)
    assert again.to_json() == text
    assert json.loads(text)["summary"]["failing"] == ["inf"]


@pytest.mark.parametrize("kwargs", [dict(rmin=0.0, rmax=1.0, n=10), dict(rmin=1.0, rmax=0.0),
                                    dict(rmin=0.0, rmax=1.0, boundary="periodic")])
def test_grid_validation(kwargs):
    with pytest.raises(GridError):
        GridSpec(**kwargs)


def test_grid_points_exclude_ends():
    g = GridSpec(0.0, 1.0, 99)
    pts = g.points()
    assert len(pts) == 99 and pts[0] > 0 and pts[-1] < 1
    assert g.refined().h == pytest.approx(g.h / 2)


def test_half_line_grid_must_avoid_origin(ex2):
    with pytest.raises(GridError):
        spectrum_check(ex2, GridSpec(0.0, 5.0, 200))
