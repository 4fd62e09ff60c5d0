"""Full acceptance sweep: one test per numbered criterion.

Each test executes its criterion at the stated tolerance and prints the
PASS/FAIL line to the terminal (capture disabled for that one line).
"""

import pytest

from lylab import acceptance


@pytest.fixture
def announce(capsys):
    def _announce(line):
        with capsys.disabled():
            print(line, flush=True)
    return _announce


def _check(cid, announce):
    res = acceptance.run_criterion(cid)
    announce(acceptance.format_line(res))
    assert res["passed"], res["detail"]


def test_01_activity_roots_on_unit_circle(announce):
    _check(1, announce)


def test_02_zero_free_right_half_plane(announce):
    _check(2, announce)


def test_03_modulated_field_cone(announce):
    _check(3, announce)


def test_04_ursell_route_agreement(announce):
    _check(4, announce)


def test_05_pair_coupling_recovery(announce):
    _check(5, announce)


def test_06_quartic_factorization_identity(announce):
    _check(6, announce)


def test_07_correlation_inequalities(announce):
    _check(7, announce)


def test_08_magnetization_shape(announce):
    _check(8, announce)


def test_09_mass_gap_closed_form_and_routes(announce):
    _check(9, announce)


def test_10_boundary_condition_independence(announce):
    _check(10, announce)


def test_11_partition_ratio_stability(announce):
    _check(11, announce)


def test_12_quantum_scans_and_classical_limit(announce):
    _check(12, announce)


def test_13_strip_slope_probe(announce):
    _check(13, announce)
