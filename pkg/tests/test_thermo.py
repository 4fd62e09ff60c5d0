import numpy as np
import pytest

from lylab import correlations as co
from lylab import thermo as th
from lylab.measures import SingleSpinMeasure
from lylab.model import FieldSpec, Interaction, LatticeSpec, SpinModel
from lylab.polyengine import evaluate_partition

ISING = SingleSpinMeasure.ising()


def ring(L, h, J=1.0, beta=1.0, boundary="periodic", ndim=1):
    extents = (L,) if ndim == 1 else L
    return SpinModel(LatticeSpec(extents, boundary), ISING,
                     Interaction.nearest_neighbor(J, ndim=ndim),
                     FieldSpec.uniform(h), beta=beta)


def test_transfer_trace_matches_enumeration_1d():
    m = ring(4, 0.3 + 0.2j)
    T = th.build_transfer(m)
    z = evaluate_partition(m)
    assert abs(T.ring_partition(4) - z) / abs(z) < 1e-12


def test_transfer_trace_matches_enumeration_on_tori():
    for extents, J, h, beta in (((2, 4), 0.7, 0.2, 1.0),
                                ((3, 4), 0.5, 0.1 + 0.1j, 0.8)):
        m = ring(extents, h, J=J, beta=beta, ndim=2)
        z = evaluate_partition(m)
        T = th.build_transfer(m)
        assert T.width == extents[0]
        assert abs(T.ring_partition(extents[1]) - z) / abs(z) < 1e-12


def test_transfer_eigenvalues_match_closed_form():
    J, beta, h = 1.0, 1.0, 0.4
    T = th.build_transfer(ring(4, h, J=J, beta=beta))
    disc = np.sqrt(np.exp(2 * beta * J) * np.sinh(beta * h) ** 2
                   + np.exp(-2 * beta * J))
    base = np.exp(beta * J) * np.cosh(beta * h)
    assert T.lam1 == pytest.approx(base + disc, abs=1e-12)
    assert T.lam2 == pytest.approx(base - disc, abs=1e-12)


def test_decoupled_transfer_is_rank_one():
    T = th.build_transfer(ring(4, 0.9, J=0.0, beta=1.3))
    assert abs(T.lam2) < 1e-14
    f = th.free_energy_density(T)
    assert f.f_inf == pytest.approx(-np.log(2 * np.cosh(1.3 * 0.9)) / 1.3, abs=1e-13)


def test_leading_eigenvalue_at_zero_field():
    T = th.build_transfer(ring(4, 0.0))
    assert T.lam1 == pytest.approx(2 * np.cosh(1.0), abs=1e-12)


def test_perron_frobenius_at_positive_real_field():
    for h in (0.05, 0.5, 2.0):
        T = th.build_transfer(ring(4, h))
        assert abs(T.lam1.imag) < 1e-12
        assert T.lam1.real > 0
        assert T.gap_ratio < 1.0 - 1e-8


def test_finite_size_rate_tracks_eigenvalue_ratio():
    for h in (0.5, 1 + 0.5j):
        T = th.build_transfer(ring(4, h))
        rep = th.free_energy_density(T, lengths=range(8, 40, 2))
        assert not rep.degenerate
        assert rep.rate_observed == pytest.approx(rep.rate_expected, rel=0.1)


def test_imaginary_axis_flags_eigenvalue_crossing():
    rep = th.free_energy_density(th.build_transfer(ring(4, 0.7j)))
    assert rep.degenerate
    assert "crossing" in rep.note
    assert rep.rate_observed == 0.0


def test_mass_gap_closed_form():
    gap = th.mass_gap(th.build_transfer(ring(4, 0.0)))
    assert not gap.infinite
    assert gap.value == pytest.approx(np.log(1.0 / np.tanh(1.0)), abs=1e-10)


def test_mass_gap_infinite_for_decoupled_spins():
    gap = th.mass_gap(th.build_transfer(ring(4, 0.3, J=0.0)))
    assert gap.infinite and gap.value == np.inf


def test_mass_gap_increases_with_field():
    for beta in (0.5, 1.0, 2.0):
        vals = [th.mass_gap(th.build_transfer(ring(4, h, beta=beta))).value
                for h in np.linspace(0.05, 2.0, 12)]
        assert all(v > 0 for v in vals)
        assert all(b > a for a, b in zip(vals, vals[1:]))


def test_ring_ursell_matches_enumeration():
    for h in (0.5, 0.5 + 0.4j):
        m = ring(8, h)
        T = th.build_transfer(m)
        for x, c in th.ring_pair_ursell(T, 8, range(1, 4)):
            ref = co.ursell_moebius(m, (0, x)).value
            assert c == pytest.approx(ref, abs=1e-13)


def test_fit_route_agrees_with_spectral_gap():
    for h in (0.05, 0.5, 1.0):
        fit = th.mass_gap_fit(ring(64, h))
        assert fit.window == (3, 31)
        assert fit.discrepancy < 1e-4


def test_fit_route_validation():
    with pytest.raises(ValueError, match="ring"):
        th.mass_gap_fit(ring(64, 0.5, boundary="free"))
    with pytest.raises(ValueError, match="window"):
        th.mass_gap_fit(ring(64, 0.5), window=(3, 40))
    with pytest.raises(ValueError, match="decoupled"):
        th.mass_gap_fit(ring(64, 0.5, J=0.0))


def test_bc_gap_decays_geometrically():
    chain = ring(4, 0.5, J=0.2, boundary="free")
    for h in (0.5, 0.5 + 0.4j):
        rep = th.bc_independence_check(chain, h=h)
        assert rep["geometric"]
        assert rep["final_gap"] < 1e-6
        assert rep["gaps"][0] > rep["final_gap"]


def test_bc_gap_vanishes_for_decoupled_spins():
    rep = th.bc_independence_check(ring(4, 0.5, J=0.0, boundary="free"))
    assert rep["note"] == "differences vanish identically"
    assert rep["geometric"]
    assert rep["final_gap"] < 1e-14


def test_r_study_converges_to_transfer_limit():
    r = th.r_function_study(1.0, 1.0, [1.0], lengths=range(2, 15))
    row = r["rows"][0]
    assert row["final_diff"] < 1e-6
    lam1 = th.build_transfer(ring(4, 1.0)).lam1
    assert row["series"][-1][1] == pytest.approx(lam1, abs=1e-9)
    assert not r["alarm"]
    assert r["bounded"]


def test_r_study_branch_continuity_at_complex_field():
    r = th.r_function_study(1.0, 1.0, [0.8 + 0.3j], lengths=range(2, 15))
    assert r["rows"][0]["final_diff"] < 1e-6


def test_r_study_modulated_cone_points():
    r = th.r_function_study(1.0, 1.0, [1.0, 1.2 + 0.5j], lengths=range(4, 15),
                            eps_frac=0.5, nmodes=2)
    assert not r["alarm"]
    assert r["bounded"]
    for row in r["rows"]:
        assert sum(abs(e) for e in row["eps"]) < complex(row["h"]).real
        assert row["final_diff"] < 1e-4


def test_r_study_validation():
    with pytest.raises(ValueError, match="cone"):
        th.r_function_study(1.0, 1.0, [1.0], eps_frac=1.2, nmodes=1)
    with pytest.raises(ValueError, match="mode"):
        th.r_function_study(1.0, 1.0, [1.0], eps_frac=0.5)
    with pytest.raises(ValueError, match="Re h"):
        th.r_function_study(1.0, 1.0, [-0.5])


def test_single_site_r_is_partition_itself():
    r = th.r_function_study(1.0, 0.7, [0.9], lengths=(1,))
    (L, val), = r["rows"][0]["series"]
    assert L == 1
    assert val == pytest.approx(2 * np.cosh(0.9), abs=1e-12)


def test_critical_probe_reports_slopes():
    rep = th.critical_exponent_probe(0.4407, widths=(1, 2, 3, 4))
    assert rep["delta_bound"] == 1.0
    assert abs(rep["slopes"][1]) < 0.05
    strip = [rep["slopes"][w] for w in (2, 3, 4)]
    assert all(b < a for a, b in zip(strip, strip[1:]))
    assert len(rep["xi"][2]) == len(rep["h"])


def test_critical_probe_refuses_decoupled_spins():
    with pytest.raises(ValueError, match="correlation length"):
        th.critical_exponent_probe(0.44, widths=(2,), coupling=0.0)


def test_build_transfer_validation():
    with pytest.raises(ValueError, match="atomic"):
        th.build_transfer(SpinModel(LatticeSpec((4,)), SingleSpinMeasure.sphere(3),
                                    Interaction.nearest_neighbor(1.0),
                                    FieldSpec.uniform((0.2, 0, 0))))
    with pytest.raises(ValueError, match="uniform field"):
        th.build_transfer(SpinModel(LatticeSpec((4,)), ISING,
                                    Interaction.nearest_neighbor(1.0),
                                    FieldSpec.per_site((0.1, 0.2, 0.3, 0.4))))
    with pytest.raises(ValueError, match="translation"):
        th.build_transfer(SpinModel(LatticeSpec((3,)), ISING,
                                    Interaction.from_pairs([(0, 1, 0.5)]),
                                    FieldSpec.uniform(0.1)))
    with pytest.raises(ValueError, match="1D chains and 2D strips"):
        th.build_transfer(ring((2, 2, 2), 0.1, ndim=3))
    with pytest.raises(ValueError, match="overflow"):
        th.build_transfer(ring((13, 4), 0.1, ndim=2))
    with pytest.raises(ValueError, match="L = 1"):
        th.build_transfer(ring(4, 0.1)).ring_partition(1)
