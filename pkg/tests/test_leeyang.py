import numpy as np
import pytest

import lylab.ddarith as dd
from lylab import leeyang as ly
from lylab.measures import SingleSpinMeasure
from lylab.model import (FieldSpec, Interaction, LatticeSpec, SpinModel,
                         ising_ring, ising_torus)
from lylab.polyengine import ActivityPolynomial, evaluate_activity, partition_polynomial
from lylab.randomgen import (SplitMix64, random_ferromagnet,
                             random_pair_instance, random_quartic_instance)


def test_roots_linear():
    rs = ly.roots_activity(np.array([1.0, 1.0]))
    assert rs.degree == 1
    assert abs(rs.roots[0] + 1.0) < 1e-30
    assert rs.converged and rs.clusters == ()


def test_roots_two_spin_quadratic():
    # Z for two spins, J = 1, beta = 1: e + (2/e) z + e z^2; the quadratic
    # formula gives z = e^{-2}(-1 +- i sqrt(e^4 - 1)), both on |z| = 1
    e = np.e
    rs = ly.roots_activity(np.array([e, 2.0 / e, e]))
    expect = np.exp(-2.0) * np.array(
        [-1 + 1j * np.sqrt(np.exp(4.0) - 1.0), -1 - 1j * np.sqrt(np.exp(4.0) - 1.0)])
    got = rs.roots[np.argsort(rs.roots.imag)]
    ref = expect[np.argsort(expect.imag)]
    assert np.abs(got - ref).max() < 1e-15
    ab_hi, ab_lo = dd.cdd_abs(rs.roots_dd)
    assert np.abs((ab_hi - 1.0) + ab_lo).max() < 1e-30


def test_roots_cluster_multiplicity_ten():
    from math import comb
    c = np.array([float(comb(10, k)) for k in range(11)])
    rs = ly.roots_activity(c)
    assert rs.converged
    assert rs.clusters == (tuple(range(10)),)
    centers = ly.refined_cluster_centers(c, np.zeros_like(c), rs)
    z = dd.cdd_to_complex(*centers[0])[0]
    assert z == -1.0 + 0.0j


def test_roots_residuals_random_palindrome():
    g = SplitMix64(17)
    half = [np.exp(g.uniform(-1.0, 1.0)) for _ in range(6)]
    coeff = np.array(half + [2.0] + half[::-1])
    rs = ly.roots_activity(coeff)
    assert rs.residuals.max() < 1e-20
    # palindromic real polynomial: root set closed under z -> 1/conj(z)
    inv = 1.0 / np.conj(rs.roots)
    for z in rs.roots:
        assert np.abs(inv - z).min() < 1e-12


def test_roots_rejects_degree_zero():
    with pytest.raises(ValueError):
        ly.roots_activity(np.array([2.0]))
    with pytest.raises(ValueError):
        ly.roots_activity(np.array([2.0, 0.0, 0.0]))


def test_circle_seeded_ferromagnets():
    worst = 0.0
    for i in range(25):
        rep = ly.circle_theorem_check(random_ferromagnet(11, i))
        assert rep.theorem_applies and rep.on_circle and rep.passed
        worst = max(worst, rep.max_abs_deviation)
    assert worst < 1e-9


def test_circle_free_spins_cluster_at_minus_one():
    m = SpinModel(LatticeSpec((6,)), SingleSpinMeasure.ising(), Interaction(),
                  FieldSpec.uniform(0.0), 1.0)
    rep = ly.circle_theorem_check(m)
    assert rep.roots.clusters == (tuple(range(6)),)
    assert rep.max_abs_deviation < 1e-12
    assert np.abs(rep.roots.roots + 1.0).max() < 1e-2
    assert rep.passed


def test_circle_antiferromagnet_flagged_not_failed():
    m = SpinModel(LatticeSpec((2,)), SingleSpinMeasure.ising(),
                  Interaction.from_pairs([(0, 1, -1.0)]), FieldSpec.uniform(0.0), 1.0)
    rep = ly.circle_theorem_check(m)
    assert not rep.theorem_applies
    assert "negative pair coupling" in rep.violations
    assert rep.max_abs_deviation > 1e-9
    assert rep.passed  # flagged precondition, not a theorem counterexample
    # explicit roots: e^{-1} z^2 + 2e z + e^{-1} = 0, both real
    e = np.e
    disc = np.sqrt(e * e - np.exp(-2.0))
    expect = np.sort(np.array([(-e + disc) * e, (-e - disc) * e]))
    assert np.abs(np.sort(rep.roots.roots.real) - expect).max() < 1e-12
    assert np.abs(rep.roots.roots.imag).max() < 1e-12


def test_circle_quartic_conditions_gate():
    m = random_quartic_instance(5, 2)
    rep = ly.circle_theorem_check(m)
    assert rep.theorem_applies and rep.on_circle
    # shrink one pair coupling below its quartic cover: conditions fail
    pairs = [(i, j, J) for i, j, J in m.interaction.pairs]
    quads = list(m.interaction.quartic)
    a, b = sorted(quads[0][0][:2])
    pairs = [(i, j, 0.0 if (i, j) == (a, b) else J) for i, j, J in pairs]
    m2 = SpinModel(m.lattice, m.measure, Interaction.from_pairs(pairs, quartic=quads),
                   m.field, m.beta)
    rep2 = ly.circle_theorem_check(m2)
    assert not rep2.theorem_applies
    assert "quartic smallness/dominance conditions fail" in rep2.violations


def test_zero_free_small_torus_passes():
    rep = ly.zero_free_scan(ising_torus(3, 3, J=1.0, beta=1.0),
                            grid=ly.GridSpec(0.1, 2.0, 15, -2.0, 2.0, 15))
    assert rep.passed
    assert rep.min_abs > 1e-2
    assert rep.in_region_points == rep.npoints
    assert rep.passed == (rep.min_abs > rep.margin)


def test_zero_free_spin_witness_outside_half_plane():
    # independent spins: Z(h) = (2 cosh(beta h))^n vanishes at h = i pi / 2
    m = SpinModel(LatticeSpec((4,)), SingleSpinMeasure.ising(), Interaction(),
                  FieldSpec.uniform(0.0), 1.0)
    rep = ly.zero_free_scan(m, grid=ly.GridSpec(0.0, 1.0, 3, 0.0, np.pi, 5))
    hits = [(p, v, r) for p, v, r in rep.witnesses]
    assert len(hits) == 1
    p, v, in_region = hits[0]
    assert abs(p - 1j * np.pi / 2.0) < 1e-12
    assert v < 1e-8 and not in_region
    assert rep.passed  # the zero sits on the boundary, outside the open region


def test_zero_free_uniform_measure_model():
    m = SpinModel(LatticeSpec((4,)), SingleSpinMeasure.uniform(order=20),
                  Interaction.nearest_neighbor(0.7), FieldSpec.uniform(0.0), 1.0)
    rep = ly.zero_free_scan(m, grid=ly.GridSpec(0.05, 1.5, 9, -1.5, 1.5, 9))
    assert rep.passed


def test_zero_free_quartic_measure_model():
    m = SpinModel(LatticeSpec((3,)), SingleSpinMeasure.quartic(1.0, 0.0),
                  Interaction.nearest_neighbor(0.5), FieldSpec.uniform(0.0), 1.0)
    rep = ly.zero_free_scan(m, grid=ly.GridSpec(0.05, 1.5, 9, -1.5, 1.5, 9))
    assert rep.passed


def test_zero_free_jobs_deterministic():
    m = ising_ring(8, J=0.8, beta=1.0)
    g = ly.GridSpec(0.05, 1.0, 11, -1.0, 1.0, 11)
    a = ly.zero_free_scan(m, grid=g, jobs=1)
    b = ly.zero_free_scan(m, grid=g, jobs=4)
    assert a.min_abs == b.min_abs and a.argmin == b.argmin
    assert a.witnesses == b.witnesses


def test_cone_scan_modulated_field():
    L = 8
    field = FieldSpec.modulated(0.5, eps=(0.2 * np.exp(0.7j), 0.1j),
                                kvecs=((2 * np.pi / L,), (4 * np.pi / L,)))
    m = SpinModel(LatticeSpec((L,), "periodic"), SingleSpinMeasure.ising(),
                  Interaction.nearest_neighbor(1.0), field, 1.0)
    rep = ly.zero_free_scan(m, region=ly.RegionSpec.cone(2),
                            grid=ly.GridSpec(0.1, 1.5, 12, -1.0, 1.0, 11))
    assert rep.passed
    # sum of amplitudes is 0.3: columns below that real part fall outside
    assert rep.in_region_points < rep.npoints


def test_cone_region_needs_modulated_model():
    with pytest.raises(ValueError):
        ly.zero_free_scan(ising_ring(4), region=ly.RegionSpec.cone(1))


def test_multi_component_rotator_passes():
    m = SpinModel(LatticeSpec((2,)), SingleSpinMeasure.sphere(2),
                  Interaction.from_pairs([(0, 1, (1.0, 0.5))]),
                  FieldSpec.uniform((0.0, 0.0)), 1.0)
    rep, hyp = ly.multi_component_zero_scan(
        m, grid=ly.GridSpec(0.3, 1.5, 7, -1.0, 1.0, 7), transverse=(0.1 + 0.05j,))
    assert hyp["hypothesis_ok"] and hyp["anisotropy_dominant"]
    assert rep.passed


def test_multi_component_sphere_boundary_zero():
    # one 3-component spin: Z(h e_1) = sinh(h)/h, vanishing at h = i pi
    m = SpinModel(LatticeSpec((1,)), SingleSpinMeasure.sphere(3), Interaction(),
                  FieldSpec.uniform((0.0, 0.0, 0.0)), 1.0)
    rep, _ = ly.multi_component_zero_scan(
        m, grid=ly.GridSpec(0.0, 1.0, 2, np.pi, np.pi, 1), transverse=(0.0, 0.0))
    assert len(rep.witnesses) == 1
    p, v, in_region = rep.witnesses[0]
    assert abs(p - 1j * np.pi) < 1e-12 and v < 1e-8 and not in_region
    assert rep.passed


def test_multi_component_heisenberg_condition():
    m = SpinModel(LatticeSpec((2,)), SingleSpinMeasure.sphere(3),
                  Interaction.from_pairs([(0, 1, (1.0, -1.0, -1.0))]),
                  FieldSpec.uniform((0.0, 0.0, 0.0)), 1.0)
    rep, hyp = ly.multi_component_zero_scan(
        m, grid=ly.GridSpec(0.3, 1.2, 5, -0.8, 0.8, 5), transverse=(0.05, 0.1j))
    assert not hyp["anisotropy_dominant"]
    assert hyp["heisenberg_dominant"] and hyp["hypothesis_ok"]
    assert rep.passed


def test_multi_component_needs_vector_measure():
    with pytest.raises(ValueError):
        ly.multi_component_zero_scan(ising_ring(4), transverse=())


def test_polydisc_search_planted_zero():
    # (z1 - 1/2)(z2 - 3/10): every slice in z1 has its root at 1/2
    c = np.array([0.15, -0.3, -0.5, 1.0])
    poly = ActivityPolynomial(2, c, np.zeros_like(c), 1.0, "", "extended")
    hits = ly.polydisc_zero_search(poly, nsamples=8, seed=5)
    assert hits
    z, val = hits[0]
    assert all(abs(zz) < 1.0 for zz in z)
    assert val < 1e-8
    assert abs(evaluate_activity(poly, np.array(z))) < 1e-12


def test_converse_round_trip_pair_model():
    for i in range(3):
        m = random_pair_instance(3, i)
        pi, pj, pJ = m.pair_arrays()
        true = {(int(a), int(b)): float(J) for a, b, J in zip(pi, pj, pJ)}
        rep = ly.converse_probe(m, nsamples=60)
        assert rep.ly_holds
        assert rep.residual < 1e-10
        assert rep.min_coupling > -1e-10
        err = max(abs(rep.couplings[p] - true.get(p, 0.0)) for p in rep.couplings)
        assert err < 1e-10


def test_converse_quartic_instance_nonnegative_pairs():
    m = random_quartic_instance(5, 3)
    pi, pj, pJ = m.pair_arrays()
    true = {(int(a), int(b)): float(J) for a, b, J in zip(pi, pj, pJ)}
    rep = ly.converse_probe(m, nsamples=40)
    assert rep.ly_holds
    assert rep.min_coupling > -1e-10
    # quartic characters are orthogonal to the pair fit: pair part is exact
    err = max(abs(rep.couplings[p] - true.get(p, 0.0)) for p in rep.couplings)
    assert err < 1e-10
    assert rep.residual > 1e-3  # the quartic remainder is real and reported


def test_converse_random_symmetric_violation():
    g = SplitMix64(99)
    n = 4
    c = np.array([np.exp(g.uniform(-1.5, 1.5)) for _ in range(1 << n)])
    sym = np.sqrt(c * c[np.arange(1 << n) ^ ((1 << n) - 1)])
    poly = ActivityPolynomial(n, sym, np.zeros_like(sym), 1.0, "", "extended")
    rep = ly.converse_probe(poly, nsamples=300)
    assert not rep.ly_holds
    t, point, val = rep.witness
    assert t in rep.family
    assert all(abs(z) < 1.0 for z in point)
    assert val < 1e-8
    assert rep.couplings is None


def test_converse_input_validation():
    n = 3
    c = np.linspace(1.0, 2.0, 1 << n)
    asym = ActivityPolynomial(n, c, np.zeros_like(c), 1.0, "", "extended")
    with pytest.raises(ValueError):
        ly.converse_probe(asym)
    neg = ActivityPolynomial(1, np.array([1.0, -1.0]), np.zeros(2), 1.0, "", "extended")
    with pytest.raises(ValueError):
        ly.converse_probe(neg)
    big = ActivityPolynomial(11, np.ones(1 << 11), np.zeros(1 << 11), 1.0, "", "extended")
    with pytest.raises(ValueError):
        ly.converse_probe(big)


def test_gridspec_parse_and_validate():
    g = ly.GridSpec.parse("0.05, 2, 41, -2, 2, 41")
    assert g == ly.GridSpec(0.05, 2.0, 41, -2.0, 2.0, 41)
    assert g.npoints == 41 * 41
    with pytest.raises(ValueError):
        ly.GridSpec.parse("1,2,3")
    with pytest.raises(ValueError):
        ly.GridSpec(0.0, 1.0, 0, 0.0, 1.0, 5)


def test_region_membership():
    assert ly.RegionSpec.half_plane().contains(0.2 - 5j)
    assert not ly.RegionSpec.half_plane().contains(-0.1)
    cone = ly.RegionSpec.cone(2)
    assert cone.contains(0.5, eps=(0.2, 0.1j))
    assert not cone.contains(0.25, eps=(0.2, 0.1j))
    om = ly.RegionSpec.omega(3)
    assert om.contains_vector((1.0 + 1j, 0.3, 0.4j))
    assert not om.contains_vector((0.5, 0.3, 0.4j))
    assert ly.RegionSpec.omega(3, sign=-1).contains_vector((-1.0, 0.3, 0.4j))
    rect = ly.RegionSpec.rectangle(0.0, 1.0, -1.0, 1.0)
    assert rect.contains(0.5 + 0.5j) and not rect.contains(1.5)
    disc = ly.RegionSpec.disc(1.0, 0.5)
    assert disc.contains(1.2) and not disc.contains(1.6)
    with pytest.raises(ValueError):
        ly.RegionSpec.omega(3).contains(1.0)
    with pytest.raises(ValueError):
        ly.RegionSpec.half_plane().contains_vector((1.0, 0.0))


def test_scan_report_serialization():
    rep = ly.zero_free_scan(ising_ring(4, J=0.5, beta=1.0),
                            grid=ly.GridSpec(0.1, 1.0, 4, -1.0, 1.0, 5))
    d = rep.to_dict()
    assert d["passed"] is True
    assert d["npoints"] == 20
    assert isinstance(d["witnesses"], list)
