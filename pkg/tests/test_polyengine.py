import json

import mpmath
import numpy as np
import pytest

from lylab import ddarith as dd
from lylab import polyengine as pe
from lylab.measures import SingleSpinMeasure
from lylab.model import (
    FieldSpec,
    Interaction,
    LatticeSpec,
    SpinModel,
    ising_chain,
    ising_ring,
)

mpmath.mp.prec = 160


def test_free_spins_give_binomial_coefficients():
    m = SpinModel(LatticeSpec((5,)), SingleSpinMeasure.ising(), Interaction())
    poly = pe.partition_polynomial(m)
    np.testing.assert_allclose(poly.coefficients(), np.ones(32))
    a_hi, a_lo = pe.uniform_reduction(poly)
    from math import comb
    np.testing.assert_allclose(a_hi + a_lo, [comb(5, k) for k in range(6)])


def test_two_spin_closed_form():
    # J = 1, beta = 1, unit weights: Z = 2 e cosh(2h) + 2/e
    m = ising_chain(2, J=1.0, beta=1.0)
    poly = pe.partition_polynomial(m)
    e = np.e
    np.testing.assert_allclose(poly.coefficients(), [e, 1 / e, 1 / e, e], rtol=1e-15)
    for h in (0.0, 0.7, 0.3 + 0.4j):
        z = np.exp(-2.0 * complex(h))
        val = pe.prefactor(m, h) * pe.evaluate_activity(poly, z)
        expect = 2 * e * np.cosh(2 * complex(h)) + 2 / e
        assert abs(val - expect) < 1e-13 * abs(expect)


def test_single_site_partition_is_laplace_at_beta_h():
    mu = SingleSpinMeasure.uniform(-1.0, 1.0)
    m = SpinModel(LatticeSpec((1,)), mu, Interaction(), FieldSpec.uniform(0.9 + 0.2j),
                  beta=1.7)
    got = pe.evaluate_partition(m)
    hh = 1.7 * (0.9 + 0.2j)
    expect = complex(mpmath.sinh(hh) / mpmath.mpc(hh))
    assert abs(got - expect) < 1e-12 * abs(expect)


def test_enumeration_matches_polynomial_per_site_fields():
    rng = np.random.default_rng(21)
    for trial in range(6):
        L = int(rng.integers(2, 7))
        beta = float(rng.choice([0.25, 1.0, 2.0]))
        pairs = []
        for i in range(L):
            for j in range(i + 1, L):
                if rng.random() < 0.6:
                    pairs.append((i, j, float(rng.uniform(0.0, 1.2))))
        hvals = rng.standard_normal(L) * 0.4 + 1j * rng.standard_normal(L) * 0.6
        m = SpinModel(LatticeSpec((L,)), SingleSpinMeasure.ising(1.0),
                      Interaction.from_pairs(pairs), FieldSpec.per_site(tuple(hvals)), beta)
        z_direct = pe.evaluate_partition(m)
        poly = pe.partition_polynomial(m)
        w = np.prod(np.exp(beta * hvals))
        z_poly = w * pe.evaluate_activity(poly, np.exp(-2.0 * beta * hvals))
        assert abs(z_direct - z_poly) < 1e-12 * abs(z_poly)


def test_reduced_polynomial_matches_uniform_field():
    m = ising_ring(6, J=0.8, beta=1.3)
    poly = pe.partition_polynomial(m)
    a_hi, a_lo = pe.uniform_reduction(poly)
    for h in (0.4, 0.1 - 0.9j):
        z = np.exp(-2.0 * 1.3 * complex(h))
        direct = pe.evaluate_partition(m, h=h)
        via = pe.prefactor(m, h) * pe.evaluate_reduced(a_hi, a_lo, np.array([z]))[0]
        assert abs(direct - via) < 1e-12 * abs(direct)


def test_palindromic_for_even_interactions():
    m = ising_ring(8, J=1.0, beta=0.7)
    poly = pe.partition_polynomial(m)
    assert poly.is_palindromic()
    assert np.all(poly.coeff_hi > 0)


def test_scanner_matches_enumeration():
    models = [
        ising_ring(5, J=0.9, beta=1.1),
        SpinModel(LatticeSpec((3,), "periodic"), SingleSpinMeasure.uniform(),
                  Interaction.nearest_neighbor(1.0), beta=0.8),
        SpinModel(LatticeSpec((2,)), SingleSpinMeasure.quartic(1.0, 0.0),
                  Interaction.from_pairs([(0, 1, 0.6)]), beta=1.0),
    ]
    for m in models:
        scan = pe.PartitionScanner(m)
        for h in (0.2, 1.1 + 0.8j, 0.05 - 2.0j):
            a = scan.at(h)
            b = pe.evaluate_partition(m, h=h)
            assert abs(a - b) < 1e-10 * max(abs(b), 1e-30)


def test_scanner_vectorized_grid():
    m = ising_ring(4, J=1.0, beta=1.0)
    scan = pe.PartitionScanner(m)
    grid = np.array([[0.1 + 0.2j, 0.3], [1.0 - 1.0j, 2.0]])
    vals = scan.at(grid)
    assert vals.shape == grid.shape
    for idx in np.ndindex(2, 2):
        assert abs(vals[idx] - pe.evaluate_partition(m, h=grid[idx])) \
            < 1e-10 * abs(vals[idx])


def test_asano_contraction_algebra():
    # A + B z0 + C z1 + D z0 z1 -> A + D w
    hi = np.array([2.0, 3.0, 5.0, 7.0])
    poly = pe.ActivityPolynomial(2, hi, np.zeros(4), beta=1.0)
    out = pe.asano_contract(poly, 0, 1)
    assert out.nvars == 1
    np.testing.assert_allclose(out.coefficients(), [2.0, 7.0])


def test_asano_contraction_middle_variable():
    rng = np.random.default_rng(31)
    hi = rng.uniform(0.5, 2.0, 8)
    poly = pe.ActivityPolynomial(3, hi, np.zeros(8), beta=1.0)
    out = pe.asano_contract(poly, 0, 2)
    # w z1 coefficients: pick masks with bits 0,2 equal, drop bit 2
    expect = np.array([hi[0b000], hi[0b101], hi[0b010], hi[0b111]])
    np.testing.assert_allclose(out.coefficients(), expect)
    with pytest.raises(ValueError):
        pe.asano_contract(poly, 1, 1)


def test_schur_hadamard_product():
    a = pe.ActivityPolynomial(2, np.array([1.0, 2.0, 3.0, 4.0]), np.zeros(4), 1.0)
    b = pe.ActivityPolynomial(2, np.array([2.0, 0.5, 1.0, 0.25]), np.zeros(4), 1.0)
    c = pe.schur_hadamard(a, b)
    np.testing.assert_allclose(c.coefficients(), [2.0, 1.0, 3.0, 1.0])
    with pytest.raises(ValueError):
        pe.schur_hadamard(a, pe.ActivityPolynomial(1, np.ones(2), np.zeros(2), 1.0))


def quartic_model(L, pairs, quads, beta):
    return SpinModel(LatticeSpec((L,)), SingleSpinMeasure.ising(),
                     Interaction.from_pairs(pairs, quartic=quads), beta=beta)


def test_quartic_decomposition_identity():
    rng = np.random.default_rng(41)
    for trial in range(5):
        L = 6
        pairs = [(i, j, float(rng.uniform(0.5, 1.5))) for i in range(L)
                 for j in range(i + 1, L) if rng.random() < 0.5]
        quads = []
        for _ in range(2):
            sites = tuple(sorted(rng.choice(L, 4, replace=False).tolist()))
            quads.append((sites, float(rng.uniform(0.1, 0.4))))
        m = quartic_model(L, pairs, quads, beta=1.0)
        poly = pe.partition_polynomial(m)
        dec = pe.quartic_decomposition(m)
        prod = pe.schur_hadamard(dec.factor_pair, dec.factor_quad)
        got_hi, got_lo = dd.dd_mul_d(prod.coeff_hi, prod.coeff_lo, dec.prefactor_hi)
        t_hi, t_lo = dd.dd_mul_d(prod.coeff_hi, prod.coeff_lo, dec.prefactor_lo)
        got_hi, got_lo = dd.dd_add(got_hi, got_lo, t_hi, t_lo)
        rel = np.abs((got_hi - poly.coeff_hi) + (got_lo - poly.coeff_lo)) \
            / np.abs(poly.coeff_hi)
        assert rel.max() < 1e-25


def test_quartic_decomposition_tilde_values():
    # single quartic on 4 sites, one pair coupling inside it; the other five
    # 2-subsets join with zero pair coupling
    m = quartic_model(4, [(0, 1, 1.0)], [((0, 1, 2, 3), 0.25)], beta=1.0)
    dec = pe.quartic_decomposition(m)
    np.testing.assert_allclose(dec.quad_tilde_hi, [2.0])  # 8 * 0.25
    assert dec.pair_sets == (3, 5, 6, 9, 10, 12)
    expect = {3: 1.5}  # 2*1 - 2*0.25; the rest get -2*0.25
    got = dict(zip(dec.pair_sets, dec.pair_tilde_hi))
    for pm in dec.pair_sets:
        assert abs(got[pm] - expect.get(pm, -0.5)) < 1e-30
    assert abs((dec.const_hi + dec.const_lo) - (5 * 0.25 - 1.0)) < 1e-30
    assert dec.condition_small_quartic  # 8*1*0.25 = 2 >= ln 2
    assert not dec.condition_pair_dominates  # the zero pairs sit below 0.25

    all_pairs = [(i, j, 1.0) for i in range(4) for j in range(i + 1, 4)]
    dec2 = pe.quartic_decomposition(quartic_model(4, all_pairs, [((0, 1, 2, 3), 0.25)], 1.0))
    assert dec2.condition_pair_dominates


def test_quartic_condition_flags():
    m = quartic_model(4, [(0, 1, 0.1)], [((0, 1, 2, 3), 0.05)], beta=1.0)
    dec = pe.quartic_decomposition(m)
    assert not dec.condition_small_quartic  # 8*0.05 = 0.4 < ln 2
    all_pairs = [(i, j, 0.1) for i in range(4) for j in range(i + 1, 4)]
    m2 = quartic_model(4, all_pairs, [((0, 1, 2, 3), 0.3)], beta=1.0)
    dec2 = pe.quartic_decomposition(m2)
    assert dec2.condition_small_quartic
    assert not dec2.condition_pair_dominates  # 0.1 < 0.3


def test_polynomial_json_roundtrip_bit_exact():
    m = ising_ring(4, J=1.1, beta=0.6)
    poly = pe.partition_polynomial(m)
    back = pe.ActivityPolynomial.from_json(poly.to_json())
    assert np.array_equal(back.coeff_hi, poly.coeff_hi)
    assert np.array_equal(back.coeff_lo, poly.coeff_lo)
    assert back.beta == poly.beta
    assert back.provenance == poly.provenance
    parsed = json.loads(poly.to_json())
    assert parsed["nvars"] == 4


def test_rejects_non_ising_measures_and_big_lattices():
    mu = SingleSpinMeasure.uniform()
    m = SpinModel(LatticeSpec((3,)), mu, Interaction.nearest_neighbor(1.0))
    with pytest.raises(ValueError):
        pe.partition_polynomial(m)
    m2 = SpinModel(LatticeSpec((12,)), SingleSpinMeasure.uniform(order=64),
                   Interaction.nearest_neighbor(1.0))
    with pytest.raises(ValueError):
        pe.evaluate_partition(m2, h=0.1)


def test_double_mode_close_to_extended():
    m = ising_ring(5, J=1.0, beta=2.0)
    pd = pe.partition_polynomial(m, mode="double")
    px = pe.partition_polynomial(m, mode="extended")
    assert np.all(pd.coeff_lo == 0.0)
    np.testing.assert_allclose(pd.coeff_hi, px.coefficients(), rtol=1e-14)


def test_vector_partition_sphere3_matches_sinh():
    # one 3-component sphere spin: Z(h e_1) = sinh(h)/h
    m = SpinModel(LatticeSpec((1,)), SingleSpinMeasure.sphere(3), Interaction())
    for h in (0.3, 1.0 + 0.5j, 2.0 - 1.0j):
        z = pe.evaluate_partition(m, h=(h, 0.0, 0.0))
        assert abs(z - np.sinh(h) / h) < 1e-13


def test_vector_partition_rotator_matches_bessel():
    # one plane rotator: Z(h e_1) = I_0(h)
    from scipy.special import iv
    m = SpinModel(LatticeSpec((1,)), SingleSpinMeasure.sphere(2), Interaction())
    for h in (0.5, 1.2 + 0.3j):
        z = pe.evaluate_partition(m, h=(h, 0.0))
        assert abs(z - iv(0, h)) < 1e-13


def test_vector_partition_two_site_reduces_to_scalar():
    # J = (J1, 0, 0) and h along e_1: the transverse components decouple, so
    # Z equals the scalar model with the same J1 built on the t-marginal
    J1, beta, h = 0.8, 1.3, 0.4 + 0.2j
    vec = SpinModel(LatticeSpec((2,)), SingleSpinMeasure.sphere(3),
                    Interaction.from_pairs([(0, 1, (J1, 0.0, 0.0))]),
                    FieldSpec.uniform((0.0, 0.0, 0.0)), beta)
    zv = pe.evaluate_partition(vec, h=(h, 0.0, 0.0))
    x, w = SingleSpinMeasure.sphere(3).nodes_weights(64)
    e = np.exp(beta * J1 * np.multiply.outer(x, x)
               + beta * h * (x[:, None] + x[None, :]))
    zs = w @ e @ w
    assert abs(zv - zs) / abs(zs) < 1e-10
