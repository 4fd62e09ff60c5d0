import mpmath
import numpy as np
import pytest

from lylab import ddarith as dd

mpmath.mp.prec = 160


def mpf_pair(hi, lo):
    return mpmath.mpf(float(hi)) + mpmath.mpf(float(lo))


def rel_err(hi, lo, exact):
    got = mpf_pair(hi, lo)
    if exact == 0:
        return abs(got)
    return abs((got - exact) / exact)


def random_dd(rng, n, scale=1.0):
    hi = (rng.random(n) * 2.0 - 1.0) * scale
    lo = (rng.random(n) * 2.0 - 1.0) * np.abs(hi) * 1e-17
    hi, lo = dd.two_sum(hi, lo)
    return hi, lo


def test_two_sum_exact():
    rng = np.random.default_rng(1)
    a = rng.standard_normal(100)
    b = rng.standard_normal(100) * 1e-10
    s, e = dd.two_sum(a, b)
    for i in range(100):
        assert mpmath.mpf(s[i]) + mpmath.mpf(e[i]) == mpmath.mpf(a[i]) + mpmath.mpf(b[i])


def test_two_prod_exact():
    rng = np.random.default_rng(2)
    a = rng.standard_normal(100)
    b = rng.standard_normal(100)
    p, e = dd.two_prod(a, b)
    for i in range(100):
        assert mpmath.mpf(p[i]) + mpmath.mpf(e[i]) == mpmath.mpf(a[i]) * mpmath.mpf(b[i])


@pytest.mark.parametrize("op,mpop", [
    (dd.dd_add, lambda x, y: x + y),
    (dd.dd_mul, lambda x, y: x * y),
    (dd.dd_div, lambda x, y: x / y),
])
def test_dd_binary_ops(op, mpop):
    rng = np.random.default_rng(3)
    a_hi, a_lo = random_dd(rng, 50, scale=10.0)
    b_hi, b_lo = random_dd(rng, 50, scale=3.0)
    b_hi = np.where(np.abs(b_hi) < 1e-2, 1.0 + b_hi, b_hi)  # keep divisors away from 0
    r_hi, r_lo = op(a_hi, a_lo, b_hi, b_lo)
    for i in range(50):
        exact = mpop(mpf_pair(a_hi[i], a_lo[i]), mpf_pair(b_hi[i], b_lo[i]))
        assert rel_err(r_hi[i], r_lo[i], exact) < 1e-29


def test_dd_exp_wide_range():
    rng = np.random.default_rng(4)
    x = rng.uniform(-250.0, 250.0, 200)
    x_lo = rng.standard_normal(200) * 1e-18
    r_hi, r_lo = dd.dd_exp(x, x_lo)
    for i in range(200):
        exact = mpmath.exp(mpf_pair(x[i], x_lo[i]))
        assert rel_err(r_hi[i], r_lo[i], exact) < 5e-30


def test_dd_exp_extremes():
    hi, lo = dd.dd_exp(np.array([-800.0, 800.0, 0.0]), np.zeros(3))
    assert hi[0] == 0.0
    assert np.isinf(hi[1])
    assert hi[2] == 1.0 and lo[2] == 0.0


def test_dd_log_inverts_exp():
    rng = np.random.default_rng(5)
    x = rng.uniform(-50.0, 50.0, 100)
    e_hi, e_lo = dd.dd_exp(x, np.zeros_like(x))
    l_hi, l_lo = dd.dd_log(e_hi, e_lo)
    for i in range(100):
        assert abs(mpf_pair(l_hi[i], l_lo[i]) - mpmath.mpf(x[i])) < 1e-29 * max(1.0, abs(x[i]))


def test_dd_sqrt():
    rng = np.random.default_rng(6)
    a_hi, a_lo = random_dd(rng, 50, scale=100.0)
    a_hi = np.abs(a_hi)
    r_hi, r_lo = dd.dd_sqrt(a_hi, a_lo)
    for i in range(50):
        exact = mpmath.sqrt(mpf_pair(a_hi[i], a_lo[i]))
        assert rel_err(r_hi[i], r_lo[i], exact) < 1e-29
    z_hi, z_lo = dd.dd_sqrt(np.array([0.0]), np.array([0.0]))
    assert z_hi[0] == 0.0


def test_dd_sum_cancellation():
    # alternating large terms cancel; pairwise DD keeps ~1e-31 of the scale
    n = 1024
    hi = np.empty(n)
    hi[0::2] = 1e8
    hi[1::2] = -1e8
    hi[-1] = 1e8 + 1.0  # odd one out
    hi[0] = 0.5
    lo = np.zeros(n)
    s_hi, s_lo = dd.dd_sum(hi, lo)
    exact = sum(mpmath.mpf(v) for v in hi)
    assert abs(mpf_pair(s_hi, s_lo) - exact) < 1e-20


def test_dd_sum_matches_mpmath_random():
    rng = np.random.default_rng(7)
    hi, lo = random_dd(rng, 333, scale=1e6)
    s_hi, s_lo = dd.dd_sum(hi, lo)
    exact = sum(mpf_pair(h, l) for h, l in zip(hi, lo))
    assert abs(mpf_pair(s_hi, s_lo) - exact) / abs(exact) < 1e-28


def test_cdd_mul_div_roundtrip():
    rng = np.random.default_rng(8)
    z = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    w = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    a = dd.cdd_from_complex(z)
    b = dd.cdd_from_complex(w)
    prod = dd.cdd_mul(a, b)
    back = dd.cdd_div(prod, b)
    err = np.abs(dd.cdd_to_complex(*back) - z)
    assert err.max() < 1e-15 * np.abs(z).max()
    for i in range(40):
        exact = mpmath.mpc(z[i]) * mpmath.mpc(w[i])
        got = mpf_pair(prod[0][i], prod[1][i]) + 1j * mpf_pair(prod[2][i], prod[3][i])
        assert abs(got - exact) < 1e-29 * abs(exact)


def test_cdd_abs():
    a = dd.cdd_from_complex(np.array([3.0 + 4.0j, 1e-8 + 1e-8j]))
    r_hi, r_lo = dd.cdd_abs(a)
    assert abs(mpf_pair(r_hi[0], r_lo[0]) - 5) < 1e-29
    exact = mpmath.sqrt(mpmath.mpf(2)) * mpmath.mpf(1e-8)
    assert abs(mpf_pair(r_hi[1], r_lo[1]) - exact) < 1e-36
