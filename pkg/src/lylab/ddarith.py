"""Vectorized double-double (DD) arithmetic on float64 numpy arrays.

A DD value is an unevaluated sum hi + lo with |lo| <= ulp(hi)/2, giving about
31 significant digits.  All functions broadcast elementwise and return plain
(hi, lo) tuples of arrays; complex DD values are (re_hi, re_lo, im_hi, im_lo).
Algorithms follow the usual error-free transformations (Dekker, Knuth) plus
the exp/log/sqrt schemes from the QD library.
"""

from fractions import Fraction
from math import factorial

import numpy as np

# 2^-104, roundoff unit of a DD value
DD_EPS = 2.0 ** -104

_SPLITTER = 134217729.0  # 2^27 + 1

LN2_HI = float.fromhex("0x1.62e42fefa39efp-1")
LN2_LO = float.fromhex("0x1.abc9e3b39803fp-56")


def _dd_const(frac):
    hi = float(frac)
    lo = float(frac - Fraction(hi))
    return hi, lo


# 1/k! for k = 3..17, enough for the exp Taylor tail after range reduction
_INV_FACT = [_dd_const(Fraction(1, factorial(k))) for k in range(3, 18)]


def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def quick_two_sum(a, b):
    """Requires |a| >= |b| (or a == 0)."""
    s = a + b
    err = b - (s - a)
    return s, err


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    a_hi, a_lo = _split(a)
    b_hi, b_lo = _split(b)
    err = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, err


def dd_add(a_hi, a_lo, b_hi, b_lo):
    s, e = two_sum(a_hi, b_hi)
    t, f = two_sum(a_lo, b_lo)
    e = e + t
    s, e = quick_two_sum(s, e)
    e = e + f
    return quick_two_sum(s, e)


def dd_add_d(a_hi, a_lo, b):
    s, e = two_sum(a_hi, b)
    e = e + a_lo
    return quick_two_sum(s, e)


def dd_neg(a_hi, a_lo):
    return -a_hi, -a_lo


def dd_sub(a_hi, a_lo, b_hi, b_lo):
    return dd_add(a_hi, a_lo, -b_hi, -b_lo)


def dd_mul(a_hi, a_lo, b_hi, b_lo):
    p, e = two_prod(a_hi, b_hi)
    e = e + (a_hi * b_lo + a_lo * b_hi)
    return quick_two_sum(p, e)


def dd_mul_d(a_hi, a_lo, b):
    p, e = two_prod(a_hi, b)
    e = e + a_lo * b
    return quick_two_sum(p, e)


def dd_sqr(a_hi, a_lo):
    p, e = two_prod(a_hi, a_hi)
    e = e + 2.0 * (a_hi * a_lo)
    return quick_two_sum(p, e)


def dd_div(a_hi, a_lo, b_hi, b_lo):
    q1 = a_hi / b_hi
    t_hi, t_lo = dd_mul_d(b_hi, b_lo, q1)
    r_hi, r_lo = dd_sub(a_hi, a_lo, t_hi, t_lo)
    q2 = r_hi / b_hi
    t_hi, t_lo = dd_mul_d(b_hi, b_lo, q2)
    r_hi, r_lo = dd_sub(r_hi, r_lo, t_hi, t_lo)
    q3 = r_hi / b_hi
    q_hi, q_lo = quick_two_sum(q1, q2)
    return dd_add_d(q_hi, q_lo, q3)


def dd_mul_pow2(a_hi, a_lo, p):
    """Multiply by an exact power of two."""
    return a_hi * p, a_lo * p


def dd_exp(a_hi, a_lo):
    """exp of a DD value, elementwise.

    Range reduction a = m*ln2 + r with |r| <= ln2/2, then r/512, a fixed
    Taylor tail and nine doublings.  Relative error around 1e-31; underflows
    to 0 below -709 and overflows to inf above 709.
    """
    a_hi = np.asarray(a_hi, dtype=np.float64)
    a_lo, _ = np.broadcast_arrays(np.asarray(a_lo, dtype=np.float64), a_hi)
    m = np.floor(a_hi / LN2_HI + 0.5)
    t_hi, t_lo = dd_mul_d(LN2_HI, LN2_LO, m)
    r_hi, r_lo = dd_add(a_hi, a_lo, -t_hi, -t_lo)
    r_hi, r_lo = dd_mul_pow2(r_hi, r_lo, 1.0 / 512.0)

    # s = exp(r) - 1 by Taylor: r + r^2/2 + sum_{k>=3} r^k/k!
    p_hi, p_lo = dd_sqr(r_hi, r_lo)
    s_hi, s_lo = dd_add(r_hi, r_lo, *dd_mul_pow2(p_hi, p_lo, 0.5))
    p_hi, p_lo = dd_mul(p_hi, p_lo, r_hi, r_lo)
    for f_hi, f_lo in _INV_FACT[:8]:
        t_hi, t_lo = dd_mul(p_hi, p_lo, f_hi, f_lo)
        s_hi, s_lo = dd_add(s_hi, s_lo, t_hi, t_lo)
        p_hi, p_lo = dd_mul(p_hi, p_lo, r_hi, r_lo)

    # (1+s)^2 - 1 = 2s + s^2, applied 9 times to undo the /512
    for _ in range(9):
        p_hi, p_lo = dd_sqr(s_hi, s_lo)
        s_hi, s_lo = dd_add(*dd_mul_pow2(s_hi, s_lo, 2.0), p_hi, p_lo)
    s_hi, s_lo = dd_add_d(s_hi, s_lo, 1.0)

    scale = np.exp2(np.clip(m, -1074.0, 1023.0))  # exact power of two
    out_hi = s_hi * scale
    out_lo = s_lo * scale
    lo_mask = a_hi < -709.0
    hi_mask = a_hi > 709.0
    if np.any(lo_mask) or np.any(hi_mask):
        out_hi = np.where(lo_mask, 0.0, np.where(hi_mask, np.inf, out_hi))
        out_lo = np.where(lo_mask | hi_mask, 0.0, out_lo)
    return out_hi, out_lo


def dd_log(a_hi, a_lo):
    """log of a positive DD value: double seed plus one DD Newton step."""
    a_hi = np.asarray(a_hi, dtype=np.float64)
    x = np.log(a_hi)
    e_hi, e_lo = dd_exp(-x, np.zeros_like(x))
    p_hi, p_lo = dd_mul(a_hi, a_lo, e_hi, e_lo)
    t_hi, t_lo = dd_add_d(p_hi, p_lo, -1.0)
    return dd_add_d(t_hi, t_lo, x)


def dd_sqrt(a_hi, a_lo):
    a_hi = np.asarray(a_hi, dtype=np.float64)
    safe = np.where(a_hi > 0.0, a_hi, 1.0)
    x = 1.0 / np.sqrt(safe)
    ax = safe * x
    t_hi, t_lo = two_prod(ax, ax)
    d_hi, d_lo = dd_add(safe, a_lo, -t_hi, -t_lo)
    s_hi, s_lo = two_sum(ax, d_hi * (x * 0.5))
    zero = a_hi <= 0.0
    return np.where(zero, 0.0, s_hi), np.where(zero, 0.0, s_lo)


def dd_sum(hi, lo, axis=-1):
    """Deterministic pairwise reduction along `axis` (fixed binary tree)."""
    hi = np.moveaxis(np.asarray(hi, dtype=np.float64), axis, -1)
    lo = np.moveaxis(np.asarray(lo, dtype=np.float64), axis, -1)
    lo = np.broadcast_to(lo, hi.shape).copy()
    hi = hi.copy()
    n = hi.shape[-1]
    while n > 1:
        m = n // 2
        h, l = dd_add(hi[..., 0 : 2 * m : 2], lo[..., 0 : 2 * m : 2],
                      hi[..., 1 : 2 * m : 2], lo[..., 1 : 2 * m : 2])
        if n % 2:
            h = np.concatenate([h, hi[..., -1:]], axis=-1)
            l = np.concatenate([l, lo[..., -1:]], axis=-1)
        hi, lo = h, l
        n = hi.shape[-1]
    return hi[..., 0], lo[..., 0]


# complex DD helpers

def cdd_from_complex(z):
    z = np.asarray(z, dtype=np.complex128)
    zero = np.zeros_like(z.real)
    return z.real.copy(), zero.copy(), z.imag.copy(), zero.copy()


def cdd_to_complex(re_hi, re_lo, im_hi, im_lo):
    return (re_hi + re_lo) + 1j * (im_hi + im_lo)


def cdd_add(a, b):
    ar, arl, ai, ail = a
    br, brl, bi, bil = b
    re = dd_add(ar, arl, br, brl)
    im = dd_add(ai, ail, bi, bil)
    return re + im


def cdd_sub(a, b):
    ar, arl, ai, ail = a
    br, brl, bi, bil = b
    re = dd_add(ar, arl, -br, -brl)
    im = dd_add(ai, ail, -bi, -bil)
    return re + im


def cdd_mul(a, b):
    ar, arl, ai, ail = a
    br, brl, bi, bil = b
    ac = dd_mul(ar, arl, br, brl)
    bd = dd_mul(ai, ail, bi, bil)
    ad = dd_mul(ar, arl, bi, bil)
    bc = dd_mul(ai, ail, br, brl)
    re = dd_add(ac[0], ac[1], -bd[0], -bd[1])
    im = dd_add(ad[0], ad[1], bc[0], bc[1])
    return re + im


def cdd_abs2(a):
    ar, arl, ai, ail = a
    rr = dd_sqr(ar, arl)
    ii = dd_sqr(ai, ail)
    return dd_add(rr[0], rr[1], ii[0], ii[1])


def cdd_abs(a):
    return dd_sqrt(*cdd_abs2(a))


def cdd_div(a, b):
    br, brl, bi, bil = b
    conj = (br, brl, -bi, -bil)
    num = cdd_mul(a, conj)
    den_hi, den_lo = cdd_abs2(b)
    re = dd_div(num[0], num[1], den_hi, den_lo)
    im = dd_div(num[2], num[3], den_hi, den_lo)
    return re + im
