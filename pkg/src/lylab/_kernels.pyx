# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Gray-code subset energies, double-double exp and
Aberth-Ehrlich refinement in complex double-double.  Contracts match
`lylab._kernels_fallback`."""

from fractions import Fraction
from math import factorial

import numpy as np

from libc.math cimport INFINITY, fabs, floor, fma, hypot, ldexp
from libc.stdlib cimport free, malloc

BACKEND_NAME = "compiled"

cdef double LN2_HI = float.fromhex("0x1.62e42fefa39efp-1")
cdef double LN2_LO = float.fromhex("0x1.abc9e3b39803fp-56")
cdef double TINY = 2.2250738585072014e-308

cdef double INVF_HI[8]
cdef double INVF_LO[8]
for _k in range(8):
    _f = Fraction(1, factorial(_k + 3))
    _hi = float(_f)
    INVF_HI[_k] = _hi
    INVF_LO[_k] = float(_f - Fraction(_hi))


cdef struct dd:
    double hi
    double lo

cdef struct cdd:
    dd re
    dd im


cdef inline dd dd_make(double hi, double lo) noexcept nogil:
    cdef dd r
    r.hi = hi
    r.lo = lo
    return r

cdef inline dd two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double bb
    r.hi = a + b
    bb = r.hi - a
    r.lo = (a - (r.hi - bb)) + (b - bb)
    return r

cdef inline dd quick_two_sum(double a, double b) noexcept nogil:
    cdef dd r
    r.hi = a + b
    r.lo = b - (r.hi - a)
    return r

cdef inline dd two_prod(double a, double b) noexcept nogil:
    cdef dd r
    r.hi = a * b
    r.lo = fma(a, b, -r.hi)
    return r

cdef inline dd dd_add(dd a, dd b) noexcept nogil:
    cdef dd s = two_sum(a.hi, b.hi)
    cdef dd t = two_sum(a.lo, b.lo)
    cdef dd r = quick_two_sum(s.hi, s.lo + t.hi)
    return quick_two_sum(r.hi, r.lo + t.lo)

cdef inline dd dd_add_d(dd a, double b) noexcept nogil:
    cdef dd s = two_sum(a.hi, b)
    return quick_two_sum(s.hi, s.lo + a.lo)

cdef inline dd dd_neg(dd a) noexcept nogil:
    return dd_make(-a.hi, -a.lo)

cdef inline dd dd_mul(dd a, dd b) noexcept nogil:
    cdef dd p = two_prod(a.hi, b.hi)
    return quick_two_sum(p.hi, p.lo + (a.hi * b.lo + a.lo * b.hi))

cdef inline dd dd_mul_d(dd a, double b) noexcept nogil:
    cdef dd p = two_prod(a.hi, b)
    return quick_two_sum(p.hi, p.lo + a.lo * b)

cdef inline dd dd_sqr(dd a) noexcept nogil:
    cdef dd p = two_prod(a.hi, a.hi)
    return quick_two_sum(p.hi, p.lo + 2.0 * (a.hi * a.lo))

cdef inline dd dd_div(dd a, dd b) noexcept nogil:
    cdef double q1 = a.hi / b.hi
    cdef dd t = dd_mul_d(b, q1)
    cdef dd r = dd_add(a, dd_neg(t))
    cdef double q2 = r.hi / b.hi
    t = dd_mul_d(b, q2)
    r = dd_add(r, dd_neg(t))
    cdef double q3 = r.hi / b.hi
    cdef dd q = quick_two_sum(q1, q2)
    return dd_add_d(q, q3)

cdef inline dd dd_exp_one(dd a) noexcept nogil:
    cdef double m
    cdef dd t, r, p, s
    cdef int k, mi
    if a.hi < -709.0:
        return dd_make(0.0, 0.0)
    if a.hi > 709.0:
        return dd_make(INFINITY, 0.0)
    m = floor(a.hi / LN2_HI + 0.5)
    t = dd_mul_d(dd_make(LN2_HI, LN2_LO), m)
    r = dd_add(a, dd_neg(t))
    r.hi *= 1.0 / 512.0
    r.lo *= 1.0 / 512.0
    p = dd_sqr(r)
    s = dd_add(r, dd_make(p.hi * 0.5, p.lo * 0.5))
    p = dd_mul(p, r)
    for k in range(8):
        t = dd_mul(p, dd_make(INVF_HI[k], INVF_LO[k]))
        s = dd_add(s, t)
        p = dd_mul(p, r)
    for k in range(9):
        p = dd_sqr(s)
        s = dd_add(dd_make(2.0 * s.hi, 2.0 * s.lo), p)
    s = dd_add_d(s, 1.0)
    mi = <int> m
    return dd_make(ldexp(s.hi, mi), ldexp(s.lo, mi))


cdef inline cdd cdd_add(cdd a, cdd b) noexcept nogil:
    cdef cdd r
    r.re = dd_add(a.re, b.re)
    r.im = dd_add(a.im, b.im)
    return r

cdef inline cdd cdd_sub(cdd a, cdd b) noexcept nogil:
    cdef cdd r
    r.re = dd_add(a.re, dd_neg(b.re))
    r.im = dd_add(a.im, dd_neg(b.im))
    return r

cdef inline cdd cdd_mul(cdd a, cdd b) noexcept nogil:
    cdef cdd r
    cdef dd ac = dd_mul(a.re, b.re)
    cdef dd bd = dd_mul(a.im, b.im)
    cdef dd ad = dd_mul(a.re, b.im)
    cdef dd bc = dd_mul(a.im, b.re)
    r.re = dd_add(ac, dd_neg(bd))
    r.im = dd_add(ad, bc)
    return r

cdef inline cdd cdd_div(cdd a, cdd b) noexcept nogil:
    cdef cdd conj, num, r
    cdef dd den
    conj.re = b.re
    conj.im = dd_neg(b.im)
    num = cdd_mul(a, conj)
    den = dd_add(dd_sqr(b.re), dd_sqr(b.im))
    r.re = dd_div(num.re, den)
    r.im = dd_div(num.im, den)
    return r


cdef inline int ctz64(unsigned long long v) noexcept nogil:
    cdef int c = 0
    while (v & 1) == 0:
        v >>= 1
        c += 1
    return c


def gray_subset_energies(nvars, pair_i, pair_j, pair_coupling, quad_masks, quad_coupling):
    """Field-free energies H0 for every sign configuration of `nvars` spins.

    Configuration `mask` has spin -1 on set bits, +1 elsewhere; energy is
    -sum_b J_b s_i s_j - sum_U J_U prod s.  Walks masks in Gray-code order
    with exact +-2J updates accumulated in double-double.  Returns (hi, lo)
    arrays of length 2**nvars.
    """
    cdef int nv = int(nvars)
    if nv < 0 or nv > 30:
        raise ValueError("nvars out of range")
    pi_arr = np.ascontiguousarray(pair_i, dtype=np.int64)
    pj_arr = np.ascontiguousarray(pair_j, dtype=np.int64)
    pJ_arr = np.ascontiguousarray(pair_coupling, dtype=np.float64)
    qm_arr = np.ascontiguousarray(quad_masks, dtype=np.int64)
    qJ_arr = np.ascontiguousarray(quad_coupling, dtype=np.float64)
    cdef long long[::1] pi = pi_arr
    cdef long long[::1] pj = pj_arr
    cdef double[::1] pJ = pJ_arr
    cdef long long[::1] qm = qm_arr
    cdef double[::1] qJ = qJ_arr
    cdef Py_ssize_t npairs = pi.shape[0]
    cdef Py_ssize_t nquads = qm.shape[0]
    cdef Py_ssize_t nmasks = (<Py_ssize_t> 1) << nv

    out_hi = np.empty(nmasks)
    out_lo = np.empty(nmasks)
    cdef double[::1] oh = out_hi
    cdef double[::1] ol = out_lo

    # pair adjacency in CSR form
    deg_arr = np.zeros(nv + 1, dtype=np.int64)
    cdef long long[::1] deg = deg_arr
    cdef Py_ssize_t b, i, j
    for b in range(npairs):
        deg[pi[b] + 1] += 1
        deg[pj[b] + 1] += 1
    ptr_arr = np.cumsum(deg_arr).astype(np.int64)
    cdef long long[::1] ptr = ptr_arr
    fill_arr = ptr_arr.copy()
    cdef long long[::1] fill = fill_arr
    nbr_site_arr = np.zeros(2 * npairs, dtype=np.int64)
    nbr_J_arr = np.zeros(2 * npairs, dtype=np.float64)
    cdef long long[::1] nbr_site = nbr_site_arr
    cdef double[::1] nbr_J = nbr_J_arr
    for b in range(npairs):
        i = pi[b]
        j = pj[b]
        nbr_site[fill[i]] = j
        nbr_J[fill[i]] = pJ[b]
        fill[i] += 1
        nbr_site[fill[j]] = i
        nbr_J[fill[j]] = pJ[b]
        fill[j] += 1

    # quartic adjacency: for each member site, the three partner sites
    qdeg_arr = np.zeros(nv + 1, dtype=np.int64)
    cdef long long[::1] qdeg = qdeg_arr
    cdef unsigned long long um
    cdef int s0, s1, s2, s3
    cdef int sites[4]
    cdef int ns, k
    for b in range(nquads):
        um = <unsigned long long> qm[b]
        ns = 0
        while um:
            sites[ns] = ctz64(um)
            um &= um - 1
            ns += 1
        if ns != 4:
            raise ValueError("quartic mask must have exactly 4 bits set")
        for k in range(4):
            qdeg[sites[k] + 1] += 1
    qptr_arr = np.cumsum(qdeg_arr).astype(np.int64)
    cdef long long[::1] qptr = qptr_arr
    qfill_arr = qptr_arr.copy()
    cdef long long[::1] qfill = qfill_arr
    qa_arr = np.zeros(4 * nquads, dtype=np.int64)
    qb_arr = np.zeros(4 * nquads, dtype=np.int64)
    qc_arr = np.zeros(4 * nquads, dtype=np.int64)
    qJv_arr = np.zeros(4 * nquads, dtype=np.float64)
    cdef long long[::1] qa = qa_arr
    cdef long long[::1] qb = qb_arr
    cdef long long[::1] qc = qc_arr
    cdef double[::1] qJv = qJv_arr
    cdef Py_ssize_t slot
    cdef int m0
    for b in range(nquads):
        um = <unsigned long long> qm[b]
        ns = 0
        while um:
            sites[ns] = ctz64(um)
            um &= um - 1
            ns += 1
        for k in range(4):
            m0 = sites[k]
            slot = qfill[m0]
            qa[slot] = sites[(k + 1) % 4]
            qb[slot] = sites[(k + 2) % 4]
            qc[slot] = sites[(k + 3) % 4]
            qJv[slot] = qJ[b]
            qfill[m0] += 1

    cdef signed char *sgn = <signed char *> malloc(nv if nv > 0 else 1)
    if sgn == NULL:
        raise MemoryError()
    cdef dd cur = dd_make(0.0, 0.0)
    cdef Py_ssize_t t, idx
    cdef int bit
    cdef double delta
    with nogil:
        for k in range(nv):
            sgn[k] = 1
        for b in range(npairs):
            cur = dd_add_d(cur, -pJ[b])
        for b in range(nquads):
            cur = dd_add_d(cur, -qJ[b])
        oh[0] = cur.hi
        ol[0] = cur.lo
        for t in range(1, nmasks):
            bit = ctz64(<unsigned long long> t)
            for slot in range(ptr[bit], ptr[bit + 1]):
                delta = 2.0 * nbr_J[slot] * sgn[bit] * sgn[nbr_site[slot]]
                cur = dd_add_d(cur, delta)
            for slot in range(qptr[bit], qptr[bit + 1]):
                delta = 2.0 * qJv[slot] * sgn[bit] * sgn[qa[slot]] * sgn[qb[slot]] * sgn[qc[slot]]
                cur = dd_add_d(cur, delta)
            sgn[bit] = -sgn[bit]
            idx = t ^ (t >> 1)
            oh[idx] = cur.hi
            ol[idx] = cur.lo
    free(sgn)
    return out_hi, out_lo


def dd_exp_arrays(a_hi, a_lo):
    ah_arr = np.ascontiguousarray(a_hi, dtype=np.float64)
    al_arr = np.ascontiguousarray(a_lo, dtype=np.float64)
    cdef double[::1] ah = ah_arr
    cdef double[::1] al = al_arr
    cdef Py_ssize_t n = ah.shape[0]
    out_hi = np.empty(n)
    out_lo = np.empty(n)
    cdef double[::1] oh = out_hi
    cdef double[::1] ol = out_lo
    cdef Py_ssize_t i
    cdef dd r
    with nogil:
        for i in range(n):
            r = dd_exp_one(dd_make(ah[i], al[i]))
            oh[i] = r.hi
            ol[i] = r.lo
    return out_hi, out_lo


def aberth_refine(c_re_hi, c_re_lo, c_im_hi, c_im_lo, z0, double tol=1e-21, int maxiter=80):
    """Aberth-Ehrlich root refinement in complex double-double.

    Coefficients ascending by degree, z0 complex128 starting points (one per
    root).  Returns (re_hi, re_lo, im_hi, im_lo, resid, iters) where resid is
    the normalized residual |p(z)| / sum_k |a_k| |z|^k at the final points.
    """
    crh_arr = np.ascontiguousarray(c_re_hi, dtype=np.float64)
    crl_arr = np.ascontiguousarray(c_re_lo, dtype=np.float64)
    cih_arr = np.ascontiguousarray(c_im_hi, dtype=np.float64)
    cil_arr = np.ascontiguousarray(c_im_lo, dtype=np.float64)
    z0_arr = np.ascontiguousarray(z0, dtype=np.complex128)
    cdef double[::1] crh = crh_arr
    cdef double[::1] crl = crl_arr
    cdef double[::1] cih = cih_arr
    cdef double[::1] cil = cil_arr
    cdef Py_ssize_t m = z0_arr.shape[0]
    cdef Py_ssize_t n = crh.shape[0] - 1
    if m == 0:
        e = np.empty(0)
        return e, e.copy(), e.copy(), e.copy(), e.copy(), 0

    abs_c_arr = np.hypot(crh_arr + crl_arr, cih_arr + cil_arr)
    cdef double[::1] abs_c = abs_c_arr

    zr_hi = np.ascontiguousarray(z0_arr.real)
    zr_lo = np.zeros(m)
    zi_hi = np.ascontiguousarray(z0_arr.imag)
    zi_lo = np.zeros(m)
    resid_arr = np.empty(m)
    cdef double[::1] vrh = zr_hi
    cdef double[::1] vrl = zr_lo
    cdef double[::1] vih = zi_hi
    cdef double[::1] vil = zi_lo
    cdef double[::1] resid = resid_arr

    cdef cdd *pv = <cdd *> malloc(m * sizeof(cdd))
    cdef cdd *dpv = <cdd *> malloc(m * sizeof(cdd))
    if pv == NULL or dpv == NULL:
        if pv != NULL:
            free(pv)
        if dpv != NULL:
            free(dpv)
        raise MemoryError()

    cdef Py_ssize_t i, j
    cdef long k
    cdef cdd z, p, dp, ck, newton, corr, factor
    cdef double complex zd_i, diff, rep, denom, nd
    cdef double az, scale, pabs, step, max_step, max_resid, max_az, prev_step
    cdef int it = 0
    cdef bint done = False

    prev_step = INFINITY
    with nogil:
        # initial evaluation
        for i in range(m):
            z.re = dd_make(vrh[i], vrl[i])
            z.im = dd_make(vih[i], vil[i])
            p.re = dd_make(crh[n], crl[n])
            p.im = dd_make(cih[n], cil[n])
            for k in range(n - 1, -1, -1):
                p = cdd_mul(p, z)
                ck.re = dd_make(crh[k], crl[k])
                ck.im = dd_make(cih[k], cil[k])
                p = cdd_add(p, ck)
            dp.re = dd_mul_d(dd_make(crh[n], crl[n]), <double> n)
            dp.im = dd_mul_d(dd_make(cih[n], cil[n]), <double> n)
            for k in range(n - 1, 0, -1):
                dp = cdd_mul(dp, z)
                ck.re = dd_mul_d(dd_make(crh[k], crl[k]), <double> k)
                ck.im = dd_mul_d(dd_make(cih[k], cil[k]), <double> k)
                dp = cdd_add(dp, ck)
            pv[i] = p
            dpv[i] = dp
            az = hypot(vrh[i] + vrl[i], vih[i] + vil[i])
            scale = abs_c[n]
            for k in range(n - 1, -1, -1):
                scale = scale * az + abs_c[k]
            if scale < TINY:
                scale = TINY
            pabs = hypot(p.re.hi + p.re.lo, p.im.hi + p.im.lo)
            resid[i] = pabs / scale

        for it in range(1, maxiter + 1):
            max_resid = 0.0
            for i in range(m):
                if resid[i] > max_resid:
                    max_resid = resid[i]
            if max_resid < tol:
                break
            max_step = 0.0
            for i in range(m):
                p = pv[i]
                dp = dpv[i]
                if hypot(dp.re.hi + dp.re.lo, dp.im.hi + dp.im.lo) == 0.0:
                    dp.re = dd_make(TINY, 0.0)
                newton = cdd_div(p, dp)
                nd = (newton.re.hi + newton.re.lo) + 1j * (newton.im.hi + newton.im.lo)
                zd_i = (vrh[i] + vrl[i]) + 1j * (vih[i] + vil[i])
                rep = 0.0
                for j in range(m):
                    if j != i:
                        diff = zd_i - ((vrh[j] + vrl[j]) + 1j * (vih[j] + vil[j]))
                        if diff != 0.0:
                            rep = rep + 1.0 / diff
                denom = 1.0 - nd * rep
                if abs(denom) < 0.2:
                    denom = 1.0
                denom = 1.0 / denom
                factor.re = dd_make(denom.real, 0.0)
                factor.im = dd_make(denom.imag, 0.0)
                corr = cdd_mul(newton, factor)
                z.re = dd_add(dd_make(vrh[i], vrl[i]), dd_neg(corr.re))
                z.im = dd_add(dd_make(vih[i], vil[i]), dd_neg(corr.im))
                vrh[i] = z.re.hi
                vrl[i] = z.re.lo
                vih[i] = z.im.hi
                vil[i] = z.im.lo
                step = hypot(corr.re.hi + corr.re.lo, corr.im.hi + corr.im.lo)
                if step > max_step:
                    max_step = step
            # re-evaluate at the moved points
            max_az = 0.0
            for i in range(m):
                z.re = dd_make(vrh[i], vrl[i])
                z.im = dd_make(vih[i], vil[i])
                p.re = dd_make(crh[n], crl[n])
                p.im = dd_make(cih[n], cil[n])
                for k in range(n - 1, -1, -1):
                    p = cdd_mul(p, z)
                    ck.re = dd_make(crh[k], crl[k])
                    ck.im = dd_make(cih[k], cil[k])
                    p = cdd_add(p, ck)
                dp.re = dd_mul_d(dd_make(crh[n], crl[n]), <double> n)
                dp.im = dd_mul_d(dd_make(cih[n], cil[n]), <double> n)
                for k in range(n - 1, 0, -1):
                    dp = cdd_mul(dp, z)
                    ck.re = dd_mul_d(dd_make(crh[k], crl[k]), <double> k)
                    ck.im = dd_mul_d(dd_make(cih[k], cil[k]), <double> k)
                    dp = cdd_add(dp, ck)
                pv[i] = p
                dpv[i] = dp
                az = hypot(vrh[i] + vrl[i], vih[i] + vil[i])
                if az > max_az:
                    max_az = az
                scale = abs_c[n]
                for k in range(n - 1, -1, -1):
                    scale = scale * az + abs_c[k]
                if scale < TINY:
                    scale = TINY
                pabs = hypot(p.re.hi + p.re.lo, p.im.hi + p.im.lo)
                resid[i] = pabs / scale
            if max_az < 1.0:
                max_az = 1.0
            if max_step < 1e-28 * max_az and prev_step < 1e-26:
                break
            prev_step = max_step
    free(pv)
    free(dpv)
    return zr_hi, zr_lo, zi_hi, zi_lo, resid_arr, it
