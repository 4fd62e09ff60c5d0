"""Numpy implementations of the hot loops.

Same contracts as the compiled extension `lylab._kernels`; `lylab.kernels`
picks whichever is available.  Everything here is deterministic: fixed
summation orders, no threading.
"""

import numpy as np

from .ddarith import (
    cdd_add,
    cdd_div,
    cdd_from_complex,
    cdd_mul,
    cdd_sub,
    dd_add_d,
    dd_exp,
)

_CHUNK = 1 << 20

BACKEND_NAME = "fallback"


def gray_subset_energies(nvars, pair_i, pair_j, pair_coupling, quad_masks, quad_coupling):
    """Field-free energies H0 for every sign configuration of `nvars` spins.

    Configuration `mask` has spin -1 on set bits, +1 elsewhere.  The energy is
    -sum_b J_b s_i s_j - sum_U J_U prod_{x in U} s_x.  Every bond contributes
    exactly +-J, so accumulating bond by bond in double-double keeps the sum
    exact to ~1e-32 relative.  Returns (hi, lo) arrays of length 2**nvars.
    """
    nmasks = 1 << int(nvars)
    pair_i = np.asarray(pair_i, dtype=np.int64)
    pair_j = np.asarray(pair_j, dtype=np.int64)
    pair_coupling = np.asarray(pair_coupling, dtype=np.float64)
    quad_masks = np.asarray(quad_masks, dtype=np.int64)
    quad_coupling = np.asarray(quad_coupling, dtype=np.float64)
    out_hi = np.empty(nmasks)
    out_lo = np.empty(nmasks)
    for start in range(0, nmasks, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, nmasks), dtype=np.int64)
        h_hi = np.zeros(masks.shape[0])
        h_lo = np.zeros(masks.shape[0])
        for i, j, cpl in zip(pair_i, pair_j, pair_coupling):
            parity = ((masks >> np.int64(i)) ^ (masks >> np.int64(j))) & 1
            # -J * s_i s_j = J * (2*parity - 1), exact in float64
            h_hi, h_lo = dd_add_d(h_hi, h_lo, cpl * (2.0 * parity - 1.0))
        for umask, cpl in zip(quad_masks, quad_coupling):
            parity = np.bitwise_count(masks & umask).astype(np.int64) & 1
            h_hi, h_lo = dd_add_d(h_hi, h_lo, cpl * (2.0 * parity - 1.0))
        out_hi[start : start + masks.shape[0]] = h_hi
        out_lo[start : start + masks.shape[0]] = h_lo
    return out_hi, out_lo


def dd_exp_arrays(a_hi, a_lo):
    a_hi = np.ascontiguousarray(a_hi, dtype=np.float64)
    a_lo = np.ascontiguousarray(a_lo, dtype=np.float64)
    return dd_exp(a_hi, a_lo)


def aberth_refine(c_re_hi, c_re_lo, c_im_hi, c_im_lo, z0, tol=1e-21, maxiter=80):
    """Aberth-Ehrlich root refinement in complex double-double.

    Coefficients ascending by degree, z0 complex128 starting points (one per
    root).  Returns (re_hi, re_lo, im_hi, im_lo, resid, iters) where resid is
    the normalized residual |p(z)| / sum_k |a_k| |z|^k at the final points.
    """
    c_re_hi = np.ascontiguousarray(c_re_hi, dtype=np.float64)
    c_re_lo = np.ascontiguousarray(c_re_lo, dtype=np.float64)
    c_im_hi = np.ascontiguousarray(c_im_hi, dtype=np.float64)
    c_im_lo = np.ascontiguousarray(c_im_lo, dtype=np.float64)
    z0 = np.ascontiguousarray(z0, dtype=np.complex128)
    m = z0.shape[0]
    if m == 0:
        e = np.empty(0)
        return e, e.copy(), e.copy(), e.copy(), e.copy(), 0

    n = c_re_hi.shape[0] - 1
    abs_c = np.hypot(c_re_hi + c_re_lo, c_im_hi + c_im_lo)

    def coeff(k, factor=1.0):
        return (np.full(m, c_re_hi[k] * factor), np.full(m, c_re_lo[k] * factor),
                np.full(m, c_im_hi[k] * factor), np.full(m, c_im_lo[k] * factor))

    def evaluate(z):
        zd = (z[0] + z[1]) + 1j * (z[2] + z[3])
        p = coeff(n)
        for k in range(n - 1, -1, -1):
            p = cdd_add(cdd_mul(p, z), coeff(k))
        dp = coeff(n, float(n))
        for k in range(n - 1, 0, -1):
            dp = cdd_add(cdd_mul(dp, z), coeff(k, float(k)))
        pabs = np.hypot(p[0] + p[1], p[2] + p[3])
        az = np.abs(zd)
        scale = np.full(m, abs_c[n])
        for k in range(n - 1, -1, -1):
            scale = scale * az + abs_c[k]
        scale = np.maximum(scale, np.finfo(float).tiny)
        return p, dp, pabs / scale, zd

    z = cdd_from_complex(z0)
    p, dp, resid, zd = evaluate(z)
    iters = 0
    prev_step = np.inf
    for iters in range(1, maxiter + 1):
        if resid.max() < tol:
            break
        dp_abs = np.hypot(dp[0] + dp[1], dp[2] + dp[3])
        tiny = dp_abs == 0.0
        if np.any(tiny):
            dp = (np.where(tiny, np.finfo(float).tiny, dp[0]), dp[1], dp[2], dp[3])
        newton = cdd_div(p, dp)
        nd = (newton[0] + newton[1]) + 1j * (newton[2] + newton[3])
        diff = zd[:, None] - zd[None, :]
        np.fill_diagonal(diff, np.inf)
        repulsion = (1.0 / diff).sum(axis=1)
        denom = 1.0 - nd * repulsion
        denom = np.where(np.abs(denom) < 0.2, 1.0, denom)
        corr = cdd_mul(newton, cdd_from_complex(1.0 / denom))
        z = cdd_sub(z, corr)
        p, dp, resid, zd = evaluate(z)
        step = np.abs((corr[0] + corr[1]) + 1j * (corr[2] + corr[3])).max()
        if step < 1e-28 * max(1.0, np.abs(zd).max()) and prev_step < 1e-26:
            break
        prev_step = step
    return z[0], z[1], z[2], z[3], resid, iters
