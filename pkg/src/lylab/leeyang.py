"""Partition-function zeros: circle verification, zero-free regions, converse.

Zero location works on the activity polynomial (roots refined in
double-double), zero-free scans work on direct partition evaluations over
field grids, and the converse probe tests the Lee-Yang property of a
coefficient family before attempting a pair-interaction factorization.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import ddarith as dd
from . import kernels
from .polyengine import (ActivityPolynomial, PartitionScanner,
                         _config_energies_weights, _site_states,
                         check_quartic_ly_conditions, coefficient_power,
                         evaluate_activity, partition_polynomial,
                         uniform_reduction)
from .randomgen import SplitMix64

_WITNESS_CAP = 512


@dataclass(frozen=True)
class GridSpec:
    """Rectangular complex grid, nre x nim points, endpoints included."""

    re0: float = 0.05
    re1: float = 2.0
    nre: int = 41
    im0: float = -2.0
    im1: float = 2.0
    nim: int = 41

    def __post_init__(self):
        if self.nre < 1 or self.nim < 1:
            raise ValueError("grid needs at least one point per axis")

    def reals(self):
        return np.linspace(self.re0, self.re1, self.nre)

    def imags(self):
        return np.linspace(self.im0, self.im1, self.nim)

    @property
    def npoints(self):
        return self.nre * self.nim

    @staticmethod
    def parse(text):
        """Parse "re0,re1,nre,im0,im1,nim" (CLI form)."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 6:
            raise ValueError("grid spec needs 6 comma-separated values")
        return GridSpec(float(parts[0]), float(parts[1]), int(parts[2]),
                        float(parts[3]), float(parts[4]), int(parts[5]))


@dataclass(frozen=True)
class RegionSpec:
    """Field-space region: where a zero-free statement is claimed to hold."""

    variant: str  # "half_plane" | "cone_D" | "omega_N" | "rectangle" | "disc"
    nmodes: int = 0
    ncomp: int = 0
    sign: int = 1
    bounds: tuple = ()  # rectangle: (re0, re1, im0, im1)
    center: complex = 0j
    radius: float = 0.0

    @staticmethod
    def half_plane():
        return RegionSpec("half_plane")

    @staticmethod
    def cone(nmodes):
        return RegionSpec("cone_D", nmodes=int(nmodes))

    @staticmethod
    def omega(ncomp, sign=1):
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        return RegionSpec("omega_N", ncomp=int(ncomp), sign=sign)

    @staticmethod
    def rectangle(re0, re1, im0, im1):
        return RegionSpec("rectangle", bounds=(re0, re1, im0, im1))

    @staticmethod
    def disc(center, radius):
        return RegionSpec("disc", center=complex(center), radius=float(radius))

    def contains(self, h, eps=()):
        """Membership of a scalar field point (with modulation amplitudes
        `eps` for the cone variant)."""
        h = complex(h)
        if self.variant == "half_plane":
            return h.real > 0.0
        if self.variant == "cone_D":
            return h.real > sum(abs(complex(e)) for e in eps)
        if self.variant == "rectangle":
            r0, r1, i0, i1 = self.bounds
            return r0 <= h.real <= r1 and i0 <= h.imag <= i1
        if self.variant == "disc":
            return abs(h - self.center) < self.radius
        raise ValueError(f"scalar membership undefined for {self.variant!r}")

    def contains_vector(self, hvec):
        """Membership of a component-field vector (omega_N variant)."""
        if self.variant != "omega_N":
            raise ValueError(f"vector membership undefined for {self.variant!r}")
        hvec = [complex(c) for c in hvec]
        return self.sign * hvec[0].real > sum(abs(c) for c in hvec[1:])


@dataclass(frozen=True)
class ScanReport:
    min_abs: float
    argmin: complex
    npoints: int
    in_region_points: int
    margin: float
    passed: bool  # min_abs > margin over the in-region points
    witnesses: tuple  # ((point, normalized |Z|, in_region), ...)
    normalization: str = ""
    note: str = ""

    def to_dict(self):
        return {
            "min_abs": self.min_abs,
            "argmin": {"re": self.argmin.real, "im": self.argmin.imag},
            "npoints": self.npoints,
            "in_region_points": self.in_region_points,
            "margin": self.margin,
            "passed": self.passed,
            "witnesses": [
                {"re": complex(p).real, "im": complex(p).imag,
                 "normalized_abs": v, "in_region": bool(r)}
                for p, v, r in self.witnesses
            ],
            "normalization": self.normalization,
            "note": self.note,
        }


@dataclass(frozen=True)
class RootSet:
    roots: np.ndarray  # complex128, collapsed
    roots_dd: tuple  # (re_hi, re_lo, im_hi, im_lo)
    residuals: np.ndarray  # normalized |p(z)| / sum |a_k||z|^k
    iterations: int
    converged: bool
    clusters: tuple  # index groups with overlapping inclusion disks

    @property
    def degree(self):
        return self.roots.shape[0]


@dataclass(frozen=True)
class CircleReport:
    roots: RootSet
    deviations: np.ndarray  # ||z| - 1| per root, measured in double-double
    cluster_deviations: tuple  # per cluster, from the refined center
    max_abs_deviation: float  # simple roots raw, cluster members via center
    theorem_applies: bool
    violations: tuple
    on_circle: bool
    passed: bool  # no counterexample: applies -> on_circle
    tol: float
    model_hash: str = ""


def roots_activity(a_hi, a_lo=None, refine_tol=1e-21, maxiter=100,
                   resid_bound=1e-20):
    """All roots of sum_k a_k z^k, companion seeds + Aberth refinement.

    Coefficients come as a double-double pair (a_lo may be omitted), real,
    ascending.  Clusters are index groups whose inclusion disks of radius
    deg * |p/p'| overlap; positions inside a cluster are only accurate to the
    disk radius even when residuals converge.
    """
    a_hi = np.asarray(a_hi, dtype=float)
    a_lo = np.zeros_like(a_hi) if a_lo is None else np.asarray(a_lo, dtype=float)
    while a_hi.shape[0] > 1 and a_hi[-1] == 0.0 and a_lo[-1] == 0.0:
        a_hi, a_lo = a_hi[:-1], a_lo[:-1]
    deg = a_hi.shape[0] - 1
    if deg < 1:
        raise ValueError("polynomial degree must be at least 1")
    seeds = np.roots((a_hi + a_lo)[::-1]).astype(complex)
    zeros = np.zeros_like(a_hi)
    rh, rl, ih, il, resid, iters = kernels.aberth_refine(
        a_hi, a_lo, zeros, zeros.copy(), seeds, tol=refine_tol, maxiter=maxiter)
    roots = (rh + rl) + 1j * (ih + il)
    converged = bool(resid.max() < resid_bound)
    clusters = _inclusion_clusters(a_hi, a_lo, roots, resid)
    return RootSet(roots, (rh, rl, ih, il), resid, int(iters), converged, clusters)


def _inclusion_clusters(a_hi, a_lo, roots, resid):
    """Groups of roots whose disks of radius deg * |p(z)/p'(z)| overlap.

    p and p' are evaluated in double-double so near-multiple roots give an
    honest (large) Newton step instead of rounding noise.
    """
    deg = a_hi.shape[0] - 1
    if deg < 2:
        return ()
    d_hi, d_lo = dd.dd_mul_d(a_hi[1:], a_lo[1:], 1.0)
    k = np.arange(1, deg + 1, dtype=float)
    d_hi, d_lo = dd.dd_mul(d_hi, d_lo, k, np.zeros_like(k))
    absz = np.abs(roots)
    scale = np.zeros_like(absz)
    pw = np.ones_like(absz)
    for c_hi, c_lo in zip(a_hi, a_lo):
        scale += abs(c_hi + c_lo) * pw
        pw *= absz
    p_abs = resid * np.maximum(scale, 1e-300)
    dp = _dd_poly_eval(d_hi, d_lo, roots)
    radius = np.minimum(deg * p_abs / np.maximum(np.abs(dp), 1e-300), 0.5)
    parent = list(range(deg))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(deg):
        for j in range(i + 1, deg):
            if abs(roots[i] - roots[j]) <= 2.0 * (radius[i] + radius[j]):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(deg):
        groups.setdefault(find(i), []).append(i)
    return tuple(tuple(g) for g in groups.values() if len(g) > 1)


def _cdd_horner(c_hi, c_lo, zc):
    """Horner in complex double-double; zc and the result are CDD tuples."""
    m = zc[0].shape[0]
    n = c_hi.shape[0] - 1
    p = (np.full(m, c_hi[n]), np.full(m, c_lo[n]), np.zeros(m), np.zeros(m))
    for k in range(n - 1, -1, -1):
        p = dd.cdd_mul(p, zc)
        p = dd.cdd_add(p, (np.full(m, c_hi[k]), np.full(m, c_lo[k]),
                           np.zeros(m), np.zeros(m)))
    return p


def _dd_poly_eval(c_hi, c_lo, z):
    """Horner in complex double-double, collapsed to complex128."""
    z = np.asarray(z, dtype=complex)
    return dd.cdd_to_complex(*_cdd_horner(c_hi, c_lo, dd.cdd_from_complex(z)))


def _dd_derivative(c_hi, c_lo):
    k = np.arange(1, c_hi.shape[0], dtype=float)
    return dd.dd_mul(c_hi[1:], c_lo[1:], k, np.zeros_like(k))


def refined_cluster_centers(a_hi, a_lo, rootset):
    """High-accuracy center for each root cluster.

    A multiplicity-m root is a simple root of the (m-1)-th derivative, so a
    double-double Newton iteration on that derivative recovers it to working
    precision even though the individual cluster members cannot be separated.
    Returns one CDD value per cluster, aligned with rootset.clusters.
    """
    centers = []
    for group in rootset.clusters:
        m = len(group)
        d_hi, d_lo = np.asarray(a_hi, dtype=float), np.asarray(a_lo, dtype=float)
        for _ in range(m - 1):
            d_hi, d_lo = _dd_derivative(d_hi, d_lo)
        dd_hi, dd_lo = _dd_derivative(d_hi, d_lo)
        z0 = complex(rootset.roots[list(group)].mean())
        z = dd.cdd_from_complex(np.array([z0]))
        for _ in range(60):
            p = _cdd_horner(d_hi, d_lo, z)
            q = _cdd_horner(dd_hi, dd_lo, z)
            if abs(dd.cdd_to_complex(*q)[0]) == 0.0:
                break
            step = dd.cdd_div(p, q)
            z = dd.cdd_sub(z, step)
            if abs(dd.cdd_to_complex(*step)[0]) < 1e-30 * (1.0 + abs(z0)):
                break
        centers.append(z)
    return centers


def circle_theorem_check(model, tol=1e-9, mode=None):
    """Locate all activity roots and measure their distance to |z| = 1.

    Preconditions (ferromagnetic pair couplings; quartic terms only with the
    smallness/dominance conditions) are reported, not enforced: violating
    models still get their roots computed, with `theorem_applies` False so an
    off-circle root is not counted as a counterexample.
    """
    violations = []
    if not model.measure.is_pm1_atoms():
        raise ValueError("circle check needs the two-atom spin measure")
    _, _, pJ = model.pair_arrays()
    _, qJ = model.quad_arrays()
    if pJ.ndim != 1:
        raise ValueError("circle check is for scalar spins")
    if np.any(pJ < 0.0):
        violations.append("negative pair coupling")
    if len(qJ):
        cond = check_quartic_ly_conditions(model)
        if not cond["ly_asserted"]:
            violations.append("quartic smallness/dominance conditions fail")
    poly = partition_polynomial(model, mode=mode)
    a_hi, a_lo = uniform_reduction(poly)
    rs = roots_activity(a_hi, a_lo)
    ab_hi, ab_lo = dd.cdd_abs(rs.roots_dd)
    deviations = np.abs((ab_hi - 1.0) + ab_lo)
    # inside a cluster the member positions carry the inclusion-disk error;
    # the refined center is the meaningful location there
    in_cluster = np.zeros(rs.degree, dtype=bool)
    for group in rs.clusters:
        in_cluster[list(group)] = True
    cluster_devs = []
    for center in refined_cluster_centers(a_hi, a_lo, rs):
        ch, cl = dd.cdd_abs(center)
        cluster_devs.append(abs(float((ch[0] - 1.0) + cl[0])))
    candidates = list(deviations[~in_cluster]) + cluster_devs
    max_dev = float(max(candidates)) if candidates else 0.0
    applies = not violations
    on_circle = bool(max_dev < tol) and rs.converged
    return CircleReport(rs, deviations, tuple(cluster_devs), max_dev, applies,
                        tuple(violations), on_circle, (not applies) or on_circle,
                        tol, model.model_hash())


# field sweeps

class _ExpSumCache:
    """Z(h) = sum_c W_c exp(beta h A_c), reusable across sweep points."""

    def __init__(self, w, a, beta):
        self.w = np.asarray(w, dtype=complex)
        self.a = np.asarray(a, dtype=float)
        self.beta = float(beta)

    def at(self, h):
        h = np.atleast_1d(np.asarray(h, dtype=complex))
        out = np.empty(h.shape[0], dtype=complex)
        chunk = max(1, (1 << 22) // max(self.a.shape[0], 1))
        for s in range(0, h.shape[0], chunk):
            blk = h[s : s + chunk]
            out[s : s + chunk] = np.exp(
                self.beta * np.multiply.outer(blk, self.a)) @ self.w
        return out


def _sweep_evaluator(model):
    """Callable h-array -> Z values, sweeping the uniform field component.

    Any non-uniform field structure (modulation or per-site values) is kept
    fixed while the uniform part is replaced by the sweep value.
    """
    if model.ncomp != 1:
        raise ValueError("scalar sweep needs scalar spins")
    if model.field.mode == "uniform":
        return PartitionScanner(model).at
    base = model.field_array()
    if model.field.mode == "modulated":
        base = base - complex(model.field.h)
    weight, spins = _config_energies_weights(model, *_site_states(model))
    wmod = weight * np.exp(model.beta * (spins @ base))
    return _ExpSumCache(wmod, spins.sum(axis=1), model.beta).at


def _scan_grid(at, grid, in_region, margin, jobs, normalization, note=""):
    """Shared column sweep: normalize each grid column by |Z| at its real-h
    anchor, collect witnesses and the in-region minimum."""
    res = grid.reals()
    ims = grid.imags()

    def column(re):
        vals = at(re + 1j * ims)
        ref = abs(at(np.array([re + 0j]))[0])
        if not ref > 1e-300:
            return np.abs(vals), False
        return np.abs(vals) / ref, True

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
            cols = list(ex.map(column, res))
    else:
        cols = [column(re) for re in res]

    min_abs = np.inf
    argmin = complex(res[0], ims[0])
    n_in = 0
    witnesses = []
    all_min = np.inf
    all_argmin = argmin
    for j, (normed, ok_ref) in enumerate(cols):
        if not ok_ref:
            note = (note + "; " if note else "") + \
                f"column Re h = {res[j]:g} left unnormalized (reference |Z| = 0)"
        for i in range(ims.shape[0]):
            h = complex(res[j], ims[i])
            v = float(normed[i])
            inside = bool(in_region(h))
            if inside:
                n_in += 1
                if v < min_abs:
                    min_abs, argmin = v, h
            if v < all_min:
                all_min, all_argmin = v, h
            if v < margin and len(witnesses) < _WITNESS_CAP:
                witnesses.append((h, v, inside))
    if n_in == 0:
        min_abs, argmin = all_min, all_argmin
        note = (note + "; " if note else "") + "no grid point inside region"
    if len(witnesses) == _WITNESS_CAP:
        note = (note + "; " if note else "") + "witness list truncated"
    return ScanReport(float(min_abs), argmin, grid.npoints, n_in, float(margin),
                      bool(min_abs > margin), tuple(witnesses), normalization,
                      note)


def zero_free_scan(model, region=None, grid=None, margin=1e-8, jobs=1):
    """Grid scan of |Z(h)| normalized by the real-axis anchor of each column.

    The sweep replaces the uniform field component; a modulated model keeps
    its modulation amplitudes, which is the cone-region use.  `passed` means
    every in-region point stayed above the margin; witnesses list every
    near-zero found anywhere on the grid.
    """
    if region is None:
        region = RegionSpec.half_plane()
    if grid is None:
        grid = GridSpec()
    eps = model.field.eps if model.field.mode == "modulated" else ()
    if region.variant == "cone_D" and model.field.mode != "modulated":
        raise ValueError("cone region scan needs a modulated field model")
    at = _sweep_evaluator(model)
    return _scan_grid(at, grid, lambda h: region.contains(h, eps=eps),
                      margin, jobs, "column real-axis |Z| reference")


def multi_component_zero_scan(model, grid=None, transverse=(), margin=1e-8,
                              sign=1, jobs=1):
    """Scan Z over h = (h1, transverse...) with h1 on the grid.

    The region is Omega_N with the given sign: |Re h1| must dominate the sum
    of the transverse component moduli.  The hypothesis report distinguishes
    the anisotropy condition (J1 per bond dominates the other components in
    absolute sum) from the N = 3 Heisenberg variant (J1 >= |J2|, J1 >= |J3|).
    """
    if model.ncomp < 2:
        raise ValueError("component scan needs a vector spin measure")
    if grid is None:
        grid = GridSpec()
    transverse = tuple(complex(t) for t in transverse)
    if len(transverse) != model.ncomp - 1:
        raise ValueError(f"need {model.ncomp - 1} transverse components")
    aniso = model.anisotropy_dominant()
    heis = model.ncomp == 3 and _heisenberg_dominant(model)
    region = RegionSpec.omega(model.ncomp, sign=sign)
    weight, spins = _config_energies_weights(model, *_site_states(model))
    s_tot = spins.sum(axis=1)
    wmod = weight * np.exp(model.beta * (s_tot[:, 1:] @ np.asarray(transverse)))
    at = _ExpSumCache(wmod, s_tot[:, 0], model.beta).at
    report = _scan_grid(
        at, grid, lambda h: region.contains_vector((h,) + transverse),
        margin, jobs, "column real-axis |Z| reference",
        note="" if (aniso or heis) else "hypothesis not satisfied")
    return report, {"anisotropy_dominant": aniso, "heisenberg_dominant": heis,
                    "hypothesis_ok": aniso or heis}


def _heisenberg_dominant(model, tol=1e-14):
    """Per bond: first component at least each other component in modulus."""
    _, _, pJ = model.pair_arrays()
    if pJ.ndim == 1 or pJ.shape[0] == 0:
        return True
    return bool(np.all(pJ[:, :1] >= np.abs(pJ[:, 1:]) - tol))


# converse probe

@dataclass(frozen=True)
class ConverseReport:
    ly_holds: bool
    family: tuple  # coefficient-power exponents probed (beta scalings)
    witness: object  # (t, activity vector, normalized |P|) or None
    couplings: object  # {(i, j): J} when factorization attempted
    constant: object
    residual: object  # max |log E_X - pair fit|
    min_coupling: object
    nsamples: int
    note: str = ""


def polydisc_zero_search(poly, nsamples=200, seed=2026, margin=1e-7):
    """Hunt for zeros with every |z_x| < 1 by per-variable affine solving.

    Each sample fixes all but one activity at random points in the open unit
    polydisc; the polynomial is affine in the remaining one, so its root is
    exact.  A root landing strictly inside the disc (margin off the boundary)
    is verified by direct evaluation and returned as a witness.
    """
    n = poly.nvars
    g = SplitMix64(seed)
    abs_c = np.abs(poly.coeff_hi + poly.coeff_lo)
    masks = np.arange(1 << n, dtype=np.int64)
    witnesses = []
    for s in range(int(nsamples)):
        z = np.empty(n, dtype=complex)
        for x in range(n):
            r = np.sqrt(g.uniform()) * (1.0 - 1e-3)
            th = g.uniform(0.0, 2.0 * np.pi)
            z[x] = r * np.cos(th) + 1j * r * np.sin(th)
        i = s % n
        z0 = z.copy()
        z0[i] = 0.0
        a = evaluate_activity(poly, z0)
        z1 = z.copy()
        z1[i] = 1.0
        b = evaluate_activity(poly, z1) - a
        if abs(b) < 1e-300:
            continue
        zstar = -a / b
        if abs(zstar) >= 1.0 - margin:
            continue
        z[i] = zstar
        val = abs(evaluate_activity(poly, z))
        pw = np.ones(1 << n)
        for x in range(n):
            pw *= np.where(((masks >> x) & 1).astype(bool), abs(z[x]), 1.0)
        bound = float(abs_c @ pw)
        if val / max(bound, 1e-300) < 1e-8:
            witnesses.append((tuple(z), val / bound))
    return witnesses


def converse_probe(coeffs, family=(0.25, 0.5, 1.0, 2.0, 4.0), nsamples=200,
                   seed=2026, margin=1e-7, symmetry_tol=1e-9):
    """Lee-Yang test, then pair factorization of a coefficient family.

    First hunts for zeros in the open unit polydisc (uniform diagonal roots
    plus affine sampling) across coefficient powers E^t, t in `family`; a hit
    short-circuits into a violation witness.  Otherwise the coefficients are
    fit to log E_X = const + beta * sum_{x<y} J_xy s_x s_y and the residual
    and minimum recovered coupling are reported.  The family is a finite
    stand-in for "all inverse temperatures"; the report says which exponents
    were probed.
    """
    poly = coeffs if isinstance(coeffs, ActivityPolynomial) \
        else partition_polynomial(coeffs)
    n = poly.nvars
    if n > 10:
        raise ValueError("converse probe caps at 10 variables")
    if np.any(poly.coeff_hi <= 0.0):
        raise ValueError("coefficients must be strictly positive")
    if not poly.is_palindromic(tol=symmetry_tol):
        raise ValueError("coefficients are not spin-flip symmetric")

    for idx, t in enumerate(family):
        pt = poly if t == 1.0 else coefficient_power(poly, t)
        a_hi, a_lo = uniform_reduction(pt)
        rs = roots_activity(a_hi, a_lo)
        ab_hi, ab_lo = dd.cdd_abs(rs.roots_dd)
        inside = (ab_hi - 1.0) + ab_lo < -margin
        if np.any(inside):
            k = int(np.argmax(inside))
            point = (complex(rs.roots[k]),) * n
            return ConverseReport(False, tuple(family), (t, point,
                                  float(rs.residuals[k])), None, None, None,
                                  None, int(nsamples))
        hits = polydisc_zero_search(pt, nsamples=nsamples,
                                    seed=seed + 7919 * idx, margin=margin)
        if hits:
            point, val = hits[0]
            return ConverseReport(False, tuple(family), (t, point, val),
                                  None, None, None, None, int(nsamples))

    masks = np.arange(1 << n, dtype=np.int64)
    signs = 1.0 - 2.0 * ((masks[:, None] >> np.arange(n)) & 1)
    l_hi, l_lo = dd.dd_log(poly.coeff_hi, poly.coeff_lo)
    y = l_hi + l_lo
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    cols = [np.ones(1 << n)]
    cols += [signs[:, i] * signs[:, j] for i, j in pairs]
    design = np.stack(cols, axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    residual = float(np.abs(y - design @ coef).max())
    couplings = {p: float(c / poly.beta) for p, c in zip(pairs, coef[1:])}
    min_c = min(couplings.values()) if couplings else None
    return ConverseReport(True, tuple(family), None, couplings,
                          float(coef[0] / poly.beta), residual, min_c,
                          int(nsamples))
