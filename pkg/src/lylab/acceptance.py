"""Numbered verification suite: every numerical claim the package stakes,
checked end to end at its stated tolerance.

Each criterion returns (passed, detail).  run_suite prints one PASS/FAIL
line per criterion; all random corpora come from the seeded SplitMix64
generators, so runs are reproducible bit for bit.
"""

import math
import time

import numpy as np

from . import correlations, ddarith as dd, leeyang, polyengine, quantum, thermo
from .model import FieldSpec, LatticeSpec, SpinModel, ising_ring
from .randomgen import (
    SplitMix64,
    random_ferromagnet,
    random_ly_model,
    random_measure_model,
    random_pair_instance,
    random_quartic_instance,
)

SEED = 2026


def _c1_circle_theorem():
    """200 seeded ferromagnets: every activity root on the unit circle."""
    t0 = time.perf_counter()
    worst = 0.0
    bad = 0
    for i in range(200):
        rep = leeyang.circle_theorem_check(random_ferromagnet(SEED, i),
                                           tol=1e-9, mode="extended")
        worst = max(worst, rep.max_abs_deviation)
        if not (rep.theorem_applies and rep.on_circle):
            bad += 1
    dt = time.perf_counter() - t0
    ok = bad == 0 and worst < 1e-9 and dt < 300
    return ok, (f"200 models, max ||z|-1| = {worst:.2e} < 1e-9, "
                f"{bad} failures, {dt:.0f}s of 300")


def _c2_half_plane():
    """|Z| stays off zero on the right-half-plane grid, all measure kinds."""
    t0 = time.perf_counter()
    worst = math.inf
    bad = 0
    kinds = set()
    for i in range(50):
        m = random_measure_model(SEED, i)
        kinds.add(("ising", "uniform", "quartic")[i % 3])
        rep = leeyang.zero_free_scan(m, grid=leeyang.GridSpec(), margin=1e-8)
        worst = min(worst, rep.min_abs)
        if not rep.passed:
            bad += 1
    dt = time.perf_counter() - t0
    ok = bad == 0 and worst > 1e-8 and len(kinds) == 3 and dt < 600
    return ok, (f"50 models over {sorted(kinds)}, min normalized |Z| = "
                f"{worst:.2e} > 1e-8, {dt:.0f}s of 600")


def _c3_cone():
    """Two-mode modulation with sum |eps| = 0.8 Re h never kills Z."""
    g = SplitMix64(0xC0DE2026)
    worst = math.inf
    zeros = 0
    for i in range(20):
        base = random_ferromagnet(SEED, i, betas=(0.5, 1.0))
        lattice = LatticeSpec(base.lattice.extents, "periodic")
        for _ in range(20):
            h = complex(round(g.uniform(0.2, 1.5), 6),
                        round(g.uniform(-1.0, 1.0), 6))
            f = g.uniform(0.15, 0.85)
            eps = (0.8 * h.real * f, 0.8 * h.real * (1.0 - f))
            kvecs = tuple(
                tuple(2.0 * math.pi * (1 + g.randint(L - 1)) / L
                      for L in lattice.extents)
                for _ in range(2))
            mdl = SpinModel(lattice, base.measure, base.interaction,
                            FieldSpec.modulated(h, eps, kvecs), base.beta)
            try:
                ens = correlations.Ensemble(mdl)
            except correlations.SingularAverageError:
                zeros += 1
                continue
            worst = min(worst, abs(ens.Z) / ens.scale)
    ok = zeros == 0
    return ok, (f"400 cone points on 20 periodic models, {zeros} zeros, "
                f"min normalized |Z| = {worst:.2e}")


def _c4_ursell_routes():
    """Moebius and interpolation cumulants agree at complex fields."""
    g = SplitMix64(0x0426)
    worst = 0.0
    for i in range(50):
        m = random_ly_model(SEED, i)
        for order in (1, 2, 3, 4):
            sites = tuple(g.randint(m.nsites) for _ in range(order))
            spec = correlations.UrsellSpec(sites)
            a = correlations.ursell_moebius(m, spec).value
            b = correlations.ursell_epsilon_derivative(m, spec).value
            worst = max(worst, abs(a - b) / max(1.0, abs(a)))
    ok = worst < 1e-8
    return ok, (f"50 models x orders 1-4, worst relative gap "
                f"{worst:.2e} < 1e-8 (unit floor)")


def _c5_converse():
    """Pair couplings recovered from the coefficient table; quartic
    instances keep the recovered pairs nonnegative."""
    ok = True
    worst_resid = 0.0
    worst_min = math.inf
    worst_dev = 0.0
    for i in range(30):
        m = random_pair_instance(SEED, i)
        rep = leeyang.converse_probe(polyengine.partition_polynomial(m))
        if not rep.ly_holds or rep.residual is None:
            ok = False
            continue
        worst_resid = max(worst_resid, rep.residual)
        worst_min = min(worst_min, rep.min_coupling)
        for a, b, J in m.interaction.pairs:
            worst_dev = max(worst_dev,
                            abs(rep.couplings.get((a, b), 0.0) - J))
    ok = ok and worst_resid < 1e-10 and worst_min >= -1e-10
    q_min = math.inf
    for i in range(10):
        m = random_quartic_instance(SEED, i)
        if not polyengine.check_quartic_ly_conditions(m)["ly_asserted"]:
            ok = False
        rep = leeyang.converse_probe(polyengine.partition_polynomial(m))
        if not rep.ly_holds or rep.min_coupling is None:
            ok = False
            continue
        q_min = min(q_min, rep.min_coupling)
    ok = ok and q_min >= -1e-10
    return ok, (f"30 pair instances: residual {worst_resid:.2e} < 1e-10, "
                f"min J {worst_min:.2e}, round-trip gap {worst_dev:.2e}; "
                f"10 quartic instances: min recovered pair J {q_min:.2e}")


def _c6_schur_hadamard():
    """Coefficientwise product of the two factors reproduces the partition
    polynomial; 4-set couplings scale by exactly 8."""
    worst = 0.0
    exact = True
    for i in range(20):
        m = random_quartic_instance(SEED, i, max_sites=6)
        poly = polyengine.partition_polynomial(m)
        dec = polyengine.quartic_decomposition(m)
        prod = polyengine.schur_hadamard(dec.factor_pair, dec.factor_quad)
        g_hi, g_lo = dd.dd_mul_d(prod.coeff_hi, prod.coeff_lo,
                                 dec.prefactor_hi)
        t_hi, t_lo = dd.dd_mul_d(prod.coeff_hi, prod.coeff_lo,
                                 dec.prefactor_lo)
        g_hi, g_lo = dd.dd_add(g_hi, g_lo, t_hi, t_lo)
        rel = np.abs((g_hi - poly.coeff_hi) + (g_lo - poly.coeff_lo)) \
            / np.abs(poly.coeff_hi)
        worst = max(worst, float(rel.max()))
        _, qJ = m.quad_arrays()
        exact = exact and np.array_equal(dec.quad_tilde_hi, 8.0 * qJ) \
            and not dec.quad_tilde_lo.any()
    ok = worst < 1e-12 and exact
    return ok, (f"20 coupling sets, worst coefficient error {worst:.2e} "
                f"< 1e-12, 4-set table exact: {exact}")


def _c7_inequalities():
    """Third Ursells, Griffiths moments and monotone covariances keep their
    signs on seeded ferromagnets at h in {0, 0.2, 1}."""
    bad = []
    ghs = -math.inf
    grif = math.inf
    fkg = math.inf
    for i in range(50):
        m = random_ferromagnet(SEED, i, max_sites=8)
        rep = correlations.inequality_suite(m)
        if not rep["passed"]:
            bad.append(i)
        for entry in rep["entries"]:
            k = entry["kinds"]
            ghs = max(ghs, k["GHS"]["extreme"])
            grif = min(grif, k["Griffiths"]["extreme"])
            fkg = min(fkg, k["FKG"]["extreme"])
    ok = not bad
    return ok, (f"50 models: max u3 {ghs:.2e} <= 1e-12, min Griffiths "
                f"{grif:.2e} >= -1e-12, min FKG cov {fkg:.2e} >= -1e-12"
                + (f", failures at {bad}" if bad else ""))


def _limit_magnetization(proto, h):
    """Infinite-chain <sigma> from the dominant transfer pair; analytic in
    h, so a complex-step argument returns the field derivative exactly."""
    T = thermo.build_transfer(proto, h=h)
    w, vr = np.linalg.eig(T.matrix)
    wl, vl = np.linalg.eig(T.matrix.T)
    k, kl = int(np.argmax(np.abs(w))), int(np.argmax(np.abs(wl)))
    u, v = vl[:, kl], vr[:, k]
    return (u * T.row_spin * v).sum() / (u * v).sum()


def _c8_magnetization():
    """m > 0, dm > 0, d2m <= 0 on rings and in the chain limit; the pair
    sum rule reproduces the exact field derivative."""
    h_grid = np.linspace(0.05, 2.0, 12)
    ok = True
    notes = []
    for L in (6, 10, 14):
        prof = correlations.magnetization_profile(ising_ring(L), h_grid)
        good = prof["positive"] and prof["increasing"] and prof["concave"]
        ok = ok and good
        if not good:
            notes.append(f"ring L={L} verdicts failed")
    step = 1e-100
    proto = ising_ring(4, J=1.0, beta=1.0)
    dms = []
    for h in h_grid:
        mv = _limit_magnetization(proto, complex(h, step))
        dm = mv.imag / step
        ok = ok and mv.real > 0.0 and dm > 0.0
        dms.append(dm)
    ok = ok and all(b <= a + 1e-12 for a, b in zip(dms, dms[1:]))
    ring = ising_ring(12, J=1.0, beta=1.0)
    resid = 0.0
    for h in (0.1, 0.5, 1.0):
        mh = correlations.thermal_average(ring, (0,), h=complex(h, step))
        total = sum(
            correlations.ursell_moebius(
                ring, correlations.UrsellSpec((0, z)), h=float(h)).value
            for z in range(12))
        resid = max(resid, abs(ring.beta * total - mh.imag / step))
    ok = ok and resid < 1e-10
    return ok, (f"rings L in (6, 10, 14) + chain limit on 12 fields; "
                f"sum-rule residual {resid:.2e} < 1e-10"
                + ("; " + "; ".join(notes) if notes else ""))


def _c9_mass_gap():
    """Closed form at h = 0, growth in h, and decay-fit agreement."""
    closed = math.log(1.0 / math.tanh(1.0))
    m0 = thermo.mass_gap(thermo.build_transfer(ising_ring(4))).value
    dev0 = abs(m0 - closed)
    gaps = [thermo.mass_gap(
        thermo.build_transfer(ising_ring(4), h=float(h))).value
        for h in np.linspace(0.05, 2.0, 20)]
    mono = all(g > 0.0 for g in gaps) and \
        all(b >= a - 1e-12 for a, b in zip(gaps, gaps[1:]))
    worst_disc = 0.0
    for h in (0.05, 0.5, 1.0):
        # at h = 0.05 the subleading mode decays slowly; L = 56 gives the
        # fit window enough clean range
        fit = thermo.mass_gap_fit(ising_ring(56, J=1.0, beta=1.0, h=h))
        worst_disc = max(worst_disc, fit.discrepancy)
    ok = dev0 < 1e-10 and mono and worst_disc < 1e-4
    return ok, (f"|m - log coth 1| = {dev0:.2e} < 1e-10, positive "
                f"nondecreasing on 20 fields: {mono}, fit vs spectral "
                f"{worst_disc:.2e} < 1e-4")


def _c10_bc_independence():
    """Free and periodic pair correlations merge geometrically in L."""
    proto = ising_ring(4, J=0.2, beta=1.0)
    ok = True
    finals = []
    for h in (0.5, 0.5 + 0.4j):
        rep = thermo.bc_independence_check(proto, h=h)
        ok = ok and rep["geometric"] and rep["final_gap"] < 1e-6
        finals.append(rep["final_gap"])
    return ok, (f"J = 0.2 chain, final gaps at L = 16: {finals[0]:.2e} and "
                f"{finals[1]:.2e}, both < 1e-6")


def _c11_r_study():
    """Per-site partition ratio: bounded, L-stable, and no zeros met."""
    h_pts = [complex(re, im) for re in (0.6, 0.9, 1.2)
             for im in (-0.3, 0.0, 0.3)]
    rep = thermo.r_function_study(1.0, 0.2, h_pts, lengths=range(2, 15),
                                  eps_frac=0.3, nmodes=2)
    sup_at = {}
    for L in (10, 14):
        sup_at[L] = max(abs(r) for row in rep["rows"]
                        for (l, r) in row["series"] if l == L)
    variation = abs(sup_at[14] - sup_at[10]) / sup_at[10]
    ok = (not rep["alarm"]) and rep["bounded"] \
        and math.isfinite(rep["sup_R"]) and variation < 0.01
    return ok, (f"sup |R| = {rep['sup_R']:.4f} <= bound {rep['bound']:.2f}, "
                f"L-variation {variation:.2e} < 1%, alarms: "
                f"{len(rep['alarms'])}")


def _c12_quantum():
    """Zero-free quantum scans for three spins; the rescaled partitions
    approach the sphere model as s grows."""
    t0 = time.perf_counter()
    ok = True
    mins = []
    for s in (0.5, 1.0, 1.5):
        qm = quantum.QuantumModel(s, 2, ((0, 1, (1.0, 0.4, -0.3)),),
                                  ((0, 0, 0),) * 2, 1.0)
        rep = quantum.quantum_zero_scan(qm, grid=leeyang.GridSpec(),
                                        transverse=(0.2, 0.1))
        ok = ok and rep.passed
        mins.append(rep.min_abs)
    single = quantum.classical_limit_study((0.5, 8), 1, (),
                                           (0.2, 0.6, 1.0, 1.5, 2.0))
    ratio = single["table"][0][1] / single["table"][1][1]
    ok = ok and ratio >= 10.0
    heis = quantum.classical_limit_study((0.5, 1, 2, 4, 8), 2,
                                         ((0, 1, (1.0, 1.0, 1.0)),),
                                         (0.3, 0.8, 1.5))
    ok = ok and heis["decreasing"]
    dt = time.perf_counter() - t0
    ok = ok and dt < 600
    return ok, (f"scans s in (1/2, 1, 3/2) min |Q| {min(mins):.2e}, "
                f"single-site deviation ratio {ratio:.1f}x >= 10, "
                f"Heisenberg decreasing: {heis['decreasing']}, "
                f"{dt:.0f}s of 600")


def _c13_delta_probe():
    """Strip correlation-length slopes: deterministic completion."""
    a = thermo.critical_exponent_probe(1.0, widths=(2, 3, 4, 5, 6))
    b = thermo.critical_exponent_probe(1.0, widths=(2, 3, 4, 5, 6))
    finite = all(math.isfinite(s) for s in a["slopes"].values())
    ok = a == b and finite and a["delta_bound"] == 1.0
    slopes = ", ".join(f"w={w}: {s:.3f}" for w, s in sorted(a["slopes"].items()))
    return ok, f"identical reruns: {a == b}; slopes {slopes} (reference 1)"


CRITERIA = (
    (1, "activity roots on the unit circle", _c1_circle_theorem),
    (2, "zero-free right half plane", _c2_half_plane),
    (3, "modulated-field cone", _c3_cone),
    (4, "Ursell route agreement", _c4_ursell_routes),
    (5, "pair-coupling recovery", _c5_converse),
    (6, "quartic factorization identity", _c6_schur_hadamard),
    (7, "correlation inequalities", _c7_inequalities),
    (8, "magnetization shape", _c8_magnetization),
    (9, "mass gap closed form and routes", _c9_mass_gap),
    (10, "boundary-condition independence", _c10_bc_independence),
    (11, "partition ratio stability", _c11_r_study),
    (12, "quantum scans and classical limit", _c12_quantum),
    (13, "strip slope probe", _c13_delta_probe),
)


def run_criterion(cid):
    table = {c: (name, fn) for c, name, fn in CRITERIA}
    if cid not in table:
        raise ValueError(f"unknown criterion {cid}; have 1..{len(CRITERIA)}")
    name, fn = table[cid]
    t0 = time.perf_counter()
    passed, detail = fn()
    return {"id": cid, "name": name, "passed": bool(passed),
            "detail": detail, "seconds": round(time.perf_counter() - t0, 2)}


def format_line(res):
    mark = "PASS" if res["passed"] else "FAIL"
    return (f"[{res['id']:2d}] {mark} {res['name']}: {res['detail']} "
            f"({res['seconds']:.1f}s)")


def run_suite(select=None, echo=None):
    results = []
    for cid, _, _ in CRITERIA:
        if select is not None and cid not in select:
            continue
        res = run_criterion(cid)
        if echo is not None:
            echo(format_line(res))
        results.append(res)
    return {"results": results,
            "passed": bool(results) and all(r["passed"] for r in results)}
