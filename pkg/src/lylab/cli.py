"""Command-line front end.

Model configs come in as JSON files; reports go out as JSON (hex-float
fields, bit-exact) or CSV (plot-ready, 17 significant digits).  Exit codes:
0 all checks pass, 2 check failure, 3 input error, 4 numerical diagnostic.
Diagnostics are one-line codes on standard error.
"""

import argparse
import json
import sys

import numpy as np

from . import correlations, leeyang, quantum, thermo
from .leeyang import GridSpec
from .model import SpinModel
from .polyengine import partition_polynomial
from .precision import MODES, resolve_mode

EXIT_OK = 0
EXIT_CHECK = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4


class InputError(Exception):
    pass


class NumericError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; the contract says 3."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"E_INPUT: {message}\n")
        raise SystemExit(EXIT_INPUT)


# parsing helpers

def _parse_grid(text):
    parts = text.split(",")
    if len(parts) != 6:
        raise InputError("--grid wants re0,re1,nre,im0,im1,nim")
    try:
        return GridSpec(float(parts[0]), float(parts[1]), int(parts[2]),
                        float(parts[3]), float(parts[4]), int(parts[5]))
    except ValueError as e:
        raise InputError(f"bad grid: {e}") from None


def _floats(text):
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError as e:
        raise InputError(f"bad number list: {e}") from None


def _ints(text):
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as e:
        raise InputError(f"bad integer list: {e}") from None


def _complexes(text):
    try:
        return tuple(complex(p) for p in text.split(","))
    except ValueError as e:
        raise InputError(f"bad complex list: {e}") from None


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path} is not valid JSON: {e}") from None


def _load_model(path):
    try:
        return SpinModel.from_dict(_load_json(path))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"bad model config: {e}") from None


def _load_quantum(path):
    cfg = _load_json(path)
    known = {"s", "nsites", "couplings", "fields", "field", "beta"}
    extra = set(cfg) - known
    if extra:
        raise InputError(f"unknown quantum config keys: {sorted(extra)}")
    try:
        if "fields" in cfg:
            fields = tuple(tuple(complex(c) for c in f) for f in cfg["fields"])
            nsites = int(cfg.get("nsites", len(fields)))
        else:
            f = tuple(complex(c) for c in cfg["field"])
            nsites = int(cfg["nsites"])
            fields = (f,) * nsites
        return quantum.QuantumModel(
            float(cfg["s"]), nsites,
            tuple((int(x), int(y), tuple(J)) for x, y, J in cfg.get("couplings", ())),
            fields, float(cfg.get("beta", 1.0)))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"bad quantum config: {e}") from None


def _chain_coupling(model):
    """Scalar nearest-neighbor coupling of a 1D kernel model."""
    kern = dict(model.interaction.kernel)
    if model.lattice.ndim != 1 or (1,) not in kern:
        raise InputError("this mode needs a 1D nearest-neighbor kernel model")
    J = kern[(1,)]
    if isinstance(J, tuple):
        raise InputError("this mode needs a scalar coupling")
    return float(J)


# output

def _hexify(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, str)) or obj is None:
        return obj
    if isinstance(obj, complex):
        return {"re": float(obj.real).hex(), "im": float(obj.imag).hex()}
    if isinstance(obj, float):
        return float(obj).hex()
    if isinstance(obj, np.generic):
        return _hexify(obj.item())
    if isinstance(obj, dict):
        return {str(k): _hexify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_hexify(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _csv_cell(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _emit(args, payload, rows):
    if args.format == "json":
        text = json.dumps(_hexify(payload), sort_keys=True, indent=2) + "\n"
    else:
        if not rows:
            text = "\n"
        else:
            cols = list(rows[0].keys())
            lines = [",".join(cols)]
            lines += [",".join(_csv_cell(r[c]) for c in cols) for r in rows]
            text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _wrap(args, report, model_hash=""):
    return {
        "subcommand": args.subcommand,
        "model_hash": model_hash,
        "precision": resolve_mode(args.precision),
        "report": report,
    }


# subcommands; each returns (payload, csv rows, exit code, diagnostic line)

def cmd_ly_scan(args):
    model = _load_model(args.model)
    grid = _parse_grid(args.grid) if args.grid else GridSpec()
    region = leeyang.RegionSpec.cone(len(model.field.eps)) \
        if model.field.mode == "modulated" else leeyang.RegionSpec.half_plane()
    try:
        rep = leeyang.zero_free_scan(model, region=region, grid=grid,
                                     margin=args.tol, jobs=args.jobs)
    except ValueError as e:
        raise InputError(str(e)) from None
    rows = [{"re": p.real, "im": p.imag, "normalized_abs": v,
             "in_region": int(r)} for p, v, r in rep.witnesses]
    payload = _wrap(args, dict(rep.to_dict(), region=region.variant),
                    model.model_hash())
    if rep.passed:
        return payload, rows, EXIT_OK, ""
    return payload, rows, EXIT_CHECK, \
        f"zero-free scan failed: min |Z| {rep.min_abs:.3e} at {rep.argmin}"


def cmd_circle_check(args):
    model = _load_model(args.model)
    mode = resolve_mode(args.precision)
    try:
        rep = leeyang.circle_theorem_check(model, tol=args.tol, mode=mode)
    except ValueError as e:
        raise InputError(str(e)) from None
    rs = rep.roots
    rows = [{"re": z.real, "im": z.imag, "modulus": abs(z),
             "residual": float(r)}
            for z, r in zip(rs.roots, rs.residuals)]
    payload = _wrap(args, {
        "max_abs_deviation": rep.max_abs_deviation,
        "theorem_applies": rep.theorem_applies,
        "violations": list(rep.violations),
        "on_circle": rep.on_circle, "passed": rep.passed, "tol": rep.tol,
        "converged": rs.converged, "degree": rs.degree, "roots": rows,
    }, rep.model_hash)
    if not rs.converged:
        return payload, rows, EXIT_NUMERIC, "root refinement did not converge"
    if rep.passed:
        return payload, rows, EXIT_OK, ""
    return payload, rows, EXIT_CHECK, \
        f"off-circle root: max deviation {rep.max_abs_deviation:.3e}"


def cmd_converse(args):
    model = _load_model(args.model)
    mode = resolve_mode(args.precision)
    try:
        poly = partition_polynomial(model, mode=mode)
        rep = leeyang.converse_probe(poly, nsamples=args.samples,
                                     seed=args.seed)
    except ValueError as e:
        raise InputError(str(e)) from None
    rows = [{"i": i, "j": j, "coupling": J}
            for (i, j), J in sorted((rep.couplings or {}).items())]
    payload = _wrap(args, {
        "ly_holds": rep.ly_holds, "family": list(rep.family),
        "witness": None if rep.witness is None else {
            "power": rep.witness[0],
            "point": [{"re": z.real, "im": z.imag} for z in rep.witness[1]],
            "normalized_abs": rep.witness[2]},
        "couplings": rows, "constant": rep.constant,
        "residual": rep.residual, "min_coupling": rep.min_coupling,
        "nsamples": rep.nsamples, "note": rep.note,
    }, model.model_hash())
    if not rep.ly_holds:
        return payload, rows, EXIT_CHECK, "zero found inside unit polydisc"
    if rep.residual is not None and rep.residual > args.tol:
        return payload, rows, EXIT_CHECK, \
            f"pair factorization residual {rep.residual:.3e} over {args.tol}"
    return payload, rows, EXIT_OK, ""


def cmd_ursell(args):
    model = _load_model(args.model)
    sites = _ints(args.sites)
    comps = _ints(args.components) if args.components else None
    try:
        spec = correlations.UrsellSpec(sites, comps or (0,) * len(sites))
    except ValueError as e:
        raise InputError(str(e)) from None
    results = {}
    routes = ("moebius", "epsilon") if args.route == "both" else (args.route,)
    try:
        for route in routes:
            fn = correlations.ursell_moebius if route == "moebius" \
                else correlations.ursell_epsilon_derivative
            results[route] = fn(model, spec)
    except correlations.SingularAverageError as e:
        raise NumericError(str(e)) from None
    except ValueError as e:
        raise InputError(str(e)) from None
    rows = [{"route": r, "re": res.value.real, "im": res.value.imag,
             "error_estimate": res.error_estimate}
            for r, res in results.items()]
    payload = {r: {"value": res.value, "error_estimate": res.error_estimate}
               for r, res in results.items()}
    code, diag = EXIT_OK, ""
    if len(results) == 2:
        a, b = results["moebius"].value, results["epsilon"].value
        diff = abs(a - b) / max(1.0, abs(a))
        payload["route_difference"] = diff
        if diff > args.tol:
            code = EXIT_CHECK
            diag = f"routes disagree: relative difference {diff:.3e}"
    payload = _wrap(args, dict(payload, sites=list(sites),
                               components=list(spec.components)),
                    model.model_hash())
    return payload, rows, code, diag


def cmd_inequalities(args):
    model = _load_model(args.model)
    h_values = _floats(args.h_values)
    rep = correlations.inequality_suite(model, h_values=h_values, tol=args.tol)
    rows = [{"h": entry["h"], "kind": k, "passed": int(v["passed"]),
             "extreme": v["extreme"], "ncases": v["ncases"]}
            for entry in rep["entries"]
            for k, v in sorted(entry["kinds"].items())]
    payload = _wrap(args, rep, rep["model_hash"])
    if rep["passed"]:
        return payload, rows, EXIT_OK, ""
    bad = sorted({k for entry in rep["entries"]
                  for k, v in entry["kinds"].items() if not v["passed"]})
    if rep["preconditions_ok"]:
        return payload, rows, EXIT_CHECK, f"inequalities violated: {bad}"
    return payload, rows, EXIT_CHECK, \
        f"preconditions not met (exploratory run); violated: {bad}"


def _thermo_free_energy(args, model):
    lengths = _ints(args.lengths) if args.lengths else tuple(range(4, 30, 2))
    T = thermo.build_transfer(model)
    rep = thermo.free_energy_density(T, lengths=lengths)
    beta, h = model.beta, complex(model.field.h)
    rows = [{"beta": beta, "re_h": h.real, "im_h": h.imag, "L": int(L),
             "re_f": f.real, "im_f": f.imag} for L, f in rep.finite]
    payload = {
        "f_inf": rep.f_inf, "lam1": rep.lam1, "lam2": rep.lam2,
        "gap_ratio": rep.gap_ratio, "degenerate": rep.degenerate,
        "finite": [{"L": int(L), "f": f} for L, f in rep.finite],
        "rate_observed": rep.rate_observed, "rate_expected": rep.rate_expected,
        "note": rep.note,
    }
    if rep.degenerate:
        return payload, rows, EXIT_NUMERIC, \
            "eigenvalue crossing: thermodynamic limit diagnostic"
    return payload, rows, EXIT_OK, ""


def _thermo_mass_gap(args, model):
    T = thermo.build_transfer(model)
    gap = thermo.mass_gap(T)
    beta, h = model.beta, complex(model.field.h)
    payload = {"spectral": None if gap.infinite else gap.value,
               "infinite": gap.infinite, "gap_ratio": gap.gap_ratio}
    rows = [{"beta": beta, "re_h": h.real, "im_h": h.imag,
             "m_spectral": np.inf if gap.infinite else gap.value}]
    try:
        fit = thermo.mass_gap_fit(model)
        payload["fit"] = {"value": fit.value, "spectral": fit.spectral,
                          "discrepancy": fit.discrepancy,
                          "residual": fit.residual,
                          "window": list(fit.window), "length": fit.length}
        rows[0]["m_fit"] = fit.value
        rows[0]["discrepancy"] = fit.discrepancy
    except ValueError as e:
        payload["fit"] = None
        payload["fit_note"] = str(e)
    return payload, rows, EXIT_OK, ""


def _thermo_bc_check(args, model):
    lengths = _ints(args.lengths) if args.lengths else (4, 6, 8, 10, 12, 16)
    try:
        rep = thermo.bc_independence_check(model, lengths=lengths, x=args.x)
    except correlations.SingularAverageError as e:
        raise NumericError(str(e)) from None
    beta, h = model.beta, complex(model.field.h)
    rows = [{"beta": beta, "re_h": h.real, "im_h": h.imag, "L": int(L),
             "gap": g} for L, g in zip(rep["lengths"], rep["gaps"])]
    ok = rep["geometric"] and rep["final_gap"] < args.tol
    if ok:
        return rep, rows, EXIT_OK, ""
    return rep, rows, EXIT_CHECK, \
        f"boundary effect not vanishing: final gap {rep['final_gap']:.3e}"


def _thermo_r_study(args, model):
    beta = model.beta
    coupling = _chain_coupling(model)
    if model.field.mode == "modulated":
        raise InputError("give modulation through --eps-frac and --nmodes")
    if args.grid:
        g = _parse_grid(args.grid)
        h_points = [complex(re, im) for re in g.reals() for im in g.imags()]
    else:
        h_points = [complex(model.field.h)]
    lengths = _ints(args.lengths) if args.lengths else tuple(range(2, 15))
    try:
        rep = thermo.r_function_study(beta, coupling, h_points,
                                      lengths=lengths, eps_frac=args.eps_frac,
                                      nmodes=args.nmodes)
    except ValueError as e:
        raise InputError(str(e)) from None
    rows = []
    for entry in rep["rows"]:
        h = entry["h"]
        for L, r in entry["series"]:
            rows.append({"beta": beta, "re_h": h.real, "im_h": h.imag,
                         "L": int(L), "re_R": r.real, "im_R": r.imag,
                         "abs_R": abs(r)})
    payload = dict(rep, coupling=coupling)
    if rep["alarm"]:
        return payload, rows, EXIT_CHECK, \
            f"partition zero encountered in the cone at {rep['alarms'][0]}"
    if not rep["bounded"]:
        return payload, rows, EXIT_CHECK, \
            f"sup |R| {rep['sup_R']:.6g} exceeds bound {rep['bound']:.6g}"
    return payload, rows, EXIT_OK, ""


def _thermo_delta_probe(args, model):
    beta = model.beta
    coupling = _chain_coupling(model)
    widths = _ints(args.widths) if args.widths else (2, 3, 4, 5, 6)
    try:
        rep = thermo.critical_exponent_probe(beta, widths=widths,
                                             coupling=coupling)
    except ValueError as e:
        raise InputError(str(e)) from None
    rows = []
    for w in sorted(rep["xi"]):
        for h, xi in zip(rep["h"], rep["xi"][w]):
            rows.append({"beta": beta, "w": w, "re_h": h, "im_h": 0.0,
                         "xi": xi})
    return rep, rows, EXIT_OK, ""


_THERMO_MODES = {
    "free-energy": _thermo_free_energy,
    "mass-gap": _thermo_mass_gap,
    "bc-check": _thermo_bc_check,
    "r-study": _thermo_r_study,
    "delta-probe": _thermo_delta_probe,
}


def cmd_thermo(args):
    model = _load_model(args.model)
    try:
        report, rows, code, diag = _THERMO_MODES[args.mode](args, model)
    except ValueError as e:
        raise InputError(str(e)) from None
    return _wrap(args, dict(report, mode=args.mode), model.model_hash()), \
        rows, code, diag


def _quantum_hash(qm):
    blob = json.dumps(_hexify({
        "s": qm.s, "nsites": qm.nsites, "beta": qm.beta,
        "couplings": [[x, y, list(J)] for x, y, J in qm.couplings],
        "fields": [list(f) for f in qm.fields],
    }), sort_keys=True, separators=(",", ":"))
    import hashlib
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _quantum_partition(args, qm, mode):
    q = quantum.quantum_partition(qm, mode=mode)
    qr = quantum.rescaled_partition(qm, mode=mode)
    payload = {"Q": q, "Q_rescaled": qr, "dim": qm.dim, "s": qm.s,
               "beta": qm.beta}
    rows = [{"s": qm.s, "beta": qm.beta, "re_Q": q.real, "im_Q": q.imag,
             "re_Q_rescaled": qr.real, "im_Q_rescaled": qr.imag}]
    return payload, rows, EXIT_OK, ""


def _quantum_limit_study(args, qm, mode):
    s_values = _floats(args.s_values) if args.s_values else (0.5, 1, 2, 4, 8)
    h_grid = _floats(args.h_grid) if args.h_grid else (0.3, 0.8, 1.5)
    direction = _floats(args.direction)
    rep = quantum.classical_limit_study(
        s_values, qm.nsites, qm.couplings, h_grid, direction=direction,
        beta=qm.beta, mode=mode)
    rows = [{"s": s, "sup_deviation": d} for s, d in rep["table"]]
    if rep["decreasing"]:
        return rep, rows, EXIT_OK, ""
    return rep, rows, EXIT_CHECK, \
        "deviation from the classical limit is not decreasing in s"


def _quantum_zero_scan(args, qm, mode):
    grid = _parse_grid(args.grid) if args.grid else GridSpec()
    transverse = _complexes(args.transverse) if args.transverse else (0.0, 0.0)
    try:
        rep = quantum.quantum_zero_scan(qm, grid=grid, transverse=transverse,
                                        mode=mode)
    except ValueError as e:
        raise InputError(str(e)) from None
    rows = [{"re": p.real, "im": p.imag, "normalized_abs": v,
             "in_region": int(r)} for p, v, r in rep.witnesses]
    payload = rep.to_dict()
    if rep.passed:
        return payload, rows, EXIT_OK, ""
    return payload, rows, EXIT_CHECK, \
        f"zero scan failed: min |Q| {rep.min_abs:.3e} at {rep.argmin}"


_QUANTUM_MODES = {
    "partition": _quantum_partition,
    "limit-study": _quantum_limit_study,
    "zero-scan": _quantum_zero_scan,
}


def cmd_quantum(args):
    qm = _load_quantum(args.model)
    mode = resolve_mode(args.precision)
    try:
        report, rows, code, diag = _QUANTUM_MODES[args.mode](args, qm, mode)
    except ValueError as e:
        raise InputError(str(e)) from None
    payload = _wrap(args, dict(report, mode=args.mode), _quantum_hash(qm))
    return payload, rows, code, diag


def cmd_reproduce(args):
    from . import acceptance
    select = _ints(args.criteria) if args.criteria else None
    rep = acceptance.run_suite(select=select, echo=print)
    rows = [{"criterion": r["id"], "passed": int(r["passed"]),
             "seconds": r["seconds"], "detail": r["detail"].replace(",", ";")}
            for r in rep["results"]]
    payload = _wrap(args, rep)
    if rep["passed"]:
        return payload, rows, EXIT_OK, ""
    bad = [r["id"] for r in rep["results"] if not r["passed"]]
    return payload, rows, EXIT_CHECK, f"criteria failed: {bad}"


def _build_parser():
    p = _Parser(prog="lylab", description=__doc__.splitlines()[0])
    p.add_argument("--precision", choices=MODES, default=None,
                   help="override LYLAB_PRECISION")
    sub = p.add_subparsers(dest="subcommand", required=True,
                           parser_class=_Parser)

    def common(sp, model=True, grid=False, tol=None):
        if model:
            sp.add_argument("--model", required=True,
                            help="model config JSON path")
        if grid:
            sp.add_argument("--grid", default=None,
                            help="re0,re1,nre,im0,im1,nim")
        if tol is not None:
            sp.add_argument("--tol", type=float, default=tol)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--seed", type=int, default=2026)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out", default=None, help="output path (stdout if absent)")

    sp = sub.add_parser("ly-scan", help="zero-free field scan")
    common(sp, grid=True, tol=1e-8)
    sp.set_defaults(func=cmd_ly_scan)

    sp = sub.add_parser("circle-check", help="activity roots on the unit circle")
    common(sp, tol=1e-9)
    sp.set_defaults(func=cmd_circle_check)

    sp = sub.add_parser("converse", help="polydisc zero hunt + pair recovery")
    common(sp, tol=1e-10)
    sp.add_argument("--samples", type=int, default=200)
    sp.set_defaults(func=cmd_converse)

    sp = sub.add_parser("ursell", help="connected correlation, both routes")
    common(sp, tol=1e-8)
    sp.add_argument("--sites", required=True, help="comma-separated site indices")
    sp.add_argument("--components", default=None)
    sp.add_argument("--route", choices=("both", "moebius", "epsilon"),
                    default="both")
    sp.set_defaults(func=cmd_ursell)

    sp = sub.add_parser("inequalities", help="GHS / Griffiths / FKG suite")
    common(sp, tol=1e-12)
    sp.add_argument("--h-values", default="0,0.2,1")
    sp.set_defaults(func=cmd_inequalities)

    sp = sub.add_parser("thermo", help="transfer-matrix thermodynamics")
    sp.add_argument("--mode", choices=sorted(_THERMO_MODES), required=True)
    common(sp, grid=True, tol=1e-6)
    sp.add_argument("--lengths", default=None)
    sp.add_argument("--widths", default=None)
    sp.add_argument("--x", type=int, default=1, help="pair distance (bc-check)")
    sp.add_argument("--eps-frac", type=float, default=0.0)
    sp.add_argument("--nmodes", type=int, default=0)
    sp.set_defaults(func=cmd_thermo)

    sp = sub.add_parser("quantum", help="spin-s trace partition functions")
    sp.add_argument("--mode", choices=sorted(_QUANTUM_MODES), required=True)
    common(sp, grid=True, tol=1e-8)
    sp.add_argument("--transverse", default=None, help="fixed h2,h3")
    sp.add_argument("--s-values", default=None)
    sp.add_argument("--h-grid", default=None)
    sp.add_argument("--direction", default="0,0,1")
    sp.set_defaults(func=cmd_quantum)

    sp = sub.add_parser("reproduce", help="acceptance criteria end to end")
    sp.add_argument("--suite", choices=("acceptance",), required=True)
    sp.add_argument("--criteria", default=None,
                    help="subset, e.g. 1,4,9 (default: all)")
    common(sp, model=False)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        payload, rows, code, diag = args.func(args)
    except InputError as e:
        sys.stderr.write(f"E_INPUT: {e}\n")
        return EXIT_INPUT
    except NumericError as e:
        sys.stderr.write(f"E_NUMERIC: {e}\n")
        return EXIT_NUMERIC
    except correlations.SingularAverageError as e:
        sys.stderr.write(f"E_NUMERIC: partition function vanished: {e}\n")
        return EXIT_NUMERIC
    _emit(args, payload, rows)
    if code == EXIT_CHECK:
        sys.stderr.write(f"E_CHECK: {diag}\n")
    elif code == EXIT_NUMERIC:
        sys.stderr.write(f"E_NUMERIC: {diag}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
