"""Acceptance criteria. Each criterion prints one PASS/FAIL line.

Run directly (``python3 tests/test_acceptance.py``) for just the summary lines;
under pytest the lines appear in the terminal summary.
"""
import io
import os
import sys
import tempfile
from functools import lru_cache

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from berwald import classify as cl  # noqa: E402
from berwald import cli  # noqa: E402
from berwald import flow as fl  # noqa: E402
from berwald import identities as ident  # noqa: E402
from berwald import jets  # noqa: E402
from berwald import metric as mt  # noqa: E402
from berwald.geometry import H, S, V, Geometry, val  # noqa: E402

from conftest import ACCEPTANCE_LINES, CATALOG_CASES, case_id, fd_partial, mp_F2  # noqa: E402
from oracles import isothermal_gauss_curvature  # noqa: E402

N_POINTS = 100
SEED = 0
FUNK_FLAGS = {"riemannian": False, "landsberg": False, "berwald": False, "k_basic": True,
              "cond_ii": False, "cond_iii": False, "constant_K": True, "flat": False}
FLOW_STARTS = {
    "euclidean": [0, 0, 1.0, 0], "sphere": [0.1, 0, 1.0, 0], "hyperbolic": [0.1, 0.1, 0.5, 0.2],
    "randers-flat": [0, 0, 0.6, 0.3], "funk": [0.1, 0, 0.3, 0.2],
}


def _spec(case):
    return mt.catalog_entry(case[0], **case[1])


def _record(k, title, ok, detail):
    ACCEPTANCE_LINES[k] = f"criterion {k} [{title}]: {'PASS' if ok else 'FAIL'} - {detail}"
    return ok, detail


@lru_cache(maxsize=None)
def criterion_1():
    failed, worst_bianchi = {}, 0.0
    for case in CATALOG_CASES:
        spec = _spec(case)
        reports = ident.run_suite(spec, ident.sample_points(spec, N_POINTS, SEED))
        summ = ident.summarize(reports)
        bad = sorted(k for k, v in summ.items() if not v["pass"])
        if any(r.error for r in reports):
            bad.append("<evaluation errors>")
        if bad:
            failed[case_id(case)] = bad
        if case[0] == "funk":
            worst_bianchi = max(summ[k]["max_relative"] for k in ("bianchi.1", "bianchi.2"))
    detail = (f"{len(ident.IDENTITY_IDS)} ids x {len(CATALOG_CASES)} metrics; "
              f"funk bianchi max residual/scale {worst_bianchi:.1e}; failing: {failed or 'none'}")
    ok = not failed and worst_bianchi <= 1e-5
    return _record(1, "identity suite", ok, detail) + (failed, worst_bianchi)


@lru_cache(maxsize=None)
def criterion_2():
    errs = {}
    for name, K0, lam in (("sphere", 1.0, mt.SPHERE_LAMBDA), ("hyperbolic", -1.0, mt.HYPERBOLIC_LAMBDA)):
        spec = mt.catalog_entry(name)
        pts = ident.sample_points(spec, N_POINTS, SEED)
        K = val(Geometry(spec, pts).K)
        oracle = np.array([isothermal_gauss_curvature(lam, p[:2]) for p in pts])
        errs[name] = max(np.max(np.abs(K - K0)), np.max(np.abs(oracle - K0)))
    spec = mt.catalog_entry("funk")
    pts = ident.sample_points(spec, N_POINTS, SEED)
    g = Geometry(spec, pts)
    K_bracket = val(g.c[:, S, H, V]) / val(g.F2)  # [S, H] = rho V as a second path
    errs["funk"] = max(np.max(np.abs(val(g.K) + 0.25)), np.max(np.abs(K_bracket + 0.25)))
    ok = all(e <= 1e-5 for e in errs.values())
    return _record(2, "curvature values", ok, ", ".join(f"{k} max|K-K0| {v:.1e}" for k, v in errs.items()))


@lru_cache(maxsize=None)
def criterion_3():
    worst = 0.0
    for case in CATALOG_CASES:
        spec = _spec(case)
        g = Geometry(spec, ident.sample_points(spec, N_POINTS, SEED))
        Ib, Ic = val(g.I_bracket), val(g.I)
        worst = max(worst, float(np.max(np.abs(Ib - Ic) / (1 + np.abs(Ic)))))
    return _record(3, "two-path I", worst <= 1e-6, f"max |I_b - I_c|/(1+|I|) {worst:.1e}")


@lru_cache(maxsize=None)
def criterion_4():
    worst = 0.0
    indices = jets.multi_indices(3)
    for case in CATALOG_CASES:
        spec = _spec(case)
        pts = ident.sample_points(spec, 20, seed=SEED + 17)
        J = mt.eval_F2(spec, pts, 3)
        f = mp_F2(spec)
        for k, p in enumerate(pts):
            for mi in indices:
                ref = fd_partial(f, p, mi)
                got = J.partial_value(mi)[k]
                worst = max(worst, abs(got - ref) / max(abs(ref), 1.0))
    return _record(4, "F^2 partials vs finite differences", worst <= 1e-5,
                   f"{len(indices)} partials x 20 points x {len(CATALOG_CASES)} metrics, max rel err {worst:.1e}")


def _flags_ok(name, flags):
    on = {k for k, v in flags.items() if v}
    if name == "euclidean":
        return {"riemannian", "flat"} <= on
    if name in ("sphere", "hyperbolic"):
        return {"riemannian", "k_basic", "constant_K"} <= on
    if name == "randers-flat":
        return {"berwald", "flat"} <= on and "riemannian" not in on
    return flags == FUNK_FLAGS


@lru_cache(maxsize=None)
def criterion_5():
    bad = []
    for case in CATALOG_CASES:
        spec = _spec(case)
        r = cl.classification_report(spec, ident.sample_points(spec, N_POINTS, SEED), seed=SEED)
        if not _flags_ok(case[0], r["flags"]):
            bad.append(f"{case_id(case)} flags")
        if r["violations"]:
            bad.append(f"{case_id(case)} violations {r['violations']}")
    return _record(5, "classification regression", not bad, "; ".join(bad) or "flags match, no VIOLATION")


@lru_cache(maxsize=None)
def criterion_6():
    drifts, ratios, bad = {}, {}, []
    for case in CATALOG_CASES:
        spec = _spec(case)
        p0 = FLOW_STARTS[case[0]]
        tr = fl.integrate_geodesic(spec, p0, 1.0, 1e-3, record_every=10, monitors=False)
        F = tr.monitors["F"]
        drifts[case_id(case)] = d = float(np.max(np.abs(F - F[0])) / F[0])
        r = fl.convergence_ratio(spec, p0, 1.0, 0.1)
        # flat sprays are integrated exactly: errors sit at the roundoff floor
        floor = r["error_dt"] < 1e-12
        ratios[case_id(case)] = "floor" if floor else f"{r['ratio']:.1f}"
        if tr.exited or d > 1e-7 or not (floor or r["ratio"] >= 8):
            bad.append(case_id(case))
    detail = (f"max F drift {max(drifts.values()):.1e}; ratios "
              + ", ".join(f"{k} {v}" for k, v in ratios.items()))
    return _record(6, "flow conservation and order", not bad, detail + (f"; failing {bad}" if bad else ""))


def _cli_reports(workdir):
    argvs = [
        ["verify", "--metric", "funk", "--points", "30", "--seed", "3"],
        ["classify", "--metric", "sphere", "--points", "30", "--seed", "3"],
        ["invariants", "--metric", "randers-flat", "--param", "b=0.25", "--points", "30", "--seed", "3"],
        ["flow", "--metric", "hyperbolic", "--x", "0.1,0.1", "--y", "0.5,0.2", "--t", "0.2", "--dt", "0.01",
         "--format", "json"],
    ]
    cwd = os.getcwd()
    os.chdir(workdir)
    try:
        for argv in argvs:
            cli.main(argv, out=io.StringIO())
        return {f: open(f, "rb").read() for f in sorted(os.listdir("."))}
    finally:
        os.chdir(cwd)


@lru_cache(maxsize=None)
def criterion_7():
    with tempfile.TemporaryDirectory() as a, tempfile.TemporaryDirectory() as b:
        ra, rb = _cli_reports(a), _cli_reports(b)
    same = len(ra) == 4 and ra == rb
    return _record(7, "determinism", same, f"{len(ra)} JSON reports, byte-identical: {same}")


# pytest -----------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="dj.omega21 is false on funk (J != 0); every other id passes")
def test_criterion_1_identity_suite():
    assert criterion_1()[0], criterion_1()[1]


def test_criterion_1_all_other_identities_pass():
    _, _, failed, bianchi = criterion_1()
    assert failed == {"funk": ["dj.omega21"]}
    assert bianchi <= 1e-5


def test_criterion_2_curvature_values():
    assert criterion_2()[0], criterion_2()[1]


def test_criterion_3_two_path_main_scalar():
    assert criterion_3()[0], criterion_3()[1]


def test_criterion_4_finite_difference_oracle():
    assert criterion_4()[0], criterion_4()[1]


def test_criterion_5_classification():
    assert criterion_5()[0], criterion_5()[1]


def test_criterion_6_flow():
    assert criterion_6()[0], criterion_6()[1]


def test_criterion_7_determinism():
    assert criterion_7()[0], criterion_7()[1]


if __name__ == "__main__":
    for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7):
        fn()
    for k in sorted(ACCEPTANCE_LINES):
        print(ACCEPTANCE_LINES[k])
