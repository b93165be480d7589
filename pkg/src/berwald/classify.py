"""Curvature-condition flags for a metric and local probes of the rigidity theorems.

All statistics are taken at F-normalized points (y rescaled to F = 1), where
the homogeneous invariants are dimensionless.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import identities as ident
from .geometry import Geometry, S, V, val
from .metric import MetricSpec

DEFAULT_THRESHOLD = 1e-6
CHAIN_TOL = 1e-5

HOLDS = "hypotheses-hold-and-conclusion-holds"
VACUOUS = "hypotheses-fail"
VIOLATION = "VIOLATION"

FLAGS = ("riemannian", "landsberg", "berwald", "k_basic", "cond_ii", "cond_iii",
         "constant_K", "flat")


def sample_statistics(spec: MetricSpec, points, chunk: int = ident.CHUNK) -> dict:
    """Per-point invariant values and chain residuals at F-normalized points."""
    pts = ident.normalize_fibers(spec, points)
    chain_ids = ("bianchi.1", "bianchi.2", "commute.SH", "commute.SV", "commute.HV",
                 "landsberg.SFrhoVI")
    cols: dict[str, list] = {}
    for start in range(0, len(pts), chunk):
        g = Geometry(spec, pts[start:start + chunk])
        t = g.invariant_table()
        t["V(K)"] = val(g.d(V, g.K))
        t["S(V(J))"] = val(g.d(S, g.d(V, g.J)))
        for k, (r, s) in ident.evaluate_batch(g, chain_ids).items():
            t["chain:" + k] = r / s
        for k, v in t.items():
            cols.setdefault(k, []).append(np.asarray(v, dtype=float))
    return {k: np.concatenate(v) for k, v in cols.items()}


def _amax(a) -> float:
    return float(np.max(np.abs(a)))


@dataclass
class Classification:
    metric: str
    threshold: float
    n_points: int
    flags: dict
    statistics: dict

    def to_dict(self) -> dict:
        return asdict(self)


def classify(spec: MetricSpec, points, threshold: float = DEFAULT_THRESHOLD, stats=None) -> Classification:
    t = stats if stats is not None else sample_statistics(spec, points)
    I, J, K, rho = t["I"], t["J"], t["K"], t["rho"]
    st = {
        "max|I|": _amax(I),
        "max|J|": _amax(J),
        "max|H(I)|": _amax(t["H(I)"]),
        "max|V(K)|": _amax(t["V(K)"]),
        "max|V(rho)+I|": _amax(t["V(rho)"] + I),
        "max|V(rho)+I*rho|": _amax(t["V(rho)"] + I * rho),
        "max|S(J)|": _amax(t["S(J)"]),
        "spread(K)": float(np.max(K) - np.min(K)),
        "max|K|": _amax(K),
        "mean(K)": float(np.mean(K)),
    }
    small = lambda key: st[key] <= threshold
    flags = {
        "riemannian": small("max|I|"),
        "landsberg": small("max|J|"),
        "berwald": small("max|J|") and small("max|H(I)|"),
        "k_basic": small("max|V(K)|"),
        "cond_ii": small("max|V(rho)+I|"),
        "cond_iii": small("max|V(rho)+I*rho|"),
        "constant_K": small("spread(K)"),
        "flat": small("max|K|"),
    }
    return Classification(spec.name, threshold, len(I), flags, st)


# theorem probes -------------------------------------------------------------

@dataclass
class ProbeResult:
    theorem: str
    statement: str
    hypotheses: dict
    conclusions: dict
    chain: dict
    hypotheses_hold: bool
    conclusion_holds: bool
    chain_holds: bool
    verdict: str
    threshold: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _h_small(value, thr):
    return {"statistic": value, "holds": bool(value <= thr)}


def _h_nonflat(t, thr):
    v = float(np.min(np.abs(t["K"])))
    return {"statistic": v, "holds": bool(v > thr), "kind": "min|K| > threshold"}


def _chain(t, *ids):
    return {k: float(np.max(t["chain:" + k])) for k in ids}


def _probe_T43(t, thr):
    return ("Landsberg and S(Fscal) = 0 imply I = 0 (nonflat)",
            {"max|J|": _h_small(_amax(t["J"]), thr),
             "max|S(Fscal)|": _h_small(_amax(t["S(Fscal)"]), thr),
             "nonflat": _h_nonflat(t, thr)},
            {"max|I|": _amax(t["I"])},
            _chain(t, "landsberg.SFrhoVI", "commute.SV"))


def _probe_P52(t, thr):
    return ("V(rho) = 0 implies S(Fscal) = 0 and S(J) = -I rho",
            {"max|V(rho)|": _h_small(_amax(t["V(rho)"]), thr)},
            {"max|S(Fscal)|": _amax(t["S(Fscal)"]),
             "max|S(J)+I*rho|": _amax(t["S(J)"] + t["I"] * t["rho"])},
            _chain(t, "bianchi.1", "bianchi.2"))


def _probe_L551(t, thr):
    I, rho = t["I"], t["rho"]
    return ("V(rho) = -I implies S(Fscal) = I^2 + V(I) and S(J) = I (1 - rho)",
            {"max|V(rho)+I|": _h_small(_amax(t["V(rho)"] + I), thr)},
            {"max|S(Fscal)-I^2-V(I)|": _amax(t["S(Fscal)"] - I ** 2 - t["V(I)"]),
             "max|S(J)-I*(1-rho)|": _amax(t["S(J)"] - I * (1 - rho))},
            _chain(t, "bianchi.1", "bianchi.2"))


def _probe_T56(t, thr):
    sr, sj = _amax(t["S(rho)"]), _amax(t["S(J)"])
    return ("V(rho) = -I and (S(rho) = 0 or S(J) = 0) imply I = 0 (nonflat)",
            {"max|V(rho)+I|": _h_small(_amax(t["V(rho)"] + t["I"]), thr),
             "min(max|S(rho)|, max|S(J)|)": _h_small(min(sr, sj), thr),
             "nonflat": _h_nonflat(t, thr)},
            {"max|I|": _amax(t["I"])},
            _chain(t, "commute.SH", "commute.SV", "bianchi.1"))


def _probe_P58(t, thr):
    return ("V(rho) = -I rho and S(rho) = 0 imply rho Fscal = 0",
            {"max|V(rho)+I*rho|": _h_small(_amax(t["V(rho)"] + t["I"] * t["rho"]), thr),
             "max|S(rho)|": _h_small(_amax(t["S(rho)"]), thr)},
            {"max|rho*Fscal|": _amax(t["rho"] * t["Fscal"])},
            _chain(t, "commute.SV", "commute.HV"))


def _probe_T510(t, thr):
    return ("V(rho) = -I rho and S(rho) = 0 imply I rho^2 = 0",
            {"max|V(rho)+I*rho|": _h_small(_amax(t["V(rho)"] + t["I"] * t["rho"]), thr),
             "max|S(rho)|": _h_small(_amax(t["S(rho)"]), thr),
             "nonflat": _h_nonflat(t, thr)},
            {"max|I*rho^2|": _amax(t["I"] * t["rho"] ** 2)},
            _chain(t, "commute.SH", "commute.SV", "bianchi.1"))


THEOREMS = {
    "T4.3": _probe_T43,
    "P5.2": _probe_P52,
    "L5.5.1": _probe_L551,
    "T5.6": _probe_T56,
    "P5.8": _probe_P58,
    "T5.10": _probe_T510,
}


def theorem_probe(spec: MetricSpec, theorem: str, points, threshold: float = DEFAULT_THRESHOLD,
                  stats=None) -> ProbeResult:
    if theorem not in THEOREMS:
        raise KeyError(f"unknown theorem id {theorem!r}; expected one of {', '.join(THEOREMS)}")
    t = stats if stats is not None else sample_statistics(spec, points)
    statement, hyps, concl, chain = THEOREMS[theorem](t, threshold)
    h_ok = all(h["holds"] for h in hyps.values())
    c_ok = all(v <= threshold for v in concl.values())
    chain_ok = all(v <= CHAIN_TOL for v in chain.values())
    if not chain_ok or (h_ok and not c_ok):
        verdict = VIOLATION
    elif h_ok:
        verdict = HOLDS
    else:
        verdict = VACUOUS
    return ProbeResult(theorem, statement, hyps, concl, chain, h_ok, c_ok, chain_ok, verdict, threshold)


def classification_report(spec: MetricSpec, points, threshold: float = DEFAULT_THRESHOLD,
                          seed=None) -> dict:
    stats = sample_statistics(spec, points)
    cl = classify(spec, points, threshold, stats=stats)
    probes = {k: theorem_probe(spec, k, points, threshold, stats=stats).to_dict() for k in THEOREMS}
    return {
        "metric": spec.name,
        "metric_spec": spec.describe(),
        "seed": seed,
        "threshold": threshold,
        "n_points": cl.n_points,
        "flags": cl.flags,
        "statistics": cl.statistics,
        "theorem_probes": probes,
        "violations": sorted(k for k, p in probes.items() if p["verdict"] == VIOLATION),
    }
