"""Named residual suite over the frame, connection, curvature and form identities.

Each identity maps a :class:`Geometry` batch to a pair of arrays
``(residual, scale)`` with one entry per point; it passes when
``residual <= tolerance * scale``.  Scales are ``1 + largest term``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from . import connection as conn
from . import jets
from .geometry import C, H, S, V, Geometry, val
from .metric import MetricError, MetricSpec
from .spray import almost_tangent

TIERS = {"first": 1e-7, "curvature": 1e-6, "deep": 1e-5}
CHUNK = 50

E4 = np.eye(4)
PAIRS = [(a, b) for a in range(4) for b in range(4)]
NAMES = "HSVC"


def _flat(a, n):
    return np.abs(np.asarray(a, dtype=float)).reshape(n, -1)


def compare(lhs, rhs):
    """Max-norm residual of lhs - rhs per point, with its scale."""
    lhs, rhs = np.broadcast_arrays(np.asarray(lhs, float), np.asarray(rhs, float))
    n = lhs.shape[0]
    res = _flat(lhs - rhs, n).max(axis=1)
    scale = 1.0 + np.maximum(_flat(lhs, n).max(axis=1), _flat(rhs, n).max(axis=1))
    return res, scale


def terms(*ts):
    """Residual of a sum of scalar terms that should vanish."""
    ts = [np.asarray(t, float) for t in ts]
    total = sum(ts)
    n = total.shape[0]
    res = _flat(total, n).max(axis=1)
    scale = 1.0 + np.max([_flat(t, n).max(axis=1) for t in ts], axis=0)
    return res, scale


def _col(a):
    return np.asarray(a)[:, None]


def in_coords(g: Geometry, coeff):
    """Frame coefficients (n, ..., 4) -> coordinate vectors (n, ..., 4)."""
    fields = val(g.frame)
    return np.einsum("n...e,nec->n...c", coeff, fields)


def two_form(n, *parts):
    """Frame values of sum coeff * eta^i ^ eta^j from (coeff, i, j) triples."""
    out = np.zeros((n, 4, 4))
    for coeff, i, j in parts:
        out += np.asarray(coeff, float).reshape(-1, 1, 1) * conn.wedge_basis(i, j)
    return out


def volume(n, coeff, i=0, j=1, k=2):
    return np.asarray(coeff, float).reshape(-1, 1, 1, 1) * conn.wedge_basis(i, j, k)


# closed forms -------------------------------------------------------------

def connection_closed_form(I, J):
    n = len(I)
    D = np.zeros((n, 4, 4, 4))
    D[:, H, H] = _col(J) * E4[H]
    D[:, H, V] = _col(J) * E4[V]
    D[:, V, C] = E4[V]
    D[:, V, S] = E4[H]
    D[:, V, H] = -E4[S] - _col(I) * E4[H]
    D[:, C, H] = E4[H]
    D[:, C, V] = E4[V]
    D[:, V, V] = -E4[C] - _col(I) * E4[V]
    D[:, C, S] = E4[S]
    D[:, C, C] = E4[C]
    return D


def curvature_closed_form(t):
    I, rho, SJ, Fs, J = t["I"], t["rho"], t["S(J)"], t["Fscal"], t["J"]
    n = len(I)
    R = np.zeros((n, 4, 4, 4, 4))
    R[:, S, H, S] = -_col(rho) * E4[H]
    R[:, S, H, H] = _col(SJ + rho * I) * E4[H] + _col(rho) * E4[S]
    R[:, S, H, C] = -_col(rho) * E4[V]
    R[:, S, H, V] = _col(SJ + rho * I) * E4[V] + _col(rho) * E4[C]
    R[:, V, H, H] = _col(Fs) * E4[H] - 2 * _col(J) * E4[S]
    R[:, V, H, V] = _col(Fs) * E4[V] - 2 * _col(J) * E4[C]
    return R - np.swapaxes(R, 1, 2)


# identity implementations -------------------------------------------------

def _bracket(a, b, coeff):
    def f(g, t):
        lhs = val(g.brackets)[:, a, b]
        return compare(lhs, in_coords(g, coeff(t)))
    return f


def _conn(a, b):
    def f(g, t):
        rhs = connection_closed_form(t["I"], t["J"])[:, a, b]
        return compare(val(g.D)[:, a, b], in_coords(g, rhs))
    return f


def _curv_entry(a, b, c):
    def f(g, t):
        rhs = curvature_closed_form(t)[:, a, b, c]
        return compare(val(g.curvature)[:, a, b, c], in_coords(g, rhs))
    return f


def _curv_table(g, t):
    return compare(val(g.curvature_frame), curvature_closed_form(t))


def _curv_Jcompat(g, t):
    Rc = g.curvature  # (n, X, Y, Z, comp)
    JR = val(almost_tangent(Rc))
    Rv = val(Rc)
    # J H = V, J S = C, J V = J C = 0
    lhs = np.stack([Rv[:, :, :, V], Rv[:, :, :, C], 0 * Rv[:, :, :, V], 0 * Rv[:, :, :, C]], axis=3)
    return compare(lhs, JR)


def _curv_trace(g, t):
    return terms(val(g.trace_hv), -t["Fscal"])


def _torsion(g, t):
    T = val(g.torsion_frame)
    exp = np.zeros_like(T)
    exp[:, S, H] = -_col(t["rho"]) * E4[V]
    exp[:, H, S] = _col(t["rho"]) * E4[V]
    return compare(T, exp)


def _struct(a):
    def f(g, t):
        n, I, J, rho = g.n, t["I"], t["J"], t["rho"]
        lhs = val(g.d1(g.coframe_form(a)))
        rhs = {
            0: two_form(n, (-I, 0, 2), (1.0, 1, 2), (1.0, 0, 3)),
            1: two_form(n, (-1.0, 0, 2), (1.0, 1, 3)),
            2: two_form(n, (rho, 0, 1), (-J, 0, 2)),
        }[a]
        return compare(lhs, rhs)
    return f


def _djeta(a):
    def f(g, t):
        lhs = val(g.dJ(g.coframe_form(a), 1))
        if a < 2:
            return compare(lhs, 0.0 * lhs)
        return compare(lhs, -val(g.d1(g.coframe_form(a - 2))))
    return f


def _omega_forms(g, t):
    n, I, J = g.n, t["I"], t["J"]
    om = val(g.D_frame)  # (n, X, b, a)
    eta = lambda k: np.broadcast_to(E4[k], (n, 4))
    w11 = _col(J) * eta(H) - _col(I) * eta(V) + eta(C)
    exp = np.zeros_like(om)
    for (a, b, w) in [(0, 0, w11), (1, 0, -eta(V)), (0, 1, eta(V)), (1, 1, eta(C)),
                      (2, 2, w11), (3, 2, -eta(V)), (2, 3, eta(V)), (3, 3, eta(C))]:
        exp[:, :, b, a] = w
    return compare(om, exp)


def omega_closed_forms(n, t):
    Vrho, Fs, rho, J = t["V(rho)"], t["Fscal"], t["rho"], t["J"]
    return {
        (0, 0): two_form(n, (Vrho, 0, 1), (-Fs, 0, 2)),
        (1, 0): two_form(n, (rho, 1, 0), (2 * J, 0, 2)),
        (0, 1): two_form(n, (rho, 0, 1)),
    }


def _Omega(a, b):
    def f(g, t):
        return compare(val(g.Omega(a, b)), omega_closed_forms(g.n, t)[(a, b)])
    return f


def _dj_omega(a, b, coeff):
    def f(g, t):
        lhs = val(g.dJ(g.Omega(a, b), 2))
        return compare(lhs, volume(g.n, coeff(t)))
    return f


def _alpha_d(g, t):
    return compare(val(g.d1(g.alpha)), omega_closed_forms(g.n, t)[(0, 0)])


def _alpha_lie(g, t):
    lhs = val(g.lie_S(g.alpha, 1))
    rhs = -_col(t["V(rho)"]) * E4[H]
    return compare(lhs, rhs)


def alpha_dlie_closed_form(n, t):
    Vrho = t["V(rho)"]
    return -two_form(n, (t["S(Vrho)"], 1, 0), (Vrho, 1, 2), (t["S(Fscal)"], 0, 2)) \
        + two_form(n, (Vrho, 0, 3))


def _alpha_dlie(g, t):
    lhs = val(g.lie_S(g.d1(g.alpha), 2))
    return compare(lhs, alpha_dlie_closed_form(g.n, t))


def _homog(key):
    def f(g, t):
        r = g.homogeneity_residuals()[key]
        ref = {"F": val(g.F), "K": t["K"], "I": t["I"], "J": t["J"]}[key]
        return r, 1.0 + np.abs(ref)
    return f


def _commutator_scalars(g):
    F2 = g.F2
    return {"rho": g.rho, "K": g.K, "I": g.I, "F2": F2}


def _commute(kind):
    def f(g, t):
        res, scale = [], []
        I, J, rho = t["I"], t["J"], t["rho"]
        for name, fj in _commutator_scalars(g).items():
            d = g.d
            if kind == "SH":
                parts = (val(d(S, d(H, fj))), -val(d(H, d(S, fj))), -rho * val(d(V, fj)))
            elif kind == "SV":
                parts = (val(d(S, d(V, fj))), -val(d(V, d(S, fj))), val(d(H, fj)))
            else:
                parts = (val(d(H, d(V, fj))), -val(d(V, d(H, fj))), -val(d(S, fj)),
                         -I * val(d(H, fj)), -J * val(d(V, fj)))
            r, s = terms(*parts)
            res.append(r / s)
            scale.append(s)
        # worst relative residual across the scalars, reported at unit scale
        return np.max(res, axis=0), np.ones(g.n)
    return f


def _landsberg(g, t):
    SVJ = val(g.d(S, g.d(V, g.J)))
    return terms(t["S(Fscal)"], -t["rho"] * t["V(I)"], -t["H(J)"], -SVJ)


def _spray_euler(g, t):
    N, G = val(g.N), val(g.G)
    yv = g.points[:, 2:]
    return compare(np.einsum("nij,nj->ni", N, yv), 2 * G)


def _proj_algebra(g, t):
    h, v, th = val(g.h), val(g.v), val(g.theta)
    Jm = np.broadcast_to(np.block([[np.zeros((2, 2)), np.zeros((2, 2))], [np.eye(2), np.zeros((2, 2))]]), h.shape)
    mm = lambda a, b: np.einsum("nij,njk->nik", a, b)
    checks = [mm(h, h) - h, mm(v, v) - v, mm(h, v), mm(v, h), h + v - np.eye(4),
              mm(th, h), mm(th, Jm) - h, mm(Jm, th) - v, mm(Jm, h) - Jm]
    fr = val(g.frame)
    checks.append(np.einsum("nij,nj->ni", th, fr[:, V]) - fr[:, H])
    checks.append(np.einsum("nij,nj->ni", th, fr[:, C]) - fr[:, S])
    res = np.max([_flat(c, g.n).max(axis=1) for c in checks], axis=0)
    scale = 1.0 + np.max([_flat(a, g.n).max(axis=1) for a in (h, v, th)], axis=0)
    return res, scale


def _jacobi(g, t):
    Phi = val(g.R)
    yv = g.points[:, 2:]
    Py = np.einsum("nij,nj->ni", Phi, yv)
    tr = Phi[:, 0, 0] + Phi[:, 1, 1]
    r1, s1 = compare(Py, 0 * Py)
    r2, s2 = terms(tr, -t["rho"])
    scale = 1.0 + np.abs(Phi).reshape(g.n, -1).max(axis=1) * np.abs(yv).max(axis=1)
    return np.maximum(r1, r2), np.maximum(scale, s2)


def _frame_beta(g, t):
    fr = val(g.frame)
    cof = val(g.coframe)
    Fv = val(g.F)
    dF = np.stack([val(g.F.partial(2)), val(g.F.partial(3))], axis=-1)
    beta = (t["K"] * Fv)[:, None] * dF  # semibasic: beta(X) = beta_i X^i
    hv = lambda M, X: np.einsum("nij,nj->ni", M, X)
    checks = [
        np.einsum("ni,ni->n", beta, fr[:, H, :2])[:, None],
        fr[:, V] - np.concatenate([0 * fr[:, H, :2], fr[:, H, :2]], -1),
        fr[:, C] - np.concatenate([0 * fr[:, S, :2], fr[:, S, :2]], -1),
        hv(val(g.v), fr[:, S]), hv(val(g.v), fr[:, H]), hv(val(g.h), fr[:, V]), hv(val(g.h), fr[:, C]),
        np.einsum("nac,nbc->nab", cof, fr).reshape(g.n, -1) - np.eye(4).reshape(1, -1),
    ]
    res = np.max([_flat(c, g.n).max(axis=1) for c in checks], axis=0)
    return res, 1.0 + np.abs(fr).reshape(g.n, -1).max(axis=1) ** 2


def _F2_constancy(g, t):
    F2 = g.F2
    vals = [val(g.d(k, F2)) for k in (S, H, V)]
    r, s = compare(np.stack(vals, -1), 0.0)
    r2, s2 = terms(val(g.d(C, F2)), -2 * val(F2))
    return np.maximum(r, r2), np.maximum(s, s2) + val(F2)


def _I_twopath(g, t):
    Ib = val(g.I_bracket)
    return np.abs(Ib - t["I"]), 1.0 + np.abs(t["I"])


def _J_twopath(g, t):
    return terms(val(g.J_bracket), -t["J"])


REGISTRY: dict[str, tuple[str, str, object]] = {}


def _reg(ident, tier, anchor, fn):
    REGISTRY[ident] = (tier, anchor, fn)


_reg("bracket.SH", "first", "[S,H] = rho V", _bracket(S, H, lambda t: _col(t["rho"]) * E4[V]))
_reg("bracket.VS", "first", "[V,S] = H", _bracket(V, S, lambda t: np.broadcast_to(E4[H], (len(t["I"]), 4))))
_reg("bracket.HV", "first", "[H,V] = S + I H + J V",
     _bracket(H, V, lambda t: E4[S] + _col(t["I"]) * E4[H] + _col(t["J"]) * E4[V]))
_reg("bracket.CH", "first", "[C,H] = H", _bracket(C, H, lambda t: np.broadcast_to(E4[H], (len(t["I"]), 4))))
_reg("bracket.CS", "first", "[C,S] = S", _bracket(C, S, lambda t: np.broadcast_to(E4[S], (len(t["I"]), 4))))
_reg("bracket.CV", "first", "[C,V] = 0", _bracket(C, V, lambda t: np.zeros((len(t["I"]), 4))))
for _a, _b in PAIRS:
    _reg(f"conn.{NAMES[_a]}{NAMES[_b]}", "first", f"D_{NAMES[_a]}{NAMES[_b]} closed form", _conn(_a, _b))
_reg("conn.forms", "first", "connection 1-form matrix omega^a_b = eta^a(D X_b)", _omega_forms)
_reg("curv.RSHS", "curvature", "R(S,H)S = -rho H", _curv_entry(S, H, S))
_reg("curv.RSHH", "curvature", "R(S,H)H = (S(J) + rho I) H + rho S", _curv_entry(S, H, H))
_reg("curv.BVHH", "curvature", "B(V,H)H = Fscal H - 2 J S", _curv_entry(V, H, H))
_reg("curv.trace", "curvature", "trace of hv-curvature B(V,H) = Fscal", _curv_trace)
_reg("curv.table", "curvature", "full curvature table on frame triples", _curv_table)
_reg("curv.Jcompat", "curvature", "R(X,Y) J Z = J R(X,Y) Z", _curv_Jcompat)
_reg("torsion.vSH", "curvature", "vT(S,H) = -rho V, other torsion components vanish", _torsion)
_reg("bianchi.1", "curvature", "S(J) + V(rho) + I rho = 0",
     lambda g, t: terms(t["S(J)"], t["V(rho)"], t["I"] * t["rho"]))
_reg("bianchi.2", "deep", "S(Fscal) + I V(rho) + V(V(rho)) = 0",
     lambda g, t: terms(t["S(Fscal)"], t["I"] * t["V(rho)"], t["V2(rho)"]))
_reg("struct.eta1", "first", "d eta1 = -I eta1^eta3 + eta2^eta3 (+ eta1^eta4 off the indicatrix)", _struct(0))
_reg("struct.eta2", "first", "d eta2 = -eta1^eta3 (+ eta2^eta4 off the indicatrix)", _struct(1))
_reg("struct.eta3", "first", "d eta3 = rho eta1^eta2 - J eta1^eta3", _struct(2))
_reg("djeta.1", "first", "d_J eta1 = 0", _djeta(0))
_reg("djeta.2", "first", "d_J eta2 = 0", _djeta(1))
_reg("djeta.3", "first", "d_J eta3 = -d eta1", _djeta(2))
_reg("djeta.4", "first", "d_J eta4 = -d eta2", _djeta(3))
_reg("omega.11", "curvature", "Omega^1_1 = V(rho) eta1^eta2 - Fscal eta1^eta3", _Omega(0, 0))
_reg("omega.21", "curvature", "Omega^2_1 = rho eta2^eta1 + 2 J eta1^eta3", _Omega(1, 0))
_reg("omega.12", "curvature", "Omega^1_2 = rho eta1^eta2", _Omega(0, 1))
_reg("dj.omega33", "deep", "d_J Omega^3_3 = 0", _dj_omega(2, 2, lambda t: 0 * t["J"]))
_reg("dj.omega12", "deep", "d_J Omega^1_2 = 0", _dj_omega(0, 1, lambda t: 0 * t["J"]))
_reg("dj.omega21", "deep", "d_J Omega^2_1 = -2 J eta1^eta2^eta3", _dj_omega(1, 0, lambda t: -2 * t["J"]))
_reg("alpha.d", "curvature", "d alpha = V(rho) eta1^eta2 - Fscal eta1^eta3", _alpha_d)
_reg("alpha.lie", "curvature", "L_S alpha = -V(rho) eta1", _alpha_lie)
_reg("alpha.dlie", "deep",
     "L_S d alpha = -(S(V(rho)) eta2^eta1 + V(rho) eta2^eta3 + S(Fscal) eta1^eta3) + V(rho) eta1^eta4",
     _alpha_dlie)
_reg("homog.F", "first", "C(F) = F", _homog("F"))
_reg("homog.K", "first", "C(K) = 0", _homog("K"))
_reg("homog.I", "first", "C(I) = 0", _homog("I"))
_reg("homog.J", "first", "C(J) = J", _homog("J"))
_reg("commute.SH", "curvature", "S(H(f)) - H(S(f)) = rho V(f), f in {rho, K, I, F^2}", _commute("SH"))
_reg("commute.SV", "curvature", "S(V(f)) - V(S(f)) = -H(f)", _commute("SV"))
_reg("commute.HV", "curvature", "H(V(f)) - V(H(f)) = S(f) + I H(f) + J V(f)", _commute("HV"))
_reg("landsberg.SFrhoVI", "deep", "S(Fscal) = rho V(I) + H(J) + S(V(J)); S(Fscal) = rho V(I) when J = 0",
     _landsberg)
_reg("spray.euler", "first", "N y = 2 G", _spray_euler)
_reg("proj.algebra", "first", "projector and adjoint structure algebra", _proj_algebra)
_reg("jacobi.isotropic", "first", "Phi y = 0 and rho = trace Phi", _jacobi)
_reg("frame.beta", "first", "beta(H) = 0, J S = C, J H = V, horizontality, duality", _frame_beta)
_reg("frame.F2const", "first", "S(F^2) = H(F^2) = V(F^2) = 0, C(F^2) = 2 F^2", _F2_constancy)
_reg("invariant.I", "curvature", "bracket and Cartan-tensor main scalars agree", _I_twopath)
_reg("invariant.J", "first", "J = S(I) equals the V-coefficient of [H,V]", _J_twopath)

IDENTITY_IDS = tuple(REGISTRY)


def tolerance_table(overrides=None) -> dict:
    """Per-identity tolerance; overrides keyed by tier name or identity id."""
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(TIERS) - set(REGISTRY)
    if unknown:
        raise KeyError(f"unknown tolerance key(s): {', '.join(sorted(unknown))}")
    tiers = {k: float(overrides.get(k, v)) for k, v in TIERS.items()}
    return {i: float(overrides.get(i, tiers[tier])) for i, (tier, _, _) in REGISTRY.items()}


# the suite ------------------------------------------------------------------

def _table(g: Geometry) -> dict:
    t = g.invariant_table()
    t["S(Vrho)"] = val(g.d(S, g.Vrho))
    return t


def evaluate_batch(g: Geometry, ids=None) -> dict:
    """{id: (residual, scale)} for one batch."""
    t = _table(g)
    out = {}
    for ident in ids or IDENTITY_IDS:
        tier, _, fn = REGISTRY[ident]
        out[ident] = fn(g, t)
    return out


@dataclass
class ResidualReport:
    metric: str
    index: int
    point: tuple
    identities: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(e["pass"] for e in self.identities.values())

    def to_dict(self) -> dict:
        d = {"index": self.index, "point": list(self.point), "identities": self.identities}
        if self.error is not None:
            d["error"] = self.error
        return d


def _entry(res, scale, tol):
    return {"residual": float(res), "scale": float(scale), "tolerance": tol,
            "pass": bool(res <= tol * scale)}


def run_suite(spec: MetricSpec, points, tolerances=None, chunk: int = CHUNK) -> list[ResidualReport]:
    pts = np.asarray(points, dtype=float).reshape(-1, 4)
    tols = tolerances if isinstance(tolerances, dict) and set(tolerances) == set(REGISTRY) \
        else tolerance_table(tolerances)
    reports = []
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        try:
            results = [evaluate_batch(Geometry(spec, block))]
            groups = [(block, range(start, start + len(block)))]
        except (MetricError, jets.JetError, ArithmeticError):
            # fall back to one point at a time so that the failure is localized
            results, groups = [], []
            for k, p in enumerate(block):
                try:
                    results.append(evaluate_batch(Geometry(spec, p[None])))
                except (MetricError, jets.JetError, ArithmeticError) as exc:
                    results.append(exc)
                groups.append((p[None], [start + k]))
        for res, (blk, idx) in zip(results, groups):
            for j, i in enumerate(idx):
                rep = ResidualReport(spec.name, i, tuple(float(v) for v in blk[j]))
                if isinstance(res, Exception):
                    rep.error = f"{type(res).__name__}: {res}"
                    rep.identities = {k: {"residual": None, "scale": None, "tolerance": tols[k],
                                          "pass": False} for k in IDENTITY_IDS}
                else:
                    rep.identities = {k: _entry(r[j], s[j], tols[k]) for k, (r, s) in res.items()}
                reports.append(rep)
    return reports


def summarize(reports: list[ResidualReport]) -> dict:
    """Per-identity worst residual (relative to its scale) and pass flag."""
    out = {}
    for ident in IDENTITY_IDS:
        worst, worst_rel, worst_pt, ok = 0.0, 0.0, None, True
        for rep in reports:
            e = rep.identities[ident]
            ok = ok and e["pass"]
            if e["residual"] is None:
                worst_pt = rep.index if worst_pt is None else worst_pt
                continue
            rel = e["residual"] / e["scale"]
            if rel >= worst_rel:
                worst, worst_rel, worst_pt = e["residual"], rel, rep.index
        out[ident] = {"max_residual": worst, "max_relative": worst_rel, "worst_point": worst_pt,
                      "pass": ok, "tier": REGISTRY[ident][0]}
    return out


def suite_report(spec: MetricSpec, reports, seed=None, tolerances=None, extra=None) -> dict:
    ids = summarize(reports)
    failed = sorted(k for k, v in ids.items() if not v["pass"])
    errors = sum(r.error is not None for r in reports)
    doc = {
        "metric": spec.name,
        "metric_spec": spec.describe(),
        "seed": seed,
        "points": [r.to_dict() for r in reports],
        "identities": ids,
        "tolerances": tolerances if tolerances is not None else tolerance_table(),
        "summary": {"n_points": len(reports), "n_identities": len(IDENTITY_IDS),
                    "n_errors": errors, "failed": failed, "all_pass": not failed and not errors},
    }
    if extra:
        doc.update(extra)
    return doc


def to_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, default=_jsonable)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


CSV_COLUMNS = ("point", "x1", "x2", "y1", "y2", "identity", "residual", "scale", "tolerance", "pass")


def to_csv_rows(reports):
    yield CSV_COLUMNS
    for r in reports:
        for ident in IDENTITY_IDS:
            e = r.identities[ident]
            yield (r.index, *r.point, ident, e["residual"], e["scale"], e["tolerance"], int(e["pass"]))


# sampling -------------------------------------------------------------------

def sample_points(spec: MetricSpec, n: int = 100, seed: int = 0, rmin: float = 0.5,
                  rmax: float = 2.0) -> np.ndarray:
    """Seeded scrambled-Halton points of the domain times an annulus of fibers."""
    if n < 1:
        raise ValueError("need at least one sample point")
    if not 0 < rmin <= rmax:
        raise ValueError("fiber radius range must satisfy 0 < rmin <= rmax")
    x1a, x1b, x2a, x2b = spec.domain.box
    eng = qmc.Halton(d=4, scramble=True, seed=seed)
    got = []
    count = 0
    while count < n:
        u = eng.random(max(2 * n, 16))
        x1 = x1a + (x1b - x1a) * u[:, 0]
        x2 = x2a + (x2b - x2a) * u[:, 1]
        r = rmin + (rmax - rmin) * u[:, 2]
        a = 2 * np.pi * u[:, 3]
        p = np.stack([x1, x2, r * np.cos(a), r * np.sin(a)], axis=1)
        p = p[spec.domain.contains(p)]
        got.append(p)
        count += len(p)
    return np.concatenate(got)[:n]


def normalize_fibers(spec: MetricSpec, points) -> np.ndarray:
    """Rescale y so that F(x, y) = 1."""
    pts = np.array(points, dtype=float).reshape(-1, 4)
    F = np.asarray(spec.evaluate(pts), dtype=float)
    pts[:, 2:] /= F[:, None]
    return pts
