"""Berwald connection, torsion, curvature, connection and curvature forms, and
the exterior calculus (d, i_J, d_J, Lie derivative along S) on frame fields.

Differential forms are represented by their values on frame fields: a
k-form is a jet whose batch axes after the point axis are k frame slots,
optionally followed by extra index axes.  Exterior derivatives always go
through the invariant (bracket) formula, using the frame structure
coefficients ``c[n, X, Y, e] = eta^e([X, Y])``.
"""
from __future__ import annotations

import numpy as np

from . import jets
from .jets import Jet
from .spray import almost_tangent, directional, lie_bracket

# J in the frame basis: J H = V, J S = C, J V = J C = 0; J_FRAME[e, b] = eta^e(J X_b)
J_FRAME = np.zeros((4, 4))
J_FRAME[2, 0] = 1.0
J_FRAME[3, 1] = 1.0


def _lift(m: Jet, like: Jet, tail: int) -> Jet:
    """Reshape a per-point tensor (n, *t) so it broadcasts against ``like``."""
    extra = len(like.shape) - 1 - (tail - 1)
    return m.reshape((m.shape[0],) + (1,) * extra + m.shape[1:])


def apply(m: Jet, X: Jet) -> Jet:
    """Per-point 4x4 endomorphism applied to fields X of shape (n, ..., 4)."""
    m, X = jets.align(m, X)
    mm = _lift(m, X, 2)
    return (mm * X.expand(-2)).sum(-1)


def covariant(X: Jet, Y: Jet, h: Jet, v: Jet, theta: Jet) -> Jet:
    """D_X Y = v[hX, vY] + h[vX, hY] + J[vX, theta Y] + theta[hX, JY]."""
    X, Y = jets.align(X, Y)
    hX, vX = apply(h, X), apply(v, X)
    hY, vY, tY = apply(h, Y), apply(v, Y), apply(theta, Y)
    JY = almost_tangent(Y)
    out = apply(v, lie_bracket(hX, vY))
    out = out + apply(h, lie_bracket(vX, hY))
    out = out + almost_tangent(lie_bracket(vX, tY))
    out = out + apply(theta, lie_bracket(hX, JY))
    return out


def connection_table(frame: Jet, h, v, theta) -> Jet:
    """D_{X_a} X_b for all frame pairs: (n, 4, 4, 4 components)."""
    return covariant(frame.expand(-2), frame.expand(-3), h, v, theta)


def curvature_tensor(frame: Jet, brackets: Jet, table: Jet, h, v, theta) -> Jet:
    """C(X, Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z on frame triples: (n, 4, 4, 4, 4)."""
    X = frame.expand(-2).expand(-2)  # (n, 4, 1, 1, 4)
    DD = covariant(X, table.expand(1), h, v, theta)  # D_X (D_Y Z)
    Z = frame.expand(1).expand(1)  # (n, 1, 1, 4, 4)
    DB = covariant(brackets.expand(-2), Z, h, v, theta)
    DD, DB = jets.align(DD, DB)
    return DD - jets.swapaxes(DD, 1, 2) - DB


def torsion_tensor(table: Jet, brackets: Jet) -> Jet:
    table, brackets = jets.align(table, brackets)
    return table - jets.swapaxes(table, 1, 2) - brackets


# exterior calculus on frame values ----------------------------------------

def frame_derivatives(frame: Jet, f: Jet) -> Jet:
    """X_b(f_...) for every frame field, f of shape (n, *axes); new axis 1."""
    X = frame.reshape((frame.shape[0], 4) + (1,) * (len(f.shape) - 1) + (4,))
    return directional(X, f.expand(1))


def _contract_structure(c: Jet, omega: Jet) -> Jet:
    """Sum_e c[n, b, d, e] * omega[n, e, ...] -> (n, b, d, ...)."""
    c, omega = jets.align(c, omega)
    extra = len(omega.shape) - 2
    letters = "pqrstuvw"[:extra]
    return jets.einsum(f"nbde,ne{letters}->nbd{letters}", c, omega)


def d_zero_form(frame: Jet, f: Jet) -> Jet:
    """df on frame fields: (df)_b = X_b(f)."""
    return frame_derivatives(frame, f)


def d_one_form(frame: Jet, c: Jet, alpha: Jet) -> Jet:
    """(d alpha)(X_b, X_d) = X_b(alpha_d) - X_d(alpha_b) - alpha([X_b, X_d])."""
    Xa = frame_derivatives(frame, alpha)  # (n, b, d, ...)
    Ca = _contract_structure(c, alpha)
    Xa, Ca = jets.align(Xa, Ca)
    return Xa - jets.swapaxes(Xa, 1, 2) - Ca


def d_two_form(frame: Jet, c: Jet, omega: Jet) -> Jet:
    """Invariant formula for d of a 2-form given on frame pairs: (n, b, c, d, ...)."""
    Xw = frame_derivatives(frame, omega)  # Xw[b, c, d] = X_b(omega_cd)
    # Bw[b, c, d] = omega([X_b, X_c], X_d)
    Bw = _contract_structure(c, omega)
    Xw, Bw = jets.align(Xw, Bw)
    t1 = Xw - _perm(Xw, (1, 0, 2)) + _perm(Xw, (2, 0, 1))
    t2 = -Bw + _perm(Bw, (0, 2, 1)) - _perm(Bw, (1, 2, 0))
    return t1 + t2


def _perm(w: Jet, order) -> Jet:
    """u[i0, i1, i2] = w[i_order[0], i_order[1], i_order[2]] over slot axes 1..3."""
    nb = len(w.shape)
    inv = [0] * 3
    for pos, o in enumerate(order):
        inv[o] = pos
    axes = [0] + [1 + inv[k] for k in range(3)] + list(range(4, nb + 1))
    return Jet(np.transpose(w.coeffs, axes), w.order)


def i_J(form: Jet, slots: int) -> Jet:
    """(i_J w)(X_1..X_k) = sum_i w(.., J X_i, ..) using the constant frame matrix of J."""
    coeffs = form.coeffs
    out = np.zeros_like(coeffs)
    for s in range(slots):
        ax = 1 + s
        moved = np.moveaxis(coeffs, ax, -2)  # (..., e, ncoef)
        contracted = np.einsum("eb,...ek->...bk", J_FRAME, moved)
        out = out + np.moveaxis(contracted, -2, ax)
    return Jet(out, form.order)


def wedge_basis(*ids: int) -> np.ndarray:
    """Frame values of eta^{i1} ^ ... ^ eta^{ik} as a constant (4,)*k tensor."""
    k = len(ids)
    out = np.zeros((4,) * k)
    from itertools import permutations

    for perm in permutations(range(k)):
        sign = _perm_sign(perm)
        idx = tuple(ids[p] for p in perm)
        out[idx] += sign
    return out


def _perm_sign(perm):
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def d_J(frame: Jet, c: Jet, form: Jet, slots: int) -> Jet:
    """d_J = i_J d - d i_J on a form with ``slots`` frame slots (1 or 2)."""
    d = {1: d_one_form, 2: d_two_form}[slots]
    dw = d(frame, c, form)
    a = i_J(dw, slots + 1)
    b = d(frame, c, i_J(form, slots))
    a, b = jets.align(a, b)
    return a - b


def wedge(alpha: Jet, beta: Jet) -> Jet:
    """(alpha ^ beta)(X_b, X_c) = alpha_b beta_c - alpha_c beta_b for 1-forms (n, 4)."""
    alpha, beta = jets.align(alpha, beta)
    ab = alpha.expand(-1) * beta.expand(-2)
    return ab - jets.swapaxes(ab, 1, 2)


def lie_derivative_S(frame: Jet, c: Jet, form: Jet, slots: int, s_index: int = 1) -> Jet:
    """(L_S w)(X..) = S(w(X..)) - sum_i w(.., [S, X_i], ..)."""
    out = _along(frame[:, s_index], form)
    cs = c[:, s_index]  # (n, b, e) = eta^e([S, X_b])
    for s in range(slots):
        ax = 1 + s
        cs_, w = jets.align(cs, form)
        moved = Jet(np.moveaxis(w.coeffs, ax, 1), w.order)
        letters = "pqrstuvw"[: len(moved.shape) - 2]
        term = jets.einsum(f"nbe,ne{letters}->nb{letters}", cs_, moved)
        term = Jet(np.moveaxis(term.coeffs, 1, ax), term.order)
        out, term = jets.align(out, term)
        out = out - term
    return out


def _along(X: Jet, f: Jet) -> Jet:
    """X(f) for one per-point field X (n, 4) and f (n, ...)."""
    Xl = X.reshape((X.shape[0],) + (1,) * (len(f.shape) - 1) + (4,))
    return directional(Xl, f)


# point-level helpers --------------------------------------------------------

_NAMES = "HSVC"


def _geometry(spec, p):
    from .geometry import Geometry
    from .metric import as_points

    pts, single = as_points(p)
    return Geometry(spec, pts), single


def _sel(a, single):
    return a[0] if single else a


def berwald_connection(spec, p, X: str, Y: str) -> np.ndarray:
    """D_X Y for named frame fields, in coordinates."""
    g, single = _geometry(spec, p)
    return _sel(g.D.coeffs[:, _NAMES.index(X), _NAMES.index(Y), :, 0], single)


def curvature(spec, p, X: str, Y: str, Z: str) -> np.ndarray:
    """C(X, Y) Z for named frame fields, in coordinates."""
    g, single = _geometry(spec, p)
    a, b, c = (_NAMES.index(k) for k in (X, Y, Z))
    return _sel(g.curvature.coeffs[:, a, b, c, :, 0], single)


def trace_hv(spec, p):
    g, single = _geometry(spec, p)
    v = g.trace_hv.coeffs[..., 0]
    return float(v[0]) if single else v


def structural_residuals(spec, p) -> dict:
    """Max-norm residual of d eta^a against its closed form, a = 1, 2, 3."""
    from .identities import evaluate_batch

    g, single = _geometry(spec, p)
    out = {}
    for k in ("struct.eta1", "struct.eta2", "struct.eta3"):
        r, _ = evaluate_batch(g, (k,))[k]
        out[k] = float(r[0]) if single else r
    return out


def curvature_two_forms(spec, p) -> dict:
    """Omega^a_b on frame pairs, keyed by 0-based (a, b)."""
    g, single = _geometry(spec, p)
    return {(a, b): _sel(g.Omega(a, b).coeffs[..., 0], single) for a in range(4) for b in range(4)}


def dJ_two_form_residuals(spec, p) -> dict:
    """d_J of the curvature forms as 3-forms on frame triples, keyed by 0-based (a, b)."""
    g, single = _geometry(spec, p)
    return {(a, b): _sel(g.dJ(g.Omega(a, b), 2).coeffs[..., 0], single)
            for a, b in ((2, 2), (0, 1), (1, 0))}
