"""The Berwald frame (H, S, V, C), its coframe, frame derivatives, Lie
brackets and the invariants I, J, K, rho and the hv-trace scalar.

Frame fields are stacked on one batch axis in the order H, S, V, C; the
coframe row ``a`` is the covector dual to frame field ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import Jet
from .metric import MetricError
from .spray import component, inverse_2x2, matvec

FRAME_NAMES = ("H", "S", "V", "C")
H, S, V, C = range(4)


class DegenerateFrameError(MetricError):
    pass


def unit_normal_jets(F: Jet, F2: Jet, det_g: Jet) -> Jet:
    """m^i = (-l_2, l_1) / sqrt(det g) with l_j = dF/dy^j.

    The result is g-orthogonal to y, has g(m, m) = 1 and det(y, m) > 0.
    """
    order = min(F2.order - 1, det_g.order)
    F_ = F.truncate(order)
    l1 = F2.partial(2).truncate(order) / (2.0 * F_)
    l2 = F2.partial(3).truncate(order) / (2.0 * F_)
    root = jets.sqrt(det_g.truncate(order))
    return jets.stack([-l2 / root, l1 / root])


def frame_jets(F: Jet, y: Jet, G: Jet, N: Jet, m: Jet) -> Jet:
    """Frame fields as a (..., 4 fields, 4 components) jet."""
    order = min(N.order, m.order, G.order)
    F, y, G, N, m = (q.truncate(order) for q in (F, y, G, N, m))
    Fm = m * F.expand(-1)
    zero = Jet.constant(np.zeros(Fm.shape), order)
    Hf = jets.stack([component(Fm, 0), component(Fm, 1), *_parts(-matvec(N, Fm))])
    Sf = jets.stack([component(y, 0), component(y, 1), *_parts(-2.0 * G)])
    Vf = jets.stack([*_parts(zero), *_parts(Fm)])
    Cf = jets.stack([*_parts(zero), *_parts(y)])
    return jets.stack([Hf, Sf, Vf, Cf], axis=-2)


def _parts(v):
    return component(v, 0), component(v, 1)


def coframe_jets(frame: Jet) -> Jet:
    """Dual basis by block inversion of the frame matrix (columns = fields).

    The frame matrix is [[A, 0], [B, D]] because V and C are vertical, so its
    inverse is [[A^-1, 0], [-D^-1 B A^-1, D^-1]].
    """
    M = jets.swapaxes(frame, -1, -2)  # rows = components, columns = fields
    c = M.coeffs
    A = Jet(c[..., :2, :2, :], M.order)
    B = Jet(c[..., 2:, :2, :], M.order)
    D = Jet(c[..., 2:, 2:, :], M.order)
    Ainv, _ = inverse_2x2(A)
    Dinv, _ = inverse_2x2(D)
    lower = -jets.einsum("...ij,...jk->...ik", Dinv, jets.einsum("...ij,...jk->...ik", B, Ainv))
    zero = np.zeros(Ainv.coeffs.shape)
    top = np.concatenate([Ainv.coeffs, zero], axis=-2)
    bottom = np.concatenate([lower.coeffs, Dinv.coeffs], axis=-2)
    return Jet(np.concatenate([top, bottom], axis=-3), M.order)


def check_frame_conditioning(frame_values: np.ndarray, limit: float = 1e8):
    cond = np.linalg.cond(np.swapaxes(frame_values, -1, -2))
    if np.any(~np.isfinite(cond)) or np.any(cond > limit):
        raise DegenerateFrameError(f"degenerate frame at point (condition number {np.max(cond):.3g})")
    return cond


def frame_derivative(X: Jet, f: Jet) -> Jet:
    """X(f) for a frame field X (..., 4) and scalar jet f; nests through jets."""
    from .spray import directional

    return directional(X, f)


def all_brackets(frame: Jet) -> Jet:
    """[X_a, X_b] for every frame pair as a (..., 4, 4, 4) jet."""
    from .spray import lie_bracket

    return lie_bracket(frame.expand(-2), frame.expand(-3))


def in_frame(coframe: Jet, W: Jet) -> Jet:
    """Frame coefficients eta^e(W) of coordinate vectors W of shape (n, ..., 4)."""
    coframe, W = jets.align(coframe, W)
    extra = len(W.shape) - 2
    cf = coframe.reshape((coframe.shape[0],) + (1,) * extra + coframe.shape[1:])
    return (cf * W.expand(-2)).sum(-1)


@dataclass(frozen=True)
class FrameAtPoint:
    H: np.ndarray
    S: np.ndarray
    V: np.ndarray
    C: np.ndarray
    coframe: np.ndarray
    fields: Jet


@dataclass(frozen=True)
class InvariantSet:
    I: np.ndarray | float
    J: np.ndarray | float
    K: np.ndarray | float
    rho: np.ndarray | float
    Fscal: np.ndarray | float
    derivatives: dict

    def as_dict(self) -> dict:
        out = {"I": self.I, "J": self.J, "K": self.K, "rho": self.rho, "Fscal": self.Fscal}
        out.update(self.derivatives)
        return out


INVARIANT_COLUMNS = (
    "I", "J", "K", "rho", "Fscal",
    "S(I)", "V(I)", "H(I)", "S(J)", "V(J)", "H(J)",
    "S(rho)", "V(rho)", "H(rho)", "V2(rho)", "S(Fscal)",
)


def _geometry(spec, p):
    from .geometry import Geometry
    from .metric import as_points

    pts, single = as_points(p)
    return Geometry(spec, pts), single


def build_frame(spec, p) -> FrameAtPoint:
    geo, single = _geometry(spec, p)
    vals = geo.frame.coeffs[..., 0]
    cof = geo.coframe.coeffs[..., 0]
    sel = (lambda a: a[0]) if single else (lambda a: a)
    return FrameAtPoint(*(sel(vals[:, k]) for k in range(4)), sel(cof), geo.frame)


def lie_bracket(spec, p, X: str, Y: str) -> np.ndarray:
    """[X, Y] of two named frame fields in coordinates."""
    geo, single = _geometry(spec, p)
    a, b = FRAME_NAMES.index(X), FRAME_NAMES.index(Y)
    out = geo.brackets.coeffs[:, a, b, :, 0]
    return out[0] if single else out


def extract_invariants(spec, p) -> InvariantSet:
    """Invariants with the two-path checks on I (errors if either fails)."""
    geo, single = _geometry(spec, p)
    geo.check_bracket_decomposition()
    table = geo.invariant_table()
    sel = (lambda a: float(a[0])) if single else (lambda a: a)
    main = {k: sel(table[k]) for k in ("I", "J", "K", "rho", "Fscal")}
    deriv = {k: sel(table[k]) for k in INVARIANT_COLUMNS[5:]}
    return InvariantSet(derivatives=deriv, **main)
