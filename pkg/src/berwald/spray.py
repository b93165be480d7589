"""Geodesic spray, nonlinear connection, projectors and the Jacobi endomorphism.

Vector fields on the slit tangent bundle are jets of shape ``(..., 4)`` in the
coordinate basis (d/dx1, d/dx2, d/dy1, d/dy2); endomorphisms are ``(..., 4, 4)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .jets import Jet


def inverse_2x2(m: Jet) -> tuple[Jet, Jet]:
    """Inverse and determinant of a (..., 2, 2) jet matrix."""
    a, b, c, d = _entries(m)
    det = a * d - b * c
    inv = jets.stack([jets.stack([d, -b]), jets.stack([-c, a])], axis=-2)
    inv = inv * (1.0 / det).expand(-1).expand(-1)
    return inv, det


def _entries(m: Jet):
    c = m.coeffs
    return (Jet(c[..., 0, 0, :], m.order), Jet(c[..., 0, 1, :], m.order),
            Jet(c[..., 1, 0, :], m.order), Jet(c[..., 1, 1, :], m.order))


def component(v: Jet, i) -> Jet:
    """Select entry ``i`` (int or tuple) of the trailing batch axes."""
    i = i if isinstance(i, tuple) else (i,)
    return Jet(v.coeffs[(Ellipsis,) + i + (slice(None),)], v.order)


def matvec(m: Jet, v: Jet) -> Jet:
    m, v = jets.align(m, v)
    return (m * v.expand(-2)).sum(-1)


def matmul(a: Jet, b: Jet) -> Jet:
    a, b = jets.align(a, b)
    return (a.expand(-1) * b.expand(-3)).sum(-2)


def directional(X: Jet, f: Jet) -> Jet:
    """X(f) = sum_b X^b d_b f for a vector-field jet X and scalar jet f."""
    X, grad = jets.align(X, f.gradient())
    return (X * grad).sum(-1)


def lie_bracket(X: Jet, Y: Jet) -> Jet:
    """[X, Y]^a = X^b d_b Y^a - Y^b d_b X^a (broadcasting over batch axes)."""
    dY = Y.gradient()
    dX = X.gradient()
    X, Y, dX, dY = jets.align(X, Y, dX, dY)
    return (X.expand(-2) * dY).sum(-1) - (Y.expand(-2) * dX).sum(-1)


def almost_tangent(X: Jet) -> Jet:
    """Apply J = d/dy^i (x) dx^i: (a, b) -> (0, a)."""
    c = np.zeros_like(X.coeffs)
    c[..., 2:, :] = X.coeffs[..., :2, :]
    return Jet(c, X.order)


J_MATRIX = np.block([[np.zeros((2, 2)), np.zeros((2, 2))], [np.eye(2), np.zeros((2, 2))]])


def spray_jets(F2: Jet, g_inv: Jet, y: Jet) -> Jet:
    """G^i = 1/4 g^{il} (y^k d^2F^2/dy^l dx^k - dF^2/dx^l); order drops by two."""
    dx = [F2.partial(0), F2.partial(1)]
    dy = [F2.partial(2), F2.partial(3)]
    order = F2.order - 2
    yk = [component(y, k).truncate(order) for k in range(2)]
    w = []
    for l in range(2):
        mixed = sum((yk[k] * dy[l].partial(k) for k in range(2)), Jet.constant(np.zeros(F2.shape), order))
        w.append(mixed - dx[l].truncate(order))
    w = jets.stack(w)
    return 0.25 * matvec(g_inv, w)


def nonlinear_connection_jets(G: Jet) -> Jet:
    """N^i_j = dG^i/dy^j as a (..., 2, 2) jet."""
    rows = [jets.stack([component(G, i).partial(2 + j) for j in range(2)]) for i in range(2)]
    return jets.stack(rows, axis=-2)


def spray_field(y: Jet, G: Jet) -> Jet:
    y, G = jets.align(y, G)
    return Jet(np.concatenate([y.coeffs, -2.0 * G.coeffs], axis=-2), y.order)


def projector_jets(N: Jet) -> tuple[Jet, Jet, Jet]:
    """Horizontal projector h, vertical projector v and adjoint structure theta.

    h(a, b) = (a, -N a), v(a, b) = (0, b + N a), theta(a, b) = (w, -N w) with
    w = b + N a.
    """
    shape = N.shape[:-2]
    eye = np.broadcast_to(np.eye(2), shape + (2, 2))
    E = Jet.constant(eye, N.order)
    Z = Jet.constant(np.zeros(shape + (2, 2)), N.order)
    NN = matmul(N, N)
    h = _block(E, Z, -N, Z)
    v = _block(Z, Z, N, E)
    theta = _block(N, E, -NN, -N)
    return h, v, theta


def _block(a, b, c, d):
    top = np.concatenate([a.coeffs, b.coeffs], axis=-2)
    bottom = np.concatenate([c.coeffs, d.coeffs], axis=-2)
    return Jet(np.concatenate([top, bottom], axis=-3), a.order)


def jacobi_jets(G: Jet, N: Jet, S: Jet) -> Jet:
    """R^i_j = 2 dG^i/dx^j - S(N^i_j) - N^i_k N^k_j; order drops by two from G."""
    order = G.order - 2
    rows = []
    for i in range(2):
        row = []
        for j in range(2):
            term = 2.0 * component(G, i).partial(j).truncate(order)
            term = term - directional(S, component(N, (i, j))).truncate(order)
            term = term - sum(
                (component(N, (i, k)).truncate(order) * component(N, (k, j)).truncate(order)
                 for k in range(2)),
                Jet.constant(np.zeros(G.shape[:-1]), order),
            )
            row.append(term)
        rows.append(jets.stack(row))
    return jets.stack(rows, axis=-2)


@dataclass(frozen=True)
class SprayData:
    G: np.ndarray
    N: np.ndarray
    G_jet: Jet
    N_jet: Jet


@dataclass(frozen=True)
class JacobiData:
    Phi: np.ndarray
    rho: np.ndarray | float
    K: np.ndarray | float
    beta: np.ndarray


def _geometry(spec, p):
    from .geometry import Geometry
    from .metric import as_points

    pts, single = as_points(p)
    return Geometry(spec, pts), single


def _squeeze(a, single):
    a = np.asarray(a)
    return (float(a[0]) if a.ndim == 1 else a[0]) if single else a


def spray_coefficients(spec, p) -> SprayData:
    geo, single = _geometry(spec, p)
    G, N = geo.G, geo.N
    if single:
        return SprayData(G.coeffs[0, :, 0], N.coeffs[0, ..., 0], G[0], N[0])
    return SprayData(G.coeffs[..., 0], N.coeffs[..., 0], G, N)


def projectors(spec, p) -> tuple[np.ndarray, np.ndarray]:
    geo, single = _geometry(spec, p)
    h, v = geo.h.coeffs[..., 0], geo.v.coeffs[..., 0]
    return (h[0], v[0]) if single else (h, v)


def jacobi_endomorphism(spec, p) -> JacobiData:
    """Jacobi endomorphism components, Ricci scalar, flag curvature and beta."""
    geo, single = _geometry(spec, p)
    Phi = geo.R.coeffs[..., 0]
    rho = geo.rho.coeffs[..., 0]
    K = geo.K.coeffs[..., 0]
    # beta_j = K F dF/dy^j
    dF = np.stack([geo.F.partial(2).coeffs[..., 0], geo.F.partial(3).coeffs[..., 0]], axis=-1)
    beta = (K * geo.F.coeffs[..., 0])[..., None] * dF
    return JacobiData(_squeeze(Phi, single), _squeeze(rho, single), _squeeze(K, single),
                      _squeeze(beta, single))
