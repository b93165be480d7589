"""One batched pass of the whole pipeline: F -> g -> spray -> frame -> connection.

Every quantity is a lazily computed jet over a batch of points of shape (n, 4).
Jet orders fall as derivatives are taken; starting from order 6 the deepest
quantities (S(Fscal), V2(rho), d of curvature forms) end at order 0.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from . import connection as conn
from . import frame as fr
from . import jets
from .jets import Jet
from .metric import MetricSpec, as_points, cartan_jets, check_strong_convexity, eval_F, metric_tensor_jets
from .spray import (component, directional, inverse_2x2, jacobi_jets, lie_bracket,
                    nonlinear_connection_jets, projector_jets, spray_field, spray_jets)

H, S, V, C = fr.H, fr.S, fr.V, fr.C


class FrameDecompositionError(ArithmeticError):
    """The bracket [H, V] failed to decompose as S + I H + J V."""


def val(j: Jet) -> np.ndarray:
    return j.coeffs[..., 0]


class Geometry:
    def __init__(self, spec: MetricSpec, points, order: int = jets.MAX_ORDER):
        pts, _ = as_points(points)
        self.spec = spec
        self.points = pts
        self.order = order
        self.n = len(pts)

    # metric -------------------------------------------------------------
    @cached_property
    def F(self) -> Jet:
        return eval_F(self.spec, self.points, self.order)

    @cached_property
    def F2(self) -> Jet:
        return self.F * self.F

    @cached_property
    def g(self) -> Jet:
        g = metric_tensor_jets(self.F2)
        check_strong_convexity(self.spec.name, val(g))
        return g

    @cached_property
    def _g_inverse(self):
        return inverse_2x2(self.g)

    @property
    def g_inv(self) -> Jet:
        return self._g_inverse[0]

    @property
    def det_g(self) -> Jet:
        return self._g_inverse[1]

    @cached_property
    def y(self) -> Jet:
        _, _, y1, y2 = jets.variables(self.points, self.order)
        return jets.stack([y1, y2])

    @cached_property
    def cartan(self) -> Jet:
        return cartan_jets(self.F2)

    # spray --------------------------------------------------------------
    @cached_property
    def G(self) -> Jet:
        return spray_jets(self.F2, self.g_inv, self.y)

    @cached_property
    def N(self) -> Jet:
        return nonlinear_connection_jets(self.G)

    @cached_property
    def S_field(self) -> Jet:
        return spray_field(self.y, self.G)

    @cached_property
    def _projectors(self):
        return projector_jets(self.N)

    @property
    def h(self) -> Jet:
        return self._projectors[0]

    @property
    def v(self) -> Jet:
        return self._projectors[1]

    @property
    def theta(self) -> Jet:
        return self._projectors[2]

    @cached_property
    def R(self) -> Jet:
        return jacobi_jets(self.G, self.N, self.S_field)

    @cached_property
    def rho(self) -> Jet:
        return component(self.R, (0, 0)) + component(self.R, (1, 1))

    @cached_property
    def K(self) -> Jet:
        return self.rho / self.F2.truncate(self.rho.order)

    # frame --------------------------------------------------------------
    @cached_property
    def m(self) -> Jet:
        return fr.unit_normal_jets(self.F, self.F2, self.det_g)

    @cached_property
    def frame(self) -> Jet:
        f = fr.frame_jets(self.F, self.y, self.G, self.N, self.m)
        fr.check_frame_conditioning(val(f))
        return f

    @cached_property
    def coframe(self) -> Jet:
        return fr.coframe_jets(self.frame)

    def field(self, k: int) -> Jet:
        return self.frame[:, k]

    def d(self, k: int, f: Jet) -> Jet:
        """Frame derivative X_k(f) of a per-point scalar jet."""
        return directional(self.field(k), f)

    @cached_property
    def brackets(self) -> Jet:
        return fr.all_brackets(self.frame)

    @cached_property
    def c(self) -> Jet:
        """Structure coefficients c[n, a, b, e] = eta^e([X_a, X_b])."""
        return fr.in_frame(self.coframe, self.brackets)

    # invariants ---------------------------------------------------------
    @cached_property
    def I(self) -> Jet:
        """Main scalar F C_ijk m^i m^j m^k."""
        Cm = self.cartan
        m = self.m.truncate(Cm.order)
        Cm, m = jets.align(Cm, m)
        t = (Cm * m.expand(-2).expand(-2)).sum(-1)
        t = (t * m.expand(-2)).sum(-1)
        t = (t * m).sum(-1)
        return self.F.truncate(t.order) * t

    @property
    def I_bracket(self) -> Jet:
        return self.c[:, H, V, H]

    @property
    def J_bracket(self) -> Jet:
        return self.c[:, H, V, V]

    @cached_property
    def J(self) -> Jet:
        return self.d(S, self.I)

    @cached_property
    def HI(self) -> Jet:
        return self.d(H, self.I)

    @cached_property
    def VI(self) -> Jet:
        return self.d(V, self.I)

    @cached_property
    def Fscal(self) -> Jet:
        a, b = jets.align(self.HI, self.d(V, self.J))
        return a + b

    @cached_property
    def Vrho(self) -> Jet:
        return self.d(V, self.rho)

    def invariant_table(self) -> dict:
        """Values at the batch points, keyed like ``frame.INVARIANT_COLUMNS``."""
        d = self.d
        return {
            "I": val(self.I), "J": val(self.J), "K": val(self.K), "rho": val(self.rho),
            "Fscal": val(self.Fscal),
            "S(I)": val(self.J), "V(I)": val(self.VI), "H(I)": val(self.HI),
            "S(J)": val(d(S, self.J)), "V(J)": val(d(V, self.J)), "H(J)": val(d(H, self.J)),
            "S(rho)": val(d(S, self.rho)), "V(rho)": val(self.Vrho), "H(rho)": val(d(H, self.rho)),
            "V2(rho)": val(d(V, self.Vrho)), "S(Fscal)": val(d(S, self.Fscal)),
        }

    def check_bracket_decomposition(self, tol: float = 1e-7, tol_I: float = 1e-6):
        c = val(self.c)
        s_coef, c_coef = c[:, H, V, S], c[:, H, V, C]
        if np.any(np.abs(s_coef - 1.0) > tol) or np.any(np.abs(c_coef) > tol):
            raise FrameDecompositionError(
                "[H, V] does not decompose as S + I H + J V "
                f"(S coefficient off by {np.max(np.abs(s_coef - 1)):.3g}, "
                f"C coefficient {np.max(np.abs(c_coef)):.3g})"
            )
        I_b, I_c = c[:, H, V, H], val(self.I)
        if np.any(np.abs(I_b - I_c) > tol_I * (1 + np.abs(I_c))):
            raise FrameDecompositionError(
                f"bracket and Cartan-tensor main scalars disagree by {np.max(np.abs(I_b - I_c)):.3g}"
            )

    def homogeneity_residuals(self) -> dict:
        Cf = self.field(C)

        def diff(a, b):
            a, b = jets.align(a, b)
            return np.abs(val(a - b))

        return {
            "F": diff(directional(Cf, self.F), self.F),
            "K": np.abs(val(directional(Cf, self.K))),
            "I": np.abs(val(directional(Cf, self.I))),
            "J": diff(directional(Cf, self.J), self.J),
        }

    # connection and curvature -------------------------------------------
    @cached_property
    def D(self) -> Jet:
        """D_{X_a} X_b in coordinates, shape (n, 4, 4, 4)."""
        return conn.connection_table(self.frame, self.h, self.v, self.theta)

    @cached_property
    def D_frame(self) -> Jet:
        """Frame coefficients eta^e(D_{X_a} X_b), shape (n, a, b, e)."""
        return fr.in_frame(self.coframe, self.D)

    @cached_property
    def curvature(self) -> Jet:
        """C(X_a, X_b) X_c in coordinates, shape (n, 4, 4, 4, 4)."""
        return conn.curvature_tensor(self.frame, self.brackets, self.D, self.h, self.v, self.theta)

    @cached_property
    def curvature_frame(self) -> Jet:
        """eta^e(C(X_a, X_b) X_c), shape (n, a, b, c, e)."""
        return fr.in_frame(self.coframe, self.curvature)

    @cached_property
    def torsion_frame(self) -> Jet:
        T = conn.torsion_tensor(self.D, self.brackets)
        return fr.in_frame(self.coframe, T)

    def Omega(self, a: int, b: int) -> Jet:
        """Curvature 2-form Omega^a_b(X, Y) = eta^a(C(X, Y) X_b) on frame pairs (n, 4, 4)."""
        return self.curvature_frame[:, :, :, b, a]

    def omega(self, a: int, b: int) -> Jet:
        """Connection 1-form omega^a_b(X) = eta^a(D_X X_b) on frame fields (n, 4)."""
        return self.D_frame[:, :, b, a]

    @cached_property
    def trace_hv(self) -> Jet:
        """sum_a eta^a(C(V, X_a) H)."""
        cf = self.curvature_frame
        return sum((cf[:, V, a, H, a] for a in range(1, 4)), cf[:, V, 0, H, 0])

    # forms ----------------------------------------------------------------
    def coframe_form(self, a: int) -> Jet:
        """eta^a on frame fields: constant delta, order of the structure coefficients."""
        e = np.zeros((self.n, 4))
        e[:, a] = 1.0
        return Jet.constant(e, self.c.order)

    def d1(self, alpha: Jet) -> Jet:
        return conn.d_one_form(self.frame, self.c, alpha)

    def d2(self, omega: Jet) -> Jet:
        return conn.d_two_form(self.frame, self.c, omega)

    def dJ(self, form: Jet, slots: int) -> Jet:
        return conn.d_J(self.frame, self.c, form, slots)

    def lie_S(self, form: Jet, slots: int) -> Jet:
        return conn.lie_derivative_S(self.frame, self.c, form, slots)

    @cached_property
    def alpha(self) -> Jet:
        """alpha = J eta^1 - I eta^3 on frame fields."""
        I, J = jets.align(self.I, self.J)
        zero = Jet.constant(np.zeros(self.n), I.order)
        return jets.stack([J, zero, -I, zero])

    def lie_bracket(self, a: int, b: int) -> Jet:
        return lie_bracket(self.field(a), self.field(b))
