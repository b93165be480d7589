"""Independent reference values, computed from DSL text by high-precision finite differences."""
import mpmath as mp
import numpy as np

from conftest import fd_partial, mp_scalar


def isothermal_gauss_curvature(lam_text, x):
    """K = -(lap lam) exp(-2 lam) for F = exp(lam) |y|."""
    lam = mp_scalar(lam_text)
    p = [x[0], x[1], 1.0, 0.0]
    lap = fd_partial(lam, p, (2, 0, 0, 0)) + fd_partial(lam, p, (0, 2, 0, 0))
    return -lap * float(mp.exp(-2 * lam(*[mp.mpf(v) for v in p])))


def isothermal_spray(lam_text, p):
    """G^i = 1/2 Gamma^i_jk y^j y^k for g = exp(2 lam) delta."""
    lam = mp_scalar(lam_text)
    grad = np.array([fd_partial(lam, p, (1, 0, 0, 0)), fd_partial(lam, p, (0, 1, 0, 0))])
    y = np.asarray(p[2:], dtype=float)
    return y * (grad @ y) - 0.5 * (y @ y) * grad
