"""Geodesic flow x' = y, y' = -2 G(x, y) by fixed-step RK4, with first-integral monitors."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .geometry import Geometry, S, val
from .metric import MetricError, MetricSpec, as_points

MONITORS = ("F", "K", "J", "Fscal")
CSV_COLUMNS = ("t", "x1", "x2", "y1", "y2", "F", "K", "J", "Fscal")
MAX_STEPS = 10_000_000


class FlowError(ValueError):
    pass


def spray_rhs(spec: MetricSpec, state: np.ndarray) -> np.ndarray:
    """(y, -2 G) at states of shape (m, 4); G needs only second derivatives of F^2."""
    G = val(Geometry(spec, state, order=2).G)
    return np.concatenate([state[:, 2:], -2.0 * G], axis=1)


def rk4_step(spec, state, dt):
    k1 = spray_rhs(spec, state)
    k2 = spray_rhs(spec, state + 0.5 * dt * k1)
    k3 = spray_rhs(spec, state + 0.5 * dt * k2)
    k4 = spray_rhs(spec, state + dt * k3)
    return state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass
class FlowTrajectory:
    metric: str
    dt: float
    t: np.ndarray
    states: np.ndarray
    exited: bool = False
    order: int = 4
    monitors: dict = field(default_factory=dict)
    derivatives: dict = field(default_factory=dict)
    record_every: int = 1

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1]

    def to_rows(self):
        cols = [self.t, *self.states.T] + [self.monitors.get(k, np.full(len(self.t), np.nan))
                                             for k in MONITORS]
        return np.column_stack(cols)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.to_rows():
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def integrate_geodesic(spec: MetricSpec, p0, t_end: float, dt: float, record_every: int = 1,
                       monitors: bool = True) -> FlowTrajectory:
    """Fixed-step RK4; stops with ``exited=True`` before the first step leaving the domain."""
    pts, _ = as_points(p0)
    if len(pts) != 1:
        raise FlowError("integrate_geodesic takes a single initial point")
    if not (dt > 0 and np.isfinite(dt)):
        raise FlowError(f"step size must be positive, got {dt!r}")
    if not (t_end >= 0 and np.isfinite(t_end)):
        raise FlowError(f"t_end must be non-negative, got {t_end!r}")
    steps = int(round(t_end / dt))
    if steps > MAX_STEPS or (t_end > 0 and steps == 0) or abs(steps * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise FlowError(f"step size {dt!r} does not divide t_end={t_end!r} into at most {MAX_STEPS} steps")
    if record_every < 1:
        raise FlowError("record_every must be at least 1")
    state = pts.copy()
    spray_rhs(spec, state)  # validates p0 (domain, positivity, convexity)
    ts, xs = [0.0], [state[0].copy()]
    exited = False
    for k in range(1, steps + 1):
        try:
            new = rk4_step(spec, state, dt)
        except MetricError:
            exited = True
            break
        if not spec.domain.contains(new)[0]:
            exited = True
            break
        state = new
        if k % record_every == 0 or k == steps:
            ts.append(k * dt)
            xs.append(state[0].copy())
    traj = FlowTrajectory(spec.name, dt, np.array(ts), np.array(xs), exited, record_every=record_every)
    if monitors:
        traj.monitors, traj.derivatives = evaluate_monitors(spec, traj.states)
    else:
        traj.monitors = {"F": np.asarray(spec.evaluate(traj.states), dtype=float)}
    return traj


def evaluate_monitors(spec: MetricSpec, states, chunk: int = 50):
    """F, K, J, Fscal and their spray derivatives by the full pipeline."""
    mon = {k: [] for k in MONITORS}
    der = {k: [] for k in MONITORS}
    for start in range(0, len(states), chunk):
        g = Geometry(spec, states[start:start + chunk])
        for name, f in (("F", g.F), ("K", g.K), ("J", g.J), ("Fscal", g.Fscal)):
            mon[name].append(val(f))
            der[name].append(val(g.d(S, f)))
    return ({k: np.concatenate(v) for k, v in mon.items()},
            {k: np.concatenate(v) for k, v in der.items()})


def first_integral_report(traj: FlowTrajectory, scalar: str, spec: MetricSpec | None = None) -> dict:
    """Drift of a monitored scalar, its chain-rule consistency and a truncation estimate."""
    if scalar not in MONITORS:
        raise KeyError(f"unknown scalar {scalar!r}; expected one of {', '.join(MONITORS)}")
    if len(traj.t) < 2:
        raise FlowError("trajectory needs at least two samples")
    f = traj.monitors[scalar]
    drift = np.abs(f - f[0])
    out = {
        "scalar": scalar,
        "max_drift": float(drift.max()),
        "relative_drift": float(drift.max() / max(abs(f[0]), 1e-300)),
        "samples": int(len(f)),
        "exited": traj.exited,
    }
    if scalar in traj.derivatives and len(f) >= 3:
        h = traj.t[1] - traj.t[0]
        uniform = np.allclose(np.diff(traj.t), h)
        if uniform:
            ddt = (f[2:] - f[:-2]) / (2 * h)
            Sf = traj.derivatives[scalar][1:-1]
            scale = 1.0 + np.maximum(np.abs(ddt), np.abs(Sf))
            out["chain_rule_residual"] = float(np.max(np.abs(ddt - Sf) / scale))
    if spec is not None:
        coarse = integrate_geodesic(spec, traj.states[0], traj.t[-1], 2 * traj.dt,
                                    record_every=1, monitors=False)
        if not coarse.exited and not traj.exited:
            Fc = coarse.monitors["F"][-1]
            Ff = np.asarray(spec.evaluate(traj.states[-1:]), dtype=float)[0]
            # Richardson: the fine-step error is about |coarse - fine| / 15
            est = abs(Fc - Ff) / 15.0 if scalar == "F" else None
            if est is not None:
                out["truncation_estimate"] = float(est)
                out["drift_to_truncation"] = float(drift[-1] / est) if est > 0 else None
    return out


def convergence_ratio(spec: MetricSpec, p0, t_end: float, dt: float, refine: int = 16) -> dict:
    """Endpoint errors at dt and dt/2 against a dt/refine reference; 4th order gives ~16."""
    end = lambda h: integrate_geodesic(spec, p0, t_end, h, record_every=10 ** 9, monitors=False)
    ref = end(dt / refine)
    a, b = end(dt), end(dt / 2)
    if ref.exited or a.exited or b.exited:
        raise FlowError("trajectory leaves the domain; pick a shorter time or another start")
    ea = float(np.max(np.abs(a.endpoint - ref.endpoint)))
    eb = float(np.max(np.abs(b.endpoint - ref.endpoint)))
    return {"dt": dt, "error_dt": ea, "error_half_dt": eb, "ratio": ea / eb if eb > 0 else np.inf}
