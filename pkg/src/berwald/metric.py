"""Finsler functions: the builtin catalog, DSL-defined metrics, metric files,
and the fundamental and Cartan tensors."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType

import numpy as np

from . import dsl, jets
from .jets import Jet, TangentPoint


class MetricError(ValueError):
    """A metric cannot be evaluated at a point (exit code 3 at the CLI)."""


class OutsideDomainError(MetricError):
    pass


class InvalidFinslerFunctionError(MetricError):
    pass


class DegenerateMetricError(MetricError):
    pass


class MetricFileError(ValueError):
    """Malformed metric definition file (a usage error, exit code 2)."""

    def __init__(self, message, line=None, column=None):
        self.line, self.column = line, column
        where = "" if line is None else f" (line {line}" + ("" if column is None else f", column {column}") + ")"
        super().__init__(message + where)


@dataclass(frozen=True)
class Domain:
    """Chart box for x, optionally intersected with the open disk |x| < radius."""

    box: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)
    disk: float | None = None

    def __post_init__(self):
        box = tuple(float(v) for v in self.box)
        if len(box) != 4 or box[0] >= box[1] or box[2] >= box[3]:
            raise ValueError(f"invalid box {self.box!r}")
        object.__setattr__(self, "box", box)
        if self.disk is not None:
            if self.disk <= 0:
                raise ValueError("disk radius must be positive")
            object.__setattr__(self, "disk", float(self.disk))

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        x1, x2 = pts[..., 0], pts[..., 1]
        ok = (x1 >= self.box[0]) & (x1 <= self.box[1]) & (x2 >= self.box[2]) & (x2 <= self.box[3])
        if self.disk is not None:
            ok &= np.hypot(x1, x2) < self.disk
        if pts.shape[-1] == 4:
            ok &= np.hypot(pts[..., 2], pts[..., 3]) > 0
        return ok

    def describe(self) -> str:
        text = "box({:g},{:g},{:g},{:g})".format(*self.box)
        if self.disk is not None:
            text += f" disk({self.disk:g})"
        return text

    def to_dict(self):
        return {"box": list(self.box), "disk": self.disk}


@dataclass(frozen=True)
class MetricSpec:
    """A Finsler function F(x, y) given by a DSL tree, its parameters and chart domain."""

    name: str
    tree: dsl.Node
    params: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    domain: Domain = Domain()
    family: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        unknown = dsl.identifiers(self.tree) - set(dsl.COORDINATES) - set(self.params)
        if unknown:
            raise dsl.UnknownIdentifierError(f"unknown identifiers {sorted(unknown)}")

    def __hash__(self):
        return hash((self.name, self.tree, tuple(sorted(self.params.items())), self.domain))

    @property
    def text(self) -> str:
        return dsl.to_text(self.tree)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "family": self.family,
            "F": self.text,
            "params": dict(sorted(self.params.items())),
            "domain": self.domain.to_dict(),
        }

    def evaluate(self, points, functions=None):
        """F at plain numeric points (floats, arrays or mpmath numbers)."""
        pts = points
        env = {name: pts[..., k] if isinstance(pts, np.ndarray) else pts[k]
               for k, name in enumerate(dsl.COORDINATES)}
        env.update(self.params)
        if functions is None and isinstance(pts, np.ndarray):
            functions = _NUMPY_LIB
        return dsl.evaluate(self.tree, env, functions)


_NUMPY_LIB = {"sqrt": np.sqrt, "exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos}


def parse_metric(text: str, name: str = "custom", params=None, domain: Domain | None = None) -> MetricSpec:
    """Build a MetricSpec from an F expression in the DSL."""
    params = dict(params or {})
    tree = dsl.parse_expression(text, params)
    return MetricSpec(name, tree, params, domain or Domain())


# catalog -----------------------------------------------------------------

_EUCLID = "sqrt(y1^2 + y2^2)"
PLANE = Domain((-2.0, 2.0, -2.0, 2.0))


def euclidean() -> MetricSpec:
    spec = parse_metric(_EUCLID, "euclidean")
    return MetricSpec(spec.name, spec.tree, {}, PLANE, "euclidean")


def isothermal(lam: str, name: str, domain: Domain, params=None) -> MetricSpec:
    """Riemannian metric F = exp(lam(x)) |y| for a DSL subexpression lam."""
    lam_tree = dsl.parse_expression(lam, params or {})
    if dsl.identifiers(lam_tree) & {"y1", "y2"}:
        raise ValueError("the conformal factor must depend on x only")
    tree = dsl.BinOp("*", dsl.Call("exp", lam_tree), dsl.parse_expression(_EUCLID))
    return MetricSpec(name, tree, params or {}, domain, "riemannian-isothermal")


SPHERE_LAMBDA = "log(2/(1 + x1^2 + x2^2))"
HYPERBOLIC_LAMBDA = "log(2/(1 - x1^2 - x2^2))"


def sphere() -> MetricSpec:
    return isothermal(SPHERE_LAMBDA, "sphere", PLANE)


def hyperbolic() -> MetricSpec:
    return isothermal(HYPERBOLIC_LAMBDA, "hyperbolic", Domain((-0.7, 0.7, -0.7, 0.7), 0.7))


def randers_flat(b: float = 0.5) -> MetricSpec:
    b = float(b)
    if not abs(b) < 1:
        raise ValueError("randers-flat needs |b| < 1")
    tree = dsl.parse_expression(_EUCLID + " + b*y1", {"b": b})
    return MetricSpec("randers-flat", tree, {"b": b}, PLANE, "randers-flat")


FUNK_TEXT = (
    "(sqrt((1 - x1^2 - x2^2)*(y1^2 + y2^2) + (x1*y1 + x2*y2)^2) + x1*y1 + x2*y2)"
    " / (1 - x1^2 - x2^2)"
)


def funk() -> MetricSpec:
    spec = parse_metric(FUNK_TEXT, "funk")
    return MetricSpec("funk", spec.tree, {}, Domain((-0.7, 0.7, -0.7, 0.7), 0.7), "funk")


CATALOG = {
    "euclidean": (euclidean, {}),
    "sphere": (sphere, {}),
    "hyperbolic": (hyperbolic, {}),
    "randers-flat": (randers_flat, {"b": 0.5}),
    "funk": (funk, {}),
}


def catalog_entry(name: str, **params) -> MetricSpec:
    if name not in CATALOG:
        raise KeyError(f"unknown catalog metric {name!r}; choose from {sorted(CATALOG)}")
    factory, defaults = CATALOG[name]
    unknown = set(params) - set(defaults)
    if unknown:
        raise KeyError(f"metric {name!r} has no parameters {sorted(unknown)}")
    return factory(**{**defaults, **params})


def catalog_listing() -> list[dict]:
    rows = []
    for name, (factory, defaults) in CATALOG.items():
        spec = factory(**defaults)
        rows.append({
            "name": name,
            "family": spec.family,
            "params": {k: {"default": v} for k, v in defaults.items()},
            "F": spec.text,
            "domain": spec.domain.describe(),
        })
    return rows


# metric definition files -------------------------------------------------

_BOX = re.compile(r"box\(\s*([^,()]+),([^,()]+),([^,()]+),([^,()]+)\)")
_DISK = re.compile(r"disk\(\s*([^()]+)\)")


def _parse_domain(value, line):
    v = value.strip()
    box, disk = (-1.0, 1.0, -1.0, 1.0), None
    rest = v
    try:
        m = _BOX.search(v)
        if m:
            box = tuple(float(g) for g in m.groups())
            rest = rest.replace(m.group(), "")
        m = _DISK.search(v)
        if m:
            disk = float(m.group(1))
            rest = rest.replace(m.group(), "")
        if rest.strip() or (not _BOX.search(v) and not _DISK.search(v)):
            raise ValueError(v)
        return Domain(box, disk)
    except ValueError as exc:
        raise MetricFileError(f"invalid domain {v!r}", line) from exc


def parse_metric_file(text: str) -> MetricSpec:
    """Parse ``key = value`` lines: name, F, domain, and numeric parameters."""
    name, expr, domain, params = "custom", None, None, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise MetricFileError("expected 'key = value'", lineno, 1)
        key, value = line.split("=", 1)
        key = key.strip()
        vcol = line.index("=") + 2 + (len(value) - len(value.lstrip()))
        if key == "name":
            name = value.strip()
        elif key == "F":
            expr = (value.strip(), lineno, vcol)
        elif key == "domain":
            domain = _parse_domain(value, lineno)
        elif re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", key):
            if key in dsl.COORDINATES or key in dsl.FUNCTION_NAMES:
                raise MetricFileError(f"reserved name {key!r}", lineno, 1)
            try:
                params[key] = float(value)
            except ValueError:
                raise MetricFileError(f"parameter {key!r} must be a number", lineno, vcol) from None
        else:
            raise MetricFileError(f"invalid key {key!r}", lineno, 1)
    if expr is None:
        raise MetricFileError("metric file has no 'F = ...' line")
    text_, lineno, col = expr
    tree = dsl.parse_expression(text_, params, line=lineno, column=col)
    return MetricSpec(name, tree, params, domain or Domain())


def load_metric_file(path) -> MetricSpec:
    return parse_metric_file(Path(path).read_text(encoding="utf-8"))


# evaluation ----------------------------------------------------------------

def as_points(p) -> tuple[np.ndarray, bool]:
    """Normalize a TangentPoint, a list of them, or an (n, 4) array to (n, 4)."""
    if isinstance(p, TangentPoint):
        return p.as_array()[None, :], True
    if isinstance(p, (list, tuple)) and p and isinstance(p[0], TangentPoint):
        return np.stack([q.as_array() for q in p]), False
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        arr, single = arr[None, :], True
    else:
        single = False
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError(f"points must have shape (n, 4), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("points must be finite")
    return arr, single


def check_domain(spec: MetricSpec, points: np.ndarray):
    inside = spec.domain.contains(points)
    if not inside.all():
        bad = points[np.flatnonzero(~inside)[0]]
        raise OutsideDomainError(
            f"point x={tuple(bad[:2])}, y={tuple(bad[2:])} is outside the domain "
            f"{spec.domain.describe()} of metric {spec.name!r} (or has y = 0)"
        )


def eval_F(spec: MetricSpec, p, order: int) -> Jet:
    """Jet of F at a batch of points; F must be positive."""
    pts, _ = as_points(p)
    check_domain(spec, pts)
    env = dict(zip(dsl.COORDINATES, jets.variables(pts, order)))
    env.update(spec.params)
    try:
        F = dsl.evaluate(spec.tree, env, jets.FUNCTIONS)
    except jets.JetError as exc:
        raise InvalidFinslerFunctionError(f"metric {spec.name!r} cannot be evaluated: {exc}") from exc
    if not isinstance(F, Jet):
        F = Jet.constant(np.full(len(pts), float(F)), order)
    if np.any(np.asarray(F.value) <= 0):
        raise InvalidFinslerFunctionError(
            f"F is not positive at some sample point of metric {spec.name!r}"
        )
    return F


def eval_F2(spec: MetricSpec, p, order: int) -> Jet:
    """Jet of F^2; batched over points, squeezed for a single TangentPoint."""
    pts, single = as_points(p)
    F = eval_F(spec, pts, order)
    F2 = F * F
    return F2[0] if single else F2


@dataclass(frozen=True)
class FundamentalTensor:
    g: np.ndarray
    g_inv: np.ndarray
    det: np.ndarray | float


@dataclass(frozen=True)
class CartanTensor:
    C: np.ndarray


def metric_tensor_jets(F2: Jet) -> Jet:
    """g_ij = 1/2 d^2 F^2 / dy^i dy^j as a (..., 2, 2) jet, order drops by two."""
    dy = [F2.partial(2), F2.partial(3)]
    rows = [jets.stack([0.5 * dy[i].partial(2 + j) for j in range(2)]) for i in range(2)]
    return jets.stack(rows, axis=-2)


def check_strong_convexity(spec_name: str, g_values: np.ndarray):
    det = g_values[..., 0, 0] * g_values[..., 1, 1] - g_values[..., 0, 1] ** 2
    scale = np.max(np.abs(g_values), axis=(-2, -1)) ** 2
    if np.any(np.abs(det) < 1e-12 * scale):
        raise DegenerateMetricError(f"degenerate metric at point ({spec_name!r}: det g ~ 0)")
    if np.any(det <= 0) or np.any(g_values[..., 0, 0] <= 0):
        raise DegenerateMetricError(
            f"degenerate metric at point ({spec_name!r}: g is not positive definite)"
        )
    return det


def fundamental_tensor(spec: MetricSpec, p) -> FundamentalTensor:
    pts, single = as_points(p)
    g = metric_tensor_jets(eval_F2(spec, pts, 2)).coeffs[..., 0]
    det = check_strong_convexity(spec.name, g)
    g_inv = np.linalg.inv(g)
    if single:
        return FundamentalTensor(g[0], g_inv[0], float(det[0]))
    return FundamentalTensor(g, g_inv, det)


def cartan_jets(F2: Jet) -> Jet:
    """C_ijk = 1/4 d^3 F^2 / dy^i dy^j dy^k as a (..., 2, 2, 2) jet."""
    blocks = []
    for i in range(2):
        di = F2.partial(2 + i)
        rows = []
        for j in range(2):
            dij = di.partial(2 + j)
            rows.append(jets.stack([0.25 * dij.partial(2 + k) for k in range(2)]))
        blocks.append(jets.stack(rows, axis=-2))
    return jets.stack(blocks, axis=-3)


def cartan_tensor(spec: MetricSpec, p) -> CartanTensor:
    pts, single = as_points(p)
    C = cartan_jets(eval_F2(spec, pts, 3)).coeffs[..., 0]
    return CartanTensor(C[0] if single else C)


def homogeneity_check(spec: MetricSpec, p) -> dict:
    """Residuals |C(F) - F|, |C(K)|, |C(I)|, |C(J) - J| at the given point(s)."""
    from .geometry import Geometry

    pts, single = as_points(p)
    geo = Geometry(spec, pts)
    res = geo.homogeneity_residuals()
    return {k: float(v[0]) if single else v for k, v in res.items()}
