"""Command-line front end.

Exit codes: 0 success, 1 identity violation, 2 usage or config error,
3 metric evaluation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from . import classify as cls
from . import dsl
from . import flow as fl
from . import identities as ident
from .frame import INVARIANT_COLUMNS
from .geometry import Geometry
from .jets import JetError
from .metric import (MetricError, MetricFileError, MetricSpec, catalog_entry, catalog_listing,
                     load_metric_file)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_METRIC = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    metric: str | None = None
    metric_file: str | None = None
    params: dict = field(default_factory=dict)
    points: int = 100
    seed: int = 0
    rmin: float = 0.5
    rmax: float = 2.0
    tolerances: dict = field(default_factory=dict)
    threshold: float = cls.DEFAULT_THRESHOLD
    output: str | None = None
    format: str = "json"
    x: list | None = None
    y: list | None = None
    t: float = 1.0
    dt: float = 1e-3
    record_every: int = 1

    def validate(self):
        if self.command != "catalog":
            if (self.metric is None) == (self.metric_file is None):
                raise ConfigError("give exactly one of --metric or --metric-file")
        if self.points < 1:
            raise ConfigError("--points must be at least 1")
        if not 0 < self.rmin <= self.rmax:
            raise ConfigError("fiber radius range needs 0 < rmin <= rmax")
        if self.format not in ("json", "csv"):
            raise ConfigError("--format must be json or csv")
        if not self.threshold > 0:
            raise ConfigError("--threshold must be positive")
        try:
            ident.tolerance_table(self.tolerances)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        if any(not (v > 0) for v in self.tolerances.values()):
            raise ConfigError("tolerances must be positive")
        if self.command == "flow":
            for key in ("x", "y"):
                v = getattr(self, key)
                if v is None or len(v) != 2:
                    raise ConfigError(f"flow needs --{key} a,b")
            if not (self.dt > 0 and self.t >= 0):
                raise ConfigError("flow needs --dt > 0 and --t >= 0")
            if self.record_every < 1:
                raise ConfigError("--record-every must be at least 1")
        return self

    def embedded(self) -> dict:
        """The config as recorded in reports (the output location is not part of a run)."""
        d = asdict(self)
        d.pop("output")
        return d


CONFIG_KEYS = {f.name for f in fields(RunConfig)} - {"command"}


def _pair(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return [a, b]


def _kv(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k.strip(), float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"value of {k!r} must be a number") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="berwald", description="Berwald-frame invariants and identity checks for Finsler surfaces")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, sampling=True):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--metric", help="catalog metric name")
        g.add_argument("--metric-file", help="metric definition file")
        sp.add_argument("--param", action="append", type=_kv, default=None, metavar="K=V",
                        help="metric parameter (repeatable)")
        sp.add_argument("--config", help="JSON file with run options")
        sp.add_argument("--output", "-o", help="report path")
        sp.add_argument("--format", choices=("json", "csv"), default=None)
        if sampling:
            sp.add_argument("--points", type=int, default=None)
            sp.add_argument("--seed", type=int, default=None)
            sp.add_argument("--rmin", type=float, default=None, help="smallest fiber radius |y|")
            sp.add_argument("--rmax", type=float, default=None, help="largest fiber radius |y|")

    c = sub.add_parser("catalog", help="list builtin metrics")
    c.add_argument("--output", "-o")
    c.add_argument("--config")
    c.add_argument("--format", choices=("json", "csv"), default=None)

    common(sub.add_parser("invariants", help="invariants and their frame derivatives at sample points"))
    v = sub.add_parser("verify", help="run the identity suite")
    common(v)
    v.add_argument("--tol", action="append", type=_kv, default=None, metavar="TIER_OR_ID=VALUE")
    k = sub.add_parser("classify", help="curvature-condition flags and theorem probes")
    common(k)
    k.add_argument("--threshold", type=float, default=None)
    f = sub.add_parser("flow", help="integrate a geodesic and monitor first integrals")
    common(f, sampling=False)
    f.add_argument("--x", type=_pair, default=None, metavar="A,B")
    f.add_argument("--y", type=_pair, default=None, metavar="A,B")
    f.add_argument("--t", type=float, default=None)
    f.add_argument("--dt", type=float, default=None)
    f.add_argument("--record-every", type=int, default=None)
    return p


def make_config(args) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(raw) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        values.update(raw)
    for key in ("metric", "metric_file", "points", "seed", "rmin", "rmax", "threshold", "output",
                "format", "x", "y", "t", "dt", "record_every"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "param", None):
        values["params"] = {**values.get("params", {}), **dict(args.param)}
    if getattr(args, "tol", None):
        values["tolerances"] = {**values.get("tolerances", {}), **dict(args.tol)}
    if args.command == "flow" and "format" not in values:
        values["format"] = "csv"
    try:
        cfg = RunConfig(command=args.command, **values)
        cfg.points, cfg.seed, cfg.record_every = int(cfg.points), int(cfg.seed), int(cfg.record_every)
        cfg.rmin, cfg.rmax, cfg.t, cfg.dt = float(cfg.rmin), float(cfg.rmax), float(cfg.t), float(cfg.dt)
        cfg.threshold = float(cfg.threshold)
        cfg.params = {str(k): float(v) for k, v in dict(cfg.params).items()}
        cfg.tolerances = {str(k): float(v) for k, v in dict(cfg.tolerances).items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from None
    return cfg.validate()


def load_spec(cfg: RunConfig) -> MetricSpec:
    if cfg.metric is not None:
        try:
            return catalog_entry(cfg.metric, **cfg.params)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    try:
        spec = load_metric_file(cfg.metric_file)
    except OSError as exc:
        raise ConfigError(f"cannot read metric file: {exc}") from None
    if cfg.params:
        unknown = set(cfg.params) - set(spec.params)
        if unknown:
            raise ConfigError(f"metric file declares no parameter(s) {sorted(unknown)}")
        spec = MetricSpec(spec.name, spec.tree, {**spec.params, **cfg.params}, spec.domain, spec.family)
    return spec


def _header(cfg: RunConfig, spec: MetricSpec | None) -> dict:
    return {"tool": "berwald", "version": __version__, "config": cfg.embedded(),
            "metric_spec": spec.describe() if spec is not None else None}


def _write(cfg: RunConfig, text: str, default_name: str) -> str:
    path = Path(cfg.output or default_name)
    path.write_text(text, encoding="utf-8")
    return str(path)


def _dump_json(doc) -> str:
    return ident.to_json(doc) + "\n"


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _sample(cfg, spec):
    return ident.sample_points(spec, cfg.points, cfg.seed, cfg.rmin, cfg.rmax)


# commands -------------------------------------------------------------------

def cmd_catalog(cfg: RunConfig, out) -> int:
    rows = catalog_listing()
    for r in rows:
        params = ", ".join(f"{k}={v['default']}" for k, v in r["params"].items()) or "-"
        print(f"{r['name']:<13} params: {params:<8} domain: {r['domain']:<24} F = {r['F']}", file=out)
    if cfg.output:
        if cfg.format == "csv":
            text = _csv_text([("name", "family", "params", "domain", "F")] + [
                (r["name"], r["family"], json.dumps(r["params"], sort_keys=True), r["domain"], r["F"])
                for r in rows])
        else:
            text = _dump_json({**_header(cfg, None), "catalog": rows})
        _write(cfg, text, "catalog.json")
    return EXIT_OK


def invariant_rows(spec: MetricSpec, pts: np.ndarray, chunk: int = ident.CHUNK):
    """Per-point invariant dicts (with a per-point error entry on failure)."""
    rows = []
    for start in range(0, len(pts), chunk):
        block = pts[start:start + chunk]
        try:
            tables = [(_checked_table(spec, block), range(len(block)))]
        except (MetricError, JetError, ArithmeticError):
            tables = []
            for k in range(len(block)):
                try:
                    tables.append((_checked_table(spec, block[k:k + 1]), [k]))
                except (MetricError, JetError, ArithmeticError) as exc:
                    tables.append((exc, [k]))
        for tab, idx in tables:
            for j, k in enumerate(idx):
                p = block[k]
                row = {"index": start + k, **{c: float(v) for c, v in zip(("x1", "x2", "y1", "y2"), p)}}
                if isinstance(tab, Exception):
                    row["error"] = f"{type(tab).__name__}: {tab}"
                else:
                    row.update({c: float(tab[c][j]) for c in INVARIANT_COLUMNS})
                rows.append(row)
    return rows


def _checked_table(spec, block):
    g = Geometry(spec, block)
    g.check_bracket_decomposition()
    return g.invariant_table()


def cmd_invariants(cfg: RunConfig, out) -> int:
    spec = load_spec(cfg)
    pts = _sample(cfg, spec)
    rows = invariant_rows(spec, pts)
    errors = [r for r in rows if "error" in r]
    cols = ("index", "x1", "x2", "y1", "y2") + INVARIANT_COLUMNS
    if cfg.format == "csv":
        text = _csv_text([cols + ("error",)] + [
            tuple(r.get(c, "") for c in cols) + (r.get("error", ""),) for r in rows])
    else:
        text = _dump_json({**_header(cfg, spec), "seed": cfg.seed, "columns": list(cols), "rows": rows})
    path = _write(cfg, text, f"invariants-{spec.name}.{cfg.format}")
    good = [r for r in rows if "error" not in r]
    print(f"metric {spec.name}: {len(rows)} points, {len(errors)} failed; report written to {path}", file=out)
    if good:
        for c in ("I", "J", "K", "rho", "Fscal"):
            v = np.array([r[c] for r in good])
            print(f"  {c:<6} min {v.min(): .6g}  max {v.max(): .6g}", file=out)
    if errors:
        print(f"error at point {errors[0]['index']}: {errors[0]['error']}", file=out)
        return EXIT_METRIC
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out) -> int:
    spec = load_spec(cfg)
    pts = _sample(cfg, spec)
    tols = ident.tolerance_table(cfg.tolerances)
    reports = ident.run_suite(spec, pts, tols)
    doc = ident.suite_report(spec, reports, seed=cfg.seed, tolerances=tols, extra=_header(cfg, spec))
    if cfg.format == "csv":
        text = _csv_text(ident.to_csv_rows(reports))
    else:
        text = _dump_json(doc)
    path = _write(cfg, text, f"verify-{spec.name}.{cfg.format}")
    s = doc["summary"]
    print(f"metric {spec.name}: {s['n_points']} points x {s['n_identities']} identities; "
          f"report written to {path}", file=out)
    errors = [r for r in reports if r.error]
    if errors:
        print(f"{len(errors)} point(s) could not be evaluated", file=out)
        seen = {}
        for r in errors:
            seen.setdefault(r.error.split(":", 1)[0], r)
        for r in seen.values():
            print(f"  point {r.index}: {r.error}", file=out)
        return EXIT_METRIC
    if s["failed"]:
        for k in s["failed"]:
            e = doc["identities"][k]
            print(f"  FAIL {k}: max residual {e['max_residual']:.3g} (relative {e['max_relative']:.3g}, "
                  f"tolerance {tols[k]:.0e}) worst at point {e['worst_point']}", file=out)
        return EXIT_VIOLATION
    print("  all identities pass", file=out)
    return EXIT_OK


def cmd_classify(cfg: RunConfig, out) -> int:
    spec = load_spec(cfg)
    pts = _sample(cfg, spec)
    doc = cls.classification_report(spec, pts, cfg.threshold, seed=cfg.seed)
    doc.update(_header(cfg, spec))
    if cfg.format == "csv":
        rows = [("kind", "name", "value")]
        rows += [("flag", k, int(v)) for k, v in sorted(doc["flags"].items())]
        rows += [("statistic", k, v) for k, v in sorted(doc["statistics"].items())]
        rows += [("probe", k, p["verdict"]) for k, p in sorted(doc["theorem_probes"].items())]
        text = _csv_text(rows)
    else:
        text = _dump_json(doc)
    path = _write(cfg, text, f"classify-{spec.name}.{cfg.format}")
    on = [k for k, v in doc["flags"].items() if v]
    print(f"metric {spec.name}: flags {{{', '.join(on)}}}; report written to {path}", file=out)
    for k, p in doc["theorem_probes"].items():
        print(f"  {k:<7} {p['verdict']}", file=out)
    return EXIT_VIOLATION if doc["violations"] else EXIT_OK


def cmd_flow(cfg: RunConfig, out) -> int:
    spec = load_spec(cfg)
    p0 = np.array(cfg.x + cfg.y, dtype=float)
    traj = fl.integrate_geodesic(spec, p0, cfg.t, cfg.dt, cfg.record_every)
    reports = {k: fl.first_integral_report(traj, k) for k in fl.MONITORS}
    if cfg.format == "csv":
        text = traj.to_csv()
    else:
        rows = [dict(zip(fl.CSV_COLUMNS, map(float, r))) for r in traj.to_rows()]
        text = _dump_json({**_header(cfg, spec), "exited_domain": traj.exited, "dt": traj.dt,
                           "integrator": "rk4", "columns": list(fl.CSV_COLUMNS), "samples": rows,
                           "first_integrals": reports})
    path = _write(cfg, text, f"flow-{spec.name}.{cfg.format}")
    F = reports["F"]
    print(f"metric {spec.name}: {len(traj.t)} samples to t={traj.t[-1]:.6g}; report written to {path}", file=out)
    print(f"  F relative drift {F['relative_drift']:.3e}", file=out)
    for k in ("K", "J", "Fscal"):
        print(f"  {k:<5} drift {reports[k]['max_drift']:.3e}", file=out)
    if traj.exited:
        print(f"  trajectory left the domain {spec.domain.describe()} after t={traj.t[-1]:.6g}", file=out)
    return EXIT_OK


COMMANDS = {"catalog": cmd_catalog, "invariants": cmd_invariants, "verify": cmd_verify,
            "classify": cmd_classify, "flow": cmd_flow}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = make_config(args)
        return COMMANDS[cfg.command](cfg, out)
    except (ConfigError, MetricFileError, dsl.DSLSyntaxError, fl.FlowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MetricError, JetError) as exc:
        print(f"metric error: {exc}", file=sys.stderr)
        return EXIT_METRIC


if __name__ == "__main__":
    sys.exit(main())
