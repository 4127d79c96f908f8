"""Command line batch runner: ``coapprox <operation> --config job.yaml``."""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ConfigError, JobConfig, load_config, schema_dump
from .errors import InvalidBody, MaxIterExceeded, NotCertified, SearchExhausted
from .gauge import HalfSpace, NormBall, Polytope, decompose, gauge, hausdorff_estimate, intersection_body
from .halfspace import halfspace_projection
from .intersect import IterationConfig, averaged_map, fixed_point, intersection_violation, zero_in_hull
from .oracle import (
    control_single_kernel, nonconvex_projection_linf2, nonexpansiveness_sweep,
    verify_counterexample_linf4,
)
from .spaces import NormSpec

REPORT_HEADER = "coapprox-report v1"
COLUMNS = ("operation", "index", "x", "d", "value", "margin", "h", "R", "seed", "status")
OPERATIONS = ("gauge", "decompose", "project", "verify", "counterexample", "sweep")

EXIT_OK, EXIT_VALIDATION, EXIT_CERTIFICATION, EXIT_MAXITER = 0, 2, 3, 4


class CertificationFailure(Exception):
    pass


@dataclass
class Report:
    operation: str
    seed: int
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    status: int = EXIT_OK

    def add(self, x="", d="", value="", margin="", h="", R="", status="ok"):
        self.rows.append((self.operation, len(self.rows), x, d, value, margin, h, R, self.seed, status))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if np.ndim(v) == 0:
        return repr(float(v) + 0.0)
    return " ".join(repr(float(t) + 0.0) for t in np.ravel(v))


def render_csv(report: Report) -> str:
    buf = io.StringIO()
    buf.write(REPORT_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in report.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# builders


def build_body(cfg: JobConfig):
    b, space = cfg.body, cfg.space.spec()
    try:
        if b.kind == "box":
            body = Polytope.box(b.lower, b.upper, space)
        elif b.kind == "ball":
            ball = NormSpec.lp(cfg.space.dimension, b.p)
            body = NormBall(ball, b.radius, b.center, space)
        else:
            body = Polytope(b.vertices, space)
        if body.dimension != space.dimension:
            raise ConfigError(f"body has dimension {body.dimension}, space has {space.dimension}",
                              "field body")
        if not body.inner_radius > 0:
            raise ConfigError("body has no interior certificate: 0 is not an interior point",
                              "field body")
    except InvalidBody as exc:
        raise ConfigError(str(exc), "field body") from None
    return body


def build_projections(cfg: JobConfig):
    space = cfg.space.spec()
    out = []
    for i, h in enumerate(cfg.halfspaces):
        try:
            out.append(halfspace_projection(HalfSpace.normalized(h.f, h.d, space), seed=cfg.seed))
        except NotCertified as exc:
            raise CertificationFailure(f"halfspaces[{i}]: {exc}") from None
    return out


def query_points(cfg: JobConfig, count: int = 8) -> np.ndarray:
    if cfg.points:
        return np.asarray(cfg.points, dtype=float)
    rng = np.random.default_rng(cfg.seed)
    return 2.0 * rng.standard_normal((count, cfg.space.dimension))


# ---------------------------------------------------------------------------
# operations


def op_gauge(cfg: JobConfig, rep: Report):
    body = build_body(cfg)
    X = query_points(cfg)
    for x, g in zip(X, np.atleast_1d(gauge(body, X))):
        rep.add(x=x, value=g)
    rep.summary.append(f"gauge of {len(X)} points")


def op_decompose(cfg: JobConfig, rep: Report):
    body = build_body(cfg)
    hs = decompose(body, cfg.decompose.n, seed=cfg.seed)
    for h in hs:
        rep.add(x=h.f, value=h.d)
    hd = hausdorff_estimate(body, intersection_body(hs), cfg.decompose.hausdorff_samples, cfg.seed)
    rep.add(value=hd, status="hausdorff" if math.isfinite(hd) else "unbounded")
    rep.summary.append(f"{len(hs)} half-spaces from {cfg.decompose.n} directions")
    rep.summary.append(f"hausdorff estimate {hd:.6g}")


def op_project(cfg: JobConfig, rep: Report):
    projections = build_projections(cfg)
    space = cfg.space.spec()
    X = query_points(cfg)
    if len(projections) == 1:
        D, residual = projections[0](X), 0.0
    else:
        Q = averaged_map(projections, cfg.weight_vector(), space)
        it = cfg.iteration
        res = fixed_point(Q, X, IterationConfig(it.max_iter, it.tol, it.relaxation), space)
        D, residual = res.point, res.residual
        hull = zero_in_hull([p.y for p in projections])
        rep.summary.append(f"fixed point after {res.iterations} iterations, residual {residual:.3g}")
        rep.summary.append(f"0 in conv(y_k): {str(hull).lower()}")
    viol = intersection_violation(projections, D)
    for x, d, v in zip(X, D, viol):
        rep.add(x=x, d=d, value=residual, margin=v, status="ok" if v <= 1e-6 else "outside")
    rep.summary.append(f"{len(X)} projections, worst violation {viol.max():.3g}")
    if viol.max() > 1e-6:
        raise CertificationFailure(f"limit violates a half-space by {viol.max():.3g}")


def op_counterexample(cfg: JobConfig, rep: Report):
    o = cfg.oracle
    try:
        ce = verify_counterexample_linf4(o.h, o.R, cfg.seed, o.max_queries)
    except SearchExhausted as exc:
        raise CertificationFailure(str(exc)) from None
    rep.add(x=ce.x, d=ce.candidate, value=ce.delta, margin=ce.delta, h=ce.h, R=ce.R,
            status="witness")
    rep.summary.append(f"witness x = {_fmt(ce.x)}")
    rep.summary.append(f"delta = {ce.delta:.6g} (fill distance {ce.fill:.3g}, {ce.samples} samples)")
    control = control_single_kernel(seed=cfg.seed, aligned=True)
    for x, m in zip(control.queries, control.margins):
        rep.add(x=x, value=m, margin=m, h=control.h, R=control.R,
                status="control" if m <= cfg.tol else "control-failed")
    rep.summary.append(f"control on a single kernel: max margin {control.max_margin:.3g}")
    if control.max_margin > cfg.tol:
        raise CertificationFailure(f"control margin {control.max_margin:.3g} exceeds tol {cfg.tol:g}")


def op_verify(cfg: JobConfig, rep: Report):
    from .suites import SUITES
    if cfg.target == "counterexample_linf4":
        return op_counterexample(cfg, rep)
    names = list(SUITES) if cfg.target == "all" else [cfg.target]
    failed = []
    for name in names:
        res = SUITES[name](seed=cfg.seed)
        ok = res.passed and res.within_budget
        rep.add(x=name, value=res.value, margin=res.threshold, status="pass" if ok else "fail")
        rep.summary.append(res.line())
        if not ok:
            failed.append(name)
    if failed:
        raise CertificationFailure(f"failed: {', '.join(failed)}")


def op_sweep(cfg: JobConfig, rep: Report):
    space = cfg.space.spec()
    if cfg.sweep.map == "nonconvex_linf2":
        if cfg.space.dimension != 2:
            raise ConfigError("nonconvex_linf2 needs a 2-dimensional space", "field space.dimension")
        M = nonconvex_projection_linf2
    elif cfg.sweep.map == "identity":
        def M(X):
            return X
    else:
        projections = build_projections(cfg)
        M = projections[0] if len(projections) == 1 else averaged_map(projections, cfg.weight_vector(), space)
    res = nonexpansiveness_sweep(M, space, cfg.sweep.pairs, cfg.seed)
    ok = res.max_ratio <= 1 + cfg.tol
    rep.add(x=res.worst[0], d=res.worst[1], value=res.max_ratio, margin=cfg.tol,
            status="ok" if ok else "expansive")
    rep.summary.append(f"max ratio {res.max_ratio!r} over {res.pairs} pairs")
    if not ok:
        raise CertificationFailure(f"ratio {res.max_ratio:.12g} exceeds 1 + {cfg.tol:g}")


RUNNERS = {
    "gauge": op_gauge, "decompose": op_decompose, "project": op_project,
    "verify": op_verify, "counterexample": op_counterexample, "sweep": op_sweep,
}


def run(cfg: JobConfig) -> Report:
    """Execute the configured job; the report carries the exit status."""
    rep = Report(cfg.operation, cfg.seed)
    try:
        RUNNERS[cfg.operation](cfg, rep)
    except ConfigError as exc:
        rep.status = EXIT_VALIDATION
        rep.summary.append(f"validation error: {exc}")
    except CertificationFailure as exc:
        rep.status = EXIT_CERTIFICATION
        rep.summary.append(f"certification failed: {exc}")
    except MaxIterExceeded as exc:
        rep.status = EXIT_MAXITER
        rep.summary.append(f"iteration limit: {exc}")
    return rep


def write_report(rep: Report, out: Path):
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(render_csv(rep), encoding="utf-8")
    summary = [f"{REPORT_HEADER} {rep.operation} seed={rep.seed} exit={rep.status}", *rep.summary]
    out.with_suffix(".txt").write_text("\n".join(summary) + "\n", encoding="utf-8")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coapprox", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in OPERATIONS:
        s = sub.add_parser(name, help=f"run a {name} job")
        s.add_argument("--config", type=Path, help="YAML job file (see 'coapprox schema')")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", type=Path, help="CSV report path; the summary goes next to it as .txt")
        s.add_argument("--n", type=int, help="number of half-spaces for decompose")
        s.add_argument("--tol", type=float)
    sub.add_parser("schema", help="print the configuration grammar with defaults")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "schema":
        sys.stdout.write(schema_dump())
        return EXIT_OK
    try:
        cfg = load_config(args.config) if args.config else JobConfig()
        data = cfg.model_dump()
        data["operation"] = args.command
        if args.seed is not None:
            data["seed"] = args.seed
        if args.tol is not None:
            data["tol"] = args.tol
        if args.n is not None:
            data["decompose"]["n"] = args.n
        from pydantic import ValidationError
        try:
            cfg = JobConfig.model_validate(data)
        except ValidationError as exc:
            err = exc.errors()[0]
            raise ConfigError(err["msg"], "field " + ".".join(map(str, err["loc"]))) from None
    except (ConfigError, OSError) as exc:
        print(f"coapprox: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rep = run(cfg)
    out = args.out or Path(cfg.output or f"coapprox-{cfg.operation}.csv")
    write_report(rep, out)
    print(f"exit {rep.status}: {out}")
    for line in rep.summary:
        print(line)
    return rep.status


if __name__ == "__main__":
    sys.exit(main())
