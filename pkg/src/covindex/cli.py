"""Command-line driver.

Every run is fully determined by its resolved configuration (space,
command parameters, seed); the configuration and its hash are echoed into
the output header, outputs are written atomically, and repeated runs are
byte-identical for any worker count.

Exit codes: 0 success, 2 configuration error, 3 verification failure,
4 numerical-assertion failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile

import numpy as np

from .body import ConvexBody, NormBall, shape_from_json
from .cover import (
    Covering,
    alternating_cover,
    cell_cover,
    random_convex_cover,
    trivial_cover,
    two_piece_family,
    verify_cover,
)
from .derive import derivation_depth, multiplicity_check
from .inradius import inradius_coordinate, inradius_search, UnsupportedShapeError
from .space import BlockSpace, space_from_file, space_from_preset
from .study import (
    CSV_HEADER,
    fit_loglog,
    moduli_estimate,
    renorm_equivalence_check,
    scaling_study,
    theta_lower,
    theta_upper,
    two_piece_search,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_NUMERIC = 4


class ConfigError(ValueError):
    pass


class VerificationFailure(RuntimeError):
    pass


class NumericalAssertionFailure(RuntimeError):
    pass


# -- config handling ----------------------------------------------------------------


_KNOWN_CONFIG_KEYS = {"space", "dim", "command", "params", "seed", "output",
                      "format", "tolerances"}


def resolve_config(args: argparse.Namespace, params: dict) -> dict:
    # the output path is deliberately not part of the echoed config: runs
    # are byte-identical wherever they are written
    cfg = {
        "command": args.command,
        "space": getattr(args, "space", None),
        "dim": getattr(args, "dim", None),
        "seed": getattr(args, "seed", 0),
        "format": getattr(args, "format", "csv"),
        "params": params,
    }
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def load_space(args: argparse.Namespace) -> BlockSpace:
    if getattr(args, "space_file", None):
        return space_from_file(args.space_file)
    preset = getattr(args, "space", None) or "l2"
    dim = getattr(args, "dim", None) or 16
    try:
        return space_from_preset(preset, dim)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config_file(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    unknown = set(doc) - _KNOWN_CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    return doc


# -- output -------------------------------------------------------------------------


def _atomic_write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".covindex-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(cfg: dict, rows: list[list], out_path: str | None = None,
         footer: list[str] | None = None, json_payload=None) -> None:
    """Write the run output (CSV with config header, or a JSON mirror)."""
    header_lines = [f"# config: {json.dumps(cfg, sort_keys=True, default=str)}",
                    f"# config_hash: {config_hash(cfg)}"]
    if cfg.get("format") == "json":
        doc = {"config": cfg, "config_hash": config_hash(cfg),
               "rows": rows}
        if json_payload is not None:
            doc["payload"] = json_payload
        text = json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(row)
        body = buf.getvalue()
        text = "\n".join(header_lines) + "\n" + body
        if footer:
            text += "".join(f"# {line}\n" for line in footer)
    _atomic_write(out_path, text)


# -- subcommands --------------------------------------------------------------------


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise ConfigError(f"bad float list {text!r}") from exc


def cmd_cover_build(args) -> int:
    space = load_space(args)
    builders = {"alternating": alternating_cover, "cells": cell_cover}
    if args.family in builders:
        cov = builders[args.family](space, args.n)
    elif args.family == "two-piece":
        cov = two_piece_family(space, args.alpha, args.beta, seed=args.seed)
    elif args.family == "random":
        cov = random_convex_cover(space, pieces=args.n,
                                  complexity=args.complexity, seed=args.seed)
    elif args.family == "trivial":
        cov = trivial_cover(space)
    else:
        raise ConfigError(f"unknown family {args.family!r}")
    cfg = resolve_config(args, {"family": args.family, "n": args.n})
    doc = cov.to_json()
    doc["config_hash"] = config_hash(cfg)
    doc["config"] = cfg
    _atomic_write(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_cover_verify(args) -> int:
    with open(args.cover_file) as fh:
        cov = Covering.from_json(json.load(fh))
    checked = verify_cover(cov, samples=args.samples, seed=args.seed)
    cfg = resolve_config(args, {"samples": args.samples,
                                "cover_file": args.cover_file})
    report = {"config": cfg, "config_hash": config_hash(cfg),
              "certificate": checked.certificate.to_json(),
              "provenance": checked.provenance}
    _atomic_write(args.out, json.dumps(report, indent=2, sort_keys=True,
                                       default=str) + "\n")
    if not checked.certificate.accepted:
        raise VerificationFailure("cover has uncovered ball points")
    return EXIT_OK


def cmd_inradius(args) -> int:
    space = load_space(args)
    if args.body_file:
        with open(args.body_file) as fh:
            doc = json.load(fh)
        shape = shape_from_json(doc if "shape" in doc else doc["shape"])
        body = ConvexBody(space=space, shape=shape)
    else:
        body = ConvexBody(space=space, shape=NormBall(center=0.0, radius=1.0))
    try:
        cert = inradius_coordinate(body, args.k)
    except UnsupportedShapeError:
        cert = inradius_search(body, args.k, seed=args.seed)
    cfg = resolve_config(args, {"k": args.k, "body_file": args.body_file})
    out = {"config": cfg, "config_hash": config_hash(cfg),
           "certificate": cert.to_json()}
    _atomic_write(args.out, json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_gz(args) -> int:
    space = load_space(args)
    ball = ConvexBody(space=space, shape=NormBall(center=0.0, radius=1.0))
    rows = []
    payload = []
    for eps in _parse_float_list(args.eps):
        trace = derivation_depth(ball, eps, args.k, w=args.w,
                                 delta=args.delta, stage_cap=args.cap,
                                 seed=args.seed, cloud_size=args.cloud)
        payload.append(trace.to_json())
        gz = "overflow" if trace.overflowed else trace.depth
        rows.append(["gz", space.describe(), space.dim, args.k, 0,
                     repr(float(eps)), repr(0.0), str(gz), args.seed,
                     f"stages={[len(s) for s in trace.stages]}"])
    cfg = resolve_config(args, {"eps": args.eps, "k": args.k, "w": args.w,
                                "delta": args.delta, "cap": args.cap,
                                "cloud": args.cloud})
    emit(cfg, rows, out_path=args.out, json_payload=payload)
    return EXIT_OK


def cmd_prop31(args) -> int:
    space = load_space(args)
    cov = verify_cover(alternating_cover(space, args.n),
                       samples=args.samples, seed=args.seed)
    report = multiplicity_check(cov, eps=args.eps, k=args.k, w=args.w,
                                delta=args.delta, samples=args.cloud,
                                seed=args.seed)
    cfg = resolve_config(args, {"eps": args.eps, "k": args.k, "n": args.n})
    rows = [["prop31", space.describe(), space.dim, args.k, args.n,
             repr(float(args.eps)), repr(0.0),
             "pass" if report.passed else "fail", args.seed,
             f"violations={len(report.violations)}"]]
    emit(cfg, rows, out_path=args.out, json_payload=report.to_json())
    if not report.passed:
        raise NumericalAssertionFailure("multiplicity violations recorded")
    return EXIT_OK


def cmd_theta_upper(args) -> int:
    space = load_space(args)
    ests = []
    for n in _parse_int_list(args.n):
        ests.append(theta_upper(space, n, args.k, seed=args.seed))
    dedup = {e.n: e for e in ests}
    rows = [dedup[p].row() for p in sorted(dedup)]
    footer = []
    pts = [(e.n, e.upper) for e in dedup.values() if e.n >= 2 and e.upper < 1]
    if len(pts) >= 3:
        slope, stderr = fit_loglog([p for p, _ in pts], [u for _, u in pts])
        footer.append(f"slope: {slope!r} stderr: {stderr!r}")
    cfg = resolve_config(args, {"n": args.n, "k": args.k})
    emit(cfg, rows, out_path=args.out, footer=footer,
         json_payload=[dedup[p].to_json() for p in sorted(dedup)])
    return EXIT_OK


def cmd_theta_lower(args) -> int:
    space = load_space(args)
    rows = []
    payload = []
    for n in _parse_int_list(args.n):
        est = theta_lower(space, n, args.k, corpus_size=args.corpus,
                          seed=args.seed)
        rows.append(est.row())
        payload.append(est.to_json())
    cfg = resolve_config(args, {"n": args.n, "k": args.k,
                                "corpus": args.corpus})
    emit(cfg, rows, out_path=args.out, json_payload=payload)
    return EXIT_OK


def cmd_scaling(args) -> int:
    rows = []
    footer = []
    payload = {}
    for q in _parse_float_list(args.q):
        space = space_from_preset(f"lq:{q}", args.dim)
        ests, slope, stderr = scaling_study(space, _parse_int_list(args.n),
                                            args.k, seed=args.seed)
        rows.extend(e.row() for e in ests)
        footer.append(f"q={q:g} slope: {slope!r} stderr: {stderr!r} "
                      f"target: {-1.0 / q!r}")
        payload[f"q={q:g}"] = {"slope": slope, "stderr": stderr}
    cfg = resolve_config(args, {"q": args.q, "n": args.n, "k": args.k})
    emit(cfg, rows, out_path=args.out, footer=footer, json_payload=payload)
    return EXIT_OK


def cmd_problem46(args) -> int:
    rows = []
    payload = []
    for N in _parse_int_list(args.N):
        rep = two_piece_search(N=N, k=args.k, iterations=args.iterations,
                               seed=args.seed)
        rows.append(["problem46", f"l2^{N}", N, args.k, 2,
                     repr(rep.best_upper),
                     repr(rep.disk_lower if rep.disk_lower else 0.0),
                     "two-piece", args.seed,
                     f"alpha={rep.best_alpha:g} beta={rep.best_beta:g} "
                     f"gap={rep.gap_to_reference:+.4f}"])
        payload.append(rep.to_json())
    cfg = resolve_config(args, {"N": args.N, "k": args.k,
                                "iterations": args.iterations})
    emit(cfg, rows, out_path=args.out, json_payload=payload)
    return EXIT_OK


def cmd_renorm_check(args) -> int:
    space = load_space(args)
    weights = _parse_float_list(args.weights) if args.weights else \
        [args.lam] + [1.0] * (space.n_blocks - 1)
    rep = renorm_equivalence_check(space, weights, n=args.n, k=args.k,
                                   seed=args.seed)
    rows = [["renorm-check", space.describe(), space.dim, args.k, args.n,
             repr(rep.tilted_upper), repr(rep.base_upper),
             "pass" if rep.ok else "fail", args.seed,
             f"lambda={rep.lam:g}"]]
    cfg = resolve_config(args, {"n": args.n, "k": args.k,
                                "weights": args.weights, "lam": args.lam})
    emit(cfg, rows, out_path=args.out, json_payload=rep.to_json())
    if not rep.ok:
        raise NumericalAssertionFailure("renorming inequality violated")
    return EXIT_OK


def cmd_moduli(args) -> int:
    space = load_space(args)
    est = moduli_estimate(space, _parse_float_list(args.eps), args.k,
                          seed=args.seed)
    rows = []
    for eps, d, r in zip(est.epsilons, est.delta_bar, est.rho_bar):
        rows.append(["moduli", space.describe(), space.dim, args.k, 0,
                     repr(r), repr(d), "estimate", args.seed, f"eps={eps:g}"])
    cfg = resolve_config(args, {"eps": args.eps, "k": args.k})
    emit(cfg, rows, out_path=args.out, json_payload=est.to_json())
    return EXIT_OK


def cmd_run(args) -> int:
    """Execute a run described by a JSON config file."""
    doc = load_config_file(args.config)
    command = doc.get("command")
    if not command:
        raise ConfigError("config must name a command")
    argv = [str(command)]
    for key in ("space", "dim", "seed", "format"):
        if doc.get(key) is not None:
            argv += [f"--{key}", str(doc[key])]
    for key, value in (doc.get("params") or {}).items():
        argv += [f"--{key}", str(value)]
    if args.out:
        argv += ["--out", args.out]
    return main(argv)


# -- parser ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, with_space: bool = True) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    if with_space:
        p.add_argument("--space", default="l2",
                       help="preset: l1, l2, lq:<q>, linf")
        p.add_argument("--dim", type=int, default=16)
        p.add_argument("--space-file", default=None,
                       help="JSON space description (overrides --space)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="covindex",
        description="Covering-index laboratory for block-norm spaces")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cover-build", help="construct a covering")
    _add_common(p)
    p.add_argument("--family", default="alternating",
                   choices=("alternating", "cells", "two-piece", "random",
                            "trivial"))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--complexity", type=int, default=2)
    p.set_defaults(fn=cmd_cover_build)

    p = sub.add_parser("cover-verify", help="sample-check a covering file")
    _add_common(p, with_space=False)
    p.add_argument("--cover-file", required=True)
    p.add_argument("--samples", type=int, default=100_000)
    p.set_defaults(fn=cmd_cover_verify)

    p = sub.add_parser("inradius", help="inradius certificate for a body")
    _add_common(p)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--body-file", default=None)
    p.set_defaults(fn=cmd_inradius)

    p = sub.add_parser("gz", help="derivation depth under the slab model")
    _add_common(p)
    p.add_argument("--eps", default="0.5")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--w", type=int, default=4)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--cap", type=int, default=64)
    p.add_argument("--cloud", type=int, default=512)
    p.set_defaults(fn=cmd_gz)

    p = sub.add_parser("prop31", help="multiplicity cross-check of a cover")
    _add_common(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--w", type=int, default=4)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--samples", type=int, default=4096)
    p.add_argument("--cloud", type=int, default=512)
    p.set_defaults(fn=cmd_prop31)

    p = sub.add_parser("theta-upper", help="constructed-cover upper estimates")
    _add_common(p)
    p.add_argument("--n", default="2,4,8,16", help="comma list")
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(fn=cmd_theta_upper)

    p = sub.add_parser("theta-lower", help="adversarial corpus lower estimates")
    _add_common(p)
    p.add_argument("--n", default="2", help="comma list")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--corpus", type=int, default=100)
    p.set_defaults(fn=cmd_theta_lower)

    p = sub.add_parser("scaling", help="slope sweep over q values")
    _add_common(p, with_space=False)
    p.add_argument("--q", default="1,2,3")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--n", default=",".join(str(v) for v in range(2, 17)))
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(fn=cmd_scaling)

    p = sub.add_parser("problem46", help="two-piece optimization bracket")
    _add_common(p, with_space=False)
    p.add_argument("--N", default="32")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--iterations", type=int, default=48)
    p.set_defaults(fn=cmd_problem46)

    p = sub.add_parser("renorm-check", help="renorming equivalence of estimates")
    _add_common(p)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--weights", default=None, help="comma list per block")
    p.add_argument("--lam", type=float, default=1.5,
                   help="used when --weights is omitted")
    p.set_defaults(fn=cmd_renorm_check)

    p = sub.add_parser("moduli", help="asymptotic convexity/smoothness moduli")
    _add_common(p)
    p.add_argument("--eps", default="0.25,0.5,1.0")
    p.add_argument("--k", type=int, default=1)
    p.set_defaults(fn=cmd_moduli)

    p = sub.add_parser("run", help="execute a JSON run configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_run)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config-error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as exc:
        print(f"verification-failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except NumericalAssertionFailure as exc:
        print(f"numerical-assertion-failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
