"""CLI entry point: python -m proxima classify|audit|certify|iterate|hausdorff|gallery|sweep ..."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import NoReturn, Optional

from proxima.errors import ParamsUnsupported, ProximaError
from proxima.settings import Settings, default_settings, load_settings

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_INVALID = 2
EXIT_UNSUPPORTED = 3


def _fail(msg: str, code: int = EXIT_INVALID) -> NoReturn:
    from proxima.ui import error

    error(msg)
    sys.exit(code)


def _settings(args: argparse.Namespace) -> Settings:
    """Defaults <- YAML (--config) <- CLI flags."""
    path = getattr(args, "config", None)
    if not path:
        return default_settings()
    try:
        return load_settings(path)
    except OSError as exc:
        _fail(f"cannot read settings file {path}: {exc.strerror or exc}")
    except (ValueError, TypeError) as exc:
        _fail(f"invalid settings file {path}: {exc}")


def _load(path: str):
    from proxima.instance_io import load_instance
    from proxima.mapping import require_cyclic

    try:
        inst = load_instance(path)
        require_cyclic(inst)
        return inst
    except ProximaError as exc:
        _fail(f"invalid instance {path}: {exc}")


def _parse_point(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(" ", "").split(","))
    except ValueError:
        _fail(f"--x0 must be comma-separated numbers, got {text!r}")


# ---------------------------------------------------------------------------
# classify / audit
# ---------------------------------------------------------------------------


def cmd_classify(args: argparse.Namespace) -> None:
    from proxima.params import (
        ContractionParams,
        Region,
        classify_region,
        derived_constants,
        raw_region_membership,
    )
    from proxima.ui import fmt

    region = classify_region(args.alpha, args.beta)
    if region is Region.OUTSIDE:
        print("Outside")
        return
    raw = sorted(r.value for r in raw_region_membership(args.alpha, args.beta))
    line = f"{region.value}; raw={{{','.join(raw)}}}"
    if args.k is not None:
        try:
            c = derived_constants(ContractionParams(K=args.k, alpha=args.alpha, beta=args.beta))
        except ProximaError as exc:
            _fail(str(exc))
        line += f" K1={fmt(c.K1)} K2={fmt(c.K2)} omega*={fmt(c.omega_star)}"
    print(line)


def cmd_audit(args: argparse.Namespace) -> None:
    from proxima.params import RAW_REGIONS, Region, audit_regions
    from proxima.ui import results_table, section

    if args.grid < 10:
        _fail(f"--grid must be >= 10, got {args.grid}")
    audit = audit_regions(args.grid)
    section("Parameter regions")

    labels = [r.value for r in RAW_REGIONS] + [Region.DELTA_ONLY.value]
    rows = [(name, audit.raw_counts.get(name, "-"), audit.label_counts[name]) for name in labels]
    results_table(f"Region audit, {args.grid}x{args.grid} grid", ["Region", "Raw members", "Labelled"], rows)

    print(f"in-Delta samples {audit.in_delta}")
    print(f"classified {audit.classified}")
    print(f"Delta3 count {audit.raw_counts[Region.DELTA3.value]}")
    print(f"Delta4-only count {audit.delta4_outside_12}")
    print(f"overlapping samples {audit.overlaps}")

    if args.csv:
        import csv
        import io

        from proxima.instance_io import atomic_write

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["region", "raw_members", "labelled"])
        writer.writerows(rows)
        atomic_write(args.csv, buf.getvalue())
        logger.info("wrote audit counts to %s", args.csv)


# ---------------------------------------------------------------------------
# certify / iterate / sweep
# ---------------------------------------------------------------------------


def cmd_certify(args: argparse.Namespace) -> None:
    from proxima.certifier import certify
    from proxima.instance_io import dump_json, write_json

    settings = _settings(args)
    plan = settings.certify
    if args.samples is not None:
        plan.random_pairs = args.samples
    if args.seed is not None:
        plan.seed = args.seed
    if args.workers is not None:
        plan.workers = args.workers
    if args.literal_derived:
        plan.literal_derived = True

    inst = _load(args.instance)
    try:
        cert = certify(inst, plan)
    except ParamsUnsupported as exc:
        _fail(str(exc), EXIT_UNSUPPORTED)
    except ProximaError as exc:
        _fail(str(exc))

    payload = cert.to_dict()
    if args.out:
        write_json(args.out, payload)
        logger.info("wrote certificate to %s", args.out)
    else:
        sys.stdout.write(dump_json(payload))
    if not cert.certified:
        logger.warning(
            "not certified: %d contraction and %d per-step violations",
            len(cert.violations), len(cert.derived_violations),
        )
        sys.exit(EXIT_FAILED)


def _start_point(x0: tuple[float, ...], inst):
    """Table instances snap the start to the nearest cloud point (A first on ties)."""
    from proxima.mapping import locate
    from proxima.metric import point_to_set_distance

    if len(x0) != inst.dimension:
        _fail(f"--x0 has {len(x0)} coordinates, instance dimension is {inst.dimension}")
    if inst.map.exact_domain:
        from proxima.metric import Side, nearest_index

        side = min((Side.A, Side.B), key=lambda s: point_to_set_distance(x0, inst.side_set(s)))
        cloud = inst.side_set(side)
        return cloud.point(nearest_index(x0, cloud)), side
    try:
        return x0, locate(x0, inst)
    except ProximaError as exc:
        _fail(str(exc))


def _ledger_flags(trace, relative_slack: float) -> dict[str, bool]:
    from proxima.iterator import check_step_bound

    if len(trace.points) < 3:
        return {}
    report = check_step_bound(trace, relative_slack=relative_slack)
    return {
        "lower_envelope_ok": all(report.lower_ok),
        "step_bound_ok": report.ok,
    }


def _summary(trace) -> str:
    from proxima.iterator import BestProximityPair, FixedPoint
    from proxima.ui import fmt, fmt_point

    o = trace.outcome
    if isinstance(o, FixedPoint):
        head = f"FixedPoint z={fmt_point(o.z)}"
    elif isinstance(o, BestProximityPair):
        head = f"BestProximityPair z_A={fmt_point(o.z_A)} z_B={fmt_point(o.z_B)}"
    else:
        head = "NotConverged"
    tail = f"D={fmt(trace.D)} iterations={trace.iterations} step_dist={fmt(trace.step_dist[-1])}"
    return f"{head} {tail}"


def cmd_iterate(args: argparse.Namespace) -> None:
    from proxima.iterator import NotConverged, detect_limit, iterate, parse_policy
    from proxima.instance_io import write_trace

    settings = _settings(args).iteration
    if args.max_iter is not None:
        settings.max_iter = args.max_iter
    if args.tol is not None:
        settings.tol = args.tol

    inst = _load(args.instance)
    x0, side = _start_point(_parse_point(args.x0), inst)
    try:
        policy = parse_policy(args.policy)
        trace = iterate(inst, x0, policy, settings.max_iter, settings.tol, side=side)
        trace.outcome = detect_limit(trace, inst, settings.tol)
    except ParamsUnsupported as exc:
        _fail(str(exc), EXIT_UNSUPPORTED)
    except ProximaError as exc:
        _fail(str(exc))

    if args.out:
        sibling = write_trace(args.out, trace, _ledger_flags(trace, settings.ledger_slack))
        logger.info("wrote trace to %s and outcome to %s", args.out, sibling)
    print(_summary(trace))
    if isinstance(trace.outcome, NotConverged):
        logger.warning("%s", trace.outcome.reason)
        sys.exit(EXIT_FAILED)


def _spread(domain: list, count: int) -> list:
    import numpy as np

    picks = np.unique(np.linspace(0, len(domain) - 1, count).round().astype(int))
    return [domain[i] for i in picks]


def cmd_sweep(args: argparse.Namespace) -> None:
    from proxima.iterator import FixedPoint, NotConverged, compare_fixed_points, parse_policy, run_many
    from proxima.ui import fmt, fmt_point, results_table, status_msg, success, warning

    settings = _settings(args).iteration
    if args.max_iter is not None:
        settings.max_iter = args.max_iter
    if args.tol is not None:
        settings.tol = args.tol
    if args.starts < 1:
        _fail(f"--starts must be >= 1, got {args.starts}")

    inst = _load(args.instance)
    starts = _spread(inst.domain_points(), args.starts)
    status_msg(f"{len(starts)} starts, policy {args.policy}, {args.workers} worker(s)")
    try:
        policy = parse_policy(args.policy)
        traces = run_many(inst, [s.point for s in starts], policy, settings, workers=args.workers)
    except ParamsUnsupported as exc:
        _fail(str(exc), EXIT_UNSUPPORTED)
    except ProximaError as exc:
        _fail(str(exc))

    rows = [
        (fmt_point(s.point), s.side.value, t.outcome.kind, t.iterations, fmt(t.step_dist[-1]))
        for s, t in zip(starts, traces)
    ]
    results_table(f"Sweep over {len(starts)} starts ({policy})", ["Start", "Side", "Outcome", "Iterations", "Last step"], rows)

    fixed = [t.outcome.z for t in traces if isinstance(t.outcome, FixedPoint)]
    if len(fixed) > 1:
        reports = [compare_fixed_points(fixed[0], z, inst, settings.tol) for z in fixed[1:]]
        if all(r.passed for r in reports):
            success(f"all {len(fixed)} fixed points coincide within {2 * settings.tol:g}")
        else:
            warning("fixed points from different starts disagree")

    failed = sum(isinstance(t.outcome, NotConverged) for t in traces)
    if failed:
        warning(f"{failed} of {len(traces)} runs did not converge")
        sys.exit(EXIT_FAILED)


# ---------------------------------------------------------------------------
# hausdorff / gallery
# ---------------------------------------------------------------------------


def cmd_hausdorff(args: argparse.Namespace) -> None:
    from proxima.instance_io import load_point_set_file
    from proxima.metric import hausdorff, set_distance
    from proxima.ui import fmt

    try:
        left = load_point_set_file(args.set_a)
        right = load_point_set_file(args.set_b)
        H, D = hausdorff(left, right), set_distance(left, right)
    except ProximaError as exc:
        _fail(str(exc))
    print(f"H={fmt(H)} D={fmt(D)}")


_GALLERY_FLAGS = ("resolution", "k", "eps", "samples", "seed", "size_A", "size_B")


def cmd_gallery(args: argparse.Namespace) -> None:
    import inspect

    from proxima.gallery import GALLERY_FAMILIES, build_family
    from proxima.instance_io import save_instance
    from proxima.ui import fmt, info_panel, success

    accepted = inspect.signature(GALLERY_FAMILIES[args.family]).parameters
    params = {}
    for name in _GALLERY_FLAGS:
        value = getattr(args, name)
        if value is None:
            continue
        if name not in accepted:
            _fail(f"family {args.family!r} does not take --{name.replace('_', '-').lower()}")
        params[name] = value

    try:
        inst = build_family(args.family, **params)
    except ProximaError as exc:
        _fail(str(exc))
    save_instance(inst, args.out)

    details = {"dimension": str(inst.dimension), "D": fmt(inst.D), "omega": fmt(inst.omega)}
    if "omega_scan" in inst.metadata:
        details["omega scan"] = f"required {fmt(inst.metadata['omega_scan']['required'])}"
    info_panel(args.family, details)
    success(f"wrote {args.family} instance to {args.out}")


# ---------------------------------------------------------------------------
# main
# ---------------------------------------------------------------------------


def _add_iteration_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", default="nearest", help="nearest | first | random:SEED (default: nearest)")
    p.add_argument("--max-iter", type=int, default=None, help="Iteration cap (default: 10000)")
    p.add_argument("--tol", type=float, default=None, help="Stopping tolerance (default: 1e-6)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxima",
        description="Fixed points and best proximity points of cyclic multivalued maps",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="Enable debug logging"
    )
    parser.add_argument("--config", default=None, help="Settings YAML (tolerances, sampling)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    # -- classify --
    p_classify = subparsers.add_parser("classify", help="Classify (alpha, beta) into a parameter region")
    p_classify.add_argument("--alpha", type=float, required=True)
    p_classify.add_argument("--beta", type=float, required=True)
    p_classify.add_argument("--k", type=float, default=None, help="Also print K1, K2 and omega*")
    p_classify.set_defaults(func=cmd_classify)

    # -- audit --
    p_audit = subparsers.add_parser("audit", help="Count region memberships over a grid of the parameter domain")
    p_audit.add_argument("--grid", type=int, default=1000)
    p_audit.add_argument("--csv", default=None, help="Also write the counts as CSV")
    p_audit.set_defaults(func=cmd_audit)

    # -- certify --
    p_certify = subparsers.add_parser("certify", help="Check the contractive condition on an instance")
    p_certify.add_argument("instance", help="Instance JSON file")
    p_certify.add_argument("--samples", type=int, default=None, help="Random pairs for parametric maps")
    p_certify.add_argument("--seed", type=int, default=None)
    p_certify.add_argument("--workers", type=int, default=None)
    p_certify.add_argument("--literal-derived", action="store_true",
                           help="Also report the literal two-argument derived inequality")
    p_certify.add_argument("--out", default=None, help="Write the certificate here instead of stdout")
    p_certify.set_defaults(func=cmd_certify)

    # -- iterate --
    p_iterate = subparsers.add_parser("iterate", help="Run the iteration from a start point")
    p_iterate.add_argument("instance", help="Instance JSON file")
    p_iterate.add_argument("--x0", required=True, help="Start point, comma-separated coordinates")
    _add_iteration_flags(p_iterate)
    p_iterate.add_argument("--out", default=None, help="Trace CSV path (outcome JSON is written beside it)")
    p_iterate.set_defaults(func=cmd_iterate)

    # -- sweep --
    p_sweep = subparsers.add_parser("sweep", help="Iterate from evenly spread domain points")
    p_sweep.add_argument("instance", help="Instance JSON file")
    p_sweep.add_argument("--starts", type=int, default=5)
    p_sweep.add_argument("--workers", type=int, default=1)
    _add_iteration_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    # -- hausdorff --
    p_haus = subparsers.add_parser("hausdorff", help="Hausdorff and set distance of two point-set files")
    p_haus.add_argument("set_a")
    p_haus.add_argument("set_b")
    p_haus.set_defaults(func=cmd_hausdorff)

    # -- gallery --
    from proxima.gallery import GALLERY_FAMILIES

    p_gallery = subparsers.add_parser("gallery", help="Write an analytically solved instance")
    p_gallery.add_argument("family", choices=sorted(GALLERY_FAMILIES))
    p_gallery.add_argument("--out", required=True, help="Instance JSON path")
    p_gallery.add_argument("--resolution", type=int, default=None)
    p_gallery.add_argument("--k", type=float, default=None)
    p_gallery.add_argument("--eps", type=float, default=None)
    p_gallery.add_argument("--samples", type=int, default=None)
    p_gallery.add_argument("--seed", type=int, default=None)
    p_gallery.add_argument("--size-a", dest="size_A", type=int, default=None)
    p_gallery.add_argument("--size-b", dest="size_B", type=int, default=None)
    p_gallery.set_defaults(func=cmd_gallery)

    return parser


def main(argv: Optional[list[str]] = None) -> None:
    args = build_parser().parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.INFO
    if args.verbose:
        from rich.logging import RichHandler
        logging.basicConfig(
            level=level,
            format="%(message)s",
            handlers=[RichHandler(rich_tracebacks=True)],
        )
    else:
        from proxima.ui import ProximaLogHandler
        root = logging.getLogger()
        root.setLevel(level)
        if not any(isinstance(h, ProximaLogHandler) for h in root.handlers):
            root.addHandler(ProximaLogHandler())

    args.func(args)


if __name__ == "__main__":
    main()
