"""Command-line entry point.

Exit codes: 0 granted / clean, 2 denied, 1 any parse, validation or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from datawalls import data_path
from datawalls.checkpoint import AccessRequest, Checkpoint, apply, authorize, replay
from datawalls.errors import DataWallsError, ParseError, ValidationFailed
from datawalls.policy import validate_policy
from datawalls.report import alpha_table, plot_alpha_chain, plot_walls, wall_table
from datawalls.service import DecisionServer, serve_stream
from datawalls.store.audit import AuditLog, render_record
from datawalls.store.datasets import read_dataset, read_schema, write_dataset
from datawalls.store.policy_io import read_document
from datawalls.store.state import EngineState, read_snapshot, write_snapshot
from datawalls.store.traces import read_trace
from datawalls.transform import DeidAction, TransformRecipe, build_warehouse_chain

log = logging.getLogger("datawalls")

EXIT_OK, EXIT_ERROR, EXIT_DENIED = 0, 1, 2


def _load_state(args: argparse.Namespace) -> EngineState:
    policy = read_document(args.policy).policy
    report = validate_policy(policy)
    if not report.ok:
        raise ValidationFailed(report)
    if args.state and Path(args.state).exists():
        return read_snapshot(args.state, policy)
    return EngineState.initial(policy)


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate_policy(read_document(args.policy).policy)
    print(report.render())
    return EXIT_OK if report.ok else EXIT_ERROR


def cmd_authorize(args: argparse.Namespace) -> int:
    state = _load_state(args)
    audit = AuditLog(args.audit) if args.audit else None
    decision = authorize(state, AccessRequest(args.seq, args.subject, args.object, args.op.lower()))
    if audit is not None or args.commit:
        state = apply(state, decision, audit)
    if args.commit and args.state:
        write_snapshot(args.state, state)
    print(decision.summary())
    if audit is not None:
        print(render_record(audit.records[-1]))
    return EXIT_OK if decision.granted else EXIT_DENIED


def cmd_replay(args: argparse.Namespace) -> int:
    state = _load_state(args)
    trace = read_trace(args.trace)
    audit = AuditLog(args.audit)
    decisions, state = replay(state, trace, audit)
    for d in decisions:
        print(d.wire())
    if args.snapshot:
        write_snapshot(args.snapshot, state)
    log.info("replayed %d requests, %d audit records", len(decisions), len(audit))
    return EXIT_OK


def _recipe(args: argparse.Namespace) -> TransformRecipe:
    base = read_document(args.policy).recipe or TransformRecipe()
    steps = list(base.deid_steps)
    steps += [(c, DeidAction.DROP) for c in args.drop or []]
    steps += [(c, DeidAction.PSEUDONYMIZE) for c in args.pseudonymize or []]
    return TransformRecipe(
        tuple(dict(steps).items()),
        args.k if args.k is not None else base.k,
        args.max_suppression if args.max_suppression is not None else base.max_suppression,
    )


def cmd_transform(args: argparse.Namespace) -> int:
    recipe = _recipe(args)
    od = read_dataset(args.data, read_schema(args.schema))
    chain = build_warehouse_chain(od, recipe)
    print(alpha_table(chain, recipe.k), end="")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for ds, name in zip(chain.tiers(), ("odw.csv", "ddw.csv", "adw.csv")):
            write_dataset(out / name, ds)
    if args.figures:
        figdir = Path(args.figures)
        figdir.mkdir(parents=True, exist_ok=True)
        log.info("wrote %s", plot_alpha_chain(chain, recipe.k, figdir / "alpha_chain.png"))
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    state = _load_state(args)
    print(wall_table(state), end="")
    if args.figures:
        figdir = Path(args.figures)
        figdir.mkdir(parents=True, exist_ok=True)
        log.info("wrote %s", plot_walls(state, figdir / "walls.png"))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    checkpoint = Checkpoint(_load_state(args), AuditLog(args.audit) if args.audit else None)
    try:
        if args.stdio:
            serve_stream(checkpoint, sys.stdin, sys.stdout)
        else:
            with DecisionServer((args.host, args.port), checkpoint) as server:
                host, port = server.server_address[:2]
                print(f"listening on {host}:{port}", file=sys.stderr, flush=True)
                server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        if args.snapshot:
            write_snapshot(args.snapshot, checkpoint.state)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datawalls", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    def with_policy(p: argparse.ArgumentParser, state: bool = True) -> argparse.ArgumentParser:
        p.add_argument("--policy", default=str(data_path("case_study.yaml")),
                       help="policy document (default: bundled case study)")
        if state:
            p.add_argument("--state", help="wall snapshot to start from")
        return p

    p = with_policy(sub.add_parser("validate", help="check a policy document"), state=False)
    p.set_defaults(func=cmd_validate)

    p = with_policy(sub.add_parser("authorize", help="decide one request"))
    p.add_argument("--subject", required=True)
    p.add_argument("--object", required=True)
    p.add_argument("--op", required=True)
    p.add_argument("--seq", type=int, default=1)
    p.add_argument("--audit", help="append the decision to this audit log")
    p.add_argument("--commit", action="store_true",
                   help="apply the decision and write the new walls back to --state")
    p.set_defaults(func=cmd_authorize)

    p = with_policy(sub.add_parser("replay", help="run a trace file through the checkpoint"))
    p.add_argument("--trace", required=True)
    p.add_argument("--audit", help="audit log to append to")
    p.add_argument("--snapshot", help="write the final walls here")
    p.set_defaults(func=cmd_replay)

    p = with_policy(sub.add_parser("transform", help="build the OD -> DD -> AD chain"), state=False)
    p.add_argument("--data", default=str(data_path("ehr_synthetic.csv")))
    p.add_argument("--schema", default=str(data_path("ehr_schema.yaml")))
    p.add_argument("--k", type=int)
    p.add_argument("--max-suppression", type=float)
    p.add_argument("--drop", action="append", metavar="COLUMN")
    p.add_argument("--pseudonymize", action="append", metavar="COLUMN")
    p.add_argument("--out", help="directory for odw.csv, ddw.csv, adw.csv")
    p.add_argument("--figures", help="directory for alpha_chain.png")
    p.set_defaults(func=cmd_transform)

    p = with_policy(sub.add_parser("report", help="print the class/wall table"))
    p.add_argument("--figures", help="directory for walls.png")
    p.set_defaults(func=cmd_report)

    p = with_policy(sub.add_parser("serve", help="answer request lines until stopped"))
    p.add_argument("--stdio", action="store_true", help="read stdin, write stdout")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7878)
    p.add_argument("--audit")
    p.add_argument("--snapshot", help="write the final walls here on shutdown")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except ValidationFailed as exc:
        print(f"error: policy failed validation\n{exc.report.render()}", file=sys.stderr)
    except (DataWallsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
