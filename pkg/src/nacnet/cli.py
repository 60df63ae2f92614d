"""Command-line entry point: ``nacnet run|keys|scale|sizes|tamper|demo``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError
from .harness import BUNDLED, bundled_path, load_scenario, parse_scenario, run_scenario
from .harness.builders import ScaleParams, packet_size_config, report_config_burden, report_scaling
from .harness.report import format_table, render_text, report_packet_sizes, to_csv

KEY_TYPES = ("kek", "kdk", "ck", "attribute-key", "notify")


def _load(spec: str):
    # a bare bundled name works wherever a file path does
    if spec in BUNDLED and not Path(spec).exists():
        return load_scenario(bundled_path(spec))
    return load_scenario(spec)


def _emit_report(report, args) -> None:
    if args.format == "json":
        sys.stdout.write(report.to_json())
    elif args.format == "csv":
        sys.stdout.write(to_csv(report.outcome_summary()))
    else:
        sys.stdout.write(render_text(report))
    if args.report:
        Path(args.report).write_text(report.to_json())
    if args.figures:
        from .harness.figures import write_report_artifacts

        for path in write_report_artifacts(report, args.figures):
            print(f"wrote {path}", file=sys.stderr)


def cmd_run(args) -> int:
    report = run_scenario(_load(args.scenario), seed=args.seed)
    _emit_report(report, args)
    return 0


def cmd_demo(args) -> int:
    report = run_scenario(load_scenario(bundled_path(args.name)), seed=args.seed)
    _emit_report(report, args)
    return 0


def cmd_keys(args) -> int:
    report = run_scenario(_load(args.scenario), seed=args.seed)
    for p in report.packets:
        if p["type"] in KEY_TYPES:
            print(f"{p['type']}\t{p['node']}\t{p['name']}")
    return 0


def cmd_sizes(args) -> int:
    report = run_scenario(parse_scenario(packet_size_config(args.scheme, args.provider, args.seed or 0)))
    rows = report_packet_sizes(report)
    columns = ["packet", "size", "signature_type", "name"]
    sys.stdout.write(to_csv(rows, columns) if args.format == "csv" else format_table(rows, columns))
    if args.report:
        Path(args.report).write_text(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    if args.figures:
        from .harness.figures import plot_packet_sizes

        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"packet_sizes_{args.scheme}.csv").write_text(to_csv(rows, columns))
        plot_packet_sizes(rows, out / f"packet_sizes_{args.scheme}.png", f"Packet sizes ({args.scheme})")
    return 0


def cmd_scale(args) -> int:
    params = ScaleParams(args.n, args.m, args.a, args.x)
    result = report_scaling(args.scheme, params, args.provider)
    result["config_burden"] = report_config_burden(args.scheme, params)
    rows = [{"packet_type": k, "predicted": v, "measured": result["measured"][k]} for k, v in result["predicted"].items()]
    if args.format == "json":
        sys.stdout.write(json.dumps(result, sort_keys=True, indent=2) + "\n")
    elif args.format == "csv":
        sys.stdout.write(to_csv(rows))
    else:
        print(f"scheme {args.scheme}: n={params.n} m={params.m} a={params.a} x={params.x}")
        sys.stdout.write(format_table(rows))
        print("match" if result["match"] else "MISMATCH")
    if args.report:
        Path(args.report).write_text(json.dumps(result, sort_keys=True, indent=2) + "\n")
    if args.figures:
        from .harness.figures import write_scaling_artifacts

        sweep = [report_scaling(s, ScaleParams(k, params.m, params.a, params.x), args.provider)
                 for s in ("nac", "nac-abe") for k in sorted({0, max(params.n // 2, 1), params.n})]
        for path in write_scaling_artifacts(sweep, args.figures):
            print(f"wrote {path}", file=sys.stderr)
    return 0 if result["match"] else 1


def cmd_tamper(args) -> int:
    from .harness.adversary import run_tamper_trials

    cfg = _load(args.scenario) if args.scenario else load_scenario(bundled_path("battlefield"))
    sender, receiver = args.link.split(",")
    result = run_tamper_trials(cfg, args.consumer, (sender, receiver), args.trials, args.seed)
    doc = result.to_dict()
    rows = [{"target": t, **{k: c.get(k, 0) for k in sorted(result.outcomes)}} for t, c in sorted(result.by_target.items())]
    if args.format == "json":
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    elif args.format == "csv":
        sys.stdout.write(to_csv(rows))
    else:
        sys.stdout.write(format_table(rows))
        print(f"detected {result.detected}/{result.trials}, wrong plaintext {result.wrong_plaintext}")
    if args.report:
        Path(args.report).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    if args.figures:
        out = Path(args.figures)
        out.mkdir(parents=True, exist_ok=True)
        (out / "tamper.csv").write_text(to_csv(rows))
    return 0 if result.detected == result.trials and not result.wrong_plaintext else 1


def _outputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--report", metavar="FILE", help="write the machine-readable report as JSON")
    p.add_argument("--figures", metavar="DIR", help="write PNG figures and CSV tables into DIR")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table", help="standard output format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nacnet", description="Name-based access control over a simulated NDN")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario", help="scenario file or bundled name")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    _outputs(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("keys", help="list the key Data names a scenario publishes")
    p.add_argument("scenario", help="scenario file or bundled name")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_keys)

    p = sub.add_parser("scale", help="compare published key Data with the predicted counts")
    p.add_argument("--scheme", choices=("nac", "nac-abe"), required=True)
    p.add_argument("--n", type=int, required=True, help="decryptors")
    p.add_argument("--m", type=int, required=True, help="granularities")
    p.add_argument("--a", type=int, default=1, help="attributes")
    p.add_argument("--x", type=int, default=None, help="content Data packets (default m)")
    p.add_argument("--provider", default="simulated", help="CP-ABE provider for nac-abe")
    _outputs(p)
    p.set_defaults(fn=cmd_scale)

    p = sub.add_parser("sizes", help="packet-size table for the reference setup")
    p.add_argument("--scheme", choices=("nac", "nac-abe"), default="nac")
    p.add_argument("--provider", default="bsw07")
    p.add_argument("--seed", type=int, default=0)
    _outputs(p)
    p.set_defaults(fn=cmd_sizes)

    p = sub.add_parser("tamper", help="corrupt in-flight Data and check that consumers notice")
    p.add_argument("scenario", nargs="?", help="scenario file or bundled name (default: battlefield)")
    p.add_argument("--consumer", default="squadA-soldier1")
    p.add_argument("--link", default="squadGw,squadA", help="SENDER,RECEIVER of the tapped link direction")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    _outputs(p)
    p.set_defaults(fn=cmd_tamper)

    p = sub.add_parser("demo", help="run a bundled scenario")
    p.add_argument("name", nargs="?", choices=BUNDLED, default="battlefield")
    p.add_argument("--seed", type=int, default=None)
    _outputs(p)
    p.set_defaults(fn=cmd_demo)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
