"""
reference: the published results table and each variant's improvement over the baseline
"""
import argparse
import json

from app.commands.common import CommandOutput
from app.schemas.evaluation import METRIC_COLUMNS
from app.services.depth_eval import format_report
from app.services.reference_results import BASELINE, REFERENCE_ROWS, improvements_over_baseline, reference_table


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("reference", help="Print published results and relative improvements")
    parser.add_argument("--metric", choices=list(METRIC_COLUMNS), default="rms")
    parser.add_argument("--baseline", choices=sorted(REFERENCE_ROWS), default=BASELINE)
    parser.add_argument("--format", choices=["json", "table"], default="json")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> CommandOutput:
    improvements = improvements_over_baseline(args.metric, args.baseline)
    if args.format == "table":
        text, _ = format_report(reference_table())
        lines = [text, "", f"{args.metric} improvement over {args.baseline}:"]
        lines += [f"  {name}: {value:+.2%}" for name, value in improvements.items()]
        stdout = "\n".join(lines)
    else:
        _, rows = format_report(reference_table())
        stdout = json.dumps(
            {"rows": json.loads(rows), "metric": args.metric, "baseline": args.baseline, "improvements": improvements},
            indent=2,
        )
    return CommandOutput(stdout=stdout, config={"metric": args.metric, "baseline": args.baseline}, inputs=[])
