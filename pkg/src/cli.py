"""
Command-line entry point for the frame-measure laboratory.

Runs one or more scenario files, writes a JSON (or CSV) report per scenario
and sets the process exit code:

    0  every check passed
    1  some check failed, or a scenario crashed
    2  usage or scenario parse error
    3  every check was inconclusive (theorem hypotheses unmet)

Usage:
    python -m src.cli scenarios/example-2-8.json [--out FILE] [--seed N] [--format json|csv] [--quiet]
"""

import argparse
import json
import os
import sys
import tempfile
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence

from .errors import FrameLabError, ScenarioError
from .logger import get_logger, set_correlation_id, set_log_level
from .scenario import TaskResult, load_scenario, run_task
from .theorems import VerificationReport, sort_reports

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

logger = get_logger("frame-measure-lab")


@dataclass(frozen=True)
class RunOutcome:
    """Report document, optional CSV table and exit code of one scenario run."""

    path: str
    document: Dict[str, Any]
    exit_code: int
    table: Optional[str] = None

    def render(self, output_format: str) -> str:
        if output_format == "csv" and self.table is not None:
            return self.table
        return json.dumps(self.document, indent=2, default=str) + "\n"


def run_scenario(path: str, seed: Optional[int] = None) -> RunOutcome:
    """
    Load and execute one scenario file.

    Args:
        path: Scenario file path
        seed: Optional seed overriding the scenario's solver seed

    Returns:
        RunOutcome with the report document and exit code
    """
    try:
        scenario = load_scenario(path, seed)
    except ValueError as e:
        logger.error(f"Invalid scenario: {str(e)}", path=path, error_type=type(e).__name__)
        return RunOutcome(path, _create_error_response(path, str(e), EXIT_USAGE), EXIT_USAGE)

    try:
        logger.info("Running scenario", scenario=scenario.id, task=scenario.task["type"],
                    p=scenario.norms.p, q=scenario.norms.q, seed=scenario.solver.seed)
        result = run_task(scenario)
    except ScenarioError as e:
        logger.error(f"Invalid scenario: {str(e)}", path=path, error_type=type(e).__name__)
        return RunOutcome(path, _create_error_response(path, str(e), EXIT_USAGE), EXIT_USAGE)
    except FrameLabError as e:
        error_msg = f"Scenario {scenario.id} could not be evaluated: {str(e)}"
        logger.error(error_msg, path=path, error_type=type(e).__name__)
        return RunOutcome(path, _create_error_response(path, error_msg, EXIT_FAILED), EXIT_FAILED)
    except Exception as e:
        # Top-level handler: report the crash instead of losing the other scenarios
        error_msg = f"Unexpected error in scenario {scenario.id}: {str(e)}"
        logger.error(error_msg, path=path, error_type=type(e).__name__)
        return RunOutcome(path, _create_error_response(path, error_msg, EXIT_FAILED), EXIT_FAILED)

    summary = _generate_summary(result.reports)
    exit_code = _exit_code(summary)
    logger.info("Scenario completed", scenario=scenario.id, exit_code=exit_code, **summary)
    return RunOutcome(path, _create_response(scenario.id, path, result, summary), exit_code, result.table)


def _generate_summary(reports: Sequence[VerificationReport]) -> Dict[str, Any]:
    """
    Count report outcomes.

    Args:
        reports: Verification reports of one scenario

    Returns:
        Dictionary with per-outcome counts and an overall status
    """
    passed = sum(1 for r in reports if r.passed)
    inconclusive = sum(1 for r in reports if r.inconclusive)
    failed = len(reports) - passed - inconclusive
    if failed:
        status = "failed"
    elif reports and inconclusive == len(reports):
        status = "inconclusive"
    else:
        status = "passed"
    return {
        "reports": len(reports),
        "passed": passed,
        "failed": failed,
        "inconclusive": inconclusive,
        "status": status,
    }


def _exit_code(summary: Dict[str, Any]) -> int:
    return {"passed": EXIT_PASSED, "failed": EXIT_FAILED, "inconclusive": EXIT_INCONCLUSIVE}[summary["status"]]


def _combine_exit_codes(codes: Sequence[int]) -> int:
    if EXIT_USAGE in codes:
        return EXIT_USAGE
    if EXIT_FAILED in codes:
        return EXIT_FAILED
    if codes and all(code == EXIT_INCONCLUSIVE for code in codes):
        return EXIT_INCONCLUSIVE
    return EXIT_PASSED


def _create_response(scenario_id: str, path: str, result: TaskResult, summary: Dict[str, Any]) -> Dict[str, Any]:
    """
    Build the report document for a finished scenario.

    Args:
        scenario_id: Scenario identifier
        path: Scenario file path
        result: Task output
        summary: Outcome counts

    Returns:
        JSON-serializable report document
    """
    return {
        "scenario": scenario_id,
        "source": path,
        "task": result.task,
        "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
        "records": result.records,
        "reports": [r.to_dict() for r in sort_reports(result.reports)],
        "summary": summary,
    }


def _create_error_response(path: str, error_message: str, exit_code: int) -> Dict[str, Any]:
    """
    Create a standardized error document for a scenario that could not run.

    Args:
        path: Scenario file path
        error_message: Error message to include
        exit_code: Exit code the error maps to

    Returns:
        Error report document
    """
    return {
        "scenario": None,
        "source": path,
        "task": None,
        "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
        "records": [],
        "reports": [],
        "summary": {"reports": 0, "passed": 0, "failed": 0, "inconclusive": 0, "status": "error"},
        "errors": [error_message],
        "exit_code": exit_code,
    }


def write_atomic(path: str, text: str) -> None:
    """Write text to path through a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, temporary = tempfile.mkstemp(dir=directory, prefix=".framelab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise


def _output_path(out: str, scenario_path: str, output_format: str, many: bool) -> str:
    if not many:
        return out
    os.makedirs(out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(scenario_path))[0]
    return os.path.join(out, f"{stem}.{output_format}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.cli",
        description="Compute frame bounds and verify frame-measure theorems on finite abelian groups.",
    )
    parser.add_argument("scenarios", nargs="+", metavar="SCENARIO", help="scenario JSON file(s)")
    parser.add_argument("--out", metavar="FILE",
                        help="write the report here (a directory when several scenarios are given)")
    parser.add_argument("--seed", type=int, help="override the scenario solver seed")
    parser.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json",
                        help="report format (csv applies to bounds, sweep and demo tables)")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.quiet:
        set_log_level("WARN")
    set_correlation_id(str(uuid.uuid4()))

    paths = list(args.scenarios)
    if len(paths) > 1:
        with ThreadPoolExecutor(max_workers=min(len(paths), os.cpu_count() or 1)) as pool:
            outcomes = list(pool.map(lambda path: run_scenario(path, args.seed), paths))
    else:
        outcomes = [run_scenario(paths[0], args.seed)]

    for outcome in outcomes:
        text = outcome.render(args.output_format)
        if args.out:
            write_atomic(_output_path(args.out, outcome.path, args.output_format, len(outcomes) > 1), text)
        else:
            sys.stdout.write(text)
        if outcome.exit_code == EXIT_USAGE:
            sys.stderr.write(f"{outcome.path}: {outcome.document['errors'][0]}\n")

    return _combine_exit_codes([outcome.exit_code for outcome in outcomes])


if __name__ == "__main__":
    sys.exit(main())
