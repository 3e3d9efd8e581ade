"""Command-line front end.

Subcommands:

* run SCRIPT: execute a consent script, print assume outcomes.
* monitor MANIFEST CONSENT_LOG ACCESS_LOG: scan logs for violations.
* simulate: run a timing scenario, emit CSV.
* explain SCRIPT: show the authorization region of one consent.

Exit status: 0 clean (script passed, logs clean), 1 findings (an assume
failed, a violation was found), 2 usage or input errors.

The step duration for `monitor` comes from --step-duration, then the
CONSENT_STEP_DURATION environment variable, then defaults to one day.
Durations are written as integers with d/h/m/s units ("1d", "12h",
"90m", "30s", "1d12h"); a bare integer means seconds.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from datetime import datetime, timedelta, timezone

from . import bench, monitor
from .core import authorized_region
from .chronology import format_step
from .errors import ConsentryError
from .script import RunReport, run_script

STEP_DURATION_ENV = "CONSENT_STEP_DURATION"
DEFAULT_STEP_DURATION = "1d"

_DURATION = re.compile(
    r"(?:(?P<d>\d+)d)?(?:(?P<h>\d+)h)?(?:(?P<m>\d+)m)?(?:(?P<s>\d+)s)?\Z")


def parse_duration(text: str) -> timedelta:
    raw = text.strip()
    if raw.isdigit():
        value = timedelta(seconds=int(raw))
    else:
        m = _DURATION.match(raw)
        if m is None or not any(m.groupdict().values()):
            raise ValueError(
                f"cannot parse duration {text!r} (use forms like 1d, 12h, 90m, 30s)")
        parts = {k: int(v) for k, v in m.groupdict().items() if v}
        value = timedelta(days=parts.get("d", 0), hours=parts.get("h", 0),
                          minutes=parts.get("m", 0), seconds=parts.get("s", 0))
    if value <= timedelta(0):
        raise ValueError("step duration must be positive")
    return value


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as err:
        raise ConsentryError(f"cannot read {path}: {err.strerror or err}") from None
    except UnicodeDecodeError as err:
        raise ConsentryError(f"cannot read {path}: not valid UTF-8 ({err})") from None


# -- run ----------------------------------------------------------------


def _run_report_json(path: str, report: RunReport) -> dict:
    graph = report.ledger.ontology
    events = []
    for ev in report.events:
        collected = None
        if ev.collected_interval is not None:
            collected = [ev.collected_interval.start, ev.collected_interval.end]
        events.append({
            "id": ev.id,
            "action": ev.action.value,
            "data_concept": graph.name_of(ev.data_concept),
            "subject": ev.subject,
            "recipient_concept": graph.name_of(ev.recipient_concept),
            "step": ev.occurred_at,
            "collected_steps": collected,
            "authorized": ev.verdict.authorized,
            "reason": ev.verdict.reason.value,
        })
    return {
        "script": path,
        "passed": report.passed,
        "final_step": report.final_step,
        "assumes": [
            {
                "line": a.line,
                "statement": a.statement,
                "expected": a.expected,
                "actual": a.actual,
                "passed": a.passed,
            }
            for a in report.assumes
        ],
        "events": events,
        "statements": [
            {"line": o.line, "text": o.text, "note": o.note}
            for o in report.outcomes
        ],
    }


def cmd_run(args: argparse.Namespace) -> int:
    report = run_script(_read(args.script))
    if args.json:
        print(json.dumps(_run_report_json(args.script, report), indent=2))
    else:
        for a in report.assumes:
            mark = "PASS" if a.passed else "FAIL"
            print(f"line {a.line}: {a.statement} -> {mark}")
        passed = sum(1 for a in report.assumes if a.passed)
        verdict = "passed" if report.passed else "FAILED"
        print(f"{verdict}: {passed}/{len(report.assumes)} assumes hold, "
              f"{len(report.events)} event(s), final step "
              f"{format_step(report.final_step)}")
    return 0 if report.passed else 1


# -- monitor ----------------------------------------------------------------


def _step_duration(args: argparse.Namespace) -> timedelta:
    text = args.step_duration or os.environ.get(STEP_DURATION_ENV) \
        or DEFAULT_STEP_DURATION
    try:
        return parse_duration(text)
    except ValueError as err:
        raise ConsentryError(str(err)) from None


def cmd_monitor(args: argparse.Namespace) -> int:
    manifest = _read(args.manifest)
    consent_log = _read(args.consent_log)
    access_log = _read(args.access_log)
    duration = _step_duration(args)
    if args.epoch:
        try:
            epoch = monitor.parse_instant(args.epoch)
        except ValueError as err:
            raise ConsentryError(str(err)) from None
    else:
        epoch = monitor.earliest_timestamp(consent_log, access_log)
        if epoch is None:
            # No records at all; any epoch yields the same empty replay.
            epoch = datetime(1970, 1, 1, tzinfo=timezone.utc)
    report = monitor.scan(manifest, consent_log, access_log, epoch, duration)
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.render_text())
    return 0 if report.clean else 1


# -- simulate -----------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        if args.reps < 1:
            raise ValueError(f"need at least one repetition, got {args.reps}")
        scenario = bench.BenchScenario(args.scenario, args.steps, args.seed)
    except ValueError as err:
        raise ConsentryError(str(err)) from None
    series = bench.run_scenario(scenario, reps=args.reps)
    csv_text = bench.to_csv(series)
    if args.out and args.out != "-":
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(csv_text)
        except OSError as err:
            raise ConsentryError(
                f"cannot write {args.out}: {err.strerror or err}") from None
        print(f"wrote {args.steps * args.reps} samples to {args.out}",
              file=sys.stderr)
    else:
        sys.stdout.write(csv_text)
    return 0


# -- explain -------------------------------------------------------------------


def _render_region(consent, graph, horizon: int) -> str:
    region = authorized_region(consent, horizon)
    width = max(4, len(str(horizon)) + 2)
    header = " " * width + "".join(f"{format_step(t):>{width}}" for t in
                                   range(1, horizon + 1))
    lines = [header]
    for t_c in range(1, horizon + 1):
        cells = []
        for t_a in range(1, horizon + 1):
            if t_a < t_c:
                cell = " "
            elif (t_c, t_a) in region:
                cell = "#"
            else:
                cell = "."
            cells.append(f"{cell:>{width}}")
        lines.append(f"{format_step(t_c):>{width}}" + "".join(cells))
    return "\n".join(lines)


def cmd_explain(args: argparse.Namespace) -> int:
    report = run_script(_read(args.script))
    ledger = report.ledger
    consent = ledger.consent(args.consent.lstrip(":"))
    graph = ledger.ontology
    if args.horizon is not None and args.horizon < 1:
        raise ConsentryError(f"horizon must be at least 1, got {args.horizon}")
    horizon = args.horizon if args.horizon is not None else report.final_step + 2
    grant_kind = "retroactive" if consent.grant_retroactive else "non-retroactive"
    print(f":{consent.label or consent.id}  data={graph.name_of(consent.data_concept)}"
          f"  subject={consent.subject}"
          f"  recipient={graph.name_of(consent.recipient_concept)}")
    line = f"granted at {format_step(consent.granted_at)} ({grant_kind})"
    if consent.withdrawal is not None:
        w_kind = "retroactive" if consent.withdrawal.retroactive else "non-retroactive"
        line += f"; withdrawn at {format_step(consent.withdrawal.step)} ({w_kind})"
    print(line)
    print(f"covered (rows: collection step, columns: access step, horizon "
          f"{format_step(horizon)}):")
    print(_render_region(consent, graph, horizon))
    collectable = [format_step(t) for t in range(1, horizon + 1)
                   if consent.authorizes_collection(t)]
    print("collection allowed at: " + (" ".join(collectable) or "(never)"))
    return 0


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consentry",
        description="Consent-evolution authorization engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a consent script")
    p_run.add_argument("script", help="path to the script")
    p_run.add_argument("--json", action="store_true", help="emit a JSON report")
    p_run.set_defaults(func=cmd_run)

    p_mon = sub.add_parser("monitor", help="scan consent/access logs for violations")
    p_mon.add_argument("manifest", help="declarations manifest (new-statements only)")
    p_mon.add_argument("consent_log", help="JSONL grant/withdraw log")
    p_mon.add_argument("access_log", help="JSONL collect/access log")
    p_mon.add_argument("--epoch", help="ISO-8601 instant of step 1 "
                                       "(default: earliest log record)")
    p_mon.add_argument("--step-duration",
                       help=f"step length, e.g. 1d or 6h (default: "
                            f"${STEP_DURATION_ENV} or {DEFAULT_STEP_DURATION})")
    p_mon.add_argument("--json", action="store_true", help="emit a JSON report")
    p_mon.set_defaults(func=cmd_monitor)

    p_sim = sub.add_parser("simulate", help="run a timing scenario, emit CSV")
    p_sim.add_argument("--scenario", required=True, choices=bench.scenario_names())
    p_sim.add_argument("--steps", type=int, required=True,
                       help="number of steps to simulate")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--reps", type=int, default=bench.REPS)
    p_sim.add_argument("--out", default="-", help="CSV path ('-' for stdout)")
    p_sim.set_defaults(func=cmd_simulate)

    p_exp = sub.add_parser("explain",
                           help="show one consent's authorization region")
    p_exp.add_argument("script", help="path to the script that grants the consent")
    p_exp.add_argument("--consent", required=True, help="consent label, e.g. :consent1")
    p_exp.add_argument("--horizon", type=int,
                       help="largest step to draw (default: final step + 2)")
    p_exp.set_defaults(func=cmd_explain)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConsentryError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
