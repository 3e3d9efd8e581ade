import json
import subprocess
import sys
from datetime import timedelta

import pytest

from consentry.cli import main, parse_duration, STEP_DURATION_ENV

from conftest import golden_path

MANIFEST_TEXT = "new data Telemetry Data\nnew recipient Analytics\n"


def log_line(**kw):
    return json.dumps(kw) + "\n"


CLEAN_CONSENTS = log_line(
    timestamp="2026-01-01T00:00:00Z", action="grant", consent_id="c1",
    data_concept="Telemetry", subject="alice", recipient_concept="Analytics")
CLEAN_ACCESSES = log_line(
    timestamp="2026-01-02T00:00:00Z", action="collect",
    data_concept="Telemetry", subject="alice", recipient_concept="Analytics")
BAD_ACCESSES = log_line(
    timestamp="2026-01-02T00:00:00Z", action="collect",
    data_concept="Telemetry", subject="bob", recipient_concept="Analytics")


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def monitor_files(tmp_path, accesses=CLEAN_ACCESSES):
    return [
        write(tmp_path, "manifest.consent", MANIFEST_TEXT),
        write(tmp_path, "consents.jsonl", CLEAN_CONSENTS),
        write(tmp_path, "accesses.jsonl", accesses),
    ]


class TestDurations:
    @pytest.mark.parametrize("text,expected", [
        ("1d", timedelta(days=1)),
        ("12h", timedelta(hours=12)),
        ("90m", timedelta(minutes=90)),
        ("30s", timedelta(seconds=30)),
        ("1d12h", timedelta(days=1, hours=12)),
        ("2h30m15s", timedelta(hours=2, minutes=30, seconds=15)),
        ("3600", timedelta(hours=1)),
        (" 1d ", timedelta(days=1)),
    ])
    def test_accepted_forms(self, text, expected):
        assert parse_duration(text) == expected

    @pytest.mark.parametrize("text", ["", "xyz", "1w", "0d", "0", "h3", "-5s"])
    def test_rejected_forms(self, text):
        with pytest.raises(ValueError):
            parse_duration(text)


class TestRun:
    def test_passing_script_exits_zero(self, capsys):
        rc = main(["run", str(golden_path("overlapping_authorizations"))])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.count("-> PASS") == 6
        assert "FAIL" not in out
        assert out.strip().splitlines()[-1].startswith("passed: 6/6")

    def test_failing_assume_exits_one(self, tmp_path, capsys):
        path = write(tmp_path, "bad.consent",
                     "new data X Data\nassume true collect X s R\n")
        rc = main(["run", path])
        out = capsys.readouterr().out
        assert rc == 1
        assert "-> FAIL" in out
        assert "FAILED: 0/1" in out

    def test_missing_file_exits_two(self, capsys):
        rc = main(["run", "/nonexistent/script.consent"])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error:")

    def test_parse_error_exits_two(self, tmp_path, capsys):
        path = write(tmp_path, "broken.consent", "grant X s R\n")
        rc = main(["run", path])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_semantic_error_exits_two(self, tmp_path, capsys):
        path = write(tmp_path, "undeclared.consent", "grant Ghost s R :c1\n")
        rc = main(["run", path])
        assert rc == 2
        err = capsys.readouterr().err
        assert "error:" in err and "line 1" in err

    def test_non_utf8_file_exits_two(self, tmp_path, capsys):
        path = tmp_path / "garbage.consent"
        path.write_bytes(b"\xc3\x28 not utf-8\n")
        rc = main(["run", str(path)])
        assert rc == 2
        err = capsys.readouterr().err
        assert err.startswith("error:") and "UTF-8" in err

    def test_json_report(self, tmp_path, capsys):
        path = write(tmp_path, "ok.consent", """\
new data X Data
grant X s R :c1
collect X s R
assume true collect X s R
""")
        rc = main(["run", "--json", path])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["passed"] is True
        assert payload["final_step"] == 1
        assert [a["passed"] for a in payload["assumes"]] == [True]
        assert payload["events"][0]["action"] == "collect"
        assert payload["events"][0]["authorized"] is True
        assert payload["events"][0]["reason"] == "Ok"


class TestMonitor:
    def test_clean_logs_exit_zero(self, tmp_path, capsys):
        rc = main(["monitor", *monitor_files(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        assert "clean" in out

    def test_violations_exit_one(self, tmp_path, capsys):
        rc = main(["monitor", *monitor_files(tmp_path, BAD_ACCESSES)])
        out = capsys.readouterr().out
        assert rc == 1
        assert "SubjectMismatch" in out

    def test_json_report(self, tmp_path, capsys):
        rc = main(["monitor", "--json", *monitor_files(tmp_path, BAD_ACCESSES)])
        assert rc == 1
        payload = json.loads(capsys.readouterr().out)
        assert payload["clean"] is False
        assert payload["violations"][0]["reason"] == "SubjectMismatch"

    def test_malformed_log_exits_two(self, tmp_path, capsys):
        files = monitor_files(tmp_path)
        (tmp_path / "accesses.jsonl").write_text("{broken\n", encoding="utf-8")
        rc = main(["monitor", *files])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_epoch_flag_shifts_the_grid(self, tmp_path, capsys):
        files = monitor_files(tmp_path)
        rc = main(["monitor", "--json", "--epoch", "2025-12-31T00:00:00Z", *files])
        assert rc == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["final_step"] == 3  # one extra day before the logs

    def test_step_duration_flag(self, tmp_path, capsys):
        rc = main(["monitor", "--json", "--step-duration", "12h",
                   *monitor_files(tmp_path)])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["final_step"] == 3

    def test_step_duration_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(STEP_DURATION_ENV, "12h")
        rc = main(["monitor", "--json", *monitor_files(tmp_path)])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["final_step"] == 3

    def test_flag_overrides_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(STEP_DURATION_ENV, "12h")
        rc = main(["monitor", "--json", "--step-duration", "1d",
                   *monitor_files(tmp_path)])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["final_step"] == 2

    def test_bad_duration_exits_two(self, tmp_path, capsys):
        rc = main(["monitor", "--step-duration", "soon", *monitor_files(tmp_path)])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_empty_logs_are_clean(self, tmp_path, capsys):
        files = [
            write(tmp_path, "manifest.consent", MANIFEST_TEXT),
            write(tmp_path, "consents.jsonl", ""),
            write(tmp_path, "accesses.jsonl", ""),
        ]
        rc = main(["monitor", *files])
        assert rc == 0


class TestSimulate:
    def test_csv_on_stdout(self, capsys):
        rc = main(["simulate", "--scenario", "steps", "--steps", "4",
                   "--reps", "2"])
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0] == "scenario,step,rep,micros"
        assert len(lines) == 1 + 4 * 2

    def test_csv_to_file(self, tmp_path, capsys):
        out_path = tmp_path / "timings.csv"
        rc = main(["simulate", "--scenario", "query-access", "--steps", "3",
                   "--reps", "1", "--out", str(out_path)])
        assert rc == 0
        assert out_path.read_text(encoding="utf-8").startswith("scenario,step")
        assert "3 samples" in capsys.readouterr().err

    def test_zero_steps_exits_two(self, capsys):
        rc = main(["simulate", "--scenario", "steps", "--steps", "0"])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_unwritable_out_exits_two(self, capsys):
        rc = main(["simulate", "--scenario", "steps", "--steps", "2",
                   "--reps", "1", "--out", "/nonexistent-dir/timings.csv"])
        assert rc == 2
        assert capsys.readouterr().err.startswith("error: cannot write")

    def test_zero_reps_exits_two(self, capsys):
        rc = main(["simulate", "--scenario", "steps", "--steps", "3",
                   "--reps", "0"])
        assert rc == 2

    def test_unknown_scenario_is_a_usage_error(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["simulate", "--scenario", "quantum", "--steps", "3"])
        assert err.value.code == 2


EXPLAIN_SCRIPT = """\
new data Location Data
grant Location alice Partner :c1
step
step
withdraw retro :c1
"""


class TestExplain:
    def test_region_grid(self, tmp_path, capsys):
        path = write(tmp_path, "grant.consent", EXPLAIN_SCRIPT)
        rc = main(["explain", path, "--consent", ":c1", "--horizon", "4"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "data=Location" in out and "subject=alice" in out
        assert "granted at T1 (non-retroactive)" in out
        assert "withdrawn at T3 (retroactive)" in out
        # Covered cells: collections at T1-T2 accessed before the cut.
        assert out.count("#") == 3
        assert out.strip().endswith("collection allowed at: T1 T2")

    def test_label_colon_is_optional(self, tmp_path, capsys):
        path = write(tmp_path, "grant.consent", EXPLAIN_SCRIPT)
        assert main(["explain", path, "--consent", "c1", "--horizon", "2"]) == 0

    def test_default_horizon_is_final_step_plus_two(self, tmp_path, capsys):
        path = write(tmp_path, "grant.consent", EXPLAIN_SCRIPT)
        rc = main(["explain", path, "--consent", ":c1"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "horizon T5" in out
        assert "T6" not in out

    def test_single_cell_grid(self, tmp_path, capsys):
        path = write(tmp_path, "grant.consent",
                     "new data X Data\ngrant X s R :c1\n")
        rc = main(["explain", path, "--consent", ":c1", "--horizon", "1"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.count("#") == 1

    def test_unknown_consent_exits_two(self, tmp_path, capsys):
        path = write(tmp_path, "grant.consent", EXPLAIN_SCRIPT)
        rc = main(["explain", path, "--consent", ":ghost"])
        assert rc == 2

    def test_bad_horizon_exits_two(self, tmp_path, capsys):
        path = write(tmp_path, "grant.consent", EXPLAIN_SCRIPT)
        rc = main(["explain", path, "--consent", ":c1", "--horizon", "0"])
        assert rc == 2


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run(
            [sys.executable, "-m", "consentry.cli", "run",
             str(golden_path("basic_lifecycle"))],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "passed: 1/1" in proc.stdout
