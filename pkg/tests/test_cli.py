"""End-to-end tests for the command-line front end.

Most cases drive cli.main() in process and read capsys; a small class at the
end exercises the installed console script through subprocess, including the
broken-pipe path that only shows up with a real pipe.
"""

import io
import json
import shutil
import subprocess
import sys

import pytest

from causalcheck import cli
from causalcheck.errors import EngineDisagreement
from causalcheck.history import parse_history, serialize_history

from .figures import CC_PROGRAM_B, fig_b, fig_d


def _write_history(tmp_path, h, name="h.jsonl"):
    p = tmp_path / name
    p.write_text(serialize_history(h), encoding="utf-8")
    return str(p)


class TestCheckCommand:
    """The check subcommand: verdict line, exit code, and input plumbing."""

    def test_violation_line_and_exit(self, tmp_path, capsys):
        path = _write_history(tmp_path, fig_b())
        rc = cli.main(["check", "--model", "ccv", "--input", path])
        out = capsys.readouterr().out
        assert rc == 1
        assert out.startswith("CCv: Violation CyclicCF (witness: id0, id2, id0)")
        assert out.rstrip().endswith("ms]")

    def test_conforming_line_and_exit(self, tmp_path, capsys):
        path = _write_history(tmp_path, fig_b())
        rc = cli.main(["check", "--model", "cc", "--input", path])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.startswith("CC: Conforming [")
        assert "witness" not in out

    def test_cm_alias_reports_variant(self, tmp_path, capsys):
        """--model cm resolves to the maximal-anchor variant and says so."""
        path = _write_history(tmp_path, fig_d())
        rc = cli.main(["check", "--model", "cm", "--input", path])
        out = capsys.readouterr().out
        assert rc == 1
        assert out.startswith("CM[CM2]: Violation CyclicHB (witness: id0, id1, id0, id3)")

    def test_stdin_is_the_default_input(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "stdin", io.StringIO(serialize_history(fig_b())))
        rc = cli.main(["check", "--model", "ccv"])
        assert rc == 1
        assert "CyclicCF" in capsys.readouterr().out

    def test_dash_means_stdin(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "stdin", io.StringIO(serialize_history(fig_b())))
        rc = cli.main(["check", "--model", "ccv", "--input", "-"])
        assert rc == 1
        capsys.readouterr()

    def test_empty_history_conforms_everywhere(self, tmp_path, capsys):
        p = tmp_path / "empty.jsonl"
        p.write_text("", encoding="utf-8")
        for model in ("cc", "ccv", "cm", "cm1", "cm2"):
            rc = cli.main(["check", "--model", model, "--input", str(p)])
            assert rc == 0, model
        capsys.readouterr()

    def test_json_output_shape(self, tmp_path, capsys):
        path = _write_history(tmp_path, fig_b())
        rc = cli.main(["check", "--model", "ccv", "--input", path, "--json"])
        assert rc == 1
        doc = json.loads(capsys.readouterr().out)
        assert sorted(doc) == ["elapsed_ms", "model", "outcome", "pattern", "witness"]
        assert doc["model"] == "CCv"
        assert doc["outcome"] == "Violation"
        assert doc["pattern"] == "CyclicCF"
        assert doc["witness"] == ["id0", "id2", "id0"]
        assert isinstance(doc["elapsed_ms"], float) and doc["elapsed_ms"] >= 0.0

    def test_json_output_is_stable(self, tmp_path, capsys):
        """Same input, same verdict document, timing field aside."""
        path = _write_history(tmp_path, fig_d())
        docs = []
        for _ in range(2):
            cli.main(["check", "--model", "cm1", "--input", path, "--json"])
            doc = json.loads(capsys.readouterr().out)
            doc.pop("elapsed_ms")
            docs.append(doc)
        assert docs[0] == docs[1]

    def test_cross_engine_runs_clean(self, tmp_path, capsys):
        path = _write_history(tmp_path, fig_d())
        rc = cli.main(["check", "--model", "cm1", "--engine", "cross", "--input", path])
        assert rc == 1
        assert "CyclicHB" in capsys.readouterr().out

    def test_malformed_input_is_usage_error(self, tmp_path, capsys):
        p = tmp_path / "bad.jsonl"
        p.write_text("not json\n", encoding="utf-8")
        rc = cli.main(["check", "--input", str(p)])
        err = capsys.readouterr().err
        assert rc == 2
        assert err.startswith("error:")
        assert "line 1" in err

    def test_unvalued_reads_are_a_usage_error(self, tmp_path, capsys):
        cli.main(["generate", "--clients", "2", "--transactions", "3",
                  "--variables", "2", "--seed", "1", "--out", str(tmp_path / "g.jsonl")])
        rc = cli.main(["check", "--input", str(tmp_path / "g.jsonl")])
        err = capsys.readouterr().err
        assert rc == 2
        assert "execute it first" in err


class TestWorkloadCommands:
    """generate, execute, and mutate compose into a pipeline over files."""

    def test_generate_line_count_and_record_shape(self, capsys):
        rc = cli.main(["generate", "--clients", "4", "--transactions", "25",
                       "--variables", "5", "--seed", "7"])
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.splitlines()
        assert len(lines) == 100
        rec = json.loads(lines[0])
        assert sorted(rec) == ["id", "index", "kind", "process", "value", "var"]

    def test_generate_is_deterministic(self, capsys):
        argv = ["generate", "--clients", "3", "--transactions", "4",
                "--variables", "2", "--seed", "11"]
        cli.main(argv)
        first = capsys.readouterr().out
        cli.main(argv)
        assert capsys.readouterr().out == first

    def test_generate_out_file_round_trips(self, tmp_path, capsys):
        out = tmp_path / "g.jsonl"
        rc = cli.main(["generate", "--clients", "2", "--transactions", "5",
                       "--variables", "3", "--seed", "4", "--out", str(out)])
        assert rc == 0
        assert capsys.readouterr().out == ""
        h = parse_history(out.read_text(encoding="utf-8"))
        assert len(h.operations) == 10

    def test_pipeline_generate_execute_check(self, tmp_path, capsys):
        """A simulated execution of a generated workload passes every model."""
        raw = tmp_path / "raw.jsonl"
        run = tmp_path / "run.jsonl"
        cli.main(["generate", "--clients", "3", "--transactions", "8",
                  "--variables", "3", "--seed", "5", "--out", str(raw)])
        rc = cli.main(["execute", "--input", str(raw), "--seed", "5", "--out", str(run)])
        assert rc == 0
        for model in ("cc", "ccv", "cm1", "cm2"):
            assert cli.main(["check", "--model", model, "--input", str(run)]) == 0
        capsys.readouterr()

    def test_execute_fills_every_read(self, tmp_path, capsys):
        raw = tmp_path / "raw.jsonl"
        cli.main(["generate", "--clients", "2", "--transactions", "6",
                  "--variables", "2", "--seed", "9", "--out", str(raw)])
        cli.main(["execute", "--input", str(raw), "--seed", "2"])
        h = parse_history(capsys.readouterr().out)
        assert all(o.value is not None for o in h.operations)

    def test_mutate_flips_the_verdict(self, tmp_path, capsys):
        run = tmp_path / "run.jsonl"
        bad = tmp_path / "bad.jsonl"
        cli.main(["generate", "--clients", "3", "--transactions", "6",
                  "--variables", "2", "--seed", "7", "--out", str(run)])
        cli.main(["execute", "--input", str(run), "--seed", "7", "--out", str(run)])
        assert cli.main(["check", "--model", "ccv", "--input", str(run)]) == 0
        rc = cli.main(["mutate", "--pattern", "CyclicCF", "--input", str(run),
                       "--seed", "99", "--out", str(bad)])
        assert rc == 0
        rc = cli.main(["check", "--model", "ccv", "--input", str(bad)])
        out = capsys.readouterr().out
        assert rc == 1
        assert "Violation" in out

    def test_mutate_requires_a_pattern(self, tmp_path, capsys):
        path = _write_history(tmp_path, fig_b())
        rc = cli.main(["mutate", "--input", path])
        assert rc == 2
        capsys.readouterr()

    def test_mutate_without_a_host_is_usage_error(self, tmp_path, capsys):
        p = tmp_path / "writes.jsonl"
        p.write_text(
            '{"id": "id0", "process": "p1", "index": 0, "kind": "write", "var": "x", "value": 1}\n'
            '{"id": "id1", "process": "p1", "index": 1, "kind": "write", "var": "x", "value": 2}\n',
            encoding="utf-8",
        )
        rc = cli.main(["mutate", "--pattern", "ThinAirRead", "--input", str(p)])
        err = capsys.readouterr().err
        assert rc == 2
        assert err.startswith("error:")


class TestBenchCommand:
    def test_header_and_one_row_per_size(self, capsys):
        rc = cli.main(["bench", "--ops-min", "8", "--ops-max", "16", "--step", "8",
                       "--processes", "2", "--variables", "2", "--runs", "1",
                       "--seed", "3"])
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.splitlines()
        assert lines[0] == "ops,cc_ms,ccv_ms,cm1_ms,cm2_ms"
        assert len(lines) == 3
        for line in lines[1:]:
            cells = line.split(",")
            assert len(cells) == 5
            int(cells[0])
            for cell in cells[1:]:
                assert float(cell) >= 0.0
        assert lines[1].split(",")[0] == "8"
        assert lines[2].split(",")[0] == "16"

    def test_step_past_range_gives_single_row(self, capsys):
        rc = cli.main(["bench", "--ops-min", "6", "--ops-max", "9", "--step", "100",
                       "--processes", "2", "--variables", "2", "--runs", "1"])
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.splitlines()
        assert len(lines) == 2
        assert lines[1].split(",")[0] == "6"


class TestDumpDatalog:
    """dump-datalog prints exactly what the encoder hands the engine."""

    def test_cc_program_matches_encoder_output(self, tmp_path, capsys):
        path = _write_history(tmp_path, fig_b())
        rc = cli.main(["dump-datalog", "--model", "cc", "--input", path])
        assert rc == 0
        assert capsys.readouterr().out == CC_PROGRAM_B

    def test_cm2_emits_one_block_per_maximal_anchor(self, tmp_path, capsys):
        path = _write_history(tmp_path, fig_d())
        cli.main(["dump-datalog", "--model", "cm2", "--input", path])
        out = capsys.readouterr().out
        # one seeding rule per anchor block, two constraints each
        assert out.count('") :- co(X,"') == 2
        constraints = [l for l in out.splitlines() if l.startswith(":- hb(X,Y,")]
        assert len(constraints) == 4

    def test_verbatim_flag_swaps_saturation_rules(self, tmp_path, capsys):
        path = _write_history(tmp_path, fig_d())
        cli.main(["dump-datalog", "--model", "cm1", "--input", path])
        default = capsys.readouterr().out
        cli.main(["dump-datalog", "--model", "cm1", "--input", path, "--verbatim-hb"])
        verbatim = capsys.readouterr().out
        assert default != verbatim
        assert ', wr(Y,"' in default
        assert ', wr(Y,"' not in verbatim
        assert "wr(Y,Z), wrt(X), sv(X,Y)." in verbatim

    def test_empty_history_prints_rules_only(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "stdin", io.StringIO(""))
        rc = cli.main(["dump-datalog", "--model", "cc"])
        out = capsys.readouterr().out
        assert rc == 0
        lines = [l for l in out.splitlines() if l]
        assert len(lines) == 6
        assert all(":-" in l for l in lines)
        assert ":- co(X,X)." in lines


class TestErrorPaths:
    def test_no_arguments_is_usage_error(self, capsys):
        assert cli.main([]) == 2
        capsys.readouterr()

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert cli.main(["frobnicate"]) == 2
        capsys.readouterr()

    def test_unknown_model_rejected_before_reading_input(self, capsys):
        assert cli.main(["check", "--model", "serializable", "--input", "nope"]) == 2
        capsys.readouterr()

    def test_missing_input_file_is_usage_error(self, tmp_path, capsys):
        rc = cli.main(["check", "--input", str(tmp_path / "absent.jsonl")])
        err = capsys.readouterr().err
        assert rc == 2
        assert err.startswith("error:")

    def test_engine_disagreement_exits_three(self, tmp_path, monkeypatch, capsys):
        def boom(*args, **kwargs):
            raise EngineDisagreement("CC on 4 ops: native says Violation, datalog says Conforming")

        monkeypatch.setattr(cli, "check", boom)
        path = _write_history(tmp_path, fig_b())
        rc = cli.main(["check", "--engine", "cross", "--input", path])
        err = capsys.readouterr().err
        assert rc == 3
        assert "native says" in err


class TestConsoleScript:
    """The installed entry point behaves like main() behind a real pipe."""

    def setup_method(self):
        self.exe = shutil.which("causalcheck")
        assert self.exe is not None, "console script not installed"

    def test_entry_point_exit_code(self, tmp_path):
        path = _write_history(tmp_path, fig_b())
        proc = subprocess.run(
            [self.exe, "check", "--model", "ccv", "--input", path],
            capture_output=True, text=True,
        )
        assert proc.returncode == 1
        assert "CyclicCF" in proc.stdout

    def test_broken_pipe_is_quiet(self):
        """Piping a large generate into head must not trip an error exit."""
        cmd = (
            "set -o pipefail; "
            f"{self.exe} generate --clients 4 --transactions 2000 "
            "--variables 5 --seed 1 | head -n 1"
        )
        proc = subprocess.run(["bash", "-c", cmd], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "Traceback" not in proc.stderr
        assert proc.stdout.count("\n") == 1
