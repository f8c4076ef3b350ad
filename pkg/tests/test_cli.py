import json
import subprocess
import sys
from pathlib import Path

import pytest

from moralgate.cli import build_parser, main
from moralgate.config import CANONICAL_RULES, DEFAULT_CORPUS, LISTING1_RULES

ROOT = Path(__file__).resolve().parents[1]
SUBCOMMANDS = ["respond", "run", "evaluate", "audit", "ablate", "gen-corpus", "validate-rules"]


def test_respond_high(capsys):
    assert main(["respond", "--text", "There is insufficient evidence to make a precise attribution."]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "Action: warn_and_refer"
    assert lines[1].startswith("Explanation: Due to high uncertainty")
    assert lines[2].startswith("Response: There is insufficient evidence")


def test_respond_no_cues(capsys):
    assert main(["respond", "--text", "The cat sat."]) == 0
    assert capsys.readouterr().out.startswith("Action: full_answer_with_disclaimer\n")


def test_respond_from_file_with_listing1(tmp_path, capsys):
    f = tmp_path / "t.txt"
    f.write_text("the pay-back horizon is roughly seven years.")
    assert main(["respond", "--prompt-file", str(f), "--rules", str(LISTING1_RULES)]) == 0
    assert "Action: respond_confidently" in capsys.readouterr().out


def test_respond_ablation_flag(capsys):
    assert main(["respond", "--text", "There is no evidence.", "--ablate-negation"]) == 0
    assert "Action: full_answer_with_disclaimer" in capsys.readouterr().out


def test_respond_missing_rules(tmp_path, capsys):
    assert main(["respond", "--text", "x", "--rules", str(tmp_path / "nope.pl")]) == 1
    assert "error:" in capsys.readouterr().err


def test_respond_needs_exactly_one_source():
    with pytest.raises(SystemExit) as err:
        main(["respond"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["respond", "--text", "a", "--prompt-file", "b"])
    assert err.value.code == 2


def test_validate_rules(capsys):
    assert main(["validate-rules", str(CANONICAL_RULES)]) == 0
    assert capsys.readouterr().out.strip() == "OK: 6 facts, totality satisfied"


def test_validate_rules_failure(tmp_path, capsys):
    bad = tmp_path / "bad.pl"
    bad.write_text("action(high, warn).\n")
    assert main(["validate-rules", str(bad)]) == 1
    assert "missing action(low,_)" in capsys.readouterr().err


def test_run_then_evaluate(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--out", str(out), "--stable", "--format", "json"]) == 0
    captured = capsys.readouterr()
    assert "20 ok, 0 failed" in captured.err
    assert json.loads(captured.out)["coverage"] == 1.0
    assert (out / "outputs.json").exists() and (out / "evaluation.csv").exists()

    ev = tmp_path / "ev"
    assert main(["evaluate", "--records", str(out / "outputs.json"), "--corpus", str(DEFAULT_CORPUS),
                 "--out", str(ev)]) == 0
    table = capsys.readouterr().out
    assert "tagging_accuracy" in table and "med_03" in table
    assert (ev / "evaluation.csv").read_bytes() == (out / "evaluation.csv").read_bytes()


def test_audit_with_repo_config(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(ROOT)
    assert main(["audit", "--config", "default.toml", "--out", str(tmp_path), "--format", "csv"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "measure,original,masked"
    assert out[1] == "fairness_delta,0.25,0.00"
    data = json.loads((tmp_path / "fairness.json").read_text())
    assert data["masked"]["delta"] == 0.0


def test_ablate(tmp_path, capsys):
    assert main(["ablate", "--out", str(tmp_path), "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert list(rows) == ["full", "hedge_ablated", "negation_ablated", "both_ablated"]
    assert json.loads((tmp_path / "ablation.json").read_text()) == rows


def test_gen_corpus(tmp_path, capsys):
    assert main(["gen-corpus", "--seed", "3", "--out", str(tmp_path)]) == 0
    assert "low=6, medium=8, high=6" in capsys.readouterr().out
    assert main(["run", "--corpus", str(tmp_path / "corpus.jsonl"), "--script",
                 str(tmp_path / "script.json"), "--out", str(tmp_path / "r"), "--format", "json"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["tagging_accuracy"] == 1.0


def test_bad_config_exits_1(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[run]\nunknown_key = 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_unknown_subcommand_and_flag():
    for argv in (["bogus"], ["run", "--no-such-flag"]):
        with pytest.raises(SystemExit) as err:
            main(argv)
        assert err.value.code == 2


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help_for_every_subcommand(sub, capsys):
    with pytest.raises(SystemExit) as err:
        build_parser().parse_args([sub, "--help"])
    assert err.value.code == 0
    assert "usage:" in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "moralgate", "validate-rules", str(CANONICAL_RULES)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "OK: 6 facts, totality satisfied"
