import json
import subprocess
import sys
from pathlib import Path

import pytest

from qkdcrit import audit, cli
from qkdcrit.errors import OutOfRange, ParseError

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden_seed42"

CLAIMS_CSV = """label,n,epsilon_sec,leak_EC,auth_bits
headline,10000,1e-20,2000,100
loose,10000,1e-6,0,0
bad-eps,10000,2,0,0
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# -- parsing ----------------------------------------------------------------


def test_parse_csv_rows_and_rejects():
    parsed = audit.parse_csv(CLAIMS_CSV)
    assert [c.label for _, c in parsed.claims] == ["headline", "loose"]
    (rej,) = parsed.rejects
    assert rej.line == 4 and rej.label == "bad-eps" and "OutOfRange" in rej.reason


def test_parse_csv_field_count_and_header():
    parsed = audit.parse_csv("n,epsilon_sec\n10,1e-3,7\n")
    assert parsed.rejects[0].line == 2
    with pytest.raises(ParseError) as exc:
        audit.parse_csv("label,eps\nx,1\n")
    assert exc.value.line == 1


def test_parse_json_forms():
    text = json.dumps({"claims": [{"n": 100, "eps_sec_log10": -30}, {"n": 0, "epsilon_sec": 0.1}, 5]})
    parsed = audit.parse_json(text)
    assert parsed.claims[0][1].log10_epsilon_sec == -30
    assert [r.line for r in parsed.rejects] == [2, 3]
    with pytest.raises(ParseError) as exc:
        audit.parse_json('[\n{"n": 1,\n')
    assert exc.value.line == 3


def test_claim_validation():
    with pytest.raises(OutOfRange):
        audit.claim_from_record({"n": 10, "epsilon_sec": 0.1, "eps_sec_log10": -1})
    with pytest.raises(OutOfRange):
        audit.claim_from_record({"n": 10.5, "epsilon_sec": 0.1})
    with pytest.raises(OutOfRange):
        audit.claim_from_record({"n": 10, "epsilon_sec": "1e-3", "colour": "red"})
    c = audit.claim_from_record({"n": "10", "epsilon_sec": "1e-5000"})
    assert c.log10_epsilon_sec == -5000.0


def test_empty_inputs_give_empty_report():
    for text in ("", "label,n,epsilon_sec\n"):
        report = audit.run_audit(audit.parse_csv(text))
        assert report.rows == [] and report.rejects == []
    assert audit.run_audit(audit.parse_json("[]")).rows == []


# -- report -----------------------------------------------------------------


def test_csv_and_json_values_identical():
    report = audit.run_audit(audit.parse_csv(CLAIMS_CSV))
    from_csv = audit.parse_report_csv(report.to_csv())
    from_json = json.loads(report.to_json())
    assert len(from_csv) == len(from_json["rows"]) == 2
    for c, j in zip(from_csv, from_json["rows"]):
        assert c["label"] == j["label"]
        for key in audit.COLUMNS:
            assert c[key] == j["values"][key]
            assert type(c[key]) is type(j["values"][key])


def test_report_footer_and_display():
    report = audit.run_audit(audit.parse_csv(CLAIMS_CSV))
    blob = report.to_dict()
    head = blob["rows"][0]
    assert head["display"]["ideal"] == "5.0e-3011"
    assert head["values"]["l_uniform"] == 22 and head["values"]["R_F"] == 0.0
    assert any("-3000" in line for line in blob["footer"])
    csv_text = report.to_csv()
    assert "# reject line 4 [bad-eps]" in csv_text
    assert "e-3011" not in csv_text.split("#")[0]


def test_jobs_keep_order():
    text = "n,eps_sec_log10\n" + "".join(f"{100 + k},-{k + 1}\n" for k in range(40))
    parsed = audit.parse_csv(text)
    assert audit.run_audit(parsed, jobs=1).to_json() == audit.run_audit(parsed, jobs=8).to_json()


# -- command line -----------------------------------------------------------


def test_evaluate_exit_codes(tmp_path, capsys):
    good = write(tmp_path, "good.csv", "label,n,epsilon_sec\nh,10000,1e-20\n")
    out = tmp_path / "r.json"
    assert cli.main(["evaluate", "--input", str(good), "--output", str(out)]) == 0
    row = json.loads(out.read_text())["rows"][0]
    assert row["values"]["p_suc_bound_log10"] == pytest.approx(-20 / 3)
    assert cli.main(["evaluate", "--input", str(write(tmp_path, "c.csv", CLAIMS_CSV))]) == 2
    assert cli.main(["evaluate", "--input", str(write(tmp_path, "e.csv", ""))]) == 0
    assert cli.main(["evaluate", "--input", str(tmp_path / "missing.csv")]) == 1
    assert cli.main(["evaluate", "--input", str(write(tmp_path, "b.json", "[{"))]) == 2
    assert cli.main(["evaluate"]) == 64


def test_evaluate_exponent_override_and_config(tmp_path, capsys):
    good = write(tmp_path, "good.csv", "n,epsilon_sec\n10000,1e-20\n")
    out = tmp_path / "r.json"
    assert cli.main(["evaluate", "--input", str(good), "--output", str(out), "--exponent", "1/2"]) == 0
    assert json.loads(out.read_text())["rows"][0]["values"]["eps_F_log10"] == pytest.approx(-10.0)
    conf = write(tmp_path, "opts.toml", f'input = "{good}"\nformat = "json"\nexponent = "1/4"\n')
    capsys.readouterr()
    assert cli.main(["evaluate", "--config", str(conf)]) == 0
    assert json.loads(capsys.readouterr().out)["rows"][0]["values"]["eps_F_log10"] == pytest.approx(-5.0)
    # explicit flag wins over the config file
    assert cli.main(["evaluate", "--config", str(conf), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("n,eps_sec_log10")
    bad_conf = write(tmp_path, "bad.json", '{"trials": 5}')
    assert cli.main(["evaluate", "--config", str(bad_conf)]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["evaluate", "--input", str(good), "--exponent", "2"])
    assert exc.value.code == 64


def test_verify_usage_and_pass(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "bogus"])
    assert exc.value.code == 64
    assert cli.main(["verify", "fvdg", "--samples", "50"]) == 0
    assert "PASS fvdg" in capsys.readouterr().out
    assert cli.main(["verify", "helstrom", "--samples", "10", "--format", "json"]) == 0
    (res,) = json.loads(capsys.readouterr().out)
    assert res["passed"] and res["violations"] == 0


def test_simulate_matches_golden_files(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["simulate", "--input", str(DATA / "seed42.json"), "--output", str(out), "--trials", "200"]) == 0
    names = sorted(p.name for p in GOLDEN.iterdir())
    assert sorted(p.name for p in out.iterdir()) == names
    for name in names:
        assert (out / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_simulate_without_trials_and_caps(tmp_path):
    out = tmp_path / "run"
    assert cli.main(["simulate", "--input", str(DATA / "seed42.json"), "--output", str(out)]) == 0
    assert not (out / "p_abort.json").exists()
    assert (out / "run.json").exists() and (out / "transcript.txt").exists()
    big = write(tmp_path, "big.json", '{"n_raw": 100}')
    assert cli.main(["simulate", "--input", str(big), "--output", str(tmp_path / "big")]) == 2
    assert not (tmp_path / "big").exists()
    assert cli.main(["simulate", "--input", str(tmp_path / "nope.json"), "--output", str(out)]) == 1


def test_simulate_seed_flag_overrides_config(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", "--input", str(DATA / "seed42.json"), "--output", str(a), "--seed", "7"]) == 0
    assert json.loads((a / "run.json").read_text())["config"]["rng_seed"] == 7
    conf = write(tmp_path, "opts.json", json.dumps({"input": str(DATA / "seed42.json"), "output": str(b), "seed": 7}))
    assert cli.main(["simulate", "--config", str(conf)]) == 0
    assert (a / "run.json").read_bytes() == (b / "run.json").read_bytes()


def test_large_key_skips_assessment(tmp_path):
    cfg = write(tmp_path, "c.json", '{"n_raw": 24, "rng_seed": 1, "sample_fraction": 0.1}')
    out = tmp_path / "o"
    assert cli.main(["simulate", "--input", str(cfg), "--output", str(out)]) == 0
    blob = json.loads((out / "assessment.json").read_text())
    assert blob["skipped"] and "limited to 6" in blob["reason"]


def test_console_entry_point_runs(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "qkdcrit.cli", "verify", "nothing"], capture_output=True, text=True
    )
    assert proc.returncode == 64
