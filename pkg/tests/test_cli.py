import json

import pytest

from nacnet.cli import main
from nacnet.harness import bundled_path


def test_demo_table(capsys):
    assert main(["demo", "battlefield"]) == 0
    out = capsys.readouterr().out
    assert "NotAuthorized" in out and "trace digest" in out


def test_run_json_report_and_figures(tmp_path, capsys):
    report = tmp_path / "r.json"
    figs = tmp_path / "figs"
    assert main(["run", str(bundled_path("battlefield")), "--format", "json", "--report", str(report),
                 "--figures", str(figs)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc == json.loads(report.read_text())
    written = sorted(p.name for p in figs.iterdir())
    assert any(n.endswith(".png") for n in written) and any(n.endswith(".csv") for n in written)
    for png in figs.glob("*.png"):
        assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_run_csv(capsys):
    assert main(["run", str(bundled_path("outage")), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("index,action,entity,name,result\n")


def test_keys_lists_only_key_names(capsys):
    assert main(["keys", str(bundled_path("battlefield"))]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.split("\t")[0] in ("kek", "kdk", "ck") for line in lines)


def test_bundled_name_accepted_in_place_of_a_path(capsys):
    assert main(["keys", "outage"]) == 0
    by_name = capsys.readouterr().out
    assert main(["keys", str(bundled_path("outage"))]) == 0
    assert capsys.readouterr().out == by_name


def test_scale_match_and_figures(tmp_path, capsys):
    assert main(["scale", "--scheme", "nac", "--n", "3", "--m", "2", "--figures", str(tmp_path)]) == 0
    assert "match" in capsys.readouterr().out
    assert (tmp_path / "scaling.png").exists()


def test_scale_json(capsys):
    assert main(["scale", "--scheme", "nac-abe", "--n", "2", "--m", "1", "--a", "2", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["match"] and doc["measured"]["attribute-key"] == 2


def test_sizes_csv(capsys, tmp_path):
    assert main(["sizes", "--scheme", "nac", "--format", "csv", "--figures", str(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "packet,size,signature_type,name" and len(out) == 5
    assert (tmp_path / "packet_sizes_nac.png").exists()


def test_tamper(capsys):
    assert main(["tamper", "--trials", "6", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["detected"] == 6 and doc["wrong_plaintext"] == 0


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"scheme": "nac", "entities": {}}))
    assert main(["run", str(bad)]) == 2
    assert "topology" in capsys.readouterr().err


def test_bad_scale_params_exit_code(capsys):
    assert main(["scale", "--scheme", "nac", "--n", "-1", "--m", "1"]) == 2


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
