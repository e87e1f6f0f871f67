import json
import subprocess
import sys

import pytest

from scottrank.cli import main
from scottrank.fixtures import SPACE_PATH3


@pytest.fixture
def path3(tmp_path):
    p = tmp_path / "path3.json"
    p.write_text(SPACE_PATH3.dumps())
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_validate(capsys, path3, tmp_path):
    assert run(capsys, "validate", "--space", path3)[:2] == (0, {"valid": True})
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"dist": [["0", "1"], ["2", "0"]]}))
    code, doc, _ = run(capsys, "validate", "--space", str(bad))
    assert code == 2 and doc["valid"] is False and doc["violations"][0]["indices"] == [0, 1]


def test_rank(capsys, path3):
    code, doc, _ = run(capsys, "rank", "--space", path3, "--a", "0", "--b", "1")
    assert code == 0 and doc == {"sr": "1", "r_upper": "1", "sr_le_r": True}
    code, doc, _ = run(capsys, "rank", "--space", path3, "--a", "A", "--b", "C")
    assert doc == {"sr": "inf", "r_upper": "inf", "sr_le_r": True}


def test_cas_search_exhaustion(capsys, path3):
    code, doc, _ = run(capsys, "cas", "search", "--space", path3, "--a", "0", "--b", "1", "--depth", "3")
    assert code == 0 and doc["exhausted"] and not doc["found"] and "max_depth" in doc


def test_certificates_round_trip(capsys, path3, tmp_path):
    cert = tmp_path / "c.json"
    for args in (["ef", "solve", "--alpha", "2", "--a", "0", "--b", "2"],
                 ["ef", "solve", "--alpha", "omega", "--a", "0", "--b", "2"],
                 ["ef", "distinguish", "--a", "0", "--b", "1"]):
        assert run(capsys, *args, "--space", path3, "--emit", str(cert))[0] == 0
        code, doc, _ = run(capsys, "ef", "check", "--space", path3, "--cert", str(cert))
        assert code == 0 and doc["ok"]
    run(capsys, "game", "solve", "--space", path3, "--a", "0", "--b", "1", "--alpha", "2",
        "--f", "geometric:1/4,1/2", "--emit", str(cert))
    code, doc, _ = run(capsys, "game", "check", "--space", path3, "--cert", str(cert))
    assert code == 0 and doc["ok"]


def test_corrupt_certificate_fails_check(capsys, path3, tmp_path):
    cert = tmp_path / "c.json"
    run(capsys, "ef", "solve", "--space", path3, "--a", "0", "--b", "2", "--alpha", "1", "--emit", str(cert))
    doc = json.loads(cert.read_text())
    doc["tree"]["children"][0]["node"]["move"] = 1  # answer A with B
    cert.write_text(json.dumps(doc))
    code, report, _ = run(capsys, "ef", "check", "--space", path3, "--cert", str(cert))
    assert code == 2 and not report["ok"] and report["failures"]


def test_replay(capsys, path3, tmp_path):
    cert, script = tmp_path / "c.json", tmp_path / "s.json"
    run(capsys, "ef", "distinguish", "--space", path3, "--a", "0", "--b", "1", "--emit", str(cert))
    script.write_text("[1]")
    code, doc, _ = run(capsys, "ef", "replay", "--space", path3, "--cert", str(cert), "--script", str(script))
    assert code == 0 and doc["winner"] == 1
    script.write_text("[]")
    assert run(capsys, "ef", "replay", "--space", path3, "--cert", str(cert), "--script", str(script))[0] == 2


def test_cas_pipeline(capsys, tmp_path):
    sys_file = tmp_path / "k.json"
    code, doc, _ = run(capsys, "cas", "extract", "--space", "square", "--a", "0", "--b", "2", "--depth", "3",
                       "--emit", str(sys_file))
    assert code == 0 and doc["depth"] == 3
    assert run(capsys, "cas", "verify", "--space", "square", "--cert", str(sys_file))[1]["ok"]
    iso = run(capsys, "cas", "isometry", "--space", "square", "--cert", str(sys_file))[1]
    assert iso["map"] == [2, 1, 0, 3] and iso["distance_preserving"]
    assert run(capsys, "cas", "stream", "--space", "path3", "--a", "0", "--b", "2")[1]["map"] == [2, 1, 0]
    assert run(capsys, "cas", "build", "--space", "line", "--depth", "2")[1]["terminal_depth"] == 0


def test_other_commands(capsys):
    assert run(capsys, "space-rank", "--space", "path3")[1]["rank"] == "2"
    auto = run(capsys, "auto", "--space", "square")[1]
    assert auto["count"] == 8
    assert run(capsys, "oracle", "--space", "path3", "--a", "0", "--b", "1")[1]["rank"] == "1"


def test_error_exit_codes(capsys, path3, monkeypatch):
    assert run(capsys, "rank", "--space", path3, "--a", "0", "--b", "0,1")[0] == 2
    assert run(capsys, "rank", "--space", path3, "--a", "0", "--b", "1", "--f", "geometric:x,1")[0] == 2
    assert run(capsys, "ef", "solve", "--space", path3, "--a", "0", "--b", "1")[0] == 2  # no --alpha
    assert run(capsys, "validate", "--space", "/nonexistent.json")[0] == 2
    monkeypatch.setenv("SCOTT_JOBS", "zero")
    assert run(capsys, "validate", "--space", path3)[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["rank", "--bogus"])
    assert exc.value.code == 2


def test_internal_error_exit_code(capsys, path3, monkeypatch):
    from scottrank import analysis
    from scottrank.errors import InternalError

    def boom(*a, **k):
        raise InternalError("broken invariant")

    monkeypatch.setattr(analysis, "scott_rank_space", boom)
    assert run(capsys, "space-rank", "--space", path3)[0] == 3


def test_output_is_stable(path3):
    cmd = [sys.executable, "-m", "scottrank.cli", "ef", "solve", "--space", path3, "--a", "0", "--b", "2",
           "--alpha", "2"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert first == subprocess.run(cmd, capture_output=True, check=True).stdout
