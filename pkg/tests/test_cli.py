import json
import subprocess
import sys

import pytest

from godrons.cli import main
from godrons.jsonio import validate

NF = "y^2/2 - x^2*y + x^4"
W = ["--window", "-0.4,0.4,-0.4,0.4", "--res", "128"]


def test_analyze_writes_json_and_svg(tmp_path, capsys):
    out, svg = tmp_path / "a.json", tmp_path / "a.svg"
    assert main(["analyze", NF, *W, "--json", str(out), "--svg", str(svg)]) == 0
    data = json.loads(out.read_text())
    assert len(data["godrons"]) == 1 and data["godrons"][0]["index"] == 1
    assert svg.read_text().startswith("<?xml")
    assert "1 godron(s)" in capsys.readouterr().out


def test_analyze_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["analyze", NF, *W, "--json", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_output_is_schema_valid(tmp_path):
    pytest.importorskip("jsonschema")
    out = tmp_path / "a.json"
    assert main(["analyze", "x*y*(1-x-y)", "--window", "-1,2,-1,2", "--res", "64", "--global", "--json", str(out)]) == 0
    validate(json.loads(out.read_text()))


def test_surface_from_file_and_parameters(tmp_path):
    src = tmp_path / "s.txt"
    src.write_text("# normal form\ny^2/2 - x^2*y + a*x^4\n")
    out = tmp_path / "a.json"
    assert main(["analyze", str(src), *W, "--set", "a=0.25", "--json", str(out)]) == 0
    assert json.loads(out.read_text())["godrons"][0]["index"] == -1


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "x^2 +* y", "--json", "{out}"],
        ["analyze", NF, "--window", "1,0,0,1", "--json", "{out}"],
        ["analyze", NF, "--window", "0,1", "--json", "{out}"],
        ["analyze", NF, "--set", "a", "--json", "{out}"],
        ["analyze", NF],
        ["render", "{missing}", "--svg", "{out}"],
        ["scan", NF, "--param", "a", "--range", "1,0", "--step", "0.1", "--json", "{out}"],
        ["frobnicate"],
    ],
)
def test_bad_input_exits_one(tmp_path, argv):
    fill = {"out": str(tmp_path / "o"), "missing": str(tmp_path / "none.json")}
    assert main([a.format(**fill) for a in argv]) == 1


def test_render_reproduces_svg(tmp_path):
    out, svg1, svg2 = tmp_path / "a.json", tmp_path / "1.svg", tmp_path / "2.svg"
    assert main(["analyze", NF, *W, "--json", str(out), "--svg", str(svg1)]) == 0
    assert main(["render", str(out), "--svg", str(svg2)]) == 0
    assert svg1.read_bytes() == svg2.read_bytes()


def test_negative_window_values(tmp_path):
    out = tmp_path / "a.json"
    assert main(["analyze", NF, "--window", "-0.4,0.4,-0.4,0.4", "--res", "64", "--json", str(out)]) == 0
    assert json.loads(out.read_text())["window"] == [-0.4, 0.4, -0.4, 0.4]


def test_scan_reports_events(tmp_path):
    out = tmp_path / "s.json"
    argv = ["scan", "y^2/2 - x^2*y + r/2*x^4 + x^5", "--param", "r", "--range", "-0.3,0.3", "--step", "0.1", "--json", str(out)]
    assert main(argv) == 0
    events = json.loads(out.read_text())["events"]
    assert any(e["kind"] == "flec-godron" and abs(e["value"]) < 1e-3 for e in events)


def test_module_entry_point(tmp_path):
    out = tmp_path / "a.json"
    r = subprocess.run([sys.executable, "-m", "godrons.cli", "analyze", "x^2+y^2", "--res", "32", "--json", str(out)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads(out.read_text())["godrons"] == []
    r = subprocess.run([sys.executable, "-m", "godrons.cli", "analyze", "x^"], capture_output=True, text=True)
    assert r.returncode == 1 and "error" in r.stderr
