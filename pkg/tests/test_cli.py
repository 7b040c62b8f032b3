import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gfid_sim import ConvLayerConfig, NetworkDescriptor, cli, save_network
from gfid_sim.cli import UsageError, main, parse_layers, scale_layer

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("args,name", [
    (("3", "1", "6"), "schedule_3_1_6.txt"),
    (("7", "2", "5"), "schedule_7_2_5.txt"),
    (("11", "4", "4"), "schedule_11_4_4.txt"),
    (("1", "1", "5"), "schedule_1_1_5.txt"),
])
def test_schedule_goldens(capsys, args, name):
    code, out, _ = run(capsys, "schedule", *args)
    assert code == 0
    assert out == (GOLDEN / name).read_text()


def test_schedule_shapes(capsys):
    _, out, _ = run(capsys, "schedule", "1", "1", "3")
    assert out.splitlines() == ["W1  0  0", " 0 W1  0", " 0  0 W1"]
    _, out, _ = run(capsys, "schedule", "7", "2", "5")
    lines = out.splitlines()
    assert len(lines) == 15 and len(lines[0].split()) == 5
    assert lines[6].split() == ["W7", "W5", "W3", "W1", "0"]
    assert run(capsys, "schedule", "3", "1", "100000")[0] == 2
    assert run(capsys, "schedule", "0", "1", "3")[0] == 2


@pytest.mark.parametrize("extra,name", [((), "report_alexnet.csv"),
                                        (("--compare",), "report_alexnet_compare.csv")])
def test_report_csv_golden(capsys, extra, name):
    code, out, _ = run(capsys, "report", "alexnet", "--format", "csv", *extra)
    assert code == 0
    assert out == (GOLDEN / name).read_text()


def test_report_compare_totals(capsys):
    _, out, _ = run(capsys, "report", "--network", "alexnet", "--compare", "--format", "csv")
    rows = {r["layer"]: r for r in csv.DictReader(io.StringIO(out))}
    conv = rows["conv_total"]
    assert float(conv["latency_ms"]) == pytest.approx(20.8, rel=0.05)
    assert float(conv["ref_latency_ms"]) == 20.8
    assert conv["delta_latency_ms"]


def test_report_text_and_json(capsys, tmp_path):
    code, out, _ = run(capsys, "report", "vgg16", "--layers", "1-2,14")
    assert code == 0 and "network vgg16" in out
    dest = tmp_path / "r.json"
    assert run(capsys, "report", "vgg16", "--format", "json", "--compare", "--out", str(dest))[0] == 0
    d = json.loads(dest.read_text())
    assert len(d["layers"]) == 16
    assert {r["layer"] for r in d["comparison"]["totals"]} == {"conv_total", "fc_total"}
    _, out, _ = run(capsys, "report", "alexnet", "--model", "cycle-law", "--format", "json")
    assert json.loads(out)["model"] == "cycle-law"


def test_custom_single_layer(capsys, tmp_path):
    path = tmp_path / "net.json"
    save_network(NetworkDescriptor("toy", [ConvLayerConfig(6, 6, 2, 3, 3, 1, 4)]), path)
    code, out, _ = run(capsys, "report", str(path), "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and rows[0]["cycles"] == "124"
    assert run(capsys, "report", str(path), "--compare")[0] == 2


def test_validate_toy(capsys, tmp_path):
    path = tmp_path / "pw.json"
    save_network(NetworkDescriptor("pw", [ConvLayerConfig(5, 5, 3, 1, 1, 1, 4)]), path)
    code, out, _ = run(capsys, "validate", str(path))
    assert code == 0
    assert "1/1 layers passed" in out


def test_validate_reports_divergence(capsys, monkeypatch, tmp_path):
    path = tmp_path / "pw.json"
    save_network(NetworkDescriptor("pw", [ConvLayerConfig(5, 5, 3, 3, 3, 1, 4)]), path)
    real = cli.run_conv_layer

    def broken(*a, **k):
        res = real(*a, **k)
        res.output.data.setflags(write=True)
        res.output.data[0, 0, 0] ^= 1
        return res

    monkeypatch.setattr(cli, "run_conv_layer", broken)
    code, out, _ = run(capsys, "validate", str(path))
    assert code == 1
    assert "FAIL layer 1 (3x3/s1): output differs from oracle" in out


def test_validate_alexnet_first_layer(capsys):
    code, out, err = run(capsys, "validate", "alexnet", "--scale", "3", "--layers", "1",
                         "--format", "json")
    assert code == 0
    rec = json.loads(out)[0]
    assert rec["bit_exact"] and 0 <= rec["cycle_delta"] <= rec["cycle_slack"]
    assert "1/1 layers passed" in err


def test_simulate_json(capsys):
    code, out, _ = run(capsys, "simulate", "alexnet", "--scale", "16", "--layers", "5,7",
                       "--format", "json")
    assert code == 0
    recs = json.loads(out)
    assert [r["layer"] for r in recs] == [5, 7]
    assert set(recs[0]) >= {"layer", "kind", "cycles", "ma_inputs", "ma_weights", "ma_outputs",
                            "busy_ratio", "saturations"}


def test_usage_errors(capsys):
    assert run(capsys, "report", "lenet")[0] == 2
    assert run(capsys, "report")[0] == 2
    assert run(capsys, "report", "alexnet", "--layers", "9")[0] == 2
    assert run(capsys, "report", "alexnet", "--network", "vgg16")[0] == 2
    assert run(capsys, "simulate", "alexnet", "--scale", "0")[0] == 2
    assert run(capsys, "report", "alexnet", "--out", "/nonexistent/dir/x.csv")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["report", "alexnet", "--format", "xml"])
    assert exc.value.code == 2


def test_parse_layers():
    assert parse_layers("1-3,7", 8) == [1, 2, 3, 7]
    assert parse_layers(None, 3) == [1, 2, 3]
    for bad in ("0", "3-1", "x", "9"):
        with pytest.raises(UsageError):
            parse_layers(bad, 8)


def test_scale_layer():
    cfg = ConvLayerConfig(13, 13, 192, 3, 3, 1, 256, groups=2)
    small = scale_layer(cfg, 64)
    assert (small.c_in, small.c_out, small.groups) == (4, 4, 2)
    assert scale_layer(cfg, 1) == cfg


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gfid_sim", "schedule", "3", "1", "6"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout == (GOLDEN / "schedule_3_1_6.txt").read_text()
