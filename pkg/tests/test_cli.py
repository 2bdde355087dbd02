import csv
import io
import json
import math
import subprocess
import sys
import time

import pytest

from doublelambda import checks, cli
from doublelambda.checks import CheckResult

FIGURE_COMMANDS = ["fig2", "fig3a", "fig3b", "fig4a", "fig4b", "fig4c", "fig5a", "fig5b"]

HEADERS = {
    "fig2": "phi_r,T_p,T_s,dphi_p,dphi_s",
    "fig3a": "od,p_1p0s,p_0p1s",
    "fig3b": "u,delta_probe,delta_signal",
    "fig4a": "delta,p_2p0s,p_0p2s,p_1p1s",
    "fig4b": "od,p_2p0s,p_0p2s,sum",
    "fig4c": "od,noon_fidelity_sqrt,noon_fidelity_linear",
    "fig5a": "od,mean_fidelity,std_fidelity",
    "fig5b": "input,output,probability",
}


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")


def invoke(capsys, *argv):
    code = cli.run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def table(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], [[float(v) for v in row] for row in rows[1:]]


@pytest.mark.parametrize("command", FIGURE_COMMANDS)
def test_figure_header_and_timing(capsys, command):
    start = time.perf_counter()
    code, out, _ = invoke(capsys, command)
    assert time.perf_counter() - start < 60
    assert code == 0
    assert out.splitlines()[0] == HEADERS[command]
    if command != "fig5b":
        assert len(out.splitlines()) == 401


@pytest.mark.parametrize("command", ["fig2", "fig3b", "fig5b"])
def test_output_is_deterministic(capsys, tmp_path, command):
    paths = [tmp_path / f"{command}_{i}.csv" for i in range(2)]
    for path in paths:
        assert invoke(capsys, command, "--points", "37", "--out", str(path))[0] == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_worker_pool_matches_serial(capsys, monkeypatch):
    serial = invoke(capsys, "fig4c", "--points", "24")[1]
    monkeypatch.setenv(cli.WORKERS_ENV, "2")
    pooled = invoke(capsys, "fig4c", "--points", "24")[1]
    assert pooled == serial


def test_bad_worker_count(capsys, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "zero")
    code, _, err = invoke(capsys, "fig4c", "--points", "4")
    assert code == 1 and cli.WORKERS_ENV in err


def test_hom_dip_location(capsys):
    code, out, _ = invoke(capsys, "fig4a", "--od", "200", "--points", "400")
    assert code == 0
    _, rows = table(out)
    best = min(rows, key=lambda r: r[3])
    assert best[0] == pytest.approx(200 / math.pi, abs=0.4)
    assert best[3] <= 1e-3


def test_twelve_significant_digits(capsys):
    _, out, _ = invoke(capsys, "fig2", "--points", "3")
    line = out.splitlines()[2]
    assert line.split(",")[0] == f"{math.pi:.12g}"


def test_fig3b_intersection(capsys):
    _, out, _ = invoke(capsys, "fig3b", "--u-min", "1", "--u-max", "2", "--points", "2")
    _, rows = table(out)
    assert rows[0][1] == pytest.approx(rows[0][2])
    assert rows[0][1] == pytest.approx(63.6463, abs=1e-3)


def test_fig5b_rows_sum_to_one(capsys):
    _, out, _ = invoke(capsys, "fig5b")
    rows = list(csv.DictReader(io.StringIO(out)))
    for label in ("00", "10", "01", "11"):
        total = sum(float(r["probability"]) for r in rows if r["input"] == label)
        assert total == pytest.approx(1.0, abs=1e-10)


def test_json_format(capsys):
    code, out, _ = invoke(capsys, "fig4b", "--points", "5", "--format", "json")
    assert code == 0
    body = json.loads(out)
    assert body["columns"] == HEADERS["fig4b"].split(",")
    assert len(body["rows"]) == 5
    for _, p20, p02, total in body["rows"]:
        assert total == pytest.approx(p20 + p02, abs=1e-11)


def test_transfer_transparent(capsys):
    code, out, _ = invoke(capsys, "transfer", "--od", "0")
    assert code == 0
    body = json.loads(out)
    assert (body["A"]["re"], body["A"]["im"]) == (1.0, 0.0)
    assert (body["B"]["re"], body["B"]["im"]) == (0.0, 0.0)


def test_transfer_values(capsys):
    _, out, _ = invoke(capsys, "transfer", "--od", "200", "--delta", str(200 / math.pi))
    body = json.loads(out)
    assert body["A"]["abs2"] == pytest.approx(0.488154, abs=1e-6)
    assert body["probe_loss"] == pytest.approx(0.024069, abs=1e-6)


def test_transfer_requires_od(capsys):
    code, _, err = invoke(capsys, "transfer")
    assert code == 1 and "--od" in err


def test_domain_error_names_flag(capsys):
    code, _, err = invoke(capsys, "transfer", "--od", "-1")
    assert code == 2 and "--od" in err


def test_usage_errors(capsys):
    assert invoke(capsys, "fig9")[0] == 1
    assert invoke(capsys, "fig2", "--points", "1")[0] == 1
    assert invoke(capsys, "fig2", "--bogus")[0] == 1
    code, _, err = invoke(capsys, "fig4c", "--delta", "3", "--delta-rule", "od/pi")
    assert code == 1 and "mutually exclusive" in err


def test_check_passes(capsys):
    code, out, _ = invoke(capsys, "check")
    assert code == 0
    assert out.strip().endswith("all checks passed")
    assert out.count("PASS") == 7


def test_check_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(checks, "run_all", lambda: [CheckResult("forced", 1.0, 1e-9, 1)])
    code, out, _ = invoke(capsys, "check")
    assert code == 3 and "FAIL" in out


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"od": 100.0, "points": 5}))
    _, from_file, _ = invoke(capsys, "--config", str(cfg), "fig4a")
    _, explicit, _ = invoke(capsys, "fig4a", "--od", "100", "--points", "5")
    assert from_file == explicit
    _, overridden, _ = invoke(capsys, "--config", str(cfg), "fig4a", "--points", "7")
    assert len(overridden.splitlines()) == 8


def test_config_rejects_unknown_keys(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"opacity": 3}))
    code, _, err = invoke(capsys, "--config", str(cfg), "fig4a")
    assert code == 1 and "opacity" in err
    code, _, _ = invoke(capsys, "--config", str(tmp_path / "missing.json"), "fig4a")
    assert code == 1


def test_module_entry_point(tmp_path):
    out = tmp_path / "fig4a.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "doublelambda", "fig4a", "--points", "3", "--out", str(out)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().splitlines()[0] == HEADERS["fig4a"]
