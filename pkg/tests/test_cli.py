import json
import subprocess
import sys

import pytest

from dacperc import RectRegion, Topology, Window, load_bonds, sample_bonds
from dacperc.cli import main


def read(path):
    return path.read_text().splitlines()


def data_rows(lines):
    body = [l for l in lines if not l.startswith("#")]
    return body[0].split(","), [l.split(",") for l in body[1:]]


def test_estimate_csv_layout(tmp_path):
    out = tmp_path / "est.csv"
    rc = main(["estimate", "p=0.3", "r=0.4,0.6", "n=6", "n_samples=500",
               "--out", str(out)])
    assert rc == 0
    lines = read(out)
    header = [l for l in lines if l.startswith("#")]
    keys = [l.split(" = ")[0][2:] for l in header]
    assert keys == sorted(keys)
    assert "threads" not in keys
    assert "# pad = -1" in header
    cols, rows = data_rows(lines)
    assert cols[:3] == ["topology", "p", "r"]
    assert len(rows) == 2
    vals = [float(row[cols.index("value")]) for row in rows]
    assert vals[0] <= vals[1]  # black crossing probability rises with r


def test_reruns_and_thread_counts_are_byte_identical(tmp_path):
    args = ["estimate", "p=0.3", "r=0.5", "n=6", "n_samples=400"]
    a, b, c = (tmp_path / x for x in ("a.csv", "b.csv", "c.csv"))
    assert main(args + ["--out", str(a), "--threads", "1"]) == 0
    assert main(args + ["--out", str(b), "--threads", "4"]) == 0
    assert main(args + ["--out", str(c), "--threads", "1"]) == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_json_format(tmp_path):
    out = tmp_path / "est.json"
    assert main(["estimate", "p=0.3", "r=0.5", "n=4", "n_samples=300",
                 "--format", "json", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert set(payload) == {"config", "columns", "rows"}
    assert "threads" not in payload["config"]
    assert len(payload["rows"]) == 1
    assert len(payload["rows"][0]) == len(payload["columns"])


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 0.25, "seed": 3, "n": 4}))
    out = tmp_path / "est.csv"
    rc = main(["estimate", "p=0.3", "seed=5", "r=0.5", "n_samples=200",
               "--config", str(cfg), "--seed", "9", "--out", str(out)])
    assert rc == 0
    header = [l for l in read(out) if l.startswith("#")]
    assert "# p = 0.3" in header       # token beats config file
    assert "# seed = 9" in header      # flag beats token
    assert "# n = 4" in header         # config file beats default


@pytest.mark.parametrize(
    "argv",
    [
        ["estimate", "p=0.3", "r=0.5", "bogus=1"],
        ["estimate", "r=0.5"],                       # p is required
        ["estimate", "p=abc", "r=0.5"],
        ["estimate", "p=0.3", "r=0.5", "event=banana"],
        ["estimate", "p=0.3", "r=0.5", "direction=diagonal"],
        ["estimate", "p=0.3", "r=1.5"],
        ["estimate", "p=0.3", "r=0.5", "nonsense-token"],
        ["decay", "p=0.3", "kind=banana", "n_samples=100"],
        ["sample", "p=0.3"],                         # sample requires --out
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error:" in capsys.readouterr().err


def test_bad_config_files_exit_1(tmp_path, capsys):
    assert main(["estimate", "p=0.3", "r=0.5", "--config",
                 str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert main(["estimate", "p=0.3", "r=0.5", "--config", str(bad)]) == 1
    unknown = tmp_path / "unk.json"
    unknown.write_text(json.dumps({"wibble": 1}))
    assert main(["estimate", "p=0.3", "r=0.5", "--config", str(unknown)]) == 1
    capsys.readouterr()


def test_sample_dump_roundtrip(tmp_path, capsys):
    out = tmp_path / "bonds.bin"
    assert main(["sample", "p=0.4", "n=8", "seed=2", "--out", str(out)]) == 0
    assert "wrote" in capsys.readouterr().out
    b = load_bonds(str(out))
    want = sample_bonds(Topology.SQUARE, Window.around(RectRegion(0, 8, 0, 8)), 0.4, 2)
    assert b.topology is want.topology
    assert b.window == want.window
    assert (b.states == want.states).all()


def test_rc_reports_duality_partner(tmp_path):
    out = tmp_path / "rc.csv"
    assert main(["rc", "p=0.3", "n=6", "n_samples=1000", "--out", str(out)]) == 0
    cols, rows = data_rows(read(out))
    assert len(rows) == 2
    assert [r[cols.index("direction")] for r in rows] == ["vertical", "horizontal"]
    assert [r[cols.index("mode")] for r in rows] == ["ordinary", "star"]
    sums = {r[cols.index("duality_sum")] for r in rows}
    assert len(sums) == 1
    assert 0.9 <= float(sums.pop()) <= 1.1


def test_decay_table(tmp_path):
    out = tmp_path / "decay.csv"
    assert main(["decay", "p=0.2", "n_max=8", "n_samples=2000",
                 "--out", str(out)]) == 0
    cols, rows = data_rows(read(out))
    assert len(rows) == 8
    surv = [float(r[cols.index("survival")]) for r in rows]
    assert surv == sorted(surv, reverse=True)
    assert float(rows[0][cols.index("slope")]) < 0


def test_estimate_other_event_kinds(tmp_path):
    out = tmp_path / "ev.csv"
    assert main(["estimate", "p=0.3", "r=0.37", "event=vertex", "vertex=2,3",
                 "n_samples=4000", "--out", str(out)]) == 0
    cols, rows = data_rows(read(out))
    v = float(rows[0][cols.index("value")])
    se = float(rows[0][cols.index("stderr")])
    assert abs(v - 0.37) <= 4 * se + 1e-9  # vertex marginal is exactly r

    assert main(["estimate", "p=0.3", "r=0.5", "event=circuit", "m=1",
                 "colour=white", "mode=star", "n_samples=300",
                 "--out", str(out)]) == 0
    cols, rows = data_rows(read(out))
    assert rows[0][cols.index("event")] == "circuit:white:star:m=1"


def test_verify_passes(capsys):
    assert main(["verify", "seed=1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    checks = [l for l in lines if l.startswith(("PASS", "FAIL"))]
    assert len(checks) >= 6
    assert all(l.startswith("PASS") for l in checks)


def test_installed_script():
    proc = subprocess.run(
        [sys.executable, "-m", "dacperc.cli", "estimate", "p=0.3", "r=0.5",
         "n=4", "n_samples=100"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "value" in proc.stdout
    none = subprocess.run([sys.executable, "-m", "dacperc.cli"],
                          capture_output=True, text=True)
    assert none.returncode == 1
