import csv
import json

import numpy as np
import pytest

from bgrisk import cli
from bgrisk.schemas import NOISE, VERDICT, validate

from conftest import DATA

BIN = str(DATA / "binary_12_10.json")
ZERO = str(DATA / "zero.json")
ONE = str(DATA / "one.json")
SPREAD = str(DATA / "spread.json")


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def constructed(tmp_path_factory):
    out = tmp_path_factory.mktemp("construct")
    code = run("construct", "--x", BIN, "--y", ZERO, "--out", out)
    return code, out


def test_construct_binary(constructed):
    code, out = constructed
    assert code == cli.EXIT_OK
    for name in ("noise.json", "verdict.json", "cdfs.csv", "config.json"):
        assert (out / name).exists()
    verdict = json.loads((out / "verdict.json").read_text())
    validate(verdict, VERDICT)
    assert verdict["relation"] == "FIRST_STRICT"
    validate(json.loads((out / "noise.json").read_text()), NOISE)
    with open(out / "cdfs.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "F_X+Z", "F_Y+Z", "gap"]
    gap = np.array([float(r[3]) for r in rows[1:]])
    assert gap.min() >= -1e-9


def test_construct_rerun_is_byte_identical(constructed, tmp_path):
    _, out = constructed
    before = {p.name: p.read_bytes() for p in out.iterdir()}
    assert run("construct", "--x", BIN, "--y", ZERO, "--out", out) == cli.EXIT_OK
    after = {p.name: p.read_bytes() for p in out.iterdir()}
    assert before == after


def test_construct_equal_gambles_infeasible(tmp_path, capsys):
    assert run("construct", "--x", ZERO, "--y", ZERO, "--out", tmp_path) == cli.EXIT_INFEASIBLE
    assert "E[X] ≤ E[Y]" in capsys.readouterr().err


def test_construct_second_order_spread(tmp_path):
    assert run("construct", "--x", ZERO, "--y", SPREAD, "--order", 2, "--out", tmp_path) == cli.EXIT_OK
    assert json.loads((tmp_path / "verdict.json").read_text())["relation"] == "SECOND_STRICT"


def test_construct_second_order_wrong_direction(tmp_path):
    assert run("construct", "--x", SPREAD, "--y", ZERO, "--order", 2, "--out", tmp_path) == cli.EXIT_INFEASIBLE


def test_missing_input_is_io_error(tmp_path):
    assert run("construct", "--x", tmp_path / "nope.json", "--y", ZERO, "--out", tmp_path) == cli.EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("verify", "--x", bad, "--y", ZERO) == cli.EXIT_IO


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"order": 2, "points": 11}))
    out = tmp_path / "o"
    assert run("construct", "--x", ZERO, "--y", SPREAD, "--config", cfg, "--out", out) == cli.EXIT_OK
    eff = json.loads((out / "config.json").read_text())
    assert eff["order"] == 2 and eff["points"] == 11
    assert len((out / "cdfs.csv").read_text().splitlines()) == 12
    # a flag beats the file
    out2 = tmp_path / "o2"
    assert run("construct", "--x", ZERO, "--y", SPREAD, "--config", cfg, "--points", 5,
               "--out", out2) == cli.EXIT_OK
    assert json.loads((out2 / "config.json").read_text())["points"] == 5


def test_bad_tolerance_rejected(tmp_path):
    assert run("construct", "--x", BIN, "--y", ZERO, "--tol", -1, "--out", tmp_path) == cli.EXIT_IO


@pytest.mark.parametrize("x,y,order,expected", [
    (BIN, ZERO, 1, "NONE"),
    (ONE, ZERO, 1, "FIRST_STRICT"),
    (ZERO, SPREAD, 2, "SECOND_STRICT"),
    (ZERO, ZERO, 1, "EQUAL_DISTRIBUTION"),
])
def test_verify(capsys, x, y, order, expected):
    assert run("verify", "--x", x, "--y", y, "--order", order) == cli.EXIT_OK
    assert json.loads(capsys.readouterr().out)["relation"] == expected


def test_verify_with_noise(constructed, capsys):
    _, out = constructed
    assert run("verify", "--x", BIN, "--y", ZERO, "--noise", out / "noise.json") == cli.EXIT_OK
    assert json.loads(capsys.readouterr().out)["relation"] == "FIRST_STRICT"


def test_verify_grid_csv(tmp_path, capsys):
    from bgrisk.measures import gaussian_grid

    a, b = gaussian_grid(1.0, 0.05, mean=1.0), gaussian_grid(1.0, 0.05)
    (tmp_path / "a.csv").write_text(a.to_csv())
    (tmp_path / "b.csv").write_text(b.to_csv())
    assert run("verify", "--x", tmp_path / "a.csv", "--y", tmp_path / "b.csv") == cli.EXIT_OK
    assert json.loads(capsys.readouterr().out)["relation"] == "FIRST_STRICT"


def _table(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_table1_default(tmp_path):
    assert run("table1", "--out", tmp_path) == cli.EXIT_OK
    rows = _table(tmp_path / "table1.csv")
    assert len(rows) == 5 and all(r["within_tol"] == "True" for r in rows)
    assert {"g", "l", "sigma_W", "c", "sigma_Z", "c_err", "sigma_Z_rel_err"} <= set(rows[0])


def test_table1_filter(tmp_path):
    assert run("table1", "--rows", "100,70", "--out", tmp_path) == cli.EXIT_OK
    rows = _table(tmp_path / "table1.csv")
    assert [(r["g"], r["l"]) for r in rows] == [("100.0", "70.0")]


def test_table1_sigma_override_monotone(tmp_path):
    cs = []
    for s in (4000, 8000):
        out = tmp_path / str(s)
        assert run("table1", "--rows", "12,10", "--sigma-w", s, "--out", out) == cli.EXIT_OK
        (row,) = _table(out / "table1.csv")
        assert row["c_ref"] == ""
        cs.append(float(row["c"]))
    assert cs[0] > cs[1]


def test_table1_direct_convention_misses(tmp_path):
    # the other kernel convention does not reproduce the reference values
    assert run("table1", "--kernel-convention", "direct", "--out", tmp_path) == cli.EXIT_VERIFY


def test_ordinalize_fixture(tmp_path):
    mech = DATA / "crossing_2x3.json"
    assert run("ordinalize", "--mechanism", mech, "--simulate", 2, "--trials", 2000,
               "--out", tmp_path) == cli.EXIT_OK
    cert = json.loads((tmp_path / "certification.json").read_text())
    assert cert["certified"] and len(cert["certificates"]) == 12
    sim = json.loads((tmp_path / "simulation.json").read_text())
    assert sim["passed"] and sim["violations"] == []
    assert json.loads((tmp_path / "bic_report.json").read_text())["passed"]


def test_ordinalize_zero_gap(tmp_path):
    assert run("ordinalize", "--mechanism", DATA / "zero_gap.json", "--out", tmp_path) == cli.EXIT_INFEASIBLE


def test_sample(constructed, tmp_path):
    _, out = constructed
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run("sample", "--noise", out / "noise.json", "--n", 5000, "--seed", 4,
                   "--out", d) == cli.EXIT_OK
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()
    side = json.loads((a / "samples.json").read_text())
    assert side["seed"] == 4 and side["n"] == 5000
