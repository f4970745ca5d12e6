import csv
import json
from fractions import Fraction
from pathlib import Path

import pytest

from wallcross.chambers import RADIUS_WARNING
from wallcross.cli import main, run
from wallcross.config import ConfigError, config_from_dict, parse_config

from conftest import make_e1, make_e5

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
E1 = CONFIGS / "e1.json"
E5 = CONFIGS / "e5.json"


def load(path):
    return json.loads(Path(path).read_text())


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_parse_e1_gives_valid_bundle():
    assert parse_config(E1).to_bundle() == make_e1()
    assert parse_config(E5).to_bundle() == make_e5()


def test_round_trip_is_canonical(tmp_path):
    cfg = parse_config(E5)
    again = parse_config(write(tmp_path, json.loads(cfg.dumps())))
    assert again == cfg
    assert again.dumps() == cfg.dumps()


def test_edge_order_error(tmp_path):
    data = load(E1)
    data["edges"] = [[2, 1]]
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, data))
    assert any("edge must satisfy i < j" in e for e in exc.value.errors)


def test_unequal_slopes_error_names_pieces(tmp_path):
    data = load(E1)
    data["omega"] = ["2", "1"]
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, data))
    msg = " ".join(exc.value.errors)
    assert "unequal slopes" in msg and "pieces 1 and 2" in msg and "degrees 1 and 3" in msg


@pytest.mark.parametrize(
    "mutate,needle",
    [
        (lambda d: d["omega"].__setitem__(0, "1/0"), "omega[0]: malformed rational"),
        (lambda d: d["omega"].__setitem__(0, "x"), "omega[0]: malformed rational"),
        (lambda d: d["pieces"][0].__setitem__("rank", 0), "pieces[0].rank: must be a positive integer"),
        (lambda d: d.__setitem__("edges", []), "quiver disconnected"),
        (lambda d: d.__setitem__("colour", "blue"), "colour: unknown field"),
        (lambda d: d["intersection"][0].__setitem__("index", [2, 1]), "must be sorted"),
        (lambda d: d.__setitem__("magnitudes", {"1,2": -1}), "must be a positive number"),
        (lambda d: d.__setitem__("magnitudes", {"1,3": 1}), "not an edge"),
    ],
)
def test_config_errors(tmp_path, mutate, needle):
    data = load(E1)
    mutate(data)
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, data))
    assert any(needle in e for e in exc.value.errors), exc.value.errors


def test_magnitudes_parsed():
    data = load(E5)
    data["magnitudes"] = {"2,3": 1000.0}
    cfg = config_from_dict(data)
    assert cfg.edge_magnitudes() == {(1, 2): 1000.0}


def test_classify_command():
    code, report = run(["classify", str(E1), "--eps", "0,1/3"])
    assert code == 0
    assert report["results"]["label"] == "Stable"
    assert report["results"]["min_nu"] == "1/3"
    assert report["format_version"] == 1
    assert RADIUS_WARNING in report["warnings"]


def test_solve_apex_is_an_answer():
    code, report = run(["solve", str(E1), "--eps", "0,0"])
    assert code == 0
    assert report["results"]["status"] == "NoSolution"
    assert report["results"]["reason"] == "apex"


def test_solve_stable():
    code, report = run(["solve", str(E5), "--eps", "0,1/2,1/8"])
    assert code == 0
    res = report["results"]
    assert res["status"] == "Solved" and res["membership"] == "Interior"
    assert abs(res["t"]["2,3"] - 0.125) < 1e-10


def test_nonconvergence_exit_code():
    code, report = run(["solve", str(E5), "--eps", "0,1/2,1/8", "--max-iter", "1"])
    assert code == 3
    assert report["results"]["status"] == "MaxIterations"


def test_path_command_csv(tmp_path):
    out = tmp_path / "path.csv"
    args = ["path", str(E5), "--eps-from", "0,1/2,1/10", "--eps-to", "0,1/2,0", "--geometric", "--steps", "10", "--out", str(out)]
    code, report = run(args)
    assert code == 0
    rows = list(csv.DictReader(open(out)))
    t23 = [float(r["t_2_3"]) for r in rows]
    assert all(a > b for a, b in zip(t23, t23[1:]))
    assert t23[-1] < 1e-8
    assert report["results"]["limit_support"]["confirmed"]
    assert report["results"]["degeneration"]["filtration"] == ["{}", "{1,2}", "{1,2,3}"]
    again = tmp_path / "again.csv"
    run(args[:-1] + [str(again)])
    assert out.read_bytes() == again.read_bytes()


def test_path_linear(tmp_path):
    code, report = run(["path", str(E1), "--eps-from", "0,1", "--eps-to", "0,0", "--linear", "--steps", "4"])
    assert code == 0
    assert report["results"]["statuses"]["Solved"] == 4


def test_chambers_command(tmp_path):
    out = tmp_path / "grid.csv"
    code, report = run(["chambers", str(E5), "--radius", "1", "--plane", "2,3", "--grid", "5", "--out", str(out), "--threads", "2"])
    assert code == 0
    assert RADIUS_WARNING in report["warnings"]
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 25
    for r in rows:
        stable = Fraction(r["eps2"]) > 0 and Fraction(r["eps3"]) > 0
        assert (r["label"] == "Stable") == stable
    polys = {c["subset"]: c["polynomial"] for c in report["results"]["sign_conditions"]}
    assert polys == {"{1}": "e2", "{1,2}": "1/2*e3"}


def test_cone_command():
    code, report = run(["cone", str(E5), "--dual", "--check-partition"])
    assert code == 0
    res = report["results"]
    assert sorted(res["weight_cone"]["rays"]) == [[0, 1, -1], [1, -1, 0]]
    assert sorted(res["dual_cone"]["rays"]) == [[1, 1, -2], [2, -1, -1]]
    assert all(c["two_valued"] and c["plus_closed"] and c["is_candidate"] for c in res["partition_checks"])


def test_filtration_command():
    code, report = run(["filtration", str(E5), "--eps", "0,1/2,0"])
    assert code == 0
    assert report["results"]["dying_edges"] == ["2,3"]
    code, report = run(["filtration", str(E5), "--eps", "0,1/2,1/2"])
    assert code == 2


def test_validation_exit_code(tmp_path):
    data = load(E1)
    data["edges"] = [[2, 1]]
    code, report = run(["classify", str(write(tmp_path, data)), "--eps", "0,0"])
    assert code == 2
    assert report["errors"]
    code, _ = run(["classify", str(E1), "--eps", "0,1,2"])
    assert code == 2


def test_main_prints_json(capsys):
    assert main(["classify", str(E1), "--eps=-1/3,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"]["label"] == "StrictlySemistable"


def test_reports_deterministic():
    a = run(["cone", str(E5), "--dual"])
    b = run(["cone", str(E5), "--dual"])
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
