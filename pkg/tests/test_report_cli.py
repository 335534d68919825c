import json
import math

import numpy as np
import pytest

from lpmhd.cli import EXIT_INPUT, EXIT_INVARIANT, EXIT_OK, main, parse_box, parse_seeds, parse_tolerance
from lpmhd.report import RunManifest, dumps, flatten, make_report, to_csv


def run(capsys, *argv):
    try:
        code = main(list(argv))
    except SystemExit as e:  # argparse usage errors
        code = e.code
    out = capsys.readouterr()
    return code, out.out, out.err


# -- report serialisation -------------------------------------------------------


def manifest():
    return RunManifest(command="x", grid={"n": 4}, profile={"k_min": 0}, seeds=[1])


def test_dumps_sorted_and_full_precision():
    payload = make_report(manifest(), {"b": 0.1, "a": np.float64(1 / 3), "c": [np.int64(2), np.nan]})
    text = dumps(payload)
    assert "0.10000000000000001" in text
    assert "0.33333333333333331" in text
    back = json.loads(text)
    assert back["results"]["c"] == [2, None]
    assert list(back["results"]) == ["a", "b", "c"]
    assert back["results"]["a"] == 1 / 3
    assert dumps(payload) == text


def test_dumps_rejects_unknown_objects():
    with pytest.raises(TypeError):
        dumps({"x": object()})


def test_csv_flattening():
    payload = make_report(manifest(), {"v": [0.5, {"w": math.inf}]})
    rows = to_csv(payload).splitlines()
    assert rows[0] == "key,value"
    assert "results.v[0],0.5" in rows
    assert "results.v[1].w," in rows
    assert flatten({"a": {"b": 1}}) == {"a.b": 1}


# -- argument parsing ----------------------------------------------------------------


@pytest.mark.parametrize("text,value", [("4pi", 4 * math.pi), ("4*pi", 4 * math.pi), ("pi", math.pi),
                                        ("2.5", 2.5), ("0.5pi", 0.5 * math.pi)])
def test_parse_box(text, value):
    assert parse_box(text) == pytest.approx(value, rel=1e-15)


def test_parse_seeds_and_tolerance():
    assert parse_seeds("7") == [7]
    assert parse_seeds("0,3") == [0, 3]
    assert parse_seeds("2-5") == [2, 3, 4, 5]
    assert parse_tolerance("imbalance=1e-9") == ("imbalance", 1e-9)


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["norms", "--box", "big"],
    ["norms", "--seeds", "5-2"],
    ["norms", "--grid", "15"],
    ["norms", "--input", "/nonexistent/field.lpf"],
    ["verify-identity", "--grid", "16", "--box", "4pi", "--k", "40"],
])
def test_input_errors_exit_3(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == EXIT_INPUT


# -- commands ---------------------------------------------------------------------


def test_decompose_cosine(capsys):
    code, out, _ = run(capsys, "decompose", "--grid", "16", "--box", "2pi", "--named", "cos")
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["results"]["nonzero_shells"] == [0]
    assert rep["status"] == "ok"
    assert rep["manifest"]["command"] == "decompose"


def test_gen_then_verify_identity(tmp_path, capsys):
    d = tmp_path / "pair"
    code, _, _ = run(capsys, "gen", "--grid", "16", "--box", "4pi", "--seed", "3", "--out", str(d))
    assert code == EXIT_OK
    assert (d / "u.lpf").exists() and (d / "B.lpf").exists()
    code, out, _ = run(capsys, "verify-identity", "--grid", "16", "--box", "4pi",
                       "--u", str(d / "u.lpf"), "--B", str(d / "B.lpf"))
    assert code == EXIT_OK
    rows = json.loads(out)["results"]["shells"]
    assert all(r["imbalance"] <= 1e-8 for r in rows)
    # an impossible tolerance turns the same run into an invariant failure
    code, out, _ = run(capsys, "verify-identity", "--grid", "16", "--box", "4pi",
                       "--u", str(d / "u.lpf"), "--B", str(d / "B.lpf"), "--tolerance", "imbalance=-1")
    assert code == EXIT_INVARIANT
    assert json.loads(out)["status"] == "invariant_failure"


def test_verify_bounds_and_conditions(capsys):
    for flavor in ("linf", "l3"):
        code, out, _ = run(capsys, "verify-bounds", "--grid", "16", "--box", "4pi", "--seed", "1",
                           "--flavor", flavor, "--k", "0")
        assert code == EXIT_OK
        assert json.loads(out)["results"]["shells"][0]["k"] == 0
    code, out, _ = run(capsys, "conditions", "--grid", "16", "--box", "2pi", "--named", "cos")
    assert code == EXIT_OK
    recs = json.loads(out)["results"]["records"]
    assert [r["cond_14"] for r in recs][:3] == [0.125, 0.25, 0.5]


def test_norms_and_csv_output(tmp_path, capsys):
    code, _, _ = run(capsys, "norms", "--grid", "16", "--seed", "2", "--out", str(tmp_path), "--format", "csv")
    assert code == EXIT_OK
    assert (tmp_path / "norms.json").exists()
    text = (tmp_path / "norms.csv").read_text()
    assert text.startswith("key,value\n") and "results.L2," in text


def test_all_checks_byte_identical(tmp_path, capsys):
    outs = []
    for name in ("a", "b"):
        code, _, _ = run(capsys, "all-checks", "--grid", "16", "--box", "4pi", "--seeds", "0-1",
                         "--out", str(tmp_path / name))
        assert code == EXIT_OK
        outs.append((tmp_path / name / "all-checks.json").read_bytes())
    assert outs[0] == outs[1]


def test_all_checks_zero_fields(capsys):
    code, out, _ = run(capsys, "all-checks", "--grid", "16", "--fields", "zero")
    assert code == EXIT_OK
    assert json.loads(out)["status"] == "ok"
