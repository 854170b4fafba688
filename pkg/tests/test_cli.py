import json

import pytest

from dimervar.cli import run
from dimervar.lattice import aztec_diamond, rectangle, region_to_json


@pytest.fixture
def square2(tmp_path):
    p = tmp_path / "square2.json"
    p.write_text(region_to_json(rectangle(2, 2)))
    return str(p)


def test_ent_command(capsys):
    assert run(["ent", "--tilt", "0,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out == {"ent": 0.583121808062}


def test_count_command(square2, capsys):
    assert run(["count", "--region", square2]) == 0
    assert json.loads(capsys.readouterr().out) == {"count": "2"}


def test_probs_command(capsys):
    assert run(["probs", "--weights", "2,1,1,1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["p_a"] == 0.5
    assert run(["probs", "--tilt", "1,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["p_d"] == pytest.approx(7 / 12, abs=1e-9)


def test_probs_requires_one_source(capsys):
    assert run(["probs", "--weights", "1,1,1,1", "--tilt", "0,0"]) == 2
    assert run(["probs"]) == 2


def test_logz_and_torus(capsys):
    assert run(["logz", "--weights", "1,1,1,1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["log_Z"] == pytest.approx(0.5831218080616, abs=1e-9)
    assert run(["torus-z", "--n", "2", "--weights", "1,1,1,1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["Z"] == pytest.approx(272.0, rel=1e-9)
    assert run(["torus-prob", "--n", "4", "--weights", "1,1,1,1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["p_a"] == pytest.approx(0.25, abs=1e-12)


def test_torus_validation_exit_code(capsys):
    assert run(["torus-z", "--n", "3", "--weights", "1,1,1,1"]) == 2
    assert run(["torus-z", "--n", "2", "--weights", "1,1"]) == 2
    assert run(["torus-z", "--n", "2048", "--weights", "1,1,1,1"]) == 3


def test_coupling_command(capsys):
    assert run(["coupling", "--weights", "1,1,1,1", "--disp", "1,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["re"] == pytest.approx(0.25, abs=1e-8)
    assert run(["coupling", "--weights", "1,1,1,1", "--disp", "2,0"]) == 2


def test_enumerate_and_render(square2, tmp_path, capsys):
    out = tmp_path / "tilings.jsonl"
    assert run(["enumerate", "--region", square2, "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 2
    tiling_file = tmp_path / "t.json"
    tiling_file.write_text(lines[0])
    svg_file = tmp_path / "t.svg"
    assert run(["render", "--tiling", str(tiling_file), "--svg", str(svg_file)]) == 0
    assert svg_file.read_text().startswith("<svg")


def test_sample_command(square2, tmp_path, capsys):
    out = tmp_path / "samples.jsonl"
    svg_file = tmp_path / "s.svg"
    assert run([
        "sample", "--region", square2, "--seed", "42", "--count", "5",
        "--out", str(out), "--svg", str(svg_file),
    ]) == 0
    lines = [json.loads(l) for l in out.read_text().strip().splitlines()]
    assert len(lines) == 5
    assert lines[0]["rng"] == "philox4x64"
    assert lines[0]["seed"] == 42
    assert svg_file.exists()
    # determinism across invocations
    out2 = tmp_path / "samples2.jsonl"
    assert run(["sample", "--region", square2, "--seed", "42", "--count", "5",
                "--out", str(out2)]) == 0
    assert out.read_text() == out2.read_text()


def test_solve_command(tmp_path, capsys):
    region_file = tmp_path / "region.json"
    region_file.write_text(json.dumps({"polygon": [[0, 0], [1, 0], [1, 1], [0, 1]]}))
    samples = []
    for k in range(9):
        u = k / 8
        samples += [[u, 0, 0], [u, 1, 0], [0, u, 0], [1, u, 0]]
    boundary_file = tmp_path / "boundary.json"
    boundary_file.write_text(json.dumps({"samples": samples}))
    field_file = tmp_path / "field.json"
    svg_file = tmp_path / "field.svg"
    assert run([
        "solve", "--region", str(region_file), "--boundary", str(boundary_file),
        "--mesh", "8", "--levels", "1", "--out", str(field_file), "--svg", str(svg_file),
    ]) == 0
    data = json.loads(field_file.read_text())
    assert data["delta"] == 0.125
    assert data["ent"] == pytest.approx(0.5831218080616, abs=1e-6)
    assert {"delta", "nodes", "ent", "residual_norm"} <= set(data)
    assert svg_file.exists()


def test_region_json_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert run(["count", "--region", str(bad)]) == 2
