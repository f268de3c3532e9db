import json

import pytest

from gpebound import cli
from gpebound.mesh import read_mesh


def _kv(text):
    return {line.split()[0]: line.split()[1] for line in text.splitlines() if line and " " in line}


def test_mesh_generate_and_inspect(tmp_path, capsys):
    out = tmp_path / "m.txt"
    cli.main(["mesh", "--domain", "l_shape", "--n", "2", "--refine", "1", "--out", str(out)])
    assert "triangles 96" in capsys.readouterr().out
    assert read_mesh(out).n_triangles == 96
    cli.main(["mesh", "--inspect", str(out)])
    assert "vertices" in capsys.readouterr().out


def test_solve_and_certify(tmp_path, capsys):
    cli.main(["solve", "--n0", "12"])
    vals = _kv(capsys.readouterr().out)
    assert float(vals["lambda_h"]) == pytest.approx(22.856042993632993, abs=1e-7)
    ind = tmp_path / "ind.txt"
    cli.main(["certify", "--n0", "8", "--rt-order", "0", "--indicators", str(ind)])
    vals = _kv(capsys.readouterr().out)
    assert float(vals["lambda_L"]) == pytest.approx(float(vals["lambda_h"]) - float(vals["eta"]))
    assert len(ind.read_text().splitlines()) == 128


def test_study_with_config(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n0": 4, "levels": 2, "reference": False, "deterministic": True}))
    cli.main(["study", "--config", str(cfg)])
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("level,h,ndof")
    assert len(lines) == 3
    out = tmp_path / "s.csv"
    cli.main(["study", "--config", str(cfg), "--levels", "1", "--output", str(out)])
    assert len(out.read_text().splitlines()) == 2


def test_adapt(capsys):
    cli.main(["adapt", "--levels", "3", "--no-reference"])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4


def test_bad_arguments():
    with pytest.raises(SystemExit):
        cli.main(["solve", "--domain", "circle"])
