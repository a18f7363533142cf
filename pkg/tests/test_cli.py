import numpy as np
import pytest

from loopcmc import cli
from loopcmc.pipeline import TSV_HEADER, read_obj
from loopcmc.potential import NnoidParams
from loopcmc.traizet import SolverDivergence


def effective(capsys, argv):
    assert cli.main(argv + ["--print-config"]) == 0
    out = capsys.readouterr().out
    return dict(line.split(" = ", 1) for line in out.splitlines())


def report_dict(text):
    return dict(line.split(": ", 1) for line in text.splitlines() if ": " in line)


def test_parse_config_text():
    text = "# comment\nq = 3.5  # trailing\n\ntol-ode=1e-10\n"
    assert cli.parse_config_text(text) == {"q": "3.5", "tol_ode": "1e-10"}
    with pytest.raises(ValueError):
        cli.parse_config_text("just words")


def test_print_config_defaults(capsys):
    cfg = effective(capsys, ["delaunay-h3"])
    assert cfg["form"] == "H3" and cfg["q"] == "2.0" and cfg["res"] == "24x32"
    assert effective(capsys, ["delaunay-ads3"])["form"] == "AdS3"


def test_flags_override_config(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("q = 3.0\nres = 4x5\nkeep-crossing = yes\n# q = 9\n")
    cfg = effective(capsys, ["delaunay-h3", "--config", str(path)])
    assert cfg["q"] == "3.0" and cfg["res"] == "4x5" and cfg["keep_crossing"] == "True"
    cfg = effective(capsys, ["delaunay-h3", "--config", str(path), "--q", "5", "--res", "6x7"])
    assert cfg["q"] == "5.0" and cfg["res"] == "6x7"


def test_unknown_config_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        cli.main(["sphere", "--config", str(path), "--print-config"])


def test_parse_helpers():
    assert cli.parse_res("12x34") == (12, 34)
    with pytest.raises(ValueError):
        cli.parse_res("12by34")
    assert cli.parse_complex_list("0.5, -0.5,1+2j") == [0.5, -0.5, 1 + 2j]
    pts = cli.sym_points_from_lambda0("H3", 0.5)
    assert pts.lam1 == pytest.approx(-2.0)
    pts = cli.sym_points_from_lambda0("S3", np.exp(0.4j))
    assert pts.lam1 == pytest.approx(np.exp(-0.4j))


def test_nnoid_config_round_trip():
    params = NnoidParams([21, 3, 32], [0.5, -0.5, 3], 1e-3)
    b = params.b.copy()
    b[1, 2] = 0.25 - 1e-7j
    params = params.copy(b=b)
    back = cli.nnoid_from_config_text(cli.nnoid_config_text(params))
    assert np.array_equal(back.b, params.b) and np.array_equal(back.z, params.z)
    assert back.t == params.t and np.array_equal(back.tau, params.tau)


def test_sphere_exit_ok(tmp_path, capsys):
    out = tmp_path / "s.obj"
    rep = tmp_path / "s.txt"
    code = cli.main(["sphere", "--res", "4x6", "--out", str(out), "--report", str(rep)])
    assert code == cli.EXIT_OK
    lines = report_dict(rep.read_text())
    assert lines["mesh.vertices"] == "24" and lines["mesh.valid"] == "24"
    verts, faces = read_obj(out)
    assert verts.shape == (24, 3) and len(faces) == 15
    assert open(str(out) + ".tsv").readline().rstrip("\n") == TSV_HEADER
    assert rep.read_text() in capsys.readouterr().out


def test_delaunay_report(capsys):
    assert cli.main(["check", "--surface", "delaunay-h3"]) == cli.EXIT_OK
    lines = report_dict(capsys.readouterr().out)
    assert lines["closes"] == "True"
    assert float(lines["eigen.delaunay_nu"]) < 1e-6


def test_closing_failure_exit(capsys):
    code = cli.main(["trinoid", "--b", "0.15"])
    assert code == cli.EXIT_CLOSING
    assert "flag: sign_mismatch" in capsys.readouterr().out


def test_basepoint_exit(tmp_path, capsys):
    code = cli.main(["sphere", "--domain", "annulus:1.0:1.01", "--res", "3x4", "--report", str(tmp_path / "r.txt")])
    assert code == cli.EXIT_BASEPOINT
    assert "flag: basepoint" in capsys.readouterr().out


def test_divergence_exit(monkeypatch, capsys):
    def fail(*args, **kwargs):
        raise SolverDivergence("residual stalled", 1.0)

    monkeypatch.setattr(cli, "solve_nnoid", fail)
    assert cli.main(["nnoid-solve"]) == cli.EXIT_DIVERGENCE
    assert "flag: divergence" in capsys.readouterr().out


def test_bad_input_exit(capsys):
    assert cli.main(["nnoid-solve", "--tau", "1,2", "--p", "0.5,2"]) == cli.EXIT_USAGE
    assert "not balanced" in capsys.readouterr().err


def test_nnoid_solution_file_meshes_without_solving(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "pair.cfg"
    assert cli.main(["nnoid-solve", "--tau", "1,1", "--p", "0.5,2", "--out", str(cfg), "--report", "-"]) == 0
    assert not (tmp_path / "-").exists()
    capsys.readouterr()

    def fail(*args, **kwargs):
        raise AssertionError("nnoid-mesh re-solved a stored solution")

    monkeypatch.setattr(cli, "solve_nnoid", fail)
    code = cli.main(["nnoid-mesh", "--config", str(cfg), "--res", "4x6", "--delta", "0.1"])
    assert code == cli.EXIT_OK
    lines = report_dict(capsys.readouterr().out)
    assert int(lines["mesh.valid"]) > 0 and lines["mesh.bigcell_fail"] == "0"
