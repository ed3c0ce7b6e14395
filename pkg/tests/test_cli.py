import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sinekan.cli import build_parser, main
from sinekan.experiments import read_sweep_csv
from sinekan.metrics import model_flops
from sinekan.models import parse_model_spec


def body(path):
    return path.read_text().split("\n", 1)[1]


def test_bench1d_single_cell(tmp_path):
    rc = main(["bench1d", "--funcs", "f1", "--grids", "50", "--models", "fourier:K=8", "--out", str(tmp_path)])
    assert rc == 0
    meta, rows = read_sweep_csv(tmp_path / "bench1d.csv")
    assert len(rows) == 1 and rows[0]["model_spec"] == "fourier:K=8"
    assert meta["kind"] == "bench1d" and meta["solver"]["seed"] == 42
    assert (tmp_path / "bench1d_f1.svg").exists()


def test_bench1d_deterministic(tmp_path):
    args = ["bench1d", "--funcs", "f2", "f3", "--grids", "25,40", "--models", "sinekan1d:G=2",
            "--starts", "2", "--max-iter-per-param", "5"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert body(tmp_path / "a" / "bench1d.csv") == body(tmp_path / "b" / "bench1d.csv")
    assert (tmp_path / "a" / "bench1d_f2.svg").read_bytes() == (tmp_path / "b" / "bench1d_f2.svg").read_bytes()


def test_bench1d_default_grid_is_full_product():
    args = build_parser().parse_args(["bench1d"])
    assert len(args.funcs) * len(args.grids) * len(args.models) == 50


def test_bench2d_single_cell(tmp_path):
    rc = main(["bench2d", "--funcs", "rosenbrock", "--models", "mlp:H=3,act=sine", "--n", "10",
               "--starts", "1", "--max-iter-per-param", "3", "--out", str(tmp_path)])
    assert rc == 0
    _, rows = read_sweep_csv(tmp_path / "bench2d.csv")
    assert len(rows) == 1
    assert rows[0]["flops"] == model_flops(parse_model_spec(rows[0]["model_spec"], 2))
    assert (tmp_path / "bench2d_rosenbrock_params.svg").exists()
    assert (tmp_path / "bench2d_rosenbrock_flops.svg").exists()


def test_bench2d_ladder_row_count(tmp_path):
    rc = main(["bench2d", "--budgets", "50", "100", "--n", "4", "--starts", "1", "--max-iter-per-param", "1",
               "--no-plots", "--out", str(tmp_path)])
    assert rc == 0
    _, rows = read_sweep_csv(tmp_path / "bench2d.csv")
    assert len(rows) == 2 * 4 * 2
    assert not list(tmp_path.glob("*.svg"))


def test_plots_regenerate_from_csv(tmp_path):
    from sinekan.plotting import plot_bench1d

    main(["bench1d", "--funcs", "f5", "--grids", "20", "30", "--models", "fourier:K=2", "--out", str(tmp_path)])
    svg = (tmp_path / "bench1d_f5.svg").read_bytes()
    _, rows = read_sweep_csv(tmp_path / "bench1d.csv")
    again = tmp_path / "again"
    again.mkdir()
    plot_bench1d(rows, again)
    assert (again / "bench1d_f5.svg").read_bytes() == svg


def test_construct_constant(tmp_path, capsys):
    assert main(["construct", "--func", "const1", "--N", "4", "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "construct_const1_N4.json").read_text())
    assert rec["sup_error"] < 1e-8
    assert "certificate" in capsys.readouterr().out


def test_construct_f1_fields(tmp_path):
    assert main(["construct", "--func", "f1", "--N", "12", "--out", str(tmp_path)]) == 0
    rec = json.loads((tmp_path / "construct_f1_N12.json").read_text())
    for key in ("condition", "bernstein_error", "coeff_error", "taylor_tail", "rounding", "certificate", "sup_error"):
        assert np.isfinite(rec[key]), key
    ph = np.array(rec["phases"])
    np.testing.assert_allclose(np.diff(ph), ph[1] - ph[0], rtol=0, atol=1e-15)
    assert len(rec["omegas"]) == len(rec["amplitudes"]) == 13


@pytest.mark.parametrize("argv", [["construct", "--N", "17"], ["construct", "--N", "0"], ["construct", "--func", "nope"],
                                  ["bench1d", "--starts", "0"], ["bench1d", "--cost-model", "gpu"]])
def test_usage_errors(argv, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(argv + ["--out", str(tmp_path)])
    assert info.value.code == 2


def test_bad_model_spec_is_usage_error(tmp_path):
    assert main(["bench1d", "--funcs", "f1", "--grids", "10", "--models", "bogus:K=1", "--out", str(tmp_path)]) == 2


def test_flops_default(capsys):
    assert main(["flops"]) == 0
    assert json.loads(capsys.readouterr().out) == {"add": 1.0, "mul": 1.0, "relu": 1.5, "sin": 12.0}


def test_flops_torchlike(capsys):
    assert main(["flops", "--cost-model=torchlike"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["sin"] == 3.5 and rec["relu"] == 1.0


def test_flops_measured(capsys):
    assert main(["flops", "--measure", "--iterations", "3000"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["add"] == 1.0 and rec["source"] == "Measured"


def test_failed_cells_exit_code(tmp_path, monkeypatch):
    import sinekan.experiments as ex

    def boom(*a, **k):
        raise ex.SolverError("forced")

    monkeypatch.setattr(ex, "fit_model", boom)
    base = ["bench1d", "--funcs", "f1", "--grids", "10", "--models", "fourier:K=1", "--out", str(tmp_path)]
    assert main(base) == 1
    assert main(base + ["--keep-going"]) == 1  # every cell failed
    with open(tmp_path / "bench1d.csv") as fh:
        fh.readline()
        assert next(csv.DictReader(fh))["term_reason"] == "Failed"


def test_keep_going_with_partial_failure(tmp_path, monkeypatch):
    import sinekan.experiments as ex

    real = ex.fit_model

    def flaky(model, dataset, config, starts=1):
        if model.param_count == 3:
            raise ex.SolverError("forced")
        return real(model, dataset, config, starts)

    monkeypatch.setattr(ex, "fit_model", flaky)
    base = ["bench1d", "--funcs", "f1", "--grids", "10", "--models", "fourier:K=1", "fourier:K=2", "--out", str(tmp_path)]
    assert main(base) == 1
    assert main(base + ["--keep-going"]) == 0


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "sinekan", "flops"], capture_output=True, text=True, check=True)
    assert json.loads(out.stdout)["sin"] == 12.0


def test_reproduction_scripts_forward_flags(tmp_path):
    import runpy
    from pathlib import Path

    scripts = Path(__file__).resolve().parents[1] / "scripts"
    fig1 = runpy.run_path(str(scripts / "reproduce_fig1.py"))["run"]
    assert fig1(["--out", str(tmp_path / "f1"), "--funcs", "f2", "--grids", "12", "--models", "fourier:K=2"]) == 0
    _, rows = read_sweep_csv(tmp_path / "f1" / "bench1d.csv")
    assert len(rows) == 1

    fig2 = runpy.run_path(str(scripts / "reproduce_fig2.py"))["run"]
    assert fig2(["--quick", "--out", str(tmp_path / "f2"), "--funcs", "gauss2d", "--families", "fourier2d", "--n", "5"]) == 0
    _, rows = read_sweep_csv(tmp_path / "f2" / "bench2d.csv")
    assert len(rows) == 3

    demo = runpy.run_path(str(scripts / "construct_demo.py"))["run"]
    assert demo(["--func", "const1", "--degrees", "2", "4"]) == 0
