import csv
import io
import json

import numpy as np
import pytest

import felogit as fl
from felogit import cli, simulate
from felogit.cli import main, read_edge_csv, read_sample_csv, write_edge_csv, write_sample_csv


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_wperp_empty_design_exits_3(capsys):
    code, out, err = run(capsys, "wperp", "--design", "poly", "--p", "1", "--T", "3")
    assert code == 3
    assert json.loads(out) == []
    assert "# config:" in err


def test_wperp_twoway(capsys):
    code, out, _ = run(capsys, "wperp", "--design", "twoway", "--n", "2", "--tau", "2")
    assert code == 0
    assert [1, -1, -1, 1] in json.loads(out)


def test_table1_csv(capsys):
    code, out, _ = run(capsys, "table1", "--max-p", "2")
    assert code == 0
    rows = list(csv.reader(out.splitlines()[1:]))
    assert rows[0] == ["p", "T", "w_perp"]
    assert rows[1] == ["0", "2", "1 -1"]
    assert rows[3] == ["2", "7", "1 -1 -1 0 1 1 -1"]


def test_moments_report_bound(capsys):
    code, out, _ = run(
        capsys, "moments", "--design", "ar", "--p", "1", "--T", "3",
        "--theta", "0.5", "--y0", "0", "--draws", "20",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["bound"] == 2
    assert doc["nullspace_dimension"] == 2
    assert doc["max_residual"] < 1e-8


def test_dset_quarterly(capsys):
    code, out, _ = run(
        capsys, "dset", "--design", "quarterly", "--p", "1", "--T", "6",
        "--theta", "0.9", "--y0", "0",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["cardinality"] == 180
    assert doc["Q"] == [1, 2, 2, 2, 2, 2]


def test_pairs_standard_and_degenerate(capsys):
    code, out, _ = run(
        capsys, "pairs", "--design", "ar", "--p", "1", "--T", "3",
        "--y0", "0", "--require-gap",
    )
    assert code == 0
    doc = json.loads(out)
    pairs = {(tuple(d["y"]), tuple(d["y_tilde"])) for d in doc}
    pairs |= {(b, a) for a, b in pairs}
    assert ((1, 0, 1), (0, 1, 1)) in pairs
    assert all(d["transition_gap"] != 0 for d in doc)
    code, out, _ = run(
        capsys, "pairs", "--design", "trend-ar", "--T", "4", "--y0", "0",
    )
    assert code == 3 and json.loads(out) == []


def test_netcond_singleton(capsys):
    code, out, _ = run(
        capsys, "netcond", "--n", "3", "--y0", "000",
        "--path", "101101000", "--theta", "0.5,0.2",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["size"] == 1 and doc["likelihood"] == 1.0


def test_verify_csv(capsys):
    code, out, _ = run(capsys, "verify", "--moment", "ar2_t3", "--draws", "3")
    assert code == 0
    rows = list(csv.reader(out.splitlines()[1:]))
    assert rows[0] == ["draw", "moment", "residual"]
    assert all(float(r[2]) < 1e-8 for r in rows[1:])


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["wperp", "--bogus-flag"])
    assert exc.value.code == 2


def test_internal_error_exits_1(capsys):
    code, _, err = run(capsys, "wperp", "--design", "nonsense", "--T", "3")
    assert code == 1 and "error:" in err


def test_simulate_golden_bytes(tmp_path, capsys):
    cfg = {
        "design": {"design": "panel", "T": 2, "d_x": 1},
        "theta": [1.0],
        "n": 50,
        "seed": 3,
    }
    cfg_path = tmp_path / "dgp.json"
    cfg_path.write_text(json.dumps(cfg))
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", str(cfg_path), "--output", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg_path), "--output", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_text().startswith("# schema: felogit.sample.v1")


def test_simulate_then_estimate_round_trip(tmp_path, capsys):
    spec = fl.build_design("panel_fe", T=2, d_x=1)
    model_path = tmp_path / "model.json"
    model_path.write_text(spec.to_json())
    cfg = {
        "model": json.loads(spec.to_json()),
        "theta": [1.0],
        "n": 4000,
        "seed": 5,
    }
    cfg_path = tmp_path / "dgp.json"
    cfg_path.write_text(json.dumps(cfg))
    data = tmp_path / "sample.csv"
    assert main(["simulate", "--config", str(cfg_path), "--output", str(data)]) == 0
    out = tmp_path / "report.json"
    code = main([
        "estimate", "--model", str(model_path), "--data", str(data),
        "--method", "pairwise", "--wperp", "1,-1", "--output", str(out),
    ])
    capsys.readouterr()
    assert code == 0
    doc = json.loads(out.read_text())
    assert abs(doc["theta"]["beta1"] - 1.0) < 0.15
    assert doc["converged"] is True


def test_estimate_degenerate_exits_3(tmp_path, capsys):
    spec = fl.trend_ar(4)
    cfg = {
        "model": json.loads(spec.to_json()),
        "theta": [0.5],
        "n": 100,
        "seed": 6,
    }
    cfg_path = tmp_path / "dgp.json"
    cfg_path.write_text(json.dumps(cfg))
    data = tmp_path / "sample.csv"
    model_path = tmp_path / "model.json"
    model_path.write_text(spec.to_json())
    main(["simulate", "--config", str(cfg_path), "--output", str(data)])
    code = main([
        "estimate", "--model", str(model_path), "--data", str(data),
        "--method", "cmle",
    ])
    capsys.readouterr()
    assert code == 3


def test_sample_csv_round_trip():
    spec = fl.panel_ar(2, 4, d_x=2)
    cfg = simulate.DGPConfig(
        spec=spec, theta=np.array([0.5, -0.2, 1.0, 0.3]), n=40, seed=7,
        y0_law={"kind": "stationary", "burn_in": 20},
    )
    s = simulate.generate(cfg)
    buf = io.StringIO()
    write_sample_csv(s, buf)
    buf.seek(0)
    back = read_sample_csv(buf, spec)
    assert np.array_equal(back.Y, s.Y)
    assert np.array_equal(back.Y0, s.Y0)
    assert np.allclose(back.X, s.X)


def test_edge_csv_round_trip():
    spec = fl.network_design(3, 3, d_x=1)
    cfg = simulate.DGPConfig(
        spec=spec, theta=np.array([0.4, 0.2, 0.5]), n=15, seed=8,
        y0_law={"kind": "fixed", "value": [1, 0, 1]},
    )
    s = simulate.generate(cfg)
    buf = io.StringIO()
    write_edge_csv(s, buf)
    buf.seek(0)
    back = read_edge_csv(buf, spec)
    assert np.array_equal(back.Y, s.Y)
    assert np.array_equal(back.Y0, s.Y0)
    assert np.allclose(back.X, s.X)


def test_edge_csv_accepts_unitless_single_network():
    spec = fl.network_design(3, 1)
    text = "tau,i,j,y\n0,1,2,1\n0,1,3,0\n0,2,3,1\n1,1,2,0\n1,1,3,1\n1,2,3,1\n"
    back = read_edge_csv(io.StringIO(text), spec)
    assert back.n == 1
    assert back.Y0.tolist() == [[1, 0, 1]]
    assert back.Y.tolist() == [[0, 1, 1]]


def test_mc_command(tmp_path, capsys):
    cfg = {
        "dgp": {
            "design": {"design": "panel", "T": 2, "d_x": 1},
            "theta": [1.0],
            "n": 800,
            "seed": 9,
        },
        "estimator": {"method": "pairwise", "wperp": [[1, -1]]},
        "replications": 4,
    }
    cfg_path = tmp_path / "mc.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "mc.csv"
    assert main(["mc", "--config", str(cfg_path), "--output", str(out)]) == 0
    capsys.readouterr()
    rows = list(csv.reader(out.read_text().splitlines()[1:]))
    kinds = [r[0] for r in rows[1:]]
    assert kinds.count("rep") == 4 and kinds.count("summary") == 1
    summary = rows[-1]
    assert abs(float(summary[8])) < 0.2  # bias column


def test_round_trip_reads_every_emitted_json(tmp_path, capsys):
    # model JSON from the library is accepted back by the CLI loaders
    spec = fl.quarterly_ar(1, 6, d_x=1)
    path = tmp_path / "m.json"
    path.write_text(spec.to_json())
    ns_args = type("A", (), {"model": str(path), "design": None})
    loaded = cli._load_spec(ns_args)
    assert loaded.T == 6 and loaded.family == "ar"
    assert np.array_equal(loaded.W, spec.W)
