import json
import subprocess
import sys
from fractions import Fraction

from stickconv.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


def test_sample_partition_dirac(capsys):
    code, out, _ = run(capsys, "sample-partition", "--measure", "dirac:0.5", "--tol", "1e-6", "--seed", "7")
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0] == "index,part"
    assert len(rows) == 22
    assert rows[-1] == "remainder,9.5367431640625e-07"


def test_sample_partition_beta_json(capsys):
    code, out, _ = run(capsys, "sample-partition", "--measure", "beta:1,2", "--seed", "1", "--format", "json")
    obj = json.loads(out)
    assert code == 0
    assert sum(obj["parts"]) >= 1 - 1e-12


def test_dirac_zero_rejected(capsys):
    code, _, err = run(capsys, "sample-partition", "--measure", "dirac:0")
    assert code == 2
    assert "atom at 0" in error_of(err)["message"]


def test_bad_spec_reports_column(capsys):
    code, _, err = run(capsys, "z-moments", "--measure", "beta:1,q", "--p", "1/3")
    assert code == 2
    assert "column 8" in error_of(err)["message"]


def test_sample_z_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path, workers in ((a, "1"), (b, "3")):
        code, _, _ = run(capsys, "sample-z", "--measure", "beta:1,2", "--p", "1/3", "--samples", "40000",
                         "--seed", "5", "--workers", workers, "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("z\n")


def test_z_moments_exact(capsys):
    code, out, _ = run(capsys, "z-moments", "--measure", "beta:1,3", "--p", "1/4", "--order", "3", "--exact",
                       "--format", "json")
    obj = json.loads(out)
    assert obj["values"] == ["1/1", "1/4", "7/64", "77/1280"]


def test_reconstruct_table(capsys):
    code, out, _ = run(capsys, "reconstruct", "--z", "beta:1,2", "--p", "1/3", "--order", "20", "--exact")
    assert code == 0
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    assert [Fraction(r[1]) for r in rows] == [Fraction(4 * n, n + 3) for n in range(21)]


def test_reconstruct_from_moment_file(tmp_path, capsys):
    path = tmp_path / "m.json"
    run(capsys, "z-moments", "--measure", "dirac:2/5", "--p", "2/3", "--order", "15", "--exact",
        "--format", "json", "--out", str(path))
    code, out, _ = run(capsys, "reconstruct", "--moments", str(path), "--p", "2/3", "--format", "json")
    obj = json.loads(out)
    assert code == 0
    assert obj["EY"] == "2/5"
    assert obj["EY_method"] == "geometric"


def test_reconstruct_refuses_half(capsys):
    code, _, err = run(capsys, "reconstruct", "--z", "beta:1,1", "--p", "1/2", "--exact")
    assert code == 2
    assert "identical Bernoulli(1/2) convolutions" in error_of(err)["message"]


def test_near_singular_is_numeric_failure(capsys):
    code, _, err = run(capsys, "reconstruct", "--z", "beta:2,2", "--p", "0.5000000000000001", "--order", "8")
    assert code == 3
    assert error_of(err)["error"] == "NearSingularError"


def test_usage_errors(capsys):
    code, _, err = run(capsys, "bogus")
    assert code == 2
    error_of(err)
    code, _, err = run(capsys, "reconstruct", "--p", "1/3")
    assert code == 2
    code, _, err = run(capsys, "verify", "--case", "gem-beta", "--p", "1/4,1/3", "--samples", "100")
    assert code == 2


def test_verify_gem_beta(capsys):
    code, out, _ = run(capsys, "verify", "--case", "gem-beta", "--theta", "3", "--p", "0.25", "--samples", "100000",
                       "--seed", "2")
    assert code == 0
    assert json.loads(out)["pass"] is True


def test_verify_holroyd(capsys):
    code, out, _ = run(capsys, "verify", "--case", "holroyd", "--p", "0.5", "--resolution", "49")
    obj = json.loads(out)
    assert code == 0
    assert obj["joint_l1_distance"] > 0


def test_verify_prop22_and_pivots(capsys):
    code, out, _ = run(capsys, "verify", "--case", "prop22", "--measure", "dirac:2/5")
    assert code == 0 and json.loads(out)["pass"]
    code, out, _ = run(capsys, "verify", "--case", "pivots", "--z", "beta:3/2,3/2", "--p", "1/2,1/3", "--order", "8")
    obj = json.loads(out)
    assert code == 0 and obj["z_symmetric"]


def test_verify_failure_exit_code(capsys):
    code, out, err = run(capsys, "verify", "--case", "pivots", "--z", "beta:1,2", "--p", "1/2", "--order", "6")
    assert code == 2
    code, out, err = run(capsys, "verify", "--case", "nonunique", "--theta", "3", "--samples", "20000",
                         "--coeffs", "0,0", "--delta", "0")
    assert code in (1, 3)
    error_of(err)


def test_verify_nonunique_passes(capsys):
    code, out, _ = run(capsys, "verify", "--case", "nonunique", "--theta", "3", "--samples", "100000", "--seed", "3")
    assert code == 0
    assert json.loads(out)["distinctness"]["sup_distance"] > 0


def test_construct_writes_density_and_metadata(tmp_path, capsys):
    out = tmp_path / "rho.csv"
    code, _, _ = run(capsys, "construct", "--family", "fractional", "--theta", "3", "--nodes", "257", "--out", str(out))
    assert code == 0
    assert out.read_text().startswith("x,density\n")
    meta = json.loads((tmp_path / "rho.csv.json").read_text())
    assert meta["provenance"] == "fractional" and meta["delta"] > 0


def test_construct_gem2_from_csv(tmp_path, capsys):
    f = tmp_path / "f.csv"
    f.write_text("x,value\n0,0\n0.25,1\n0.5,1\n")
    code, out, _ = run(capsys, "construct", "--family", "gem2", "--f", str(f), "--format", "json")
    assert code == 0
    assert json.loads(out)["checks"]["gem2_residual"] < 1e-12


def test_construct_rejects_large_delta(capsys):
    code, _, err = run(capsys, "construct", "--family", "fractional", "--theta", "3", "--delta", "5")
    assert code == 3
    assert "too large" in error_of(err)["message"]


def test_holroyd_artifacts(capsys):
    code, out, _ = run(capsys, "holroyd", "--what", "marginal", "--direction", "X1+X2", "--resolution", "7")
    assert code == 0 and out.startswith("x,density\n")
    code, out, _ = run(capsys, "holroyd", "--what", "cdf", "--p", "1/3", "--resolution", "7", "--density", "perturbed")
    assert out.splitlines()[1] == "0.0,0.2962962962962963"
    code, out, _ = run(capsys, "holroyd", "--what", "cdf")
    assert code == 2


def test_gnuplot_hint(capsys):
    code, _, err = run(capsys, "z-moments", "--measure", "uniform", "--p", "1/3", "--order", "3", "--gnuplot-hint")
    assert code == 0
    assert "plot" in err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "stickconv.cli", "sample-partition", "--measure", "dirac:0"],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr)["exit_code"] == 2
