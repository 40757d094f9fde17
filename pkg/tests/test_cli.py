import csv
import io
import json
import subprocess
import sys
from contextlib import redirect_stderr, redirect_stdout

import pytest

from almost_mathieu.cli import main


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        try:
            code = main(argv)
        except SystemExit as exc:  # argparse usage errors
            code = exc.code
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_spectrum_alpha_half():
    code, out, _ = run(["spectrum", "--alpha", "1/2", "--lambda", "0.5"])
    assert code == 0
    bands = sorted((float(r["a"]), float(r["b"])) for r in rows(out))
    assert bands == [(-2.0, -1.0), (1.0, 2.0)]


def test_spectrum_plus_and_theta():
    code, out, _ = run(["spectrum", "--alpha", "1/3", "--lambda", "0.5", "--which", "plus"])
    assert code == 0 and len(rows(out)) == 3
    code, out, _ = run(["spectrum", "--alpha", "1/3", "--lambda", "0.5", "--which", "theta", "--theta", "1/7"])
    assert code == 0 and len(rows(out)) == 3


def test_moment_json_routes_agree():
    code, out, _ = run(["moment", "--alpha", "1/2", "--lambda", "0.5", "--kmax", "1", "--format", "json"])
    assert code == 0
    data = json.loads(out)
    assert {r["method"] for r in data} == {"oracle", "traces", "poly"}
    for r in data:
        assert r["value"] == pytest.approx(2.0 if r["k"] == 0 else 14 / 3, abs=1e-10)


def test_poly_exact_coefficients():
    code, out, _ = run(["poly", "--k", "0"])
    assert code == 0
    assert {(r["lam_power"], r["t_power"]): r["coefficient"] for r in rows(out)} == {
        ("0", "0"): "4/1", ("1", "0"): "-4/1"}


def test_atoms():
    code, out, _ = run(["atoms", "--alpha", "1/2"])
    assert code == 0
    assert sorted((float(r["energy"]), float(r["weight"])) for r in rows(out)) == [(-2.0, 0.5), (2.0, 0.5)]


def test_green_decays():
    code, out, _ = run(["green", "--alpha", "1/3", "--lambda", "0.5", "--z", "0.2+1j", "--radius", "5"])
    assert code == 0
    assert out.strip()


def test_converge_and_butterfly(tmp_path):
    target = tmp_path / "bf.csv"
    code, _, _ = run(["butterfly", "--qmax", "4", "--lambda", "0.5", "--jobs", "1", "--output", str(target)])
    assert code == 0
    bf = rows(target.read_text())
    assert sum(1 for r in bf if (r["p"], r["q"]) == ("1", "4")) == 4
    assert all(float(r["total"]) == pytest.approx(2.0) for r in bf)
    code, out, _ = run(["converge", "--lambda", "0.5", "--kmax", "1", "--nmax", "6"])
    assert code == 0 and len(rows(out)) == 10


def test_gap():
    code, out, _ = run(["gap", "--alpha", "1/2", "--lambda", "0.5", "--lo", "-3", "--hi", "3"])
    assert code == 0
    assert "2" in out


def test_gap_inside_spectrum_fails():
    code, _, err = run(["gap", "--alpha", "1/2", "--lambda", "0.5", "--lo", "-3", "--hi", "0"])
    assert code == 1
    assert "Sigma^+" in err


@pytest.mark.parametrize("argv", [
    ["spectrum", "--alpha", "0.3", "--lambda", "0.5"],
    ["butterfly", "--qmax", "0", "--lambda", "0.5"],
    ["nonsense"],
])
def test_usage_errors_exit_2(argv):
    assert run(argv)[0] == 2


def test_verify_suite():
    code, out, _ = run(["verify", "--suite", "sympoly"])
    assert code == 0
    assert "0 failed" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "almost_mathieu", "poly", "--k", "1", "--kind", "T"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.startswith("kind,k,")
