import csv
import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from henonpucci.cli import EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_OK, EXIT_SOLVER, main
from henonpucci.io import OUT_ENV, PROFILE_COLUMNS, STATIONARY_COLUMNS

GOLDEN = Path(__file__).parent / "golden"
sys.path.insert(0, str(GOLDEN))
from regenerate import CASES, run_case  # noqa: E402


def _close(a: str, b: str, rel: float) -> bool:
    try:
        x, y = float(a), float(b)
    except ValueError:
        return a == b
    if math.isnan(x) or math.isnan(y):
        return math.isnan(x) and math.isnan(y)
    return x == y or math.isclose(x, y, rel_tol=rel, abs_tol=1e-300)


def _json_close(a, b, rel):
    if isinstance(a, dict):
        return isinstance(b, dict) and a.keys() == b.keys() and all(_json_close(a[k], b[k], rel) for k in a)
    if isinstance(a, list):
        return isinstance(b, list) and len(a) == len(b) and all(_json_close(x, y, rel) for x, y in zip(a, b))
    if isinstance(a, (int, float)) and not isinstance(a, bool):
        return isinstance(b, (int, float)) and _close(repr(a), repr(b), rel)
    return a == b


def _csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def golden_runs(tmp_path_factory):
    work = tmp_path_factory.mktemp("golden")
    shutil.copy(GOLDEN / "c1_annulus.ini", work)
    for name in CASES:
        rc, _ = run_case(name, work)
        assert rc == EXIT_OK
    return work


@pytest.mark.parametrize("case,fname", [(c, f) for c, (_, keep) in CASES.items() for f in keep])
def test_golden(golden_runs, case, fname):
    new, ref = golden_runs / case / fname, GOLDEN / case / fname
    if new.read_bytes() == ref.read_bytes():
        return
    # other platforms may differ in the last bits of libm
    if fname.endswith(".csv"):
        a, b = _csv(new), _csv(ref)
        assert a[0] == b[0] and len(a) == len(b)
        assert all(_close(x, y, 1e-9) for ra, rb in zip(a, b) for x, y in zip(ra, rb))
    elif fname.endswith(".json"):
        assert _json_close(json.loads(new.read_text()), json.loads(ref.read_text()), 1e-9)
    else:
        pytest.fail(f"{case}/{fname} differs from the golden copy")


def test_golden_headers():
    assert tuple(_csv(GOLDEN / "annulus_c1" / "profile.csv")[0]) == PROFILE_COLUMNS
    assert tuple(_csv(GOLDEN / "portrait_c1_p5" / "stationary.csv")[0]) == STATIONARY_COLUMNS


def _run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def test_annulus_example(tmp_path):
    assert _run(tmp_path, "solve-annulus", "--inner", "1", "--outer", "2") == EXIT_OK
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["boundary_residual"] < 1e-8 and s["found_delta"] > 0
    assert s["integrator"]["rel_tol"] == 1e-10 and s["seed"] == 0
    for f in ("profile.csv", "audit.json", "bracket.csv"):
        assert (tmp_path / f).exists()


def test_annulus_bad_geometry(tmp_path, capsys):
    assert _run(tmp_path, "solve-annulus", "--inner", "2", "--outer", "1") == EXIT_INPUT
    assert "inner < outer" in capsys.readouterr().err


def test_annulus_bracket_failure(tmp_path, capsys):
    assert _run(tmp_path, "solve-annulus", "--inner", "1", "--outer", "1.000000000001") == EXIT_SOLVER
    assert (tmp_path / "bracket.csv").exists()
    assert capsys.readouterr().err.startswith("error:")


def test_negative_flag(tmp_path):
    assert _run(tmp_path, "solve-annulus", "--inner", "1", "--outer", "2", "--negative") == EXIT_OK
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["negative"] is True and s["found_delta"] < 0
    rows = _csv(tmp_path / "profile.csv")[1:]
    assert all(float(r[1]) <= 0 for r in rows)


def test_config_error_line(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[problem]\np = 4\nlambdaa = 1\n")
    assert main(["solve-annulus", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_INPUT
    assert f"{cfg}:3: [problem] lambdaa" in capsys.readouterr().err


def test_invalid_params(tmp_path, capsys):
    assert _run(tmp_path, "phase-portrait", "--lambda", "2", "--Lambda", "1") == EXIT_INPUT


def test_cli_overrides_config(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[problem]\np = 5\n")
    assert main(["phase-portrait", "--config", str(cfg), "--p", "6", "--fan", "0",
                 "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "summary.json").read_text())["params"]["p"] == 6.0


def test_exterior_fast(tmp_path):
    assert _run(tmp_path, "solve-exterior", "--mode", "fast", "--lambda", "1", "--Lambda", "1",
                "--N", "3", "--p", "6") == EXIT_OK
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["diagnostics"]["decay_exponent"] == pytest.approx(-1.0, abs=1e-2)
    assert (tmp_path / "upsilon.csv").exists()


def test_exterior_tiny_delta(tmp_path, capsys):
    assert _run(tmp_path, "solve-exterior", "--mode", "delta=1e-4", "--p", "6") == EXIT_OK
    cls = json.loads((tmp_path / "summary.json").read_text())["decay"]
    assert cls in ("Slow", "PseudoSlow")


def test_exterior_sweep(tmp_path):
    assert _run(tmp_path, "solve-exterior", "--mode", "sweep", "--p", "6", "--sweep-n", "200",
                "--workers", "2") == EXIT_OK
    rows = _csv(tmp_path / "sweep.csv")
    assert rows[0] == ["delta", "rho", "class", "error"] and len(rows) == 201
    s = json.loads((tmp_path / "summary.json").read_text())
    assert len(s["D"]["components"]) == 1 and s["D"]["failures"] == []


def test_exterior_no_transition(tmp_path):
    assert _run(tmp_path, "solve-exterior", "--mode", "fast", "--lambda", "1", "--Lambda", "1",
                "--N", "3", "--p", "5") == EXIT_SOLVER
    rows = _csv(tmp_path / "sweep.csv")
    assert rows[0] == ["delta", "side"] and all(r[1] == "Annular" for r in rows[1:])


def test_exterior_rejects_outer(tmp_path):
    assert _run(tmp_path, "solve-exterior", "--outer", "2") == EXIT_INPUT


@pytest.mark.parametrize("p,labels", [("4", ["Saddle", "Saddle", "Source"]),
                                      ("5", ["Saddle", "Saddle", "Center"]),
                                      ("6", ["Saddle", "Saddle", "Sink"])])
def test_portrait(tmp_path, p, labels):
    assert _run(tmp_path, "phase-portrait", "--p", p, "--fan", "2") == EXIT_OK
    st = _csv(tmp_path / "stationary.csv")[1:]
    assert [r[3] for r in st] == labels
    svg = (tmp_path / "portrait.svg").read_text()
    for r, lab in zip(st, labels):
        assert f"{r[0]} {lab}" in svg
    curves = {}
    for row in _csv(tmp_path / "trajectories.csv")[1:]:
        curves.setdefault(row[0], []).append(float(row[2]))
    assert "Gamma" in curves and "Upsilon" in curves
    if p == "5":
        assert "closed-orbit" in curves and "<title>closed-orbit</title>" in svg
    if p == "4":
        # below p*, Upsilon winds back into the source M0
        ups = json.loads((tmp_path / "summary.json").read_text())["upsilon"]
        assert ups["crossing_t"] is None and min(curves["Upsilon"]) > 0
    if p == "6":
        assert min(curves["Upsilon"]) < 0 < max(curves["Upsilon"])


def test_check_invariants_default(tmp_path, capsys):
    assert _run(tmp_path, "check-invariants", "--flow-samples", "2000") == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out and all(line.startswith("PASS") for line in out)
    assert json.loads((tmp_path / "invariants.json").read_text())["ok"] is True


def test_check_invariants_bad_tolerance(tmp_path, capsys):
    assert _run(tmp_path, "check-invariants", "--flow-samples", "2000", "--rel-tol", "1e-2") \
        == EXIT_CHECK_FAILED
    rep = json.loads((tmp_path / "invariants.json").read_text())
    assert rep["checks"]["equation_residual"]["ok"] is False
    assert "FAIL  equation_residual" in capsys.readouterr().out


def test_seed_reproducible(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    main(["check-invariants", "--flow-samples", "500", "--seed", "7", "--out", str(a)])
    main(["check-invariants", "--flow-samples", "500", "--seed", "7", "--out", str(b)])
    main(["check-invariants", "--flow-samples", "500", "--seed", "8", "--out", str(c)])
    ja, jb, jc = (json.loads((d / "invariants.json").read_text()) for d in (a, b, c))
    for j in (ja, jb, jc):
        j["run_config"].pop("out")
    assert ja == jb and ja != jc


def test_byte_identical_rerun(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for _ in range(2):
        assert main(["phase-portrait", "--p", "6", "--fan", "3", "--out", "run"]) == EXIT_OK
        Path("run").rename(f"run{_}")
    for f in Path("run0").iterdir():
        assert f.read_bytes() == (Path("run1") / f.name).read_bytes()


def test_env_output_dir(tmp_path):
    env_dir = tmp_path / "from_env"
    res = subprocess.run([sys.executable, "-m", "henonpucci", "phase-portrait", "--fan", "0"],
                         cwd=tmp_path, env={**__import__("os").environ, OUT_ENV: str(env_dir)},
                         capture_output=True, text=True)
    assert res.returncode == EXIT_OK
    assert (env_dir / "portrait.svg").exists()


def test_version(capsys):
    with pytest.raises(SystemExit) as ei:
        main(["--version"])
    assert ei.value.code == 0 and capsys.readouterr().out.strip()
