"""Check the command line runs every command and reports through its exit code."""

import csv
import io
import json
import math
from pathlib import Path
from typing import TYPE_CHECKING, Any, Dict, List

import pytest

from pmonotone.__main__ import main

if TYPE_CHECKING:
    from _pytest.capture import CaptureFixture
    from _pytest.monkeypatch import MonkeyPatch

SCHWARZSCHILD = ["--model", "schwarzschild", "--mass", "1", "--r0", "2"]


def _rows(text: str) -> List[Dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


def _document(text: str) -> Dict[str, Any]:
    document: Dict[str, Any] = json.loads(text)
    return document


def test_scan(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the scan table of the mass-1 horizon has B = 4 pi - pi/t.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    assert main(["scan", *SCHWARZSCHILD, "--p", "2", "--t", "1:100:20"]) == 0
    out, err = capsys.readouterr()
    rows = _rows(out)
    assert len(rows) == 20
    for row in rows:
        t = float(row["t"])
        assert float(row["B"]) == pytest.approx(4.0 * math.pi - math.pi / t, rel=1e-7)
    assert "pmonotone scan" in err


def test_scan_threads(tmp_project: Path, capsys: "CaptureFixture", monkeypatch: "MonkeyPatch") -> None:
    """
    Check a threaded scan writes the same table.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    monkeypatch
        Pytest fixture to set environment variables.
    """
    args = ["scan", *SCHWARZSCHILD, "--p", "1.5", "--t", ":50:9"]
    assert main(args) == 0
    serial, _ = capsys.readouterr()
    monkeypatch.setenv("PMONOTONE_THREADS", "3")
    assert main(args) == 0
    threaded, _ = capsys.readouterr()
    assert len(_rows(serial)) == len(_rows(threaded)) == 9
    for first, second in zip(_rows(serial), _rows(threaded)):
        assert first.keys() == second.keys()
        for key in ("t", "A", "B", "m_H"):
            assert float(second[key]) == pytest.approx(float(first[key]), rel=1e-12)


def test_bad_thread_count(
    tmp_project: Path, capsys: "CaptureFixture", monkeypatch: "MonkeyPatch"
) -> None:
    """
    Check a malformed thread count is a configuration error.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    monkeypatch
        Pytest fixture to set environment variables.
    """
    monkeypatch.setenv("PMONOTONE_THREADS", "many")
    assert main(["solve-radial"]) == 1
    _, err = capsys.readouterr()
    assert "PMONOTONE_THREADS" in err


def test_check_mass(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the mass inequalities hold on the horizon.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    assert main(["check-mass", *SCHWARZSCHILD, "--region", "3:6"]) == 0
    out, _ = capsys.readouterr()
    document = _document(out)
    assert document["command"] == "check-mass"
    assert document["violations"] == []
    assert all(document["hypotheses"].values())
    assert document["results"]["horizon_mass_bound"] == pytest.approx(2.0 / 3.0, rel=1e-8)
    assert document["results"]["hmax"]["localized_holds"] is not None
    assert "timings" not in document


def test_check_monotone(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the monotonicity checks pass on Schwarzschild and timings are optional.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    args = ["check-monotone", *SCHWARZSCHILD, "--p", "1.5", "--t", ":100:30", "--timings"]
    assert main(args) == 0
    out, _ = capsys.readouterr()
    document = _document(out)
    assert document["violations"] == []
    assert document["results"]["hawking_form_residual"] < 1e-8
    assert "levels" in document["timings"]


def test_hypothesis_failure(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check p > 2 is reported as a failed hypothesis with exit code 2.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    assert main(["check-monotone", *SCHWARZSCHILD, "--p", "2.5", "--t", ":100:10"]) == 2
    out, _ = capsys.readouterr()
    assert _document(out)["hypotheses"]["p_at_most_2"] is False


def test_inside_horizon(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check a model cut inside its horizon is an error.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    assert main(["solve-radial", "--model", "schwarzschild", "--mass", "1", "--r0", "1"]) == 1
    out, err = capsys.readouterr()
    assert out == ""
    assert "Invalid config field 'r0'" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["integrate"],
        ["scan", "--p", "two"],
        ["scan", "--dims", "4"],
    ],
)
def test_usage_errors(tmp_project: Path, capsys: "CaptureFixture", argv: List[str]) -> None:
    """
    Check argument errors exit with code 1.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    argv
        Command-line arguments.
    """
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    assert excinfo.value.code == 1
    _, err = capsys.readouterr()
    assert "error" in err


@pytest.mark.parametrize("flag, value", [("--t", "1:100"), ("--p-list", "1.5,x"), ("--region", "2")])
def test_malformed_ranges(
    tmp_project: Path, capsys: "CaptureFixture", flag: str, value: str
) -> None:
    """
    Check malformed ranges and lists are reported with their flag.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    flag
        Option under test.
    value
        Malformed value.
    """
    assert main(["scan", flag, value]) == 1
    _, err = capsys.readouterr()
    assert flag in err


def test_config_layers(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check pyproject.toml, then the JSON file, then flags take precedence.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    (tmp_project / "pyproject.toml").write_text(
        '[tool.pmonotone]\nmodel = "schwarzschild"\nr0 = 3.0\np = 1.5\n', encoding="utf-8"
    )
    (tmp_project / "run.json").write_text('{"p": 1.75, "t_count": 5}\n', encoding="utf-8")
    assert main(["solve-radial", "--config", "run.json", "--r0", "4"]) == 0
    out, _ = capsys.readouterr()
    echo = _document(out)["config_echo"]
    assert (echo["model"], echo["r0"], echo["p"], echo["t_count"]) == ("schwarzschild", 4.0, 1.75, 5)


def test_config_unknown_key(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check an unknown key in the JSON file exits with code 1 and names its line.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    (tmp_project / "run.json").write_text('{\n  "p": 1.5,\n  "massive": 1\n}\n', encoding="utf-8")
    assert main(["solve-radial", "--config", "run.json"]) == 1
    _, err = capsys.readouterr()
    assert "'massive' (line 3)" in err


def test_capacity_sweep(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the p -> 1 limit of the unit ball is its area.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    assert main(["capacity-sweep", "--p-list", "1.2,1.1,1.05,1.025"]) == 0
    out, _ = capsys.readouterr()
    results = _document(out)["results"]
    assert results["limit"] == pytest.approx(4.0 * math.pi, rel=1e-3)
    assert results["boundary_area"] == pytest.approx(4.0 * math.pi)


def test_identity(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the divergence identity holds for the p-harmonic transform.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    assert main(["identity", *SCHWARZSCHILD, "--p", "1.5", "--t", ":50:6"]) == 0
    out, _ = capsys.readouterr()
    results = _document(out)["results"]
    assert results["field"] == "p-harmonic"
    assert len(results["pointwise"]) == 6
    assert len(results["integrated"]) == 3


def test_rigidity_gen(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the rigidity profile is written to the requested file.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    output = tmp_project / "phi.csv"
    args = ["rigidity-gen", "--hawking-mass", "2", "--rho", "3:30:10", "--output", str(output)]
    assert main(args) == 0
    out, _ = capsys.readouterr()
    assert out == ""
    rows = _rows(output.read_text(encoding="utf-8"))
    assert len(rows) == 10
    assert float(rows[0]["phi"]) == pytest.approx(math.sqrt(3.0), rel=1e-12)


def test_profile_round_trip(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check a generated profile feeds back in as model `profile`.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    output = tmp_project / "phi.csv"
    args = ["rigidity-gen", "--hawking-mass", "2", "--rho", "3:3000:2000", "--output", str(output)]
    assert main(args) == 0
    args = ["solve-radial", "--model", "profile", "--profile", str(output), "--r0", "3", "--p", "2"]
    assert main(args) == 0
    out, _ = capsys.readouterr()
    # harmonic capacity of the r = 3 sphere in mass-1 Schwarzschild
    expected = 4.0 * math.pi / (1.0 - 1.0 / math.sqrt(3.0))
    assert _document(out)["results"]["C_p"] == pytest.approx(expected, rel=1e-4)


@pytest.mark.slow
def test_solve_grid(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the grid sweep approaches the annulus capacity.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    args = ["solve-grid", "--p", "2", "--eps-list", "0", "--resolution", "32", "--r-out", "8"]
    assert main(args) == 0
    out, _ = capsys.readouterr()
    results = _document(out)["results"]
    exact = results["annulus_capacity"]
    assert exact == pytest.approx(4.0 * math.pi / (1.0 - 1.0 / 8.0), rel=1e-10)
    assert results["sweep"][0]["capacity_reaction"] == pytest.approx(exact, rel=2e-2)


def test_scan_below_boundary(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check a t-grid starting below the boundary level names the violated bound.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    assert main(["scan", *SCHWARZSCHILD, "--p", "2", "--t", "0.5:100:10"]) == 1
    out, err = capsys.readouterr()
    assert out == ""
    assert "t = 0.5 violates t >= c^(1/a)" in err


def test_check_mass_rigidity(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the boundary inequalities are equalities outside the flat unit ball.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    assert main(["check-mass", "--model", "euclidean", "--r0", "1", "--p", "2"]) == 0
    out, _ = capsys.readouterr()
    inequalities = _document(out)["results"]["inequalities"]["inequalities"]
    assert len(inequalities) == 3
    for inequality in inequalities:
        scale = abs(inequality["lhs"]) + abs(inequality["rhs"]) + 1.0
        assert abs(inequality["slack"]) < 1e-8 * scale


def test_check_mass_capacity_limit(tmp_project: Path, capsys: "CaptureFixture") -> None:
    """
    Check the Hawking-type Willmore bound uses the p -> 1 capacity of the sweep.

    Parameters
    ----------
    tmp_project
        Empty project directory used as working directory.
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    model = ["--model", "schwarzschild", "--mass", "1", "--r0", "3", "--p-list", "1.2,1.1,1.05,1.025"]
    assert main(["capacity-sweep", *model]) == 0
    out, _ = capsys.readouterr()
    limit = _document(out)["results"]["limit"]

    assert main(["check-mass", *model, "--p", "1.5"]) == 0
    out, _ = capsys.readouterr()
    results = _document(out)["results"]
    assert results["capacity_limit"] == pytest.approx(limit, rel=1e-12)
    willmore = results["boundary"]["willmore"]
    expected = math.sqrt(limit / (16.0 * math.pi)) * (1.0 - willmore)
    assert results["willmore"]["hawking_lower_bound"] == pytest.approx(expected, rel=1e-12)
