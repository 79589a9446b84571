"""Check result files are read and written as expected."""

import json
from pathlib import Path
from typing import TYPE_CHECKING

import pytest

from pmonotone.exceptions import ProfileTableError
from pmonotone.path_utils import dump_json, read_json, read_profile_csv, write_csv, write_json

if TYPE_CHECKING:
    from _pytest.capture import CaptureFixture


def test_read_profile_csv(tmp_path: Path) -> None:
    """
    Check headers and comment lines are skipped.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.
    """
    path = tmp_path / "phi.csv"
    path.write_text("r,phi\n# tail starts at 8\n1,1.3\n\n2.5,1.1\n", encoding="utf-8")
    assert read_profile_csv(str(path)) == [(1.0, 1.3), (2.5, 1.1)]


def test_read_profile_csv_bad_row(tmp_path: Path) -> None:
    """
    Check a malformed row is reported with its line number.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.
    """
    path = tmp_path / "phi.csv"
    path.write_text("r,phi\n1,1.3\n2,oops\n", encoding="utf-8")
    with pytest.raises(ProfileTableError, match=":3:"):
        read_profile_csv(str(path))


def test_write_csv_stdout(capsys: "CaptureFixture") -> None:
    """
    Check CSV goes to standard output without a path.

    Parameters
    ----------
    capsys
        Pytest fixture to capture stdout and stderr.
    """
    write_csv(None, ("r", "phi"), [{"r": 1.0, "phi": 2.0, "extra": 3}])
    out, _ = capsys.readouterr()
    assert out == "r,phi\n1.0,2.0\n"


def test_json_files(tmp_path: Path) -> None:
    """
    Check JSON documents are sorted and parse back.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.
    """
    document = {"b": [0.1, 2], "a": {"y": True, "x": None}}
    text = dump_json(document)
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")
    path = tmp_path / "out.json"
    write_json(str(path), document)
    assert read_json(str(path)) == document
    assert json.loads(path.read_text(encoding="utf-8")) == document
